//! Grid argument parsing: `start:stop:count:lin|log`, a comma-separated list,
//! or a single value.

use anyhow::{bail, Context, Result};

pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 4 {
            bail!("grid spec must be start:stop:count:lin|log, got {spec:?}");
        }
        let start: f64 = parts[0].parse().context("bad grid start")?;
        let stop: f64 = parts[1].parse().context("bad grid stop")?;
        let count: usize = parts[2].parse().context("bad grid count")?;
        if count == 0 {
            bail!("grid count must be >= 1");
        }
        let values = match parts[3] {
            "lin" => linspace(start, stop, count),
            "log" => {
                if start <= 0.0 || stop <= 0.0 {
                    bail!("log grids need positive endpoints");
                }
                linspace(start.ln(), stop.ln(), count)
                    .into_iter()
                    .map(f64::exp)
                    .collect()
            }
            other => bail!("grid kind must be lin or log, got {other:?}"),
        };
        return Ok(values);
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad grid value {s:?}")))
        .collect()
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    (0..count)
        .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_linear_grid() {
        let g = parse_grid("0:1:5:lin").unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn parses_log_grid() {
        let g = parse_grid("0.01:100:5:log").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert!((g[4] - 100.0).abs() < 1e-10);
    }

    #[test]
    fn parses_comma_list_and_scalar() {
        assert_eq!(parse_grid("1,2,5").unwrap(), vec![1.0, 2.0, 5.0]);
        assert_eq!(parse_grid("2.5").unwrap(), vec![2.5]);
    }

    #[test]
    fn rejects_malformed_specs() {
        assert!(parse_grid("1:2:3").is_err());
        assert!(parse_grid("1:2:0:lin").is_err());
        assert!(parse_grid("-1:2:3:log").is_err());
        assert!(parse_grid("a,b").is_err());
    }
}
