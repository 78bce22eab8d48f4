//! Sweep tables: the on-disk format of every experiment.
//!
//! A table is CSV with a single `#`-prefixed JSON header line carrying the
//! configuration and provenance, followed by a column header and rows. Floats
//! are printed with 17 significant digits so that serialize → parse →
//! serialize is byte-identical. The same table can be emitted as one JSON
//! document instead.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::AsymptoticConfig;
use crate::Result;

/// Format version of the table layout.
pub const SCHEMA_VERSION: &str = "1";

/// Reproducibility metadata. `timestamp` honors `SOURCE_DATE_EPOCH` so that
/// identical invocations produce identical bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub timestamp: String,
    pub tool_version: String,
}

/// Header of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub schema_version: String,
    pub config: AsymptoticConfig,
    pub axis_name: String,
    pub provenance: Provenance,
    /// Free-form flags, e.g. axis values skipped near a pole.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Monte Carlo columns, present only for sweeps run with empirical replicas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCols {
    pub sr_empirical: f64,
    pub ar_empirical: f64,
    pub n_seeds: usize,
    pub stderr_sr: f64,
    pub stderr_ar: f64,
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub sr_theory: f64,
    pub ar_theory: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", flatten)]
    pub empirical: Option<EmpiricalCols>,
}

/// A full sweep: header plus rows sorted by axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub meta: TableMeta,
    pub rows: Vec<SweepRow>,
}

/// Canonical float format: 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepTable {
    /// Builds a table, sorting rows by axis value and rejecting duplicates
    /// and mixed empirical/theory-only rows.
    pub fn new(meta: TableMeta, mut rows: Vec<SweepRow>) -> Result<Self> {
        rows.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
        for w in rows.windows(2) {
            if w[0].axis_value == w[1].axis_value {
                return Err(Error::invalid(format!(
                    "duplicate axis value {}",
                    w[0].axis_value
                )));
            }
        }
        if rows.iter().any(|r| r.empirical.is_some()) && rows.iter().any(|r| r.empirical.is_none())
        {
            return Err(Error::invalid(
                "either every row or no row may carry empirical columns",
            ));
        }
        Ok(SweepTable { meta, rows })
    }

    pub fn has_empirical(&self) -> bool {
        self.rows.first().map_or(false, |r| r.empirical.is_some())
    }

    /// CSV with the `#`-prefixed JSON header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push('#');
        out.push_str(&serde_json::to_string(&self.meta).expect("meta serializes"));
        out.push('\n');
        if self.has_empirical() {
            out.push_str(
                "axis_value,sr_theory,ar_theory,sr_empirical,ar_empirical,n_seeds,stderr_sr,stderr_ar\n",
            );
        } else {
            out.push_str("axis_value,sr_theory,ar_theory\n");
        }
        for row in &self.rows {
            out.push_str(&fmt_f64(row.axis_value));
            out.push(',');
            out.push_str(&fmt_f64(row.sr_theory));
            out.push(',');
            out.push_str(&fmt_f64(row.ar_theory));
            if let Some(e) = &row.empirical {
                out.push(',');
                out.push_str(&fmt_f64(e.sr_empirical));
                out.push(',');
                out.push_str(&fmt_f64(e.ar_empirical));
                out.push(',');
                out.push_str(&e.n_seeds.to_string());
                out.push(',');
                out.push_str(&fmt_f64(e.stderr_sr));
                out.push(',');
                out.push_str(&fmt_f64(e.stderr_ar));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV emitted by [`SweepTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid("empty table"))?
            .strip_prefix('#')
            .ok_or_else(|| Error::invalid("missing '#' JSON header line"))?;
        let meta: TableMeta = serde_json::from_str(header)
            .map_err(|e| Error::invalid(format!("bad JSON header: {e}")))?;
        let columns = lines
            .next()
            .ok_or_else(|| Error::invalid("missing column header"))?;
        let empirical = match columns {
            "axis_value,sr_theory,ar_theory" => false,
            "axis_value,sr_theory,ar_theory,sr_empirical,ar_empirical,n_seeds,stderr_sr,stderr_ar" => true,
            other => return Err(Error::invalid(format!("unrecognized columns: {other}"))),
        };
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let expect = if empirical { 8 } else { 3 };
            if fields.len() != expect {
                return Err(Error::invalid(format!(
                    "row {}: expected {expect} fields, got {}",
                    lineno + 3,
                    fields.len()
                )));
            }
            let f = |i: usize| -> Result<f64> {
                fields[i]
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("row {}: {e}", lineno + 3)))
            };
            let empirical_cols = if empirical {
                Some(EmpiricalCols {
                    sr_empirical: f(3)?,
                    ar_empirical: f(4)?,
                    n_seeds: fields[5]
                        .parse::<usize>()
                        .map_err(|e| Error::invalid(format!("row {}: {e}", lineno + 3)))?,
                    stderr_sr: f(6)?,
                    stderr_ar: f(7)?,
                })
            } else {
                None
            };
            rows.push(SweepRow {
                axis_value: f(0)?,
                sr_theory: f(1)?,
                ar_theory: f(2)?,
                empirical: empirical_cols,
            });
        }
        SweepTable::new(meta, rows)
    }

    /// The whole table as a single JSON document.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta() -> TableMeta {
        TableMeta {
            schema_version: SCHEMA_VERSION.to_string(),
            config: AsymptoticConfig::new(2.0, 1.0, 1.0, 0.5, 0.5).unwrap(),
            axis_name: "eps".to_string(),
            provenance: Provenance {
                master_seed: 42,
                timestamp: String::new(),
                tool_version: "0.1.0".to_string(),
            },
            notes: vec![],
        }
    }

    #[test]
    fn duplicate_axis_values_rejected() {
        let rows = vec![
            SweepRow { axis_value: 1.0, sr_theory: 2.0, ar_theory: 3.0, empirical: None },
            SweepRow { axis_value: 1.0, sr_theory: 2.0, ar_theory: 3.0, empirical: None },
        ];
        assert!(SweepTable::new(meta(), rows).is_err());
    }

    #[test]
    fn rows_come_out_sorted() {
        let rows = vec![
            SweepRow { axis_value: 2.0, sr_theory: 0.0, ar_theory: 0.0, empirical: None },
            SweepRow { axis_value: 1.0, sr_theory: 0.0, ar_theory: 0.0, empirical: None },
        ];
        let t = SweepTable::new(meta(), rows).unwrap();
        assert!(t.rows[0].axis_value < t.rows[1].axis_value);
    }

    proptest! {
        /// serialize → parse → serialize is byte-identical.
        #[test]
        fn csv_round_trips(values in proptest::collection::vec(-1e6f64..1e6, 1..20)) {
            let mut axis: Vec<f64> = values.clone();
            axis.sort_by(|a, b| a.total_cmp(b));
            axis.dedup();
            let rows: Vec<SweepRow> = axis
                .iter()
                .enumerate()
                .map(|(i, &v)| SweepRow {
                    axis_value: v,
                    sr_theory: (i as f64 + 0.1) / 3.0,
                    ar_theory: (i as f64 + 0.7) / 7.0,
                    empirical: Some(EmpiricalCols {
                        sr_empirical: v.abs().sqrt(),
                        ar_empirical: v.abs().sqrt() + 1.0,
                        n_seeds: i + 1,
                        stderr_sr: 0.01,
                        stderr_ar: 0.02,
                    }),
                })
                .collect();
            let table = SweepTable::new(meta(), rows).unwrap();
            let csv = table.to_csv();
            let parsed = SweepTable::from_csv(&csv).unwrap();
            prop_assert_eq!(parsed.to_csv(), csv);
        }
    }

    #[test]
    fn json_and_csv_agree() {
        let rows = vec![SweepRow {
            axis_value: 0.5,
            sr_theory: 1.25,
            ar_theory: 2.5,
            empirical: None,
        }];
        let t = SweepTable::new(meta(), rows).unwrap();
        let j = t.to_json();
        let back: SweepTable = serde_json::from_str(&j).unwrap();
        assert_eq!(back, t);
    }
}
