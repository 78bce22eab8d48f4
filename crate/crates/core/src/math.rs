//! Small numeric helpers: error functions, constants, deterministic reductions.

/// √(2/π), the ubiquitous half-normal mean.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Error function, accurate to ~1 ulp.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function, accurate to ~1 ulp.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Positive part.
#[inline]
pub fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Deterministic pairwise (tree) sum. Order-independent of thread scheduling
/// because the caller supplies a fixed slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Mean via pairwise summation.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance via pairwise summation.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Euclidean norm of a slice.
pub fn norm2(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Squared Euclidean distance between two equal-length slices.
pub fn dist2_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
