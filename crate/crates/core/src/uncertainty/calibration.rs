use crate::error::{CoreError, Result};

fn check_prob(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CoreError::InvalidParameter(format!("{name} = {v} must lie in (0, 1)")))
    }
}

/// Smallest `N` with `(1 − ε)^N ≤ δ`: the fewest calibration points for
/// which the largest order statistic already carries the guarantee.
pub fn minimal_calibration_size(eps: f64, delta: f64) -> Result<usize> {
    check_prob("epsilon", eps)?;
    check_prob("delta", delta)?;
    let q = 1.0 - eps;
    let mut n = (delta.ln() / q.ln()).ceil().max(1.0) as usize;
    while n > 1 && q.powi(n as i32 - 1) <= delta {
        n -= 1;
    }
    while q.powi(n as i32) > delta {
        n += 1;
    }
    Ok(n)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Order index `n*`: the smallest `n` such that a Binomial(N, 1 − ε) count
/// is at most `n − 1` with probability at least `1 − δ`. The binomial terms
/// are accumulated in the log domain.
pub fn quantile_order_index(n: usize, eps: f64, delta: f64) -> Result<usize> {
    check_prob("epsilon", eps)?;
    check_prob("delta", delta)?;
    if n == 0 {
        return Err(CoreError::NotEnoughData("calibration set is empty".into()));
    }
    let target = (1.0 - delta).ln();
    let (lq, le) = ((1.0 - eps).ln(), eps.ln());
    let nf = n as f64;
    let mut log_binom = 0.0; // ln C(N, m)
    let mut cdf = f64::NEG_INFINITY;
    for m in 0..n {
        let term = log_binom + m as f64 * lq + (nf - m as f64) * le;
        cdf = log_add(cdf, term);
        if cdf >= target {
            return Ok(m + 1);
        }
        log_binom += ((nf - m as f64) / (m as f64 + 1.0)).ln();
    }
    Err(CoreError::NotEnoughData(format!(
        "{n} calibration points cannot certify epsilon = {eps}, delta = {delta}; need at least {}",
        minimal_calibration_size(eps, delta)?
    )))
}

/// The `k`-th smallest value (1-based) under a stable sort; `+∞` and NaN
/// sort last.
pub fn kth_smallest(values: &[f64], k: usize) -> f64 {
    assert!(k >= 1 && k <= values.len(), "order index {k} outside 1..={}", values.len());
    let mut v: Vec<f64> = values.iter().map(|&x| if x.is_nan() { f64::INFINITY } else { x }).collect();
    v.sort_by(f64::total_cmp);
    v[k - 1]
}

/// `⌈(1 − ε) N⌉`, at least 1, guarded against representation error in the
/// product.
pub fn ceil_fraction_index(n: usize, eps: f64) -> usize {
    (((1.0 - eps) * n as f64) - 1e-9).ceil().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_minimal_sizes() {
        assert_eq!(minimal_calibration_size(0.05, 0.05).unwrap(), 59);
        assert_eq!(minimal_calibration_size(0.5, 0.5).unwrap(), 1);
        assert_eq!(minimal_calibration_size(0.1, 0.05).unwrap(), 29);
        assert!(minimal_calibration_size(0.0, 0.5).is_err());
    }

    #[test]
    fn minimal_size_takes_the_maximum() {
        assert_eq!(quantile_order_index(59, 0.05, 0.05).unwrap(), 59);
        assert!(quantile_order_index(58, 0.05, 0.05).is_err());
        let n = quantile_order_index(124, 0.05, 0.05).unwrap();
        assert!((121..=123).contains(&n), "{n}");
    }

    #[test]
    fn order_statistics() {
        assert_eq!(kth_smallest(&[3.0, f64::INFINITY, 1.0, 2.0], 3), 3.0);
        assert_eq!(kth_smallest(&[3.0, f64::INFINITY, 1.0], 3), f64::INFINITY);
        assert_eq!(ceil_fraction_index(20, 0.05), 19);
        assert_eq!(ceil_fraction_index(100, 0.05), 95);
        assert_eq!(ceil_fraction_index(7, 0.0), 7);
    }
}
