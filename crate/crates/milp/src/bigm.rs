//! Big-M constants from interval arithmetic, and the post-solve audit that
//! catches constants that were too tight to be trusted.

use crate::error::MilpError;
use crate::model::Row;

/// Inflation applied to the interval bound.
pub const BIG_M_INFLATION: f64 = 1.1;
/// Smallest constant ever returned.
pub const BIG_M_FLOOR: f64 = 1.0;
/// Fraction of M at which a slack is flagged by the audit.
pub const BIG_M_AUDIT_FRACTION: f64 = 0.9;

/// Interval `[lo, hi]` of `activity − rhs` over the variable box.
pub fn row_interval(lower: &[f64], upper: &[f64], row: &Row) -> Result<(f64, f64), MilpError> {
    let (mut lo, mut hi) = (-row.rhs, -row.rhs);
    for &(j, a) in &row.coeffs {
        let (l, u) = (lower[j], upper[j]);
        let (p, q) = if a >= 0.0 { (a * l, a * u) } else { (a * u, a * l) };
        if !p.is_finite() || !q.is_finite() {
            return Err(MilpError::UnboundedBigM {
                row: row.name.clone(),
                var: j,
            });
        }
        lo += p;
        hi += q;
    }
    Ok((lo, hi))
}

/// Upper bound on `|activity − rhs|` over the variable box, inflated by
/// [`BIG_M_INFLATION`] and floored at [`BIG_M_FLOOR`].
pub fn big_m_for_row(lower: &[f64], upper: &[f64], row: &Row) -> Result<f64, MilpError> {
    let (lo, hi) = row_interval(lower, upper, row)?;
    Ok((BIG_M_INFLATION * lo.abs().max(hi.abs())).max(BIG_M_FLOOR))
}

/// An expression bounded by a big-M constant in some model.
#[derive(Debug, Clone)]
pub struct BigMRecord {
    /// `activity − rhs` of this row is the bounded quantity.
    pub expr: Row,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BigMFlag {
    pub name: String,
    pub value: f64,
    pub m: f64,
}

/// Flags every recorded expression whose magnitude at `x` exceeds
/// [`BIG_M_AUDIT_FRACTION`]·M.
pub fn audit_big_m(records: &[BigMRecord], x: &[f64]) -> Vec<BigMFlag> {
    records
        .iter()
        .filter_map(|r| {
            let value = r.expr.activity(x) - r.expr.rhs;
            (value.abs() > BIG_M_AUDIT_FRACTION * r.m).then(|| BigMFlag {
                name: r.expr.name.clone(),
                value,
                m: r.m,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RowSense;

    #[test]
    fn relu_preactivation_interval() {
        let row = Row::new("s", vec![(0, 1.0)], RowSense::Le, 0.0);
        let m = big_m_for_row(&[-10.0], &[10.0], &row).unwrap();
        assert!((m - 11.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_interval_hits_floor() {
        let row = Row::new("s", vec![(0, 2.0)], RowSense::Le, 0.0);
        assert_eq!(big_m_for_row(&[0.0], &[0.0], &row).unwrap(), 1.0);
        let shifted = Row::new("t", vec![(0, 1.0)], RowSense::Le, 0.0);
        assert!((big_m_for_row(&[3.0], &[3.0], &shifted).unwrap() - 3.3).abs() < 1e-12);
    }

    #[test]
    fn unbounded_variable_is_rejected() {
        let row = Row::new("r", vec![(0, 1.0), (1, -1.0)], RowSense::Ge, 0.0);
        let err = big_m_for_row(&[0.0, 0.0], &[1.0, f64::INFINITY], &row).unwrap_err();
        assert!(matches!(err, MilpError::UnboundedBigM { var: 1, .. }));
    }

    #[test]
    fn audit_flags_large_slack() {
        let rec = BigMRecord {
            expr: Row::new("slack", vec![(0, 1.0)], RowSense::Le, 0.0),
            m: 10.0,
        };
        assert!(audit_big_m(std::slice::from_ref(&rec), &[8.9]).is_empty());
        let flags = audit_big_m(&[rec], &[9.5]);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].name, "slack");
    }
}
