use serde::{Deserialize, Serialize};

use super::special::t_two_tailed;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairedDegeneracy {
    /// Every difference is the same nonzero value: `t` is infinite, `p = 0`.
    ZeroVariance,
    /// Every difference is zero: `t = 0`, `p = 1`.
    AllZeroDifferences,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub t: f64,
    pub df: usize,
    pub p_raw: f64,
    pub degenerate: Option<PairedDegeneracy>,
}

/// Paired t-test on `d = a - b`: `t = mean(d) / (sd(d) / sqrt(n))` with the
/// `n - 1` sample standard deviation, two-tailed p on `n - 1` df.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedT, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::InsufficientData(format!(
            "paired t-test needs at least 2 pairs, got {n}"
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::Domain("non-finite paired difference".into()));
    }
    let df = n - 1;
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / df as f64;

    let spread = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if var <= (1e-15 * spread).powi(2) || var == 0.0 {
        return Ok(if mean == 0.0 || spread == 0.0 {
            PairedT {
                t: 0.0,
                df,
                p_raw: 1.0,
                degenerate: Some(PairedDegeneracy::AllZeroDifferences),
            }
        } else {
            PairedT {
                t: f64::INFINITY.copysign(mean),
                df,
                p_raw: 0.0,
                degenerate: Some(PairedDegeneracy::ZeroVariance),
            }
        });
    }

    let t = mean / (var.sqrt() / (n as f64).sqrt());
    Ok(PairedT {
        t,
        df,
        p_raw: t_two_tailed(t, df as f64)?,
        degenerate: None,
    })
}

/// Bonferroni-corrected p-value, `min(1, m * p)`.
pub fn bonferroni(p_raw: f64, m: usize) -> Result<f64, StatsError> {
    if m == 0 {
        return Err(StatsError::Domain("Bonferroni family size must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p_raw) {
        return Err(StatsError::Domain(format!("p-value {p_raw} outside [0, 1]")));
    }
    Ok((p_raw * m as f64).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [0.3, 1.0, 7.0, 2.0];
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!((r.t, r.p_raw), (0.0, 1.0));
        assert_eq!(r.degenerate, Some(PairedDegeneracy::AllZeroDifferences));
    }

    #[test]
    fn constant_nonzero_difference() {
        let r = paired_t_test(&[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.degenerate, Some(PairedDegeneracy::ZeroVariance));
        assert_eq!(r.p_raw, 0.0);
        assert!(r.t.is_infinite() && r.t > 0.0);
    }

    #[test]
    fn hand_computed_statistic() {
        // d = [1, 1, 0, 1, 0, 0, 1, 1]: mean 0.625, sd = sqrt(15/56).
        let high = [1.0; 8];
        let low = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let r = paired_t_test(&high, &low).unwrap();
        let want = 0.625 / ((15.0f64 / 56.0).sqrt() / 8f64.sqrt());
        assert!((r.t - want).abs() < 1e-12);
        assert!((r.t - 3.4157).abs() < 1e-4);
        assert_eq!(r.df, 7);
    }

    #[test]
    fn input_checks() {
        assert!(matches!(paired_t_test(&[1.0], &[2.0]), Err(StatsError::InsufficientData(_))));
        assert!(matches!(paired_t_test(&[1.0, 2.0], &[2.0]), Err(StatsError::LengthMismatch(2, 1))));
    }

    #[test]
    fn bonferroni_values() {
        assert!((bonferroni(0.004, 10).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(bonferroni(0.5, 10).unwrap(), 1.0);
        assert_eq!(bonferroni(0.0123, 1).unwrap(), 0.0123);
        assert!(bonferroni(0.1, 0).is_err());
        assert!(bonferroni(1.2, 3).is_err());
    }
}
