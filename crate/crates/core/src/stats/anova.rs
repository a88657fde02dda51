use serde::{Deserialize, Serialize};

use super::special::f_sf;
use super::StatsError;

/// One-way between-groups ANOVA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub group_means: Vec<f64>,
}

/// Partitions the total sum of squares into between- and within-group parts:
/// `F = (SSB / (k - 1)) / (SSW / (N - k))`, `p = P(F_{k-1, N-k} > F)`.
///
/// Needs at least two groups of at least two observations each. Zero
/// within-group variance gives `F = inf, p = 0` unless the group means are
/// also equal, which is [`StatsError::DegenerateInput`].
pub fn one_way_anova<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "ANOVA needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    for (i, g) in groups.iter().enumerate() {
        let g = g.as_ref();
        if g.len() < 2 {
            return Err(StatsError::InsufficientData(format!(
                "group {i} has {} observations, need at least 2",
                g.len()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::Domain(format!("group {i} contains a non-finite value")));
        }
    }

    let n_total: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    let grand_mean = groups.iter().flat_map(|g| g.as_ref()).sum::<f64>() / n_total as f64;
    let group_means: Vec<f64> = groups
        .iter()
        .map(|g| {
            let g = g.as_ref();
            g.iter().sum::<f64>() / g.len() as f64
        })
        .collect();

    let ss_between: f64 = groups
        .iter()
        .zip(&group_means)
        .map(|(g, m)| g.as_ref().len() as f64 * (m - grand_mean).powi(2))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .zip(&group_means)
        .map(|(g, m)| g.as_ref().iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();

    let df_between = groups.len() - 1;
    let df_within = n_total - groups.len();

    let scale = groups
        .iter()
        .flat_map(|g| g.as_ref())
        .map(|x| (x - grand_mean).powi(2))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let negligible = |ss: f64| ss <= 1e-14 * scale || ss == 0.0;

    let (f, p) = if negligible(ss_within) {
        if negligible(ss_between) {
            return Err(StatsError::DegenerateInput(
                "all observations are identical; F is undefined".into(),
            ));
        }
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, f_sf(f, df_between as f64, df_within as f64)?)
    };

    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p,
        ss_between,
        ss_within,
        group_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups_give_zero_f() {
        let r = one_way_anova(&[vec![0.0, 1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]]).unwrap();
        assert_eq!(r.f, 0.0);
        assert!((r.p - 1.0).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (1, 6));
    }

    #[test]
    fn textbook_example() {
        // Hand computation: means 2, 5, 8; grand mean 5; SSB = 3*(9+0+9) = 54;
        // SSW = 3 * 2 = 6; F = (54/2)/(6/6) = 27.
        let r = one_way_anova(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]).unwrap();
        assert!((r.f - 27.0).abs() < 1e-12);
        assert!((r.ss_between - 54.0).abs() < 1e-12);
        assert!((r.ss_within - 6.0).abs() < 1e-12);
        assert_eq!(r.group_means, vec![2.0, 5.0, 8.0]);
    }

    #[test]
    fn degenerate_and_insufficient_inputs() {
        assert!(matches!(
            one_way_anova(&[[1.0, 1.0], [1.0, 1.0]]),
            Err(StatsError::DegenerateInput(_))
        ));
        let r = one_way_anova(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(r.f.is_infinite());
        assert_eq!(r.p, 0.0);
        assert!(matches!(one_way_anova(&[[1.0, 2.0]]), Err(StatsError::InsufficientData(_))));
        assert!(matches!(
            one_way_anova(&[vec![1.0, 2.0], vec![1.0]]),
            Err(StatsError::InsufficientData(_))
        ));
    }
}
