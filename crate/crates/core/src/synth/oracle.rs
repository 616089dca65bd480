//! Integer reconstruction of published percentages and 2×2 tables.

use crate::stats::Share;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("share {0} outside [0, 100]")]
    ShareOutOfRange(f64),
    #[error("share {share} of {n} rounds to {count}, which recomputes to {recomputed}")]
    Inconsistent {
        share: f64,
        n: usize,
        count: usize,
        recomputed: f64,
    },
    #[error("cannot apportion {n} records over shares summing to zero")]
    NothingToApportion { n: usize },
    #[error("inconsistent margins: {0}")]
    Margins(String),
}

/// Count behind a one-decimal percentage of a column of size `column_n`.
pub fn reconstruct_counts(share_pct: f64, column_n: usize) -> Result<usize, OracleError> {
    if !(0.0..=100.0).contains(&share_pct) {
        return Err(OracleError::ShareOutOfRange(share_pct));
    }
    let count = (share_pct / 100.0 * column_n as f64).round() as usize;
    if let Some(recomputed) = Share::new(count, column_n).pct() {
        if (recomputed - share_pct).abs() > 0.1 + 1e-9 {
            return Err(OracleError::Inconsistent {
                share: share_pct,
                n: column_n,
                count,
                recomputed,
            });
        }
    }
    Ok(count)
}

/// Splits `n` into integer counts proportional to `shares`.
///
/// Plain rounding is used when it already sums to `n`; otherwise the
/// largest-remainder method over the normalised shares.
pub fn apportion(shares: &[f64], n: usize) -> Result<Vec<usize>, OracleError> {
    if let Some(bad) = shares.iter().find(|s| !(0.0..=100.0).contains(*s)) {
        return Err(OracleError::ShareOutOfRange(*bad));
    }
    let rounded: Vec<usize> = shares
        .iter()
        .map(|s| (s / 100.0 * n as f64).round() as usize)
        .collect();
    if rounded.iter().sum::<usize>() == n {
        return Ok(rounded);
    }
    let total: f64 = shares.iter().sum();
    if total <= 0.0 {
        return Err(OracleError::NothingToApportion { n });
    }
    let quotas: Vec<f64> = shares.iter().map(|s| s / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    // Largest fractional part first; earlier categories win ties.
    order.sort_by(|&i, &j| {
        let (fi, fj) = (quotas[i] - quotas[i].floor(), quotas[j] - quotas[j].floor());
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    Ok(counts)
}

/// `(a, b, c, d)` for an exposure-versus-pooled-rest table from its margins.
pub fn build_2x2(
    exposed_outcome: u64,
    exposed_total: u64,
    pooled_outcome_total: u64,
    pooled_grand_total: u64,
) -> Result<[u64; 4], OracleError> {
    if exposed_outcome > exposed_total || exposed_total > pooled_grand_total {
        return Err(OracleError::Margins(format!(
            "need {exposed_outcome} <= {exposed_total} <= {pooled_grand_total}"
        )));
    }
    let a = exposed_outcome;
    let b = exposed_total - a;
    let c = pooled_outcome_total
        .checked_sub(a)
        .ok_or_else(|| OracleError::Margins("outcome total smaller than exposed outcome".into()))?;
    let d = (pooled_grand_total - exposed_total)
        .checked_sub(c)
        .ok_or_else(|| OracleError::Margins("outcome total exceeds unexposed records".into()))?;
    Ok([a, b, c, d])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reconstruct_examples() {
        assert_eq!(reconstruct_counts(17.0, 182), Ok(31));
        assert_eq!(reconstruct_counts(16.1, 483), Ok(78));
        assert_eq!(reconstruct_counts(0.0, 57), Ok(0));
        assert_eq!(reconstruct_counts(0.0, 0), Ok(0));
        assert!(matches!(reconstruct_counts(101.0, 5), Err(OracleError::ShareOutOfRange(_))));
        // 50.0% of 3 rounds to 2 = 66.7%, far from the stated share.
        assert!(matches!(reconstruct_counts(50.0, 3), Err(OracleError::Inconsistent { .. })));
    }

    #[test]
    fn build_2x2_examples() {
        assert_eq!(build_2x2(31, 95, 182, 800), Ok([31, 64, 151, 554]));
        assert_eq!(build_2x2(78, 89, 483, 803), Ok([78, 11, 405, 309]));
        assert_eq!(build_2x2(0, 10, 0, 30), Ok([0, 10, 0, 20]));
        assert!(build_2x2(5, 4, 10, 20).is_err());
        assert!(build_2x2(5, 10, 3, 20).is_err());
    }

    #[test]
    fn apportion_uses_largest_remainder_when_rounding_drifts() {
        assert_eq!(apportion(&[33.3, 33.3, 33.4], 100).unwrap(), [33, 33, 34]);
        assert_eq!(apportion(&[50.0, 50.0], 3).unwrap(), [2, 1]);
        assert_eq!(apportion(&[0.0, 0.0], 0).unwrap(), [0, 0]);
        assert!(apportion(&[0.0, 0.0], 4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn apportion_sums_to_n(shares in proptest::collection::vec(0.0f64..100.0, 1..12), n in 0usize..5000) {
            prop_assume!(shares.iter().sum::<f64>() > 0.0);
            let counts = apportion(&shares, n).unwrap();
            prop_assert_eq!(counts.iter().sum::<usize>(), n);
        }

        #[test]
        fn reconstruct_inverts_rounded_share(n in 1usize..3000, frac in 0.0f64..=1.0) {
            let k = (frac * n as f64).floor() as usize;
            let share = Share::new(k, n).pct().unwrap();
            let back = reconstruct_counts(share, n).unwrap();
            prop_assert_eq!(Share::new(back, n).pct().unwrap(), share);
        }
    }
}
