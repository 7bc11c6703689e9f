use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Train / test / validation shares.
pub const PAPER_RATIOS: [f64; 3] = [0.50, 0.25, 0.25];

/// Index partition of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Part sizes by largest-remainder rounding. Equal remainders favour the
/// earlier part.
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::BadRatios(ratios.to_vec()));
    }
    let exact = ratios.map(|r| r * n as f64);
    let mut sizes = exact.map(|e| e.floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    Ok(sizes)
}

/// Seeded uniform partition of `0..n`.
pub fn split(n: usize, ratios: [f64; 3], seed: u64) -> Result<Split> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let [a, b, _] = split_sizes(n, ratios)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let validation = idx.split_off(a + b);
    let test = idx.split_off(a);
    Ok(Split {
        train: idx,
        test,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hundred_records() {
        let s = split(100, PAPER_RATIOS, 3).unwrap();
        assert_eq!(
            (s.train.len(), s.test.len(), s.validation.len()),
            (50, 25, 25)
        );
        assert_eq!(s, split(100, PAPER_RATIOS, 3).unwrap());
        assert_ne!(s, split(100, PAPER_RATIOS, 4).unwrap());
    }

    #[test]
    fn customer_service_sizes() {
        // 7335.5 / 3667.75 / 3667.75: both quarter shares carry the larger remainder.
        assert_eq!(
            split_sizes(14671, PAPER_RATIOS).unwrap(),
            [7335, 3668, 3668]
        );
        assert_eq!(
            split_sizes(14690, PAPER_RATIOS).unwrap(),
            [7345, 3673, 3672]
        );
    }

    #[test]
    fn degenerate_ratios() {
        let s = split(10, [1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(s.train.len(), 10);
        assert!(matches!(
            split(10, [0.5, 0.5, 0.5], 1),
            Err(Error::BadRatios(_))
        ));
        assert!(matches!(
            split(10, [1.5, -0.5, 0.0], 1),
            Err(Error::BadRatios(_))
        ));
        assert!(matches!(
            split(0, PAPER_RATIOS, 1),
            Err(Error::EmptyDataset)
        ));
    }

    proptest! {
        #[test]
        fn is_a_partition(n in 1usize..500, seed in any::<u64>(), other in any::<u64>()) {
            let s = split(n, PAPER_RATIOS, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).chain(&s.validation).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let t = split(n, PAPER_RATIOS, other).unwrap();
            prop_assert_eq!(
                (s.train.len(), s.test.len(), s.validation.len()),
                (t.train.len(), t.test.len(), t.validation.len())
            );
        }
    }
}
