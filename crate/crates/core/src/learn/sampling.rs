//! Class balancing and data partitioning. All functions work on label
//! slices and return row indices.

use super::{rng_for, LearnError, Stream};
use rand::seq::SliceRandom;

fn by_class(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        out[usize::from(y != 0)].push(i);
    }
    out
}

/// Keeps every minority row and an equally sized uniform sample of the
/// majority class, returned in shuffled order.
pub fn undersample(labels: &[u8], seed: u64) -> Result<Vec<usize>, LearnError> {
    let [neg, pos] = by_class(labels);
    if neg.is_empty() || pos.is_empty() {
        return Err(LearnError::SingleClass);
    }
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = rng_for(seed, Stream::Undersample, 0);
    let mut kept: Vec<usize> = majority.choose_multiple(&mut rng, minority.len()).copied().collect();
    kept.extend(minority);
    kept.sort_unstable();
    kept.shuffle(&mut rng);
    Ok(kept)
}

/// Stratified split. The training side gets `floor(fraction * n)` rows,
/// apportioned to classes by largest remainder (ties to class 0), with at
/// least one row of each class left for testing.
pub fn split_train_test(labels: &[u8], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), LearnError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(LearnError::InvalidFraction(train_fraction));
    }
    let mut classes = by_class(labels);
    if classes.iter().any(|c| c.len() < 2) {
        return Err(LearnError::TooFewInstances);
    }
    let n = labels.len();
    let total = (train_fraction * n as f64 + 1e-9).floor() as usize;
    let exact: Vec<f64> = classes.iter().map(|c| train_fraction * c.len() as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - quota[a] as f64;
        let rb = exact[b] - quota[b] as f64;
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(quota.iter().sum());
    for &c in order.iter().cycle().take(4) {
        if left == 0 {
            break;
        }
        if quota[c] + 1 < classes[c].len() {
            quota[c] += 1;
            left -= 1;
        }
    }
    let mut rng = rng_for(seed, Stream::Holdout, 0);
    let mut train = Vec::with_capacity(total);
    let mut test = Vec::with_capacity(n - total);
    for (c, rows) in classes.iter_mut().enumerate() {
        rows.shuffle(&mut rng);
        let q = quota[c].clamp(1, rows.len() - 1);
        train.extend_from_slice(&rows[..q]);
        test.extend_from_slice(&rows[q..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold: each class is shuffled and dealt round robin, the deal
/// continuing from one class into the next so fold sizes differ by at most one.
pub fn kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Fold>, LearnError> {
    let classes = by_class(labels);
    let minority = classes.iter().map(Vec::len).min().unwrap_or(0);
    if k < 2 {
        return Err(LearnError::InvalidFolds(k));
    }
    if k > minority {
        return Err(LearnError::KTooLarge { k, minority });
    }
    let mut rng = rng_for(seed, Stream::Kfold, 0);
    let mut assignment = vec![0usize; labels.len()];
    let mut slot = 0;
    for mut rows in classes {
        rows.shuffle(&mut rng);
        for r in rows {
            assignment[r] = slot % k;
            slot += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(neg: usize, pos: usize) -> Vec<u8> {
        std::iter::repeat_n(0u8, neg).chain(std::iter::repeat_n(1u8, pos)).collect()
    }

    #[test]
    fn undersample_counts() {
        let y = layout(10, 3);
        let a = undersample(&y, 7).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a.iter().filter(|&&i| y[i] == 1).count(), 3);
        assert_eq!(a, undersample(&y, 7).unwrap());
        assert!(matches!(undersample(&layout(4, 0), 1), Err(LearnError::SingleClass)));
    }

    #[test]
    fn undersample_balanced_is_permutation() {
        let y = layout(5, 5);
        let mut a = undersample(&y, 3).unwrap();
        a.sort_unstable();
        assert_eq!(a, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn split_arithmetic() {
        let (tr, te) = split_train_test(&layout(50, 50), 0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (80, 20));
        let y = layout(50, 50);
        assert_eq!(tr.iter().filter(|&&i| y[i] == 1).count(), 40);
        let (tr, te) = split_train_test(&layout(126, 126), 0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (201, 51));
        assert!(matches!(split_train_test(&layout(10, 1), 0.8, 1), Err(LearnError::TooFewInstances)));
    }

    #[test]
    fn kfold_balanced_twenty() {
        let y = layout(10, 10);
        let folds = kfold(&y, 10, 5).unwrap();
        for f in &folds {
            assert_eq!(f.validation.len(), 2);
            assert_eq!(f.validation.iter().filter(|&&i| y[i] == 1).count(), 1);
            assert_eq!(f.train.len(), 18);
        }
        assert!(matches!(kfold(&layout(20, 3), 10, 1), Err(LearnError::KTooLarge { k: 10, minority: 3 })));
    }
}
