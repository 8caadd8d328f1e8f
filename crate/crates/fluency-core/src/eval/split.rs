//! Seeded random train/test partition.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded_rng, stream};

/// Disjoint index sets covering `0..n`; `|train| = round(ratio * n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub ratio: f64,
    pub seed: u64,
}

/// Fisher-Yates shuffle of the row indices; the first `round(ratio * n)` go
/// to training. With `stratify_labels` the shuffle happens per class, which
/// preserves class proportions to within one example per class.
pub fn split_train_test(
    n: usize,
    ratio: f64,
    seed: u64,
    stratify_labels: Option<&[usize]>,
) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} outside (0, 1)")));
    }
    if n < 10 {
        return Err(Error::Eval(format!("need at least 10 examples to split, have {n}")));
    }
    if let Some(labels) = stratify_labels {
        if labels.len() != n {
            return Err(Error::Eval("stratification labels do not match dataset size".into()));
        }
    }

    let mut rng = seeded_rng(derive_seed(seed, stream::SPLIT, 0));
    let (train, test) = match stratify_labels {
        None => {
            let mut indices: Vec<usize> = (0..n).collect();
            indices.shuffle(&mut rng);
            let n_train = (ratio * n as f64).round() as usize;
            let test = indices.split_off(n_train);
            (indices, test)
        }
        Some(labels) => {
            let n_classes = labels.iter().max().map_or(0, |m| m + 1);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for class in 0..n_classes {
                let mut members: Vec<usize> =
                    (0..n).filter(|&i| labels[i] == class).collect();
                members.shuffle(&mut rng);
                let n_train = (ratio * members.len() as f64).round() as usize;
                let rest = members.split_off(n_train);
                train.extend(members);
                test.extend(rest);
            }
            (train, test)
        }
    };

    Ok(Split { train, test, ratio, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn sizes_match_the_rounded_ratio() {
        let s = split_train_test(1424, 0.7, 42, None).unwrap();
        assert_eq!(s.train.len(), 997); // round(0.7 * 1424)
        assert_eq!(s.test.len(), 427);

        let s = split_train_test(10, 0.5, 0, None).unwrap();
        assert_eq!(s.train.len(), 5);
        assert_eq!(s.test.len(), 5);
    }

    #[test]
    fn identical_seed_gives_identical_split() {
        let a = split_train_test(500, 0.7, 7, None).unwrap();
        let b = split_train_test(500, 0.7, 7, None).unwrap();
        assert_eq!(a, b);
        let c = split_train_test(500, 0.7, 8, None).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn disjoint_union_covers_everything_for_many_seeds() {
        for seed in 0..100 {
            let s = split_train_test(137, 0.7, seed, None).unwrap();
            let train: BTreeSet<_> = s.train.iter().copied().collect();
            let test: BTreeSet<_> = s.test.iter().copied().collect();
            assert_eq!(train.len(), s.train.len());
            assert_eq!(test.len(), s.test.len());
            assert!(train.is_disjoint(&test));
            assert_eq!(train.len() + test.len(), 137);
        }
    }

    #[test]
    fn stratified_split_preserves_class_proportions() {
        let labels: Vec<usize> =
            (0..300).map(|i| if i < 60 { 0 } else if i < 210 { 1 } else { 2 }).collect();
        let s = split_train_test(300, 0.7, 3, Some(&labels)).unwrap();
        let count = |idx: &[usize], class: usize| {
            idx.iter().filter(|&&i| labels[i] == class).count() as f64
        };
        for class in 0..3 {
            let total = labels.iter().filter(|&&c| c == class).count() as f64;
            let got = count(&s.train, class);
            assert!((got - 0.7 * total).abs() <= 1.0, "class {class}: {got} of {total}");
        }
    }

    #[test]
    fn bad_ratios_are_config_errors() {
        for ratio in [0.0, 1.0, -0.5, 1.5] {
            assert!(matches!(
                split_train_test(100, ratio, 0, None),
                Err(Error::Config(_))
            ));
        }
        assert!(matches!(split_train_test(5, 0.5, 0, None), Err(Error::Eval(_))));
    }
}
