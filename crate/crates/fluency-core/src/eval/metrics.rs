//! Accuracy and the 3x3 confusion matrix.

use std::path::Path;

use crate::error::{Error, Result};
use crate::segment::{Fluency, CLASS_COUNT};

/// Fraction of positions where `predicted` equals `actual`.
pub fn accuracy(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::Eval(format!(
            "prediction length {} does not match actual length {}",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Eval("cannot score an empty prediction vector".into()));
    }
    let matches = predicted.iter().zip(actual).filter(|(a, b)| a == b).count();
    Ok(matches as f64 / actual.len() as f64)
}

/// Rows are true classes, columns predicted, ordered Low/Intermediate/High.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[usize; CLASS_COUNT]; CLASS_COUNT],
}

pub fn confusion(predicted: &[usize], actual: &[usize]) -> Result<ConfusionMatrix> {
    if predicted.len() != actual.len() {
        return Err(Error::Eval("prediction/actual length mismatch".into()));
    }
    if predicted.is_empty() {
        return Err(Error::Eval("cannot build a confusion matrix from nothing".into()));
    }
    let mut counts = [[0usize; CLASS_COUNT]; CLASS_COUNT];
    for (&p, &a) in predicted.iter().zip(actual) {
        if p >= CLASS_COUNT || a >= CLASS_COUNT {
            return Err(Error::Eval(format!("class index out of range: predicted {p}, actual {a}")));
        }
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..CLASS_COUNT).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`; identical to [`accuracy`] on the same vectors.
    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// Per-true-class test counts.
    pub fn row_sums(&self) -> [usize; CLASS_COUNT] {
        let mut sums = [0usize; CLASS_COUNT];
        for (i, row) in self.counts.iter().enumerate() {
            sums[i] = row.iter().sum();
        }
        sums
    }

    /// Writes the labeled 3x3 CSV (rows true, columns predicted).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Eval(format!("{}: {e}", path.display())))?;
        let mut header = vec!["true\\pred".to_string()];
        header.extend(Fluency::ALL.iter().map(|c| c.as_str().to_string()));
        w.write_record(&header).map_err(|e| Error::Eval(e.to_string()))?;
        for (i, class) in Fluency::ALL.iter().enumerate() {
            let mut record = vec![class.as_str().to_string()];
            record.extend(self.counts[i].iter().map(|c| c.to_string()));
            w.write_record(&record).map_err(|e| Error::Eval(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;

    #[test]
    fn accuracy_extremes() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2, 0], &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_matches_the_count_arithmetic() {
        // 471 correct out of 498.
        let mut actual = vec![0usize; 498];
        for (i, a) in actual.iter_mut().enumerate() {
            *a = i % 3;
        }
        let mut predicted = actual.clone();
        for p in predicted.iter_mut().take(27) {
            *p = (*p + 1) % 3;
        }
        let acc = accuracy(&predicted, &actual).unwrap();
        assert!((acc - 471.0 / 498.0).abs() < 1e-12);
        assert!((acc - 0.9458).abs() < 1e-4);
    }

    #[test]
    fn length_mismatch_is_an_eval_error() {
        assert!(matches!(accuracy(&[0, 1], &[0]), Err(Error::Eval(_))));
        assert!(matches!(confusion(&[0, 1], &[0]), Err(Error::Eval(_))));
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let y = vec![0, 1, 2, 1, 1, 2, 0];
        let cm = confusion(&y, &y).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(cm.counts[i][j], 0);
                }
            }
        }
        assert_eq!(cm.trace(), 7);
        assert_eq!(cm.accuracy(), 1.0);
    }

    #[test]
    fn single_error_lands_in_the_right_cell() {
        // True low predicted high.
        let cm = confusion(&[2], &[0]).unwrap();
        assert_eq!(cm.counts[0][2], 1);
        assert_eq!(cm.total(), 1);
        assert_eq!(cm.trace(), 0);
    }

    #[test]
    fn trace_over_total_equals_accuracy_for_random_vectors() {
        let mut rng = seeded_rng(29);
        for _ in 0..500 {
            let n = rng.random_range(1..60);
            let actual: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let predicted: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let cm = confusion(&predicted, &actual).unwrap();
            let acc = accuracy(&predicted, &actual).unwrap();
            assert!((cm.accuracy() - acc).abs() < 1e-15);
            let rows = cm.row_sums();
            for class in 0..3 {
                assert_eq!(rows[class], actual.iter().filter(|&&a| a == class).count());
            }
        }
    }

    #[test]
    fn out_of_range_labels_error() {
        assert!(matches!(confusion(&[3], &[0]), Err(Error::Eval(_))));
    }
}
