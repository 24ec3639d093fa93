use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    /// Macro-averaged over the classes seen in gold or predictions.
    pub precision: f64,
    pub recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class scores with zero denominators defined as 0, averaged without
/// weighting.
pub fn classification_metrics<T: Ord>(predictions: &[T], gold: &[T]) -> Result<ClassificationReport, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let classes: BTreeSet<&T> = predictions.iter().chain(gold).collect();
    let correct = predictions.iter().zip(gold).filter(|(p, g)| p == g).count();
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for c in &classes {
        let tp = predictions.iter().zip(gold).filter(|(p, g)| p == c && g == c).count();
        let predicted = predictions.iter().filter(|p| p == c).count();
        let actual = gold.iter().filter(|g| g == c).count();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, actual);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        p_sum += precision;
        r_sum += recall;
        f_sum += f1;
    }
    let k = classes.len() as f64;
    Ok(ClassificationReport {
        accuracy: ratio(correct, gold.len()),
        precision: p_sum / k,
        recall: r_sum / k,
        macro_f1: f_sum / k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let r = classification_metrics(&[0, 1, 2, 2], &[0, 1, 2, 2]).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.macro_f1), (1.0, 1.0, 1.0, 1.0));
        let r = classification_metrics(&["x"], &["x"]).unwrap();
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn all_one_class_balanced_binary() {
        let r = classification_metrics(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert!((r.macro_f1 - (2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(r.precision, 0.25);
        assert_eq!(r.recall, 0.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            classification_metrics(&[0, 1], &[0]),
            Err(EvalError::LengthMismatch {
                predictions: 2,
                gold: 1
            })
        ));
        assert!(matches!(
            classification_metrics::<u8>(&[], &[]),
            Err(EvalError::EmptyInput)
        ));
    }
}
