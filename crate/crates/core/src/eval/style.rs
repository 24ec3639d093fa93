use super::{classification_metrics, EvalError};
use crate::corpus::NewsRecord;
use crate::discriminators::StyleDiscriminator;
use crate::vocab::Vocab;

/// Anything that predicts a publisher name from text.
pub trait StyleClassifier {
    fn is_trained(&self) -> bool {
        true
    }

    fn predict(&self, text: &str) -> Result<String, EvalError>;
}

/// Word-graph publisher classifier, trained on human text only.
#[derive(Clone, Debug)]
pub struct DmStyleClassifier {
    pub discriminator: StyleDiscriminator,
    pub vocab: Vocab,
    pub trained: bool,
}

impl StyleClassifier for DmStyleClassifier {
    fn is_trained(&self) -> bool {
        self.trained
    }

    fn predict(&self, text: &str) -> Result<String, EvalError> {
        self.discriminator
            .classify(&self.vocab.encode_content(text))
            .map(|(name, _)| name)
            .map_err(|e| EvalError::Classifier(e.to_string()))
    }
}

/// Accuracy and macro F1 of the classifier's predictions against each
/// record's conditioning publisher.
pub fn style_adherence(records: &[NewsRecord], classifier: &dyn StyleClassifier) -> Result<(f64, f64), EvalError> {
    if !classifier.is_trained() {
        return Err(EvalError::UntrainedClassifier);
    }
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let predictions = records
        .iter()
        .map(|r| classifier.predict(&r.content))
        .collect::<Result<Vec<_>, _>>()?;
    let gold: Vec<String> = records.iter().map(|r| r.publisher.clone()).collect();
    let m = classification_metrics(&predictions, &gold)?;
    Ok((m.accuracy, m.macro_f1))
}
