use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassificationReport, ContentScores, EvalError, FluencyScores, SpellingCounts};

/// Metric values for one (dataset, model) pair. Absent metrics are `None`
/// and serialise as `null`, never as zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub model: String,
    pub manifest_hash: Option<String>,
    pub mauve: Option<f64>,
    pub frontier: Option<f64>,
    pub bleu: Option<f64>,
    pub mover: Option<f64>,
    pub style_accuracy: Option<f64>,
    pub style_f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub macro_f1: Option<f64>,
    pub spelling: Option<BTreeMap<String, SpellingCounts>>,
}

#[derive(Clone, Debug, Default)]
pub struct MetricInputs {
    pub fluency: Option<FluencyScores>,
    pub content: Option<ContentScores>,
    pub style: Option<(f64, f64)>,
    pub classification: Option<ClassificationReport>,
    pub spelling: Option<BTreeMap<String, SpellingCounts>>,
}

impl EvalReport {
    fn bounded(&self) -> [(&'static str, Option<f64>, f64); 10] {
        [
            ("mauve", self.mauve, 1.0),
            ("frontier", self.frontier, 1.0),
            ("bleu", self.bleu, 100.0),
            ("mover", self.mover, 1.0),
            ("style_accuracy", self.style_accuracy, 1.0),
            ("style_f1", self.style_f1, 1.0),
            ("accuracy", self.accuracy, 1.0),
            ("precision", self.precision, 1.0),
            ("recall", self.recall, 1.0),
            ("macro_f1", self.macro_f1, 1.0),
        ]
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        for (field, value, hi) in self.bounded() {
            if let Some(v) = value {
                if !(0.0..=hi).contains(&v) {
                    return Err(EvalError::OutOfRange {
                        field: field.into(),
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    /// One `dataset,model,metric,value` row per metric; absent values are
    /// written as `absent`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,model,metric,value\n");
        let mut row = |metric: &str, value: String| {
            out.push_str(&format!("{},{},{},{}\n", self.dataset, self.model, metric, value));
        };
        for (field, value, _) in self.bounded() {
            row(field, value.map_or_else(|| "absent".into(), |v| v.to_string()));
        }
        match &self.spelling {
            None => row("spelling", "absent".into()),
            Some(map) => {
                for (publisher, c) in map {
                    row(&format!("spelling_british[{publisher}]"), c.british.to_string());
                    row(&format!("spelling_american[{publisher}]"), c.american.to_string());
                }
            }
        }
        out
    }
}

/// Assembles and range-checks a report.
pub fn build_report(
    dataset: &str,
    model: &str,
    inputs: &MetricInputs,
    manifest_hash: Option<&str>,
) -> Result<EvalReport, EvalError> {
    let report = EvalReport {
        dataset: dataset.into(),
        model: model.into(),
        manifest_hash: manifest_hash.map(str::to_string),
        mauve: inputs.fluency.map(|f| f.mauve),
        frontier: inputs.fluency.map(|f| f.frontier),
        bleu: inputs.content.map(|c| c.bleu),
        mover: inputs.content.map(|c| c.mover),
        style_accuracy: inputs.style.map(|s| s.0),
        style_f1: inputs.style.map(|s| s.1),
        accuracy: inputs.classification.map(|c| c.accuracy),
        precision: inputs.classification.map(|c| c.precision),
        recall: inputs.classification.map(|c| c.recall),
        macro_f1: inputs.classification.map(|c| c.macro_f1),
        spelling: inputs.spelling.clone(),
    };
    report.validate()?;
    Ok(report)
}

/// Writes `report.json` and `report.csv` into `dir`.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    let mut f = std::fs::File::create(dir.join("report.csv"))?;
    f.write_all(report.to_csv().as_bytes())?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<EvalReport, EvalError> {
    let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    report.validate()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_report_marks_absent() {
        let inputs = MetricInputs {
            fluency: Some(FluencyScores {
                mauve: 0.9,
                frontier: 0.1,
            }),
            ..Default::default()
        };
        let r = build_report("toy", "tiny", &inputs, Some("abc")).unwrap();
        assert_eq!(r.bleu, None);
        let csv = r.to_csv();
        assert!(csv.contains("toy,tiny,bleu,absent"));
        assert!(csv.contains("toy,tiny,mauve,0.9"));
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["bleu"].is_null());
    }

    #[test]
    fn round_trip() {
        let mut spelling = BTreeMap::new();
        spelling.insert(
            "A".to_string(),
            SpellingCounts {
                british: 3,
                american: 1,
            },
        );
        let inputs = MetricInputs {
            content: Some(ContentScores { bleu: 42.5, mover: 0.3 }),
            spelling: Some(spelling),
            ..Default::default()
        };
        let r = build_report("d", "m", &inputs, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(&r, dir.path()).unwrap();
        assert_eq!(read_report(&dir.path().join("report.json")).unwrap(), r);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let inputs = MetricInputs {
            fluency: Some(FluencyScores {
                mauve: 1.2,
                frontier: 0.0,
            }),
            ..Default::default()
        };
        assert!(matches!(
            build_report("d", "m", &inputs, None),
            Err(EvalError::OutOfRange { ref field, .. }) if field == "mauve"
        ));
    }
}
