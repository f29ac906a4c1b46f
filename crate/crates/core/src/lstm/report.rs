use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LstmError, LstmModel};
use crate::features::FeatureSequence;
use crate::keypoints::ActionLabel;

const N: usize = ActionLabel::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: ActionLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class precision, recall, F1 and support with accuracy and macro and
/// support-weighted averages. Undefined ratios (no predictions or no support)
/// are reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    /// Rows are true classes, columns predicted classes.
    pub confusion: [[usize; N]; N],
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassificationReport {
    pub fn from_predictions(truth: &[ActionLabel], predicted: &[ActionLabel]) -> Self {
        assert_eq!(
            truth.len(),
            predicted.len(),
            "label slices differ in length"
        );
        let mut confusion = [[0usize; N]; N];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[t.index()][p.index()] += 1;
        }
        Self::from_confusion(confusion)
    }

    pub fn from_confusion(confusion: [[usize; N]; N]) -> Self {
        let total: usize = confusion.iter().flatten().sum();
        let trace: usize = (0..N).map(|i| confusion[i][i]).sum();
        let classes: Vec<ClassMetrics> = ActionLabel::ALL
            .iter()
            .map(|&label| {
                let c = label.index();
                let tp = confusion[c][c];
                let support: usize = confusion[c].iter().sum();
                let predicted: usize = confusion.iter().map(|row| row[c]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = ratio(2 * tp, support + predicted);
                ClassMetrics {
                    label,
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();

        let mean = |f: fn(&ClassMetrics) -> f64| classes.iter().map(f).sum::<f64>() / N as f64;
        let weighted = |f: fn(&ClassMetrics) -> f64| {
            if total == 0 {
                0.0
            } else {
                classes.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total as f64
            }
        };
        let macro_avg = Averages {
            precision: mean(|c| c.precision),
            recall: mean(|c| c.recall),
            f1: mean(|c| c.f1),
        };
        let weighted_avg = Averages {
            precision: weighted(|c| c.precision),
            recall: weighted(|c| c.recall),
            f1: weighted(|c| c.f1),
        };
        Self {
            classes,
            accuracy: ratio(trace, total),
            macro_avg,
            weighted_avg,
            confusion,
            total,
        }
    }

    /// Aligned text table: one row per class, then accuracy, macro and
    /// weighted averages, each with two-decimal scores and integer support.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let rule = "-".repeat(58);
        let _ = writeln!(
            out,
            "{:<14}{:>11}{:>11}{:>11}{:>11}",
            "Class", "Precision", "Recall", "F1-Score", "Support"
        );
        let _ = writeln!(out, "{rule}");
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:<14}{:>11.2}{:>11.2}{:>11.2}{:>11}",
                c.label.name(),
                c.precision,
                c.recall,
                c.f1,
                c.support
            );
        }
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(
            out,
            "{:<14}{:>11}{:>11}{:>11.2}{:>11}",
            "Accuracy", "", "", self.accuracy, self.total
        );
        for (name, avg) in [
            ("Macro Avg", self.macro_avg),
            ("Weighted Avg", self.weighted_avg),
        ] {
            let _ = writeln!(
                out,
                "{:<14}{:>11.2}{:>11.2}{:>11.2}{:>11}",
                name, avg.precision, avg.recall, avg.f1, self.total
            );
        }
        let _ = writeln!(out, "{rule}");
        out
    }

    pub fn render_confusion(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<12}", "true\\pred");
        for label in ActionLabel::ALL {
            let _ = write!(out, "{:>10}", &label.name()[..label.name().len().min(9)]);
        }
        out.push('\n');
        for (label, row) in ActionLabel::ALL.iter().zip(&self.confusion) {
            let _ = write!(out, "{:<12}", label.name());
            for v in row {
                let _ = write!(out, "{v:>10}");
            }
            out.push('\n');
        }
        out
    }
}

/// Classification report of inference-mode predictions over a labeled set.
pub fn evaluate(
    model: &LstmModel,
    data: &[FeatureSequence],
) -> Result<ClassificationReport, LstmError> {
    if data.is_empty() {
        return Err(LstmError::InvalidArgument(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    let pairs: Vec<(ActionLabel, ActionLabel)> = data
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let truth = x.label.ok_or_else(|| {
                LstmError::InvalidArgument(format!("evaluation sample {i} has no label"))
            })?;
            Ok((truth, model.predict(x)?.0))
        })
        .collect::<Result<_, LstmError>>()?;
    let (truth, predicted): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(ClassificationReport::from_predictions(&truth, &predicted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictor() {
        let truth: Vec<ActionLabel> = ActionLabel::ALL.iter().copied().cycle().take(40).collect();
        let report = ClassificationReport::from_predictions(&truth, &truth);
        assert_eq!(report.accuracy, 1.0);
        assert!(report.classes.iter().all(|c| c.f1 == 1.0 && c.support == 5));
        for i in 0..N {
            for j in 0..N {
                assert_eq!(report.confusion[i][j], if i == j { 5 } else { 0 });
            }
        }
        assert_eq!(report.macro_avg.f1, 1.0);
    }

    #[test]
    fn constant_predictor_closed_form() {
        let truth: Vec<ActionLabel> = ActionLabel::ALL.iter().copied().cycle().take(80).collect();
        let predicted = vec![ActionLabel::Chopping; 80];
        let report = ClassificationReport::from_predictions(&truth, &predicted);
        assert!((report.accuracy - 0.125).abs() < 1e-15);
        // Class 0: precision 1/8, recall 1, F1 = 2 * 0.125 / 1.125. Others 0.
        let f1_0 = 2.0 * 0.125 / 1.125;
        assert!((report.classes[0].f1 - f1_0).abs() < 1e-15);
        assert!((report.macro_avg.f1 - f1_0 / 8.0).abs() < 1e-15);
        assert!((report.macro_avg.f1 - 0.0278).abs() < 1e-4);
        assert!(report.classes[1..]
            .iter()
            .all(|c| c.precision == 0.0 && c.f1 == 0.0));
    }

    #[test]
    fn invariants_hold() {
        let truth: Vec<ActionLabel> = (0..50).map(|i| ActionLabel::ALL[(i * 7) % 8]).collect();
        let predicted: Vec<ActionLabel> = (0..50).map(|i| ActionLabel::ALL[(i * 3) % 8]).collect();
        let r = ClassificationReport::from_predictions(&truth, &predicted);
        let sum: usize = r.confusion.iter().flatten().sum();
        assert_eq!(sum, r.total);
        assert_eq!(r.total, r.classes.iter().map(|c| c.support).sum::<usize>());
        let trace: usize = (0..N).map(|i| r.confusion[i][i]).sum();
        assert_eq!(r.accuracy, trace as f64 / 50.0);
        let macro_f1 = r.classes.iter().map(|c| c.f1).sum::<f64>() / 8.0;
        assert_eq!(r.macro_avg.f1, macro_f1);
    }

    #[test]
    fn render_layout() {
        let truth: Vec<ActionLabel> = ActionLabel::ALL.to_vec();
        let text = ClassificationReport::from_predictions(&truth, &truth).render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 15);
        let header: Vec<&str> = lines[0].split_whitespace().collect();
        assert_eq!(
            header,
            ["Class", "Precision", "Recall", "F1-Score", "Support"]
        );
        assert!(lines[2].starts_with("Chopping"));
        assert!(lines[11].starts_with("Accuracy"));
        assert_eq!(
            lines[11].split_whitespace().collect::<Vec<_>>(),
            ["Accuracy", "1.00", "8"]
        );
        assert!(lines[12].starts_with("Macro Avg"));
        assert!(lines[13].starts_with("Weighted Avg"));
    }
}
