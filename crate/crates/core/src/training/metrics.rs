use std::fmt;
use std::io::Write;

use crate::error::Result;

pub const METRICS_HEADER: &str = "trial,epoch,split,loss,accuracy,seconds";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// A single trial or the per-epoch mean across trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trial {
    Index(usize),
    Mean,
}

impl fmt::Display for Trial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trial::Index(k) => write!(f, "{k}"),
            Trial::Mean => f.write_str("mean"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub trial: Trial,
    /// 1-based.
    pub epoch: usize,
    pub split: Split,
    pub loss: f64,
    pub accuracy: f64,
    pub seconds: f64,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.10},{:.10},{:.4}",
            self.trial, self.epoch, self.split, self.loss, self.accuracy, self.seconds
        )
    }
}

/// Arithmetic mean over trials for each (epoch, split) pair.
pub fn trial_means(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    let mut keys: Vec<(usize, Split)> = rows
        .iter()
        .filter(|r| matches!(r.trial, Trial::Index(_)))
        .map(|r| (r.epoch, r.split))
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(epoch, split)| {
            let group: Vec<&MetricsRow> = rows
                .iter()
                .filter(|r| matches!(r.trial, Trial::Index(_)) && r.epoch == epoch && r.split == split)
                .collect();
            let n = group.len() as f64;
            let mean = |f: fn(&MetricsRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            MetricsRow {
                trial: Trial::Mean,
                epoch,
                split,
                loss: mean(|r| r.loss),
                accuracy: mean(|r| r.accuracy),
                seconds: mean(|r| r.seconds),
            }
        })
        .collect()
}

/// Writes the metrics CSV. `comment`, when given, becomes a leading line
/// prefixed with `#`.
pub fn write_metrics_csv(out: &mut impl Write, rows: &[MetricsRow], comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    Ok(())
}

/// Side-by-side comparison of two runs' trial-mean rows, matched on
/// `(epoch, split)`.
pub fn write_comparison_csv(
    out: &mut impl Write,
    left_name: &str,
    left: &[MetricsRow],
    right_name: &str,
    right: &[MetricsRow],
) -> Result<()> {
    writeln!(
        out,
        "epoch,split,{left_name}_loss,{left_name}_accuracy,{right_name}_loss,{right_name}_accuracy"
    )?;
    let means = |rows: &[MetricsRow]| -> Vec<MetricsRow> {
        rows.iter().filter(|r| r.trial == Trial::Mean).cloned().collect()
    };
    let (l, r) = (means(left), means(right));
    for a in &l {
        if let Some(b) = r.iter().find(|b| b.epoch == a.epoch && b.split == a.split) {
            writeln!(
                out,
                "{},{},{:.10},{:.10},{:.10},{:.10}",
                a.epoch, a.split, a.loss, a.accuracy, b.loss, b.accuracy
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, epoch: usize, split: Split, acc: f64) -> MetricsRow {
        MetricsRow {
            trial: Trial::Index(trial),
            epoch,
            split,
            loss: 1.0 - acc,
            accuracy: acc,
            seconds: 0.5,
        }
    }

    #[test]
    fn means_average_over_trials() {
        let rows = vec![
            row(0, 1, Split::Train, 0.5),
            row(0, 1, Split::Test, 0.4),
            row(1, 1, Split::Train, 0.7),
            row(1, 1, Split::Test, 0.6),
        ];
        let means = trial_means(&rows);
        assert_eq!(means.len(), 2);
        assert_eq!(means[0].split, Split::Train);
        assert!((means[0].accuracy - 0.6).abs() < 1e-15);
        assert!((means[1].accuracy - 0.5).abs() < 1e-15);
        assert!(means.iter().all(|r| r.trial == Trial::Mean));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[row(0, 1, Split::Test, 0.25)], Some("model=mlp")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# model=mlp\ntrial,epoch,split,loss,accuracy,seconds\n0,1,test,0.7500000000,0.2500000000,0.5000\n"
        );
    }

    #[test]
    fn comparison_pairs_mean_rows() {
        let a = trial_means(&[row(0, 1, Split::Test, 0.9)]);
        let b = trial_means(&[row(0, 1, Split::Test, 0.8)]);
        let mut buf = Vec::new();
        write_comparison_csv(&mut buf, "wavkan", &a, "mlp", &b).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "epoch,split,wavkan_loss,wavkan_accuracy,mlp_loss,mlp_accuracy");
        assert!(lines[1].starts_with("1,test,0.1000000000,0.9000000000,0.2000000000,0.8000000000"));
    }
}
