use crate::error::{arg_err, shape_err, Result};
use crate::numerics::Matrix;

fn check_labels(logits: &Matrix, labels: &[usize]) -> Result<()> {
    if logits.rows() != labels.len() {
        return shape_err(format!("{} logit rows for {} labels", logits.rows(), labels.len()));
    }
    if logits.rows() == 0 {
        return arg_err("cross entropy of an empty batch");
    }
    let k = logits.cols();
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return arg_err(format!("label {bad} outside 0..{k}"));
    }
    Ok(())
}

/// Max-subtracted softmax of one row, written into `out`. Returns the
/// log-normalizer `log Σ exp(z − max)` and the row max.
fn softmax_row(row: &[f64], out: &mut [f64]) -> (f64, f64) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(row) {
        *o = (z - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    (total.ln(), max)
}

/// `−log p[label]` for every row.
pub fn per_sample_nll(logits: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    check_labels(logits, labels)?;
    let mut probs = vec![0.0; logits.cols()];
    Ok(logits
        .iter_rows()
        .zip(labels)
        .map(|(row, &l)| {
            let (log_total, max) = softmax_row(row, &mut probs);
            log_total - (row[l] - max)
        })
        .collect())
}

/// Mean cross entropy over the batch and its gradient `(p − onehot)/batch`.
pub fn softmax_xent(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    check_labels(logits, labels)?;
    let n = logits.rows() as f64;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for (b, (row, &l)) in logits.iter_rows().zip(labels).enumerate() {
        let g = grad.row_mut(b);
        let (log_total, max) = softmax_row(row, g);
        loss += log_total - (row[l] - max);
        g[l] -= 1.0;
        for v in g.iter_mut() {
            *v /= n;
        }
    }
    Ok((loss / n, grad))
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}
