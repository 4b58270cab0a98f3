use crate::error::Result;
use crate::filterbank::SignalMatrix;

pub fn sum_forward(a: &SignalMatrix, b: &SignalMatrix) -> Result<SignalMatrix> {
    a.add(b)
}

/// Both summands receive the output gradient unchanged.
pub fn sum_backward(grad_out: &SignalMatrix) -> (SignalMatrix, SignalMatrix) {
    (grad_out.clone(), grad_out.clone())
}

/// `sum((pred - target)^2) / (2 R)` with `R` the row count, and its gradient
/// `(pred - target) / R`.
pub fn euclidean_loss(pred: &SignalMatrix, target: &SignalMatrix) -> Result<(f64, SignalMatrix)> {
    let diff = pred.sub(target)?;
    let rows = pred.rows().max(1) as f64;
    let loss = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / (2.0 * rows);
    Ok((loss, diff.scale(1.0 / rows)))
}
