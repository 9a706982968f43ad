use super::NumError;

/// `log Σ exp(v_i)` with a max shift, so large entries never overflow.
pub fn log_sum_exp(values: &[f64]) -> Result<f64, NumError> {
    let max = values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return Err(NumError::Empty("log_sum_exp"));
    }
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Logistic function, evaluated branch-wise so `exp` only ever sees a
/// non-positive argument.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
