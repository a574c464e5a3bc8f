use super::Tensor;

/// `log(e^y + 1) + 1` without overflow for large `|y|`.
pub fn softplus_shift_f64(y: f64) -> f64 {
    let softplus = if y > 0.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    };
    softplus + 1.0
}

/// Elementwise shifted softplus. Evaluated in f64 and rounded once, so every
/// output is at least 1 (and strictly above 1 until `e^y` drops below f32
/// resolution around `y ≈ -16.6`).
pub fn softplus_shift(raw: &Tensor) -> Tensor {
    raw.map(|y| softplus_shift_f64(y as f64) as f32)
}
