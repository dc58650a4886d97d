//! Class-weighted binary cross-entropy.

use super::model::Class;

/// Clamp bound that keeps the logarithms finite.
pub const BCE_EPSILON: f64 = 1e-7;

/// Weighted binary cross-entropy for one sample.
///
/// `weights = (w_fc, w_tc)`: the per-class multipliers applied to FC
/// (label 0) and TC (label 1) instances. Returns the loss and
/// d(loss)/dp. `p` is clamped to `[eps, 1-eps]` before the logarithm.
pub fn weighted_bce(p: f64, label: Class, weights: (f64, f64)) -> (f64, f64) {
    let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    let (w_fc, w_tc) = weights;
    match label {
        Class::Tc => (-w_tc * p.ln(), -w_tc / p),
        Class::Fc => (-w_fc * (1.0 - p).ln(), w_fc / (1.0 - p)),
    }
}
