//! Scalar float helpers routed through `libm` so results do not depend on the
//! platform's libm.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub(crate) fn exp2(x: f64) -> f64 {
    libm::exp2(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

/// Binary entropy in bits, `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * log2(x) };
    term(p) + term(1.0 - p)
}

/// Shannon entropy in bits of a probability vector.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * log2(p))
        .sum()
}
