//! Thin wrappers over `libm` so the crate stays `no_std`.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn powi(x: f64, k: i32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k.unsigned_abs() {
        acc *= x;
    }
    if k < 0 {
        1.0 / acc
    } else {
        acc
    }
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub(crate) fn log(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn asinh(x: f64) -> f64 {
    libm::asinh(x)
}
