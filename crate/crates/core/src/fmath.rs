//! f64 math routines that resolve to std intrinsics when available and to
//! `libm` in no_std builds.

#[cfg(feature = "std")]
mod imp {
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
    pub fn acos(x: f64) -> f64 {
        x.acos()
    }
    pub fn atan2(y: f64, x: f64) -> f64 {
        y.atan2(x)
    }
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
    pub fn ceil(x: f64) -> f64 {
        x.ceil()
    }
    pub fn round(x: f64) -> f64 {
        x.round()
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    pub fn acos(x: f64) -> f64 {
        libm::acos(x)
    }
    pub fn atan2(y: f64, x: f64) -> f64 {
        libm::atan2(y, x)
    }
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    pub fn ceil(x: f64) -> f64 {
        libm::ceil(x)
    }
    pub fn round(x: f64) -> f64 {
        libm::round(x)
    }
}

pub(crate) use imp::*;

/// Ceiling of a positive real, as a usize. Values below 1 clamp to 1.
pub(crate) fn ceil_at_least_one(x: f64) -> usize {
    if !(x > 0.0) {
        return 1;
    }
    let c = ceil(x);
    if c < 1.0 {
        1
    } else {
        c as usize
    }
}
