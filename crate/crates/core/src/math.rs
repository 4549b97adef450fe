//! Float shims: std intrinsics when available, `libm` otherwise.

macro_rules! unary {
    ($($name:ident => $libm:ident),* $(,)?) => {$(
        #[cfg(any(test, feature = "std"))]
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            x.$name()
        }

        #[cfg(not(any(test, feature = "std")))]
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            libm::$libm(x)
        }
    )*};
}

unary! {
    exp => exp,
    ln => log,
    ln_1p => log1p,
    exp_m1 => expm1,
    sqrt => sqrt,
    log10 => log10,
    round => round,
}

#[cfg(any(test, feature = "std"))]
#[inline(always)]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    x.powf(y)
}

#[cfg(not(any(test, feature = "std")))]
#[inline(always)]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// ln(1 + e^t) without overflow for large |t|.
#[inline(always)]
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + ln_1p(exp(-t))
    } else {
        ln_1p(exp(t))
    }
}
