//! Numerically stable scalar kernels.

use std::f64::consts::LN_2;

/// Arguments above this magnitude switch to the asymptotic form of `ln cosh`.
pub const LOG_COSH_SWITCH: f64 = 30.0;

/// `ln(cosh(x))` without overflow.
///
/// For `|x| > 30` it is evaluated as `|x| + ln((1 + e^{-2|x|}) / 2)`, which is
/// exact algebraically and never forms `cosh(x)`.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    if a > LOG_COSH_SWITCH {
        a + (-2.0 * a).exp().ln_1p() - LN_2
    } else {
        a.cosh().ln()
    }
}
