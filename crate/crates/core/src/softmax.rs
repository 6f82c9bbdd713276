//! Softmax assembled from two PWL approximators: `exp` on max-subtracted
//! logits and `reciprocal` on the row sum.

use crate::error::{Error, Result};
use crate::pwl::PiecewiseLinearFn;

/// `1 / s` through a reciprocal PWL. When `s` falls outside the fit's
/// domain and the domain spans at least an octave, `s` is scaled by a power
/// of two into `[lo, 2 lo)` and the exponent is folded back afterwards.
pub fn approx_reciprocal(pwl_recip: &PiecewiseLinearFn, s: f64) -> f64 {
    let domain = pwl_recip.domain();
    if domain.contains(s) || s <= 0.0 || domain.lo <= 0.0 || domain.hi < 2.0 * domain.lo {
        return pwl_recip.eval(s);
    }
    let mut k = (s / domain.lo).log2().floor() as i32;
    let mut m = s * (-k as f64).exp2();
    // log2 rounding can land one octave off
    if m < domain.lo {
        k -= 1;
        m = s * (-k as f64).exp2();
    } else if m >= 2.0 * domain.lo {
        k += 1;
        m = s * (-k as f64).exp2();
    }
    pwl_recip.eval(m) * (-k as f64).exp2()
}

/// `y_i = max(0, exp_pwl(x_i - max x))`, `out_i = y_i * recip_pwl(sum y)`.
///
/// Negative `exp` outputs (possible for a fit left of its first breakpoint)
/// are zeroed so every probability stays non-negative.
pub fn approx_softmax(
    logits: &[f64],
    pwl_exp: &PiecewiseLinearFn,
    pwl_recip: &PiecewiseLinearFn,
) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::InvalidArgument("softmax of an empty vector".into()));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("softmax logits must be finite".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ys: Vec<f64> = logits.iter().map(|&x| pwl_exp.eval(x - max).max(0.0)).collect();
    let sum: f64 = ys.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidArgument(
            "exp approximator is not positive at 0; cannot normalize".into(),
        ));
    }
    let inv = approx_reciprocal(pwl_recip, sum);
    Ok(ys.into_iter().map(|y| y * inv).collect())
}
