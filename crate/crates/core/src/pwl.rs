//! Piecewise-linear approximators: representation, segment lookup, real and
//! fixed-point evaluation, error metrics, and the text exchange record.
//!
//! Segment convention: `B` breakpoints `d_1 < .. < d_B` define `B`
//! segments. Segment `i` (1-based) covers `[d_i, d_{i+1})` with
//! `d_{B+1} = +inf`, and inputs left of `d_1` clamp to segment 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{FixedPointFormat, Word};
use crate::func::{eval_exact, FunctionId, Interval};

/// Largest breakpoint count the broadcast schedule can carry.
pub const MAX_HW_BREAKPOINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearFn {
    function_id: FunctionId,
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    biases: Vec<f64>,
    domain: Interval,
}

impl PiecewiseLinearFn {
    pub fn new(
        function_id: FunctionId,
        domain: Interval,
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        biases: Vec<f64>,
    ) -> Result<Self> {
        let pwl = Self {
            function_id,
            breakpoints,
            slopes,
            biases,
            domain,
        };
        pwl.validate()?;
        Ok(pwl)
    }

    /// One segment `slope * x + bias` everywhere, breakpoint at `domain.lo`.
    pub fn linear(function_id: FunctionId, domain: Interval, slope: f64, bias: f64) -> Result<Self> {
        Self::new(function_id, domain, vec![domain.lo], vec![slope], vec![bias])
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let b = self.breakpoints.len();
        if b == 0 {
            return Err(Error::InvalidArgument("a PWL needs at least one breakpoint".into()));
        }
        if self.slopes.len() != b || self.biases.len() != b {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints but {} slopes and {} biases",
                b,
                self.slopes.len(),
                self.biases.len()
            )));
        }
        let all = self.breakpoints.iter().chain(&self.slopes).chain(&self.biases);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("PWL coefficients must be finite".into()));
        }
        if self.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("breakpoints must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn function_id(&self) -> FunctionId {
        self.function_id
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Number of breakpoints (and segments).
    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn is_hardware_mappable(&self) -> bool {
        self.len() <= MAX_HW_BREAKPOINTS
    }

    /// `(slope, bias)` of 1-based segment `address`.
    pub fn segment(&self, address: usize) -> (f64, f64) {
        (self.slopes[address - 1], self.biases[address - 1])
    }

    /// 1-based segment index with `d_i <= x < d_{i+1}`; left of `d_1` is 1.
    pub fn lookup_address(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&d| d <= x).max(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_traced(x).1
    }

    /// Evaluation that also reports the segment it used.
    pub fn eval_traced(&self, x: f64) -> (usize, f64) {
        let address = self.lookup_address(x);
        let (a, b) = self.segment(address);
        (address, a * x + b)
    }

    /// Slope and bias words of every segment, in address order.
    pub fn quantized_coefficients(&self, fmt: &FixedPointFormat) -> Vec<(Word, Word)> {
        self.slopes
            .iter()
            .zip(&self.biases)
            .map(|(&a, &b)| (fmt.quantize(a), fmt.quantize(b)))
            .collect()
    }

    /// Fixed-point reference path: the input word is the PE output, the
    /// segment is chosen by comparing its real value against the real
    /// breakpoints, and the MAC runs on quantized slope/bias words.
    pub fn eval_quantized_word(&self, xq: Word, fmt: &FixedPointFormat) -> Word {
        let address = self.lookup_address(fmt.dequantize(xq));
        let (a, b) = self.segment(address);
        fmt.mac(fmt.quantize(a), xq, fmt.quantize(b))
    }

    pub fn eval_quantized(&self, x: f64, fmt: &FixedPointFormat) -> Word {
        self.eval_quantized_word(fmt.quantize(x), fmt)
    }

    /// Copy whose coefficients are exactly representable in `fmt`.
    pub fn quantized(&self, fmt: &FixedPointFormat) -> Self {
        let mut out = self.clone();
        for v in out.slopes.iter_mut().chain(out.biases.iter_mut()) {
            *v = fmt.dequantize(fmt.quantize(*v));
        }
        out
    }

    /// Largest jump `|a_i d_{i+1} + b_i - (a_{i+1} d_{i+1} + b_{i+1})|`
    /// over interior breakpoints.
    pub fn max_discontinuity(&self) -> f64 {
        (1..self.len())
            .map(|i| {
                let d = self.breakpoints[i];
                let left = self.slopes[i - 1] * d + self.biases[i - 1];
                let right = self.slopes[i] * d + self.biases[i];
                (left - right).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxErrorReport {
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    pub rmse: f64,
    pub samples: usize,
    pub domain: Interval,
}

/// Errors against the reference function over a uniform grid on `domain`.
pub fn error_metrics(
    pwl: &PiecewiseLinearFn,
    function_id: FunctionId,
    domain: Interval,
    samples: usize,
) -> Result<ApproxErrorReport> {
    accumulate_errors(pwl, |x| eval_exact(function_id, x), domain, samples)
}

/// Same as [`error_metrics`] against an arbitrary target.
pub fn error_metrics_with(
    pwl: &PiecewiseLinearFn,
    target: impl Fn(f64) -> f64,
    domain: Interval,
    samples: usize,
) -> Result<ApproxErrorReport> {
    accumulate_errors(pwl, |x| Ok(target(x)), domain, samples)
}

fn accumulate_errors(
    pwl: &PiecewiseLinearFn,
    target: impl Fn(f64) -> Result<f64>,
    domain: Interval,
    samples: usize,
) -> Result<ApproxErrorReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument("error metrics need at least 2 samples".into()));
    }
    domain.validate()?;
    let (mut max, mut sum, mut sq) = (0.0f64, 0.0, 0.0);
    for x in domain.grid(samples) {
        let e = (pwl.eval(x) - target(x)?).abs();
        max = max.max(e);
        sum += e;
        sq += e * e;
    }
    let n = samples as f64;
    Ok(ApproxErrorReport {
        max_abs_error: max,
        mean_abs_error: sum / n,
        rmse: (sq / n).sqrt(),
        samples,
        domain,
    })
}

/// Text exchange record for a PWL. Field order is fixed; when a format is
/// present the raw slope/bias words travel alongside the real values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PwlRecord {
    pub function_id: FunctionId,
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
    pub biases: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_words: Option<Vec<Word>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_words: Option<Vec<Word>>,
    pub domain: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FixedPointFormat>,
}

impl PwlRecord {
    pub fn from_pwl(pwl: &PiecewiseLinearFn, format: Option<FixedPointFormat>) -> Self {
        let (slope_words, bias_words) = match &format {
            Some(fmt) => {
                let (s, b) = pwl.quantized_coefficients(fmt).into_iter().unzip();
                (Some(s), Some(b))
            }
            None => (None, None),
        };
        Self {
            function_id: pwl.function_id,
            breakpoints: pwl.breakpoints.clone(),
            slopes: pwl.slopes.clone(),
            biases: pwl.biases.clone(),
            slope_words,
            bias_words,
            domain: pwl.domain,
            format,
        }
    }

    pub fn to_pwl(&self) -> Result<PiecewiseLinearFn> {
        let pwl = PiecewiseLinearFn::new(
            self.function_id,
            self.domain,
            self.breakpoints.clone(),
            self.slopes.clone(),
            self.biases.clone(),
        )?;
        if let Some(fmt) = &self.format {
            fmt.validate()?;
            let words: (Vec<Word>, Vec<Word>) = pwl.quantized_coefficients(fmt).into_iter().unzip();
            if self.slope_words.as_ref() != Some(&words.0) || self.bias_words.as_ref() != Some(&words.1) {
                return Err(Error::Parse(
                    "stored slope/bias words disagree with the real coefficients".into(),
                ));
            }
        }
        Ok(pwl)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}
