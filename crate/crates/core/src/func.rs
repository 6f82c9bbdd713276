//! Double-precision reference implementations of the approximated functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionId {
    Exp,
    Gelu,
    Tanh,
    Sigmoid,
    Reciprocal,
    Identity,
}

impl FunctionId {
    pub const ALL: [FunctionId; 6] = [
        FunctionId::Exp,
        FunctionId::Gelu,
        FunctionId::Tanh,
        FunctionId::Sigmoid,
        FunctionId::Reciprocal,
        FunctionId::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionId::Exp => "exp",
            FunctionId::Gelu => "gelu",
            FunctionId::Tanh => "tanh",
            FunctionId::Sigmoid => "sigmoid",
            FunctionId::Reciprocal => "reciprocal",
            FunctionId::Identity => "identity",
        }
    }

    /// Fitting interval used when the caller does not supply one.
    /// Reciprocal inputs are range-reduced into [1, 2) by powers of two.
    pub fn default_domain(self) -> Interval {
        let (lo, hi) = match self {
            FunctionId::Exp => (-8.0, 0.0),
            FunctionId::Gelu => (-4.0, 4.0),
            FunctionId::Tanh | FunctionId::Sigmoid => (-6.0, 6.0),
            FunctionId::Reciprocal => (1.0, 2.0),
            FunctionId::Identity => (-1.0, 1.0),
        };
        Interval { lo, hi }
    }

    pub fn eval(self, x: f64) -> Result<f64> {
        eval_exact(self, x)
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Unknown {
                what: "function",
                name: s.to_string(),
                known: FunctionId::ALL.iter().map(|f| f.name().to_string()).collect(),
            })
    }
}

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let iv = Self { lo, hi };
        iv.validate()?;
        Ok(iv)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidArgument(format!(
                "degenerate interval [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `n` evenly spaced points including both endpoints.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let step = if n > 1 { self.width() / (n - 1) as f64 } else { 0.0 };
        (0..n).map(move |k| {
            if k + 1 == n && n > 1 {
                self.hi
            } else {
                self.lo + step * k as f64
            }
        })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn eval_exact(function: FunctionId, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite input {x}")));
    }
    Ok(match function {
        FunctionId::Exp => x.exp(),
        FunctionId::Gelu => gelu(x),
        FunctionId::Tanh => x.tanh(),
        FunctionId::Sigmoid => sigmoid(x),
        FunctionId::Reciprocal => {
            if x == 0.0 {
                return Err(Error::Domain { function, x });
            }
            1.0 / x
        }
        FunctionId::Identity => x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(eval_exact(FunctionId::Exp, 0.0).unwrap(), 1.0);
        assert_eq!(eval_exact(FunctionId::Gelu, 0.0).unwrap(), 0.0);
        let t = eval_exact(FunctionId::Tanh, 1.0).unwrap();
        assert!((t - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert_eq!(eval_exact(FunctionId::Sigmoid, 0.0).unwrap(), 0.5);
        assert_eq!(eval_exact(FunctionId::Reciprocal, 4.0).unwrap(), 0.25);
        // GELU(1) = 0.5 * (1 + erf(1/sqrt 2)) = Phi(1)
        let g1 = eval_exact(FunctionId::Gelu, 1.0).unwrap();
        assert!((g1 - 0.841_344_746_068_542_9).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_at_zero_is_domain_error() {
        assert!(matches!(
            eval_exact(FunctionId::Reciprocal, 0.0),
            Err(Error::Domain { .. })
        ));
        assert!(eval_exact(FunctionId::Exp, f64::NAN).is_err());
    }

    #[test]
    fn names_roundtrip() {
        for f in FunctionId::ALL {
            assert_eq!(f.name().parse::<FunctionId>().unwrap(), f);
        }
        assert!("softplus".parse::<FunctionId>().is_err());
    }

    #[test]
    fn grid_hits_both_endpoints() {
        let iv = Interval::new(-8.0, 0.0).unwrap();
        let g: Vec<f64> = iv.grid(5).collect();
        assert_eq!(g, vec![-8.0, -6.0, -4.0, -2.0, 0.0]);
        assert!(Interval::new(1.0, 1.0).is_err());
    }
}
