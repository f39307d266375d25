use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents and dimension shared by every energy in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Spatial dimension, 1 or 2.
    pub n: usize,
    /// Fractional Dirichlet exponent.
    pub s: f64,
    /// Fractional perimeter exponent.
    pub sigma: f64,
    /// Upper bound for the growth integral of traces that get extended.
    pub lambda_growth: f64,
}

impl Params {
    pub fn new(n: usize, s: f64, sigma: f64) -> Result<Self> {
        let p = Params {
            n,
            s,
            sigma,
            lambda_growth: 1.0e3,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_lambda(mut self, lambda_growth: f64) -> Result<Self> {
        self.lambda_growth = lambda_growth;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 1 && self.n != 2 {
            return Err(Error::InvalidInput(format!(
                "dimension n = {} (only 1 and 2 are supported)",
                self.n
            )));
        }
        check_exponent("s", self.s)?;
        check_exponent("sigma", self.sigma)?;
        if !(self.lambda_growth > 0.0) || !self.lambda_growth.is_finite() {
            return Err(Error::InvalidInput(format!(
                "lambda_growth = {} must be positive and finite",
                self.lambda_growth
            )));
        }
        Ok(())
    }

    /// Weight exponent of the extended problem, `1 - 2s`.
    pub fn a(&self) -> f64 {
        1.0 - 2.0 * self.s
    }

    /// Hölder exponent predicted for minimizers, `s - sigma/2`.
    pub fn growth_exponent(&self) -> f64 {
        self.s - 0.5 * self.sigma
    }
}

pub(crate) fn check_exponent(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::BadExponent { name, value })
    }
}

/// Volume of the unit ball in dimension `n` (1 or 2).
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => panic!("unsupported dimension {n}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_exponents() {
        assert_eq!(Params::new(1, 1.0, 0.5).unwrap_err().kind(), "bad-exponent");
        assert_eq!(Params::new(1, 0.5, 0.0).unwrap_err().kind(), "bad-exponent");
        assert_eq!(
            Params::new(3, 0.5, 0.5).unwrap_err().kind(),
            "invalid-input"
        );
    }

    #[test]
    fn weight_exponent() {
        let p = Params::new(2, 0.75, 0.5).unwrap();
        assert_eq!(p.a(), -0.5);
        assert_eq!(p.growth_exponent(), 0.5);
    }
}
