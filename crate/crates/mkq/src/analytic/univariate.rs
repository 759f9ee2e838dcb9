//! Exact univariate quantities for an empirical sample.
//!
//! In one dimension the center-outward quantities reduce to the classical
//! ones, so this module gives closed-form values the multivariate code must
//! reproduce when `d = 1`.

use crate::error::{Error, Result};

/// A sorted univariate sample with exact empirical quantile integrals.
#[derive(Debug, Clone)]
pub struct UnivariateSample {
    sorted: Vec<f64>,
}

impl UnivariateSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::data("empty univariate sample"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("univariate sample contains non-finite entries"));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(UnivariateSample { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Left-continuous inverse of the empirical CDF:
    /// `Q(t) = x_(k)` for `t` in `((k-1)/n, k/n]`.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        check_level(t)?;
        let n = self.sorted.len();
        let k = (t * n as f64).ceil() as usize;
        Ok(self.sorted[k.clamp(1, n) - 1])
    }

    /// `(1/(1-alpha)) * int_alpha^1 Q(t) dt`, integrated exactly over the
    /// step function.
    pub fn superquantile(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        Ok(self.upper_integral(alpha) / (1.0 - alpha))
    }

    /// `(1/alpha) * int_0^alpha Q(t) dt`, integrated exactly.
    pub fn expected_shortfall(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        let total: f64 = self.sorted.iter().sum::<f64>() / self.sorted.len() as f64;
        Ok((total - self.upper_integral(alpha)) / alpha)
    }

    fn upper_integral(&self, alpha: f64) -> f64 {
        let n = self.sorted.len();
        let nf = n as f64;
        let k = ((alpha * nf).ceil() as usize).clamp(1, n);
        let mut acc = self.sorted[k - 1] * (k as f64 / nf - alpha);
        for &x in &self.sorted[k..] {
            acc += x / nf;
        }
        acc
    }

    /// Center-outward quantile at signed level `u` in `(-1, 1)`:
    /// `Q((1 + u) / 2)`.
    pub fn center_outward_quantile(&self, u: f64) -> Result<f64> {
        if !(u > -1.0 && u < 1.0) {
            return Err(Error::parameter(format!(
                "signed level must lie strictly in (-1,1), got {u}"
            )));
        }
        self.quantile((1.0 + u) / 2.0)
    }

    /// Center-outward rank in `[-1, 1]`: `2 F(x) - 1` with the empirical CDF.
    pub fn center_outward_rank(&self, x: f64) -> f64 {
        let count = self.sorted.iter().filter(|&&v| v <= x).count();
        2.0 * count as f64 / self.sorted.len() as f64 - 1.0
    }
}

fn check_level(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::parameter(format!(
            "level must lie strictly in (0,1), got {t}"
        )));
    }
    Ok(())
}
