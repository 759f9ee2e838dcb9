//! Closed-form transport maps for generalized gamma models.
//!
//! For a vector with independent `L_p` components on the positive orthant,
//! the map to and from the conjugate reference `U_{d,q}^+` factors into a
//! component-wise power of the direction and a univariate radial law
//! `G`, the distribution function of the p-norm. This module is the oracle
//! the entropic route is checked against.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma};

use crate::analytic::special::{ln_gamma, reg_incomplete_gamma_pair, reg_lower_incomplete_gamma};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::reference::lp_norm;

/// Product model with i.i.d. `L_p` coordinates in dimension `d`.
///
/// The radial law is `||X||_p` with `||X||_p^p ~ Gamma(d/p, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct GammaModel {
    d: usize,
    p: f64,
}

impl GammaModel {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::parameter("dimension must be at least 1"));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::parameter(format!("gamma model requires p > 1, got {p}")));
        }
        Ok(GammaModel { d, p })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    fn shape(&self) -> f64 {
        self.d as f64 / self.p
    }

    /// `G(r) = P(d/p, r^p)`, the CDF of the radial part.
    pub fn radial_cdf(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::parameter(format!("radius must be >= 0, got {r}")));
        }
        reg_lower_incomplete_gamma(self.shape(), r.powf(self.p))
    }

    fn radial_pdf(&self, r: f64) -> f64 {
        let a = self.shape();
        (self.p.ln() + (self.d as f64 - 1.0) * r.ln() - r.powf(self.p) - ln_gamma(a)).exp()
    }

    /// Inverse radial CDF by bracketed bisection refined by Newton;
    /// guarantees `|G(G^{-1}(t)) - t| <= 1e-12`.
    pub fn radial_quantile(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::parameter(format!(
                "radial quantile level must lie strictly in (0,1), got {t}"
            )));
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        while self.radial_cdf(hi)? < t {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::numerical("radial quantile bracket expansion failed"));
            }
        }
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if self.radial_cdf(mid)? < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut r = 0.5 * (lo + hi);
        for _ in 0..4 {
            let f = self.radial_cdf(r)? - t;
            let df = self.radial_pdf(r);
            if df <= 0.0 {
                break;
            }
            let step = f / df;
            let next = r - step;
            if next > lo && next < hi {
                r = next;
            } else {
                break;
            }
        }
        Ok(r)
    }

    /// `F_q(x) = (x / ||x||_p)^{(p-1)} G(||x||_p)` on the positive orthant.
    pub fn mk_distribution(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x, "distribution input")?;
        let norm = lp_norm(x, self.p);
        let g = self.radial_cdf(norm)?;
        Ok(x.iter().map(|&c| (c / norm).powf(self.p - 1.0) * g).collect())
    }

    /// `Q_q(u) = (u / ||u||_q)^{(q-1)} G^{-1}(||u||_q)`, the inverse of
    /// `mk_distribution`.
    pub fn mk_quantile(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u, "quantile input")?;
        let q = self.q();
        let norm = lp_norm(u, q);
        let r = self.radial_quantile(norm)?;
        Ok(u.iter().map(|&c| (c / norm).powf(q - 1.0) * r).collect())
    }

    /// Mean of the radial law, `Gamma((d+1)/p) / Gamma(d/p)`.
    pub fn radial_mean(&self) -> f64 {
        let a = self.shape();
        (ln_gamma(a + 1.0 / self.p) - ln_gamma(a)).exp()
    }

    /// Partial radial moment `E[R 1{R > r}]` in closed form via the upper
    /// incomplete gamma; used as the analytic tail bound in quadrature.
    fn radial_tail_moment(&self, r: f64) -> Result<f64> {
        let a = self.shape();
        let (_, qreg) = reg_incomplete_gamma_pair(a + 1.0 / self.p, r.powf(self.p))?;
        Ok(self.radial_mean() * qreg)
    }

    /// Univariate superquantile of the radial law,
    /// `(1/(1-alpha)) * int_alpha^1 G^{-1}(t) dt`.
    ///
    /// Adaptive quadrature on `[alpha, 1-delta]` with the closed-form tail
    /// moment for the last sliver, where `G^{-1}` blows up.
    pub fn radial_superquantile(&self, alpha: f64) -> Result<f64> {
        self.check_level(alpha)?;
        let delta = 1e-9;
        let body = if alpha < 1.0 - delta {
            adaptive_simpson(&|t| self.radial_quantile(t).unwrap_or(f64::NAN), alpha, 1.0 - delta, 1e-10)?
        } else {
            0.0
        };
        let tail = self.radial_tail_moment(self.radial_quantile(1.0 - delta.min(1.0 - alpha))?)?;
        Ok((body + tail) / (1.0 - alpha))
    }

    /// Univariate expected shortfall of the radial law,
    /// `(1/alpha) * int_0^alpha G^{-1}(t) dt`.
    pub fn radial_expected_shortfall(&self, alpha: f64) -> Result<f64> {
        self.check_level(alpha)?;
        let integral = adaptive_simpson(
            &|t| {
                if t <= 0.0 {
                    0.0
                } else {
                    self.radial_quantile(t).unwrap_or(f64::NAN)
                }
            },
            0.0,
            alpha,
            1e-10,
        )?;
        Ok(integral / alpha)
    }

    pub fn mk_superquantile(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.tail_map(u, |alpha| self.radial_superquantile(alpha))
    }

    pub fn mk_expected_shortfall(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.tail_map(u, |alpha| self.radial_expected_shortfall(alpha))
    }

    fn tail_map(&self, u: &[f64], radial: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
        self.check_point(u, "tail map input")?;
        let q = self.q();
        let norm = lp_norm(u, q);
        self.check_level(norm)?;
        let r = radial(norm)?;
        Ok(u.iter().map(|&c| (c / norm).powf(q - 1.0) * r).collect())
    }

    /// Draws `n` i.i.d. samples of the model.
    pub fn sample(&self, n: usize, seed: u64) -> Result<PointCloud> {
        if n == 0 {
            return Err(Error::parameter("sample count must be at least 1"));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let gamma = Gamma::new(1.0 / self.p, 1.0)
            .map_err(|e| Error::parameter(format!("invalid Gamma shape: {e}")))?;
        let flat: Vec<f64> = (0..n * self.d)
            .map(|_| gamma.sample(&mut rng).powf(1.0 / self.p))
            .collect();
        PointCloud::from_flat(n, self.d, flat)
    }

    fn check_point(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::parameter(format!("{what}: dimension mismatch")));
        }
        if x.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(Error::parameter(format!(
                "{what}: coordinates must be finite and non-negative"
            )));
        }
        if x.iter().all(|&c| c == 0.0) {
            return Err(Error::parameter(format!("{what}: direction undefined at zero")));
        }
        Ok(())
    }

    fn check_level(&self, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::parameter(format!(
                "level must lie strictly in (0,1), got {alpha}"
            )));
        }
        Ok(())
    }
}

/// Adaptive Simpson with recursive refinement.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, frm, tol / 2.0, depth - 1)
        }
    }
    if a >= b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    let v = recurse(f, a, fa, b, fb, whole, fm, tol, 52);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numerical("adaptive quadrature produced a non-finite value"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::lp_norm;
    use rand::Rng;

    #[test]
    fn exponential_radial_law() {
        // d = p means shape 1: G(r) = 1 - exp(-r^p).
        let m = GammaModel::new(2, 2.0).unwrap();
        for r in [0.2, 0.7, 1.3, 2.4] {
            let g = m.radial_cdf(r).unwrap();
            assert!((g - (1.0 - (-(r * r)).exp())).abs() <= 1e-13);
        }
        for t in [0.1, 0.5, 0.9] {
            let r = m.radial_quantile(t).unwrap();
            assert!((r - (-(1f64 - t).ln()).sqrt()).abs() <= 1e-11);
        }
        assert_eq!(m.radial_cdf(0.0).unwrap(), 0.0);
    }

    #[test]
    fn radial_quantile_roundtrip() {
        let m = GammaModel::new(3, 1.5).unwrap();
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let r = m.radial_quantile(t).unwrap();
            assert!((m.radial_cdf(r).unwrap() - t).abs() <= 1e-12, "t = {t}");
        }
        assert!(m.radial_quantile(0.0).is_err());
        assert!(m.radial_quantile(1.0).is_err());
    }

    #[test]
    fn mk_maps_mutual_inverse() {
        // Moderate radii only: far in the tail the inverse radial CDF is
        // ill-conditioned (1e-12 in probability is large in radius).
        let m = GammaModel::new(3, 2.5).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 1.5 + 1e-3).collect();
            let u = m.mk_distribution(&x).unwrap();
            let back = m.mk_quantile(&u).unwrap();
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn diagonal_p2() {
        let m = GammaModel::new(2, 2.0).unwrap();
        let x = [1.2, 1.2];
        let u = m.mk_distribution(&x).unwrap();
        assert!((u[0] - u[1]).abs() <= 1e-14);
        let norm = lp_norm(&u, 2.0);
        assert!((norm - m.radial_cdf(lp_norm(&x, 2.0)).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn pushforward_radius_uniform() {
        // ||F_q(X)||_q = G(||X||_p) must be uniform on [0,1].
        let m = GammaModel::new(2, 1.5).unwrap();
        let n = 100_000;
        let cloud = m.sample(n, 42).unwrap();
        let mut radii: Vec<f64> = cloud
            .rows()
            .map(|x| m.radial_cdf(lp_norm(x, 1.5)).unwrap())
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = ks_uniform(&radii);
        assert!(ks < 1.95 / (n as f64).sqrt(), "ks = {ks}");
    }

    #[test]
    fn radial_decomposition_and_ordering() {
        // alpha*E + (1-alpha)*S recovers the radial mean, and the shortfall /
        // quantile / superquantile ordering is strict.
        for (d, p) in [(2usize, 2.0f64), (3, 1.5), (2, 5.0)] {
            let m = GammaModel::new(d, p).unwrap();
            let mean = m.radial_mean();
            for alpha in [0.1, 0.25, 0.5, 0.75, 0.9] {
                let s = m.radial_superquantile(alpha).unwrap();
                let e = m.radial_expected_shortfall(alpha).unwrap();
                let q = m.radial_quantile(alpha).unwrap();
                assert!(
                    (alpha * e + (1.0 - alpha) * s - mean).abs() <= 1e-8,
                    "d={d} p={p} alpha={alpha}"
                );
                assert!(e < q && q < s);
            }
        }
    }

    #[test]
    fn radial_mean_monte_carlo() {
        let m = GammaModel::new(3, 2.0).unwrap();
        let cloud = m.sample(200_000, 9).unwrap();
        let mc: f64 = cloud.rows().map(|x| lp_norm(x, 2.0)).sum::<f64>() / 200_000.0;
        assert!((mc - m.radial_mean()).abs() < 5e-3);
    }

    #[test]
    fn distribution_map_is_monotone() {
        // F_q is the gradient of a convex potential.
        let m = GammaModel::new(2, 3.0).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 2.0 + 1e-3).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 2.0 + 1e-3).collect();
            let fx = m.mk_distribution(&x).unwrap();
            let fy = m.mk_distribution(&y).unwrap();
            let dot: f64 = fx
                .iter()
                .zip(&fy)
                .zip(x.iter().zip(&y))
                .map(|((fa, fb), (a, b))| (fa - fb) * (a - b))
                .sum();
            assert!(dot >= -1e-12);
        }
    }

    #[test]
    fn pushed_direction_uniformity_depends_on_p() {
        // Two-sample KS on first coordinates: pushed directions vs directions
        // of an L_q product model (cone-measure uniform on the q-sphere).
        // Uniform only when p = 2.
        let n = 50_000;
        let crit = 1.63 * (2.0 / n as f64).sqrt(); // 1% level
        for (p, expect_uniform) in [(2.0, true), (3.0, false)] {
            let m = GammaModel::new(2, p).unwrap();
            let q = m.q();
            let pushed: Vec<f64> = m
                .sample(n, 31)
                .unwrap()
                .rows()
                .map(|x| (x[0] / lp_norm(x, p)).powf(p - 1.0))
                .collect();
            let refm = GammaModel::new(2, q).unwrap();
            let reference: Vec<f64> = refm
                .sample(n, 32)
                .unwrap()
                .rows()
                .map(|y| y[0] / lp_norm(y, q))
                .collect();
            let ks = ks_two_sample(pushed, reference);
            if expect_uniform {
                assert!(ks < crit, "p=2 should pass, ks = {ks} crit = {crit}");
            } else {
                assert!(ks > crit, "p=3 should fail, ks = {ks} crit = {crit}");
            }
        }
    }

    #[test]
    fn superquantile_monotone_in_level() {
        let m = GammaModel::new(2, 2.0).unwrap();
        let mut prev = 0.0;
        for i in 1..10 {
            let s = m.radial_superquantile(i as f64 / 10.0).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    fn ks_uniform(sorted: &[f64]) -> f64 {
        let n = sorted.len() as f64;
        sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let hi = (i as f64 + 1.0) / n - v;
                let lo = v - i as f64 / n;
                hi.max(lo)
            })
            .fold(0.0, f64::max)
    }

    fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let mut i = 0;
        let mut j = 0;
        let mut ks = 0.0f64;
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            ks = ks.max((i as f64 / na - j as f64 / nb).abs());
        }
        ks
    }
}
