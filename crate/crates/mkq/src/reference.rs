//! Reference measures on unit balls and their discretizations.
//!
//! The spherical uniform puts a uniform radius against a uniform direction,
//! so the ball of radius `alpha` always has probability `alpha`. The
//! q-spherical conjugate family replaces the Euclidean sphere by the image
//! of the p-sphere under the component-wise power `p - 1`, and positive
//! variants restrict everything to the first orthant.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Which measure on the unit ball plays the role of the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ReferenceSpec {
    /// Spherical uniform `U_d`: uniform radius times uniform direction.
    SphericalUniform { d: usize },
    /// q-spherical conjugate `U_{d,q}` with Holder exponent `q = p/(p-1)`.
    QConjugate { d: usize, p: f64 },
    /// Restriction of `U_d` to the positive orthant.
    SphericalUniformPositive { d: usize },
    /// Restriction of `U_{d,q}` to the positive orthant.
    QConjugatePositive { d: usize, p: f64 },
}

impl ReferenceSpec {
    pub fn spherical(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::parameter("dimension must be at least 1"));
        }
        Ok(ReferenceSpec::SphericalUniform { d })
    }

    pub fn spherical_positive(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::parameter("dimension must be at least 1"));
        }
        Ok(ReferenceSpec::SphericalUniformPositive { d })
    }

    pub fn q_conjugate(d: usize, p: f64) -> Result<Self> {
        Self::check_p(d, p)?;
        Ok(ReferenceSpec::QConjugate { d, p })
    }

    pub fn q_conjugate_positive(d: usize, p: f64) -> Result<Self> {
        Self::check_p(d, p)?;
        Ok(ReferenceSpec::QConjugatePositive { d, p })
    }

    fn check_p(d: usize, p: f64) -> Result<()> {
        if d == 0 {
            return Err(Error::parameter("dimension must be at least 1"));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::parameter(format!(
                "conjugate reference requires p > 1, got {p}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match *self {
            ReferenceSpec::SphericalUniform { d }
            | ReferenceSpec::QConjugate { d, .. }
            | ReferenceSpec::SphericalUniformPositive { d }
            | ReferenceSpec::QConjugatePositive { d, .. } => d,
        }
    }

    pub fn p(&self) -> Option<f64> {
        match *self {
            ReferenceSpec::QConjugate { p, .. } | ReferenceSpec::QConjugatePositive { p, .. } => {
                Some(p)
            }
            _ => None,
        }
    }

    /// Holder conjugate `q = p/(p-1)`, derived and never stored; 2 for the
    /// spherical kinds.
    pub fn q(&self) -> f64 {
        match self.p() {
            Some(p) => p / (p - 1.0),
            None => 2.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        matches!(
            self,
            ReferenceSpec::SphericalUniformPositive { .. }
                | ReferenceSpec::QConjugatePositive { .. }
        )
    }

    pub fn is_conjugate(&self) -> bool {
        self.p().is_some()
    }

    /// Norm that indexes the reference's level sets: the 2-norm for the
    /// spherical kinds and the q-norm for the conjugate kinds.
    pub fn gauge(&self, u: &[f64]) -> f64 {
        lp_norm(u, self.q())
    }
}

/// Deterministic set of unit directions used to trace contours.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid {
    directions: Vec<Vec<f64>>,
}

impl DirectionGrid {
    pub fn m(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.directions.iter()
    }
}

pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if (p - 2.0).abs() < 1e-14 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Draws `n` samples of the reference measure in the unit ball.
pub fn sample_reference(spec: &ReferenceSpec, n: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_reference_with_rng(spec, n, &mut rng)
}

pub(crate) fn sample_reference_with_rng(
    spec: &ReferenceSpec,
    n: usize,
    rng: &mut ChaCha12Rng,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::parameter("sample count must be at least 1"));
    }
    let d = spec.dim();
    let positive = spec.is_positive();
    let mut flat = Vec::with_capacity(n * d);
    match spec {
        ReferenceSpec::SphericalUniform { .. } | ReferenceSpec::SphericalUniformPositive { .. } => {
            for _ in 0..n {
                let dir = euclidean_direction(d, positive, rng);
                let r: f64 = rng.random();
                flat.extend(dir.iter().map(|c| r * c));
            }
        }
        ReferenceSpec::QConjugate { p, .. } | ReferenceSpec::QConjugatePositive { p, .. } => {
            let gamma = Gamma::new(1.0 / p, 1.0)
                .map_err(|e| Error::parameter(format!("invalid Gamma shape: {e}")))?;
            for _ in 0..n {
                let psi = lp_direction(d, *p, positive, &gamma, rng);
                // Phi = Psi^{(p-1)} component-wise, sign preserved; this
                // lands on the unit q-sphere since |psi_i|^{(p-1)q} = |psi_i|^p.
                let r: f64 = rng.random();
                flat.extend(psi.iter().map(|&c| r * signed_pow(c, p - 1.0)));
            }
        }
    }
    PointCloud::from_flat(n, d, flat)
}

/// Uniform samples on the unit p-sphere (positive orthant when `positive`).
///
/// Each sample is `X / ||X||_p` with independent `L_p` components, so
/// `X_i^p ~ Gamma(1/p, 1)`; signs are attached per coordinate otherwise.
pub fn lp_sphere_sample(
    d: usize,
    p: f64,
    n: usize,
    seed: u64,
    positive: bool,
) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Err(Error::parameter("dimension must be at least 1"));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::parameter(format!("p must be positive, got {p}")));
    }
    if n == 0 {
        return Err(Error::parameter("sample count must be at least 1"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let gamma = Gamma::new(1.0 / p, 1.0)
        .map_err(|e| Error::parameter(format!("invalid Gamma shape: {e}")))?;
    Ok((0..n)
        .map(|_| lp_direction(d, p, positive, &gamma, &mut rng))
        .collect())
}

fn lp_direction(
    d: usize,
    p: f64,
    positive: bool,
    gamma: &Gamma<f64>,
    rng: &mut ChaCha12Rng,
) -> Vec<f64> {
    let mut x: Vec<f64> = (0..d)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let v = g.powf(1.0 / p);
            if positive || rng.random::<bool>() {
                v
            } else {
                -v
            }
        })
        .collect();
    let norm = lp_norm(&x, p);
    for c in &mut x {
        *c /= norm;
    }
    x
}

fn euclidean_direction(d: usize, positive: bool, rng: &mut ChaCha12Rng) -> Vec<f64> {
    loop {
        let mut dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = lp_norm(&dir, 2.0);
        if norm < 1e-300 {
            continue;
        }
        for c in &mut dir {
            *c /= norm;
            // Reflections preserve uniformity on the sphere, so folding into
            // the orthant samples it directly, never by rejection.
            if positive {
                *c = c.abs();
            }
        }
        return dir;
    }
}

fn signed_pow(x: f64, e: f64) -> f64 {
    x.signum() * x.abs().powf(e)
}

/// Deterministic grid of unit directions for the given reference.
///
/// d=2 uses equally spaced angles, d=3 a Fibonacci lattice, higher
/// dimensions a seeded normalized-Gaussian set. Conjugate kinds renormalize
/// to unit q-norm; positive kinds fold into the first orthant.
pub fn direction_grid(spec: &ReferenceSpec, m: usize) -> Result<DirectionGrid> {
    if m == 0 {
        return Err(Error::parameter("direction count must be at least 1"));
    }
    let d = spec.dim();
    let positive = spec.is_positive();
    let mut dirs: Vec<Vec<f64>> = match d {
        1 => {
            if positive || m == 1 {
                vec![vec![1.0]]
            } else {
                vec![vec![1.0], vec![-1.0]]
            }
        }
        2 => (0..m)
            .map(|j| {
                let theta = if positive {
                    if m == 1 {
                        std::f64::consts::FRAC_PI_4
                    } else {
                        std::f64::consts::FRAC_PI_2 * j as f64 / (m - 1) as f64
                    }
                } else {
                    2.0 * std::f64::consts::PI * j as f64 / m as f64
                };
                vec![theta.cos(), theta.sin()]
            })
            .collect(),
        3 => {
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (0..m)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / m as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = 2.0 * std::f64::consts::PI * (j as f64 / golden).fract();
                    let mut v = vec![rho * phi.cos(), rho * phi.sin(), z];
                    if positive {
                        for c in &mut v {
                            *c = c.abs();
                        }
                    }
                    v
                })
                .collect()
        }
        _ => {
            // No uniform deterministic lattice exists in general dimension;
            // fall back to a seeded normalized-Gaussian set.
            let mut rng = ChaCha12Rng::seed_from_u64(0x6d6b_7164 ^ m as u64);
            (0..m)
                .map(|_| euclidean_direction(d, positive, &mut rng))
                .collect()
        }
    };
    if spec.is_conjugate() {
        let q = spec.q();
        for v in &mut dirs {
            let norm = lp_norm(v, q);
            for c in v.iter_mut() {
                *c /= norm;
            }
        }
    }
    Ok(DirectionGrid { directions: dirs })
}

/// `k` midpoint-rule nodes on `[r_min, r_max]`.
pub fn radial_grid(k: usize, r_min: f64, r_max: f64) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::parameter("radial step count must be at least 1"));
    }
    if !(0.0 <= r_min && r_min < r_max && r_max <= 1.0) {
        return Err(Error::parameter(format!(
            "radial bounds must satisfy 0 <= r_min < r_max <= 1, got [{r_min}, {r_max}]"
        )));
    }
    let h = (r_max - r_min) / k as f64;
    Ok((0..k).map(|j| r_min + (j as f64 + 0.5) * h).collect())
}
