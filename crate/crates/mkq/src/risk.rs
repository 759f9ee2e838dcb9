//! Vector-valued and scalar multivariate risk measures, plus synthetic
//! scenario generators for qualitative comparisons.
//!
//! The Vector-at-Risk at level `alpha` is the vertex of the quantile contour
//! maximizing the 1-norm; its conditional counterpart maximizes over the
//! superquantile contour. The scalar measures are the attained 1-norms, so a
//! report is internally consistent by construction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::maps::{quantile_contour, QuantileMap};
use crate::reference::{lp_norm, DirectionGrid, ReferenceSpec};
use crate::solver::FittedPotential;
use crate::tails::{tail_contour, ContourKind, TailOptions};

/// Risk summary at one level; `rho_q` and `rho_s` equal the 1-norms of the
/// two vectors exactly (same grid, same tie-break).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskReport {
    pub alpha: f64,
    pub vector_at_risk: Vec<f64>,
    pub conditional_vector_at_risk: Vec<f64>,
    pub rho_q: f64,
    pub rho_s: f64,
    pub reference: ReferenceSpec,
    pub grid_size: usize,
}

fn argmax_one_norm(vertices: &[Vec<f64>]) -> (usize, f64) {
    // Ties break to the smallest index for determinism.
    let mut best = 0;
    let mut best_norm = f64::NEG_INFINITY;
    for (i, v) in vertices.iter().enumerate() {
        let norm = lp_norm(v, 1.0);
        if norm > best_norm {
            best = i;
            best_norm = norm;
        }
    }
    (best, best_norm)
}

/// Vertex of the `alpha` quantile contour with maximal 1-norm.
pub fn vector_at_risk(
    map: &dyn QuantileMap,
    alpha: f64,
    grid: &DirectionGrid,
) -> Result<Vec<f64>> {
    let contour = quantile_contour(map, alpha, grid)?;
    let (i, _) = argmax_one_norm(&contour.vertices);
    Ok(contour.vertices[i].clone())
}

/// Vertex of the `alpha` superquantile contour with maximal 1-norm.
pub fn conditional_vector_at_risk(
    map: &dyn QuantileMap,
    alpha: f64,
    grid: &DirectionGrid,
    opts: &TailOptions,
) -> Result<Vec<f64>> {
    let contour = tail_contour(map, ContourKind::Superquantile, alpha, grid, opts)?;
    let (i, _) = argmax_one_norm(&contour.vertices);
    Ok(contour.vertices[i].clone())
}

/// Scalar quantile-based risk: the 1-norm attained by [`vector_at_risk`].
pub fn rho_q(map: &dyn QuantileMap, alpha: f64, grid: &DirectionGrid) -> Result<f64> {
    let contour = quantile_contour(map, alpha, grid)?;
    Ok(argmax_one_norm(&contour.vertices).1)
}

/// Scalar superquantile-based risk: the 1-norm attained by
/// [`conditional_vector_at_risk`].
pub fn rho_s(
    map: &dyn QuantileMap,
    alpha: f64,
    grid: &DirectionGrid,
    opts: &TailOptions,
) -> Result<f64> {
    let contour = tail_contour(map, ContourKind::Superquantile, alpha, grid, opts)?;
    Ok(argmax_one_norm(&contour.vertices).1)
}

/// Full per-level report for a fitted potential.
pub fn risk_report(
    potential: &FittedPotential,
    alpha: f64,
    grid: &DirectionGrid,
    opts: &TailOptions,
) -> Result<RiskReport> {
    let q_contour = quantile_contour(potential, alpha, grid)?;
    let s_contour = tail_contour(potential, ContourKind::Superquantile, alpha, grid, opts)?;
    let (qi, rho_q) = argmax_one_norm(&q_contour.vertices);
    let (si, rho_s) = argmax_one_norm(&s_contour.vertices);
    Ok(RiskReport {
        alpha,
        vector_at_risk: q_contour.vertices[qi].clone(),
        conditional_vector_at_risk: s_contour.vertices[si].clone(),
        rho_q,
        rho_s,
        reference: *potential.reference(),
        grid_size: grid.m(),
    })
}

/// Default contour resolution per dimension.
pub fn default_direction_count(d: usize) -> usize {
    match d {
        0..=2 => 512,
        3 => 2048,
        _ => 4096,
    }
}

/// Synthetic bivariate scenarios for qualitative risk comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSpec {
    /// Same mean, covariances `Sigma` and `scale * Sigma`.
    GaussianScaledCov { n: usize, scale: f64, seed: u64 },
    /// Base cloud vs the same cloud with a fraction of points pushed out to
    /// the given radius.
    GaussianOutliers {
        n: usize,
        fraction: f64,
        radius: f64,
        seed: u64,
    },
    /// Base cloud vs the same cloud shifted by `b`.
    GaussianShift { n: usize, shift: Vec<f64>, seed: u64 },
    /// Anisotropic pair: elongated along the first axis vs the second.
    GaussianDirectional {
        n: usize,
        elongation: f64,
        seed: u64,
    },
    /// Single crescent-shaped cloud: `(x, y + curvature * x^2)`.
    Banana { n: usize, curvature: f64, seed: u64 },
}

/// Output of a generator: one cloud, or a base/variant pair to compare.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Single(PointCloud),
    Pair(PointCloud, PointCloud),
}

impl Scenario {
    pub fn first(&self) -> &PointCloud {
        match self {
            Scenario::Single(c) | Scenario::Pair(c, _) => c,
        }
    }

    pub fn second(&self) -> Option<&PointCloud> {
        match self {
            Scenario::Single(_) => None,
            Scenario::Pair(_, c) => Some(c),
        }
    }
}

fn gaussian_flat(n: usize, d: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Deterministic scenario generation given the embedded seed.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    let check_n = |n: usize| {
        if n < 10 {
            Err(Error::parameter("scenario size must be at least 10"))
        } else {
            Ok(())
        }
    };
    match spec {
        ScenarioSpec::GaussianScaledCov { n, scale, seed } => {
            check_n(*n)?;
            if !(*scale > 0.0) || !scale.is_finite() {
                return Err(Error::parameter("covariance scale must be positive"));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            let base = PointCloud::from_flat(*n, 2, gaussian_flat(*n, 2, &mut rng))?;
            let sd = scale.sqrt();
            let scaled_flat: Vec<f64> =
                gaussian_flat(*n, 2, &mut rng).iter().map(|x| sd * x).collect();
            Ok(Scenario::Pair(base, PointCloud::from_flat(*n, 2, scaled_flat)?))
        }
        ScenarioSpec::GaussianOutliers {
            n,
            fraction,
            radius,
            seed,
        } => {
            check_n(*n)?;
            if !(0.0..=1.0).contains(fraction) {
                return Err(Error::parameter("outlier fraction must lie in [0,1]"));
            }
            if !(*radius >= 0.0) || !radius.is_finite() {
                return Err(Error::parameter("outlier radius must be non-negative"));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            let flat = gaussian_flat(*n, 2, &mut rng);
            let base = PointCloud::from_flat(*n, 2, flat.clone())?;
            let k = (fraction * *n as f64).floor() as usize;
            let mut flat2 = flat;
            for i in 0..k {
                let theta = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
                flat2[2 * i] += radius * theta.cos();
                flat2[2 * i + 1] += radius * theta.sin();
            }
            Ok(Scenario::Pair(base, PointCloud::from_flat(*n, 2, flat2)?))
        }
        ScenarioSpec::GaussianShift { n, shift, seed } => {
            check_n(*n)?;
            if shift.len() != 2 {
                return Err(Error::parameter("shift must be 2-dimensional"));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            let base = PointCloud::from_flat(*n, 2, gaussian_flat(*n, 2, &mut rng))?;
            let shifted = base.affine(1.0, shift)?;
            Ok(Scenario::Pair(base, shifted))
        }
        ScenarioSpec::GaussianDirectional { n, elongation, seed } => {
            check_n(*n)?;
            if !(*elongation > 0.0) || !elongation.is_finite() {
                return Err(Error::parameter("elongation must be positive"));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            let a = gaussian_flat(*n, 2, &mut rng);
            let b = gaussian_flat(*n, 2, &mut rng);
            let first: Vec<f64> = a
                .chunks_exact(2)
                .flat_map(|xy| [elongation * xy[0], xy[1]])
                .collect();
            let second: Vec<f64> = b
                .chunks_exact(2)
                .flat_map(|xy| [xy[0], elongation * xy[1]])
                .collect();
            Ok(Scenario::Pair(
                PointCloud::from_flat(*n, 2, first)?,
                PointCloud::from_flat(*n, 2, second)?,
            ))
        }
        ScenarioSpec::Banana { n, curvature, seed } => {
            check_n(*n)?;
            if !curvature.is_finite() {
                return Err(Error::parameter("curvature must be finite"));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            let flat: Vec<f64> = gaussian_flat(*n, 2, &mut rng)
                .chunks_exact(2)
                .flat_map(|xy| [xy[0], xy[1] + curvature * xy[0] * xy[0]])
                .collect();
            Ok(Scenario::Single(PointCloud::from_flat(*n, 2, flat)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::IdentityMap;
    use crate::reference::direction_grid;

    fn spherical_grid(m: usize) -> DirectionGrid {
        direction_grid(&ReferenceSpec::spherical(2).unwrap(), m).unwrap()
    }

    #[test]
    fn identity_rho_q_converges_to_half_sqrt_d() {
        // Max of |u|_1 on the radius-1/2 circle is 0.5 * sqrt(2).
        let map = IdentityMap::new(2);
        let rho = rho_q(&map, 0.5, &spherical_grid(2048)).unwrap();
        assert!((rho - 0.5 * 2f64.sqrt()).abs() < 1e-3, "rho = {rho}");
    }

    #[test]
    fn report_is_internally_consistent() {
        let map = IdentityMap::new(2);
        let grid = spherical_grid(64);
        let opts = TailOptions::default();
        let var = vector_at_risk(&map, 0.5, &grid).unwrap();
        let cvar = conditional_vector_at_risk(&map, 0.5, &grid, &opts).unwrap();
        assert_eq!(rho_q(&map, 0.5, &grid).unwrap(), lp_norm(&var, 1.0));
        assert_eq!(rho_s(&map, 0.5, &grid, &opts).unwrap(), lp_norm(&cvar, 1.0));
        // S-contour encloses the Q-contour for the identity map.
        assert!(lp_norm(&cvar, 1.0) >= lp_norm(&var, 1.0));
    }

    #[test]
    fn rho_q_monotone_in_grid_and_level() {
        let map = IdentityMap::new(2);
        // Nested grids: equally spaced angle sets at m and 4m.
        let coarse = rho_q(&map, 0.5, &spherical_grid(16)).unwrap();
        let fine = rho_q(&map, 0.5, &spherical_grid(64)).unwrap();
        assert!(fine >= coarse - 1e-15);
        let grid = spherical_grid(128);
        let mut prev = 0.0;
        for a in [0.2, 0.4, 0.6, 0.8] {
            let r = rho_q(&map, a, &grid).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn scenario_trivial_cases() {
        let zero_shift = generate_scenario(&ScenarioSpec::GaussianShift {
            n: 50,
            shift: vec![0.0, 0.0],
            seed: 1,
        })
        .unwrap();
        assert_eq!(zero_shift.first(), zero_shift.second().unwrap());

        let no_outliers = generate_scenario(&ScenarioSpec::GaussianOutliers {
            n: 50,
            fraction: 0.0,
            radius: 10.0,
            seed: 2,
        })
        .unwrap();
        assert_eq!(no_outliers.first(), no_outliers.second().unwrap());
    }

    #[test]
    fn scenario_determinism_and_shapes() {
        let spec = ScenarioSpec::Banana {
            n: 2000,
            curvature: 0.5,
            seed: 3,
        };
        let a = generate_scenario(&spec).unwrap();
        let b = generate_scenario(&spec).unwrap();
        assert_eq!(a, b);
        // The crescent bends upward: mean of y is E[y + c x^2] = c.
        let mean = a.first().mean();
        assert!((mean[1] - 0.5).abs() < 0.1, "mean = {mean:?}");
        assert!(a.second().is_none());

        let pair = generate_scenario(&ScenarioSpec::GaussianDirectional {
            n: 4000,
            elongation: 3.0,
            seed: 4,
        })
        .unwrap();
        let spread = |c: &PointCloud, k: usize| {
            c.rows().map(|r| r[k] * r[k]).sum::<f64>() / c.n() as f64
        };
        assert!(spread(pair.first(), 0) > 4.0 * spread(pair.first(), 1));
        let second = pair.second().unwrap();
        assert!(spread(second, 1) > 4.0 * spread(second, 0));
    }

    #[test]
    fn scenario_validation() {
        assert!(generate_scenario(&ScenarioSpec::Banana {
            n: 5,
            curvature: 0.5,
            seed: 0
        })
        .is_err());
        assert!(generate_scenario(&ScenarioSpec::GaussianOutliers {
            n: 50,
            fraction: 1.5,
            radius: 1.0,
            seed: 0
        })
        .is_err());
        assert!(generate_scenario(&ScenarioSpec::GaussianScaledCov {
            n: 50,
            scale: 0.0,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn scaled_pair_has_larger_spread() {
        let pair = generate_scenario(&ScenarioSpec::GaussianScaledCov {
            n: 5000,
            scale: 4.0,
            seed: 5,
        })
        .unwrap();
        let msq = |c: &PointCloud| {
            c.rows()
                .map(|r| r.iter().map(|x| x * x).sum::<f64>())
                .sum::<f64>()
                / c.n() as f64
        };
        let ratio = msq(pair.second().unwrap()) / msq(pair.first());
        assert!((ratio - 4.0).abs() < 0.5, "ratio = {ratio}");
    }
}
