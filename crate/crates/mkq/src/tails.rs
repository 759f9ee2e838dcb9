//! Radial tail functionals: superquantiles and expected shortfalls.
//!
//! Along the reference ray through `u = r * dir` these average the quantile
//! map over the outer segment `[r, 1]` (superquantile) or the inner segment
//! `[0, r]` (shortfall). Both use the midpoint rule, which is exact for
//! affine integrands, and both share their partitions with the
//! decomposition check so the weighted recombination is exact by
//! construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{check_level, Contour, QuantileMap};
use crate::reference::{radial_grid, DirectionGrid};

/// Which radial functional a contour or curve traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContourKind {
    Quantile,
    Superquantile,
    Shortfall,
}

/// Discretization of the radial integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    /// Midpoint-rule steps per radial segment.
    pub radial_steps: usize,
    /// Lower truncation of the inner integral.
    pub r_min: f64,
    /// Upper truncation of the outer integral.
    pub r_max: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            radial_steps: 128,
            r_min: 0.0,
            r_max: 1.0,
        }
    }
}

impl TailOptions {
    fn validate(&self) -> Result<()> {
        if self.radial_steps == 0 {
            return Err(Error::parameter("radial step count must be at least 1"));
        }
        if !(0.0 <= self.r_min && self.r_min < self.r_max && self.r_max <= 1.0) {
            return Err(Error::parameter(format!(
                "radial truncation must satisfy 0 <= r_min < r_max <= 1, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }
}

fn ray(map: &dyn QuantileMap, u: &[f64]) -> Result<(f64, Vec<f64>)> {
    if u.len() != map.dim() {
        return Err(Error::parameter("dimension mismatch"));
    }
    let r = map.gauge(u);
    check_level(r).map_err(|_| {
        Error::parameter(format!(
            "tail functionals need a reference point with gauge strictly in (0,1), got {r}"
        ))
    })?;
    Ok((r, u.iter().map(|c| c / r).collect()))
}

fn segment_mean(
    map: &dyn QuantileMap,
    dir: &[f64],
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; map.dim()];
    for t in radial_grid(steps, lo, hi)? {
        let point: Vec<f64> = dir.iter().map(|c| c * t).collect();
        let q = map.quantile(&point)?;
        for (a, qi) in acc.iter_mut().zip(&q) {
            *a += qi;
        }
    }
    for a in &mut acc {
        *a /= steps as f64;
    }
    Ok(acc)
}

/// Center-outward superquantile
/// `S(u) = (1/(1-r)) int_r^1 Q(t * dir) dt` with `r` the gauge of `u`.
pub fn superquantile(map: &dyn QuantileMap, u: &[f64], opts: &TailOptions) -> Result<Vec<f64>> {
    opts.validate()?;
    let (r, dir) = ray(map, u)?;
    if r >= opts.r_max {
        return Err(Error::parameter(format!(
            "gauge {r} is not below the outer truncation {}",
            opts.r_max
        )));
    }
    let mean = segment_mean(map, &dir, r, opts.r_max, opts.radial_steps)?;
    let scale = (opts.r_max - r) / (1.0 - r);
    Ok(mean.iter().map(|m| m * scale).collect())
}

/// Center-outward expected shortfall
/// `E(u) = (1/r) int_0^r Q(t * dir) dt`.
pub fn expected_shortfall(map: &dyn QuantileMap, u: &[f64], opts: &TailOptions) -> Result<Vec<f64>> {
    opts.validate()?;
    let (r, dir) = ray(map, u)?;
    if r <= opts.r_min {
        return Err(Error::parameter(format!(
            "gauge {r} is not above the inner truncation {}",
            opts.r_min
        )));
    }
    let mean = segment_mean(map, &dir, opts.r_min, r, opts.radial_steps)?;
    let scale = (r - opts.r_min) / r;
    Ok(mean.iter().map(|m| m * scale).collect())
}

/// Componentwise residual of the exact identity
/// `r E(u) + (1-r) S(u) = int_0^1 Q(t * dir) dt`.
///
/// All three terms are evaluated on the same partitioned radial grid, so the
/// residual isolates floating-point error rather than discretization error.
pub fn decomposition_residual(map: &dyn QuantileMap, u: &[f64], opts: &TailOptions) -> Result<f64> {
    opts.validate()?;
    let (r, dir) = ray(map, u)?;
    let inner = segment_mean(map, &dir, opts.r_min, r, opts.radial_steps)?;
    let outer = segment_mean(map, &dir, r, opts.r_max, opts.radial_steps)?;
    let e_scale = (r - opts.r_min) / r;
    let s_scale = (opts.r_max - r) / (1.0 - r);
    let mut worst = 0.0f64;
    for k in 0..map.dim() {
        let e = inner[k] * e_scale;
        let s = outer[k] * s_scale;
        // The same two partial sums, recombined with the complementary weights.
        let total = inner[k] * (r - opts.r_min) + outer[k] * (opts.r_max - r);
        worst = worst.max((r * e + (1.0 - r) * s - total).abs());
    }
    Ok(worst)
}

/// Contour of the chosen functional at the given level, one vertex per
/// direction.
pub fn tail_contour(
    map: &dyn QuantileMap,
    kind: ContourKind,
    level: f64,
    directions: &DirectionGrid,
    opts: &TailOptions,
) -> Result<Contour> {
    check_level(level)?;
    let vertices = directions
        .iter()
        .map(|dir| {
            let norm = map.gauge(dir);
            let u: Vec<f64> = dir.iter().map(|c| c / norm * level).collect();
            match kind {
                ContourKind::Quantile => map.quantile(&u),
                ContourKind::Superquantile => superquantile(map, &u, opts),
                ContourKind::Shortfall => expected_shortfall(map, &u, opts),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Contour { level, vertices })
}

/// The chosen functional along one ray, sampled at `steps` interior levels.
pub fn tail_curve(
    map: &dyn QuantileMap,
    kind: ContourKind,
    direction: &[f64],
    steps: usize,
    opts: &TailOptions,
) -> Result<Vec<Vec<f64>>> {
    if direction.len() != map.dim() {
        return Err(Error::parameter("direction dimension mismatch"));
    }
    let norm = map.gauge(direction);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::parameter("direction must be nonzero and finite"));
    }
    radial_grid(steps, 0.0, 1.0)?
        .iter()
        .map(|&r| {
            let u: Vec<f64> = direction.iter().map(|c| c / norm * r).collect();
            match kind {
                ContourKind::Quantile => map.quantile(&u),
                ContourKind::Superquantile => superquantile(map, &u, opts),
                ContourKind::Shortfall => expected_shortfall(map, &u, opts),
            }
        })
        .collect()
}
