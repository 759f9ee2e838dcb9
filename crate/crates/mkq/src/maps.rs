//! Forward (quantile) and backward (rank) entropic maps, contours, and
//! sign curves.
//!
//! The fitted dual weights induce a smooth transport map
//! `Q(u) = sum_i x_i g_i(u)` where `g` is the Gibbs conditional over data
//! points. `Q` is the gradient of the convex potential
//! `psi(u) = |u|^2/2 - v^{c,eps}(u)`, normalized here so `psi(0) = 0`, which
//! makes the map monotone and the quantile "contours" nested.

use crate::error::{Error, Result};
use crate::reference::{radial_grid, DirectionGrid};
use crate::solver::{accumulate_gibbs, half_sq_dist, smooth_c_transform_into, FittedPotential};

/// Anything that maps reference points in the unit ball to data space.
///
/// Implemented by the fitted entropic map, by closed-form models, and by the
/// identity (useful for exercising downstream integrals exactly).
pub trait QuantileMap {
    fn dim(&self) -> usize;

    /// Image of a reference point `u` with gauge at most 1.
    fn quantile(&self, u: &[f64]) -> Result<Vec<f64>>;

    /// Norm indexing the reference's nested balls; Euclidean by default.
    fn gauge(&self, u: &[f64]) -> f64 {
        crate::reference::lp_norm(u, 2.0)
    }
}

/// The identity on the unit ball.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMap {
    d: usize,
}

impl IdentityMap {
    pub fn new(d: usize) -> Self {
        IdentityMap { d }
    }
}

impl QuantileMap for IdentityMap {
    fn dim(&self) -> usize {
        self.d
    }

    fn quantile(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.d {
            return Err(Error::parameter("dimension mismatch"));
        }
        Ok(u.to_vec())
    }
}

impl FittedPotential {
    /// Entropic quantile map `Q(u) = sum_i x_i g_i(u)`.
    pub fn quantile(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        let n = self.data().n();
        let d = self.dim();
        let mut g = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        accumulate_gibbs(self.data(), self.weights(), self.epsilon(), u, &mut scratch, &mut g);
        let mut out = vec![0.0; d];
        for (gi, x) in g.iter().zip(self.data().rows()) {
            for (o, xi) in out.iter_mut().zip(x) {
                *o += gi * xi;
            }
        }
        Ok(out)
    }

    /// Convex potential `psi(u) = |u|^2/2 - v^{c,eps}(u)`, shifted so
    /// `psi(0) = 0`; its gradient is [`FittedPotential::quantile`].
    pub fn potential(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        let mut scratch = vec![0.0; self.data().n()];
        let ct = smooth_c_transform_into(self.data(), self.weights(), self.epsilon(), u, &mut scratch);
        Ok(0.5 * u.iter().map(|x| x * x).sum::<f64>() - ct - self.psi_zero())
    }

    /// Backward (center-outward rank) map: the barycenter of a frozen
    /// reference grid under the Gibbs conditional given `x`.
    pub fn rank(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::parameter("dimension mismatch"));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::parameter("rank input must be finite"));
        }
        let (grid, a) = self.backward_grid();
        let eps = self.epsilon();
        let mut terms: Vec<f64> = grid
            .rows()
            .zip(a)
            .map(|(u, aj)| (aj - half_sq_dist(u, x)) / eps)
            .collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for t in &mut terms {
            *t = if *t >= max - 45.0 { (*t - max).exp() } else { 0.0 };
            total += *t;
        }
        let mut out = vec![0.0; self.dim()];
        for (w, u) in terms.iter().zip(grid.rows()) {
            for (o, ui) in out.iter_mut().zip(u) {
                *o += w * ui / total;
            }
        }
        Ok(out)
    }

    /// Center-outward rank (gauge of the backward image) and sign (its
    /// direction). Near the median the direction is numerically undefined
    /// and flagged as such.
    pub fn rank_sign(&self, x: &[f64]) -> Result<RankSign> {
        let image = self.rank(x)?;
        let rank = self.reference().gauge(&image);
        if rank < 1e-12 {
            return Ok(RankSign {
                rank,
                sign: vec![0.0; self.dim()],
                direction_defined: false,
            });
        }
        Ok(RankSign {
            rank,
            sign: image.iter().map(|c| c / rank).collect(),
            direction_defined: true,
        })
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::parameter(format!(
                "expected a {}-dimensional point, got {}",
                self.dim(),
                u.len()
            )));
        }
        if u.iter().any(|c| !c.is_finite()) {
            return Err(Error::parameter("reference point must be finite"));
        }
        Ok(())
    }
}

impl QuantileMap for FittedPotential {
    fn dim(&self) -> usize {
        FittedPotential::dim(self)
    }

    fn quantile(&self, u: &[f64]) -> Result<Vec<f64>> {
        FittedPotential::quantile(self, u)
    }

    fn gauge(&self, u: &[f64]) -> f64 {
        self.reference().gauge(u)
    }
}

impl QuantileMap for crate::analytic::GammaModel {
    fn dim(&self) -> usize {
        crate::analytic::GammaModel::dim(self)
    }

    fn quantile(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.mk_quantile(u)
    }

    fn gauge(&self, u: &[f64]) -> f64 {
        crate::reference::lp_norm(u, self.q())
    }
}

/// Polar decomposition of a backward-map image: how far out (rank) and in
/// which direction (sign).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RankSign {
    /// Gauge of the backward image, in `[0, 1]` up to solver error.
    pub rank: f64,
    /// Unit direction in the reference's gauge norm; zeros when undefined.
    pub sign: Vec<f64>,
    /// False within 1e-12 of the median, where the direction degenerates.
    pub direction_defined: bool,
}

/// A closed polyline (or point set in higher dimension) tracing the image of
/// a reference sphere of the given level.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Contour {
    pub level: f64,
    pub vertices: Vec<Vec<f64>>,
}

/// Image of the reference sphere `{gauge = level}` under the map, one vertex
/// per direction.
pub fn quantile_contour(
    map: &dyn QuantileMap,
    level: f64,
    directions: &DirectionGrid,
) -> Result<Contour> {
    check_level(level)?;
    let vertices = directions
        .iter()
        .map(|dir| {
            let u: Vec<f64> = dir.iter().map(|c| c * level).collect();
            map.quantile(&u)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Contour { level, vertices })
}

/// Image of the radial segment along one direction: the quantile "sign
/// curve" `r -> Q(r * dir)` sampled at `steps` midpoints up to `r_max`.
pub fn sign_curve(
    map: &dyn QuantileMap,
    direction: &[f64],
    steps: usize,
    r_max: f64,
) -> Result<Vec<Vec<f64>>> {
    if direction.len() != map.dim() {
        return Err(Error::parameter("direction dimension mismatch"));
    }
    let norm = map.gauge(direction);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::parameter("direction must be nonzero and finite"));
    }
    radial_grid(steps, 0.0, r_max)?
        .iter()
        .map(|&r| {
            let u: Vec<f64> = direction.iter().map(|c| c / norm * r).collect();
            map.quantile(&u)
        })
        .collect()
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::parameter(format!(
            "contour level must lie strictly in (0,1), got {level}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;
    use crate::reference::{direction_grid, sample_reference, ReferenceSpec};
    use crate::solver::{solve_semidual, SolveOptions};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn fitted(n: usize, eps: f64, seed: u64) -> FittedPotential {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let flat: Vec<f64> = (0..n * 2)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let data = PointCloud::from_flat(n, 2, flat).unwrap();
        let spec = ReferenceSpec::spherical(2).unwrap();
        let opts = SolveOptions {
            iterations: 400,
            reference_points: Some(1500),
            tolerance: 1e-9,
            seed: seed ^ 1,
            ..SolveOptions::default()
        };
        solve_semidual(data, spec, eps, &opts).unwrap()
    }

    #[test]
    fn quantile_is_gradient_of_potential() {
        let fit = fitted(40, 0.2, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..20 {
            let u: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 1.6 - 0.8).collect();
            let q = fit.quantile(&u).unwrap();
            let h = 1e-6;
            for k in 0..2 {
                let mut up = u.clone();
                up[k] += h;
                let mut um = u.clone();
                um[k] -= h;
                let fd = (fit.potential(&up).unwrap() - fit.potential(&um).unwrap()) / (2.0 * h);
                assert!(
                    (fd - q[k]).abs() <= 1e-6 * (1.0 + fd.abs()),
                    "coordinate {k}: gradient {fd} vs map {}",
                    q[k]
                );
            }
        }
    }

    #[test]
    fn map_is_monotone() {
        let fit = fitted(40, 0.15, 3);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..200 {
            let u: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 1.8 - 0.9).collect();
            let w: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 1.8 - 0.9).collect();
            let qu = fit.quantile(&u).unwrap();
            let qw = fit.quantile(&w).unwrap();
            let dot: f64 = qu
                .iter()
                .zip(&qw)
                .zip(u.iter().zip(&w))
                .map(|((a, b), (c, d))| (a - b) * (c - d))
                .sum();
            assert!(dot >= -1e-9, "monotonicity violated: {dot}");
        }
    }

    #[test]
    fn quantile_stays_in_data_hull() {
        // Q(u) is a convex combination of data points, so it lies in their
        // bounding box.
        let fit = fitted(30, 0.3, 5);
        let (mut lo, mut hi) = (vec![f64::INFINITY; 2], vec![f64::NEG_INFINITY; 2]);
        for r in fit.data().rows() {
            for k in 0..2 {
                lo[k] = lo[k].min(r[k]);
                hi[k] = hi[k].max(r[k]);
            }
        }
        for u in sample_reference(&ReferenceSpec::spherical(2).unwrap(), 100, 6)
            .unwrap()
            .rows()
        {
            let q = fit.quantile(u).unwrap();
            for k in 0..2 {
                assert!(q[k] >= lo[k] - 1e-12 && q[k] <= hi[k] + 1e-12);
            }
        }
    }

    #[test]
    fn rank_inverts_quantile_approximately() {
        let fit = fitted(150, 0.05, 7);
        let mut worst = 0.0f64;
        for u in [[0.4, 0.0], [0.0, -0.5], [0.3, 0.3], [-0.2, 0.4]] {
            let x = fit.quantile(&u).unwrap();
            let back = fit.rank(&x).unwrap();
            let err = u
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(err);
        }
        assert!(worst < 0.2, "round-trip error {worst}");
    }

    #[test]
    fn ranks_of_data_stay_in_ball() {
        let fit = fitted(100, 0.1, 8);
        for x in fit.data().rows() {
            let r = fit.rank(x).unwrap();
            assert!(crate::reference::lp_norm(&r, 2.0) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn identity_contour_is_reference_sphere() {
        let map = IdentityMap::new(2);
        let dirs = direction_grid(&ReferenceSpec::spherical(2).unwrap(), 8).unwrap();
        let c = quantile_contour(&map, 0.5, &dirs).unwrap();
        assert_eq!(c.vertices.len(), 8);
        for v in &c.vertices {
            assert!((crate::reference::lp_norm(v, 2.0) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn contours_are_nested_in_gauge() {
        // Along a fixed direction the potential is convex in r, so the image
        // radius grows with the level.
        let fit = fitted(60, 0.1, 9);
        let dirs = direction_grid(&ReferenceSpec::spherical(2).unwrap(), 16).unwrap();
        let inner = quantile_contour(&fit, 0.3, &dirs).unwrap();
        let outer = quantile_contour(&fit, 0.8, &dirs).unwrap();
        let center = fit.quantile(&[0.0, 0.0]).unwrap();
        for (a, b) in inner.vertices.iter().zip(&outer.vertices) {
            let ra: f64 = a.iter().zip(&center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>();
            let rb: f64 = b.iter().zip(&center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>();
            assert!(rb >= ra - 1e-9);
        }
    }

    #[test]
    fn sign_curve_shapes() {
        let map = IdentityMap::new(2);
        let curve = sign_curve(&map, &[2.0, 0.0], 4, 1.0).unwrap();
        assert_eq!(curve.len(), 4);
        // Direction is normalized before scaling by the radius.
        assert!((curve[3][0] - 0.875).abs() < 1e-12);
        assert_eq!(curve[3][1], 0.0);
        assert!(sign_curve(&map, &[0.0, 0.0], 4, 1.0).is_err());
    }

    #[test]
    fn d1_reduces_to_empirical_quantiles() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..300)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let data = PointCloud::from_flat(300, 1, values.clone()).unwrap();
        let spec = ReferenceSpec::spherical(1).unwrap();
        let opts = SolveOptions {
            iterations: 400,
            reference_points: Some(3000),
            tolerance: 1e-9,
            seed: 12,
            ..SolveOptions::default()
        };
        let fit = solve_semidual(data, spec, 0.01, &opts).unwrap();
        let uni = crate::analytic::UnivariateSample::new(values).unwrap();
        for u in [-0.6, -0.2, 0.0, 0.3, 0.7] {
            let q = fit.quantile(&[u]).unwrap()[0];
            let exact = uni.center_outward_quantile(u).unwrap();
            assert!((q - exact).abs() < 0.2, "u = {u}: {q} vs {exact}");
        }
    }

    #[test]
    fn rank_sign_polar_decomposition() {
        let fit = fitted(100, 0.1, 15);
        let x = fit.data().row(3).to_vec();
        let rs = fit.rank_sign(&x).unwrap();
        assert!(rs.direction_defined);
        assert!((0.0..=1.0 + 1e-9).contains(&rs.rank));
        assert!((crate::reference::lp_norm(&rs.sign, 2.0) - 1.0).abs() <= 1e-9);
        let image = fit.rank(&x).unwrap();
        for (s, i) in rs.sign.iter().zip(&image) {
            assert!((s * rs.rank - i).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let fit = fitted(20, 0.3, 13);
        assert!(fit.quantile(&[0.1]).is_err());
        assert!(fit.quantile(&[f64::NAN, 0.0]).is_err());
        assert!(fit.rank(&[1.0]).is_err());
        let dirs = direction_grid(&ReferenceSpec::spherical(2).unwrap(), 4).unwrap();
        assert!(quantile_contour(&fit, 0.0, &dirs).is_err());
        assert!(quantile_contour(&fit, 1.0, &dirs).is_err());
    }
}
