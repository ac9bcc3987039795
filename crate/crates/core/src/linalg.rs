//! Feature vectors, ridge covariance statistics and the small projection /
//! softmax helpers shared by every learner.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Feature vector `φ(s, a)`.
pub type FeatVec = DVector<f64>;

/// Linear weights over the feature space (cost weights `w`, value weights `v`).
pub type WeightVec = DVector<f64>;

/// Ridge covariance `Λ = I + Σ φ φᵀ` together with its inverse.
///
/// Batch statistics are rebuilt from scratch through a Cholesky factorization.
/// [`CovStats::push`] applies a Sherman-Morrison rank-one update to the cached
/// inverse and is meant for covariances that only grow.
#[derive(Debug, Clone)]
pub struct CovStats {
    lambda: DMatrix<f64>,
    inverse: DMatrix<f64>,
    count: usize,
}

impl CovStats {
    pub fn identity(dim: usize) -> Self {
        Self {
            lambda: DMatrix::identity(dim, dim),
            inverse: DMatrix::identity(dim, dim),
            count: 0,
        }
    }

    /// Builds `Λ = I + Σ φ φᵀ` over `features`.
    pub fn build<'a, I>(dim: usize, features: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a FeatVec>,
    {
        let mut lambda = DMatrix::<f64>::identity(dim, dim);
        let mut count = 0;
        for phi in features {
            check_dim(dim, phi.len())?;
            lambda.ger(1.0, phi, phi, 1.0);
            count += 1;
        }
        let chol = lambda
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("ridge covariance is not positive definite".into()))?;
        let inverse = chol.inverse();
        Ok(Self {
            lambda,
            inverse,
            count,
        })
    }

    /// Adds one feature vector, updating the inverse in place.
    pub fn push(&mut self, phi: &FeatVec) -> Result<()> {
        check_dim(self.dim(), phi.len())?;
        self.lambda.ger(1.0, phi, phi, 1.0);
        let u = &self.inverse * phi;
        let denom = 1.0 + phi.dot(&u);
        self.inverse.ger(-1.0 / denom, &u, &u, 1.0);
        self.count += 1;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `Λ⁻¹ rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        &self.inverse * rhs
    }

    /// The squared elliptical norm `φᵀ Λ⁻¹ φ`.
    pub fn inv_quad(&self, phi: &FeatVec) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for j in 0..d {
            let pj = phi[j];
            if pj == 0.0 {
                continue;
            }
            let col = self.inverse.column(j);
            let mut inner = 0.0;
            for i in 0..d {
                inner += col[i] * phi[i];
            }
            acc += pj * inner;
        }
        acc.max(0.0)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Elliptical exploration bonus `β ‖φ‖_{Λ⁻¹}`.
pub fn bonus(phi: &FeatVec, cov: &CovStats, beta: f64) -> Result<f64> {
    check_dim(cov.dim(), phi.len())?;
    if !(beta >= 0.0) {
        return Err(Error::invalid(format!("bonus scale must be non-negative, got {beta}")));
    }
    Ok(beta * cov.inv_quad(phi).sqrt())
}

/// Closed interval used to truncate Q estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipRange {
    lo: f64,
    hi: f64,
}

impl ClipRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::invalid(format!("empty clip range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `[-(H - h + 1), H - h + 1]` for the 1-based stage `h` of an `H`-step episode.
    pub fn finite_stage(horizon: usize, stage: usize) -> Self {
        debug_assert!(stage >= 1 && stage <= horizon);
        let width = (horizon + 1 - stage) as f64;
        Self { lo: -width, hi: width }
    }

    /// `[-1/(1-γ), 1/(1-γ)]`.
    pub fn discounted(gamma: f64) -> Self {
        let width = 1.0 / (1.0 - gamma);
        Self { lo: -width, hi: width }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn clip(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }
}

/// `min(hi, max(lo, x))`.
pub fn clip(x: f64, range: ClipRange) -> f64 {
    range.clip(x)
}

/// Euclidean projection onto the unit ball `{w : ‖w‖₂ ≤ 1}`.
pub fn project_l2_ball(w: &WeightVec) -> WeightVec {
    let norm = w.norm();
    if norm <= 1.0 {
        w.clone()
    } else {
        w / norm
    }
}

/// Euclidean projection onto the box `[lo, hi]^d`.
pub fn project_box(w: &WeightVec, lo: f64, hi: f64) -> WeightVec {
    w.map(|x| x.max(lo).min(hi))
}

/// Normalized exponentials of `logits`, computed with max-subtraction.
pub fn softmax_dist(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// Index of the smallest entry, lowest index on ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> FeatVec {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn cov_build_examples() {
        let empty = CovStats::build(2, std::iter::empty()).unwrap();
        assert_eq!(empty.lambda(), &DMatrix::identity(2, 2));
        assert_eq!(empty.count(), 0);

        let one = CovStats::build(2, [&v(&[1.0, 0.0])]).unwrap();
        assert_eq!(one.lambda(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));

        let a = v(&[1.0, 0.0]);
        let b = v(&[0.0, 1.0]);
        let two = CovStats::build(2, [&a, &b]).unwrap();
        assert_eq!(two.lambda(), &(DMatrix::identity(2, 2) * 2.0));
        assert_eq!(two.count(), 2);
    }

    #[test]
    fn cov_build_rejects_mixed_dimensions() {
        let a = v(&[1.0, 0.0]);
        let b = v(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            CovStats::build(2, [&a, &b]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn bonus_examples() {
        let id = CovStats::identity(2);
        assert_relative_eq!(bonus(&v(&[1.0, 0.0]), &id, 8.0).unwrap(), 8.0);
        assert_eq!(bonus(&v(&[0.0, 0.0]), &id, 8.0).unwrap(), 0.0);
        let cov = CovStats::build(2, [&v(&[1.0, 0.0])]).unwrap();
        assert_relative_eq!(
            bonus(&v(&[1.0, 0.0]), &cov, 8.0).unwrap(),
            8.0 / 2f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn clip_examples() {
        let r = ClipRange::new(-2.0, 2.0).unwrap();
        assert_eq!(clip(5.0, r), 2.0);
        assert_eq!(clip(-5.0, r), -2.0);
        assert_eq!(clip(0.5, r), 0.5);
        assert!(ClipRange::new(1.0, 0.0).is_err());
        assert_eq!(ClipRange::finite_stage(5, 1), ClipRange::new(-5.0, 5.0).unwrap());
        assert_eq!(ClipRange::finite_stage(5, 5), ClipRange::new(-1.0, 1.0).unwrap());
        assert_relative_eq!(ClipRange::discounted(0.9).hi(), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn projection_examples() {
        let p = project_l2_ball(&v(&[3.0, 4.0]));
        assert_relative_eq!(p[0], 0.6, max_relative = 1e-12);
        assert_relative_eq!(p[1], 0.8, max_relative = 1e-12);
        assert_eq!(project_l2_ball(&v(&[0.3, 0.4])), v(&[0.3, 0.4]));
        assert_eq!(project_l2_ball(&v(&[0.0, 0.0])), v(&[0.0, 0.0]));
        assert_eq!(project_box(&v(&[-1.0, 0.5, 2.0]), 0.0, 1.0), v(&[0.0, 0.5, 1.0]));
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax_dist(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax_dist(&[0.0, -(2f64.ln())]);
        assert_relative_eq!(p[0], 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(p[1], 1.0 / 3.0, max_relative = 1e-12);
        assert_eq!(softmax_dist(&[1000.0, 1000.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn argmin_breaks_ties_low() {
        assert_eq!(argmin(&[1.0, 0.0, 0.0]), 1);
        assert_eq!(argmin(&[2.0, 2.0]), 0);
    }

    fn random_features(d: usize, n: impl Into<prop::collection::SizeRange>) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), n)
    }

    proptest! {
        #[test]
        fn bonus_matches_dense_solve(
            (d, rows, probe) in (1usize..=20).prop_flat_map(|d| (Just(d), random_features(d, 0..40), prop::collection::vec(-1.0f64..1.0, d)))
        ) {
            let feats: Vec<FeatVec> = rows.iter().map(|r| v(r)).collect();
            let cov = CovStats::build(d, feats.iter()).unwrap();
            let phi = v(&probe);
            // independent route: LU solve on the explicitly summed matrix
            let mut lambda = DMatrix::<f64>::identity(d, d);
            for f in &feats {
                lambda += f * f.transpose();
            }
            let x = lambda.lu().solve(&phi).unwrap();
            let oracle = 8.0 * phi.dot(&x).max(0.0).sqrt();
            let got = bonus(&phi, &cov, 8.0).unwrap();
            prop_assert!((got - oracle).abs() <= 1e-8 * oracle.max(1e-12) + 1e-12);
        }

        #[test]
        fn bonus_never_increases_with_data(
            (d, rows, extra, probe) in (1usize..=10).prop_flat_map(|d| (
                Just(d),
                random_features(d, 0..20),
                prop::collection::vec(-1.0f64..1.0, d),
                prop::collection::vec(-1.0f64..1.0, d),
            ))
        ) {
            let feats: Vec<FeatVec> = rows.iter().map(|r| v(r)).collect();
            let before = CovStats::build(d, feats.iter()).unwrap();
            let mut grown = feats.clone();
            grown.push(v(&extra));
            let after = CovStats::build(d, grown.iter()).unwrap();
            let phi = v(&probe);
            prop_assert!(bonus(&phi, &after, 1.0).unwrap() <= bonus(&phi, &before, 1.0).unwrap() + 1e-12);
        }

        #[test]
        fn rank_one_updates_track_direct_inverse(
            (d, rows) in (1usize..=12).prop_flat_map(|d| (Just(d), random_features(d, 1..30)))
        ) {
            let feats: Vec<FeatVec> = rows.iter().map(|r| v(r)).collect();
            let mut inc = CovStats::identity(d);
            for f in &feats {
                inc.push(f).unwrap();
            }
            let direct = CovStats::build(d, feats.iter()).unwrap();
            let err = (inc.inverse() - direct.inverse()).abs().max();
            prop_assert!(err <= 1e-9);
            prop_assert_eq!(inc.count(), direct.count());
        }

        #[test]
        fn clip_is_idempotent(x in -100.0f64..100.0, lo in -10.0f64..0.0, width in 0.0f64..20.0) {
            let r = ClipRange::new(lo, lo + width).unwrap();
            prop_assert_eq!(clip(clip(x, r), r), clip(x, r));
        }

        #[test]
        fn ball_projection_is_idempotent_and_non_expansive(
            a in prop::collection::vec(-5.0f64..5.0, 3),
            b in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            let (a, b) = (v(&a), v(&b));
            let pa = project_l2_ball(&a);
            prop_assert!(pa.norm() <= 1.0 + 1e-12);
            prop_assert!((project_l2_ball(&pa) - &pa).norm() <= 1e-12);
            let pb = project_l2_ball(&b);
            prop_assert!((pa - pb).norm() <= (a - b).norm() + 1e-12);
        }

        #[test]
        fn softmax_is_a_shift_invariant_distribution(
            logits in prop::collection::vec(-50.0f64..50.0, 2..8),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax_dist(&logits);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
            let q = softmax_dist(&shifted);
            for (x, y) in p.iter().zip(&q) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            let arg_in = logits.iter().enumerate().fold(0, |b, (i, z)| if *z > logits[b] { i } else { b });
            let arg_out = p.iter().enumerate().fold(0, |b, (i, z)| if *z > p[b] { i } else { b });
            prop_assert_eq!(arg_in, arg_out);
        }
    }
}
