//! The evaluation stack: pixel L2, perceptual patch distance over feature
//! sets, Fréchet distance between pooled feature Gaussians, the composite
//! final score, and the combined training loss.
//!
//! Set-level reductions (means, pooled Gaussian fits) always sum with the
//! fixed pairwise tree from [`crate::numeric`] over the pair order, so a
//! report is bit-stable no matter how many workers computed the per-pair
//! values.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{extract_with_bank, ExtractorSpec, FeatureSet, FilterBank};
use crate::numeric::{pairwise_mean, pairwise_sum_by};
use crate::raster::Raster;

/// Mean vector and covariance matrix of a pooled feature collection.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    sample_count: usize,
}

impl GaussianStats {
    /// Validates and symmetrizes. The covariance must be square, finite,
    /// symmetric to within 1e-12 (relative to its largest entry) and
    /// positive semi-definite to within an eigenvalue tolerance of
    /// `-1e-8 * trace`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, sample_count: usize) -> Result<Self> {
        if sample_count < 2 {
            return Err(Error::InsufficientSamples {
                need: 2,
                got: sample_count,
            });
        }
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {}x{}, mean has dimension {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("gaussian mean"));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("gaussian covariance"));
        }
        let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let max_asym = (0..d)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .fold(0.0f64, |m, (i, j)| m.max((cov[(i, j)] - cov[(j, i)]).abs()));
        if max_asym > 1e-12 * scale {
            return Err(Error::NumericalFailure(format!(
                "covariance asymmetry {max_asym:e} exceeds tolerance"
            )));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        let tolerance = 1e-8 * cov.trace().abs();
        let min_eig = nalgebra::SymmetricEigen::new(cov.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -tolerance {
            return Err(Error::NumericalFailure(format!(
                "covariance eigenvalue {min_eig:e} below PSD tolerance {:e}",
                -tolerance
            )));
        }
        Ok(GaussianStats {
            mean,
            cov,
            sample_count,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }
}

/// Euclidean distance over all sample positions, samples taken as reals
/// in [0, 255].
pub fn l2_raw(a: &Raster, b: &Raster) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let (xs, ys) = (a.samples(), b.samples());
    let sum = pairwise_sum_by(xs.len(), &|i| {
        let d = xs[i] as f64 - ys[i] as f64;
        d * d
    });
    Ok(sum.sqrt())
}

/// Root-mean-square difference on a [0, 1] intensity scale:
/// `l2_raw / (255 * sqrt(width * height * channels))`. All-black vs
/// all-white is exactly 1.
pub fn l2_normalized(a: &Raster, b: &Raster) -> Result<f64> {
    let raw = l2_raw(a, b)?;
    let n = a.samples().len() as f64;
    Ok(raw / (255.0 * n.sqrt()))
}

/// Mean over patches of the Euclidean distance between unit-normalized
/// feature vectors. Zero vectors are left as zero rather than normalized.
pub fn lpips_distance(fa: &FeatureSet, fb: &FeatureSet) -> Result<f64> {
    if fa.source_tag() != fb.source_tag() {
        return Err(Error::SourceMismatch {
            left: fa.source_tag().into(),
            right: fb.source_tag().into(),
        });
    }
    if fa.patch_count() != fb.patch_count() || fa.dim() != fb.dim() {
        return Err(Error::ShapeMismatch(format!(
            "feature sets {}x{} vs {}x{}",
            fa.patch_count(),
            fa.dim(),
            fb.patch_count(),
            fb.dim()
        )));
    }
    let d = fa.dim();
    let distances: Vec<f64> = (0..fa.patch_count())
        .map(|p| {
            let (va, vb) = (fa.vector(p), fb.vector(p));
            let na = unit_scale(va);
            let nb = unit_scale(vb);
            let sq = pairwise_sum_by(d, &|j| {
                let diff = va[j] * na - vb[j] * nb;
                diff * diff
            });
            sq.sqrt()
        })
        .collect();
    Ok(pairwise_mean(&distances))
}

fn unit_scale(v: &[f64]) -> f64 {
    let norm = pairwise_sum_by(v.len(), &|j| v[j] * v[j]).sqrt();
    if norm == 0.0 {
        0.0
    } else {
        1.0 / norm
    }
}

/// Pools every vector of every set and fits mean plus unbiased (n-1)
/// covariance. All sets must share source tag and dimensionality.
pub fn fit_gaussian(sets: &[FeatureSet]) -> Result<GaussianStats> {
    let total: usize = sets.iter().map(|s| s.patch_count()).sum();
    if sets.is_empty() || total < 2 {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: total,
        });
    }
    let tag = sets[0].source_tag();
    let d = sets[0].dim();
    for s in &sets[1..] {
        if s.source_tag() != tag {
            return Err(Error::SourceMismatch {
                left: tag.into(),
                right: s.source_tag().into(),
            });
        }
        if s.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "feature dims {d} vs {}",
                s.dim()
            )));
        }
    }
    let rows: Vec<&[f64]> = sets
        .iter()
        .flat_map(|s| (0..s.patch_count()).map(move |p| s.vector(p)))
        .collect();
    let n = rows.len();

    let mean = DVector::from_fn(d, |j, _| {
        pairwise_sum_by(n, &|i| rows[i][j]) / n as f64
    });
    let mut cov = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let c = pairwise_sum_by(n, &|i| (rows[i][j] - mean[j]) * (rows[i][k] - mean[k]))
                / (n - 1) as f64;
            cov[(j, k)] = c;
            cov[(k, j)] = c;
        }
    }
    GaussianStats::new(mean, cov, n)
}

/// Fréchet distance between two Gaussians:
/// `||mu_p - mu_q||^2 + tr(cov_p + cov_q - 2 (cov_p cov_q)^(1/2))`.
///
/// The matrix square root is taken by eigendecomposition of the
/// symmetrized product `cov_p^(1/2) cov_q cov_p^(1/2)`. Eigenvalues in
/// `[-1e-8 * trace, 0)` are clamped to zero; anything lower is a
/// numerical failure. The result is clamped to be non-negative.
pub fn frechet_distance(p: &GaussianStats, q: &GaussianStats) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "gaussian dims {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    // Identical distributions are exactly zero; skip the eigen round trip.
    if p.mean == q.mean && p.cov == q.cov {
        return Ok(0.0);
    }

    let sqrt_p = symmetric_sqrt(&p.cov)?;
    let product = {
        let m = &sqrt_p * &q.cov * &sqrt_p;
        (&m + m.transpose()) * 0.5
    };
    let eig = nalgebra::SymmetricEigen::new(product.clone());
    let tolerance = 1e-8 * product.trace().abs();
    let mut sqrt_trace = 0.0;
    for &lambda in eig.eigenvalues.iter() {
        if lambda < -tolerance {
            return Err(Error::NumericalFailure(format!(
                "product eigenvalue {lambda:e} below tolerance {:e}",
                -tolerance
            )));
        }
        sqrt_trace += lambda.max(0.0).sqrt();
    }

    let mean_term = (&p.mean - &q.mean).norm_squared();
    let value = mean_term + p.cov.trace() + q.cov.trace() - 2.0 * sqrt_trace;
    Ok(value.max(0.0))
}

/// Symmetric PSD square root via eigendecomposition, with the same
/// negative-eigenvalue tolerance as the product step.
fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let tolerance = 1e-8 * m.trace().abs();
    let mut roots = eig.eigenvalues.clone();
    for lambda in roots.iter_mut() {
        if *lambda < -tolerance {
            return Err(Error::NumericalFailure(format!(
                "covariance eigenvalue {:e} below tolerance {:e}",
                *lambda, -tolerance
            )));
        }
        *lambda = lambda.max(0.0).sqrt();
    }
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
    Ok(scaled * eig.eigenvectors.transpose())
}

/// Composite score: `(2/pi * arctan(fid) + lpips + l2) / 3`. Lower is
/// better.
pub fn final_score(fid: f64, lpips: f64, l2: f64) -> Result<f64> {
    for (v, name) in [(fid, "fid"), (lpips, "lpips"), (l2, "l2")] {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput(name));
        }
    }
    Ok((std::f64::consts::FRAC_2_PI * fid.atan() + lpips + l2) / 3.0)
}

/// Training-loss aggregation: the original model loss plus the two
/// metric terms, taken pre-weighted.
pub fn combined_loss(loss_ori: f64, lpips: f64, l2: f64) -> Result<f64> {
    for v in [loss_ori, lpips, l2] {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput("combined loss term"));
        }
    }
    Ok(loss_ori + lpips + l2)
}

/// Per-image entry of a [`ScoreReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct PerImageScore {
    pub id: String,
    pub l2: f64,
    pub lpips: f64,
}

/// Set-level evaluation result.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub l2: f64,
    pub lpips: f64,
    pub fid: f64,
    pub final_score: f64,
    pub per_image: Vec<PerImageScore>,
}

impl ScoreReport {
    /// Recomputes the composite score from the stored parts.
    pub fn recompute_final(&self) -> f64 {
        (std::f64::consts::FRAC_2_PI * self.fid.atan() + self.lpips + self.l2) / 3.0
    }

    /// Plain-text rendering: one `metric=value` line per metric with 12
    /// significant digits, then the per-image block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("l2={}\n", fmt_metric(self.l2)));
        out.push_str(&format!("lpips={}\n", fmt_metric(self.lpips)));
        out.push_str(&format!("fid={}\n", fmt_metric(self.fid)));
        out.push_str(&format!("final={}\n", fmt_metric(self.final_score)));
        out.push_str("per_image:\n");
        for entry in &self.per_image {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                entry.id,
                fmt_metric(entry.l2),
                fmt_metric(entry.lpips)
            ));
        }
        out
    }
}

fn fmt_metric(v: f64) -> String {
    format!("{v:.11e}")
}

/// One generated/target pair submitted for set evaluation.
#[derive(Debug, Clone)]
pub struct EvalPair {
    pub id: String,
    pub generated: Raster,
    pub target: Raster,
}

/// As [`EvalPair`] but with feature sets computed elsewhere.
#[derive(Debug, Clone)]
pub struct EvalPairWithFeatures {
    pub id: String,
    pub generated: Raster,
    pub target: Raster,
    pub generated_features: FeatureSet,
    pub target_features: FeatureSet,
}

/// Evaluates a set of pairs with the built-in extractor: mean normalized
/// L2, mean perceptual distance, Fréchet distance between the pooled
/// generated and target feature Gaussians, and the composite score.
pub fn evaluate_set(pairs: &[EvalPair], spec: &ExtractorSpec) -> Result<ScoreReport> {
    if pairs.is_empty() {
        return Err(Error::EmptySet);
    }
    let bank = FilterBank::build(spec);
    let rows: Vec<PairRow> = pairs
        .par_iter()
        .map(|pair| {
            check_pair_shape(&pair.id, &pair.generated, &pair.target)?;
            let generated_features = extract_with_bank(&pair.generated, spec, &bank)?;
            let target_features = extract_with_bank(&pair.target, spec, &bank)?;
            pair_row(
                &pair.id,
                &pair.generated,
                &pair.target,
                generated_features,
                target_features,
            )
        })
        .collect::<Result<_>>()?;
    finish_report(rows)
}

/// Evaluates a set of pairs whose features were computed externally.
pub fn evaluate_set_with_features(pairs: Vec<EvalPairWithFeatures>) -> Result<ScoreReport> {
    if pairs.is_empty() {
        return Err(Error::EmptySet);
    }
    let rows: Vec<PairRow> = pairs
        .into_par_iter()
        .map(|pair| {
            check_pair_shape(&pair.id, &pair.generated, &pair.target)?;
            pair_row(
                &pair.id,
                &pair.generated,
                &pair.target,
                pair.generated_features,
                pair.target_features,
            )
        })
        .collect::<Result<_>>()?;
    finish_report(rows)
}

struct PairRow {
    id: String,
    l2: f64,
    lpips: f64,
    generated_features: FeatureSet,
    target_features: FeatureSet,
}

fn check_pair_shape(id: &str, generated: &Raster, target: &Raster) -> Result<()> {
    if !generated.same_shape(target) {
        return Err(Error::ShapeMismatch(format!(
            "pair `{id}`: generated {}x{}x{} vs target {}x{}x{}",
            generated.width(),
            generated.height(),
            generated.channels(),
            target.width(),
            target.height(),
            target.channels()
        )));
    }
    Ok(())
}

fn pair_row(
    id: &str,
    generated: &Raster,
    target: &Raster,
    generated_features: FeatureSet,
    target_features: FeatureSet,
) -> Result<PairRow> {
    Ok(PairRow {
        id: id.to_string(),
        l2: l2_normalized(generated, target)?,
        lpips: lpips_distance(&generated_features, &target_features)?,
        generated_features,
        target_features,
    })
}

fn finish_report(rows: Vec<PairRow>) -> Result<ScoreReport> {
    let mut l2_values = Vec::with_capacity(rows.len());
    let mut lpips_values = Vec::with_capacity(rows.len());
    let mut generated_sets = Vec::with_capacity(rows.len());
    let mut target_sets = Vec::with_capacity(rows.len());
    let mut per_image = Vec::with_capacity(rows.len());
    for row in rows {
        l2_values.push(row.l2);
        lpips_values.push(row.lpips);
        generated_sets.push(row.generated_features);
        target_sets.push(row.target_features);
        per_image.push(PerImageScore {
            id: row.id,
            l2: row.l2,
            lpips: row.lpips,
        });
    }
    let l2 = pairwise_mean(&l2_values);
    let lpips = pairwise_mean(&lpips_values);
    let fid = frechet_distance(&fit_gaussian(&generated_sets)?, &fit_gaussian(&target_sets)?)?;
    let final_value = final_score(fid, lpips, l2)?;
    Ok(ScoreReport {
        l2,
        lpips,
        fid,
        final_score: final_value,
        per_image,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_features;

    fn gray(width: u32, height: u32, samples: Vec<u8>) -> Raster {
        Raster::new(width, height, 1, samples).unwrap()
    }

    #[test]
    fn l2_raw_examples() {
        let a = gray(1, 1, vec![10]);
        let b = gray(1, 1, vec![13]);
        assert_eq!(l2_raw(&a, &a).unwrap(), 0.0);
        assert_eq!(l2_raw(&a, &b).unwrap(), 3.0);
        assert_eq!(l2_raw(&b, &a).unwrap(), 3.0);
    }

    #[test]
    fn l2_raw_matches_double_loop_oracle() {
        let mut state = 3u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 56) as u8
        };
        let a = gray(8, 8, (0..64).map(|_| next()).collect());
        let b = gray(8, 8, (0..64).map(|_| next()).collect());
        let mut sum = 0.0;
        for y in 0..8 {
            for x in 0..8 {
                let d = a.sample(x, y, 0) as f64 - b.sample(x, y, 0) as f64;
                sum += d * d;
            }
        }
        let oracle = sum.sqrt();
        let got = l2_raw(&a, &b).unwrap();
        assert!((got - oracle).abs() <= 1e-9 * oracle.max(1.0));
    }

    #[test]
    fn l2_raw_rejects_shape_mismatch() {
        let a = gray(2, 1, vec![0, 0]);
        let b = gray(1, 2, vec![0, 0]);
        assert!(matches!(l2_raw(&a, &b), Err(Error::ShapeMismatch(_))));
        let c = Raster::new(2, 1, 3, vec![0; 6]).unwrap();
        assert!(l2_raw(&a, &c).is_err());
    }

    #[test]
    fn l2_normalized_examples() {
        let black = gray(5, 3, vec![0; 15]);
        let white = gray(5, 3, vec![255; 15]);
        assert_eq!(l2_normalized(&black, &white).unwrap(), 1.0);
        assert_eq!(l2_normalized(&black, &black).unwrap(), 0.0);
        let a = gray(4, 4, vec![100; 16]);
        let b = gray(4, 4, vec![151; 16]);
        assert_eq!(l2_normalized(&a, &b).unwrap(), 0.2);
    }

    #[test]
    fn lpips_zero_on_identical_sets() {
        let fs = FeatureSet::new(3, 2, vec![1.0, 2.0, 0.0, 0.0, -5.0, 3.0], "t".into()).unwrap();
        assert_eq!(lpips_distance(&fs, &fs).unwrap(), 0.0);
    }

    #[test]
    fn lpips_two_patch_mean() {
        // Unit vectors engineered for per-patch distances 0.6 and 1.0.
        let fa = FeatureSet::new(2, 2, vec![1.0, 0.0, 1.0, 0.0], "t".into()).unwrap();
        let y1 = (1.0f64 - 0.82 * 0.82).sqrt();
        let y2 = 0.75f64.sqrt();
        let fb = FeatureSet::new(2, 2, vec![0.82, y1, 0.5, y2], "t".into()).unwrap();
        let got = lpips_distance(&fa, &fb).unwrap();
        assert!((got - 0.8).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn lpips_ignores_magnitude() {
        let fa = FeatureSet::new(1, 2, vec![3.0, 4.0], "t".into()).unwrap();
        let fb = FeatureSet::new(1, 2, vec![30.0, 40.0], "t".into()).unwrap();
        assert!(lpips_distance(&fa, &fb).unwrap().abs() < 1e-15);
    }

    #[test]
    fn lpips_zero_vectors_stay_zero() {
        let fa = FeatureSet::new(1, 2, vec![0.0, 0.0], "t".into()).unwrap();
        let fb = FeatureSet::new(1, 2, vec![1.0, 0.0], "t".into()).unwrap();
        assert_eq!(lpips_distance(&fa, &fb).unwrap(), 1.0);
    }

    #[test]
    fn lpips_rejects_mismatches() {
        let fa = FeatureSet::new(1, 2, vec![1.0, 0.0], "a".into()).unwrap();
        let fb = FeatureSet::new(1, 2, vec![1.0, 0.0], "b".into()).unwrap();
        assert!(matches!(
            lpips_distance(&fa, &fb),
            Err(Error::SourceMismatch { .. })
        ));
        let fc = FeatureSet::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], "a".into()).unwrap();
        assert!(matches!(
            lpips_distance(&fa, &fc),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn fit_gaussian_two_point_formula() {
        let fs = FeatureSet::new(2, 2, vec![0.0, 0.0, 2.0, 2.0], "t".into()).unwrap();
        let stats = fit_gaussian(&[fs]).unwrap();
        assert_eq!(stats.mean(), &DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(
            stats.cov(),
            &DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0])
        );
        assert_eq!(stats.sample_count(), 2);
    }

    #[test]
    fn fit_gaussian_identical_vectors_zero_cov() {
        let fs = FeatureSet::new(4, 2, [3.0, -1.0].repeat(4), "t".into()).unwrap();
        let stats = fit_gaussian(&[fs]).unwrap();
        assert!(stats.cov().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fit_gaussian_matches_two_pass_oracle() {
        let mut state = 11u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
        };
        let n = 500;
        let d = 4;
        let data: Vec<f64> = (0..n * d).map(|_| next()).collect();
        let fs = FeatureSet::new(n, d, data.clone(), "t".into()).unwrap();
        let stats = fit_gaussian(&[fs]).unwrap();

        // Textbook two-pass oracle, plain sequential sums.
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for j in 0..d {
                mean[j] += data[i * d + j];
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        for j in 0..d {
            assert!((stats.mean()[j] - mean[j]).abs() < 1e-10);
            for k in 0..d {
                let mut c = 0.0;
                for i in 0..n {
                    c += (data[i * d + j] - mean[j]) * (data[i * d + k] - mean[k]);
                }
                c /= (n - 1) as f64;
                assert!((stats.cov()[(j, k)] - c).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fit_gaussian_pools_across_sets() {
        let a = FeatureSet::new(1, 1, vec![0.0], "t".into()).unwrap();
        let b = FeatureSet::new(1, 1, vec![2.0], "t".into()).unwrap();
        let stats = fit_gaussian(&[a, b]).unwrap();
        assert_eq!(stats.mean()[0], 1.0);
        assert_eq!(stats.cov()[(0, 0)], 2.0);
    }

    #[test]
    fn fit_gaussian_rejects_bad_inputs() {
        assert!(matches!(
            fit_gaussian(&[]),
            Err(Error::InsufficientSamples { .. })
        ));
        let single = FeatureSet::new(1, 1, vec![0.0], "t".into()).unwrap();
        assert!(matches!(
            fit_gaussian(&[single]),
            Err(Error::InsufficientSamples { .. })
        ));
        let a = FeatureSet::new(2, 1, vec![0.0, 1.0], "a".into()).unwrap();
        let b = FeatureSet::new(2, 1, vec![0.0, 1.0], "b".into()).unwrap();
        assert!(matches!(
            fit_gaussian(&[a, b]),
            Err(Error::SourceMismatch { .. })
        ));
    }

    fn diag_gaussian(mean: &[f64], var: &[f64]) -> GaussianStats {
        GaussianStats::new(
            DVector::from_row_slice(mean),
            DMatrix::from_diagonal(&DVector::from_row_slice(var)),
            10,
        )
        .unwrap()
    }

    #[test]
    fn frechet_identical_is_zero() {
        let p = diag_gaussian(&[0.5, -2.0], &[1.0, 3.0]);
        assert_eq!(frechet_distance(&p, &p.clone()).unwrap(), 0.0);
    }

    #[test]
    fn frechet_one_dimensional_closed_form() {
        let p = diag_gaussian(&[0.0], &[1.0]);
        let q = diag_gaussian(&[2.0], &[1.0]);
        let got = frechet_distance(&p, &q).unwrap();
        assert!((got - 4.0).abs() < 1e-10, "got {got}");
    }

    #[test]
    fn frechet_diagonal_closed_form() {
        let p = diag_gaussian(&[0.0, 0.0], &[1.0, 4.0]);
        let q = diag_gaussian(&[0.0, 0.0], &[9.0, 16.0]);
        let got = frechet_distance(&p, &q).unwrap();
        assert!((got - 8.0).abs() < 1e-8, "got {got}");
    }

    #[test]
    fn frechet_is_symmetric() {
        let p = diag_gaussian(&[1.0, 2.0], &[2.0, 0.5]);
        let q = diag_gaussian(&[-1.0, 0.0], &[1.0, 1.5]);
        let pq = frechet_distance(&p, &q).unwrap();
        let qp = frechet_distance(&q, &p).unwrap();
        assert!((pq - qp).abs() < 1e-10);
    }

    #[test]
    fn frechet_rejects_dim_mismatch() {
        let p = diag_gaussian(&[0.0], &[1.0]);
        let q = diag_gaussian(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(matches!(
            frechet_distance(&p, &q),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn gaussian_stats_validation() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(GaussianStats::new(DVector::zeros(2), asym, 5).is_err());
        let not_psd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianStats::new(DVector::zeros(2), not_psd, 5).is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!(GaussianStats::new(DVector::zeros(2), ok, 5).is_ok());
        assert!(GaussianStats::new(DVector::zeros(2), DMatrix::identity(2, 2), 1).is_err());
    }

    #[test]
    fn final_score_examples() {
        assert_eq!(final_score(0.0, 0.0, 0.0).unwrap(), 0.0);
        let v = final_score(1.0, 0.25, 0.25).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15, "got {v}");
        // Large fid approaches 1/3 from below.
        let big = final_score(1e12, 0.0, 0.0).unwrap();
        assert!(big < 1.0 / 3.0);
        assert!(big > 1.0 / 3.0 - 1e-6);
        assert!(final_score(1e6, 0.0, 0.0).unwrap() < big);
    }

    #[test]
    fn final_score_rejects_non_finite() {
        assert!(final_score(f64::NAN, 0.0, 0.0).is_err());
        assert!(final_score(0.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn combined_loss_is_plain_sum() {
        assert_eq!(combined_loss(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(combined_loss(1.5, 0.2, 0.3).unwrap(), 2.0);
        assert!(combined_loss(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn evaluate_identical_pairs_is_all_zero() {
        let spec = ExtractorSpec::new(4, 1, 4, 7).unwrap();
        let mut pairs = Vec::new();
        for i in 0..3u8 {
            let img = gray(8, 8, (0..64).map(|v| (v as u8).wrapping_mul(i + 1)).collect());
            pairs.push(EvalPair {
                id: format!("img{i}"),
                generated: img.clone(),
                target: img,
            });
        }
        let report = evaluate_set(&pairs, &spec).unwrap();
        assert_eq!(report.l2, 0.0);
        assert_eq!(report.lpips, 0.0);
        assert_eq!(report.fid, 0.0);
        assert_eq!(report.final_score, 0.0);
        assert_eq!(report.per_image.len(), 3);
        assert!(report.per_image.iter().all(|p| p.l2 == 0.0 && p.lpips == 0.0));
    }

    #[test]
    fn evaluate_set_order_invariant_up_to_per_image() {
        let spec = ExtractorSpec::new(4, 1, 4, 3).unwrap();
        let mk = |seed: u64| {
            let mut state = seed;
            gray(
                8,
                8,
                (0..64)
                    .map(|_| {
                        state = state
                            .wrapping_mul(6364136223846793005)
                            .wrapping_add(1442695040888963407);
                        (state >> 56) as u8
                    })
                    .collect(),
            )
        };
        let pairs: Vec<EvalPair> = (0..4)
            .map(|i| EvalPair {
                id: format!("p{i}"),
                generated: mk(i * 2 + 1),
                target: mk(i * 2 + 2),
            })
            .collect();
        let mut reversed = pairs.clone();
        reversed.reverse();
        let a = evaluate_set(&pairs, &spec).unwrap();
        let b = evaluate_set(&reversed, &spec).unwrap();
        assert!((a.l2 - b.l2).abs() < 1e-12);
        assert!((a.lpips - b.lpips).abs() < 1e-12);
        assert!((a.fid - b.fid).abs() < 1e-9);
        assert!((a.final_score - b.final_score).abs() < 1e-12);
    }

    #[test]
    fn evaluate_set_rejects_empty_and_mismatched() {
        let spec = ExtractorSpec::default();
        assert!(matches!(evaluate_set(&[], &spec), Err(Error::EmptySet)));
        let spec = ExtractorSpec::new(4, 1, 4, 0).unwrap();
        let pair = EvalPair {
            id: "x".into(),
            generated: gray(8, 8, vec![0; 64]),
            target: gray(4, 4, vec![0; 16]),
        };
        assert!(matches!(
            evaluate_set(&[pair], &spec),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn report_text_is_stable_and_recomputable() {
        let report = ScoreReport {
            l2: 0.25,
            lpips: 0.5,
            fid: 1.0,
            final_score: final_score(1.0, 0.5, 0.25).unwrap(),
            per_image: vec![PerImageScore {
                id: "a".into(),
                l2: 0.25,
                lpips: 0.5,
            }],
        };
        assert!((report.recompute_final() - report.final_score).abs() < 1e-12);
        let text = report.to_text();
        assert!(text.starts_with("l2=2.50000000000e-1\n"));
        assert!(text.contains("\nfinal="));
        assert!(text.contains("per_image:\na\t2.50000000000e-1\t5.00000000000e-1\n"));
    }

    #[test]
    fn evaluate_matches_composed_oracles_single_pair() {
        // One pair, every stage checked against the standalone ops.
        let spec = ExtractorSpec::new(4, 2, 3, 21).unwrap();
        let mut state = 5u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 56) as u8
        };
        let generated = gray(16, 16, (0..256).map(|_| next()).collect());
        let target = gray(16, 16, (0..256).map(|_| next()).collect());

        let report = evaluate_set(
            &[EvalPair {
                id: "only".into(),
                generated: generated.clone(),
                target: target.clone(),
            }],
            &spec,
        )
        .unwrap();

        let l2 = l2_normalized(&generated, &target).unwrap();
        let fg = extract_features(&generated, &spec).unwrap();
        let ft = extract_features(&target, &spec).unwrap();
        let lpips = lpips_distance(&fg, &ft).unwrap();
        let fid = frechet_distance(
            &fit_gaussian(std::slice::from_ref(&fg)).unwrap(),
            &fit_gaussian(std::slice::from_ref(&ft)).unwrap(),
        )
        .unwrap();
        assert_eq!(report.l2, l2);
        assert_eq!(report.lpips, lpips);
        assert_eq!(report.fid, fid);
        let expect = (std::f64::consts::FRAC_2_PI * fid.atan() + lpips + l2) / 3.0;
        assert!((report.final_score - expect).abs() < 1e-12);
    }
}
