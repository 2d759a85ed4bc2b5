//! Per-subcarrier compressed covariance
//!
//! ```text
//! R(α) = Σ_ℓ p_ℓ d_ℓ d_ℓ^H + N₀ W^H W,      d_ℓ = W^H a(ω_ℓ, κ_ℓ, α)
//! ```
//!
//! together with its analytic derivatives in the `η = [ω; κ; p; N₀]` layout,
//! the covariance-mismatch map across frequency and range, Gaussian snapshot
//! synthesis, and the per-snapshot negative log-likelihood.

use nalgebra::{Cholesky, Dyn};
use rayon::prelude::*;
use serde::Serialize;

use crate::combiner::Combiner;
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_defect, log_det, outer, CMatrix, CVector, RMatrix, C64};
use crate::model::{fill_steering, ArrayConfig, ParamVector, PathSet};
use crate::rng::{SplitMix64, SNAPSHOT_DOMAIN};

/// Compressed steering vectors and their compressed `ω`/`κ` derivatives, one
/// column per path.
pub(crate) struct CompressedSteering {
    pub d: CMatrix,
    pub d_omega: CMatrix,
    pub d_kappa: CMatrix,
}

pub(crate) fn check_dims(cfg: &ArrayConfig, comb: &Combiner) -> Result<()> {
    if cfg.elements() != comb.elements() {
        return invalid(format!("array has {} elements but combiner expects {}", cfg.elements(), comb.elements()));
    }
    Ok(())
}

pub(crate) fn compressed_steering(
    cfg: &ArrayConfig,
    comb: &Combiner,
    eta: &ParamVector,
    alpha: f64,
    with_derivatives: bool,
) -> Result<CompressedSteering> {
    check_dims(cfg, comb)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return invalid(format!("frequency ratio must be positive, got {alpha}"));
    }
    let (m, d) = (cfg.elements(), eta.paths());
    let blocks = if with_derivatives { 3 } else { 1 };
    let mut raw = CMatrix::zeros(m, blocks * d);
    let mbar = cfg.centered_index();
    for l in 0..d {
        fill_steering(cfg, eta.omega()[l], eta.kappa()[l], alpha, raw.column_mut(l).as_mut_slice());
        if with_derivatives {
            for i in 0..m {
                let a = raw[(i, l)];
                raw[(i, d + l)] = a * C64::new(0.0, alpha * mbar[i]);
                raw[(i, 2 * d + l)] = a * C64::new(0.0, -alpha * mbar[i] * mbar[i]);
            }
        }
    }
    let all = comb.compress_columns(raw);
    let (d_omega, d_kappa) = if with_derivatives {
        (all.columns(d, d).into_owned(), all.columns(2 * d, d).into_owned())
    } else {
        (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0))
    };
    Ok(CompressedSteering { d: all.columns(0, d).into_owned(), d_omega, d_kappa })
}

fn dyad_sum(e: &CVector, d: &CVector, scale: f64) -> CMatrix {
    (outer(e, d) + outer(d, e)) * C64::new(scale, 0.0)
}

/// Model covariance at one subcarrier and, once filled, its `3d + 1`
/// derivative matrices.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    alpha: f64,
    covariance: CMatrix,
    compressed: Vec<CVector>,
    derivatives: Vec<CMatrix>,
}

impl CovarianceModel {
    /// Builds `R(α)`; derivatives are left empty.
    pub fn new(cfg: &ArrayConfig, comb: &Combiner, eta: &ParamVector, alpha: f64) -> Result<Self> {
        let steer = compressed_steering(cfg, comb, eta, alpha, false)?;
        let compressed: Vec<CVector> = steer.d.column_iter().map(|c| c.into_owned()).collect();
        let mut covariance = comb.gram() * C64::new(eta.noise(), 0.0);
        for (d, &p) in compressed.iter().zip(eta.power()) {
            covariance += outer(d, d) * C64::new(p, 0.0);
        }
        debug_assert!(hermitian_defect(&covariance) <= 1e-12 * (1.0 + covariance.norm()));
        Ok(Self { alpha, covariance, compressed, derivatives: Vec::new() })
    }

    /// Builds `R(α)` and all derivative matrices.
    pub fn with_derivatives(cfg: &ArrayConfig, comb: &Combiner, eta: &ParamVector, alpha: f64) -> Result<Self> {
        covariance_derivatives(Self::new(cfg, comb, eta, alpha)?, cfg, comb, eta)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn covariance(&self) -> &CMatrix {
        &self.covariance
    }

    /// The compressed steering vectors `d_ℓ`.
    pub fn compressed(&self) -> &[CVector] {
        &self.compressed
    }

    /// `∂R/∂η_i` in parameter-vector order; empty until filled.
    pub fn derivatives(&self) -> &[CMatrix] {
        &self.derivatives
    }

    /// Replaces the derivative list. Used for finite-difference cross-checks.
    pub fn set_derivatives(&mut self, derivatives: Vec<CMatrix>) {
        self.derivatives = derivatives;
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    /// Hermitian Cholesky factor of `R`.
    pub fn factor(&self) -> Result<Cholesky<C64, Dyn>> {
        Cholesky::new(self.covariance.clone()).ok_or(Error::NotPositiveDefinite { alpha: self.alpha })
    }
}

/// Convenience wrapper taking physical paths and a noise power.
pub fn model_covariance(cfg: &ArrayConfig, comb: &Combiner, paths: &PathSet, noise: f64, alpha: f64) -> Result<CovarianceModel> {
    CovarianceModel::new(cfg, comb, &paths.params(noise)?, alpha)
}

/// Fills the analytic derivatives of `R` in the `[ω; κ; p; N₀]` layout.
pub fn covariance_derivatives(
    mut model: CovarianceModel,
    cfg: &ArrayConfig,
    comb: &Combiner,
    eta: &ParamVector,
) -> Result<CovarianceModel> {
    if model.compressed.len() != eta.paths() {
        return invalid("model and parameter vector disagree on the path count");
    }
    let steer = compressed_steering(cfg, comb, eta, model.alpha, true)?;
    let d = eta.paths();
    let mut out = Vec::with_capacity(eta.dim());
    for l in 0..d {
        let p = eta.power()[l];
        out.push(dyad_sum(&steer.d_omega.column(l).into_owned(), &model.compressed[l], p));
    }
    for l in 0..d {
        let p = eta.power()[l];
        out.push(dyad_sum(&steer.d_kappa.column(l).into_owned(), &model.compressed[l], p));
    }
    for dl in &model.compressed {
        out.push(outer(dl, dl));
    }
    out.push(comb.gram().clone());
    model.derivatives = out;
    Ok(model)
}

/// Relative Frobenius mismatch `||R(α, r) - R(1, r)||_F / ||R(1, r)||_F` for a
/// single path at a fixed angle.
#[derive(Debug, Clone, Serialize)]
pub struct MismatchGrid {
    pub alphas: Vec<f64>,
    pub ranges_m: Vec<f64>,
    /// Rows follow `alphas`, columns follow `ranges_m`.
    pub delta: RMatrix,
    pub max_delta: f64,
}

impl MismatchGrid {
    /// Largest mismatch over range in the two extreme-frequency columns.
    pub fn edge_max_delta(&self) -> f64 {
        let (lo, hi) = extreme_indices(&self.alphas);
        self.delta.row(lo).max().max(self.delta.row(hi).max())
    }
}

fn extreme_indices(values: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[lo] {
            lo = i;
        }
        if v > values[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

pub fn mismatch_grid(
    cfg: &ArrayConfig,
    comb: &Combiner,
    theta: f64,
    noise: f64,
    power: f64,
    alphas: &[f64],
    ranges_m: &[f64],
) -> Result<MismatchGrid> {
    check_dims(cfg, comb)?;
    if !alphas.contains(&1.0) {
        return invalid("alpha list must contain the center frequency ratio 1.0");
    }
    if ranges_m.iter().any(|r| !(*r > 0.0)) {
        return invalid("ranges must be positive");
    }
    let columns: Vec<Vec<f64>> = ranges_m
        .par_iter()
        .map(|&r| -> Result<Vec<f64>> {
            let eta = PathSet::single(cfg, theta, r, power)?.params(noise)?;
            let reference = CovarianceModel::new(cfg, comb, &eta, 1.0)?.covariance;
            let norm = reference.norm();
            alphas
                .iter()
                .map(|&a| {
                    if a == 1.0 {
                        return Ok(0.0);
                    }
                    let r_a = CovarianceModel::new(cfg, comb, &eta, a)?.covariance;
                    Ok((r_a - &reference).norm() / norm)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let delta = RMatrix::from_fn(alphas.len(), ranges_m.len(), |i, j| columns[j][i]);
    let max_delta = delta.iter().copied().fold(0.0, f64::max);
    Ok(MismatchGrid { alphas: alphas.to_vec(), ranges_m: ranges_m.to_vec(), delta, max_delta })
}

/// Compressed Gaussian snapshots at a list of subcarriers.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub alphas: Vec<f64>,
    pub snapshots: usize,
    /// One `N_RF × N` matrix per subcarrier.
    pub observations: Vec<CMatrix>,
    /// `(1/N) Σ_n y(n) y(n)^H` per subcarrier.
    pub sample_covariances: Vec<CMatrix>,
}

/// Draws `y_k(n) = W^H (Σ_ℓ s_ℓ a_ℓ + w)` with `s_ℓ ~ CN(0, p_ℓ)` and
/// `w ~ CN(0, N₀ I)`.
///
/// Subcarrier `i` of `alphas` uses its own SplitMix64 stream seeded with
/// `seed ^ SNAPSHOT_DOMAIN ^ i`; within a stream each snapshot draws the path
/// gains (path order) and then the element noise (element order).
pub fn generate_snapshots(
    cfg: &ArrayConfig,
    comb: &Combiner,
    eta: &ParamVector,
    alphas: &[f64],
    snapshots: usize,
    seed: u64,
) -> Result<SnapshotSet> {
    check_dims(cfg, comb)?;
    if snapshots == 0 {
        return invalid("snapshot count must be at least 1");
    }
    let (m, d) = (cfg.elements(), eta.paths());
    let observations: Vec<CMatrix> = alphas
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| -> Result<CMatrix> {
            if !(alpha.is_finite() && alpha > 0.0) {
                return invalid(format!("frequency ratio must be positive, got {alpha}"));
            }
            let mut steering = CMatrix::zeros(m, d);
            for l in 0..d {
                fill_steering(cfg, eta.omega()[l], eta.kappa()[l], alpha, steering.column_mut(l).as_mut_slice());
            }
            let mut rng = SplitMix64::new(seed ^ SNAPSHOT_DOMAIN ^ i as u64);
            let mut x = CMatrix::zeros(m, snapshots);
            for n in 0..snapshots {
                let gains: Vec<C64> = eta.power().iter().map(|&p| rng.next_complex_normal(p)).collect();
                for e in 0..m {
                    let mut v = rng.next_complex_normal(eta.noise());
                    for (l, g) in gains.iter().enumerate() {
                        v += g * steering[(e, l)];
                    }
                    x[(e, n)] = v;
                }
            }
            Ok(comb.compress_columns(x))
        })
        .collect::<Result<_>>()?;
    let scale = C64::new(1.0 / snapshots as f64, 0.0);
    let sample_covariances = observations.iter().map(|y| (y * y.adjoint()) * scale).collect();
    Ok(SnapshotSet { alphas: alphas.to_vec(), snapshots, observations, sample_covariances })
}

/// `log det R + tr(R⁻¹ R̂)`.
pub fn kl_objective(model: &CovarianceModel, sample: &CMatrix) -> Result<f64> {
    if sample.nrows() != model.dim() || sample.ncols() != model.dim() {
        return invalid("sample covariance shape does not match the model");
    }
    let factor = model.factor()?;
    let whitened = factor.solve(sample);
    Ok(log_det(&factor) + whitened.trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, relative_frobenius};

    fn setup(m: usize, nrf: usize) -> (ArrayConfig, Combiner) {
        (ArrayConfig::new(m, 28e9).unwrap(), Combiner::random(m, nrf, 11).unwrap())
    }

    #[test]
    fn no_signal_is_scaled_gram() {
        let (cfg, comb) = setup(32, 4);
        let paths = PathSet::single(&cfg, 0.7, 5.0, 0.0).unwrap();
        let model = model_covariance(&cfg, &comb, &paths, 0.3, 1.002).unwrap();
        assert!((model.covariance() - comb.gram() * C64::new(0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn full_array_top_eigenvalue() {
        let cfg = ArrayConfig::new(24, 28e9).unwrap();
        let comb = Combiner::identity(24).unwrap();
        let paths = PathSet::single(&cfg, 0.9, 4.0, 2.0).unwrap();
        let model = model_covariance(&cfg, &comb, &paths, 0.5, 1.0).unwrap();
        let eig = hermitian_eigenvalues(model.covariance());
        assert!((eig[23] - (2.0 * 24.0 + 0.5)).abs() < 1e-10);
        assert!((eig[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn trace_identity() {
        let (cfg, comb) = setup(40, 6);
        let paths = PathSet::new(&cfg, &[0.6, 1.9], &[3.0, 8.0], &[1.0, 0.4]).unwrap();
        let model = model_covariance(&cfg, &comb, &paths, 0.2, 0.997).unwrap();
        let mut direct = 0.2 * 6.0;
        for (d, p) in model.compressed().iter().zip(paths.power()) {
            direct += p * d.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        assert!((model.covariance().trace().re - direct).abs() < 1e-10);
        assert!(model.covariance().trace().im.abs() < 1e-12);
    }

    #[test]
    fn derivative_structure() {
        let (cfg, comb) = setup(16, 4);
        let eta = PathSet::single(&cfg, 1.1, 2.0, 1.5).unwrap().params(0.1).unwrap();
        let model = CovarianceModel::with_derivatives(&cfg, &comb, &eta, 1.01).unwrap();
        let dr = model.derivatives();
        assert_eq!(dr.len(), 4);
        assert_eq!(&dr[3], comb.gram());
        for m in dr {
            assert!(hermitian_defect(m) < 1e-12);
        }
        let eig = hermitian_eigenvalues(&dr[2]);
        assert!(eig[0] > -1e-12 && eig[1..3].iter().all(|v| v.abs() < 1e-10) && eig[3] > 0.0);
    }

    #[test]
    fn positive_definite_floor() {
        let (cfg, comb) = setup(64, 8);
        let paths = PathSet::new(&cfg, &[0.4, 2.0], &[2.0, 30.0], &[1.0, 3.0]).unwrap();
        let model = model_covariance(&cfg, &comb, &paths, 0.05, 1.004).unwrap();
        let floor = 0.05 * comb.gram_min_eigenvalue();
        assert!(hermitian_eigenvalues(model.covariance())[0] >= floor - 1e-10);
    }

    #[test]
    fn reduces_to_far_field_at_zero_curvature() {
        let (cfg, comb) = setup(16, 3);
        let eta = ParamVector::new(vec![0.8], vec![0.0], vec![1.0], 0.1).unwrap();
        let model = CovarianceModel::new(&cfg, &comb, &eta, 1.003).unwrap();
        let a = CVector::from_iterator(16, cfg.centered_index().iter().map(|m| C64::from_polar(1.0, 1.003 * 0.8 * m)));
        let d = comb.compress(&a).unwrap();
        assert!((model.compressed()[0].clone() - d).norm() < 1e-13);
    }

    #[test]
    fn mismatch_grid_basics() {
        let (cfg, comb) = setup(64, 8);
        let alphas = [0.99, 1.0, 1.01];
        let grid = mismatch_grid(&cfg, &comb, 0.7, 0.1, 1.0, &alphas, &[1.0, 10.0]).unwrap();
        assert!(grid.delta.row(1).iter().all(|&v| v == 0.0));
        assert!(grid.delta.iter().all(|&v| v >= 0.0));
        assert!(grid.max_delta >= grid.edge_max_delta());
        assert!(mismatch_grid(&cfg, &comb, 0.7, 0.1, 1.0, &[0.99], &[1.0]).is_err());
        assert!(mismatch_grid(&cfg, &comb, 0.7, 0.1, 1.0, &alphas, &[0.0]).is_err());
    }

    #[test]
    fn mismatch_grows_away_from_center() {
        let cfg = ArrayConfig::new(256, 28e9).unwrap();
        let comb = Combiner::random(256, 16, 1).unwrap();
        let alphas: Vec<f64> = (0..=20).map(|i| 1.0 + i as f64 * 2e-5).collect();
        let grid = mismatch_grid(&cfg, &comb, 40f64.to_radians(), 0.1, 1.0, &alphas, &[5.0]).unwrap();
        let col: Vec<f64> = grid.delta.column(0).iter().copied().collect();
        assert!(col.windows(2).all(|w| w[1] > w[0]), "{col:?}");
    }

    #[test]
    fn kl_at_truth() {
        let (cfg, comb) = setup(32, 5);
        let eta = PathSet::single(&cfg, 1.2, 3.0, 1.0).unwrap().params(0.1).unwrap();
        let model = CovarianceModel::new(&cfg, &comb, &eta, 1.0).unwrap();
        let r = model.covariance().clone();
        let factor = model.factor().unwrap();
        let value = kl_objective(&model, &r).unwrap();
        assert!((value - (log_det(&factor) + 5.0)).abs() < 1e-9);

        let base_trace = value - log_det(&factor);
        let scaled = kl_objective(&model, &(&r * C64::new(2.5, 0.0))).unwrap() - log_det(&factor);
        assert!((scaled - 2.5 * base_trace).abs() < 1e-9);
    }

    #[test]
    fn kl_scan_minimum_at_true_power() {
        let (cfg, comb) = setup(32, 5);
        let truth = PathSet::single(&cfg, 1.2, 3.0, 1.0).unwrap();
        let sample = model_covariance(&cfg, &comb, &truth, 0.1, 1.0).unwrap().covariance().clone();
        let scan: Vec<(f64, f64)> = (50..=150)
            .map(|i| {
                let p = i as f64 / 100.0;
                let paths = PathSet::single(&cfg, 1.2, 3.0, p).unwrap();
                let model = model_covariance(&cfg, &comb, &paths, 0.1, 1.0).unwrap();
                (p, kl_objective(&model, &sample).unwrap())
            })
            .collect();
        let best = scan.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert_eq!(best.0, 1.0);
    }

    #[test]
    fn kl_rejects_singular_model() {
        let cfg = ArrayConfig::new(8, 28e9).unwrap();
        let comb = Combiner::identity(8).unwrap();
        let eta = ParamVector::new(vec![0.1], vec![0.0], vec![1.0], 1e-300).unwrap();
        let mut model = CovarianceModel::new(&cfg, &comb, &eta, 1.0).unwrap();
        model.covariance = CMatrix::zeros(8, 8);
        let err = kl_objective(&model, &CMatrix::identity(8, 8)).unwrap_err();
        assert_eq!(err, Error::NotPositiveDefinite { alpha: 1.0 });
    }

    #[test]
    fn snapshots_are_deterministic_and_psd() {
        let (cfg, comb) = setup(16, 4);
        let eta = PathSet::single(&cfg, 1.0, 4.0, 1.0).unwrap().params(0.1).unwrap();
        let a = generate_snapshots(&cfg, &comb, &eta, &[0.999, 1.0], 32, 5).unwrap();
        let b = generate_snapshots(&cfg, &comb, &eta, &[0.999, 1.0], 32, 5).unwrap();
        assert_eq!(a.observations, b.observations);
        assert_ne!(a.observations[0], a.observations[1]);
        for r in &a.sample_covariances {
            assert!(hermitian_eigenvalues(r)[0] >= -1e-10);
        }
    }

    #[test]
    fn noise_only_snapshot_energy() {
        let cfg = ArrayConfig::new(16, 28e9).unwrap();
        let comb = Combiner::identity(16).unwrap();
        let eta = ParamVector::new(vec![0.0], vec![0.0], vec![0.0], 1e-3).unwrap();
        let set = generate_snapshots(&cfg, &comb, &eta, &[1.0], 4000, 1).unwrap();
        let per_element = set.sample_covariances[0].trace().re / 16.0;
        assert!((per_element / 1e-3 - 1.0).abs() < 0.05, "{per_element}");
    }

    #[test]
    fn sample_covariance_approaches_model() {
        let (cfg, comb) = setup(32, 4);
        let eta = PathSet::single(&cfg, 0.8, 5.0, 1.0).unwrap().params(0.1).unwrap();
        let model = CovarianceModel::new(&cfg, &comb, &eta, 1.0).unwrap();
        let small = generate_snapshots(&cfg, &comb, &eta, &[1.0], 50, 3).unwrap();
        let large = generate_snapshots(&cfg, &comb, &eta, &[1.0], 20_000, 3).unwrap();
        let e_small = relative_frobenius(&small.sample_covariances[0], model.covariance());
        let e_large = relative_frobenius(&large.sample_covariances[0], model.covariance());
        assert!(e_large < 0.05 && e_large < e_small, "{e_small} {e_large}");
    }
}
