//! Slepian–Bangs Fisher information per subcarrier, its wideband aggregate,
//! and the thresholded eigen-pseudoinverse.
//!
//! Two evaluation routes exist for the per-subcarrier FIM
//!
//! ```text
//! [J_k]_ij = N · Re tr(R⁻¹ ∂_i R  R⁻¹ ∂_j R)
//! ```
//!
//! * [`fim_subcarrier`] works on dense derivative matrices and a Cholesky
//!   solve. It accepts any derivative list, which is what the finite-difference
//!   checks feed it.
//! * [`fim_subcarrier_structured`] never forms `R⁻¹`. Every `R⁻¹ ∂_i R` in this
//!   model is a scaled identity plus a rank ≤ 2d term once `R⁻¹` is written with
//!   the Woodbury identity around `W^H W`, so each trace costs `O(N_RF d²)`.
//!   This keeps the 256-element full-array reference cheap.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;

use nalgebra::{Cholesky, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::combiner::Combiner;
use crate::covariance::{compressed_steering, CovarianceModel};
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitize, symmetric_defect, symmetrize, trace_of_product, CMatrix, CompensatedSum, RMatrix, C64};
use crate::model::{ArrayConfig, OfdmGrid, ParamVector};

/// Relative eigenvalue cut-off of the pseudoinverse.
pub const PINV_RELATIVE_TOLERANCE: f64 = 1e-6;

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Dense route: derivative matrices must be filled.
pub fn fim_subcarrier(model: &CovarianceModel, snapshots: usize) -> Result<RMatrix> {
    if model.derivatives().is_empty() {
        return Err(Error::InvalidState("covariance derivatives have not been computed".into()));
    }
    let factor = model.factor()?;
    let solved: Vec<CMatrix> = model.derivatives().iter().map(|d| factor.solve(d)).collect();
    let n = solved.len();
    let scale = snapshots as f64;
    let mut j = RMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            j[(a, b)] = scale * trace_of_product(&solved[a], &solved[b]).re;
        }
    }
    Ok(symmetrize(&j))
}

/// `shift · I + left · right^H`
struct LowRankOperator {
    shift: f64,
    left: CMatrix,
    right: CMatrix,
}

impl LowRankOperator {
    fn trace_with(&self, other: &Self, dim: usize) -> C64 {
        let mut acc = real(self.shift * other.shift * dim as f64);
        if self.shift != 0.0 {
            acc += other.right.ad_mul(&other.left).trace() * self.shift;
        }
        if other.shift != 0.0 {
            acc += self.right.ad_mul(&self.left).trace() * other.shift;
        }
        let cross_ab = self.right.ad_mul(&other.left);
        let cross_ba = other.right.ad_mul(&self.left);
        acc + trace_of_product(&cross_ab, &cross_ba)
    }
}

fn hcat(blocks: &[&CMatrix]) -> CMatrix {
    let rows = blocks[0].nrows();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Structured route; agrees with [`fim_subcarrier`] to rounding.
pub fn fim_subcarrier_structured(
    cfg: &ArrayConfig,
    comb: &Combiner,
    eta: &ParamVector,
    alpha: f64,
    snapshots: usize,
) -> Result<RMatrix> {
    let steer = compressed_steering(cfg, comb, eta, alpha, true)?;
    let (n, d) = (comb.rf_chains(), eta.paths());
    let noise = eta.noise();

    // R = (D S)(D S)^H + N₀ Q with S = diag(√p), Q = W^H W.
    let sqrt_p = DVector::from_iterator(d, eta.power().iter().map(|p| real(p.sqrt())));
    let s = CMatrix::from_diagonal(&sqrt_p);
    let stacked = hcat(&[&steer.d, &steer.d_omega, &steer.d_kappa]);
    let q_inv_stacked = comb.gram_solve(&stacked);
    let z = q_inv_stacked.columns(0, d).into_owned();
    let zs = &z * &s;
    let ds = &steer.d * &s;
    let capacitance = hermitize(&(CMatrix::identity(d, d) * real(noise) + ds.ad_mul(&zs)));
    let cap = Cholesky::new(capacitance).ok_or(Error::NotPositiveDefinite { alpha })?;

    // R⁻¹ X = (Q⁻¹X - ZS C⁻¹ (ZS)^H X) / N₀, applied to [D, D_ω, D_κ].
    let correction = &zs * cap.solve(&zs.ad_mul(&stacked));
    let g_stacked = (q_inv_stacked - correction) * real(1.0 / noise);
    let g_d = g_stacked.columns(0, d);
    let g_omega = g_stacked.columns(d, d);
    let g_kappa = g_stacked.columns(2 * d, d);

    let mut ops = Vec::with_capacity(eta.dim());
    for (g_e, e) in [(&g_omega, &steer.d_omega), (&g_kappa, &steer.d_kappa)] {
        for l in 0..d {
            let p = real(eta.power()[l]);
            let left = hcat(&[&(g_e.columns(l, 1) * p), &(g_d.columns(l, 1) * p)]);
            let right = hcat(&[&steer.d.columns(l, 1).into_owned(), &e.columns(l, 1).into_owned()]);
            ops.push(LowRankOperator { shift: 0.0, left, right });
        }
    }
    for l in 0..d {
        ops.push(LowRankOperator {
            shift: 0.0,
            left: g_d.columns(l, 1).into_owned(),
            right: steer.d.columns(l, 1).into_owned(),
        });
    }
    // R⁻¹ Q = (I - ZS C⁻¹ S D^H) / N₀
    ops.push(LowRankOperator {
        shift: 1.0 / noise,
        left: (&zs * cap.solve(&s)) * real(-1.0 / noise),
        right: steer.d.clone(),
    });

    let dim = ops.len();
    let scale = snapshots as f64;
    let mut j = RMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let v = scale * ops[a].trace_with(&ops[b], n).re;
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    Ok(j)
}

/// Thresholded eigen-pseudoinverse of a symmetric PSD matrix.
#[derive(Debug, Clone, Serialize)]
pub struct Pseudoinverse {
    pub matrix: RMatrix,
    pub rank: usize,
    /// Eigenvalues in descending order, negatives clamped to zero.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: RMatrix,
    pub tolerance: f64,
}

impl Pseudoinverse {
    /// The rank-`rank` part of the input that this pseudoinverse inverts.
    pub fn retained(&self) -> RMatrix {
        let n = self.eigenvectors.nrows();
        let mut out = RMatrix::zeros(n, n);
        for i in 0..self.rank {
            let v = self.eigenvectors.column(i);
            out += self.eigenvalues[i] * v * v.transpose();
        }
        out
    }
}

/// `J = V diag(σ) V^T`; eigenvalues above `1e-6 σ_max` are inverted, the rest
/// dropped.
pub fn fim_pseudoinverse(j: &RMatrix) -> Result<Pseudoinverse> {
    if !j.is_square() {
        return invalid("FIM must be square");
    }
    let scale = j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if symmetric_defect(j) > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return invalid("FIM is not symmetric");
    }
    let n = j.nrows();
    let eig = nalgebra::SymmetricEigen::new(symmetrize(j));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let eigenvectors = RMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let sigma_max = eigenvalues.first().copied().unwrap_or(0.0);
    let tolerance = PINV_RELATIVE_TOLERANCE * sigma_max;
    let inverted = DVector::from_iterator(n, eigenvalues.iter().map(|&s| if s > tolerance { 1.0 / s } else { 0.0 }));
    let rank = inverted.iter().filter(|v| **v != 0.0).count();
    let matrix = symmetrize(&(&eigenvectors * RMatrix::from_diagonal(&inverted) * eigenvectors.transpose()));
    Ok(Pseudoinverse { matrix, rank, eigenvalues, eigenvectors, tolerance })
}

/// Memoizes per-subcarrier FIMs keyed on the frequency ratio and a hash of
/// everything else that enters the FIM.
#[derive(Debug, Default)]
pub struct FimCache {
    entries: Mutex<HashMap<(u64, u64), RMatrix>>,
}

impl FimCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_compute(&self, context: u64, alpha: f64, f: impl FnOnce() -> Result<RMatrix>) -> Result<RMatrix> {
        let key = (context, alpha.to_bits());
        if let Some(hit) = self.entries.lock().ok().and_then(|e| e.get(&key).cloned()) {
            return Ok(hit);
        }
        let value = f()?;
        if let Ok(mut e) = self.entries.lock() {
            e.insert(key, value.clone());
        }
        Ok(value)
    }
}

fn context_key(cfg: &ArrayConfig, comb: &Combiner, eta: &ParamVector, snapshots: usize) -> u64 {
    let mut h = DefaultHasher::new();
    cfg.elements().hash(&mut h);
    cfg.carrier_hz().to_bits().hash(&mut h);
    comb.kind().hash(&mut h);
    comb.rf_chains().hash(&mut h);
    for v in eta.to_vec() {
        v.to_bits().hash(&mut h);
    }
    snapshots.hash(&mut h);
    h.finish()
}

/// Per-subcarrier and aggregated information for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct FimBundle {
    /// Selected subcarrier indices (1-based).
    pub subcarriers: Vec<usize>,
    pub alphas: Vec<f64>,
    pub per_subcarrier: Vec<RMatrix>,
    /// `Σ_k J_k` over the selected subcarriers, ascending `k`, compensated.
    pub wideband: RMatrix,
    /// `J` at `α = 1` exactly.
    pub narrowband: RMatrix,
    /// `K_s · J_NB`.
    pub data_diversity: RMatrix,
    pub snapshots: usize,
    pub wideband_inverse: Pseudoinverse,
    pub narrowband_inverse: Pseudoinverse,
}

impl FimBundle {
    pub fn selected_count(&self) -> usize {
        self.subcarriers.len()
    }
}

pub fn fim_wideband(
    grid: &OfdmGrid,
    cfg: &ArrayConfig,
    comb: &Combiner,
    eta: &ParamVector,
    snapshots: usize,
    cache: Option<&FimCache>,
) -> Result<FimBundle> {
    let alphas = grid.selected_alphas();
    if alphas.is_empty() {
        return invalid("grid has no selected subcarriers");
    }
    let context = context_key(cfg, comb, eta, snapshots);
    let eval = |alpha: f64| -> Result<RMatrix> {
        let run = || fim_subcarrier_structured(cfg, comb, eta, alpha, snapshots);
        match cache {
            Some(c) => c.get_or_compute(context, alpha, run),
            None => run(),
        }
    };
    let per_subcarrier: Vec<RMatrix> = alphas.par_iter().map(|&a| eval(a)).collect::<Result<_>>()?;
    let dim = eta.dim();
    let mut acc = CompensatedSum::zeros(dim, dim);
    for jk in &per_subcarrier {
        acc.add(jk);
    }
    let wideband = acc.finish();
    let narrowband = eval(1.0)?;
    let data_diversity = &narrowband * alphas.len() as f64;
    let wideband_inverse = fim_pseudoinverse(&wideband)?;
    let narrowband_inverse = fim_pseudoinverse(&narrowband)?;
    Ok(FimBundle {
        subcarriers: grid.selected().to_vec(),
        alphas,
        per_subcarrier,
        wideband,
        narrowband,
        data_diversity,
        snapshots,
        wideband_inverse,
        narrowband_inverse,
    })
}

/// Least-squares scalar `β` with `J_k ≈ β J_NB`.
pub fn beta_coefficient(jk: &RMatrix, jnb: &RMatrix) -> Result<f64> {
    let denom = jnb.dot(jnb);
    if denom == 0.0 {
        return Err(Error::InvalidState("narrowband FIM is zero".into()));
    }
    Ok((jk * jnb).trace() / denom)
}

/// `β_k = tr(J_k J_NB) / tr(J_NB J_NB)` over the selected subcarriers.
pub fn beta_diagnostic(bundle: &FimBundle) -> Result<Vec<f64>> {
    bundle.per_subcarrier.iter().map(|jk| beta_coefficient(jk, &bundle.narrowband)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::CovarianceModel;
    use crate::linalg::{lowner_margin, symmetric_eigenvalues, symmetric_norm};
    use crate::model::{build_grid, PathSet};
    use crate::rng::SplitMix64;

    fn setup(m: usize, nrf: usize, seed: u64) -> (ArrayConfig, Combiner) {
        (ArrayConfig::new(m, 28e9).unwrap(), Combiner::random(m, nrf, seed).unwrap())
    }

    fn rel(a: &RMatrix, b: &RMatrix) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn structured_matches_dense() {
        let (cfg, comb) = setup(48, 6, 3);
        let paths = PathSet::new(&cfg, &[0.7, 1.8], &[3.0, 9.0], &[1.0, 0.3]).unwrap();
        let eta = paths.params(0.1).unwrap();
        for alpha in [0.99, 1.0, 1.013] {
            let model = CovarianceModel::with_derivatives(&cfg, &comb, &eta, alpha).unwrap();
            let dense = fim_subcarrier(&model, 64).unwrap();
            let fast = fim_subcarrier_structured(&cfg, &comb, &eta, alpha, 64).unwrap();
            assert!(rel(&fast, &dense) < 1e-10, "alpha {alpha}: {}", rel(&fast, &dense));
        }
    }

    #[test]
    fn structured_matches_dense_full_array() {
        let cfg = ArrayConfig::new(32, 28e9).unwrap();
        let comb = Combiner::identity(32).unwrap();
        let eta = PathSet::single(&cfg, 0.9, 2.0, 1.0).unwrap().params(0.1).unwrap();
        let model = CovarianceModel::with_derivatives(&cfg, &comb, &eta, 1.004).unwrap();
        let dense = fim_subcarrier(&model, 10).unwrap();
        let fast = fim_subcarrier_structured(&cfg, &comb, &eta, 1.004, 10).unwrap();
        assert!(rel(&fast, &dense) < 1e-10);
    }

    #[test]
    fn requires_derivatives() {
        let (cfg, comb) = setup(16, 4, 1);
        let eta = PathSet::single(&cfg, 0.9, 2.0, 1.0).unwrap().params(0.1).unwrap();
        let model = CovarianceModel::new(&cfg, &comb, &eta, 1.0).unwrap();
        assert!(matches!(fim_subcarrier(&model, 1), Err(Error::InvalidState(_))));
    }

    #[test]
    fn zero_derivatives_give_zero_fim() {
        let (cfg, comb) = setup(16, 4, 1);
        let eta = PathSet::single(&cfg, 0.9, 2.0, 1.0).unwrap().params(0.1).unwrap();
        let mut model = CovarianceModel::new(&cfg, &comb, &eta, 1.0).unwrap();
        model.set_derivatives(vec![CMatrix::zeros(4, 4); 4]);
        assert_eq!(fim_subcarrier(&model, 8).unwrap(), RMatrix::zeros(4, 4));
    }

    #[test]
    fn linear_in_snapshots() {
        let (cfg, comb) = setup(32, 4, 2);
        let eta = PathSet::single(&cfg, 0.9, 2.0, 1.0).unwrap().params(0.1).unwrap();
        let one = fim_subcarrier_structured(&cfg, &comb, &eta, 1.0, 32).unwrap();
        let two = fim_subcarrier_structured(&cfg, &comb, &eta, 1.0, 64).unwrap();
        assert!(rel(&two, &(&one * 2.0)) < 1e-14);
    }

    #[test]
    fn noise_block_closed_form() {
        let (cfg, comb) = setup(32, 6, 4);
        let eta = ParamVector::new(vec![0.3], vec![1e-3], vec![0.0], 0.25).unwrap();
        let j = fim_subcarrier_structured(&cfg, &comb, &eta, 1.0, 64).unwrap();
        let expected = 64.0 * 6.0 / (0.25 * 0.25);
        assert!((j[(3, 3)] - expected).abs() < 1e-9 * expected);
        let model = CovarianceModel::with_derivatives(&cfg, &comb, &eta, 1.0).unwrap();
        let dense = fim_subcarrier(&model, 64).unwrap();
        assert!((dense[(3, 3)] - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn symmetric_and_psd() {
        let (cfg, comb) = setup(64, 8, 5);
        let eta = PathSet::new(&cfg, &[0.5, 2.2], &[2.5, 6.0], &[1.0, 2.0]).unwrap().params(0.1).unwrap();
        let j = fim_subcarrier_structured(&cfg, &comb, &eta, 1.01, 16).unwrap();
        assert!(symmetric_defect(&j) <= 1e-10 * symmetric_norm(&j));
        assert!(symmetric_eigenvalues(&j)[0] >= -1e-8 * symmetric_norm(&j));
    }

    #[test]
    fn pseudoinverse_examples() {
        let eye = RMatrix::identity(4, 4);
        let p = fim_pseudoinverse(&eye).unwrap();
        assert_eq!(p.rank, 4);
        assert!((p.matrix - eye).norm() < 1e-15);

        let d = RMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-9]));
        let p = fim_pseudoinverse(&d).unwrap();
        assert_eq!(p.rank, 1);
        assert!((p.matrix[(0, 0)] - 1.0).abs() < 1e-15 && p.matrix[(1, 1)] == 0.0);

        let z = fim_pseudoinverse(&RMatrix::zeros(3, 3)).unwrap();
        assert_eq!(z.rank, 0);
        assert_eq!(z.matrix, RMatrix::zeros(3, 3));

        let asym = RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(fim_pseudoinverse(&asym).is_err());
    }

    #[test]
    fn pseudoinverse_penrose_identities() {
        let mut rng = SplitMix64::new(8);
        for trial in 0..25 {
            let n = 3 + trial % 5;
            let rank = 1 + trial % n;
            let b = RMatrix::from_fn(n, rank, |_, _| rng.next_normal_pair().0 * 10f64.powi((trial % 4) as i32));
            let j = &b * b.transpose();
            let p = fim_pseudoinverse(&j).unwrap();
            let scale_j = j.norm();
            let scale_p = p.matrix.norm();
            assert!((&p.matrix * &j * &p.matrix - &p.matrix).norm() <= 1e-8 * scale_p);
            assert!((&j * &p.matrix * &j - &j).norm() <= 1e-8 * scale_j);
            assert_eq!(p.rank, rank);
        }
    }

    #[test]
    fn wideband_sum_and_lowner_order() {
        let (cfg, comb) = setup(64, 8, 6);
        let eta = PathSet::single(&cfg, 0.7, 3.0, 1.0).unwrap().params(0.1).unwrap();
        let grid = build_grid(28e9, 120e3, 400e6, 32).unwrap();
        let bundle = fim_wideband(&grid, &cfg, &comb, &eta, 64, None).unwrap();
        assert_eq!(bundle.selected_count(), 32);
        let norm = symmetric_norm(&bundle.wideband);
        for jk in &bundle.per_subcarrier {
            assert!(lowner_margin(&bundle.wideband, jk) >= -1e-8 * norm);
        }
        let trace_sum: f64 = bundle.per_subcarrier.iter().map(|j| j.trace()).sum();
        assert!((bundle.wideband.trace() - trace_sum).abs() <= 1e-12 * trace_sum);
        assert!(rel(&bundle.data_diversity, &(&bundle.narrowband * 32.0)) == 0.0);
    }

    #[test]
    fn narrowband_reduction() {
        let (cfg, comb) = setup(32, 4, 7);
        let eta = PathSet::single(&cfg, 0.7, 3.0, 1.0).unwrap().params(0.1).unwrap();
        let grid = OfdmGrid::narrowband(28e9, 120e3).unwrap();
        let b = fim_wideband(&grid, &cfg, &comb, &eta, 64, None).unwrap();
        assert_eq!(b.wideband, b.narrowband);
        assert_eq!(b.data_diversity, b.narrowband);
    }

    #[test]
    fn cache_reuses_entries() {
        let (cfg, comb) = setup(32, 4, 7);
        let eta = PathSet::single(&cfg, 0.7, 3.0, 1.0).unwrap().params(0.1).unwrap();
        let cache = FimCache::new();
        let grid = build_grid(28e9, 120e3, 2.4e6, 512).unwrap();
        let a = fim_wideband(&grid, &cfg, &comb, &eta, 64, Some(&cache)).unwrap();
        let filled = cache.len();
        assert_eq!(filled, grid.selected_count() + usize::from(!grid.selected_alphas().contains(&1.0)));
        let b = fim_wideband(&grid, &cfg, &comb, &eta, 64, Some(&cache)).unwrap();
        assert_eq!(cache.len(), filled);
        assert_eq!(a.wideband, b.wideband);
        let other = Combiner::random(32, 4, 8).unwrap();
        fim_wideband(&grid, &cfg, &other, &eta, 64, Some(&cache)).unwrap();
        assert_eq!(cache.len(), 2 * filled);
    }

    #[test]
    fn beta_examples() {
        let j = RMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!((beta_coefficient(&j, &j).unwrap() - 1.0).abs() < 1e-15);
        assert!((beta_coefficient(&(&j * 2.0), &j).unwrap() - 2.0).abs() < 1e-15);
        assert!(beta_coefficient(&j, &RMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn path_permutation_permutes_fim() {
        let (cfg, comb) = setup(48, 8, 9);
        let a = PathSet::new(&cfg, &[0.6, 1.5], &[2.0, 7.0], &[1.0, 0.5]).unwrap().params(0.1).unwrap();
        let b = PathSet::new(&cfg, &[1.5, 0.6], &[7.0, 2.0], &[0.5, 1.0]).unwrap().params(0.1).unwrap();
        let ja = fim_subcarrier_structured(&cfg, &comb, &a, 1.002, 8).unwrap();
        let jb = fim_subcarrier_structured(&cfg, &comb, &b, 1.002, 8).unwrap();
        let perm = [1, 0, 3, 2, 5, 4, 6];
        for i in 0..7 {
            for k in 0..7 {
                let x = ja[(perm[i], perm[k])];
                assert!((jb[(i, k)] - x).abs() <= 1e-9 * ja.norm());
            }
        }
    }
}
