//! Self-check suite run by `nfcrb verify`.
//!
//! Every check records the measured value next to its tolerance so a failing
//! run says by how much it failed.

use serde::Serialize;

use crate::combiner::Combiner;
use crate::covariance::{covariance_derivatives, generate_snapshots, CovarianceModel};
use crate::crb::ADDITIVITY_TOLERANCE_DB;
use crate::error::Result;
use crate::experiment::{evaluate, evaluate_on_grid, Scenario};
use crate::fim::{beta_diagnostic, fim_wideband};
use crate::linalg::{hermitian_defect, hermitian_eigenvalues, lowner_margin, relative_frobenius, symmetric_defect, symmetric_norm, CMatrix, C64};
use crate::model::{ArrayConfig, OfdmGrid, ParamVector};

/// Largest tolerated relative Frobenius error of the analytic derivatives.
pub const FD_TOLERANCE: f64 = 1e-6;
pub const LOWNER_TOLERANCE: f64 = 1e-8;
pub const PENROSE_TOLERANCE: f64 = 1e-8;
pub const SLOPE_TARGET: f64 = -0.5;
pub const SLOPE_TOLERANCE: f64 = 0.1;
pub const BETA_RANGE: (f64, f64) = (0.7, 1.3);

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Perturbs the analytic `ω` derivative so the finite-difference check
    /// must fail.
    pub corrupt_derivative: bool,
    pub mc_trials: usize,
    pub mc_snapshots: Vec<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 1, corrupt_derivative: false, mc_trials: 20, mc_snapshots: vec![64, 256, 1024, 4096] }
    }
}

/// Central differences in `ω` and `κ`, with steps that move the outermost
/// element phase by about `1e-5` rad. `R` is linear in `p` and `N₀`, so those
/// use a forward step, which also keeps the perturbed powers non-negative.
pub fn finite_difference_derivatives(cfg: &ArrayConfig, comb: &Combiner, eta: &ParamVector, alpha: f64) -> Result<Vec<CMatrix>> {
    let base = eta.to_vec();
    let d = eta.paths();
    let edge = (cfg.elements() as f64 - 1.0) / 2.0;
    let at = |v: &[f64]| -> Result<CMatrix> { Ok(CovarianceModel::new(cfg, comb, &ParamVector::from_slice(d, v)?, alpha)?.covariance().clone()) };
    let center = at(&base)?;
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut plus = base.clone();
        if i < 2 * d {
            let h = if i < d { 1e-5 / edge } else { 1e-5 / (edge * edge) };
            let mut minus = base.clone();
            plus[i] += h;
            minus[i] -= h;
            out.push((at(&plus)? - at(&minus)?) * C64::new(0.5 / h, 0.0));
        } else {
            let h = 1e-3 * base[i].abs().max(1e-2);
            plus[i] += h;
            out.push((at(&plus)? - &center) * C64::new(1.0 / h, 0.0));
        }
    }
    Ok(out)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Mean relative Frobenius error of the sample covariance for each snapshot
/// count, averaged over `trials` independent draws at the center subcarrier.
pub fn sample_covariance_errors(
    cfg: &ArrayConfig,
    comb: &Combiner,
    eta: &ParamVector,
    snapshot_counts: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let model = CovarianceModel::new(cfg, comb, eta, 1.0)?;
    snapshot_counts
        .iter()
        .map(|&n| {
            let mut acc = 0.0;
            for t in 0..trials {
                let s = seed.wrapping_mul(0x9E37_79B9).wrapping_add(((n as u64) << 20) ^ t as u64);
                let set = generate_snapshots(cfg, comb, eta, &[1.0], n, s)?;
                acc += relative_frobenius(&set.sample_covariances[0], model.covariance());
            }
            Ok(acc / trials as f64)
        })
        .collect()
}

struct Recorder(Vec<Check>);

impl Recorder {
    fn push(&mut self, name: &str, passed: bool, value: f64, tolerance: f64, detail: impl Into<String>) {
        self.0.push(Check { name: name.into(), passed, value, tolerance, detail: detail.into() });
    }

    /// `value <= tolerance`
    fn at_most(&mut self, name: &str, value: f64, tolerance: f64, detail: impl Into<String>) {
        self.push(name, value <= tolerance, value, tolerance, detail);
    }
}

pub fn run_verification(scn: &Scenario, opts: &VerifyOptions) -> Result<VerifyReport> {
    let cfg = scn.array()?;
    let comb = scn.combiner(opts.seed)?;
    let eta = scn.params()?;
    let grid = scn.grid()?;
    let alphas = grid.selected_alphas();
    let mut rec = Recorder(Vec::new());

    let probe = [alphas[0], 1.0, alphas[alphas.len() - 1]];
    let mut worst_fd = 0.0f64;
    let mut worst_herm = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for &alpha in &probe {
        let mut model = covariance_derivatives(CovarianceModel::new(&cfg, &comb, &eta, alpha)?, &cfg, &comb, &eta)?;
        if opts.corrupt_derivative {
            let mut ders = model.derivatives().to_vec();
            ders[0] *= C64::new(1.001, 0.0);
            model.set_derivatives(ders);
        }
        let fd = finite_difference_derivatives(&cfg, &comb, &eta, alpha)?;
        for (a, f) in model.derivatives().iter().zip(&fd) {
            worst_fd = worst_fd.max(relative_frobenius(a, f));
            worst_herm = worst_herm.max(hermitian_defect(a) / a.norm().max(f64::MIN_POSITIVE));
        }
        let r = model.covariance();
        worst_herm = worst_herm.max(hermitian_defect(r) / r.norm());
        min_eig = min_eig.min(hermitian_eigenvalues(r)[0]);
    }
    rec.at_most("finite-difference-derivatives", worst_fd, FD_TOLERANCE, "max relative Frobenius error over parameters and probe subcarriers");
    rec.at_most("hermitian-covariance", worst_herm, 1e-12, "relative Hermitian defect of R and its derivatives");
    rec.push("positive-definite-covariance", min_eig > 0.0, min_eig, 0.0, "smallest eigenvalue of R");

    let bundle = fim_wideband(&grid, &cfg, &comb, &eta, scn.snapshots, None)?;
    let wb_norm = symmetric_norm(&bundle.wideband);
    let mut worst_sym = 0.0f64;
    let mut worst_psd = 0.0f64;
    let mut worst_lowner = 0.0f64;
    for jk in &bundle.per_subcarrier {
        let n = symmetric_norm(jk);
        worst_sym = worst_sym.max(symmetric_defect(jk) / n);
        worst_psd = worst_psd.max(-crate::linalg::symmetric_eigenvalues(jk)[0] / n);
        worst_lowner = worst_lowner.max(-lowner_margin(&bundle.wideband, jk) / wb_norm);
    }
    rec.at_most("symmetric-fim", worst_sym, 1e-12, "relative symmetric defect of J_k");
    rec.at_most("psd-fim", worst_psd, LOWNER_TOLERANCE, "-lambda_min(J_k)/||J_k||");
    rec.at_most("lowner-monotonicity", worst_lowner, LOWNER_TOLERANCE, "-lambda_min(J_WB - J_k)/||J_WB||");

    let mut worst_pen = 0.0f64;
    let mut dropped = 0.0f64;
    for (j, p) in [(&bundle.wideband, &bundle.wideband_inverse), (&bundle.narrowband, &bundle.narrowband_inverse)] {
        // J P J reproduces only the retained spectrum; the truncated part is
        // reported separately.
        let pm = &p.matrix;
        let jr = p.retained();
        worst_pen = worst_pen.max((pm * j * pm - pm).norm() / pm.norm().max(f64::MIN_POSITIVE));
        worst_pen = worst_pen.max((&jr * pm * &jr - &jr).norm() / jr.norm().max(f64::MIN_POSITIVE));
        dropped = dropped.max((j - &jr).norm() / j.norm().max(f64::MIN_POSITIVE));
    }
    rec.at_most("moore-penrose", worst_pen, PENROSE_TOLERANCE, format!("relative residuals of P J P = P and J_r P J_r = J_r; truncated fraction of J {dropped:.2e}"));

    let op = evaluate(scn, opts.seed, None)?;
    let dec = &op.decomposition;
    let mut worst_add = 0.0f64;
    for (t, g) in dec.delta_total_theta.iter().zip(&dec.delta_gd_theta).chain(dec.delta_total_r.iter().zip(&dec.delta_gd_r)) {
        if t.is_finite() {
            worst_add = worst_add.max((t - dec.delta_dd - g).abs());
        }
    }
    rec.at_most("decomposition-additivity", worst_add, ADDITIVITY_TOLERANCE_DB, "|total - (dd + gd)| in dB");
    let mut wb_over_nb = f64::NEG_INFINITY;
    for (w, n) in op.wideband.paths.iter().zip(&op.narrowband.paths) {
        wb_over_nb = wb_over_nb.max(w.theta_var / n.theta_var).max(w.range_var / n.range_var);
    }
    if wb_over_nb.is_nan() {
        wb_over_nb = 0.0;
    }
    rec.at_most("wideband-below-narrowband", wb_over_nb, 1.0 + 1e-9, "max CRB_WB / CRB_NB over parameters");

    let errors = sample_covariance_errors(&cfg, &comb, &eta, &opts.mc_snapshots, opts.mc_trials, opts.seed)?;
    let counts: Vec<f64> = opts.mc_snapshots.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&counts, &errors);
    rec.push(
        "monte-carlo-slope",
        (slope - SLOPE_TARGET).abs() <= SLOPE_TOLERANCE,
        slope,
        SLOPE_TOLERANCE,
        format!("log-log slope of sample covariance error, target {SLOPE_TARGET}"),
    );

    let betas = beta_diagnostic(&bundle)?;
    let lo = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rec.push(
        "beta-range",
        lo >= BETA_RANGE.0 && hi <= BETA_RANGE.1,
        if hi > BETA_RANGE.1 { hi } else { lo },
        BETA_RANGE.1 - 1.0,
        format!("beta_k in [{lo:.4}, {hi:.4}], expected within [{}, {}]", BETA_RANGE.0, BETA_RANGE.1),
    );

    let single = OfdmGrid::narrowband(scn.carrier_hz, scn.spacing_hz)?;
    let nb_op = evaluate_on_grid(scn, &single, opts.seed, None)?;
    let same = nb_op.selected == 1 && nb_op.wideband.paths == nb_op.narrowband.paths;
    let gain = nb_op.decomposition.delta_total_theta[0].abs();
    rec.push("narrowband-reduction", same && gain == 0.0, gain, 0.0, "single subcarrier: wideband bound equals narrowband bound");

    let checks = rec.0;
    Ok(VerifyReport { seed: opts.seed, passed: checks.iter().all(|c| c.passed), checks })
}
