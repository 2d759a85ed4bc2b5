//! Marginal angle and range bounds, the data/geometric diversity split, and
//! the compression gap.
//!
//! All gains are in dB on variances: `10 log10(CRB_a / CRB_b)`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fim::Pseudoinverse;
use crate::model::{ArrayConfig, PathSet};

/// Allowed slack on `Δ_total = Δ_DD + Δ_GD` in dB.
pub const ADDITIVITY_TOLERANCE_DB: f64 = 1e-9;
/// Most negative compression gap tolerated before it counts as a bug.
pub const COMPRESSION_GAP_FLOOR_DB: f64 = -0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrbVariant {
    Wideband,
    Narrowband,
    DataDiversity,
    FullArray,
}

impl CrbVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Wideband => "wideband",
            Self::Narrowband => "narrowband",
            Self::DataDiversity => "data-diversity",
            Self::FullArray => "full-array",
        }
    }
}

/// Bounds for one path. `range_var` is `+∞` for a far-field path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathCrb {
    /// rad²
    pub theta_var: f64,
    /// m²
    pub range_var: f64,
}

impl PathCrb {
    pub fn theta_std_deg(&self) -> f64 {
        self.theta_var.sqrt().to_degrees()
    }

    pub fn range_std_m(&self) -> f64 {
        self.range_var.sqrt()
    }

    pub fn range_is_infinite(&self) -> bool {
        self.range_var.is_infinite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrbReport {
    pub variant: CrbVariant,
    pub paths: Vec<PathCrb>,
}

impl CrbReport {
    pub fn path(&self, l: usize) -> &PathCrb {
        &self.paths[l]
    }

    /// Scales every variance by `factor`, used for the analytic `CRB_NB / K_s`.
    pub fn scaled(&self, factor: f64, variant: CrbVariant) -> Self {
        let paths = self
            .paths
            .iter()
            .map(|p| PathCrb { theta_var: p.theta_var * factor, range_var: p.range_var * factor })
            .collect();
        Self { variant, paths }
    }
}

/// `CRB_θ = [J⁺]_ℓℓ / (∂ω/∂θ)²`, `CRB_r = [J⁺]_{d+ℓ,d+ℓ} / (κ/r)²`.
pub fn propagate_crb(pinv: &Pseudoinverse, paths: &PathSet, cfg: &ArrayConfig, variant: CrbVariant) -> Result<CrbReport> {
    let d = paths.len();
    let j = &pinv.matrix;
    if j.nrows() != 3 * d + 1 || !j.is_square() {
        return invalid(format!("pseudoinverse is {}x{}, expected {n}x{n} for {d} paths", j.nrows(), j.ncols(), n = 3 * d + 1));
    }
    let mut out = Vec::with_capacity(d);
    for l in 0..d {
        let theta = paths.theta()[l];
        let jac = cfg.angle_jacobian(theta);
        if jac == 0.0 || theta.sin().abs() < 1e-12 {
            return Err(Error::AngleJacobianSingular { path: l });
        }
        let kappa = paths.kappa()[l];
        let r = paths.range_m()[l];
        let range_var = if kappa == 0.0 || r.is_infinite() {
            f64::INFINITY
        } else {
            let dk_dr = kappa / r;
            j[(d + l, d + l)] / (dk_dr * dk_dr)
        };
        out.push(PathCrb { theta_var: j[(l, l)] / (jac * jac), range_var });
    }
    Ok(CrbReport { variant, paths: out })
}

fn ratio_db(num: f64, den: f64) -> f64 {
    10.0 * (num / den).log10()
}

/// Per-path gains in dB. Entries are `NaN` when both variances are infinite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub selected: usize,
    pub delta_dd: f64,
    pub data_diversity: CrbReport,
    pub delta_gd_theta: Vec<f64>,
    pub delta_gd_r: Vec<f64>,
    pub delta_total_theta: Vec<f64>,
    pub delta_total_r: Vec<f64>,
}

/// Splits the wideband gain into `10 log10 K_s` and the residual geometric
/// term. `CRB_DD` is taken as `CRB_NB / K_s` rather than from `K_s J_NB`.
pub fn decompose(narrowband: &CrbReport, wideband: &CrbReport, selected: usize) -> Result<Decomposition> {
    if selected == 0 {
        return invalid("selected subcarrier count must be positive");
    }
    if narrowband.variant == wideband.variant || narrowband.paths.len() != wideband.paths.len() {
        return invalid("decomposition needs a narrowband and a wideband report for the same paths");
    }
    let ks = selected as f64;
    let delta_dd = 10.0 * ks.log10();
    let dd = narrowband.scaled(1.0 / ks, CrbVariant::DataDiversity);
    let mut out = Decomposition {
        selected,
        delta_dd,
        data_diversity: dd.clone(),
        delta_gd_theta: Vec::new(),
        delta_gd_r: Vec::new(),
        delta_total_theta: Vec::new(),
        delta_total_r: Vec::new(),
    };
    for ((nb, wb), dd) in narrowband.paths.iter().zip(&wideband.paths).zip(&dd.paths) {
        for (n, w, x, gd, total) in [
            (nb.theta_var, wb.theta_var, dd.theta_var, &mut out.delta_gd_theta, &mut out.delta_total_theta),
            (nb.range_var, wb.range_var, dd.range_var, &mut out.delta_gd_r, &mut out.delta_total_r),
        ] {
            let g = ratio_db(x, w);
            let t = ratio_db(n, w);
            if t.is_finite() && (t - (delta_dd + g)).abs() > ADDITIVITY_TOLERANCE_DB {
                return Err(Error::Consistency(format!("total gain {t} dB != {delta_dd} + {g} dB")));
            }
            gd.push(g);
            total.push(t);
        }
    }
    Ok(out)
}

/// `10 log10(1 + (B/f_c)²/12)`, the per-eigenvalue scalar gain from squint
/// alone. Reported, not enforced.
pub fn gd_scalar_bound(bandwidth_hz: f64, carrier_hz: f64) -> f64 {
    let x = bandwidth_hz / carrier_hz;
    10.0 * (1.0 + x * x / 12.0).log10()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionGap {
    pub theta_db: Vec<f64>,
    pub range_db: Vec<f64>,
}

/// `10 log10(CRB_comp / CRB_full)` per path and parameter.
pub fn compression_gap(compressed: &CrbReport, full: &CrbReport) -> Result<CompressionGap> {
    if compressed.paths.len() != full.paths.len() {
        return invalid("compression gap needs reports for the same paths");
    }
    let mut gap = CompressionGap { theta_db: Vec::new(), range_db: Vec::new() };
    for (c, f) in compressed.paths.iter().zip(&full.paths) {
        for (num, den, out) in [(c.theta_var, f.theta_var, &mut gap.theta_db), (c.range_var, f.range_var, &mut gap.range_db)] {
            let g = ratio_db(num, den);
            if g < COMPRESSION_GAP_FLOOR_DB {
                return Err(Error::Consistency(format!("compressed bound is {g} dB below the full-array bound")));
            }
            out.push(g);
        }
    }
    Ok(gap)
}
