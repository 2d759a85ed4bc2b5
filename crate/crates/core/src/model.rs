//! Array geometry, the OFDM subcarrier grid, path parameters and the
//! frequency-scaled Fresnel steering vector with its parameter derivatives.
//!
//! Angles are radians everywhere in this crate. A path at angle `θ` and range
//! `r` is described on the array by a spatial frequency `ω` (linear phase per
//! element) and a Fresnel curvature `κ` (quadratic phase per element²):
//!
//! ```text
//! ω = -(2π d / λ) cos θ        κ = (π d² / λ) sin²θ / r
//! ```
//!
//! At subcarrier frequency `f_k` both phase terms scale by `α_k = f_k / f_c`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{CVector, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform linear array with half-wavelength spacing at the carrier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayConfig {
    elements: usize,
    carrier_hz: f64,
    wavelength_m: f64,
    spacing_m: f64,
    #[serde(skip)]
    centered_index: Vec<f64>,
}

impl ArrayConfig {
    pub fn new(elements: usize, carrier_hz: f64) -> Result<Self> {
        if elements < 2 {
            return invalid(format!("array needs at least 2 elements, got {elements}"));
        }
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return invalid(format!("carrier frequency must be positive, got {carrier_hz}"));
        }
        let wavelength_m = SPEED_OF_LIGHT / carrier_hz;
        let mid = (elements as f64 - 1.0) / 2.0;
        Ok(Self {
            elements,
            carrier_hz,
            wavelength_m,
            spacing_m: wavelength_m / 2.0,
            centered_index: (0..elements).map(|m| m as f64 - mid).collect(),
        })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    /// Entries `m - (M-1)/2` for `m = 0..M`.
    pub fn centered_index(&self) -> &[f64] {
        &self.centered_index
    }

    /// Physical aperture `(M-1)·d`. Diagnostic only.
    pub fn aperture_m(&self) -> f64 {
        (self.elements as f64 - 1.0) * self.spacing_m
    }

    /// `ω(θ) = -(2π d/λ) cos θ`.
    pub fn spatial_frequency(&self, theta: f64) -> f64 {
        -(2.0 * PI * self.spacing_m / self.wavelength_m) * theta.cos()
    }

    /// `κ(θ, r) = (π d²/λ) sin²θ / r`; zero for an infinitely distant source.
    pub fn curvature(&self, theta: f64, range_m: f64) -> f64 {
        let s = theta.sin();
        (PI * self.spacing_m * self.spacing_m / self.wavelength_m) * s * s / range_m
    }

    /// `∂ω/∂θ = (2π d/λ) sin θ`.
    pub fn angle_jacobian(&self, theta: f64) -> f64 {
        (2.0 * PI * self.spacing_m / self.wavelength_m) * theta.sin()
    }
}

/// OFDM subcarrier grid `f_k = f_c + (k - K/2) Δf`, `k = 1..=K`, together with
/// the uniformly spaced subset of subcarriers that enters the wideband FIM.
///
/// Subcarriers are identified by their 1-based index `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfdmGrid {
    carrier_hz: f64,
    spacing_hz: f64,
    subcarriers: usize,
    max_selected: usize,
    #[serde(skip)]
    frequencies_hz: Vec<f64>,
    #[serde(skip)]
    alphas: Vec<f64>,
    selected: Vec<usize>,
    center: usize,
}

/// Builds the grid for a target bandwidth: `K = round(B / Δf)` subcarriers of
/// which `min(K, Ks_max)` uniformly spaced ones (endpoints included) are
/// selected.
pub fn build_grid(carrier_hz: f64, spacing_hz: f64, bandwidth_hz: f64, max_selected: usize) -> Result<OfdmGrid> {
    if max_selected < 1 {
        return invalid("subcarrier cap must be at least 1");
    }
    if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
        return invalid(format!("carrier frequency must be positive, got {carrier_hz}"));
    }
    if !(spacing_hz.is_finite() && spacing_hz > 0.0) {
        return invalid(format!("subcarrier spacing must be positive, got {spacing_hz}"));
    }
    if !(bandwidth_hz.is_finite() && bandwidth_hz >= spacing_hz) {
        return invalid(format!("bandwidth {bandwidth_hz} Hz is below one subcarrier spacing ({spacing_hz} Hz)"));
    }
    let subcarriers = (bandwidth_hz / spacing_hz).round() as usize;
    let half = subcarriers as f64 / 2.0;
    let offsets = (1..=subcarriers).map(|k| k as f64 - half);
    let frequencies_hz = offsets.clone().map(|o| carrier_hz + o * spacing_hz).collect();
    let alphas = offsets.map(|o| 1.0 + o * spacing_hz / carrier_hz).collect();
    let center = if subcarriers % 2 == 0 { subcarriers / 2 } else { (subcarriers + 1) / 2 };
    let count = subcarriers.min(max_selected);
    let selected = if count == 1 { vec![center] } else { uniform_subset(subcarriers, count) };
    Ok(OfdmGrid { carrier_hz, spacing_hz, subcarriers, max_selected, frequencies_hz, alphas, selected, center })
}

/// `round(1 + i (K-1)/(n-1))` for `i = 0..n`, in exact integer arithmetic.
fn uniform_subset(total: usize, count: usize) -> Vec<usize> {
    let (num, den) = ((total - 1) as u128, (count - 1) as u128);
    let mut out: Vec<usize> = (0..count as u128).map(|i| 1 + ((2 * i * num + den) / (2 * den)) as usize).collect();
    out.dedup();
    out
}

impl OfdmGrid {
    /// A single subcarrier pinned at the carrier (`α = 1`): the narrowband
    /// reference.
    pub fn narrowband(carrier_hz: f64, spacing_hz: f64) -> Result<Self> {
        let mut grid = build_grid(carrier_hz, spacing_hz, spacing_hz, 1)?;
        grid.frequencies_hz = vec![carrier_hz];
        grid.alphas = vec![1.0];
        Ok(grid)
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn spacing_hz(&self) -> f64 {
        self.spacing_hz
    }

    /// Total subcarrier count `K`.
    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    /// `K Δf`.
    pub fn effective_bandwidth_hz(&self) -> f64 {
        self.subcarriers as f64 * self.spacing_hz
    }

    pub fn max_selected(&self) -> usize {
        self.max_selected
    }

    pub fn frequency_hz(&self, k: usize) -> f64 {
        self.frequencies_hz[k - 1]
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alphas[k - 1]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Selected subcarrier indices (1-based, strictly increasing).
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// `K_s`.
    pub fn selected_count(&self) -> usize {
        self.selected.len()
    }

    pub fn selected_alphas(&self) -> Vec<f64> {
        self.selected.iter().map(|&k| self.alpha(k)).collect()
    }

    /// Center subcarrier `k_c`: `K/2` for even `K`, otherwise the closer of
    /// the two indices straddling `K/2` (ties go up).
    pub fn center(&self) -> usize {
        self.center
    }
}

/// Physical path description plus the derived `(ω, κ)` on a given array.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSet {
    theta: Vec<f64>,
    range_m: Vec<f64>,
    power: Vec<f64>,
    omega: Vec<f64>,
    kappa: Vec<f64>,
}

impl PathSet {
    /// `theta` in radians, `range_m` positive (`f64::INFINITY` gives a
    /// far-field path with `κ = 0`), `power` linear and non-negative.
    pub fn new(cfg: &ArrayConfig, theta: &[f64], range_m: &[f64], power: &[f64]) -> Result<Self> {
        let d = theta.len();
        if d == 0 {
            return invalid("at least one path is required");
        }
        if range_m.len() != d || power.len() != d {
            return invalid("theta, range and power must have the same length");
        }
        for l in 0..d {
            if !theta[l].is_finite() {
                return invalid(format!("path {l}: angle must be finite"));
            }
            if range_m[l].is_nan() || range_m[l] <= 0.0 {
                return invalid(format!("path {l}: range must be positive, got {}", range_m[l]));
            }
            if !(power[l].is_finite() && power[l] >= 0.0) {
                return invalid(format!("path {l}: power must be non-negative, got {}", power[l]));
            }
        }
        Ok(Self {
            theta: theta.to_vec(),
            range_m: range_m.to_vec(),
            power: power.to_vec(),
            omega: theta.iter().map(|&t| cfg.spatial_frequency(t)).collect(),
            kappa: theta.iter().zip(range_m).map(|(&t, &r)| cfg.curvature(t, r)).collect(),
        })
    }

    pub fn single(cfg: &ArrayConfig, theta: f64, range_m: f64, power: f64) -> Result<Self> {
        Self::new(cfg, &[theta], &[range_m], &[power])
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn range_m(&self) -> &[f64] {
        &self.range_m
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// Stacks the paths with a noise power into `η = [ω; κ; p; N₀]`.
    pub fn params(&self, noise: f64) -> Result<ParamVector> {
        ParamVector::new(self.omega.clone(), self.kappa.clone(), self.power.clone(), noise)
    }
}

/// The unknown parameter vector `η = [ω₁..ω_d, κ₁..κ_d, p₁..p_d, N₀]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamVector {
    omega: Vec<f64>,
    kappa: Vec<f64>,
    power: Vec<f64>,
    noise: f64,
}

impl ParamVector {
    pub fn new(omega: Vec<f64>, kappa: Vec<f64>, power: Vec<f64>, noise: f64) -> Result<Self> {
        let d = omega.len();
        if d == 0 || kappa.len() != d || power.len() != d {
            return invalid("parameter blocks must be non-empty and of equal length");
        }
        if omega.iter().chain(&kappa).any(|v| !v.is_finite()) {
            return invalid("spatial frequencies and curvatures must be finite");
        }
        if power.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return invalid("path powers must be finite and non-negative");
        }
        if !(noise.is_finite() && noise > 0.0) {
            return invalid(format!("noise power must be positive, got {noise}"));
        }
        Ok(Self { omega, kappa, power, noise })
    }

    /// Inverse of [`ParamVector::to_vec`] for `d` paths.
    pub fn from_slice(paths: usize, eta: &[f64]) -> Result<Self> {
        if eta.len() != 3 * paths + 1 {
            return invalid(format!("expected {} parameters for {paths} paths, got {}", 3 * paths + 1, eta.len()));
        }
        Self::new(
            eta[..paths].to_vec(),
            eta[paths..2 * paths].to_vec(),
            eta[2 * paths..3 * paths].to_vec(),
            eta[3 * paths],
        )
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.omega);
        v.extend_from_slice(&self.kappa);
        v.extend_from_slice(&self.power);
        v.push(self.noise);
        v
    }

    pub fn paths(&self) -> usize {
        self.omega.len()
    }

    /// `3d + 1`.
    pub fn dim(&self) -> usize {
        3 * self.paths() + 1
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn omega_index(&self, path: usize) -> usize {
        path
    }

    pub fn kappa_index(&self, path: usize) -> usize {
        self.paths() + path
    }

    pub fn power_index(&self, path: usize) -> usize {
        2 * self.paths() + path
    }

    pub fn noise_index(&self) -> usize {
        3 * self.paths()
    }
}

fn check_steering_args(omega: f64, kappa: f64, alpha: f64) -> Result<()> {
    if !(omega.is_finite() && kappa.is_finite() && alpha.is_finite()) {
        return invalid("steering parameters must be finite");
    }
    if alpha <= 0.0 {
        return invalid(format!("frequency ratio must be positive, got {alpha}"));
    }
    Ok(())
}

/// Writes `exp(jα(ω m̄ - κ m̄²))` into `out`.
pub(crate) fn fill_steering(cfg: &ArrayConfig, omega: f64, kappa: f64, alpha: f64, out: &mut [C64]) {
    for (a, &m) in out.iter_mut().zip(cfg.centered_index()) {
        *a = C64::from_polar(1.0, alpha * (omega * m - kappa * m * m));
    }
}

/// Frequency-scaled Fresnel steering vector `[a]_m = exp(jαω m̄ - jακ m̄²)`.
pub fn steering_vector(cfg: &ArrayConfig, omega: f64, kappa: f64, alpha: f64) -> Result<CVector> {
    check_steering_args(omega, kappa, alpha)?;
    let mut a = CVector::zeros(cfg.elements());
    fill_steering(cfg, omega, kappa, alpha, a.as_mut_slice());
    Ok(a)
}

/// `(∂a/∂ω, ∂a/∂κ) = (jα m̄ ⊙ a, -jα m̄² ⊙ a)`.
pub fn steering_derivatives(cfg: &ArrayConfig, omega: f64, kappa: f64, alpha: f64) -> Result<(CVector, CVector)> {
    let a = steering_vector(cfg, omega, kappa, alpha)?;
    let m = cfg.centered_index();
    let d_omega = CVector::from_fn(a.len(), |i, _| a[i] * C64::new(0.0, alpha * m[i]));
    let d_kappa = CVector::from_fn(a.len(), |i, _| a[i] * C64::new(0.0, -alpha * m[i] * m[i]));
    Ok((d_omega, d_kappa))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ArrayConfig {
        ArrayConfig::new(256, 28e9).unwrap()
    }

    #[test]
    fn half_wavelength_spacing_and_centering() {
        let c = cfg();
        assert_eq!(c.spacing_m(), c.wavelength_m() / 2.0);
        assert_eq!(c.centered_index().len(), 256);
        assert_eq!(c.centered_index().iter().sum::<f64>(), 0.0);
        assert_eq!(c.centered_index()[0], -127.5);
    }

    #[test]
    fn aperture_ratio_at_default_range() {
        let ratio = cfg().aperture_m() / 5.0;
        assert!((ratio - 0.273).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn default_path_omega_kappa() {
        // Independent scalar evaluation: λ = c/28e9, d = λ/2, so
        // ω = -π cos 40°, κ = (π λ/4) sin²40° / 5.
        let c = cfg();
        let theta = 40f64.to_radians();
        let omega = c.spatial_frequency(theta);
        let kappa = c.curvature(theta, 5.0);
        assert!((omega - -2.406_599_594_825_865).abs() < 1e-12);
        assert!((kappa - 6.948_923_684_313_452e-4).abs() < 1e-15);

        // M = 256 has half-integer m̄; M = 21 has m̄ = 10 at m = 20.
        let small = ArrayConfig::new(21, 28e9).unwrap();
        let alpha = 1.003;
        let b = steering_vector(&small, omega, kappa, alpha).unwrap();
        let expected = alpha * (10.0 * omega - 100.0 * kappa);
        assert!((b[20] - C64::from_polar(1.0, expected)).norm() < 1e-12);
    }

    #[test]
    fn zero_phase_gives_ones() {
        let a = steering_vector(&cfg(), 0.0, 0.0, 1.07).unwrap();
        assert!(a.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn far_field_reduction() {
        let c = ArrayConfig::new(16, 28e9).unwrap();
        let a = steering_vector(&c, 0.7, 0.0, 1.0).unwrap();
        for (i, m) in c.centered_index().iter().enumerate() {
            assert!((a[i] - C64::from_polar(1.0, 0.7 * m)).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let c = cfg();
        assert!(steering_vector(&c, f64::NAN, 0.0, 1.0).is_err());
        assert!(steering_vector(&c, 0.0, 0.0, 0.0).is_err());
        assert!(steering_derivatives(&c, 0.0, f64::INFINITY, 1.0).is_err());
        assert!(ArrayConfig::new(1, 28e9).is_err());
    }

    #[test]
    fn derivative_moduli_and_center_element() {
        let c = ArrayConfig::new(9, 28e9).unwrap();
        let (dw, dk) = steering_derivatives(&c, 0.4, 0.01, 1.01).unwrap();
        assert_eq!(dw[4].norm(), 0.0);
        assert_eq!(dk[4].norm(), 0.0);
        for (i, m) in c.centered_index().iter().enumerate() {
            assert!((dw[i].norm() - 1.01 * m.abs()).abs() < 1e-12);
            assert!((dk[i].norm() - 1.01 * m * m).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_at_400_mhz() {
        let g = build_grid(28e9, 120e3, 400e6, 512).unwrap();
        assert_eq!(g.subcarriers(), 3333);
        assert_eq!(g.selected_count(), 512);
        assert_eq!(g.selected()[0], 1);
        assert_eq!(*g.selected().last().unwrap(), 3333);
        assert!(g.selected().windows(2).all(|w| w[0] < w[1]));
        assert!((g.effective_bandwidth_hz() - 399.96e6).abs() < 1e-3);
    }

    #[test]
    fn grid_below_cap_uses_everything() {
        let g = build_grid(28e9, 120e3, 50e6, 512).unwrap();
        assert_eq!(g.subcarriers(), 417);
        assert_eq!(g.selected_count(), 417);
        assert_eq!(g.selected(), (1..=417).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn even_grid_center_is_exactly_one() {
        let g = build_grid(28e9, 120e3, 100.08e6, 512).unwrap();
        assert_eq!(g.subcarriers() % 2, 0);
        assert_eq!(g.alpha(g.center()), 1.0);
        assert_eq!(g.alpha(g.subcarriers() / 2), 1.0);
    }

    #[test]
    fn degenerate_and_narrowband_grids() {
        let g = build_grid(28e9, 120e3, 120e3, 512).unwrap();
        assert_eq!(g.subcarriers(), 1);
        assert_eq!(g.selected(), &[1]);
        assert_eq!(g.alpha(1), 1.0 + 0.5 * 120e3 / 28e9);
        let nb = OfdmGrid::narrowband(28e9, 120e3).unwrap();
        assert_eq!(nb.selected_alphas(), vec![1.0]);
    }

    #[test]
    fn grid_errors() {
        assert!(build_grid(28e9, 120e3, 400e6, 0).is_err());
        assert!(build_grid(28e9, 120e3, 60e3, 512).is_err());
    }

    #[test]
    fn path_set_and_layout() {
        let c = cfg();
        let paths = PathSet::new(&c, &[0.5, 1.0], &[3.0, f64::INFINITY], &[1.0, 0.5]).unwrap();
        assert_eq!(paths.kappa()[1], 0.0);
        let eta = paths.params(0.1).unwrap();
        assert_eq!(eta.dim(), 7);
        let v = eta.to_vec();
        assert_eq!(v[eta.omega_index(1)], paths.omega()[1]);
        assert_eq!(v[eta.kappa_index(0)], paths.kappa()[0]);
        assert_eq!(v[eta.power_index(1)], 0.5);
        assert_eq!(v[eta.noise_index()], 0.1);
        assert_eq!(ParamVector::from_slice(2, &v).unwrap(), eta);
        assert!(paths.params(0.0).is_err());
        assert!(PathSet::single(&c, 0.5, -1.0, 1.0).is_err());
    }
}
