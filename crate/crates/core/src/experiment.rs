//! Operating-point evaluation and the sweeps built on it.
//!
//! A [`Scenario`] fixes everything except the combiner seed. Evaluating it for
//! one seed gives the narrowband, wideband and data-diversity bounds and their
//! decomposition; sweeps repeat that over a parameter and a seed list and
//! summarise across seeds in dB.

use rayon::prelude::*;
use serde::Serialize;

use crate::combiner::Combiner;
use crate::covariance::{mismatch_grid, MismatchGrid};
use crate::crb::{compression_gap, decompose, gd_scalar_bound, propagate_crb, CompressionGap, CrbReport, CrbVariant, Decomposition};
use crate::error::{invalid, Result};
use crate::fim::{fim_wideband, FimCache};
use crate::model::{build_grid, ArrayConfig, OfdmGrid, ParamVector, PathSet};

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `N₀ = p₁ / 10^(snr/10)` with `p₁ = 1`.
pub fn noise_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Seeds `first, first + 1, …` (`count` of them).
pub fn seed_list(first: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| first.wrapping_add(i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub elements: usize,
    pub carrier_hz: f64,
    pub spacing_hz: f64,
    pub bandwidth_hz: f64,
    pub max_selected: usize,
    pub theta_rad: Vec<f64>,
    pub range_m: Vec<f64>,
    pub power: Vec<f64>,
    pub noise: f64,
    pub rf_chains: usize,
    /// Use `W = I` instead of a random combiner; `rf_chains` is then ignored.
    pub identity_combiner: bool,
    pub snapshots: usize,
}

impl Default for Scenario {
    /// 256 elements at 28 GHz, 16 RF chains, 120 kHz spacing, 400 MHz, one
    /// path at 40° and 5 m, 10 dB SNR, 64 snapshots, at most 512 subcarriers.
    fn default() -> Self {
        Self {
            elements: 256,
            carrier_hz: 28e9,
            spacing_hz: 120e3,
            bandwidth_hz: 400e6,
            max_selected: 512,
            theta_rad: vec![40f64.to_radians()],
            range_m: vec![5.0],
            power: vec![1.0],
            noise: noise_from_snr_db(10.0),
            rf_chains: 16,
            identity_combiner: false,
            snapshots: 64,
        }
    }
}

impl Scenario {
    pub fn array(&self) -> Result<ArrayConfig> {
        ArrayConfig::new(self.elements, self.carrier_hz)
    }

    pub fn grid(&self) -> Result<OfdmGrid> {
        build_grid(self.carrier_hz, self.spacing_hz, self.bandwidth_hz, self.max_selected)
    }

    pub fn paths(&self, cfg: &ArrayConfig) -> Result<PathSet> {
        PathSet::new(cfg, &self.theta_rad, &self.range_m, &self.power)
    }

    pub fn params(&self) -> Result<ParamVector> {
        self.paths(&self.array()?)?.params(self.noise)
    }

    pub fn combiner(&self, seed: u64) -> Result<Combiner> {
        if self.identity_combiner {
            Combiner::identity(self.elements)
        } else {
            Combiner::random(self.elements, self.rf_chains, seed)
        }
    }

    pub fn with_bandwidth(&self, bandwidth_hz: f64) -> Self {
        Self { bandwidth_hz, ..self.clone() }
    }

    pub fn with_range(&self, range_m: f64) -> Self {
        Self { range_m: vec![range_m; self.range_m.len()], ..self.clone() }
    }

    pub fn with_rf_chains(&self, rf_chains: usize) -> Self {
        Self { rf_chains, ..self.clone() }
    }
}

/// Wideband and narrowband bounds for one combiner.
#[derive(Debug, Clone, Serialize)]
pub struct OperatingPoint {
    pub seed: u64,
    pub bandwidth_hz: f64,
    pub subcarriers: usize,
    pub selected: usize,
    pub wideband: CrbReport,
    pub narrowband: CrbReport,
    pub decomposition: Decomposition,
    pub gd_scalar_bound_db: f64,
    pub wideband_rank: usize,
    pub narrowband_rank: usize,
}

fn bounds_for(scn: &Scenario, grid: &OfdmGrid, comb: &Combiner, cache: Option<&FimCache>) -> Result<crate::fim::FimBundle> {
    let cfg = scn.array()?;
    let eta = scn.params()?;
    fim_wideband(grid, &cfg, comb, &eta, scn.snapshots, cache)
}

pub fn evaluate(scn: &Scenario, seed: u64, cache: Option<&FimCache>) -> Result<OperatingPoint> {
    evaluate_on_grid(scn, &scn.grid()?, seed, cache)
}

/// As [`evaluate`] but on an explicit grid, e.g. [`OfdmGrid::narrowband`].
pub fn evaluate_on_grid(scn: &Scenario, grid: &OfdmGrid, seed: u64, cache: Option<&FimCache>) -> Result<OperatingPoint> {
    let comb = scn.combiner(seed)?;
    let cfg = scn.array()?;
    let paths = scn.paths(&cfg)?;
    let bundle = bounds_for(scn, grid, &comb, cache)?;
    let wideband = propagate_crb(&bundle.wideband_inverse, &paths, &cfg, CrbVariant::Wideband)?;
    let narrowband = propagate_crb(&bundle.narrowband_inverse, &paths, &cfg, CrbVariant::Narrowband)?;
    let decomposition = decompose(&narrowband, &wideband, grid.selected_count())?;
    Ok(OperatingPoint {
        seed,
        bandwidth_hz: scn.bandwidth_hz,
        subcarriers: grid.subcarriers(),
        selected: grid.selected_count(),
        wideband,
        narrowband,
        decomposition,
        gd_scalar_bound_db: gd_scalar_bound(grid.effective_bandwidth_hz(), scn.carrier_hz),
        wideband_rank: bundle.wideband_inverse.rank,
        narrowband_rank: bundle.narrowband_inverse.rank,
    })
}

/// Wideband bound with direct access to all elements (`W = I`).
pub fn evaluate_full_array(scn: &Scenario, cache: Option<&FimCache>) -> Result<CrbReport> {
    let comb = Combiner::identity(scn.elements)?;
    let cfg = scn.array()?;
    let paths = scn.paths(&cfg)?;
    let bundle = bounds_for(scn, &scn.grid()?, &comb, cache)?;
    propagate_crb(&bundle.wideband_inverse, &paths, &cfg, CrbVariant::FullArray)
}

/// Mean, minimum and maximum across seeds, all in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DbStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl DbStats {
    pub fn from_db(values: &[f64]) -> Self {
        let n = values.len() as f64;
        Self {
            mean: values.iter().sum::<f64>() / n,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn from_linear(values: &[f64]) -> Self {
        Self::from_db(&values.iter().map(|v| db(*v)).collect::<Vec<_>>())
    }

    /// Mean converted back to linear scale (a geometric mean).
    pub fn mean_linear(&self) -> f64 {
        10f64.powf(self.mean / 10.0)
    }
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return invalid("seed list is empty");
    }
    Ok(())
}

/// One sweep value evaluated for every seed, in seed order.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub points: Vec<OperatingPoint>,
    /// Present when the sweep also computes the full-array reference.
    pub full_array: Option<CrbReport>,
    pub gaps: Vec<CompressionGap>,
}

impl SweepPoint {
    /// Seed statistics of any per-seed dB quantity.
    pub fn stats_db(&self, f: impl Fn(&OperatingPoint) -> f64) -> DbStats {
        DbStats::from_db(&self.points.iter().map(f).collect::<Vec<_>>())
    }

    /// Seed statistics of a per-seed variance, in dB.
    pub fn stats_var(&self, f: impl Fn(&OperatingPoint) -> f64) -> DbStats {
        DbStats::from_linear(&self.points.iter().map(f).collect::<Vec<_>>())
    }

    pub fn gap_stats(&self, path: usize, range: bool) -> Option<DbStats> {
        if self.gaps.is_empty() {
            return None;
        }
        let v: Vec<f64> = self.gaps.iter().map(|g| if range { g.range_db[path] } else { g.theta_db[path] }).collect();
        Some(DbStats::from_db(&v))
    }
}

fn sweep(
    scenarios: Vec<(f64, Scenario)>,
    seeds: &[u64],
    with_full_array: bool,
    cache: Option<&FimCache>,
) -> Result<Vec<SweepPoint>> {
    check_seeds(seeds)?;
    let jobs: Vec<(usize, u64)> = (0..scenarios.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let mut evaluated: Vec<OperatingPoint> =
        jobs.par_iter().map(|&(i, s)| evaluate(&scenarios[i].1, s, cache)).collect::<Result<_>>()?;
    let fulls: Vec<Option<CrbReport>> = if with_full_array {
        scenarios.par_iter().map(|(_, s)| evaluate_full_array(s, cache).map(Some)).collect::<Result<_>>()?
    } else {
        vec![None; scenarios.len()]
    };
    let mut out = Vec::with_capacity(scenarios.len());
    for ((value, _), full) in scenarios.iter().zip(fulls) {
        let points: Vec<OperatingPoint> = evaluated.drain(..seeds.len()).collect();
        let gaps = match &full {
            Some(f) => points.iter().map(|p| compression_gap(&p.wideband, f)).collect::<Result<_>>()?,
            None => Vec::new(),
        };
        out.push(SweepPoint { value: *value, points, full_array: full, gaps });
    }
    Ok(out)
}

pub fn sweep_bandwidth(scn: &Scenario, bandwidths_hz: &[f64], seeds: &[u64], cache: Option<&FimCache>) -> Result<Vec<SweepPoint>> {
    sweep(bandwidths_hz.iter().map(|&b| (b, scn.with_bandwidth(b))).collect(), seeds, false, cache)
}

pub fn sweep_range(
    scn: &Scenario,
    ranges_m: &[f64],
    seeds: &[u64],
    with_full_array: bool,
    cache: Option<&FimCache>,
) -> Result<Vec<SweepPoint>> {
    sweep(ranges_m.iter().map(|&r| (r, scn.with_range(r))).collect(), seeds, with_full_array, cache)
}

/// The full-array reference does not depend on `N_RF` and is computed once.
pub fn sweep_rf_chains(scn: &Scenario, rf_chains: &[usize], seeds: &[u64], cache: Option<&FimCache>) -> Result<Vec<SweepPoint>> {
    let mut points = sweep(rf_chains.iter().map(|&n| (n as f64, scn.with_rf_chains(n))).collect(), seeds, false, cache)?;
    let full = evaluate_full_array(scn, cache)?;
    for p in &mut points {
        p.gaps = p.points.iter().map(|op| compression_gap(&op.wideband, &full)).collect::<Result<_>>()?;
        p.full_array = Some(full.clone());
    }
    Ok(points)
}

/// `count` points from `lo` to `hi`, log-spaced, endpoints included.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
        }
    }
}

/// Mismatch over the selected subcarriers plus `α = 1`, for one seed.
pub fn mismatch_for_bandwidth(scn: &Scenario, bandwidth_hz: f64, ranges_m: &[f64], seed: u64) -> Result<MismatchGrid> {
    let s = scn.with_bandwidth(bandwidth_hz);
    let cfg = s.array()?;
    let grid = s.grid()?;
    let mut alphas = grid.selected_alphas();
    if !alphas.contains(&1.0) {
        let at = alphas.partition_point(|a| *a < 1.0);
        alphas.insert(at, 1.0);
    }
    let comb = s.combiner(seed)?;
    let theta = *s.theta_rad.first().ok_or(crate::Error::InvalidArgument("scenario has no path".into()))?;
    let power = s.power[0];
    mismatch_grid(&cfg, &comb, theta, s.noise, power, &alphas, ranges_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        Scenario { elements: 64, rf_chains: 8, max_selected: 16, bandwidth_hz: 200e6, ..Scenario::default() }
    }

    #[test]
    fn defaults() {
        let s = Scenario::default();
        assert!((s.noise - 0.1).abs() < 1e-15);
        assert_eq!(s.grid().unwrap().selected_count(), 512);
        assert_eq!(seed_list(1, 3), vec![1, 2, 3]);
    }

    #[test]
    fn evaluate_is_deterministic_and_ordered() {
        let s = small();
        let a = evaluate(&s, 3, None).unwrap();
        let b = evaluate(&s, 3, None).unwrap();
        assert_eq!(a.wideband, b.wideband);
        let p = a.wideband.paths[0];
        let q = a.narrowband.paths[0];
        assert!(p.range_var <= q.range_var * (1.0 + 1e-9));
        assert!((a.decomposition.delta_dd - db(16.0)).abs() < 1e-12);
    }

    #[test]
    fn full_array_beats_compressed() {
        let s = small();
        let full = evaluate_full_array(&s, None).unwrap();
        let op = evaluate(&s, 1, None).unwrap();
        let gap = compression_gap(&op.wideband, &full).unwrap();
        assert!(gap.range_db[0] > 0.0 && gap.theta_db[0] > 0.0);
    }

    #[test]
    fn sweep_shapes() {
        let s = small();
        let seeds = seed_list(1, 2);
        let pts = sweep_range(&s, &[3.0, 6.0], &seeds, true, None).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|p| p.points.len() == 2 && p.gaps.len() == 2));
        assert_eq!(pts[1].points[1].seed, 2);
        assert!(sweep_bandwidth(&s, &[1e8], &[], None).is_err());
    }

    #[test]
    fn db_stats() {
        let st = DbStats::from_linear(&[1.0, 100.0]);
        assert_eq!(st, DbStats { mean: 10.0, min: 0.0, max: 20.0 });
        assert!((st.mean_linear() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(1.0, 100.0, 5);
        assert_eq!(v.len(), 5);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[4] - 100.0).abs() < 1e-12 && (v[2] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn mismatch_includes_center() {
        let s = small();
        let g = mismatch_for_bandwidth(&s, 100e6, &[2.0, 8.0], 1).unwrap();
        let c = g.alphas.iter().position(|a| *a == 1.0).unwrap();
        assert!(g.delta.row(c).iter().all(|v| *v == 0.0));
    }
}
