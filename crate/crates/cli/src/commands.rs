//! One function per subcommand. Each computes its results, then writes the
//! requested formats through [`Output`].

use std::path::PathBuf;

use serde::Serialize;

use nfcrb::experiment::{evaluate_full_array, mismatch_for_bandwidth, sweep_bandwidth, sweep_range, sweep_rf_chains, DbStats, SweepPoint};
use nfcrb::verify::{run_verification, VerifyOptions, VerifyReport};
use nfcrb::{compression_gap, evaluate, CompressionGap, CrbReport, FimCache, OperatingPoint};

use crate::config::{ExperimentConfig, Format};
use crate::output::{Cell, Output};
use crate::svg::{Heatmap, LinePlot, Series, PALETTE};
use crate::CliError;

pub struct Run {
    pub cfg: ExperimentConfig,
    pub command: &'static str,
    pub corrupt_derivative: bool,
}

impl Run {
    fn output(&self, seeds: Vec<u64>) -> Result<Output, CliError> {
        Output::new(&PathBuf::from(&self.cfg.output.dir), self.command, &self.cfg, seeds)
    }
}

fn sqrt_db(s: &DbStats) -> (f64, f64, f64) {
    let f = |v: f64| 10f64.powf(v / 20.0);
    (f(s.mean), f(s.min), f(s.max))
}

fn report_line(out: &Output) {
    for p in out.written() {
        println!("wrote {}", p.display());
    }
}

#[derive(Serialize)]
struct MismatchSummary {
    bandwidth_hz: f64,
    csv_seed: u64,
    max_delta: f64,
    edge_max_delta: f64,
    max_delta_per_seed: Vec<f64>,
    max_delta_seed_mean: f64,
}

pub fn mismatch(run: &Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let scn = cfg.scenario();
    let seeds = cfg.seeds();
    let ranges = nfcrb::experiment::log_space(cfg.sweep.range_min_m, cfg.sweep.range_max_m, cfg.sweep.mismatch_range_points);
    let ranges = cfg.sweep.range_list_m.clone().unwrap_or(ranges);
    let mut out = run.output(seeds.clone())?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut maps = Vec::new();
    for &b in &cfg.sweep.mismatch_bandwidths_hz {
        let grids = seeds.iter().map(|&s| mismatch_for_bandwidth(&scn, b, &ranges, s)).collect::<nfcrb::Result<Vec<_>>>()?;
        let first = &grids[0];
        for (i, &a) in first.alphas.iter().enumerate() {
            for (j, &r) in first.ranges_m.iter().enumerate() {
                rows.push(vec![Cell::from(b / 1e6), a.into(), r.into(), first.delta[(i, j)].into()]);
            }
        }
        let per_seed: Vec<f64> = grids.iter().map(|g| g.max_delta).collect();
        println!("B = {:>6.1} MHz  max delta = {:.4} (seed {}), seed mean {:.4}", b / 1e6, first.max_delta, seeds[0], per_seed.iter().sum::<f64>() / per_seed.len() as f64);
        summary.push(MismatchSummary {
            bandwidth_hz: b,
            csv_seed: seeds[0],
            max_delta: first.max_delta,
            edge_max_delta: first.edge_max_delta(),
            max_delta_seed_mean: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
            max_delta_per_seed: per_seed,
        });
        maps.push((b, grids.into_iter().next().expect("non-empty seed list")));
    }
    if cfg.wants(Format::Csv) {
        out.csv("mismatch", &["B_mhz", "alpha", "r_m", "delta"], &rows)?;
    }
    if cfg.wants(Format::Json) {
        out.json("mismatch_summary", &summary)?;
    }
    if cfg.wants(Format::Svg) {
        for (b, g) in &maps {
            let hm = Heatmap {
                title: format!("Relative covariance mismatch, B = {:.0} MHz", b / 1e6),
                x_label: "range r (m)".into(),
                y_label: "frequency ratio f_k / f_c".into(),
                log_x: true,
                xs: g.ranges_m.clone(),
                ys: g.alphas.clone(),
                values: (0..g.alphas.len()).map(|i| g.delta.row(i).iter().copied().collect()).collect(),
                contour: Some(0.05),
                colorbar_label: "delta".into(),
            };
            let meta = out.metadata_json();
            out.svg(&format!("mismatch_B{:.0}MHz", b / 1e6), hm.render(&meta))?;
        }
    }
    report_line(&out);
    Ok(())
}

fn var_cols(p: &SweepPoint, f: impl Fn(&OperatingPoint) -> f64) -> (f64, f64, f64) {
    sqrt_db(&p.stats_var(f))
}

pub fn sweep_bw(run: &Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let scn = cfg.scenario();
    let seeds = cfg.seeds();
    let cache = FimCache::new();
    let points = sweep_bandwidth(&scn, &cfg.bandwidths(), &seeds, Some(&cache))?;
    let mut out = run.output(seeds.clone())?;

    let header = [
        "bandwidth_hz", "subcarriers", "selected", "seeds",
        "std_r_wb_m", "std_r_wb_min_m", "std_r_wb_max_m", "std_r_nb_m", "std_r_dd_m",
        "std_theta_wb_deg", "std_theta_nb_deg", "std_theta_dd_deg",
        "delta_dd_db", "delta_gd_r_db", "delta_gd_r_min_db", "delta_gd_r_max_db",
        "delta_gd_theta_db", "delta_total_r_db", "gd_scalar_bound_db", "range_infinite",
    ];
    let mut rows = Vec::new();
    let mut plot = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for p in &points {
        let op0 = &p.points[0];
        let wb = var_cols(p, |o| o.wideband.paths[0].range_var);
        let nb = var_cols(p, |o| o.narrowband.paths[0].range_var);
        let dd = var_cols(p, |o| o.decomposition.data_diversity.paths[0].range_var);
        let twb = var_cols(p, |o| o.wideband.paths[0].theta_var);
        let tnb = var_cols(p, |o| o.narrowband.paths[0].theta_var);
        let tdd = var_cols(p, |o| o.decomposition.data_diversity.paths[0].theta_var);
        let gdr = p.stats_db(|o| o.decomposition.delta_gd_r[0]);
        let gdt = p.stats_db(|o| o.decomposition.delta_gd_theta[0]);
        let tot = p.stats_db(|o| o.decomposition.delta_total_r[0]);
        let deg = |v: f64| v.to_degrees();
        rows.push(vec![
            p.value.into(), op0.subcarriers.into(), op0.selected.into(), seeds.len().into(),
            wb.0.into(), wb.1.into(), wb.2.into(), nb.0.into(), dd.0.into(),
            deg(twb.0).into(), deg(tnb.0).into(), deg(tdd.0).into(),
            op0.decomposition.delta_dd.into(), gdr.mean.into(), gdr.min.into(), gdr.max.into(),
            gdt.mean.into(), tot.mean.into(), op0.gd_scalar_bound_db.into(), op0.wideband.paths[0].range_is_infinite().into(),
        ]);
        plot.0.push(p.value / 1e6);
        plot.1.push(wb.0);
        plot.2.push(wb.1);
        plot.3.push(wb.2);
        plot.4.push(nb.0);
        plot.5.push(dd.0);
        plot.6.push(gdr);
        println!(
            "B = {:>7.2} MHz  K_s = {:>3}  sqrt CRB_r: WB {:.4e} m  NB {:.4e} m  gd_r {:+.3} dB  gd_theta {:+.3} dB",
            p.value / 1e6, op0.selected, wb.0, nb.0, gdr.mean, gdt.mean
        );
    }
    if cfg.wants(Format::Csv) {
        out.csv("sweep_bw", &header, &rows)?;
        per_seed_csv(&mut out, "sweep_bw_seeds", "bandwidth_hz", &points)?;
    }
    if cfg.wants(Format::Json) {
        out.json("sweep_bw", &points)?;
    }
    if cfg.wants(Format::Svg) {
        let meta = out.metadata_json();
        let crb = LinePlot {
            title: "Range bound vs bandwidth".into(),
            x_label: "bandwidth B (MHz)".into(),
            y_label: "sqrt CRB_r (m)".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series::new("wideband", plot.0.clone(), plot.1, PALETTE[0]).with_band(plot.2, plot.3),
                Series::new("narrowband", plot.0.clone(), plot.4, PALETTE[1]),
                Series::new("NB / sqrt(K_s)", plot.0.clone(), plot.5, PALETTE[2]).dashed(),
            ],
            vlines: Vec::new(),
        };
        out.svg("sweep_bw", crb.render(&meta))?;
        let gain = LinePlot {
            title: "Geometric-diversity range gain".into(),
            x_label: "bandwidth B (MHz)".into(),
            y_label: "delta_gd(r) (dB)".into(),
            log_x: true,
            log_y: false,
            series: vec![Series::new("seed mean", plot.0.clone(), plot.6.iter().map(|s| s.mean).collect(), PALETTE[0])
                .with_band(plot.6.iter().map(|s| s.min).collect(), plot.6.iter().map(|s| s.max).collect())],
            vlines: Vec::new(),
        };
        out.svg("sweep_bw_gain", gain.render(&meta))?;
    }
    report_line(&out);
    Ok(())
}

fn per_seed_csv(out: &mut Output, name: &str, key: &str, points: &[SweepPoint]) -> Result<(), CliError> {
    let header = [
        key, "seed", "selected", "crb_theta_wb_rad2", "crb_theta_nb_rad2", "crb_r_wb_m2", "crb_r_nb_m2",
        "delta_gd_theta_db", "delta_gd_r_db", "gap_theta_db", "gap_r_db", "range_infinite",
    ];
    let mut rows = Vec::new();
    for p in points {
        for (i, op) in p.points.iter().enumerate() {
            let gap = p.gaps.get(i);
            rows.push(vec![
                p.value.into(), op.seed.into(), op.selected.into(),
                op.wideband.paths[0].theta_var.into(), op.narrowband.paths[0].theta_var.into(),
                op.wideband.paths[0].range_var.into(), op.narrowband.paths[0].range_var.into(),
                op.decomposition.delta_gd_theta[0].into(), op.decomposition.delta_gd_r[0].into(),
                gap.map_or(f64::NAN, |g| g.theta_db[0]).into(), gap.map_or(f64::NAN, |g| g.range_db[0]).into(),
                op.wideband.paths[0].range_is_infinite().into(),
            ]);
        }
    }
    out.csv(name, &header, &rows)
}

pub fn sweep_range_cmd(run: &Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let scn = cfg.scenario();
    let seeds = cfg.seeds();
    let ranges = cfg.ranges();
    let points = sweep_range(&scn, &ranges, &seeds, true, None)?;
    let mut out = run.output(seeds.clone())?;
    let header = [
        "range_m", "seeds",
        "std_r_wb_m", "std_r_wb_min_m", "std_r_wb_max_m", "std_r_nb_m", "std_r_full_m",
        "std_theta_wb_deg", "std_theta_nb_deg", "std_theta_full_deg",
        "gap_r_db", "gap_theta_db", "delta_total_r_db", "delta_gd_r_db", "range_infinite",
    ];
    let mut rows = Vec::new();
    let mut xs = Vec::new();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); 9];
    for p in &points {
        let full = p.full_array.as_ref().expect("range sweep computes the full-array reference");
        let wb = var_cols(p, |o| o.wideband.paths[0].range_var);
        let nb = var_cols(p, |o| o.narrowband.paths[0].range_var);
        let twb = var_cols(p, |o| o.wideband.paths[0].theta_var);
        let tnb = var_cols(p, |o| o.narrowband.paths[0].theta_var);
        let gap_r = p.gap_stats(0, true).expect("gaps present");
        let gap_t = p.gap_stats(0, false).expect("gaps present");
        let tot = p.stats_db(|o| o.decomposition.delta_total_r[0]);
        let gd = p.stats_db(|o| o.decomposition.delta_gd_r[0]);
        let inf = full.paths[0].range_is_infinite();
        rows.push(vec![
            p.value.into(), seeds.len().into(),
            wb.0.into(), wb.1.into(), wb.2.into(), nb.0.into(), full.paths[0].range_std_m().into(),
            twb.0.to_degrees().into(), tnb.0.to_degrees().into(), full.paths[0].theta_std_deg().into(),
            gap_r.mean.into(), gap_t.mean.into(), tot.mean.into(), gd.mean.into(), inf.into(),
        ]);
        xs.push(p.value);
        for (k, v) in [wb.0, wb.1, wb.2, nb.0, full.paths[0].range_std_m(), twb.0.to_degrees(), tnb.0.to_degrees(), full.paths[0].theta_std_deg(), gap_r.mean].into_iter().enumerate() {
            series[k].push(v);
        }
        println!(
            "r = {:>8.3} m  sqrt CRB_r: WB {:.4e}  NB {:.4e}  full {:.4e} m  gap {:.2} dB  total {:.2} dB",
            p.value, wb.0, nb.0, full.paths[0].range_std_m(), gap_r.mean, tot.mean
        );
    }
    if cfg.wants(Format::Csv) {
        out.csv("sweep_range", &header, &rows)?;
        per_seed_csv(&mut out, "sweep_range_seeds", "range_m", &points)?;
    }
    if cfg.wants(Format::Json) {
        out.json("sweep_range", &points)?;
    }
    if cfg.wants(Format::Svg) {
        let meta = out.metadata_json();
        let vlines: Vec<(f64, String)> = cfg.sweep.ebrd_m.map(|v| (v, "EBRD".to_string())).into_iter().collect();
        let r_plot = LinePlot {
            title: format!("Range bound vs range, B = {:.0} MHz", scn.bandwidth_hz / 1e6),
            x_label: "range r (m)".into(),
            y_label: "sqrt CRB_r (m)".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series::new("wideband, compressed", xs.clone(), series[0].clone(), PALETTE[0]).with_band(series[1].clone(), series[2].clone()),
                Series::new("narrowband, compressed", xs.clone(), series[3].clone(), PALETTE[1]),
                Series::new("wideband, full array", xs.clone(), series[4].clone(), PALETTE[2]).dashed(),
            ],
            vlines: vlines.clone(),
        };
        out.svg("sweep_range_r", r_plot.render(&meta))?;
        let t_plot = LinePlot {
            title: format!("Angle bound vs range, B = {:.0} MHz", scn.bandwidth_hz / 1e6),
            x_label: "range r (m)".into(),
            y_label: "sqrt CRB_theta (deg)".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series::new("wideband, compressed", xs.clone(), series[5].clone(), PALETTE[0]),
                Series::new("narrowband, compressed", xs.clone(), series[6].clone(), PALETTE[1]),
                Series::new("wideband, full array", xs.clone(), series[7].clone(), PALETTE[2]).dashed(),
            ],
            vlines,
        };
        out.svg("sweep_range_theta", t_plot.render(&meta))?;
    }
    report_line(&out);
    Ok(())
}

pub fn sweep_nrf(run: &Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let scn = cfg.scenario();
    let seeds = cfg.seeds();
    let chains = &cfg.combiner.rf_chains_sweep;
    let points = sweep_rf_chains(&scn, chains, &seeds, None)?;
    let mut out = run.output(seeds.clone())?;
    let header = [
        "n_rf", "seeds", "std_r_wb_m", "std_r_wb_min_m", "std_r_wb_max_m", "std_r_full_m",
        "std_theta_wb_deg", "std_theta_full_deg", "gap_r_db", "gap_r_min_db", "gap_r_max_db", "gap_theta_db",
    ];
    let mut rows = Vec::new();
    let (mut xs, mut ys, mut lo, mut hi, mut full_line, mut gaps) = (vec![], vec![], vec![], vec![], vec![], vec![]);
    for p in &points {
        let full = p.full_array.as_ref().expect("full-array reference");
        let wb = var_cols(p, |o| o.wideband.paths[0].range_var);
        let twb = var_cols(p, |o| o.wideband.paths[0].theta_var);
        let g = p.gap_stats(0, true).expect("gaps present");
        let gt = p.gap_stats(0, false).expect("gaps present");
        rows.push(vec![
            p.value.into(), seeds.len().into(), wb.0.into(), wb.1.into(), wb.2.into(), full.paths[0].range_std_m().into(),
            twb.0.to_degrees().into(), full.paths[0].theta_std_deg().into(), g.mean.into(), g.min.into(), g.max.into(), gt.mean.into(),
        ]);
        xs.push(p.value);
        ys.push(wb.0);
        lo.push(wb.1);
        hi.push(wb.2);
        full_line.push(full.paths[0].range_std_m());
        gaps.push(g);
        println!("N_RF = {:>3}  sqrt CRB_r {:.4e} m  gap {:.3} dB [{:.3}, {:.3}]", p.value, wb.0, g.mean, g.min, g.max);
    }
    if cfg.wants(Format::Csv) {
        out.csv("sweep_nrf", &header, &rows)?;
        per_seed_csv(&mut out, "sweep_nrf_seeds", "n_rf", &points)?;
    }
    if cfg.wants(Format::Json) {
        out.json("sweep_nrf", &points)?;
    }
    if cfg.wants(Format::Svg) {
        let meta = out.metadata_json();
        let plot = LinePlot {
            title: format!("Range bound vs RF chains, B = {:.0} MHz", scn.bandwidth_hz / 1e6),
            x_label: "N_RF".into(),
            y_label: "sqrt CRB_r (m)".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series::new("compressed (seed mean)", xs.clone(), ys, PALETTE[0]).with_band(lo, hi),
                Series::new("full array", xs.clone(), full_line, PALETTE[2]).dashed(),
            ],
            vlines: Vec::new(),
        };
        out.svg("sweep_nrf", plot.render(&meta))?;
    }
    report_line(&out);
    Ok(())
}

#[derive(Serialize)]
struct DecomposeSummary {
    bandwidth_hz: f64,
    selected: usize,
    delta_dd_db: f64,
    delta_gd_r_db: DbStats,
    delta_gd_theta_db: DbStats,
    delta_total_r_db: DbStats,
    delta_total_theta_db: DbStats,
    std_r_nb_m: DbStats,
    std_r_wb_m: DbStats,
    std_r_dd_m: DbStats,
    std_theta_wb_deg: DbStats,
    gd_scalar_bound_db: f64,
    compression_gap_r_db: DbStats,
    compression_gap_theta_db: DbStats,
    full_array: CrbReport,
    per_seed: Vec<OperatingPoint>,
    gaps: Vec<CompressionGap>,
}

/// Seed statistics of a standard deviation, in dB of the standard deviation
/// (`20 log10`), so `mean_linear` style conversions stay consistent.
fn std_stats(v: &[f64]) -> DbStats {
    DbStats::from_db(&v.iter().map(|x| 20.0 * x.log10()).collect::<Vec<_>>())
}

pub fn decompose_cmd(run: &Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let scn = cfg.scenario();
    let seeds = cfg.seeds();
    let cache = FimCache::new();
    let ops = seeds.iter().map(|&s| evaluate(&scn, s, Some(&cache))).collect::<nfcrb::Result<Vec<_>>>()?;
    let full = evaluate_full_array(&scn, Some(&cache))?;
    let gaps = ops.iter().map(|o| compression_gap(&o.wideband, &full)).collect::<nfcrb::Result<Vec<_>>>()?;
    let col = |f: &dyn Fn(&OperatingPoint) -> f64| ops.iter().map(f).collect::<Vec<f64>>();
    let summary = DecomposeSummary {
        bandwidth_hz: scn.bandwidth_hz,
        selected: ops[0].selected,
        delta_dd_db: ops[0].decomposition.delta_dd,
        delta_gd_r_db: DbStats::from_db(&col(&|o| o.decomposition.delta_gd_r[0])),
        delta_gd_theta_db: DbStats::from_db(&col(&|o| o.decomposition.delta_gd_theta[0])),
        delta_total_r_db: DbStats::from_db(&col(&|o| o.decomposition.delta_total_r[0])),
        delta_total_theta_db: DbStats::from_db(&col(&|o| o.decomposition.delta_total_theta[0])),
        std_r_nb_m: std_stats(&col(&|o| o.narrowband.paths[0].range_std_m())),
        std_r_wb_m: std_stats(&col(&|o| o.wideband.paths[0].range_std_m())),
        std_r_dd_m: std_stats(&col(&|o| o.decomposition.data_diversity.paths[0].range_std_m())),
        std_theta_wb_deg: std_stats(&col(&|o| o.wideband.paths[0].theta_std_deg())),
        gd_scalar_bound_db: ops[0].gd_scalar_bound_db,
        compression_gap_r_db: DbStats::from_db(&gaps.iter().map(|g| g.range_db[0]).collect::<Vec<_>>()),
        compression_gap_theta_db: DbStats::from_db(&gaps.iter().map(|g| g.theta_db[0]).collect::<Vec<_>>()),
        full_array: full,
        per_seed: ops,
        gaps,
    };
    let lin = |s: &DbStats| 10f64.powf(s.mean / 20.0);
    println!("B = {:.1} MHz, K_s = {}", summary.bandwidth_hz / 1e6, summary.selected);
    println!("delta_dd        = {:.4} dB", summary.delta_dd_db);
    println!("delta_gd(r)     = {:+.4} dB  [{:+.4}, {:+.4}]", summary.delta_gd_r_db.mean, summary.delta_gd_r_db.min, summary.delta_gd_r_db.max);
    println!("delta_gd(theta) = {:+.4} dB  [{:+.4}, {:+.4}]", summary.delta_gd_theta_db.mean, summary.delta_gd_theta_db.min, summary.delta_gd_theta_db.max);
    println!("delta_total(r)  = {:.4} dB", summary.delta_total_r_db.mean);
    println!("sqrt CRB_r: NB {:.4e} m  DD {:.4e} m  WB {:.4e} m  (seed geometric means)", lin(&summary.std_r_nb_m), lin(&summary.std_r_dd_m), lin(&summary.std_r_wb_m));
    println!("compression gap (r) = {:.3} dB, scalar squint bound = {:.3e} dB", summary.compression_gap_r_db.mean, summary.gd_scalar_bound_db);

    let mut out = run.output(seeds.clone())?;
    if cfg.wants(Format::Csv) {
        let header = [
            "seed", "selected", "std_theta_nb_deg", "std_theta_wb_deg", "std_r_nb_m", "std_r_dd_m", "std_r_wb_m",
            "delta_dd_db", "delta_gd_theta_db", "delta_gd_r_db", "delta_total_theta_db", "delta_total_r_db", "gap_r_db", "range_infinite",
        ];
        let rows: Vec<Vec<Cell>> = summary
            .per_seed
            .iter()
            .zip(&summary.gaps)
            .map(|(o, g)| {
                let d = &o.decomposition;
                vec![
                    o.seed.into(), o.selected.into(),
                    o.narrowband.paths[0].theta_std_deg().into(), o.wideband.paths[0].theta_std_deg().into(),
                    o.narrowband.paths[0].range_std_m().into(), d.data_diversity.paths[0].range_std_m().into(), o.wideband.paths[0].range_std_m().into(),
                    d.delta_dd.into(), d.delta_gd_theta[0].into(), d.delta_gd_r[0].into(), d.delta_total_theta[0].into(), d.delta_total_r[0].into(),
                    g.range_db[0].into(), o.wideband.paths[0].range_is_infinite().into(),
                ]
            })
            .collect();
        out.csv("decompose", &header, &rows)?;
    }
    if cfg.wants(Format::Json) {
        out.json("decompose", &summary)?;
    }
    report_line(&out);
    Ok(())
}

/// Returns the report; the caller maps a failed report to exit code 3.
pub fn verify_cmd(run: &Run) -> Result<VerifyReport, CliError> {
    let cfg = &run.cfg;
    let scn = cfg.scenario();
    let seed = cfg.seeds()[0];
    let opts = VerifyOptions { seed, corrupt_derivative: run.corrupt_derivative, ..VerifyOptions::default() };
    let report = run_verification(&scn, &opts)?;
    for c in &report.checks {
        println!("{} {:<30} value {:.4e}  tolerance {:.1e}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance, c.detail);
    }
    let mut out = run.output(vec![seed])?;
    out.json("verify", &report)?;
    report_line(&out);
    Ok(report)
}
