//! Pipeline dispatch. Every `(pipeline, resolution, p, k)` cell is an
//! independent task; tasks run on a rayon pool and their outputs are
//! gathered in task order, so results do not depend on the thread count.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use cheeger_core::{
    build_grid, check_band_bound, counterexample_comb, decompose_with, first_eigenpair, h1_exact, hk_bruteforce,
    hk_local_search, hk_upper_for_spec, p_to_one_sweep, spectrum_p2, sweep, verify_bilateral, BilateralOptions,
    CellSet, DecomposeOptions, Exponent, Grid, LevelInterval, PerimeterMode,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{NormalizedConfig, Pipeline};
use crate::error::{CliError, Result};
use crate::record::{CheckRecord, CsvRow, Origin, ReportRecord, RunRecord, StageError, StageTiming};

#[derive(Clone, Debug, PartialEq)]
struct Task {
    pipeline: Pipeline,
    resolution: u32,
    p: Option<f64>,
    k: Option<usize>,
}

fn tasks(cfg: &NormalizedConfig) -> Vec<Task> {
    let mut out = Vec::new();
    for &pipeline in &cfg.pipelines {
        let task = |resolution, p, k| Task {
            pipeline,
            resolution,
            p,
            k,
        };
        match pipeline {
            Pipeline::Eig | Pipeline::Sweep => {
                for &r in &cfg.resolutions {
                    for &p in &cfg.p {
                        out.push(task(r, Some(p), None));
                    }
                }
            }
            Pipeline::Decompose | Pipeline::Hk => {
                for &r in &cfg.resolutions {
                    for &p in &cfg.p {
                        for &k in &cfg.k {
                            out.push(task(r, Some(p), Some(k)));
                        }
                    }
                }
            }
            Pipeline::Verify => {
                let finest = *cfg.resolutions.last().expect("validated");
                for &p in &cfg.p {
                    out.push(task(finest, Some(p), None));
                }
            }
            Pipeline::Comb | Pipeline::P1sweep => {
                for &r in &cfg.resolutions {
                    out.push(task(r, None, None));
                }
            }
        }
    }
    out
}

/// Everything one task produced.
#[derive(Default)]
struct TaskOutput {
    rows: Vec<CsvRow>,
    checks: Vec<CheckRecord>,
    reports: Vec<ReportRecord>,
    errors: Vec<StageError>,
    files: Vec<(String, String)>,
    seconds: f64,
}

struct Ctx<'a> {
    cfg: &'a NormalizedConfig,
    task: &'a Task,
    spec: String,
    out: TaskOutput,
}

impl Ctx<'_> {
    fn origin(&self) -> Origin {
        Origin {
            pipeline: self.task.pipeline,
            spec: self.spec.clone(),
            resolution: self.task.resolution,
            p: self.task.p,
            k: self.task.k,
        }
    }

    fn row(&mut self, quantity: &str, value: f64, witness: Option<&str>) {
        self.row_at(self.task.p, self.task.k, self.cfg.mode, quantity, value, witness);
    }

    fn row_at(
        &mut self,
        p: Option<f64>,
        k: Option<usize>,
        mode: PerimeterMode,
        quantity: &str,
        value: f64,
        witness: Option<&str>,
    ) {
        self.out.rows.push(CsvRow {
            spec: self.spec.clone(),
            resolution: self.task.resolution,
            p,
            k,
            mode,
            quantity: quantity.to_string(),
            value,
            witness_file: witness.map(str::to_string),
        });
    }

    fn check(&mut self, name: &str, lhs: f64, rhs: f64, asserted: bool) {
        let origin = self.origin();
        self.out.checks.push(CheckRecord {
            origin,
            name: name.to_string(),
            lhs,
            rhs,
            holds: lhs <= rhs,
            asserted,
        });
    }

    fn report<T: Serialize>(&mut self, report: &T) -> Result<()> {
        let origin = self.origin();
        self.out.reports.push(ReportRecord {
            origin,
            report: serde_json::to_value(report)?,
        });
        Ok(())
    }

    fn error(&mut self, message: String) {
        let origin = self.origin();
        self.out.errors.push(StageError { origin, message });
    }

    fn file_stem(&self) -> String {
        let t = self.task;
        let mut s = format!("{}_{}_r{}", t.pipeline, self.spec, t.resolution);
        if let Some(p) = t.p {
            write!(s, "_p{p}").unwrap();
        }
        if let Some(k) = t.k {
            write!(s, "_k{k}").unwrap();
        }
        s
    }

    /// Stores witness sets in a sidecar and returns its relative path.
    fn witnesses(&mut self, tag: &str, sets: &[CellSet]) -> String {
        let name = format!("witnesses/{}_{tag}_{}.txt", self.file_stem(), self.cfg.mode);
        let mut text = String::new();
        for (i, set) in sets.iter().enumerate() {
            let cells: Vec<String> = set.iter().map(|c| c.to_string()).collect();
            writeln!(text, "{i}: {}", cells.join(" ")).unwrap();
        }
        self.out.files.push((name.clone(), text));
        name
    }
}

fn exponent(p: Option<f64>) -> Result<Exponent> {
    Ok(Exponent::new(p.expect("task carries p"))?)
}

fn run_eig(ctx: &mut Ctx, grid: &Grid) -> Result<()> {
    let p = exponent(ctx.task.p)?;
    let t = &ctx.cfg.tolerances;
    let e = first_eigenpair(grid, p, t.eig_tol, t.max_iter)?;
    let (mut field, mut meta) = (Vec::new(), Vec::new());
    e.export(grid, &mut field, &mut meta)?;
    let stem = format!("fields/{}", ctx.file_stem());
    ctx.out
        .files
        .push((format!("{stem}.txt"), String::from_utf8(field).expect("ascii")));
    ctx.out
        .files
        .push((format!("{stem}.json"), String::from_utf8(meta).expect("utf8")));
    ctx.row("lambda_1", e.lambda, None);
    ctx.row("residual", e.residual, None);
    ctx.row("iterations", e.iterations as f64, None);
    ctx.report(&e.meta(grid))?;
    if p.p() == 2.0 {
        let m = ctx.cfg.k.last().copied().unwrap_or(1).min(grid.len());
        let s = spectrum_p2(grid, m)?;
        for &k in ctx.cfg.k.iter().filter(|&&k| k <= m) {
            ctx.row_at(ctx.task.p, Some(k), ctx.cfg.mode, "lambda_k", s.eigenvalues[k - 1], None);
        }
    }
    Ok(())
}

fn run_sweep(ctx: &mut Ctx, grid: &Grid) -> Result<()> {
    let p = exponent(ctx.task.p)?;
    let t = &ctx.cfg.tolerances;
    let e = first_eigenpair(grid, p, t.eig_tol, t.max_iter)?;
    let s = sweep(grid, &e.field, p.p(), ctx.cfg.mode)?;
    let w = ctx.witnesses("set", std::slice::from_ref(&s.set));
    ctx.row("phi", s.phi, Some(&w));
    ctx.row("sweep_bound", s.bound, None);
    ctx.row("chain_slack", s.chain_slack, None);
    ctx.row("t_opt", s.t_opt, None);
    ctx.check("sweep_bound_discrete", s.phi, s.discrete_bound(), true);
    ctx.check("sweep_bound", s.phi, s.bound, grid.resolution() >= 64);
    let m = e.field.max();
    let band = check_band_bound(grid, &e.field, p.p(), LevelInterval::new(0.25 * m, 0.5 * m), ctx.cfg.mode)?;
    ctx.row("band_slack", band.slack, None);
    ctx.check("band_energy", band.rhs, band.lhs, false);
    ctx.report(&s)?;
    Ok(())
}

fn run_decompose(ctx: &mut Ctx, grid: &Grid) -> Result<()> {
    let p = exponent(ctx.task.p)?;
    let k = ctx.task.k.expect("task carries k");
    let t = &ctx.cfg.tolerances;
    let e = first_eigenpair(grid, p, t.eig_tol, t.max_iter)?;
    let opts = DecomposeOptions {
        mode: ctx.cfg.mode,
        ..DecomposeOptions::default()
    };
    let fam = decompose_with(grid, &e.field, p, k, &opts)?;
    let c = fam.certificate.clone();
    ctx.row("big_delta", c.delta_sum, None);
    ctx.row("delta", c.delta, None);
    ctx.row("density", c.density, None);
    ctx.row("max_member_rayleigh", c.max_member_rayleigh, None);
    ctx.row("region_bound", c.region_bound, None);
    ctx.row("separation_bound", c.separation_bound, None);
    ctx.row("effective_constant", c.effective_constant, None);
    ctx.check("truncation_certificate", c.max_member_rayleigh, c.slack_factor * c.region_bound, true);
    ctx.check("big_delta_floor", 0.45, c.delta_sum, false);
    if p.p() == 2.0 && k <= grid.len() {
        let lambda_k = spectrum_p2(grid, k)?.eigenvalues[k - 1];
        ctx.row("lambda_k", lambda_k, None);
        ctx.check("family_bound", lambda_k, c.max_member_rayleigh, true);
    }
    ctx.report(&c)?;
    Ok(())
}

fn run_hk(ctx: &mut Ctx, grid: &Grid) -> Result<()> {
    let p = exponent(ctx.task.p)?;
    let k = ctx.task.k.expect("task carries k");
    let mode = ctx.cfg.mode;
    let t = ctx.cfg.tolerances.clone();
    let spec = &ctx.cfg.spec;

    let exact = if k == 1 {
        let c = h1_exact(grid, mode)?;
        Some((c.value, vec![c.set]))
    } else if spec.dimension == 1 || grid.len() <= t.bruteforce_cells {
        match hk_bruteforce(grid, k, mode, t.budget) {
            Ok(b) => Some((b.value, b.witnesses)),
            Err(e) => {
                ctx.error(format!("brute force: {e}"));
                None
            }
        }
    } else {
        None
    };
    if let Some((value, sets)) = &exact {
        let w = ctx.witnesses("exact", sets);
        ctx.row("h_k_exact", *value, Some(&w));
        if spec.convex_hint && mode == PerimeterMode::Dirichlet {
            let fk = cheeger_core::faber_krahn_lower(spec.dimension, k, spec.volume());
            ctx.check("faber_krahn", fk, *value, true);
        }
    }

    let report = match hk_upper_for_spec(spec, grid.resolution(), p, k, mode) {
        Ok(r) => r,
        Err(e) => {
            ctx.error(format!("pipeline: {e}"));
            return Ok(());
        }
    };
    let w = ctx.witnesses("upper", &report.witnesses);
    ctx.row("h_k_upper", report.h_k_upper, Some(&w));
    ctx.row("c_eff", report.c_eff, None);
    ctx.row("scaling_rhs", report.scaling_rhs, None);
    ctx.row("lambda_1", report.lambda_1, None);
    ctx.row("phi_f", report.phi_f, None);
    if let Some(fk) = report.faber_krahn_lower {
        ctx.row("faber_krahn_lower", fk, None);
    }
    if let Some(l) = report.lambda_k_p2 {
        ctx.row("lambda_k", l, None);
    }
    for c in &report.checks {
        ctx.check(&c.name, c.lhs, c.rhs, true);
    }

    let local = hk_local_search(grid, mode, &report.witnesses, t.local_rounds)?;
    let w = ctx.witnesses("local", &local.partition);
    ctx.row("h_k_local", local.value, Some(&w));
    ctx.check("local_below_upper", local.value, report.h_k_upper, true);
    if let Some((value, _)) = exact {
        ctx.check("exact_below_local", value, local.value, true);
    }
    ctx.report(&report)?;
    Ok(())
}

fn run_verify(ctx: &mut Ctx) -> Result<()> {
    let p = exponent(ctx.task.p)?;
    let t = &ctx.cfg.tolerances;
    let opts = BilateralOptions {
        resolutions: ctx.cfg.resolutions.clone(),
        ks: ctx.cfg.k.clone(),
        bruteforce_cells: t.bruteforce_cells,
        budget: t.budget,
        local_rounds: t.local_rounds,
        ratio_band: t.ratio_band,
    };
    let rep = verify_bilateral(&ctx.cfg.spec, p, &opts)?;
    let dirichlet = PerimeterMode::Dirichlet;
    for row in &rep.rows {
        let saved = ctx.task.resolution;
        let (pp, k) = (ctx.task.p, Some(row.k));
        // Rows carry their own resolution.
        ctx.out.rows.push(CsvRow {
            spec: ctx.spec.clone(),
            resolution: row.resolution,
            p: pp,
            k,
            mode: dirichlet,
            quantity: "h_k_upper".into(),
            value: row.h_upper,
            witness_file: None,
        });
        let mut extra = vec![("faber_krahn_lower", row.faber_krahn)];
        if let Some(h) = row.h_exact {
            extra.push(("h_k_exact", h));
        }
        if let Some(l) = row.lambda_k {
            extra.push(("lambda_k", l));
        }
        if let Some(r) = row.ratio {
            extra.push(("hk_p_over_lambda_k", r));
        }
        for (q, v) in extra {
            ctx.out.rows.push(CsvRow {
                spec: ctx.spec.clone(),
                resolution: row.resolution,
                p: pp,
                k,
                mode: dirichlet,
                quantity: q.into(),
                value: v,
                witness_file: None,
            });
        }
        debug_assert_eq!(saved, ctx.task.resolution);
    }
    ctx.row_at(ctx.task.p, None, dirichlet, "slope", rep.slope, None);
    ctx.row_at(ctx.task.p, None, dirichlet, "c1", rep.c1, None);
    ctx.row_at(ctx.task.p, None, dirichlet, "c2", rep.c2, None);
    if let Some(s) = rep.ratio_spread {
        ctx.row_at(ctx.task.p, None, dirichlet, "ratio_spread", s, None);
        ctx.check("ratio_band", s, t.ratio_band, true);
    }
    let target = 1.0 / ctx.cfg.spec.dimension as f64;
    ctx.check("slope_band", (rep.slope - target).abs(), 0.2, true);
    ctx.report(&rep)?;
    Ok(())
}

fn run_comb(ctx: &mut Ctx) -> Result<()> {
    let c = ctx.cfg.comb.clone().expect("comb section present");
    let rep = counterexample_comb(c.teeth, &c.widths, &c.room, ctx.task.resolution)?;
    ctx.spec = rep.spec.name.clone();
    let w = ctx.witnesses("teeth", &rep.teeth);
    for row in &rep.rows {
        let k = Some(row.k);
        ctx.row_at(None, k, PerimeterMode::Relative, "h_k_upper", row.h_relative_upper, Some(&w));
        ctx.row_at(None, k, PerimeterMode::Dirichlet, "h_k_upper", row.h_dirichlet_upper, Some(&w));
        ctx.row_at(Some(2.0), k, PerimeterMode::Relative, "lambda_k", row.lambda_k, None);
        ctx.row_at(Some(2.0), k, PerimeterMode::Relative, "lambda_over_h2", row.ratio, None);
    }
    for pair in rep.rows.windows(2) {
        ctx.check(&format!("ratio_increasing[{}]", pair[1].k), pair[0].ratio, pair[1].ratio, true);
    }
    ctx.report(&rep)?;
    Ok(())
}

fn run_p1sweep(ctx: &mut Ctx, grid: &Grid) -> Result<()> {
    let list = ctx.cfg.p1sweep.clone().expect("p1sweep section present").p_list;
    let rep = p_to_one_sweep(grid, &list, ctx.cfg.mode)?;
    let mode = ctx.cfg.mode;
    ctx.row_at(None, Some(1), mode, "h_1", rep.h_1, None);
    for row in &rep.rows {
        ctx.row_at(Some(row.p), Some(1), mode, "classical_lower", row.classical_lower, None);
        match row.lambda_1 {
            Some(l) => {
                ctx.row_at(Some(row.p), Some(1), mode, "lambda_1", l, None);
                ctx.check(&format!("classical_bound[p={}]", row.p), 0.9 * row.classical_lower, l, true);
            }
            None => ctx.error(format!("p = {}: {}", row.p, row.error.clone().unwrap_or_default())),
        }
    }
    let solved: Vec<f64> = rep.rows.iter().filter_map(|r| r.lambda_1).collect();
    for pair in solved.windows(2) {
        ctx.check("monotone_in_p", pair[1], pair[0], true);
    }
    ctx.report(&rep)?;
    Ok(())
}

fn run_task(cfg: &NormalizedConfig, task: &Task) -> TaskOutput {
    let start = Instant::now();
    let mut ctx = Ctx {
        cfg,
        task,
        spec: cfg.spec.name.clone(),
        out: TaskOutput::default(),
    };
    let result = match task.pipeline {
        Pipeline::Verify => run_verify(&mut ctx),
        Pipeline::Comb => run_comb(&mut ctx),
        pipeline => match build_grid(&cfg.spec, task.resolution) {
            Ok(grid) => match pipeline {
                Pipeline::Eig => run_eig(&mut ctx, &grid),
                Pipeline::Sweep => run_sweep(&mut ctx, &grid),
                Pipeline::Decompose => run_decompose(&mut ctx, &grid),
                Pipeline::Hk => run_hk(&mut ctx, &grid),
                Pipeline::P1sweep => run_p1sweep(&mut ctx, &grid),
                Pipeline::Verify | Pipeline::Comb => unreachable!(),
            },
            Err(e) => Err(e.into()),
        },
    };
    if let Err(e) = result {
        log::info!("{} {} res {}: {e}", task.pipeline, ctx.spec, task.resolution);
        ctx.error(e.to_string());
    }
    ctx.out.seconds = start.elapsed().as_secs_f64();
    ctx.out
}

/// A finished run: the record plus sidecar files keyed by relative path.
pub struct RunOutput {
    pub record: RunRecord,
    pub files: Vec<(String, String)>,
}

/// Runs every task of `cfg` on `threads` workers (0 = rayon default).
pub fn run(cfg: &NormalizedConfig, threads: usize) -> Result<RunOutput> {
    let list = tasks(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config {
            path: "--threads".into(),
            message: e.to_string(),
        })?;
    let outputs: Vec<TaskOutput> = pool.install(|| list.par_iter().map(|t| run_task(cfg, t)).collect());

    let mut record = RunRecord {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        rows: Vec::new(),
        checks: Vec::new(),
        reports: Vec::new(),
        errors: Vec::new(),
        timings: Vec::new(),
    };
    let mut files = Vec::new();
    for (task, out) in list.iter().zip(outputs) {
        record.timings.push(StageTiming {
            origin: Origin {
                pipeline: task.pipeline,
                spec: cfg.spec.name.clone(),
                resolution: task.resolution,
                p: task.p,
                k: task.k,
            },
            seconds: out.seconds,
        });
        record.rows.extend(out.rows);
        record.checks.extend(out.checks);
        record.reports.extend(out.reports);
        record.errors.extend(out.errors);
        files.extend(out.files);
    }
    Ok(RunOutput { record, files })
}

impl RunOutput {
    /// Writes `results.csv`, `record.json`, `summary.md` and the sidecars.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let create = |p: &Path| std::fs::create_dir_all(p).map_err(|e| CliError::io(p, e));
        create(dir)?;
        let csv_path = dir.join("results.csv");
        let file = std::fs::File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
        crate::record::write_rows(&self.record.rows, file)?;
        let json_path = dir.join("record.json");
        let json = serde_json::to_string_pretty(&self.record)?;
        std::fs::write(&json_path, json).map_err(|e| CliError::io(&json_path, e))?;
        let summary_path = dir.join("summary.md");
        std::fs::write(&summary_path, self.record.summary()).map_err(|e| CliError::io(&summary_path, e))?;
        for (name, text) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                create(parent)?;
            }
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn cfg(text: &str) -> NormalizedConfig {
        ExperimentConfig::parse(text, "t")
            .unwrap()
            .normalize(Path::new("."), "t")
            .unwrap()
    }

    #[test]
    fn tasks_follow_dependency_order() {
        let c = cfg("pipelines = [\"hk\", \"eig\"]\nresolutions = [8, 4]\nk = [1, 2]\n[spec]\nbuiltin = \"unit_interval\"\n");
        let t = tasks(&c);
        assert_eq!(t.len(), 2 + 4);
        assert!(t[..2].iter().all(|t| t.pipeline == Pipeline::Eig));
        assert_eq!((t[2].resolution, t[2].k), (4, Some(1)));
        assert_eq!((t[5].resolution, t[5].k), (8, Some(2)));
    }

    #[test]
    fn interval_eigenvalue_row() {
        let c = cfg("pipelines = [\"eig\"]\nresolutions = [1024]\n[spec]\nbuiltin = \"unit_interval\"\n");
        let out = run(&c, 1).unwrap();
        let l = out.record.rows.iter().find(|r| r.quantity == "lambda_1").unwrap();
        assert!((l.value - std::f64::consts::PI.powi(2)).abs() < 0.01);
        assert!(out.record.passed());
    }

    #[test]
    fn square_hk_row_has_exact_value() {
        let c = cfg("pipelines = [\"hk\"]\nresolutions = [16]\nk = [1]\n[spec]\nbuiltin = \"unit_square\"\n");
        let out = run(&c, 2).unwrap();
        let rows = &out.record.rows;
        let exact = rows.iter().find(|r| r.quantity == "h_k_exact").unwrap();
        assert_eq!(exact.value, 4.0);
        assert!(exact.witness_file.is_some());
        assert!(out.record.passed(), "{}", out.record.summary());
    }
}
