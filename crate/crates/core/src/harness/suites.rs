use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::ExperimentConfig;
use super::corpus::{corpus, corpus_grid, select, CorpusMember};
use super::plot::{emit_plot_data, write_series};
use super::rng::stream;
use crate::czo::{
    indicator_oscillation, kernel_smoothness_check_seeded, t1_probe, tail_constant, tail_integral_fq, KernelSpec,
    OperatorSpec, ProbeConfig, Verdict,
};
use crate::error::{Error, Result};
use crate::field::{Grid, GridFunction};
use crate::lattice::{Cube, ShiftedLatticeSet};
use crate::local_stats::{CubeSample, Extension};
use crate::sobolev::{dyadic_riesz_bound, necessity_probe, poincare_check, sobolev_check};
use crate::sparse::{
    assemble_global, domination_report, sharp_domination, BoundKind, DominationReport, EngineConfig, GlobalAssembly,
    SharpDomination,
};

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 7] = [
    "stats-oracles",
    "kernel-audit",
    "prop-cr",
    "sparse-mr",
    "sparse-spd-compare",
    "sobolev",
    "necessity-probe",
];

/// Result of one suite run; also written as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub passed: bool,
    /// One entry per violated invariant, prefixed by the asserting module.
    pub failures: Vec<String>,
    pub metrics: Map<String, Value>,
    pub artifacts: Vec<String>,
}

struct Run {
    dir: PathBuf,
    metrics: Map<String, Value>,
    failures: Vec<String>,
    artifacts: Vec<String>,
}

impl Run {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Run {
            dir,
            metrics: Map::new(),
            failures: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    fn metric(&mut self, key: &str, v: impl Serialize) {
        self.metrics.insert(key.to_string(), serde_json::to_value(v).expect("metric serializes"));
    }

    fn check(&mut self, ok: bool, module: &str, invariant: &str, detail: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(format!("[{module}] {invariant}: {}", detail()));
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(p, bytes)?;
        Ok(())
    }

    fn finish(mut self, suite: &str) -> Result<SuiteOutcome> {
        self.artifacts.sort();
        let outcome = SuiteOutcome {
            suite: suite.to_string(),
            passed: self.failures.is_empty(),
            failures: self.failures,
            metrics: self.metrics,
            artifacts: self.artifacts,
        };
        fs::write(self.dir.join("summary.json"), serde_json::to_string_pretty(&outcome)? + "\n")?;
        Ok(outcome)
    }
}

/// Runs a suite and writes its artifacts under `cfg.out/<suite>/`.
pub fn run_suite(name: &str, cfg: &ExperimentConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let dir = cfg.out.join(name);
    match name {
        "stats-oracles" => stats_oracles(cfg, Run::new(dir)?)?.finish(name),
        "kernel-audit" => kernel_audit(cfg, Run::new(dir)?)?.finish(name),
        "prop-cr" => prop_cr(cfg, Run::new(dir)?)?.finish(name),
        "sparse-mr" => sparse_mr(cfg, Run::new(dir)?)?.finish(name),
        "sparse-spd-compare" => spd_compare(cfg, Run::new(dir)?)?.finish(name),
        "sobolev" => {
            if cfg.dim != 2 {
                return Err(Error::config(
                    "dim",
                    "the sobolev suite needs n = 2: the pointwise Sobolev inequality fails on the line",
                ));
            }
            sobolev(cfg, Run::new(dir)?)?.finish(name)
        }
        "necessity-probe" => necessity(cfg, Run::new(dir)?)?.finish(name),
        other => Err(Error::config("suite", format!("unknown suite {other:?}; expected one of {SUITES:?}"))),
    }
}

/// Process exit code for a suite result: 0 pass, 1 invariant violation,
/// 2 configuration error.
pub fn exit_code(result: &Result<SuiteOutcome>) -> i32 {
    match result {
        Ok(o) if o.passed => 0,
        Ok(_) => 1,
        Err(Error::Config { .. } | Error::LambdaOutOfRange(_) | Error::UnknownOperator(_) | Error::DimensionUnsupported { .. }) => 2,
        Err(_) => 1,
    }
}

fn stats_oracles(cfg: &ExperimentConfig, mut run: Run) -> Result<Run> {
    let dim = cfg.dim;
    let pairs = 500u64;
    let mut csv = String::from("pair,cells,lambda,median,medianMinimal,medianBound,rearrangement,oracle\n");
    let mut bad = [0usize; 3];
    for i in 0..pairs {
        let mut rng = stream(cfg.seed, "stats-oracles", i);
        let n = if dim == 1 { 64 } else { 16 };
        let grid = Grid::new(Cube::centered(dim, 1.0), n);
        let zero_bias: f64 = rng.gen_range(0.0..0.6);
        let values: Vec<f64> = (0..grid.cell_count())
            .map(|_| if rng.gen_bool(zero_bias) { 0.0 } else { rng.gen_range(-32i32..=32) as f64 / 8.0 })
            .collect();
        let f = GridFunction::from_values(grid, values)?;
        let side = rng.gen_range(1..=n);
        let mut lo = [0.0; 2];
        for l in lo.iter_mut().take(dim) {
            *l = -0.5 + rng.gen_range(0..=n - side) as f64 * grid.spacing();
        }
        let q = Cube::from_corner(&lo[..dim], side as f64 * grid.spacing());
        let lambda = 1.0 - rng.gen::<f64>();
        let sample = CubeSample::new(&f, &q, Extension::Strict)?;
        let total = sample.total();

        // Values are multiples of 1/8, so the sums below are exact.
        let m = sample.median();
        let dev = |c: f64| sample.values.iter().map(|v| (v - c).abs()).sum::<f64>();
        let minimal = sample.values.iter().chain([0.0].iter()).all(|c| dev(m) <= dev(*c));
        let bounded = m.abs() * total as f64 <= 2.0 * sample.values.iter().map(|v| v.abs()).sum::<f64>();

        let mut candidates: Vec<f64> = sample.values.iter().map(|v| v.abs()).chain([0.0]).collect();
        candidates.sort_by(f64::total_cmp);
        let oracle = candidates
            .iter()
            .copied()
            .find(|a| sample.values.iter().filter(|v| v.abs() > *a).count() as f64 <= lambda * total as f64)
            .expect("the largest value qualifies");
        let rearr = sample.rearrangement(lambda)?;
        bad[0] += !minimal as usize;
        bad[1] += !bounded as usize;
        bad[2] += (rearr != oracle) as usize;
        csv += &format!("{i},{total},{lambda},{m},{minimal},{bounded},{rearr},{oracle}\n");
    }
    run.write("pairs.csv", csv.as_bytes())?;
    run.metric("pairs", pairs);
    run.metric("medianMinimalityFailures", bad[0]);
    run.metric("medianBoundFailures", bad[1]);
    run.metric("rearrangementMismatches", bad[2]);
    run.check(bad[0] == 0, "local_stats", "median minimality", || format!("{} pairs", bad[0]));
    run.check(bad[1] == 0, "local_stats", "|m| ≤ 2⟨|f|⟩", || format!("{} pairs", bad[1]));
    run.check(bad[2] == 0, "local_stats", "rearrangement = sort oracle", || format!("{} pairs", bad[2]));
    Ok(run)
}

fn kernel_audit(cfg: &ExperimentConfig, mut run: Run) -> Result<Run> {
    let samples = 100_000;
    let kernels = [KernelSpec::hilbert(), KernelSpec::riesz(0), KernelSpec::riesz(1), KernelSpec::broken()];
    let mut csv = String::from("kernel,samples,maxRatio,violations,violated\n");
    let mut rows = Vec::new();
    for (i, k) in kernels.iter().enumerate() {
        let seed: u64 = stream(cfg.seed, "kernel-audit", i as u64).gen();
        let r = kernel_smoothness_check_seeded(k, samples, seed);
        csv += &format!("{},{},{:e},{},{}\n", r.kernel, r.samples, r.max_ratio, r.violations, r.violated);
        let expect_violation = k.name() == "broken";
        run.check(r.violated == expect_violation, "czo", "kernel smoothness audit", || {
            format!("{}: violated = {}, {} violations", r.kernel, r.violated, r.violations)
        });
        rows.push(json!({"kernel": r.kernel, "maxRatio": r.max_ratio, "violations": r.violations}));
    }
    run.write("kernels.csv", csv.as_bytes())?;
    run.metric("samplesPerKernel", samples);
    run.metric("kernels", rows);
    Ok(run)
}

fn prop_cr(cfg: &ExperimentConfig, mut run: Run) -> Result<Run> {
    let t = OperatorSpec::from_label(&cfg.operator, cfg.dim)?;
    let hilbert = cfg.operator == "hilbert";
    let mut series = Vec::new();
    for k in -3..=3 {
        let s = (k as f64).exp2();
        let q = Cube::new(&[0.3 * s, -0.2 * s][..cfg.dim], s);
        series.push((s, indicator_oscillation(&t, &q)?));
    }
    write_series(&run.path("oscillation_by_scale.csv"), ("scale", "oscillation"), &series)?;
    let unit = indicator_oscillation(&t, &Cube::centered(cfg.dim, 1.0))?;
    let max = series.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min = series.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let spread = (max - min) / max.max(f64::MIN_POSITIVE);
    run.metric("unitOscillation", unit);
    run.metric("maxOscillation", max);
    run.metric("scaleSpread", spread);
    run.check(spread < 0.05, "czo", "indicator oscillation scale invariance", || format!("spread {spread}"));
    if hilbert {
        let target = 2.0 * 1.5f64.ln();
        run.check((unit - target).abs() <= 1e-2, "czo", "indicator oscillation = 2 ln(3/2)", || format!("{unit}"));
    }
    if let Some(k) = t.kernel() {
        run.metric("tailConstant", tail_constant(k));
        let q = Cube::centered(cfg.dim, 1.0);
        let mut tails = Vec::new();
        for x in [0.0, 0.25, 0.5] {
            let mut p = [0.0; 2];
            p[0] = x;
            let v = tail_integral_fq(k, &q, &p[..cfg.dim], 1e-3)?;
            if hilbert {
                let exact = ((5.0 + 2.0 * x) / (5.0 - 2.0 * x)).ln();
                run.check((v - exact).abs() <= 1e-3, "czo", "tail integral F_Q closed form", || format!("x = {x}: {v} vs {exact}"));
            }
            tails.push((x, v));
        }
        write_series(&run.path("tail_integral.csv"), ("x", "F_Q"), &tails)?;
        run.metric("tailIntegral", tails.iter().map(|p| p.1).collect::<Vec<_>>());
    }
    Ok(run)
}

fn default_cells(dim: usize) -> usize {
    if dim == 1 {
        4096
    } else {
        256
    }
}

fn members(cfg: &ExperimentConfig, dim: usize) -> Result<Vec<CorpusMember>> {
    select(corpus(dim, cfg.seed), &cfg.corpus)
}

struct PipelineRun {
    f: GridFunction,
    assembly: GlobalAssembly,
    osc: DominationReport,
}

fn pipeline(member: &CorpusMember, t: &OperatorSpec, engine: &EngineConfig, cells: usize) -> Result<PipelineRun> {
    let grid = corpus_grid(engine.dim, cells);
    let f = member.sample(grid);
    let assembly = assemble_global(&f, t, engine, engine.rings)?;
    let osc = domination_report(t, &f, &assembly.family, BoundKind::Oscillation)?;
    Ok(PipelineRun { f, assembly, osc })
}

fn sharp_constant(run: &PipelineRun) -> Result<SharpDomination> {
    let lattices = ShiftedLatticeSet::new(run.f.grid().dim());
    let mut acc = SharpDomination {
        constant: 0.0,
        evaluated: 0,
        violations: 0,
    };
    for (fam, local) in run.assembly.families.iter().zip(&run.assembly.locals) {
        acc = acc.merge(sharp_domination(fam, local, &lattices)?);
    }
    Ok(acc)
}

/// Factor between two constants; 1 when both vanish.
fn refinement_factor(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        1.0
    } else if a == 0.0 || b == 0.0 {
        f64::INFINITY
    } else {
        a.max(b) / a.min(b)
    }
}

fn sparse_mr(cfg: &ExperimentConfig, mut run: Run) -> Result<Run> {
    let dim = cfg.dim;
    let t = OperatorSpec::from_label(&cfg.operator, dim)?;
    let engine = cfg.engine_config(dim)?;
    let cells = cfg.grid_or(default_cells(dim));
    let mut rows = Vec::new();
    let mut csv = String::from("member,achievedEta,cubes,incomplete,bestConstant,bestConstantFine,violationFraction,sharpConstant,sharpConstantFine\n");
    let (mut sharp_coarse, mut sharp_fine) = (0.0f64, 0.0f64);
    for m in members(cfg, dim)? {
        let (coarse, fine) = match (pipeline(&m, &t, &engine, cells), pipeline(&m, &t, &engine, 2 * cells)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                run.check(false, "sparse_engine", "pipeline run", || format!("{}: {e}", m.name));
                continue;
            }
        };
        let a = &coarse.assembly;
        let h = coarse.f.grid().spacing();
        let min_side = a.family.cubes().map(|q| q.side()).fold(f64::INFINITY, f64::min);
        let slack = 1.0 - (1.0 - h / min_side).powi(dim as i32);
        let eta = a.audit.achieved_eta;
        run.check(eta >= engine.target_eta - slack, "lattice", "audited sparseness", || {
            format!("{}: {eta} < {}", m.name, engine.target_eta)
        });
        for failure in &a.invariant_failures {
            run.check(false, "sparse_engine", "partition pieces", || format!("{}: {failure}", m.name));
        }
        let selection: usize = a.locals.iter().map(|l| l.selection_violations.len()).sum();
        run.check(selection == 0, "sparse_engine", "selected children ≤ 2^{-n-1}|P|", || {
            format!("{}: {selection} cubes", m.name)
        });
        let r = &coarse.osc;
        run.check(r.violation_fraction <= 0.01, "sparse_engine", "violation fraction ≤ 1%", || {
            format!("{}: {}", m.name, r.violation_fraction)
        });
        run.check(r.boundary_adjacent == r.violations.len(), "sparse_engine", "violations are boundary-adjacent", || {
            format!("{}: {} of {}", m.name, r.boundary_adjacent, r.violations.len())
        });
        let fine_c = fine.osc.best_constant;
        let factor = refinement_factor(r.best_constant, fine_c);
        run.check(r.best_constant.is_finite() && factor <= 2.0, "sparse_engine", "best constant refinement-stable", || {
            format!("{}: {} vs {fine_c}", m.name, r.best_constant)
        });
        let sc = sharp_constant(&coarse)?;
        let sf = sharp_constant(&fine)?;
        run.check(sc.violations == 0 && sf.violations == 0, "sparse_engine", "m_P^# f ≤ C M(...)", || {
            format!("{}: {} cells with a vanishing maximal function", m.name, sc.violations + sf.violations)
        });
        sharp_coarse = sharp_coarse.max(sc.constant);
        sharp_fine = sharp_fine.max(sf.constant);

        let stem = m.name.clone();
        r.write_csv(fs::File::create(run.path(&format!("{stem}_report.csv")))?)?;
        fs::write(run.path(&format!("{stem}_family.json")), a.family.to_json()? + "\n")?;
        let plot = emit_plot_data(r, coarse.f.grid(), &run.dir, &stem)?;
        for p in [plot.profile, plot.histogram] {
            run.artifacts.push(p.file_name().unwrap().to_string_lossy().into_owned());
        }
        let incomplete = a.incomplete();
        csv += &format!(
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e}\n",
            m.name,
            eta,
            a.family.len(),
            incomplete,
            r.best_constant,
            fine_c,
            r.violation_fraction,
            sc.constant,
            sf.constant
        );
        rows.push(json!({
            "member": m.name,
            "achievedEta": eta,
            "cubes": a.family.len(),
            "incomplete": incomplete,
            "bestConstant": r.best_constant,
            "bestConstantFine": fine_c,
            "violationFraction": r.violation_fraction,
            "sharpConstant": sc.constant,
            "sharpConstantFine": sf.constant,
            "tailBound": a.tail_bound,
        }));
    }
    let factor = refinement_factor(sharp_coarse, sharp_fine);
    run.check(factor <= 2.0, "sparse_engine", "sharp maximal constant refinement-stable", || {
        format!("{sharp_coarse} vs {sharp_fine}")
    });
    run.write("members.csv", csv.as_bytes())?;
    run.metric("operator", &cfg.operator);
    run.metric("cellsPerAxis", cells);
    run.metric("targetEta", engine.target_eta);
    run.metric("sharpConstant", sharp_coarse);
    run.metric("sharpConstantFine", sharp_fine);
    run.metric("members", rows);
    Ok(run)
}

/// One row of [`compare_bounds`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompareRow {
    pub member: String,
    pub osc_best_constant: f64,
    pub avg_best_constant: f64,
    /// `max osc-bound / avg-bound` over cells in `[-1/2, 1/2]^n`.
    pub interior_ratio: f64,
    /// `max osc-bound / (2 avg-bound)` over all cells.
    pub worst_same_family: f64,
}

/// Oscillation and average bounds on the same emitted family, per member.
pub fn compare_bounds(cfg: &ExperimentConfig) -> Result<Vec<CompareRow>> {
    let dim = cfg.dim;
    let t = OperatorSpec::from_label(&cfg.operator, dim)?;
    let engine = cfg.engine_config(dim)?;
    let cells = cfg.grid_or(default_cells(dim));
    let mut rows = Vec::new();
    for m in members(cfg, dim)? {
        let p = pipeline(&m, &t, &engine, cells)?;
        let avg = domination_report(&t, &p.f, &p.assembly.family, BoundKind::Average)?;
        let grid = p.f.grid();
        let mut interior = 0.0f64;
        let mut worst = 0.0f64;
        for c in 0..grid.cell_count() {
            let (o, a) = (p.osc.bound[c], avg.bound[c]);
            if a > 0.0 {
                worst = worst.max(o / (2.0 * a));
                if grid.cell_center(c)[..dim].iter().all(|x| x.abs() <= 0.5) {
                    interior = interior.max(o / a);
                }
            } else if o > 0.0 {
                worst = f64::INFINITY;
            }
        }
        rows.push(CompareRow {
            member: m.name.clone(),
            osc_best_constant: p.osc.best_constant,
            avg_best_constant: avg.best_constant,
            interior_ratio: interior,
            worst_same_family: worst,
        });
    }
    Ok(rows)
}

fn spd_compare(cfg: &ExperimentConfig, mut run: Run) -> Result<Run> {
    let rows = compare_bounds(cfg)?;
    let mut csv = String::from("member,oscBestConstant,avgBestConstant,interiorRatio\n");
    for r in &rows {
        csv += &format!("{},{:e},{:e},{:e}\n", r.member, r.osc_best_constant, r.avg_best_constant, r.interior_ratio);
        run.check(r.worst_same_family <= 1.0 + 1e-12, "sparse_engine", "osc-bound ≤ 2 avg-bound", || {
            format!("{}: ratio {}", r.member, 2.0 * r.worst_same_family)
        });
        if r.member.starts_with("plateau") {
            run.check(r.interior_ratio <= 0.2, "sparse_engine", "plateau interior ratio ≤ 0.2", || {
                format!("{}: {}", r.member, r.interior_ratio)
            });
        }
    }
    run.write("compare.csv", csv.as_bytes())?;
    run.metric("rows", &rows);
    Ok(run)
}

fn sobolev(cfg: &ExperimentConfig, mut run: Run) -> Result<Run> {
    let cells = cfg.grid_or(256);
    let smooth: Vec<CorpusMember> = members(cfg, 2)?.into_iter().filter(|m| m.c1).collect();
    let operators = ["riesz1", "sum:riesz1+diag:one", "diag:one"];
    let mut summary = Vec::new();
    let mut csv = String::from("operator,member,bestConstant,bestConstantFine,violationFraction\n");
    for label in operators {
        let t = OperatorSpec::from_label(label, 2)?;
        let (mut best, mut best_fine) = (0.0f64, 0.0f64);
        for m in &smooth {
            let coarse = sobolev_check(&t, &m.sample(corpus_grid(2, cells)))?;
            let fine = sobolev_check(&t, &m.sample(corpus_grid(2, 2 * cells)))?;
            run.check(coarse.violation_fraction <= 0.01, "sobolev", "violation fraction ≤ 1%", || {
                format!("{label} on {}: {}", m.name, coarse.violation_fraction)
            });
            if m.name == "bump-wide" {
                let stem = format!("{}_{}", label.replace([':', '+'], "-"), m.name);
                coarse.write_csv(fs::File::create(run.path(&format!("{stem}.csv")))?)?;
            }
            csv += &format!("{label},{},{:e},{:e},{:e}\n", m.name, coarse.best_constant, fine.best_constant, coarse.violation_fraction);
            best = best.max(coarse.best_constant);
            best_fine = best_fine.max(fine.best_constant);
        }
        let factor = refinement_factor(best, best_fine);
        run.check(best.is_finite() && factor <= 2.0, "sobolev", "best constant refinement-stable", || {
            format!("{label}: {best} vs {best_fine}")
        });
        summary.push(json!({"operator": label, "bestConstant": best, "bestConstantFine": best_fine}));
    }
    run.write("sobolev.csv", csv.as_bytes())?;
    run.metric("operators", summary);
    run.metric("sobolevConstantReference", 1.0 / (2.0 * std::f64::consts::PI));

    // Poincaré ratios and the dyadic sum comparison on the widest bump.
    let bump = corpus(2, cfg.seed).into_iter().find(|m| m.name == "bump-wide").expect("corpus has bump-wide");
    let mut rng = stream(cfg.seed, "sobolev", 0);
    let cubes: Vec<Cube> = (0..100)
        .map(|_| {
            let side = rng.gen_range(0.1..1.0);
            Cube::new(&[rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)], side)
        })
        .collect();
    let points: Vec<[f64; 2]> = (0..50).map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
    let lattices = ShiftedLatticeSet::new(2);
    let shifts = [0usize, 4, 8];
    let mut poincare = Vec::new();
    let mut cum = Vec::new();
    for n in [cells, 2 * cells] {
        let f = bump.sample(corpus_grid(2, n));
        let rep = poincare_check(&f, &cubes)?;
        poincare.push(rep.max_constant);
        run.metric(&format!("poincareSkipped{n}"), rep.skipped.len());
        let g = f.gradient_norm();
        let mut worst = 0.0f64;
        let mut rows = Vec::new();
        for (i, x) in points.iter().enumerate() {
            for &j in &shifts {
                let (lhs, rhs) = dyadic_riesz_bound(&g, &lattices, j, x)?;
                if rhs > 0.0 {
                    worst = worst.max(lhs / rhs);
                }
                rows.push((i as f64 * 10.0 + j as f64, if rhs > 0.0 { lhs / rhs } else { 0.0 }));
            }
        }
        write_series(&run.path(&format!("dyadic_ratio_{n}.csv")), ("pointShift", "ratio"), &rows)?;
        cum.push(worst);
    }
    let spread = (poincare[0] - poincare[1]).abs() / poincare[0].max(poincare[1]);
    run.check(spread <= 0.1, "sobolev", "Poincaré constant stable within 10%", || format!("{poincare:?}"));
    let factor = refinement_factor(cum[0], cum[1]);
    run.check(factor <= 2.0, "sobolev", "dyadic sum ratio refinement-stable", || format!("{cum:?}"));
    run.metric("poincareConstant", &poincare);
    run.metric("dyadicRatio", &cum);
    run.metric("chainProduct", poincare[0] * cum[0]);
    Ok(run)
}

fn necessity(cfg: &ExperimentConfig, mut run: Run) -> Result<Run> {
    let radii = vec![10.0, 20.0, 40.0, 80.0];
    let mut rows = Vec::new();
    let cases: [(&str, usize, bool); 5] = [
        ("hilbert", 1, true),
        ("riesz1", 2, true),
        ("riesz2", 2, true),
        ("diag:log", 1, false),
        ("diag:log", 2, false),
    ];
    for (label, dim, bounded) in cases {
        let t = OperatorSpec::from_label(label, dim)?;
        let mut probe = ProbeConfig::new(dim, radii.clone());
        if dim == 1 && cfg.dim == 1 {
            probe.cells_per_axis = cfg.grid_or(probe.cells_per_axis);
        }
        let r = t1_probe(&t, &probe)?;
        let sups = r.sup_norms();
        let name = format!("probe_{}_{dim}d.csv", label.replace(':', "-"));
        r.write_csv(fs::File::create(run.path(&name))?)?;
        if bounded {
            run.check(r.verdict == Verdict::Bounded, "czo", "T(θ_R) bounded", || format!("{label} ({dim}D): {sups:?}"));
        } else {
            let growth = sups[sups.len() - 1] - sups[0];
            let monotone = sups.windows(2).all(|w| w[1] > w[0]);
            let needed = 0.5 * (radii[radii.len() - 1] / radii[0]).ln();
            run.check(r.verdict == Verdict::Unbounded && monotone && growth >= needed, "czo", "control grows", || {
                format!("{label} ({dim}D): {sups:?}")
            });
        }
        rows.push(json!({"operator": label, "dim": dim, "supNorms": sups, "verdict": r.verdict, "control": !bounded}));
    }
    run.metric("probes", rows);
    run.metric("verdictScope", "T(1) tested against mean-zero functions: bounded modulo constants");

    let premise_radii = vec![10.0, 20.0, 40.0];
    let mut verdicts = Vec::new();
    for (label, consistent) in [("riesz1", true), ("diag:log", false)] {
        let t = OperatorSpec::from_label(label, 2)?;
        let rep = necessity_probe(&t, &ProbeConfig::new(2, premise_radii.clone()))?;
        run.check(rep.premise_holds, "sobolev", "I_1(|∇θ_R|) independent of R", || {
            format!("{:?}", rep.potential_sups)
        });
        run.check(rep.consistent == consistent, "sobolev", "necessity verdict", || {
            format!("{label}: consistent = {}", rep.consistent)
        });
        verdicts.push(json!({
            "operator": label,
            "consistent": rep.consistent,
            "potentialSups": rep.potential_sups,
            "potentialVariation": rep.potential_variation,
            "label": if consistent { "operator" } else { "control, outside the operator hypotheses" },
        }));
    }
    run.metric("necessity", verdicts);
    Ok(run)
}

/// Reads the `summary.json` files below `dir` (the directory itself or its
/// immediate subdirectories), in name order.
pub fn read_summaries(dir: &Path) -> Result<Vec<Value>> {
    let mut paths = Vec::new();
    let own = dir.join("summary.json");
    if own.is_file() {
        paths.push(own);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    for d in subdirs {
        let p = d.join("summary.json");
        if p.is_file() {
            paths.push(p);
        }
    }
    if paths.is_empty() {
        return Err(Error::config("dir", format!("no summary.json under {}", dir.display())));
    }
    paths
        .into_iter()
        .map(|p| Ok(serde_json::from_str(&fs::read_to_string(&p)?)?))
        .collect()
}

fn short(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => n.as_f64().map(|x| {
            if x.fract() == 0.0 && x.abs() < 1e9 {
                format!("{x}")
            } else {
                format!("{x:.4}")
            }
        }),
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Array(a) if a.iter().all(|x| x.is_number()) && a.len() <= 4 => {
            Some(format!("[{}]", a.iter().filter_map(short).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

/// The summary table printed by `oscdom report`.
pub fn render_report(dir: &Path) -> Result<String> {
    let mut out = format!("{:<20} {:<6} metrics\n", "suite", "status");
    for s in read_summaries(dir)? {
        let suite = s["suite"].as_str().unwrap_or("?");
        let status = if s["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
        let metrics: Vec<String> = s["metrics"]
            .as_object()
            .map(|m| m.iter().filter_map(|(k, v)| short(v).map(|v| format!("{k}={v}"))).collect())
            .unwrap_or_default();
        out += &format!("{suite:<20} {status:<6} {}\n", metrics.join(" "));
        if let Some(f) = s["failures"].as_array() {
            for line in f {
                out += &format!("{:<27} ! {}\n", "", line.as_str().unwrap_or(""));
            }
        }
    }
    Ok(out)
}
