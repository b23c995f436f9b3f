//! Run orchestration and on-disk layout.
//!
//! ```text
//! OUT/manifest.json        RunManifest, written last
//! OUT/config.json          the RunConfig as executed
//! OUT/fields/*.bin         little-endian f64 values, x1 fastest, then x2, then t
//! OUT/fields/*.json        grid header of the matching .bin
//! OUT/reports/*.json|csv   solve summaries, beta-Cauchy table, estimates, verdicts
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::berman::{
    continuation_solve, extract_envelope, BranchFailure, CauchyEntry, ContinuationSchedule,
    NewtonParams, SolveSummary,
};
use crate::error::{Error, Result};
use crate::field::io::write_field;
use crate::field::{Field, ProductGrid};
use crate::harness::compare::{oracle_compare, CompareReport};
use crate::harness::estimates::{
    estimate_scan, EstimateScan, EstimateVerdict, QVariant, DEFAULT_LADDER,
};
use crate::model::{build_problem, ModelParams, Preset, Problem};
use crate::obstacle::solve_obstacle;
use crate::oracle::{geodesic_from_fn, grid_t_levels};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,
    /// `[nx1, nx2, nt]`.
    pub grid: [usize; 3],
    /// Node `i` at `(i + 1/2) / n` instead of `i / n`.
    pub offset: bool,
    /// The first `eps` is `2^-eps_first`.
    pub eps_first: i32,
    pub eps_levels: usize,
    /// `beta` runs over `2^beta_min ..= 2^beta_max`.
    pub beta_min: i32,
    pub beta_max: i32,
    pub model: ModelParams,
    pub newton: NewtonParams,
    pub b_ladder: Vec<f64>,
    pub q_variant: QVariant,
    /// Oversampling of the reference geodesic for `x1`-only presets.
    pub oracle_refine: usize,
    /// `false` stops after the envelope (the `solve` subcommand).
    pub scan: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: "smooth".into(),
            grid: [64, 64, 33],
            offset: true,
            eps_first: 5,
            eps_levels: 2,
            beta_min: 0,
            beta_max: 14,
            model: ModelParams::default(),
            newton: NewtonParams::default(),
            b_ladder: DEFAULT_LADDER.to_vec(),
            q_variant: QVariant::default(),
            oracle_refine: 16,
            scan: true,
        }
    }
}

impl RunConfig {
    pub fn preset(&self) -> Result<Preset> {
        self.preset.parse()
    }

    pub fn product_grid(&self) -> Result<ProductGrid> {
        ProductGrid::new(self.grid[0], self.grid[1], self.grid[2], self.offset)
    }

    pub fn schedule(&self) -> ContinuationSchedule {
        let mut s = ContinuationSchedule::powers_of_two(
            self.eps_first,
            self.eps_levels,
            self.beta_min,
            self.beta_max,
        );
        s.newton = self.newton;
        s
    }

    pub fn build(&self) -> Result<Problem> {
        build_problem(
            self.preset()?,
            self.product_grid()?,
            &self.schedule().eps_list,
            self.model,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Complete,
    Incomplete,
}

/// One converged solve as persisted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveRecord {
    pub field: String,
    #[serde(flatten)]
    pub summary: SolveSummary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: RunStatus,
    pub preset: String,
    pub grid: [usize; 3],
    pub schedule: ContinuationSchedule,
    /// Relative path to SHA-256 of every emitted file except the manifest.
    pub files: BTreeMap<String, String>,
    pub tool_version: String,
    pub wall_times: BTreeMap<String, f64>,
    pub violations: Vec<String>,
    pub failures: Vec<BranchFailure>,
    pub cauchy: Vec<CauchyEntry>,
    /// `None` when only one `beta` level converged at the smallest `eps`.
    pub envelope_uncertainty: Option<f64>,
    pub verdicts: Vec<EstimateVerdict>,
    pub oracle: Option<CompareReport>,
}

impl RunManifest {
    /// Whether the run should exit with status zero.
    pub fn ok(&self) -> bool {
        self.status == RunStatus::Complete && self.violations.is_empty()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

struct Out {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl Out {
    fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root.join("fields"))?;
        std::fs::create_dir_all(root.join("reports"))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    fn record(&mut self, rel: &str) -> Result<()> {
        let bytes = std::fs::read(self.root.join(rel))?;
        self.files.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    fn field(&mut self, name: &str, f: &Field) -> Result<String> {
        let rel = format!("fields/{name}.bin");
        write_field(f, &self.root.join(&rel))?;
        self.record(&rel)?;
        self.record(&format!("fields/{name}.json"))?;
        Ok(rel)
    }

    fn json(&mut self, rel: &str, value: &impl Serialize) -> Result<()> {
        std::fs::write(self.root.join(rel), serde_json::to_vec_pretty(value)?)?;
        self.record(rel)
    }

    fn csv<T: Serialize>(&mut self, rel: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.root.join(rel))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        drop(w);
        self.record(rel)
    }
}

/// Flat form of an [`EstimateVerdict`] for CSV output.
#[derive(Clone, Debug, Serialize)]
pub struct VerdictRow {
    pub estimate: String,
    pub b: f64,
    pub verdict: &'static str,
    pub spread: f64,
    pub beta_exponent: Option<f64>,
    pub eps_exponent: Option<f64>,
}

pub fn verdict_rows(scan: &EstimateScan) -> Vec<VerdictRow> {
    use crate::harness::estimates::Verdict;
    scan.verdicts
        .iter()
        .map(|v| {
            let estimate = serde_json::to_value(v.estimate)
                .ok()
                .and_then(|x| x.as_str().map(str::to_string))
                .unwrap_or_default();
            match v.verdict {
                Verdict::Uniform { spread } => VerdictRow {
                    estimate,
                    b: v.b,
                    verdict: "UNIFORM",
                    spread,
                    beta_exponent: None,
                    eps_exponent: None,
                },
                Verdict::Growth {
                    spread,
                    beta_exponent,
                    eps_exponent,
                } => VerdictRow {
                    estimate,
                    b: v.b,
                    verdict: "GROWTH",
                    spread,
                    beta_exponent: Some(beta_exponent),
                    eps_exponent: Some(eps_exponent),
                },
            }
        })
        .collect()
}

/// Reference geodesic for presets whose endpoints depend on `x1` only.
pub fn preset_oracle(preset: Preset, grid: ProductGrid, refine: usize) -> Result<Option<Field>> {
    use std::f64::consts::PI;
    let ts = grid_t_levels(&grid);
    let field = match preset {
        Preset::Constants { c } => geodesic_from_fn(grid, |_| 0.0, move |_| c, &ts, refine)?,
        Preset::Smooth => geodesic_from_fn(
            grid,
            |_| 0.0,
            |x| crate::model::SMOOTH_AMPLITUDE * (2.0 * PI * x).cos(),
            &ts,
            refine,
        )?,
        _ => return Ok(None),
    };
    Ok(Some(field))
}

/// build, obstacle, continuation, extract, scan, compare; everything is
/// persisted under `out` and the manifest is written last. A failed branch
/// or a missing second `beta` level marks the run INCOMPLETE; completed
/// artifacts are kept.
pub fn run(config: &RunConfig, out: &Path, mut log: impl FnMut(&str)) -> Result<RunManifest> {
    let start = Instant::now();
    let mut times = BTreeMap::new();
    let mut lap = {
        let mut last = Instant::now();
        move |name: &str, times: &mut BTreeMap<String, f64>| {
            times.insert(name.to_string(), last.elapsed().as_secs_f64());
            last = Instant::now();
        }
    };
    let schedule = config.schedule();
    schedule.validate()?;
    let mut o = Out::new(out)?;
    o.json("config.json", config)?;

    let problem = config.build()?;
    let grid = *problem.grid();
    for (i, level) in problem.family.levels.iter().enumerate() {
        o.field(&format!("phi_eps_{i}"), &level.phi_eps)?;
    }
    let keys: Vec<_> = problem.family.levels.iter().map(|l| &l.key).collect();
    o.json("reports/key_positivity.json", &keys)?;
    lap("build", &mut times);

    let mut obstacles = BTreeMap::new();
    for (i, &eps) in schedule.eps_list.iter().enumerate() {
        let h = solve_obstacle(&problem.family, &problem.base, eps)?;
        o.field(&format!("obstacle_{i}"), &h.h)?;
        obstacles.insert(i, h);
    }
    lap("obstacle", &mut times);

    let eps_index = |eps: f64| {
        schedule
            .eps_list
            .iter()
            .position(|&e| e == eps)
            .unwrap_or(0)
    };
    let beta_index = |beta: f64| {
        schedule
            .beta_list
            .iter()
            .position(|&b| b == beta)
            .unwrap_or(0)
    };
    let mut records = Vec::new();
    let mut write_err: Option<Error> = None;
    let result = continuation_solve(
        &schedule,
        &problem.base,
        &problem.family,
        |eps| Ok(obstacles[&eps_index(eps)].clone()),
        |rep| {
            let name = format!("u_{}_{}", eps_index(rep.eps), beta_index(rep.beta));
            match o.field(&name, &rep.u) {
                Ok(field) => records.push(SolveRecord {
                    field,
                    summary: rep.summary(),
                }),
                Err(e) => {
                    write_err.get_or_insert(e);
                }
            }
            log(&format!(
                "eps = {:e}, beta = {:e}: {} Newton steps, residual {:.2e}",
                rep.eps, rep.beta, rep.newton_iters, rep.residual_sup
            ));
        },
    )?;
    if let Some(e) = write_err {
        return Err(e);
    }
    lap("continuation", &mut times);
    o.json("reports/solves.json", &records)?;
    let summaries: Vec<SolveSummary> = records.iter().map(|r| r.summary.clone()).collect();
    o.csv("reports/solves.csv", &summaries)?;
    o.csv("reports/cauchy.csv", &result.cauchy)?;
    o.json("reports/failures.json", &result.failures)?;

    let mut status = RunStatus::Complete;
    let mut violations = Vec::new();
    for f in &result.failures {
        status = RunStatus::Incomplete;
        log(&format!(
            "branch eps = {:e} stopped at beta = {:e}: {}",
            f.eps, f.beta, f.message
        ));
    }
    for r in &result.reports {
        if !r.sandwich_ok {
            violations.push(format!(
                "sandwich violated at eps = {:e}, beta = {:e}: below phi by {:.3e}, above h by {:.3e}",
                r.eps, r.beta, r.below_phi, r.above_h
            ));
        }
        if !r.trace_bound_ok {
            violations.push(format!(
                "trace bound violated at eps = {:e}, beta = {:e}: min {:.6}",
                r.eps, r.beta, r.trace_min
            ));
        }
    }

    let mut envelope_uncertainty = None;
    let mut envelope = None;
    if result.reports.is_empty() {
        status = RunStatus::Incomplete;
    } else {
        let env = extract_envelope(&result.reports)?;
        o.field("envelope", &env.v)?;
        if env.flagged {
            status = RunStatus::Incomplete;
            log("only one beta level at the smallest eps; envelope uncertainty is unbounded");
        } else {
            envelope_uncertainty = Some(env.uncertainty);
        }
        envelope = Some(env);
    }
    lap("extract", &mut times);

    let mut verdicts = Vec::new();
    let mut oracle = None;
    if config.scan {
        let clean: Vec<_> = result
            .reports
            .iter()
            .filter(|r| r.converged && r.sandwich_ok && r.trace_bound_ok)
            .cloned()
            .collect();
        if !clean.is_empty() {
            let scan = estimate_scan(&clean, &problem.model, &config.b_ladder, config.q_variant)?;
            for r in &scan.reports {
                if !(r.weighted_grad.is_finite()
                    && r.q_sup.is_finite()
                    && r.weighted_hess_boundary.is_finite()
                    && r.weighted_lap.is_finite()
                    && r.weighted_hess.is_finite())
                {
                    violations.push(format!(
                        "non-finite estimate at eps = {:e}, beta = {:e}, B = {}",
                        r.eps, r.beta, r.b_used
                    ));
                }
            }
            o.csv("reports/estimates.csv", &scan.reports)?;
            o.csv("reports/verdicts.csv", &verdict_rows(&scan))?;
            verdicts = scan.verdicts;
        }
        lap("scan", &mut times);
        if let (Some(env), Some(reference)) = (
            &envelope,
            preset_oracle(problem.preset, grid, config.oracle_refine)?,
        ) {
            o.field("oracle", &reference)?;
            let cmp = oracle_compare(&env.v, &reference)?;
            o.json("reports/oracle_compare.json", &cmp)?;
            o.csv("reports/oracle_compare.csv", std::slice::from_ref(&cmp))?;
            oracle = Some(cmp);
        }
        lap("compare", &mut times);
    }
    times.insert("total".into(), start.elapsed().as_secs_f64());

    let manifest = RunManifest {
        status,
        preset: problem.preset.name().to_string(),
        grid: config.grid,
        schedule,
        files: o.files.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_times: times,
        violations,
        failures: result.failures,
        cauchy: result.cauchy,
        envelope_uncertainty,
        verdicts,
        oracle,
    };
    std::fs::write(
        out.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

/// Recomputes every hash listed in the manifest under `dir`; returns the
/// paths that no longer match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("manifest.json"))?)?;
    let files = manifest
        .get("files")
        .and_then(|f| f.as_object())
        .ok_or_else(|| Error::InvalidInput("manifest has no file table".into()))?;
    let mut bad = Vec::new();
    for (rel, hash) in files {
        let ok = std::fs::read(dir.join(rel))
            .map(|b| Some(sha256_hex(&b).as_str()) == hash.as_str())
            .unwrap_or(false);
        if !ok {
            bad.push(rel.clone());
        }
    }
    Ok(bad)
}
