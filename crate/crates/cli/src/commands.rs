//! The `wcm` subcommands. Each returns a JSON report plus the process exit
//! code; `main` only parses arguments and prints.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;
use wcm_core::{
    acceleration_feasible, build_generating_matrices, build_wcm, classify, compare_classifiers, required_wrench,
    shift_wcm, AgreementReport, Classification, MotionQuery, Vec3, WcmSource, Wrench, WrenchConstraintMatrix,
};

use crate::scene::{load_scene, Scene, ScenarioFile};
use crate::timing::{bench, timed, Stats};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input, or a failed computation.
    Input(anyhow::Error),
    /// The command needs a WCM but the scene is unconstrained.
    NoWcm,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::NoWcm => EXIT_INFEASIBLE,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "{e:#}"),
            Failure::NoWcm => f.write_str("no WCM exists: configuration is unconstrained"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<wcm_core::Error> for Failure {
    fn from(e: wcm_core::Error) -> Self {
        Failure::Input(e.into())
    }
}

/// Delimited text table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub exit_code: i32,
    /// Timing table for `--csv`.
    pub table: Option<Table>,
    /// Per-sample table of the scenario runner.
    pub timeline: Option<Table>,
}

impl Outcome {
    fn json(report: impl Serialize, exit_code: i32) -> Self {
        Self {
            report: serde_json::to_value(report).expect("reports serialize"),
            exit_code,
            table: None,
            timeline: None,
        }
    }
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

#[derive(Debug, Serialize)]
pub struct WcmReport {
    pub anchor: [f64; 3],
    pub witness: [f64; 3],
    /// Accumulated displacement from the anchor it was computed at.
    pub shifted_by: Option<[f64; 3]>,
    pub rows: Vec<[f64; 6]>,
}

impl WcmReport {
    pub fn of(w: &WrenchConstraintMatrix) -> Self {
        let rows = w.rows().row_iter().map(|r| core::array::from_fn(|k| r[k])).collect();
        let shifted_by = match w.source() {
            WcmSource::Computed => None,
            WcmSource::Shifted { delta } => Some(arr(delta)),
        };
        Self { anchor: arr(w.anchor()), witness: arr(w.witness()), shifted_by, rows }
    }
}

#[derive(Debug, Serialize)]
struct WrenchReport {
    force: [f64; 3],
    moment: [f64; 3],
    about: [f64; 3],
}

impl From<&Wrench> for WrenchReport {
    fn from(w: &Wrench) -> Self {
        Self { force: arr(&w.force), moment: arr(&w.moment), about: arr(&w.about) }
    }
}

fn verdict_name(cls: &Classification) -> &'static str {
    if cls.is_constrained() {
        "constrained"
    } else {
        "unconstrained"
    }
}

fn analyzed(scene: &Scene) -> Result<(Classification, Option<WrenchConstraintMatrix>), Failure> {
    let cls = classify(&scene.config, &scene.com)?;
    let wcm = cls.witness().map(|v| build_wcm(&scene.config, &scene.com, &v)).transpose()?;
    Ok((cls, wcm))
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    verdict: &'static str,
    s_star: Option<f64>,
    /// Zero when unconstrained.
    witness: [f64; 3],
    contacts: usize,
    generators: usize,
    wcm: Option<WcmReport>,
}

pub fn analyze(path: &Path) -> Result<Outcome, Failure> {
    let scene = load_scene(path)?;
    let (cls, wcm) = analyzed(&scene)?;
    let report = AnalyzeReport {
        verdict: verdict_name(&cls),
        s_star: cls.s_star(),
        witness: arr(&cls.witness().unwrap_or_else(Vec3::zeros)),
        contacts: scene.config.len(),
        generators: cls.generating().columns(),
        wcm: wcm.as_ref().map(WcmReport::of),
    };
    Ok(Outcome::json(report, EXIT_OK))
}

#[derive(Debug, Serialize)]
struct CheckReport {
    verdict: &'static str,
    feasible: bool,
    /// `min(W·w)`; only defined for a constrained scene with a given
    /// angular momentum rate.
    margin: Option<f64>,
    required: WrenchReport,
}

pub fn check(path: &Path, accel: Vec3, l_dot: Option<Vec3>) -> Result<Outcome, Failure> {
    let scene = load_scene(path)?;
    let (cls, wcm) = analyzed(&scene)?;
    let q = MotionQuery::new(accel, l_dot);
    let feasible = acceleration_feasible(&cls, wcm.as_ref(), &scene.body, &q, &scene.com)?;
    let required = required_wrench(&scene.body, &q, &scene.com);
    let margin = match (&wcm, l_dot) {
        (Some(w), Some(_)) => Some(w.margin(&required)?),
        _ => None,
    };
    let report = CheckReport { verdict: verdict_name(&cls), feasible, margin, required: (&required).into() };
    Ok(Outcome::json(report, if feasible { EXIT_OK } else { EXIT_INFEASIBLE }))
}

#[derive(Debug, Serialize)]
struct Agreement {
    samples: usize,
    agree: usize,
    disagree: usize,
    boundary_excluded: usize,
}

impl From<AgreementReport> for Agreement {
    fn from(r: AgreementReport) -> Self {
        Self {
            samples: r.total(),
            agree: r.agree_feasible + r.agree_infeasible,
            disagree: r.disagree,
            boundary_excluded: r.boundary_excluded,
        }
    }
}

#[derive(Debug, Serialize)]
struct ShiftReport {
    delta: [f64; 3],
    original: WcmReport,
    shifted: WcmReport,
    rebuild_us: Stats,
    shift_us: Stats,
    agreement: Agreement,
}

pub struct ShiftOptions {
    pub samples: usize,
    pub seed: u64,
    pub reps: usize,
}

pub fn shift(path: &Path, delta: Vec3, opts: &ShiftOptions) -> Result<Outcome, Failure> {
    let scene = load_scene(path)?;
    let (cls, wcm) = analyzed(&scene)?;
    let (Some(v), Some(original)) = (cls.witness(), wcm) else {
        return Err(Failure::NoWcm);
    };
    let b = scene.com + delta;
    let rebuilt = build_wcm(&scene.config, &b, &v)?;
    let shifted = shift_wcm(&original, &delta);
    let reps = opts.reps.max(1);
    let rebuild_us = Stats::of(&bench(reps, |_| build_wcm(&scene.config, &b, &v)));
    let shift_us = Stats::of(&bench(reps, |_| shift_wcm(&original, &delta)));
    let gen_b = build_generating_matrices(&scene.config, &b);
    let agreement = compare_classifiers(&gen_b, &shifted, &rebuilt, opts.samples, opts.seed)?;

    let mut table = Table::new(&["operation", "reps", "median_us", "mean_us", "p95_us"]);
    for (name, s) in [("rebuild", rebuild_us), ("shift", shift_us)] {
        table.rows.push(vec![
            name.into(),
            s.reps.to_string(),
            s.median_us.to_string(),
            s.mean_us.to_string(),
            s.p95_us.to_string(),
        ]);
    }
    let report = ShiftReport {
        delta: arr(&delta),
        original: WcmReport::of(&original),
        shifted: WcmReport::of(&shifted),
        rebuild_us,
        shift_us,
        agreement: agreement.into(),
    };
    let mut out = Outcome::json(report, EXIT_OK);
    out.table = Some(table);
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub contacts: usize,
    pub verdict: &'static str,
    pub classify_us: f64,
    pub build_us: Option<f64>,
    pub mean_shift_us: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SampleResult {
    pub phase: String,
    pub t: f64,
    pub com: [f64; 3],
    pub feasible: bool,
    pub margin: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ScenarioReport {
    phases: Vec<PhaseTiming>,
    timeline: Vec<SampleResult>,
    all_feasible: bool,
}

/// Per phase: one classification, one WCM build if constrained, then a shift
/// and a feasibility check per trajectory sample.
pub fn scenario(path: &Path) -> Result<Outcome, Failure> {
    let phases = ScenarioFile::load(path)?;
    let mut timings = Vec::with_capacity(phases.len());
    let mut timeline = Vec::new();
    for phase in &phases {
        let scene = &phase.scene;
        let (cls, classify_us) = timed(|| classify(&scene.config, &scene.com));
        let cls = cls?;
        let (wcm, build_us) = match cls.witness() {
            Some(v) => {
                let (w, us) = timed(|| build_wcm(&scene.config, &scene.com, &v));
                (Some(w?), Some(us))
            }
            None => (None, None),
        };
        let mut shift_total = 0.0;
        for s in &phase.samples {
            let com = Vec3::new(s.com[0], s.com[1], s.com[2]);
            let (shifted, us) = timed(|| wcm.as_ref().map(|w| shift_wcm(w, &(com - scene.com))));
            shift_total += us;
            let l_dot = s.l_dot.map(|l| Vec3::new(l[0], l[1], l[2]));
            let q = MotionQuery::new(Vec3::new(s.accel[0], s.accel[1], s.accel[2]), l_dot);
            let feasible = acceleration_feasible(&cls, shifted.as_ref(), &scene.body, &q, &com)?;
            let margin = match (&shifted, l_dot) {
                (Some(w), Some(_)) => Some(w.margin(&required_wrench(&scene.body, &q, &com))?),
                _ => None,
            };
            timeline.push(SampleResult { phase: phase.name.clone(), t: s.t, com: s.com, feasible, margin });
        }
        let mean_shift_us = (wcm.is_some() && !phase.samples.is_empty()).then(|| shift_total / phase.samples.len() as f64);
        timings.push(PhaseTiming {
            phase: phase.name.clone(),
            contacts: scene.config.len(),
            verdict: verdict_name(&cls),
            classify_us,
            build_us,
            mean_shift_us,
        });
    }

    let mut table = Table::new(&["phase", "contacts", "verdict", "classify_us", "build_us", "mean_shift_us"]);
    for p in &timings {
        table.rows.push(vec![
            p.phase.clone(),
            p.contacts.to_string(),
            p.verdict.into(),
            p.classify_us.to_string(),
            opt(p.build_us),
            opt(p.mean_shift_us),
        ]);
    }
    let mut samples = Table::new(&["phase", "t", "com_x", "com_y", "com_z", "feasible", "margin"]);
    for s in &timeline {
        samples.rows.push(vec![
            s.phase.clone(),
            s.t.to_string(),
            s.com[0].to_string(),
            s.com[1].to_string(),
            s.com[2].to_string(),
            s.feasible.to_string(),
            opt(s.margin),
        ]);
    }
    let all_feasible = timeline.iter().all(|s| s.feasible);
    let report = ScenarioReport { phases: timings, timeline, all_feasible };
    let mut out = Outcome::json(report, if all_feasible { EXIT_OK } else { EXIT_INFEASIBLE });
    out.table = Some(table);
    out.timeline = Some(samples);
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub operation: &'static str,
    #[serde(flatten)]
    pub stats: Stats,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    verdict: &'static str,
    contacts: usize,
    seed: u64,
    timings: Vec<BenchRow>,
}

/// A displacement drawn uniformly from the ball of radius `radius`.
pub fn random_delta(rng: &mut ChaCha8Rng, radius: f64) -> Vec3 {
    loop {
        let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if d.norm_squared() <= 1.0 {
            return d * radius;
        }
    }
}

pub fn bench_scene(path: &Path, reps: usize, seed: u64) -> Result<Outcome, Failure> {
    if reps == 0 {
        return Err(Failure::Input(anyhow::anyhow!("--reps must be at least 1")));
    }
    let scene = load_scene(path)?;
    let cls = classify(&scene.config, &scene.com)?;
    let mut rows = vec![BenchRow {
        operation: "classify",
        stats: Stats::of(&bench(reps, |_| classify(&scene.config, &scene.com))),
    }];
    if let Some(v) = cls.witness() {
        let wcm = build_wcm(&scene.config, &scene.com, &v)?;
        rows.push(BenchRow {
            operation: "build_wcm",
            stats: Stats::of(&bench(reps, |_| build_wcm(&scene.config, &scene.com, &v))),
        });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let deltas: Vec<Vec3> = (0..reps + crate::timing::WARMUP).map(|_| random_delta(&mut rng, 0.3)).collect();
        rows.push(BenchRow { operation: "shift_wcm", stats: Stats::of(&bench(reps, |i| shift_wcm(&wcm, &deltas[i]))) });
    }
    let mut table = Table::new(&["operation", "reps", "median_us", "mean_us", "p95_us"]);
    for r in &rows {
        table.rows.push(vec![
            r.operation.into(),
            r.stats.reps.to_string(),
            r.stats.median_us.to_string(),
            r.stats.mean_us.to_string(),
            r.stats.p95_us.to_string(),
        ]);
    }
    let report = BenchReport { verdict: verdict_name(&cls), contacts: scene.config.len(), seed, timings: rows };
    let mut out = Outcome::json(report, EXIT_OK);
    out.table = Some(table);
    Ok(out)
}
