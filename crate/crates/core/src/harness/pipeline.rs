//! File-based experiment pipeline behind the CLI.
//!
//! Layout of an output directory:
//! `config.json`, `instances.jsonl` (one instance per line),
//! `trajectories/<id>.jsonl`, `references.json`, `runs.csv`,
//! `profile.csv`, `profile.json` and `profile_D<threshold>.svg`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_method, Method};
use crate::causality::CausalityError;
use crate::envs::{euchre_model, goofspiel_model, spades_model, GameKind, GoofspielConfig, Toy, ToyConfig};
use crate::harness::{
    derive_seed, epsilon_metrics, exact_reference, generate_losing_trajectories, lower_bound_reference,
    performance_profile, poison_and_generate, profile_svg, step_grid, GenerationLimits, HarnessError, Poisoned,
    ProfileTable, RefMode, RunCurve, POSTERIOR, RUN, TRAJ,
};
use crate::mcts::{estimate_under_uncertainty, MctsParams};
use crate::scalar::{Exact, Scalar};
use crate::scm::{Context, DecPomdpModel, SlotKey, Trajectory};
use crate::search_tree::{Instance, SearchOutcome, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Searches run on the generating context; exact references.
    KnownContext,
    /// Searches average over posterior contexts; exact references on the
    /// generating context.
    UnknownContext,
    /// Poisoned instances; references restricted to the poisoned slots.
    LowerBound,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "known-context" | "known" => Ok(Mode::KnownContext),
            "unknown-context" | "unknown" => Ok(Mode::UnknownContext),
            "lower-bound" | "lower" => Ok(Mode::LowerBound),
            _ => Err(format!("unknown mode {s:?}; valid modes: known-context, unknown-context, lower-bound")),
        }
    }
}

impl Mode {
    fn ref_mode(self) -> RefMode {
        match self {
            Mode::LowerBound => RefMode::LowerBound,
            _ => RefMode::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameKind,
    pub hand_size: usize,
    pub trajectories: usize,
    pub runs: usize,
    pub methods: Vec<Method>,
    pub budget: u64,
    pub thresholds: Vec<f64>,
    /// Posterior samples per trajectory in unknown-context mode.
    pub samples: usize,
    pub mode: Mode,
    pub out: PathBuf,
    pub seed: u64,
    pub max_size: usize,
    pub c: f64,
    pub b: f64,
    /// Goofspiel only: opponents always play their greedy card.
    pub deterministic_opponents: bool,
    pub max_attempts: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            game: GameKind::Euchre,
            hand_size: 5,
            trajectories: 50,
            runs: 10,
            methods: vec![Method::RaMcts, Method::Random, Method::BfDt, Method::BfSt],
            budget: 100_000,
            thresholds: vec![0.0, 0.1, 0.25],
            samples: 10,
            mode: Mode::KnownContext,
            out: PathBuf::from("out"),
            seed: 0,
            max_size: 4,
            c: 2.0,
            b: 0.5,
            deterministic_opponents: false,
            max_attempts: 1_000_000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.hand_size == 0 || self.trajectories == 0 || self.runs == 0 || self.samples == 0 {
            return bad("hand size, trajectories, runs and samples must be positive");
        }
        if self.methods.is_empty() {
            return bad("no methods given");
        }
        if self.max_size == 0 || self.budget == 0 || self.max_attempts == 0 {
            return bad("max size, budget and attempt cap must be positive");
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return bad("thresholds must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.b) || !(self.c >= 0.0) {
            return bad("b must lie in [0, 1] and c must be non-negative");
        }
        if self.game == GameKind::Goofspiel && self.hand_size > 13 {
            return bad("goofspiel hand size is at most 13");
        }
        if matches!(self.game, GameKind::Euchre | GameKind::Spades) && self.hand_size > 13 {
            return bad("hand size is at most 13");
        }
        Ok(())
    }

    pub fn params(&self, seed: u64) -> MctsParams {
        MctsParams { c: self.c, b: self.b, max_size: self.max_size, budget: self.budget, seed }
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}

/// Run `$body` with `$m` bound to the configured model.
macro_rules! with_model {
    ($cfg:expr, |$m:ident| $body:expr) => {{
        let cfg: &ExperimentConfig = $cfg;
        match cfg.game {
            GameKind::Toy => {
                let $m = Toy::<f64>::new(ToyConfig { horizon: cfg.hand_size, ..ToyConfig::default() });
                $body
            }
            GameKind::Goofspiel => {
                let mut g = GoofspielConfig::new(cfg.hand_size);
                g.stochastic_opponents = !cfg.deterministic_opponents;
                let $m = goofspiel_model::<f64>(g)?;
                $body
            }
            GameKind::Euchre => {
                let $m = euchre_model::<f64>(cfg.hand_size)?;
                $body
            }
            GameKind::Spades => {
                let $m = spades_model::<f64>(cfg.hand_size)?;
                $body
            }
        }
    }};
}

/// One generated instance, enough to rebuild its causal setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: usize,
    pub context_seed: u64,
    /// Per agent, the ordinals of its poisoned decisions (lower-bound mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisoned_decisions: Option<Vec<Vec<usize>>>,
    /// `(agent, t)` keys of the poisoned decisions in the factual episode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisoned_slots: Option<Vec<(usize, usize)>>,
    pub agents_score: i64,
    pub opponents_score: i64,
}

impl InstanceRecord {
    fn slot_set(&self) -> BTreeSet<SlotKey> {
        self.poisoned_slots.iter().flatten().map(|&(a, t)| SlotKey::new(a, t)).collect()
    }
}

fn write_trajectory<M: DecPomdpModel>(dir: &Path, id: usize, traj: &Trajectory<M>) -> Result<(), HarnessError> {
    let mut f = BufWriter::new(File::create(dir.join(format!("{id}.jsonl")))?);
    traj.write_jsonl(&mut f)?;
    f.flush()?;
    Ok(())
}

/// Generate the configured losing (or poisoned) instances and write them
/// with the configuration.
pub fn gen(cfg: &ExperimentConfig) -> Result<Vec<InstanceRecord>, HarnessError> {
    cfg.validate()?;
    let dir = &cfg.out;
    let tdir = dir.join("trajectories");
    fs::create_dir_all(&tdir)?;
    let records: Vec<InstanceRecord> = with_model!(cfg, |model| {
        match cfg.mode {
            Mode::LowerBound => {
                let mut out = Vec::new();
                for id in 0..cfg.trajectories {
                    let inst = poison_and_generate(&model, derive_seed(cfg.seed, &[TRAJ, id as u64]), cfg.max_attempts)?;
                    write_trajectory(&tdir, id, &inst.trajectory)?;
                    let o = *inst.trajectory.outcome();
                    out.push(InstanceRecord {
                        id,
                        context_seed: inst.context.seed(),
                        poisoned_decisions: Some(inst.model.poisoned.iter().map(|s| s.iter().copied().collect()).collect()),
                        poisoned_slots: Some(inst.slots.iter().map(|k| (k.agent, k.t)).collect()),
                        agents_score: o.agents,
                        opponents_score: o.opponents,
                    });
                }
                out
            }
            _ => {
                let limits = GenerationLimits { max_attempts: cfg.max_attempts };
                let found = generate_losing_trajectories(&model, cfg.trajectories, cfg.seed, limits)?;
                let mut out = Vec::new();
                for (id, (traj, ctx)) in found.iter().enumerate() {
                    write_trajectory(&tdir, id, traj)?;
                    out.push(InstanceRecord {
                        id,
                        context_seed: ctx.seed(),
                        poisoned_decisions: None,
                        poisoned_slots: None,
                        agents_score: traj.outcome().agents,
                        opponents_score: traj.outcome().opponents,
                    });
                }
                out
            }
        }
    });
    cfg.save(&dir.join("config.json"))?;
    let mut f = BufWriter::new(File::create(dir.join("instances.jsonl"))?);
    for r in &records {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    f.flush()?;
    Ok(records)
}

pub fn load_instances(dir: &Path) -> Result<Vec<InstanceRecord>, HarnessError> {
    let f = BufReader::new(File::open(dir.join("instances.jsonl"))?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ReferenceRecord {
    id: usize,
    mode: RefMode,
    /// Exact degrees as `m/k` strings.
    degrees: Vec<String>,
}

fn parse_degrees(r: &ReferenceRecord) -> Result<Vec<Exact>, HarnessError> {
    r.degrees
        .iter()
        .map(|d| d.parse::<Exact>().map_err(|_| HarnessError::Config(format!("bad degree {d:?} in references"))))
        .collect()
}

/// Rebuild the setting of `rec` and hand it to `f` as an instance.
fn with_instance<M, T>(
    model: &M,
    cfg: &ExperimentConfig,
    rec: &InstanceRecord,
    f: impl FnOnce(&dyn InstanceJob) -> Result<T, HarnessError>,
) -> Result<T, HarnessError>
where
    M: DecPomdpModel<Prob = f64> + Clone,
{
    let context = Context::from_seed(rec.context_seed);
    match (&rec.poisoned_decisions, cfg.mode) {
        (Some(p), _) => {
            let pm = Poisoned::new(model.clone(), p.iter().map(|s| s.iter().copied().collect()).collect());
            f(&Job { model: &pm, context: &context, event: pm.outcome_event(), rec, cfg })
        }
        (None, Mode::LowerBound) => Err(HarnessError::Config(format!("instance {} has no poisoned slots", rec.id))),
        (None, _) => f(&Job { model, context: &context, event: model.outcome_event(), rec, cfg }),
    }
}

/// Type-erased access to one instance's searches.
trait InstanceJob: Sync {
    fn reference(&self) -> Result<Vec<Exact>, HarnessError>;
    fn search(&self, method: Method, seed: u64) -> Result<Vec<(u64, Vec<Exact>)>, HarnessError>;
}

struct Job<'a, M: DecPomdpModel> {
    model: &'a M,
    context: &'a Context<f64>,
    event: crate::causality::Event<M>,
    rec: &'a InstanceRecord,
    cfg: &'a ExperimentConfig,
}

fn checkpoints(trace: &Trace) -> Vec<(u64, Vec<Exact>)> {
    trace.points.iter().map(|p| (p.steps, p.degrees.clone())).collect()
}

impl<M: DecPomdpModel<Prob = f64>> InstanceJob for Job<'_, M> {
    fn reference(&self) -> Result<Vec<Exact>, HarnessError> {
        let instance = Instance::new(self.model, self.context, &self.event)?;
        let a = match self.cfg.mode {
            Mode::LowerBound => lower_bound_reference(&instance, &self.rec.slot_set(), self.cfg.max_size)?,
            _ => exact_reference(&instance, self.cfg.max_size)?,
        };
        Ok(a.degrees)
    }

    fn search(&self, method: Method, seed: u64) -> Result<Vec<(u64, Vec<Exact>)>, HarnessError> {
        let params = self.cfg.params(seed);
        if self.cfg.mode != Mode::UnknownContext {
            let instance = Instance::new(self.model, self.context, &self.event)?;
            return Ok(checkpoints(&run_method(method, &instance, params)?.trace));
        }
        let observed = Instance::new(self.model, self.context, &self.event)?.factual;
        let outcomes: Vec<SearchOutcome> = if method == Method::RaMcts {
            estimate_under_uncertainty::<M, f64>(self.model, &observed, &self.event, self.cfg.samples, params)?.samples
        } else {
            (0..self.cfg.samples)
                .into_par_iter()
                .map(|m| {
                    let s = derive_seed(seed, &[POSTERIOR, m as u64]);
                    let ctx = crate::scm::posterior_sample_context(self.model, &observed, s)?;
                    let instance = Instance::new(self.model, &ctx, &self.event)?;
                    Ok(run_method(method, &instance, MctsParams { seed: s, ..params })?)
                })
                .collect::<Result<_, CausalityError>>()?
        };
        Ok(average_traces(&outcomes, self.model.num_agents()))
    }
}

/// Pointwise mean of the sample traces, at every step where one changes.
pub(crate) fn average_traces(outcomes: &[SearchOutcome], n: usize) -> Vec<(u64, Vec<Exact>)> {
    let steps: BTreeSet<u64> = outcomes.iter().flat_map(|o| o.trace.points.iter().map(|p| p.steps)).collect();
    let m = Exact::from_integer(outcomes.len() as i64);
    steps
        .into_iter()
        .map(|s| {
            let mut mean = vec![Exact::from_integer(0); n];
            for o in outcomes {
                for (acc, d) in mean.iter_mut().zip(o.trace.at(s, n)) {
                    *acc += d;
                }
            }
            (s, mean.into_iter().map(|d| d / m).collect())
        })
        .collect()
}

/// Compute and write the reference assignment of every instance.
pub fn oracle(cfg: &ExperimentConfig) -> Result<BTreeMap<usize, Vec<Exact>>, HarnessError> {
    cfg.validate()?;
    let records = load_instances(&cfg.out)?;
    let refs: Vec<(usize, Vec<Exact>)> = with_model!(cfg, |model| {
        records
            .par_iter()
            .map(|rec| Ok((rec.id, with_instance(&model, cfg, rec, |job| job.reference())?)))
            .collect::<Result<Vec<_>, HarnessError>>()?
    });
    let out: Vec<ReferenceRecord> = refs
        .iter()
        .map(|(id, d)| ReferenceRecord { id: *id, mode: cfg.mode.ref_mode(), degrees: d.iter().map(|x| x.to_string()).collect() })
        .collect();
    let mut f = BufWriter::new(File::create(cfg.out.join("references.json"))?);
    serde_json::to_writer_pretty(&mut f, &out)?;
    writeln!(f)?;
    f.flush()?;
    Ok(refs.into_iter().collect())
}

fn load_references(cfg: &ExperimentConfig) -> Result<Option<BTreeMap<usize, Vec<Exact>>>, HarnessError> {
    let path = cfg.out.join("references.json");
    if !path.exists() {
        return Ok(None);
    }
    let recs: Vec<ReferenceRecord> = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if recs.iter().any(|r| r.mode != cfg.mode.ref_mode()) {
        return Ok(None);
    }
    Ok(Some(recs.iter().map(|r| Ok((r.id, parse_degrees(r)?))).collect::<Result<_, HarnessError>>()?))
}

/// Error of a run at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPoint {
    pub steps: u64,
    pub eps: Exact,
    pub degrees: Vec<Exact>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub trajectory_id: usize,
    pub method: Method,
    pub seed: u64,
    pub reference: Vec<Exact>,
    /// Starts at step 0 with the empty assignment.
    pub points: Vec<RunPoint>,
}

impl RunRecord {
    pub fn final_point(&self) -> &RunPoint {
        self.points.last().expect("a run has at least its initial point")
    }

    pub fn curve(&self) -> RunCurve {
        RunCurve {
            trajectory_id: self.trajectory_id,
            method: self.method.name().into(),
            seed: self.seed,
            points: self.points.iter().map(|p| (p.steps, p.eps.to_f64())).collect(),
        }
    }
}

fn make_record(
    rec: &InstanceRecord,
    method: Method,
    seed: u64,
    reference: &[Exact],
    mode: RefMode,
    trace: Vec<(u64, Vec<Exact>)>,
) -> RunRecord {
    let zero = vec![Exact::from_integer(0); reference.len()];
    let mut points = vec![RunPoint { steps: 0, eps: epsilon_metrics(&zero, reference, mode), degrees: zero }];
    for (steps, degrees) in trace {
        let eps = epsilon_metrics(&degrees, reference, mode);
        if steps == 0 {
            points.clear();
        }
        points.push(RunPoint { steps, eps, degrees });
    }
    RunRecord { trajectory_id: rec.id, method, seed, reference: reference.to_vec(), points }
}

/// Run every configured method `runs` times on every instance, computing
/// missing references first, and write `runs.csv`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.validate()?;
    let records = load_instances(&cfg.out)?;
    let refs = match load_references(cfg)? {
        Some(r) if records.iter().all(|rec| r.contains_key(&rec.id)) => r,
        _ => oracle(cfg)?,
    };
    let mode = cfg.mode.ref_mode();
    let jobs: Vec<(usize, Method, usize)> = records
        .iter()
        .enumerate()
        .flat_map(|(k, _)| cfg.methods.iter().flat_map(move |&m| (0..cfg.runs).map(move |r| (k, m, r))))
        .collect();
    let mut out: Vec<RunRecord> = with_model!(cfg, |model| {
        jobs.par_iter()
            .map(|&(k, method, r)| {
                let rec = &records[k];
                let seed = derive_seed(cfg.seed, &[RUN, rec.id as u64, method as u64, r as u64]);
                let trace = with_instance(&model, cfg, rec, |job| job.search(method, seed))?;
                Ok(make_record(rec, method, seed, &refs[&rec.id], mode, trace))
            })
            .collect::<Result<Vec<_>, HarnessError>>()?
    });
    out.sort_by_key(|r| (r.trajectory_id, r.method, r.seed));
    write_runs(&cfg.out.join("runs.csv"), &out)?;
    Ok(out)
}

/// One row per checkpoint: `trajectory_id, method, seed, steps, eps, d_0..`.
pub fn write_runs(path: &Path, runs: &[RunRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let n = runs.first().map_or(0, |r| r.reference.len());
    let mut header: Vec<String> = ["trajectory_id", "method", "seed", "steps", "eps"].map(String::from).to_vec();
    header.extend((0..n).map(|i| format!("d_{i}")));
    w.write_record(&header)?;
    for r in runs {
        for p in &r.points {
            let mut row = vec![
                r.trajectory_id.to_string(),
                r.method.name().to_string(),
                r.seed.to_string(),
                p.steps.to_string(),
                p.eps.to_f64().to_string(),
            ];
            row.extend(p.degrees.iter().map(|d| d.to_f64().to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Curves of the runs stored in a `runs.csv`.
pub fn read_curves(path: &Path) -> Result<Vec<RunCurve>, HarnessError> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut curves: BTreeMap<(usize, String, u64), Vec<(u64, f64)>> = BTreeMap::new();
    for row in rd.records() {
        let row = row?;
        let field = |i: usize| row.get(i).ok_or_else(|| HarnessError::Config(format!("short row in {}", path.display())));
        let num = |i: usize| -> Result<f64, HarnessError> {
            field(i)?.parse::<f64>().map_err(|e| HarnessError::Config(format!("bad number in runs: {e}")))
        };
        let key = (num(0)? as usize, field(1)?.to_string(), field(2)?.parse::<u64>().map_err(|e| HarnessError::Config(e.to_string()))?);
        curves.entry(key).or_default().push((num(3)? as u64, num(4)?));
    }
    Ok(curves
        .into_iter()
        .map(|((trajectory_id, method, seed), points)| RunCurve { trajectory_id, method, seed, points })
        .collect())
}

/// Aggregate `runs.csv` into `profile.csv` and `profile.json`.
pub fn profile(cfg: &ExperimentConfig) -> Result<ProfileTable, HarnessError> {
    cfg.validate()?;
    let curves = read_curves(&cfg.out.join("runs.csv"))?;
    if curves.is_empty() {
        return Err(HarnessError::Config("runs.csv holds no runs".into()));
    }
    let table = performance_profile(&curves, &cfg.thresholds, &step_grid(cfg.budget));
    table.write_csv(File::create(cfg.out.join("profile.csv"))?)?;
    let mut f = BufWriter::new(File::create(cfg.out.join("profile.json"))?);
    serde_json::to_writer_pretty(&mut f, &table)?;
    writeln!(f)?;
    f.flush()?;
    Ok(table)
}

/// One SVG per threshold from `profile.json`. Returns the written paths.
pub fn plot(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, HarnessError> {
    let table: ProfileTable = serde_json::from_reader(BufReader::new(File::open(cfg.out.join("profile.json"))?))?;
    let mut thresholds: Vec<f64> = table.rows.iter().map(|r| r.threshold).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let title = format!("{}({}) {}", cfg.game, cfg.hand_size, serde_json::to_value(cfg.mode)?.as_str().unwrap_or(""));
    let mut paths = Vec::new();
    for d in thresholds {
        let path = cfg.out.join(format!("profile_D{d}.svg"));
        fs::write(&path, profile_svg(&table, d, &title))?;
        paths.push(path);
    }
    Ok(paths)
}
