//! Monte Carlo experiments over user drops.
//!
//! Every trial draws one drop from a seed that depends only on the master
//! seed, the sweep index and the trial index, and then runs every selected
//! method on that same drop. Trials are spread over a worker pool; results
//! are sorted by (method, sweep point, trial) before they are written, so the
//! output does not depend on the number of workers.

mod config;
mod output;
mod report;

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{
    parse_methods, AnnealingSection, AntennaSweep, ConvergenceStudy, ExperimentConfig, GameSection, Method, PowerSweep,
    RunSection,
};
pub use output::{emit_csv, format_sig, round_sig, CsvRecord};
pub use report::single_drop_report;

use crate::baselines::{brute_force_optimum, simulated_annealing, ula_secrecy_rate, ValueRule, BRUTE_FORCE_CAP};
use crate::error::{Error, Result};
use crate::game::{run_activation_with, GameTrace, ShapleyRule};
use crate::geometry::{sample_drop, uniform_layout, AntennaLayout, UserDrop};
use crate::secrecy::{Coalition, LinkBudget, SecrecyEvaluator};

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(state: u64, word: u64) -> u64 {
    splitmix64(state ^ splitmix64(word))
}

/// Seed of the drop used by every method at one (sweep point, trial).
pub fn drop_seed(master_seed: u64, sweep_index: usize, trial: usize) -> u64 {
    mix(mix(splitmix64(master_seed), sweep_index as u64), trial as u64)
}

/// Seed for a method's own randomness at one (sweep point, trial).
pub fn method_seed(master_seed: u64, sweep_index: usize, trial: usize, method: Method) -> u64 {
    mix(drop_seed(master_seed, sweep_index, trial), method.id())
}

/// One method on one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub trial: usize,
    /// Drop seed shared by every method of this trial.
    pub seed: u64,
    pub secrecy_rate: f64,
    pub clamped_secrecy_rate: f64,
    pub bob_rate: f64,
    pub eve_rate: f64,
    pub coalition_mask: u64,
    pub coalition_size: usize,
    /// Examined antennas for the game methods, annealing steps, or
    /// coalitions evaluated by the exhaustive search.
    pub iterations: usize,
    pub wall_time_s: f64,
}

impl CsvRecord for ResultRow {
    fn header() -> &'static [&'static str] {
        &[
            "method",
            "sweep_value",
            "trial",
            "seed",
            "secrecy_rate",
            "clamped_secrecy_rate",
            "bob_rate",
            "eve_rate",
            "coalition_mask",
            "coalition_size",
            "iterations",
            "wall_time_s",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.method.to_string(),
            format_sig(self.sweep_value),
            self.trial.to_string(),
            self.seed.to_string(),
            format_sig(self.secrecy_rate),
            format_sig(self.clamped_secrecy_rate),
            format_sig(self.bob_rate),
            format_sig(self.eve_rate),
            self.coalition_mask.to_string(),
            self.coalition_size.to_string(),
            self.iterations.to_string(),
            format_sig(self.wall_time_s),
        ]
    }
}

/// Mean and standard error of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std_err: f64,
}

impl Stat {
    /// Sample mean and `s / √n` (zero for a single value).
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return Stat { mean, std_err: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Stat {
            mean,
            std_err: (var / n).sqrt(),
        }
    }
}

/// Per-method statistics at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub sweep_value: f64,
    pub trials: usize,
    pub secrecy: Stat,
    pub clamped: Stat,
    pub bob: Stat,
    pub eve: Stat,
    pub coalition_size: Stat,
    pub iterations: Stat,
}

impl CsvRecord for AggregateRow {
    fn header() -> &'static [&'static str] {
        &[
            "method",
            "sweep_value",
            "trials",
            "secrecy_mean",
            "secrecy_se",
            "clamped_mean",
            "clamped_se",
            "bob_mean",
            "bob_se",
            "eve_mean",
            "eve_se",
            "coalition_size_mean",
            "coalition_size_se",
            "iterations_mean",
            "iterations_se",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let mut out = vec![
            self.method.to_string(),
            format_sig(self.sweep_value),
            self.trials.to_string(),
        ];
        for s in [
            self.secrecy,
            self.clamped,
            self.bob,
            self.eve,
            self.coalition_size,
            self.iterations,
        ] {
            out.push(format_sig(s.mean));
            out.push(format_sig(s.std_err));
        }
        out
    }
}

/// Aggregates rows grouped by (method, sweep point), from the values as they
/// are written to CSV so the file can be re-aggregated exactly.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.method, r.sweep_index, r.trial));
    sorted
        .chunk_by(|a, b| a.method == b.method && a.sweep_index == b.sweep_index)
        .map(|group| {
            let col = |f: fn(&ResultRow) -> f64| -> Stat {
                Stat::of(&group.iter().map(|r| round_sig(f(r))).collect::<Vec<_>>())
            };
            AggregateRow {
                method: group[0].method,
                sweep_value: group[0].sweep_value,
                trials: group.len(),
                secrecy: col(|r| r.secrecy_rate),
                clamped: col(|r| r.clamped_secrecy_rate),
                bob: col(|r| r.bob_rate),
                eve: col(|r| r.eve_rate),
                coalition_size: col(|r| r.coalition_size as f64),
                iterations: col(|r| r.iterations as f64),
            }
        })
        .collect()
}

/// One examined antenna of a game run in the convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    /// 1-based examined-antenna counter; 0 is the initial state.
    pub step: usize,
    pub cycle: usize,
    pub antenna: Option<usize>,
    pub action: &'static str,
    pub coalition_mask: u64,
    pub coalition_size: usize,
    pub value: f64,
}

impl CsvRecord for TraceRow {
    fn header() -> &'static [&'static str] {
        &[
            "trial",
            "seed",
            "method",
            "step",
            "cycle",
            "antenna",
            "action",
            "coalition_mask",
            "coalition_size",
            "value",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            self.method.to_string(),
            self.step.to_string(),
            self.cycle.to_string(),
            self.antenna.map(|a| a.to_string()).unwrap_or_default(),
            self.action.to_string(),
            self.coalition_mask.to_string(),
            self.coalition_size.to_string(),
            format_sig(self.value),
        ]
    }
}

fn trace_rows(trial: usize, seed: u64, method: Method, trace: &GameTrace) -> Vec<TraceRow> {
    let mut rows = vec![TraceRow {
        trial,
        seed,
        method,
        step: 0,
        cycle: 0,
        antenna: None,
        action: "init",
        coalition_mask: trace.initial.mask(),
        coalition_size: trace.initial.len(),
        value: trace.initial_value,
    }];
    rows.extend(trace.iterations.iter().enumerate().map(|(i, s)| TraceRow {
        trial,
        seed,
        method,
        step: i + 1,
        cycle: s.cycle,
        antenna: Some(s.antenna),
        action: s.action.as_str(),
        coalition_mask: s.coalition.mask(),
        coalition_size: s.coalition.len(),
        value: s.value,
    }));
    rows
}

/// Per-trial summary of the convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub final_value: f64,
    pub bob_rate: f64,
    pub eve_rate: f64,
    pub converged: bool,
    pub cycles: usize,
    pub examined: usize,
    pub iterations_to_last_move: usize,
    /// Method that produced the reference optimum.
    pub reference: Method,
    pub optimum_value: f64,
    pub optimum_bob_rate: f64,
    pub optimum_eve_rate: f64,
    /// `final_value / optimum_value`; NaN when the optimum is not positive.
    pub ratio: f64,
    /// Set when the optimum comes from annealing because the array is too
    /// large for exhaustive search.
    pub approximate_reference: bool,
}

impl CsvRecord for ConvergenceRow {
    fn header() -> &'static [&'static str] {
        &[
            "trial",
            "seed",
            "method",
            "final_value",
            "bob_rate",
            "eve_rate",
            "converged",
            "cycles",
            "examined",
            "iterations_to_last_move",
            "reference",
            "optimum_value",
            "optimum_bob_rate",
            "optimum_eve_rate",
            "ratio",
            "approximate_reference",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            self.method.to_string(),
            format_sig(self.final_value),
            format_sig(self.bob_rate),
            format_sig(self.eve_rate),
            self.converged.to_string(),
            self.cycles.to_string(),
            self.examined.to_string(),
            self.iterations_to_last_move.to_string(),
            self.reference.to_string(),
            format_sig(self.optimum_value),
            format_sig(self.optimum_bob_rate),
            format_sig(self.optimum_eve_rate),
            format_sig(self.ratio),
            self.approximate_reference.to_string(),
        ]
    }
}

/// Everything one experiment produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
    pub convergence: Vec<ConvergenceRow>,
    pub trace: Vec<TraceRow>,
}

impl ExperimentOutput {
    /// Writes `raw_rows.csv`, `aggregate.csv`, the convergence files when
    /// present, and `effective_config.toml` into `dir`.
    pub fn write(&self, config: &ExperimentConfig, dir: &Path) -> Result<()> {
        output::ensure_dir(dir)?;
        emit_csv(&self.rows, &dir.join("raw_rows.csv"))?;
        emit_csv(&self.aggregates, &dir.join("aggregate.csv"))?;
        if !self.convergence.is_empty() {
            emit_csv(&self.convergence, &dir.join("convergence.csv"))?;
            emit_csv(&self.trace, &dir.join("trace.csv"))?;
        }
        output::write_text(&dir.join("effective_config.toml"), &config.to_toml())
    }

    /// Aggregate row for a method at a sweep value.
    pub fn aggregate_for(&self, method: Method, sweep_value: f64) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.sweep_value == sweep_value)
    }
}

/// What a sweep point fixes.
#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    index: usize,
    value: f64,
    antennas: usize,
    power_dbm: f64,
}

struct Trial<'a> {
    config: &'a ExperimentConfig,
    point: SweepPoint,
    trial: usize,
    seed: u64,
    layout: &'a AntennaLayout,
    budget: LinkBudget,
    drop: UserDrop,
}

/// Result of one method on one drop before it becomes a row.
struct MethodOutcome {
    coalition: Coalition,
    secrecy: f64,
    bob: f64,
    eve: f64,
    iterations: usize,
    trace: Option<GameTrace>,
}

impl Trial<'_> {
    fn evaluator(&self) -> Result<SecrecyEvaluator> {
        SecrecyEvaluator::for_drop(&self.config.scenario, self.layout, &self.drop, self.budget)
    }

    fn outcome_for(&self, v: &SecrecyEvaluator, coalition: Coalition, iterations: usize) -> Result<MethodOutcome> {
        let rates = v.rates(coalition)?;
        Ok(MethodOutcome {
            coalition,
            secrecy: rates.secrecy(),
            bob: rates.bob,
            eve: rates.eve,
            iterations,
            trace: None,
        })
    }

    fn run(&self, v: &SecrecyEvaluator, method: Method) -> Result<MethodOutcome> {
        let n = self.layout.len();
        let cfg = self.config;
        match method {
            Method::InitialSingleAntenna => {
                let c = Coalition::singleton(self.layout.closest_to(self.drop.bob));
                self.outcome_for(v, c, 0)
            }
            Method::Shapley | Method::CoalitionValue => {
                let options = cfg.game.options();
                let (c, trace) = if method == Method::Shapley {
                    let rule = ShapleyRule {
                        cap: cfg.game.shapley_cap,
                    };
                    run_activation_with(v, self.layout, self.drop.bob, &rule, &options)?
                } else {
                    run_activation_with(v, self.layout, self.drop.bob, &ValueRule, &options)?
                };
                let mut out = self.outcome_for(v, c, trace.examined())?;
                out.trace = Some(trace);
                Ok(out)
            }
            Method::BruteForce => {
                let (c, _) = brute_force_optimum(v, n)?;
                self.outcome_for(v, c, (1usize << n) - 1)
            }
            Method::Annealing => {
                let schedule = cfg.annealing.schedule()?;
                let seed = method_seed(cfg.run.master_seed, self.point.index, self.trial, method);
                let (c, _) = simulated_annealing(v, n, &schedule, seed)?;
                self.outcome_for(v, c, schedule.steps)
            }
            Method::FixedUla => {
                let rates = ula_secrecy_rate(&cfg.scenario, &self.drop, n, &self.budget)?;
                Ok(MethodOutcome {
                    coalition: Coalition::full(n),
                    secrecy: rates.secrecy(),
                    bob: rates.bob,
                    eve: rates.eve,
                    iterations: 0,
                    trace: None,
                })
            }
        }
    }

    fn row(&self, method: Method, out: &MethodOutcome, elapsed: f64) -> ResultRow {
        ResultRow {
            method,
            sweep_index: self.point.index,
            sweep_value: self.point.value,
            trial: self.trial,
            seed: self.seed,
            secrecy_rate: out.secrecy,
            clamped_secrecy_rate: out.secrecy.max(0.0),
            bob_rate: out.bob,
            eve_rate: out.eve,
            coalition_mask: out.coalition.mask(),
            coalition_size: out.coalition.len(),
            iterations: out.iterations,
            wall_time_s: if self.config.run.timing { elapsed } else { 0.0 },
        }
    }
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

fn check_methods(methods: &[Method], antennas: usize) -> Result<()> {
    if methods.contains(&Method::BruteForce) && antennas > BRUTE_FORCE_CAP {
        return Err(Error::Capacity {
            what: "exhaustive search",
            size: antennas,
            cap: BRUTE_FORCE_CAP,
        });
    }
    Ok(())
}

fn run_points(config: &ExperimentConfig, points: &[SweepPoint]) -> Result<ExperimentOutput> {
    config.validate()?;
    let methods = &config.run.methods;
    for p in points {
        check_methods(methods, p.antennas)?;
    }
    let layouts = points
        .iter()
        .map(|p| uniform_layout(&config.scenario, p.antennas))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..config.run.trials).map(move |t| (p, t)))
        .collect();

    let pool = worker_pool(config.run.workers)?;
    let per_job: Vec<Vec<ResultRow>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, t)| {
                let point = points[p];
                let seed = drop_seed(config.run.master_seed, config.run.drop_index(point.index), t);
                let drop = sample_drop(&config.scenario, &mut ChaCha8Rng::seed_from_u64(seed));
                let trial = Trial {
                    config,
                    point,
                    trial: t,
                    seed,
                    layout: &layouts[p],
                    budget: LinkBudget::for_scenario(&config.scenario, point.power_dbm)?,
                    drop,
                };
                let v = trial.evaluator()?;
                methods
                    .iter()
                    .map(|&m| {
                        let start = Instant::now();
                        let out = trial.run(&v, m)?;
                        Ok(trial.row(m, &out, start.elapsed().as_secs_f64()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows: Vec<ResultRow> = per_job.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.method, r.sweep_index, r.trial));
    let aggregates = aggregate(&rows);
    Ok(ExperimentOutput {
        rows,
        aggregates,
        ..Default::default()
    })
}

/// Secrecy rate against transmit power at a fixed antenna count.
pub fn run_power_sweep(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let sweep = &config.power_sweep;
    let points: Vec<SweepPoint> = sweep
        .powers_dbm
        .iter()
        .enumerate()
        .map(|(index, &p)| SweepPoint {
            index,
            value: p,
            antennas: sweep.antennas,
            power_dbm: p,
        })
        .collect();
    run_points(config, &points)
}

/// Secrecy and per-link rates against antenna count at a fixed power.
pub fn run_antenna_sweep(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let sweep = &config.antenna_sweep;
    let points: Vec<SweepPoint> = sweep
        .antennas
        .iter()
        .enumerate()
        .map(|(index, &n)| SweepPoint {
            index,
            value: n as f64,
            antennas: n,
            power_dbm: sweep.power_dbm,
        })
        .collect();
    run_points(config, &points)
}

/// Per-iteration traces of both game methods against the global optimum.
///
/// The optimum comes from exhaustive search up to 24 antennas and from
/// annealing beyond that, flagged in the output.
pub fn run_convergence_study(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let study = &config.convergence;
    let n = study.antennas;
    let approximate = n > BRUTE_FORCE_CAP;
    let reference = if approximate {
        Method::Annealing
    } else {
        Method::BruteForce
    };
    if approximate {
        eprintln!(
            "warning: {n} antennas exceed the exhaustive-search cap of {BRUTE_FORCE_CAP}; \
             using annealing as the reference optimum"
        );
    }
    let point = SweepPoint {
        index: 0,
        value: n as f64,
        antennas: n,
        power_dbm: study.power_dbm,
    };
    let layout = uniform_layout(&config.scenario, n)?;
    let budget = LinkBudget::for_scenario(&config.scenario, study.power_dbm)?;

    type TrialOutput = (Vec<ResultRow>, Vec<ConvergenceRow>, Vec<TraceRow>);
    let pool = worker_pool(config.run.workers)?;
    let per_trial: Vec<TrialOutput> = pool.install(|| {
        (0..config.run.trials)
            .into_par_iter()
            .map(|t| -> Result<TrialOutput> {
                let seed = drop_seed(config.run.master_seed, point.index, t);
                let drop = sample_drop(&config.scenario, &mut ChaCha8Rng::seed_from_u64(seed));
                let trial = Trial {
                    config,
                    point,
                    trial: t,
                    seed,
                    layout: &layout,
                    budget,
                    drop,
                };
                let v = trial.evaluator()?;

                let start = Instant::now();
                let best = trial.run(&v, reference)?;
                let mut rows = vec![trial.row(reference, &best, start.elapsed().as_secs_f64())];
                let mut summary = Vec::new();
                let mut trace = Vec::new();
                for method in [Method::Shapley, Method::CoalitionValue] {
                    let start = Instant::now();
                    let out = trial.run(&v, method)?;
                    rows.push(trial.row(method, &out, start.elapsed().as_secs_f64()));
                    let game = out.trace.as_ref().expect("game methods keep their trace");
                    trace.extend(trace_rows(t, seed, method, game));
                    summary.push(ConvergenceRow {
                        trial: t,
                        seed,
                        method,
                        final_value: out.secrecy,
                        bob_rate: out.bob,
                        eve_rate: out.eve,
                        converged: game.converged,
                        cycles: game.cycles_used,
                        examined: game.examined(),
                        iterations_to_last_move: game.iterations_to_last_move(),
                        reference,
                        optimum_value: best.secrecy,
                        optimum_bob_rate: best.bob,
                        optimum_eve_rate: best.eve,
                        ratio: if best.secrecy > 0.0 {
                            out.secrecy / best.secrecy
                        } else {
                            f64::NAN
                        },
                        approximate_reference: approximate,
                    });
                }
                Ok((rows, summary, trace))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut out = ExperimentOutput::default();
    for (rows, summary, trace) in per_trial {
        out.rows.extend(rows);
        out.convergence.extend(summary);
        out.trace.extend(trace);
    }
    out.rows.sort_by_key(|r| (r.method, r.sweep_index, r.trial));
    out.convergence.sort_by_key(|r| (r.method, r.trial));
    out.trace.sort_by_key(|r| (r.method, r.trial, r.step));
    out.aggregates = aggregate(&out.rows);
    Ok(out)
}
