//! Experiment loop: build or load a trajectory, run every configured method
//! over it and write the results.

use std::fs;
use std::io::Write;
use std::path::Path;

use netssm_core::baselines::{rls_estimate, RlsConfig, WindowBuffer};
use netssm_core::estimators::{expected_row, map_row, matrix_state_error, state_error};
use netssm_core::filter::init_beliefs;
use netssm_core::rng;
use netssm_core::scenarios::{
    airport_trajectory, generate_er, generate_trajectory, surrogate_airport_graph, AirportScenario,
    ScenarioConfig, Trajectory,
};
use netssm_core::{GraphSnapshot, StepReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{MethodSpec, RunConfig, ScenarioKind, ScenarioSpec, DEFAULT_AIRPORT_ORDER};
use crate::error::{Error, Result};
use crate::io::{self, BeliefWriter};

pub const RESULTS_FILE: &str = "results.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const BELIEFS_FILE: &str = "beliefs.csv";
pub const CONFIG_COPY_FILE: &str = "config.toml";

/// Per-method error summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub label: String,
    pub mean: f64,
    /// Mean over the `steady_window` steps before each change step, or over
    /// the final window when nothing changes.
    pub steady_state_mean: f64,
    /// Steps to recover after each entry of [`RunResult::change_steps`];
    /// `None` when the error never drops below the threshold before the next
    /// change.
    pub recovery: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Method labels in config order.
    pub labels: Vec<String>,
    /// `series[m][t - 1]` is `L_t` for method `m`.
    pub series: Vec<Vec<f64>>,
    pub summaries: Vec<MethodSummary>,
    /// Steps `t` at which the true graph changed.
    pub change_steps: Vec<usize>,
    /// One report per step when a filter method ran, otherwise empty.
    pub diagnostics: Vec<StepReport>,
}

impl RunResult {
    pub fn series_of(&self, label: &str) -> Option<&[f64]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|k| self.series[k].as_slice())
    }
}

/// Marker written in place of a recovery time that never happened.
pub const NOT_RECOVERED: i64 = -1;

/// Steps until `series` first drops below `threshold` after each change.
///
/// `change_steps` are positions in `series`. The search after a change stops
/// at the next change or the end of the series.
pub fn recovery_time(series: &[f64], change_steps: &[usize], threshold: f64) -> Vec<Option<usize>> {
    change_steps
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let end = change_steps
                .get(k + 1)
                .copied()
                .unwrap_or(series.len())
                .min(series.len());
            (c..end).position(|i| series[i] < threshold)
        })
        .collect()
}

fn steady_state_mean(series: &[f64], change_steps: &[usize], window: usize) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut add = |end: usize| {
        let start = end.saturating_sub(window).max(1);
        for t in start..end {
            sum += series[t - 1];
            count += 1;
        }
    };
    if change_steps.is_empty() {
        add(series.len() + 1);
    } else {
        change_steps.iter().for_each(|&c| add(c));
    }
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Nominal graph plus closure dynamics on an airport network read from
/// `graph_file`.
pub fn load_airport_scenario(
    graph_file: &Path,
    signals_file: Option<&Path>,
    spec: &ScenarioSpec,
) -> Result<Trajectory> {
    let nominal = io::read_edge_list(graph_file, spec.order)?;
    airports_from_nominal(nominal, signals_file, spec)
}

fn airports_from_nominal(
    nominal: GraphSnapshot,
    signals_file: Option<&Path>,
    spec: &ScenarioSpec,
) -> Result<Trajectory> {
    let order = nominal.order();
    let (p_e, p_r) = match spec.dynamics {
        crate::config::DynamicsSpec::Closure { p_e, p_r } => (p_e, p_r),
        _ => {
            return Err(Error::Config(vec![
                "scenario.dynamics.kind: airports requires closure".into(),
            ]))
        }
    };
    let mut scenario = AirportScenario::new(nominal, p_e, spec.horizon, spec.seed);
    scenario.p_r = p_r;
    scenario.sigma_obs = spec.sigma_obs;
    scenario.rates = match &spec.rates {
        Some(r) => r.clone(),
        None => vec![spec.default_rate; order],
    };
    if let Some(path) = signals_file {
        let rows = io::read_signals(path, Some(order))?;
        if rows.len() < spec.horizon {
            return Err(Error::Dimension {
                path: path.into(),
                message: format!("{} signal rows, horizon is {}", rows.len(), spec.horizon),
            });
        }
        scenario.signals = Some(rows);
    }
    Ok(airport_trajectory(&scenario)?)
}

/// Generates or loads the ground-truth trajectory described by the config.
pub fn build_trajectory(cfg: &RunConfig) -> Result<Trajectory> {
    let s = &cfg.scenario;
    match s.kind {
        ScenarioKind::SyntheticEr => {
            let order = s.order.ok_or_else(|| {
                Error::Config(vec!["scenario.order: required for synthetic-er".into()])
            })?;
            // Same stream the generator draws A_0 from, so closure dynamics
            // can use it as the nominal graph.
            let initial = generate_er(order, s.er_p, &mut rng::stream(s.seed, rng::GRAPH_INIT))?;
            let sc = ScenarioConfig {
                order,
                er_p: s.er_p,
                sigma_obs: s.sigma_obs,
                input_mode: s.input_mode.into(),
                horizon: s.horizon,
                seed: s.seed,
                dynamics: s.dynamics.schedule(&initial)?,
            };
            Ok(generate_trajectory(&sc)?)
        }
        ScenarioKind::Airports => match &s.graph_file {
            Some(g) => load_airport_scenario(g, s.signals_file.as_deref(), s),
            None => {
                let order = s.order.unwrap_or(DEFAULT_AIRPORT_ORDER);
                let nominal =
                    surrogate_airport_graph(order, &mut rng::stream(s.seed, rng::GRAPH_INIT))?;
                airports_from_nominal(nominal, s.signals_file.as_deref(), s)
            }
        },
    }
}

enum Task {
    Filter { avg: bool, map: bool },
    LeastSquares(RlsConfig),
}

enum TaskOutput {
    Filter {
        avg: Vec<f64>,
        map: Vec<f64>,
        diagnostics: Vec<StepReport>,
    },
    LeastSquares(Vec<f64>),
}

fn run_filter(
    traj: &Trajectory,
    cfg: &RunConfig,
    avg: bool,
    map: bool,
    beliefs: Option<&Path>,
) -> Result<TaskOutput> {
    let order = traj.order();
    let schedule = cfg.filter_dynamics().schedule(&traj.initial)?;
    schedule.validate(order)?;
    let prior = cfg.filter.prior(&traj.initial);
    let mut state = init_beliefs(order, &prior, cfg.filter_sigma())?;
    let mut writer = beliefs
        .map(|p| BeliefWriter::create(p, cfg.belief_floor))
        .transpose()?;
    let mut out_avg = Vec::new();
    let mut out_map = Vec::new();
    let mut diagnostics = Vec::with_capacity(traj.horizon());
    for (k, obs) in traj.observations.iter().enumerate() {
        let t = k + 1;
        let kernels = schedule.kernels_at(t, order)?;
        let report = state.step(&kernels, obs)?;
        let truth = &traj.graphs[k];
        if avg {
            let est: Vec<_> = state.beliefs().par_iter().map(expected_row).collect();
            out_avg.push(state_error(&est, truth)?);
        }
        if map {
            let est: Vec<_> = state.beliefs().par_iter().map(map_row).collect();
            out_map.push(state_error(&est, truth)?);
        }
        if let Some(w) = writer.as_mut() {
            w.write_step(t, state.beliefs())?;
        }
        diagnostics.push(report);
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    Ok(TaskOutput::Filter {
        avg: out_avg,
        map: out_map,
        diagnostics,
    })
}

fn run_least_squares(traj: &Trajectory, rc: &RlsConfig) -> Result<TaskOutput> {
    let mut buf = WindowBuffer::new(traj.order(), rc.window)?;
    let mut out = Vec::with_capacity(traj.horizon());
    for (obs, truth) in traj.observations.iter().zip(&traj.graphs) {
        buf.push_observation(obs)?;
        let est = rls_estimate(&buf, rc)?;
        out.push(matrix_state_error(&est.matrix, truth)?);
    }
    Ok(TaskOutput::LeastSquares(out))
}

/// Runs every configured method over `traj` and computes summaries, without
/// writing results. Beliefs are streamed to `beliefs` when given.
pub fn run_methods(
    traj: &Trajectory,
    cfg: &RunConfig,
    beliefs: Option<&Path>,
) -> Result<RunResult> {
    let want_avg = cfg.methods.contains(&MethodSpec::Avg);
    let want_map = cfg.methods.contains(&MethodSpec::Map);
    let mut tasks = Vec::new();
    if want_avg || want_map || beliefs.is_some() {
        tasks.push(Task::Filter {
            avg: want_avg,
            map: want_map,
        });
    }
    tasks.extend(
        cfg.methods
            .iter()
            .filter_map(|m| m.rls_config().map(Task::LeastSquares)),
    );

    let run = || -> Vec<Result<TaskOutput>> {
        tasks
            .par_iter()
            .map(|task| match task {
                Task::Filter { avg, map } => run_filter(traj, cfg, *avg, *map, beliefs),
                Task::LeastSquares(rc) => run_least_squares(traj, rc),
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .expect("thread pool");
    let outputs = pool.install(run).into_iter().collect::<Result<Vec<_>>>()?;

    let mut filter = None;
    let mut ls = Vec::new();
    for out in outputs {
        match out {
            TaskOutput::Filter {
                avg,
                map,
                diagnostics,
            } => filter = Some((avg, map, diagnostics)),
            TaskOutput::LeastSquares(s) => ls.push(s),
        }
    }
    let mut ls = ls.into_iter();
    let (mut avg, mut map, diagnostics) = filter.unwrap_or_default();
    let mut labels = Vec::new();
    let mut series = Vec::new();
    for m in &cfg.methods {
        labels.push(m.label());
        series.push(match m {
            MethodSpec::Avg => std::mem::take(&mut avg),
            MethodSpec::Map => std::mem::take(&mut map),
            _ => ls.next().expect("one output per least-squares method"),
        });
    }

    let change_steps = traj.change_steps();
    let positions: Vec<usize> = change_steps.iter().map(|c| c - 1).collect();
    let summaries = labels
        .iter()
        .zip(&series)
        .map(|(label, s)| MethodSummary {
            label: label.clone(),
            mean: s.iter().sum::<f64>() / s.len() as f64,
            steady_state_mean: steady_state_mean(s, &change_steps, cfg.steady_window),
            recovery: recovery_time(s, &positions, cfg.recovery_threshold),
        })
        .collect();
    Ok(RunResult {
        labels,
        series,
        summaries,
        change_steps,
        diagnostics,
    })
}

/// Runs the methods over `traj` and writes all result files to
/// `cfg.output_dir`.
pub fn execute(traj: &Trajectory, cfg: &RunConfig) -> Result<RunResult> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let beliefs = cfg.dump_beliefs.then(|| dir.join(BELIEFS_FILE));
    let result = run_methods(traj, cfg, beliefs.as_deref())?;
    write_results(dir, &result)?;
    let path = dir.join(CONFIG_COPY_FILE);
    fs::write(&path, cfg.to_toml()).map_err(|e| Error::io(&path, e))?;
    Ok(result)
}

/// Validates the config, builds the trajectory and runs it through
/// [`execute`].
pub fn run_experiment(cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let traj = build_trajectory(cfg)?;
    execute(&traj, cfg)
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    change_steps: &'a [usize],
    methods: Vec<SummaryEntry<'a>>,
}

#[derive(Serialize)]
struct SummaryEntry<'a> {
    label: &'a str,
    mean: f64,
    steady_state_mean: f64,
    recovery: Vec<i64>,
}

/// Writes `results.csv`, `diagnostics.csv` and `summary.toml`.
pub fn write_results(dir: &Path, result: &RunResult) -> Result<()> {
    let mut order: Vec<usize> = (0..result.labels.len()).collect();
    order.sort_by(|&a, &b| result.labels[a].cmp(&result.labels[b]));
    let horizon = result.series.first().map_or(0, Vec::len);

    let path = dir.join(RESULTS_FILE);
    let mut w = io::create(&path)?;
    let res = (|| {
        writeln!(w, "t,method,L_t")?;
        for k in 0..horizon {
            for &m in &order {
                writeln!(
                    w,
                    "{},{},{:e}",
                    k + 1,
                    result.labels[m],
                    result.series[m][k]
                )?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(&path, e))?;

    let path = dir.join(DIAGNOSTICS_FILE);
    let mut w = io::create(&path)?;
    let res = (|| {
        writeln!(w, "t,node,entropy,log_evidence,degenerate")?;
        for report in &result.diagnostics {
            for d in &report.nodes {
                writeln!(
                    w,
                    "{},{},{:e},{:e},{}",
                    report.t, d.node.0, d.entropy, d.log_evidence, d.degenerate as u8
                )?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(&path, e))?;

    let summary = SummaryFile {
        change_steps: &result.change_steps,
        methods: result
            .summaries
            .iter()
            .map(|s| SummaryEntry {
                label: &s.label,
                mean: s.mean,
                steady_state_mean: s.steady_state_mean,
                recovery: s
                    .recovery
                    .iter()
                    .map(|r| r.map_or(NOT_RECOVERED, |k| k as i64))
                    .collect(),
            })
            .collect(),
    };
    let path = dir.join(SUMMARY_FILE);
    let text = toml::to_string(&summary).expect("summary serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
