//! Ground-truth trajectories: graph evolution plus `y_t = A_t z_t + w_t`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{check_probability, Error, Result};
use crate::filter::ObservationPair;
use crate::rng::{self, StreamRng};
use crate::state::{check_order, GraphSnapshot, NodeId};
use crate::transition::{sample_next_graph, DynamicsSchedule};

/// Default Poisson rate of the surrogate flight-count signals.
pub const DEFAULT_FLIGHT_RATE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    /// `z_t ~ N(0, I)` independently.
    IidGaussian,
    /// `z_1 ~ N(0, I)`, then `z_t = y_{t-1}`.
    Ar1,
}

/// Synthetic Erdős–Rényi experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub order: usize,
    pub er_p: f64,
    pub sigma_obs: f64,
    pub input_mode: InputMode,
    pub horizon: usize,
    pub seed: u64,
    pub dynamics: DynamicsSchedule,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        check_order(self.order)?;
        check_probability("er_p", self.er_p)?;
        check_sigma(self.sigma_obs)?;
        check_horizon(self.horizon)?;
        self.dynamics.validate(self.order)
    }
}

/// Airport-style closure experiment on a fixed nominal graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AirportScenario {
    pub nominal: GraphSnapshot,
    pub p_e: f64,
    pub p_r: f64,
    pub sigma_obs: f64,
    pub horizon: usize,
    pub seed: u64,
    /// Recorded input signals, one row per timestep. Synthesized when absent.
    pub signals: Option<Vec<Vec<f64>>>,
    /// Per-node Poisson rates for synthesized signals.
    pub rates: Vec<f64>,
}

impl AirportScenario {
    pub fn new(nominal: GraphSnapshot, p_e: f64, horizon: usize, seed: u64) -> Self {
        let order = nominal.order();
        AirportScenario {
            nominal,
            p_e,
            p_r: 0.0,
            sigma_obs: 0.1,
            horizon,
            seed,
            signals: None,
            rates: vec![DEFAULT_FLIGHT_RATE; order],
        }
    }

    pub fn dynamics(&self) -> DynamicsSchedule {
        DynamicsSchedule::Closure {
            p_e: self.p_e,
            p_r: self.p_r,
            nominal: self.nominal.clone(),
        }
    }
}

/// Simulated graphs and observations for `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `A_0`, before the first transition.
    pub initial: GraphSnapshot,
    /// `graphs[t - 1]` is `A_t`.
    pub graphs: Vec<GraphSnapshot>,
    pub observations: Vec<ObservationPair>,
    /// Noise draws `w_t`, kept so observations can be re-derived.
    pub noise: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.graphs.len()
    }

    pub fn order(&self) -> usize {
        self.initial.order()
    }

    /// Timesteps `t` at which `A_t` differs from `A_{t-1}`.
    pub fn change_steps(&self) -> Vec<usize> {
        let mut prev = &self.initial;
        let mut out = Vec::new();
        for (k, g) in self.graphs.iter().enumerate() {
            if g != prev {
                out.push(k + 1);
            }
            prev = g;
        }
        out
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "sigma_obs",
            value: sigma,
            constraint: "must be positive and finite",
        })
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Domain {
            name: "T",
            value: 0.0,
            constraint: "horizon must be at least 1",
        });
    }
    Ok(())
}

/// Directed Erdős–Rényi graph: each off-diagonal entry is 1 with probability `p`.
pub fn generate_er<R: Rng + ?Sized>(order: usize, p: f64, rng: &mut R) -> Result<GraphSnapshot> {
    check_probability("er_p", p)?;
    let mut g = GraphSnapshot::empty(order)?;
    for row in 0..order {
        for col in (0..order).filter(|&c| c != row) {
            if rng.random_bool(p) {
                g.set(row, col, true)?;
            }
        }
    }
    Ok(g)
}

/// `A z + w`, accumulated over columns in ascending order.
pub fn observe(graph: &GraphSnapshot, z: &[f64], noise: &[f64]) -> Vec<f64> {
    (0..graph.order())
        .map(|n| {
            let mut acc = 0.0;
            for (c, zc) in z.iter().enumerate() {
                if graph.get(n, c) {
                    acc += zc;
                }
            }
            acc + noise[n]
        })
        .collect()
}

enum InputSource<'a> {
    Gaussian,
    Ar1,
    Poisson(Vec<Poisson<f64>>),
    Recorded(&'a [Vec<f64>]),
}

fn simulate(
    initial: GraphSnapshot,
    dynamics: &DynamicsSchedule,
    horizon: usize,
    sigma_obs: f64,
    seed: u64,
    mut inputs: InputSource<'_>,
) -> Result<Trajectory> {
    let order = initial.order();
    let mut dyn_rng: StreamRng = rng::stream(seed, rng::DYNAMICS);
    let mut input_rng = rng::stream(seed, rng::INPUTS);
    let mut noise_rng = rng::stream(seed, rng::NOISE);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut graphs = Vec::with_capacity(horizon);
    let mut observations: Vec<ObservationPair> = Vec::with_capacity(horizon);
    let mut noise = Vec::with_capacity(horizon);
    let mut current = initial.clone();
    for t in 1..=horizon {
        current = sample_next_graph(&current, dynamics, t, &mut dyn_rng)?;
        let z: Vec<f64> = match &mut inputs {
            InputSource::Gaussian => (0..order)
                .map(|_| std_normal.sample(&mut input_rng))
                .collect(),
            InputSource::Ar1 => match observations.last() {
                Some(prev) => prev.y.clone(),
                None => (0..order)
                    .map(|_| std_normal.sample(&mut input_rng))
                    .collect(),
            },
            InputSource::Poisson(dists) => dists.iter().map(|d| d.sample(&mut input_rng)).collect(),
            InputSource::Recorded(rows) => {
                let row = &rows[t - 1];
                if row.len() != order {
                    return Err(Error::Dimension {
                        context: "recorded signal row",
                        expected: order,
                        actual: row.len(),
                    });
                }
                row.clone()
            }
        };
        let w: Vec<f64> = (0..order)
            .map(|_| sigma_obs * std_normal.sample(&mut noise_rng))
            .collect();
        let y = observe(&current, &z, &w);
        if z.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "simulated signals",
                t,
            });
        }
        observations.push(ObservationPair { z, y });
        noise.push(w);
        graphs.push(current.clone());
    }
    Ok(Trajectory {
        initial,
        graphs,
        observations,
        noise,
    })
}

/// Simulates the synthetic experiment; fully determined by `cfg.seed`.
pub fn generate_trajectory(cfg: &ScenarioConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut init_rng = rng::stream(cfg.seed, rng::GRAPH_INIT);
    let initial = generate_er(cfg.order, cfg.er_p, &mut init_rng)?;
    let inputs = match cfg.input_mode {
        InputMode::IidGaussian => InputSource::Gaussian,
        InputMode::Ar1 => InputSource::Ar1,
    };
    simulate(
        initial,
        &cfg.dynamics,
        cfg.horizon,
        cfg.sigma_obs,
        cfg.seed,
        inputs,
    )
}

/// Simulates the closure experiment starting from the nominal graph.
pub fn airport_trajectory(scenario: &AirportScenario) -> Result<Trajectory> {
    let order = scenario.nominal.order();
    check_probability("p_e", scenario.p_e)?;
    check_probability("p_r", scenario.p_r)?;
    check_sigma(scenario.sigma_obs)?;
    check_horizon(scenario.horizon)?;
    let inputs = match &scenario.signals {
        Some(rows) => {
            if rows.len() < scenario.horizon {
                return Err(Error::Dimension {
                    context: "recorded signal rows",
                    expected: scenario.horizon,
                    actual: rows.len(),
                });
            }
            InputSource::Recorded(rows)
        }
        None => {
            if scenario.rates.len() != order {
                return Err(Error::Dimension {
                    context: "flight rates",
                    expected: order,
                    actual: scenario.rates.len(),
                });
            }
            let dists = scenario
                .rates
                .iter()
                .map(|&r| {
                    Poisson::new(r).map_err(|_| Error::Domain {
                        name: "flight rate",
                        value: r,
                        constraint: "must be positive and finite",
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            InputSource::Poisson(dists)
        }
    };
    simulate(
        scenario.nominal.clone(),
        &scenario.dynamics(),
        scenario.horizon,
        scenario.sigma_obs,
        scenario.seed,
        inputs,
    )
}

/// Hub-and-spoke surrogate for a network of the busiest airports.
///
/// Airport `k` has size `exp(-k / N)`. A route between `a` and `b` exists
/// with probability `min(0.95, size_a · size_b)` and is served in both
/// directions.
pub fn surrogate_airport_graph<R: Rng + ?Sized>(
    order: usize,
    rng: &mut R,
) -> Result<GraphSnapshot> {
    let mut g = GraphSnapshot::empty(order)?;
    let size = |k: usize| libm::exp(-(k as f64) / order as f64);
    for a in 0..order {
        for b in a + 1..order {
            let p = (size(a) * size(b)).min(0.95);
            if rng.random_bool(p) {
                g.set(a, b, true)?;
                g.set(b, a, true)?;
            }
        }
    }
    Ok(g)
}

/// Number of row closures (non-empty row becoming empty) along a trajectory.
pub fn closure_events(traj: &Trajectory) -> Vec<(usize, NodeId)> {
    let mut prev = &traj.initial;
    let mut out = Vec::new();
    for (k, g) in traj.graphs.iter().enumerate() {
        for n in 0..g.order() {
            let node = NodeId(n);
            if prev.row_mask(node) != 0 && g.row_mask(node) == 0 {
                out.push((k + 1, node));
            }
        }
        prev = g;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic(order: usize, horizon: usize, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            order,
            er_p: 0.25,
            sigma_obs: 0.1,
            input_mode: InputMode::IidGaussian,
            horizon,
            seed,
            dynamics: DynamicsSchedule::PeriodicFlip {
                period: 20,
                p_c: 0.2,
            },
        }
    }

    #[test]
    fn er_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(generate_er(6, 0.0, &mut rng).unwrap().edge_count(), 0);
        assert_eq!(
            generate_er(6, 1.0, &mut rng).unwrap(),
            GraphSnapshot::complete(6).unwrap()
        );
        assert!(generate_er(6, 1.5, &mut rng).is_err());
    }

    #[test]
    fn er_mean_edge_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let draws = 1000;
        let counts: Vec<f64> = (0..draws)
            .map(|_| generate_er(14, 0.25, &mut rng).unwrap().edge_count() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / draws as f64;
        // Binomial(182, 0.25): mean 45.5, variance 34.125
        let se = libm::sqrt(182.0 * 0.25 * 0.75 / draws as f64);
        assert!((mean - 45.5).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn tiny_noise_gives_exact_linear_outputs() {
        let mut cfg = synthetic(5, 40, 3);
        cfg.sigma_obs = 1e-15;
        let traj = generate_trajectory(&cfg).unwrap();
        for (g, o) in traj.graphs.iter().zip(&traj.observations) {
            let clean = observe(g, &o.z, &[0.0; 5]);
            for (a, b) in clean.iter().zip(&o.y) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stored_noise_reproduces_outputs_exactly() {
        let traj = generate_trajectory(&synthetic(6, 100, 9)).unwrap();
        for ((g, o), w) in traj.graphs.iter().zip(&traj.observations).zip(&traj.noise) {
            assert_eq!(observe(g, &o.z, w), o.y);
        }
    }

    #[test]
    fn noise_only_variance() {
        let mut cfg = synthetic(3, 10_000, 5);
        cfg.er_p = 0.0;
        cfg.sigma_obs = 0.5;
        cfg.dynamics = DynamicsSchedule::Static;
        let traj = generate_trajectory(&cfg).unwrap();
        let ys: Vec<f64> = traj.observations.iter().map(|o| o.y[1]).collect();
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1.0);
        // SE of the sample variance of a Gaussian: σ² sqrt(2 / (n - 1))
        let se = 0.25 * libm::sqrt(2.0 / (n - 1.0));
        assert!((var - 0.25).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn same_seed_same_trajectory() {
        let a = generate_trajectory(&synthetic(5, 200, 77)).unwrap();
        let b = generate_trajectory(&synthetic(5, 200, 77)).unwrap();
        assert_eq!(a, b);
        let c = generate_trajectory(&synthetic(5, 200, 78)).unwrap();
        assert_ne!(a, c);
        assert_eq!(
            a.change_steps(),
            [20, 40, 60, 80, 100, 120, 140, 160, 180, 200]
        );
    }

    #[test]
    fn ar1_inputs_chain_outputs() {
        let mut cfg = synthetic(4, 30, 1);
        cfg.input_mode = InputMode::Ar1;
        cfg.er_p = 0.2;
        let traj = generate_trajectory(&cfg).unwrap();
        for t in 1..traj.horizon() {
            assert_eq!(traj.observations[t].z, traj.observations[t - 1].y);
        }
    }

    #[test]
    fn ar1_overflow_is_reported() {
        let cfg = ScenarioConfig {
            order: 6,
            er_p: 1.0,
            sigma_obs: 0.1,
            input_mode: InputMode::Ar1,
            horizon: 2000,
            seed: 1,
            dynamics: DynamicsSchedule::Static,
        };
        assert!(matches!(
            generate_trajectory(&cfg),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = synthetic(4, 10, 1);
        cfg.horizon = 0;
        assert!(generate_trajectory(&cfg).is_err());
        let mut cfg = synthetic(4, 10, 1);
        cfg.sigma_obs = -1.0;
        assert!(generate_trajectory(&cfg).is_err());
    }

    #[test]
    fn recorded_signals_are_used_verbatim() {
        let nominal = GraphSnapshot::complete(3).unwrap();
        let rows: Vec<Vec<f64>> = (0..5).map(|t| vec![t as f64, 1.0, 2.0]).collect();
        let mut sc = AirportScenario::new(nominal, 0.1, 5, 4);
        sc.signals = Some(rows.clone());
        let traj = airport_trajectory(&sc).unwrap();
        for (o, r) in traj.observations.iter().zip(&rows) {
            assert_eq!(&o.z, r);
        }
        sc.signals = Some(rows[..3].to_vec());
        assert!(airport_trajectory(&sc).is_err());
    }

    #[test]
    fn closure_rate_matches_p_e() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let nominal = surrogate_airport_graph(16, &mut rng).unwrap();
        let mut sc = AirportScenario::new(nominal.clone(), 0.1, 100, 0);
        sc.p_r = 0.3;
        let mut open_row_steps = 0usize;
        let mut closures = 0usize;
        for seed in 0..20 {
            sc.seed = seed;
            let traj = airport_trajectory(&sc).unwrap();
            let mut prev = &traj.initial;
            for g in &traj.graphs {
                open_row_steps += (0..16).filter(|&n| prev.row_mask(NodeId(n)) != 0).count();
                prev = g;
            }
            closures += closure_events(&traj).len();
            assert!(traj
                .observations
                .iter()
                .all(|o| o.z.iter().all(|&v| v >= 0.0 && v.fract() == 0.0)));
        }
        let rate = closures as f64 / open_row_steps as f64;
        let se = libm::sqrt(0.1 * 0.9 / open_row_steps as f64);
        assert!((rate - 0.1).abs() < 3.0 * se, "rate {rate}");
    }
}
