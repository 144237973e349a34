//! Rolling-window least squares baselines.
//!
//! `Â = argmin_A ‖Y − A Z‖_F² + α ‖A‖_1` over the last `t_w` observation
//! columns. With `α = 0` each row is the minimum-norm least-squares solution
//! `y Z⁺`; with `α > 0` each row is a Lasso problem solved by proximal
//! gradient (ISTA) on the Gram form. The diagonal is left unconstrained.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filter::ObservationPair;

/// Relative singular-value cutoff of the pseudoinverse.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Fraction of the largest stable step `1 / λ_max(Z Zᵀ)` used by ISTA.
pub const STEP_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlsConfig {
    pub window: usize,
    pub alpha: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl RlsConfig {
    pub fn plain(window: usize) -> Self {
        RlsConfig {
            window,
            alpha: 0.0,
            ..Default::default()
        }
    }

    pub fn lasso(window: usize, alpha: f64) -> Self {
        RlsConfig {
            window,
            alpha,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Domain {
                name: "t_w",
                value: 0.0,
                constraint: "window must be at least 1",
            });
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain {
                name: "alpha",
                value: self.alpha,
                constraint: "must be finite and non-negative",
            });
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Domain {
                name: "tol",
                value: self.tol,
                constraint: "must be positive",
            });
        }
        Ok(())
    }
}

impl Default for RlsConfig {
    fn default() -> Self {
        RlsConfig {
            window: 30,
            alpha: 0.0,
            max_iters: 10_000,
            tol: 1e-9,
        }
    }
}

/// The last `capacity` observation columns, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBuffer {
    order: usize,
    capacity: usize,
    z: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
}

impl WindowBuffer {
    pub fn new(order: usize, capacity: usize) -> Result<Self> {
        crate::state::check_order(order)?;
        if capacity == 0 {
            return Err(Error::Domain {
                name: "t_w",
                value: 0.0,
                constraint: "window must be at least 1",
            });
        }
        Ok(WindowBuffer {
            order,
            capacity,
            z: VecDeque::with_capacity(capacity),
            y: VecDeque::with_capacity(capacity),
        })
    }

    /// Appends one column, evicting the oldest past capacity.
    pub fn push_observation(&mut self, obs: &ObservationPair) -> Result<()> {
        if obs.z.len() != self.order || obs.y.len() != self.order {
            return Err(Error::Dimension {
                context: "window observation",
                expected: self.order,
                actual: obs.z.len().max(obs.y.len()),
            });
        }
        if self.z.len() == self.capacity {
            self.z.pop_front();
            self.y.pop_front();
        }
        self.z.push_back(obs.z.clone());
        self.y.push_back(obs.y.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Input column `k` (0 = oldest).
    pub fn input(&self, k: usize) -> &[f64] {
        &self.z[k]
    }

    pub fn output(&self, k: usize) -> &[f64] {
        &self.y[k]
    }

    fn matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let w = self.len();
        let z = DMatrix::from_fn(self.order, w, |r, c| self.z[c][r]);
        let y = DMatrix::from_fn(self.order, w, |r, c| self.y[c][r]);
        (z, y)
    }
}

/// Window estimate of `A_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsEstimate {
    order: usize,
    /// Row-major `N × N`.
    pub matrix: Vec<f64>,
    /// `Z` had rank below `N` (including the all-zero and `w < N` cases).
    pub rank_deficient: bool,
    /// Largest ISTA iteration count over rows (0 for plain least squares).
    pub iterations: usize,
}

impl RlsEstimate {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.order + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.matrix[row * self.order..(row + 1) * self.order]
    }
}

/// Solves the window problem for every row.
pub fn rls_estimate(buf: &WindowBuffer, cfg: &RlsConfig) -> Result<RlsEstimate> {
    cfg.validate()?;
    let order = buf.order;
    if buf.is_empty() {
        return Err(Error::Dimension {
            context: "window columns",
            expected: 1,
            actual: 0,
        });
    }
    let (z, y) = buf.matrices();
    if z.iter().all(|&v| v == 0.0) {
        return Ok(RlsEstimate {
            order,
            matrix: vec![0.0; order * order],
            rank_deficient: true,
            iterations: 0,
        });
    }

    let svd = z.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let cutoff = PINV_RELATIVE_CUTOFF * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let rank_deficient = rank < order;

    if cfg.alpha == 0.0 {
        // Z⁺ = V S⁻¹ Uᵀ over the retained singular triplets
        let u = svd.u.as_ref().expect("svd computed with U");
        let v_t = svd.v_t.as_ref().expect("svd computed with Vᵀ");
        let mut z_pinv = DMatrix::<f64>::zeros(z.ncols(), order);
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > cutoff {
                z_pinv += v_t.row(k).transpose() * u.column(k).transpose() * (1.0 / s);
            }
        }
        let a = &y * z_pinv;
        let matrix = (0..order)
            .flat_map(|r| (0..order).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)])
            .collect();
        return Ok(RlsEstimate {
            order,
            matrix,
            rank_deficient,
            iterations: 0,
        });
    }

    let gram = &z * z.transpose();
    let corr = &y * z.transpose();
    let lambda_max = s_max * s_max;
    let mut matrix = Vec::with_capacity(order * order);
    let mut iterations = 0;
    for r in 0..order {
        let problem = LassoProblem {
            gram: gram.clone(),
            corr: corr.row(r).iter().copied().collect(),
            yy: y.row(r).iter().map(|v| v * v).sum(),
            alpha: cfg.alpha,
            lambda_max,
        };
        let sol = problem.solve(cfg, false);
        iterations = iterations.max(sol.iterations);
        matrix.extend_from_slice(&sol.coef);
    }
    Ok(RlsEstimate {
        order,
        matrix,
        rank_deficient,
        iterations,
    })
}

/// One row of the Lasso problem in Gram form:
/// `‖y − a Z‖² + α‖a‖₁ = yy − 2 a·c + a G aᵀ + α‖a‖₁` with `G = Z Zᵀ`,
/// `c = y Zᵀ`.
pub struct LassoProblem {
    pub gram: DMatrix<f64>,
    pub corr: Vec<f64>,
    pub yy: f64,
    pub alpha: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub coef: Vec<f64>,
    pub iterations: usize,
    /// Objective at the start and after each iteration, when traced.
    pub objective: Vec<f64>,
}

impl LassoProblem {
    /// Builds the row problem for output row `row` of a window.
    pub fn from_window(buf: &WindowBuffer, row: usize, alpha: f64) -> LassoProblem {
        let (z, y) = buf.matrices();
        let gram = &z * z.transpose();
        let corr = (&y * z.transpose()).row(row).iter().copied().collect();
        let yy = y.row(row).iter().map(|v| v * v).sum();
        let lambda_max = gram.clone().symmetric_eigenvalues().max();
        LassoProblem {
            gram,
            corr,
            yy,
            alpha,
            lambda_max,
        }
    }

    pub fn objective(&self, a: &[f64]) -> f64 {
        self.eval(a, &mut vec![0.0; a.len()])
    }

    /// Objective at `a`, leaving `G a` in `ga`.
    fn eval(&self, a: &[f64], ga: &mut [f64]) -> f64 {
        let mut quad = 0.0;
        for (i, (g, &ai)) in ga.iter_mut().zip(a).enumerate() {
            let mut gi = 0.0;
            for (j, &aj) in a.iter().enumerate() {
                gi += self.gram[(i, j)] * aj;
            }
            *g = gi;
            quad += ai * gi;
        }
        let lin: f64 = a.iter().zip(&self.corr).map(|(x, c)| x * c).sum();
        let l1: f64 = a.iter().map(|x| x.abs()).sum();
        self.yy - 2.0 * lin + quad + self.alpha * l1
    }

    /// ISTA from zero with step `0.99 / λ_max`, stopping when the largest
    /// coordinate change drops below `cfg.tol` or after `cfg.max_iters`.
    ///
    /// A candidate whose evaluated objective exceeds the current one is
    /// rejected and the solve stops there. In exact arithmetic this never
    /// happens; in floating point it marks convergence to rounding level.
    pub fn solve(&self, cfg: &RlsConfig, trace: bool) -> LassoSolution {
        let n = self.corr.len();
        let mut a = vec![0.0; n];
        let mut ga = vec![0.0; n];
        let mut current = self.eval(&a, &mut ga);
        let mut objective = Vec::new();
        if trace {
            objective.push(current);
        }
        if self.lambda_max <= 0.0 {
            return LassoSolution {
                coef: a,
                iterations: 0,
                objective,
            };
        }
        let step = STEP_FRACTION / self.lambda_max;
        let threshold = step * self.alpha;
        let mut next = vec![0.0; n];
        let mut ga_next = vec![0.0; n];
        let mut iterations = 0;
        while iterations < cfg.max_iters {
            let mut change: f64 = 0.0;
            for i in 0..n {
                let grad = 2.0 * (ga[i] - self.corr[i]);
                next[i] = soft_threshold(a[i] - step * grad, threshold);
                change = change.max((next[i] - a[i]).abs());
            }
            let value = self.eval(&next, &mut ga_next);
            if value > current {
                break;
            }
            iterations += 1;
            core::mem::swap(&mut a, &mut next);
            core::mem::swap(&mut ga, &mut ga_next);
            current = value;
            if trace {
                objective.push(current);
            }
            if change < cfg.tol {
                break;
            }
        }
        LassoSolution {
            coef: a,
            iterations,
            objective,
        }
    }
}

#[inline]
fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}
