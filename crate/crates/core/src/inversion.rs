//! Modified Newton reconstruction with Chebyshev order escalation
//! (single frequency) and frequency continuation with a frozen horizontal
//! axis (multi-frequency).
//!
//! Each crack is `z_j(s) = (d0 + d1 s, sum_i c_i T_i(s))`. A step solves the
//! stacked real least-squares problem `[Re J; Im J] x = [Re r; Im r]` for the
//! coefficient update, with a small Tikhonov term.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{l2, solve_density, FarFieldSet};
use crate::frechet::{basis, fd_jacobian_on_grids, jacobian, BasisElement, JacobianBlock};
use crate::geometry::{ChebCrack, Crack, CrackSet, Point2};
use crate::numerics::{tikhonov_lstsq, Matrix};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Initial Chebyshev order.
    pub p0: usize,
    /// Maximal Chebyshev order.
    pub m_p: usize,
    /// Inner loop stops once `|J_r(new) - J_r(old)| <= eps_stop`.
    pub eps_stop: f64,
    /// Tikhonov weight relative to `trace(A^T A) / N`.
    pub tikhonov_lambda: f64,
    pub max_inner: usize,
    /// Bound on the largest coefficient change of one step.
    pub step_clamp: f64,
    pub damping_retries: usize,
    /// Horizontal columns are dropped when any has norm below this times `|J|`.
    pub horizontal_guard: f64,
    /// Quadrature nodes per crack.
    pub n_nodes: usize,
    /// Minimal separation required between reconstructed cracks.
    pub d_min: f64,
    /// Use central differences with this step instead of the analytic Jacobian.
    pub fd_step: Option<f64>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            p0: 1,
            m_p: 4,
            eps_stop: 1e-3,
            tikhonov_lambda: 1e-8,
            max_inner: 30,
            step_clamp: 0.5,
            damping_retries: 5,
            horizontal_guard: 1e-8,
            n_nodes: 64,
            d_min: 0.1,
            fd_step: None,
        }
    }
}

impl NewtonConfig {
    fn validate(&self) -> Result<()> {
        if self.p0 > self.m_p {
            return Err(Error::Domain("initial order exceeds maximal order"));
        }
        let positive = [self.eps_stop, self.step_clamp, self.d_min];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.tikhonov_lambda >= 0.0) || self.n_nodes < 2 {
            return Err(Error::Domain("Newton thresholds must be positive"));
        }
        Ok(())
    }
}

/// One row of the iteration log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub stage_k: f64,
    pub p: usize,
    pub iter: usize,
    pub j_r: f64,
    pub step_norm: f64,
    /// Number of step halvings; `damping_retries + 1` marks a stalled step.
    pub halvings: usize,
    /// Horizontal columns were excluded from this step.
    pub horizontal_skipped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionState {
    pub cracks: Vec<ChebCrack>,
    pub p: usize,
    pub j_r: f64,
    pub history: Vec<IterationRecord>,
    /// Index of the current frequency stage.
    pub stage: usize,
    pub horizontal_frozen: bool,
    /// Some stage ended at `m_p` without reaching its residual target.
    pub target_missed: bool,
}

impl ReconstructionState {
    pub fn new(cracks: Vec<ChebCrack>, p: usize) -> Self {
        let cracks = cracks.iter().map(|c| c.padded(p)).collect();
        ReconstructionState {
            cracks,
            p,
            j_r: f64::NAN,
            history: Vec::new(),
            stage: 0,
            horizontal_frozen: false,
            target_missed: false,
        }
    }

    pub fn crack_set(&self, d_min: f64) -> CrackSet {
        CrackSet::new(self.cracks.iter().cloned().map(Crack::from).collect(), d_min)
    }

    /// Number of J_r increases between consecutive log rows of the same stage.
    pub fn monotonicity_violations(&self) -> usize {
        self.history.windows(2).filter(|w| w[0].stage_k == w[1].stage_k && w[1].j_r > w[0].j_r).count()
    }
}

/// A run stopped by an error; `state` holds the history up to that point.
#[derive(Clone, Debug)]
pub struct RunFailure {
    pub error: Error,
    pub state: ReconstructionState,
}

/// Simulated far fields on a candidate configuration, one per data set.
struct Evaluation {
    sims: Vec<Vec<Complex64>>,
    j_r: f64,
}

fn check_data(data: &[FarFieldSet]) -> Result<f64> {
    let k = data.first().ok_or(Error::Shape("no far-field data"))?.k;
    if data.iter().any(|f| f.k != k) {
        return Err(Error::Shape("data sets of one stage must share the wavenumber"));
    }
    if data.iter().any(|f| f.directions.len() != f.values.len() || f.values.is_empty()) {
        return Err(Error::Shape("far-field set with mismatched directions"));
    }
    Ok(k)
}

fn evaluate(set: &CrackSet, data: &[FarFieldSet], n: usize) -> Result<Evaluation> {
    let sims = data
        .iter()
        .map(|f| Ok(solve_density(set, n, f.k, f.d)?.far_field(&f.directions).values))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation { j_r: relative_misfit(&sims, data), sims })
}

fn relative_misfit(sims: &[Vec<Complex64>], data: &[FarFieldSet]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, f) in sims.iter().zip(data) {
        num += s.iter().zip(&f.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        den += f.values.iter().map(Complex64::norm_sqr).sum::<f64>();
    }
    (num / den).sqrt()
}

/// `J_r = |u_sim - u| / |u|` over all data sets, all directions stacked.
pub fn residual(cracks: &[ChebCrack], data: &[FarFieldSet], config: &NewtonConfig) -> Result<f64> {
    check_data(data)?;
    let set = CrackSet::new(cracks.iter().cloned().map(Crack::from).collect(), config.d_min);
    Ok(evaluate(&set, data, config.n_nodes)?.j_r)
}

/// Outcome of one accepted step.
#[derive(Clone, Debug)]
pub struct Step {
    pub cracks: Vec<ChebCrack>,
    pub j_r: f64,
    /// Euclidean norm of the applied coefficient update.
    pub step_norm: f64,
    pub halvings: usize,
    pub horizontal_skipped: bool,
    /// No damped step lowered the residual; the state is unchanged.
    pub stalled: bool,
}

fn stacked_jacobian(
    set: &CrackSet,
    data: &[FarFieldSet],
    cols: &[BasisElement],
    config: &NewtonConfig,
) -> Result<Vec<JacobianBlock>> {
    data.iter()
        .map(|f| match config.fd_step {
            None => jacobian(&solve_density(set, config.n_nodes, f.k, f.d)?, cols.to_vec(), &f.directions),
            Some(eps) => {
                set.ensure_valid()?;
                fd_jacobian_on_grids(&set.grids(config.n_nodes)?, f.k, f.d, cols.to_vec(), &f.directions, eps)
            }
        })
        .collect()
}

fn apply_update(cracks: &[ChebCrack], cols: &[BasisElement], x: &[f64], scale: f64) -> Vec<ChebCrack> {
    let mut out = cracks.to_vec();
    for (b, dx) in cols.iter().zip(x) {
        let dx = dx * scale;
        match *b {
            BasisElement::Vertical { crack, i } => out[crack].c[i] += dx,
            BasisElement::Horizontal { crack, i: 0 } => out[crack].d0 += dx,
            BasisElement::Horizontal { crack, .. } => out[crack].d1 += dx,
        }
    }
    out
}

/// One damped Gauss-Newton step from `state` at the current order.
pub fn newton_step(state: &ReconstructionState, data: &[FarFieldSet], config: &NewtonConfig) -> Result<Step> {
    check_data(data)?;
    let set = state.crack_set(config.d_min);
    let eval = evaluate(&set, data, config.n_nodes)?;
    newton_step_from(state, &set, &eval.sims, eval.j_r, data, config).map(|(step, _)| step)
}

fn newton_step_from(
    state: &ReconstructionState,
    set: &CrackSet,
    sims: &[Vec<Complex64>],
    current_j_r: f64,
    data: &[FarFieldSet],
    config: &NewtonConfig,
) -> Result<(Step, Evaluation)> {
    let count = state.cracks.len();
    let orders: Vec<usize> = state.cracks.iter().map(ChebCrack::order).collect();
    let mut cols = basis(&orders, &alloc::vec![!state.horizontal_frozen; count]);
    let mut blocks = stacked_jacobian(set, data, &cols, config)?;

    let mut horizontal_skipped = state.horizontal_frozen;
    if !state.horizontal_frozen {
        let total = blocks.iter().map(|b| b.norm().powi(2)).sum::<f64>().sqrt();
        let weak = cols.iter().enumerate().any(|(j, b)| {
            matches!(b, BasisElement::Horizontal { .. })
                && blocks.iter().map(|blk| l2(&blk.column(j)).powi(2)).sum::<f64>().sqrt()
                    < config.horizontal_guard * total
        });
        if weak {
            let keep: Vec<usize> =
                (0..cols.len()).filter(|&j| matches!(cols[j], BasisElement::Vertical { .. })).collect();
            cols = keep.iter().map(|&j| cols[j]).collect();
            blocks = blocks
                .into_iter()
                .map(|b| JacobianBlock {
                    matrix: Matrix::from_fn(b.matrix.rows(), keep.len(), |r, c| b.matrix[(r, keep[c])]),
                    basis: cols.clone(),
                })
                .collect();
            horizontal_skipped = true;
        }
    }

    // stack [Re; Im] rows of every data set
    let rows: usize = blocks.iter().map(|b| 2 * b.matrix.rows()).sum();
    let mut a = Matrix::<f64>::zeros(rows, cols.len());
    let mut rhs = Vec::with_capacity(rows);
    let mut r0 = 0;
    for ((b, f), sim) in blocks.iter().zip(data).zip(sims) {
        let m = b.matrix.rows();
        for i in 0..m {
            for j in 0..cols.len() {
                a.row_mut(r0 + i)[j] = b.matrix[(i, j)].re;
                a.row_mut(r0 + m + i)[j] = b.matrix[(i, j)].im;
            }
        }
        let res: Vec<Complex64> = f.values.iter().zip(sim).map(|(u, s)| u - s).collect();
        rhs.extend(res.iter().map(|z| z.re));
        rhs.extend(res.iter().map(|z| z.im));
        r0 += 2 * m;
    }
    let trace: f64 = a.as_slice().iter().map(|v| v * v).sum();
    let lambda = config.tikhonov_lambda * trace / cols.len() as f64;
    let mut x = tikhonov_lstsq(&a, &rhs, lambda)?;

    let largest = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if largest > config.step_clamp {
        let shrink = config.step_clamp / largest;
        x.iter_mut().for_each(|v| *v *= shrink);
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();

    // halve until the geometry is admissible and the residual does not grow
    let mut scale = 1.0;
    let mut admissible = false;
    for halvings in 0..=config.damping_retries {
        let cracks = apply_update(&state.cracks, &cols, &x, scale);
        let candidate = CrackSet::new(cracks.iter().cloned().map(Crack::from).collect(), config.d_min);
        if candidate.validity_check_against(Some(set)).is_ok() {
            if let Ok(eval) = evaluate(&candidate, data, config.n_nodes) {
                admissible = true;
                if eval.j_r <= current_j_r {
                    let step = Step {
                        cracks,
                        j_r: eval.j_r,
                        step_norm: norm * scale,
                        halvings,
                        horizontal_skipped,
                        stalled: false,
                    };
                    return Ok((step, eval));
                }
            }
        }
        scale *= 0.5;
    }
    if !admissible {
        return Err(Error::StepRejected {
            retries: config.damping_retries,
            reason: "every damped step leaves the admissible set",
        });
    }
    let step = Step {
        cracks: state.cracks.clone(),
        j_r: current_j_r,
        step_norm: 0.0,
        halvings: config.damping_retries + 1,
        horizontal_skipped,
        stalled: true,
    };
    Ok((step, Evaluation { sims: sims.to_vec(), j_r: current_j_r }))
}

/// Algorithm 1 at one frequency: Newton iterations at each order
/// `p0..=m_p` until the residual stalls, escalating the order until
/// `J_r < eps_target`.
pub fn run_single_freq(
    initial: &[ChebCrack],
    data: &[FarFieldSet],
    config: &NewtonConfig,
    eps_target: Option<f64>,
) -> core::result::Result<ReconstructionState, RunFailure> {
    let state = ReconstructionState::new(initial.to_vec(), config.p0);
    continue_run(state, data, config, eps_target)
}

fn continue_run(
    mut state: ReconstructionState,
    data: &[FarFieldSet],
    config: &NewtonConfig,
    eps_target: Option<f64>,
) -> core::result::Result<ReconstructionState, RunFailure> {
    macro_rules! attempt {
        ($e:expr, $state:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => return Err(RunFailure { error, state: $state }),
            }
        };
    }
    attempt!(config.validate(), state);
    let k = attempt!(check_data(data), state);
    let mut set = state.crack_set(config.d_min);
    attempt!(set.ensure_valid(), state);
    let mut eval = attempt!(evaluate(&set, data, config.n_nodes), state);
    state.j_r = eval.j_r;
    let reached = |j: f64| eps_target.is_some_and(|t| j < t);

    let start = state.p;
    for p in start..=config.m_p.max(start) {
        state.p = p;
        state.cracks = state.cracks.iter().map(|c| c.padded(p)).collect();
        set = state.crack_set(config.d_min);
        for iter in 1..=config.max_inner {
            let (step, next) = attempt!(newton_step_from(&state, &set, &eval.sims, eval.j_r, data, config), state);
            let change = (step.j_r - state.j_r).abs();
            state.cracks = step.cracks;
            state.j_r = step.j_r;
            state.history.push(IterationRecord {
                stage_k: k,
                p,
                iter,
                j_r: step.j_r,
                step_norm: step.step_norm,
                halvings: step.halvings,
                horizontal_skipped: step.horizontal_skipped,
            });
            set = state.crack_set(config.d_min);
            eval = next;
            if change <= config.eps_stop {
                break;
            }
        }
        if reached(state.j_r) {
            return Ok(state);
        }
    }
    if eps_target.is_some() {
        state.target_missed = true;
    }
    Ok(state)
}

/// One frequency of the continuation: its data sets and residual target.
#[derive(Clone, Debug)]
pub struct Stage {
    pub data: Vec<FarFieldSet>,
    pub eps_target: f64,
}

/// Algorithm 2: the lowest frequency runs from `config.p0` with the
/// horizontal axis free; every later stage starts from the previous state and
/// order with the axis frozen.
pub fn run_multi_freq(
    initial: &[ChebCrack],
    stages: &[Stage],
    config: &NewtonConfig,
) -> core::result::Result<ReconstructionState, RunFailure> {
    let mut state = ReconstructionState::new(initial.to_vec(), config.p0);
    let ks: Vec<f64> = stages.iter().map(|s| s.data.first().map_or(f64::NAN, |f| f.k)).collect();
    if stages.is_empty() || ks.windows(2).any(|w| !(w[0] < w[1])) || ks.iter().any(|k| k.is_nan()) {
        return Err(RunFailure { error: Error::Domain("stage frequencies must increase strictly"), state });
    }
    for (i, stage) in stages.iter().enumerate() {
        state.stage = i;
        state.horizontal_frozen = i > 0;
        let missed = state.target_missed;
        state.target_missed = false;
        state = continue_run(state, &stage.data, config, Some(stage.eps_target))?;
        state.target_missed |= missed;
    }
    Ok(state)
}

/// Mean `|y_rec(s) - y_true(x_rec(s))|` over `samples` parameters evenly in
/// `[-s_max, s_max]`, for a truth given as a graph `y = truth(x)`.
pub fn mean_vertical_deviation(rec: &ChebCrack, truth: impl Fn(f64) -> f64, s_max: f64, samples: usize) -> f64 {
    let crack = Crack::from(rec.clone());
    let total: f64 = (0..samples)
        .map(|i| {
            let s = -s_max + 2.0 * s_max * i as f64 / (samples - 1) as f64;
            let Point2 { x, y } = crack.point_and_derivative(s).0;
            (y - truth(x)).abs()
        })
        .sum();
    total / samples as f64
}
