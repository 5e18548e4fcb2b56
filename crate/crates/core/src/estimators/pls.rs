//! Penalized least squares `J(c) = 2⟨y, G(c)⟩ − ‖G(c)‖² − λ‖c‖_{Z̃_α}`,
//! maximized by monotone FISTA on `−J`.
//!
//! The smooth part is stepped in a diagonal metric `p_k = 2^{2 min(κ,1) k}`
//! that undoes (part of) the `2^{-κk}` damping of the forward map. Capping at
//! one keeps fine-scale steps small enough for the nonlinear maps, where
//! curvature away from the start point exceeds the linearization at it. The
//! proximal step is a level-weighted soft threshold with threshold `t p_k λ 2^{(α-d/2)k}`.
//! Backtracking halves `t` until the quadratic majorizer holds and lets it
//! grow by 1.25 after every accepted step.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::{Evaluation, ForwardModel};
use crate::grid::GridFunction;
use crate::observation::Observation;
use crate::seeding;
use crate::wavelet::{dwt_forward, dwt_inverse, seq_norm, CoefficientTree, SeqNorm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Fixed,
    #[default]
    Backtracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsConfig {
    pub lambda: f64,
    pub alpha: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub step: StepRule,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Restrict to `‖c‖_{Z̃_α} ≤ radius`.
    #[serde(default)]
    pub ball_radius: Option<f64>,
}

fn default_max_iters() -> usize {
    5000
}

fn default_restarts() -> usize {
    3
}

fn default_tol() -> f64 {
    1e-9
}

impl PlsConfig {
    pub fn new(lambda: f64, alpha: f64) -> Self {
        Self {
            lambda,
            alpha,
            max_iters: default_max_iters(),
            step: StepRule::Backtracking,
            restarts: default_restarts(),
            tol: default_tol(),
            ball_radius: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !self.alpha.is_finite() {
            return Err(invalid("penalty smoothness must be finite"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if let Some(r) = self.ball_radius {
            if !(r > 0.0) {
                return Err(invalid(format!("ball radius must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub estimate: CoefficientTree,
    pub objective: f64,
    /// `τ²_λ(F̂, F_ref)` when a reference was supplied.
    pub tau_sq: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the winning start in multi-start runs.
    pub restart: usize,
    /// Objective value of the accepted iterate after each iteration.
    pub trace: Vec<f64>,
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    x.signum() * (x.abs() - t).max(0.0)
}

/// `2⟨y, a⟩ − ‖a‖² − λ‖c‖_{Z̃_α}` with `a` the analysis of `G(c)`.
pub fn pls_objective(
    obs: &Observation,
    model: &ForwardModel,
    c: &CoefficientTree,
    cfg: &PlsConfig,
) -> Result<f64> {
    let a = dwt_forward(&model.evaluate(c)?, &model.basis)?;
    obs.y.check_basis(&model.basis)?;
    let pen = if cfg.lambda == 0.0 {
        0.0
    } else {
        cfg.lambda * seq_norm(c, SeqNorm::ZTilde { alpha: cfg.alpha })?
    };
    Ok(2.0 * obs.y.dot(&a) - a.dot(&a) - pen)
}

/// `‖G(c₁) − G(c₂)‖² + λ‖c₁‖_{Z̃_α}`.
pub fn tau_lambda_sq(
    c1: &CoefficientTree,
    c2: &CoefficientTree,
    model: &ForwardModel,
    lambda: f64,
    alpha: f64,
) -> Result<f64> {
    let diff = model.evaluate(c1)?.sub(&model.evaluate(c2)?).l2_norm();
    Ok(diff * diff + lambda * seq_norm(c1, SeqNorm::ZTilde { alpha })?)
}

struct Problem<'a> {
    obs: &'a Observation,
    model: &'a ForwardModel,
    cfg: &'a PlsConfig,
    y_grid: GridFunction,
    /// `2^{(α-d/2)k}` per coefficient.
    weights: Vec<f64>,
    precond: Vec<f64>,
}

struct Point {
    c: CoefficientTree,
    eval: Evaluation,
    /// Smooth part `‖a − y‖²` (to be minimized).
    smooth: f64,
    /// `−J(c)`.
    total: f64,
}

impl<'a> Problem<'a> {
    fn new(obs: &'a Observation, model: &'a ForwardModel, cfg: &'a PlsConfig) -> Result<Self> {
        cfg.validate()?;
        obs.y.check_basis(&model.basis)?;
        let d = model.basis.dim as f64;
        let zeros = CoefficientTree::zeros(&model.basis);
        let kappa = model.kappa();
        Ok(Self {
            obs,
            model,
            cfg,
            y_grid: dwt_inverse(&obs.y, &model.basis)?,
            weights: zeros.level_weights(|k| 2f64.powf((cfg.alpha - d / 2.0) * k as f64)),
            precond: zeros.level_weights(|k| 2f64.powf(2.0 * kappa.min(1.0) * k as f64)),
        })
    }

    fn penalty(&self, c: &CoefficientTree) -> f64 {
        self.cfg.lambda
            * c.as_slice()
                .iter()
                .zip(&self.weights)
                .map(|(v, w)| w * v.abs())
                .sum::<f64>()
    }

    fn point(&self, c: CoefficientTree) -> Result<Point> {
        let eval = self.model.evaluate_full(&c)?;
        let a = dwt_forward(&eval.output, &self.model.basis)?;
        let r = a.sub(&self.obs.y);
        let smooth = r.dot(&r);
        let total = smooth + self.penalty(&c);
        Ok(Point {
            c,
            eval,
            smooth,
            total,
        })
    }

    /// Gradient of the smooth part, `2 Jᵀ(G(c) − y)`.
    fn gradient(&self, p: &Point) -> Result<CoefficientTree> {
        let r = p.eval.output.sub(&self.y_grid);
        Ok(self.model.gradient_from(&p.eval, &r)?.scaled(2.0))
    }

    /// Largest eigenvalue of the preconditioned Gauss–Newton Hessian
    /// `2 P^{1/2} JᵀJ P^{1/2}` by power iteration.
    fn curvature(&self, p: &Point) -> Result<f64> {
        let mut rng = seeding::stream_rng(0x5eed, 0);
        let sqrt_p: Vec<f64> = self.precond.iter().map(|v| v.sqrt()).collect();
        let mut v = CoefficientTree::from_vec(
            &self.model.basis,
            (0..self.precond.len())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect(),
        )?;
        v = v.scaled(1.0 / v.l2_norm());
        let mut lambda = 0.0;
        for _ in 0..12 {
            let scaled = mul(&v, &sqrt_p);
            let jv = self.model.linearized(&p.c, &scaled)?;
            let w = mul(&self.model.gradient_from(&p.eval, &jv)?, &sqrt_p).scaled(2.0);
            let norm = w.l2_norm();
            if norm == 0.0 {
                break;
            }
            let prev = lambda;
            lambda = norm;
            v = w.scaled(1.0 / norm);
            if (lambda - prev).abs() <= 1e-6 * lambda {
                break;
            }
        }
        Ok(lambda)
    }

    fn prox(&self, x: &CoefficientTree, grad: &CoefficientTree, t: f64) -> Result<CoefficientTree> {
        let data: Vec<f64> = x
            .as_slice()
            .iter()
            .zip(grad.as_slice())
            .zip(self.precond.iter().zip(&self.weights))
            .map(|((&xi, &gi), (&p, &w))| {
                soft_threshold(xi - t * p * gi, t * p * self.cfg.lambda * w)
            })
            .collect();
        let c = CoefficientTree::from_vec(&self.model.basis, data)?;
        Ok(match self.cfg.ball_radius {
            Some(r) => project_weighted_l1(&c, &self.weights, &self.precond, r),
            None => c,
        })
    }

    /// Quadratic upper model of the smooth part at `y`, evaluated at `z`.
    fn majorizer(&self, y: &Point, grad: &CoefficientTree, z: &CoefficientTree, t: f64) -> f64 {
        let mut lin = 0.0;
        let mut quad = 0.0;
        for ((&zi, &yi), (&gi, &p)) in z
            .as_slice()
            .iter()
            .zip(y.c.as_slice())
            .zip(grad.as_slice().iter().zip(&self.precond))
        {
            let d = zi - yi;
            lin += gi * d;
            quad += d * d / p;
        }
        y.smooth + lin + quad / (2.0 * t)
    }
}

fn mul(c: &CoefficientTree, s: &[f64]) -> CoefficientTree {
    let mut out = c.clone();
    for (v, w) in out.as_mut_slice().iter_mut().zip(s) {
        *v *= w;
    }
    out
}

/// Projection onto `Σ w_i |c_i| ≤ r` in the metric `Σ (·)²/p_i`: a soft
/// threshold `θ p_i w_i` with `θ` found by bisection.
fn project_weighted_l1(c: &CoefficientTree, w: &[f64], p: &[f64], r: f64) -> CoefficientTree {
    let norm = |theta: f64| -> f64 {
        c.as_slice()
            .iter()
            .zip(w.iter().zip(p))
            .map(|(&x, (&wi, &pi))| wi * (x.abs() - theta * pi * wi).max(0.0))
            .sum()
    };
    if norm(0.0) <= r {
        return c.clone();
    }
    let mut hi = c
        .as_slice()
        .iter()
        .zip(w.iter().zip(p))
        .map(|(&x, (&wi, &pi))| x.abs() / (pi * wi))
        .fold(0.0, f64::max);
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut out = c.clone();
    for ((v, &wi), &pi) in out.as_mut_slice().iter_mut().zip(w).zip(p) {
        *v = soft_threshold(*v, hi * pi * wi);
    }
    out
}

/// Maximizes the penalized objective from a single starting point.
///
/// Non-convergence within `max_iters` is reported through `converged = false`
/// with the best iterate, not as an error.
pub fn solve_map(
    obs: &Observation,
    model: &ForwardModel,
    cfg: &PlsConfig,
    init: &CoefficientTree,
) -> Result<EstimateReport> {
    let prob = Problem::new(obs, model, cfg)?;
    init.check_basis(&model.basis)?;
    let init = match cfg.ball_radius {
        Some(r) => project_weighted_l1(init, &prob.weights, &prob.precond, r),
        None => init.clone(),
    };
    let mut x = prob.point(init)?;
    let curvature = prob.curvature(&x)?;
    let mut step = if curvature > 0.0 {
        1.0 / curvature
    } else {
        1.0
    };
    let min_step = step * 1e-14;

    let mut y = prob.point(x.c.clone())?;
    let mut momentum = 1.0f64;
    let yy = obs.y.dot(&obs.y);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let grad = prob.gradient(&y)?;
        let z = loop {
            let cand = prob.prox(&y.c, &grad, step)?;
            match (cfg.step, prob.point(cand)) {
                (StepRule::Fixed, Ok(z)) => break Some(z),
                (StepRule::Backtracking, Ok(z)) => {
                    let bound = prob.majorizer(&y, &grad, &z.c, step);
                    if z.smooth <= bound + 1e-12 * (bound.abs() + y.smooth.abs()) {
                        break Some(z);
                    }
                }
                (_, Err(Error::Domain(_))) => {}
                (_, Err(e)) => return Err(e),
            }
            step *= 0.5;
            if step < min_step {
                break None;
            }
        };
        let Some(z) = z else {
            log::warn!("step size underflow after {iterations} iterations");
            break;
        };
        if cfg.step == StepRule::Backtracking {
            // Curvature varies along the path; let the step recover.
            step *= 1.25;
        }

        let change = (z.total - x.total).abs();
        let scale = z.total.abs().max(x.total.abs());
        let done = change <= cfg.tol * scale;
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        if z.total <= x.total {
            let extrap = z.c.axpy((momentum - 1.0) / next_momentum, &z.c.sub(&x.c));
            x = z;
            momentum = next_momentum;
            y = prob.point(extrap).or_else(|_| prob.point(x.c.clone()))?;
        } else {
            // Momentum overshoot: restart from the best iterate.
            momentum = 1.0;
            y = prob.point(x.c.clone())?;
        }
        trace.push(yy - x.total);
        if done {
            converged = true;
            break;
        }
    }

    let objective = pls_objective(obs, model, &x.c, cfg)?;
    Ok(EstimateReport {
        estimate: x.c,
        objective,
        tau_sq: None,
        iterations,
        converged,
        restart: 0,
        trace,
    })
}

/// Runs [`solve_map`] from every start and keeps the best objective.
pub fn solve_map_multistart(
    obs: &Observation,
    model: &ForwardModel,
    cfg: &PlsConfig,
    inits: &[CoefficientTree],
) -> Result<EstimateReport> {
    let mut best: Option<EstimateReport> = None;
    let mut first_err = None;
    for (i, init) in inits.iter().enumerate() {
        match solve_map(obs, model, cfg, init) {
            Ok(mut r) => {
                r.restart = i;
                if best.as_ref().is_none_or(|b| r.objective > b.objective) {
                    best = Some(r);
                }
            }
            Err(e) => {
                log::warn!("start {i} failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some(r), _) => Ok(r),
        (None, Some(e)) => Err(e),
        (None, None) => Err(invalid("solve_map_multistart needs at least one start")),
    }
}
