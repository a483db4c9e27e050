//! Seeded multi-restart search over deterministic protocols.
//!
//! Each restart runs a simultaneous-perturbation ascent: probe `x ± cΔ` along
//! a random sign vector `Δ`, step along the better side plus a fraction of the
//! last accepted move, and keep whichever of the three points is best. The
//! step grows on success and shrinks geometrically on failure. Results are
//! reproducible from the seed, and restarts run in parallel with a fixed
//! reduction order.

mod param;

pub use param::{
    generator_len, hermitian_from_params, mu_from_params, params_from_hermitian, unitary_generator,
    Measurement, ProtocolParameterization,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::protocol::{AncillaResource, ResourceProtocol};
use crate::qmath::seeded_rng;

const GROW: f64 = 1.2;
const SHRINK: f64 = 0.7;
/// Weight of the last accepted displacement in the next move.
const MOMENTUM: f64 = 0.9;
/// Probe distance relative to the step.
const PROBE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimizationConfig {
    /// Objective evaluations allowed per restart.
    pub evaluation_budget: usize,
    pub restarts: usize,
    pub seed: u64,
    #[serde(default = "default_step")]
    pub step_init: f64,
    #[serde(default = "default_stop")]
    pub stop_delta: f64,
    /// Hold `μ` at the base parameterization's value.
    #[serde(default)]
    pub fix_mu: bool,
    /// Start restart 0 from the base parameters instead of a random point.
    #[serde(default)]
    pub warm_start: bool,
}

fn default_step() -> f64 {
    0.5
}

fn default_stop() -> f64 {
    1e-9
}

impl OptimizationConfig {
    pub fn new(evaluation_budget: usize, restarts: usize, seed: u64) -> Self {
        OptimizationConfig {
            evaluation_budget,
            restarts,
            seed,
            step_init: default_step(),
            stop_delta: default_stop(),
            fix_mu: false,
            warm_start: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::OutOfRange("restarts must be at least 1".into()));
        }
        if self.evaluation_budget == 0 {
            return Err(Error::OutOfRange("evaluationBudget must be at least 1".into()));
        }
        if !(self.step_init.is_finite() && self.step_init > 0.0) {
            return Err(Error::OutOfRange(format!("stepInit must be positive, got {}", self.step_init)));
        }
        if !(self.stop_delta.is_finite() && self.stop_delta >= 0.0) {
            return Err(Error::OutOfRange(format!("stopDelta must be non-negative, got {}", self.stop_delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimizationResult {
    pub best_fidelity: f64,
    pub best_residual: f64,
    pub best_parameters: ProtocolParameterization,
    #[serde(with = "crate::io::protocol_serde")]
    pub best_protocol: ResourceProtocol,
    pub per_restart_bests: Vec<f64>,
    pub evaluations_used: usize,
    pub seed: u64,
    pub budget: usize,
    pub restarts: usize,
    /// Some restart spent its whole allocation before converging.
    pub budget_exhausted: bool,
    /// Best-so-far fidelity after each evaluation, per restart.
    pub traces: Vec<Vec<f64>>,
}

struct RestartOutcome {
    best: f64,
    params: ProtocolParameterization,
    used: usize,
    exhausted: bool,
    trace: Vec<f64>,
}

/// Generator private to one restart.
fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(restart as u64);
    rng
}

fn run_restart(
    ch: &KrausChannel,
    start: ProtocolParameterization,
    allocation: usize,
    cfg: &OptimizationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RestartOutcome> {
    let eval = |x: &[f64], template: &ProtocolParameterization| -> Result<f64> {
        let mut p = template.clone();
        p.set_free(x);
        p.objective(ch)
    };
    let mut current = start.free();
    let mut best = start.objective(ch)?;
    let mut used = 1;
    let mut trace = vec![best];
    let mut step = cfg.step_init;
    let dim = current.len();
    let mut velocity = vec![0.0; dim];
    let mut converged = dim == 0;
    while used < allocation && !converged {
        if best >= 1.0 - cfg.stop_delta || step < cfg.stop_delta {
            converged = true;
            break;
        }
        let delta: Vec<f64> = (0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let probe = PROBE * step;
        let shifted = |scale: f64| -> Vec<f64> { current.iter().zip(&delta).map(|(x, d)| x + scale * d).collect() };
        let mut candidates = Vec::with_capacity(3);
        let plus = shifted(probe);
        let f_plus = eval(&plus, &start)?;
        used += 1;
        trace.push(best.max(f_plus));
        candidates.push((f_plus, plus));
        if used < allocation {
            let minus = shifted(-probe);
            let f_minus = eval(&minus, &start)?;
            used += 1;
            trace.push(trace.last().copied().unwrap_or(best).max(f_minus));
            let direction = if f_plus >= f_minus { step } else { -step };
            candidates.push((f_minus, minus));
            if used < allocation {
                let moved: Vec<f64> = current
                    .iter()
                    .zip(&delta)
                    .zip(&velocity)
                    .map(|((x, d), v)| x + direction * d + MOMENTUM * v)
                    .collect();
                let f_moved = eval(&moved, &start)?;
                used += 1;
                trace.push(trace.last().copied().unwrap_or(best).max(f_moved));
                candidates.push((f_moved, moved));
            }
        }
        let (f_new, x_new) = candidates
            .into_iter()
            .fold(None::<(f64, Vec<f64>)>, |acc, c| match acc {
                Some(a) if a.0 >= c.0 => Some(a),
                _ => Some(c),
            })
            .expect("at least one candidate");
        if f_new > best {
            best = f_new;
            velocity = x_new.iter().zip(&current).map(|(a, b)| a - b).collect();
            current = x_new;
            step *= GROW;
        } else {
            velocity.iter_mut().for_each(|v| *v *= SHRINK);
            step *= SHRINK;
        }
    }
    if !converged && (best >= 1.0 - cfg.stop_delta || step < cfg.stop_delta) {
        converged = true;
    }
    let mut params = start;
    params.set_free(&current);
    Ok(RestartOutcome {
        best,
        params,
        used,
        exhausted: !converged,
        trace,
    })
}

/// Maximizes entanglement fidelity through `ch` over the family spanned by `base`.
pub fn optimize(ch: &KrausChannel, base: &ProtocolParameterization, cfg: &OptimizationConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    if ch.dim() != base.n {
        return Err(Error::dims(base.n, ch.dim()));
    }
    let mut base = base.clone();
    if cfg.fix_mu && base.mu_fixed.is_none() {
        let mu = base.resource()?.mu().to_vec();
        base = base.with_mu_fixed(Some(mu))?;
    }
    base.decode()?;
    let outcomes = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(cfg.seed, r);
            let start = if r == 0 && cfg.warm_start { base.clone() } else { base.randomized(&mut rng) };
            run_restart(ch, start, cfg.evaluation_budget, cfg, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let winner = outcomes
        .iter()
        .enumerate()
        .fold(0, |w, (r, o)| if o.best > outcomes[w].best { r } else { w });
    let best = &outcomes[winner];
    let protocol = best.params.decode()?;
    let best_residual = protocol.residual(ch)?;
    Ok(OptimizationResult {
        best_fidelity: best.best,
        best_residual,
        best_parameters: best.params.clone(),
        best_protocol: protocol,
        per_restart_bests: outcomes.iter().map(|o| o.best).collect(),
        evaluations_used: outcomes.iter().map(|o| o.used).sum(),
        seed: cfg.seed,
        budget: cfg.evaluation_budget,
        restarts: cfg.restarts,
        budget_exhausted: outcomes.iter().any(|o| o.exhausted),
        traces: outcomes.into_iter().map(|o| o.trace).collect(),
    })
}

/// One row of an entanglement sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub theta: f64,
    pub sum_mu: f64,
    pub best_fidelity: f64,
    pub seed: u64,
}

/// Best fidelity found with `μ = (cos θ, sin θ)` held fixed, for each `θ`.
/// `base` must have `P = 2`; its generators seed restart 0 when warm-starting.
pub fn sweep_mu(ch: &KrausChannel, thetas: &[f64], base: &ProtocolParameterization, cfg: &OptimizationConfig) -> Result<Vec<SweepRow>> {
    if base.p != 2 {
        return Err(Error::dims(2, base.p));
    }
    thetas
        .iter()
        .map(|&theta| {
            let resource = AncillaResource::angle(theta)?;
            let params = base.clone().with_mu_fixed(Some(resource.mu().to_vec()))?;
            let result = optimize(ch, &params, cfg)?;
            Ok(SweepRow {
                theta,
                sum_mu: resource.sum(),
                best_fidelity: result.best_fidelity,
                seed: cfg.seed,
            })
        })
        .collect()
}
