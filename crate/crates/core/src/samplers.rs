//! Constrained sampling from the prior restricted to `{g > lambda*}`: the
//! engine's replenishment primitive.
//!
//! Every sampler returns a point whose surrogate level is strictly above the
//! threshold. All randomness flows through caller-owned RNG state, so
//! identical seed and config give identical output.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Position, Problem};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("rejection budget exhausted after {tries} tries at threshold {threshold}")]
    RejectionExhausted { tries: usize, threshold: f64 },
    #[error("no strict survivor above threshold {threshold}; cannot start a chain")]
    NoStrictSurvivor { threshold: f64 },
    #[error("sampler requires {0}")]
    Unsupported(&'static str),
}

/// Sampler tag plus parameters, as configured through the engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerConfig {
    /// Random-walk Metropolis with Gaussian proposals, accepting on the
    /// prior-density ratio and the constraint indicator.
    Rwm {
        steps: usize,
        /// Defaults to half the per-coordinate prior standard deviation
        /// where computable, else 0.5.
        step_size: Option<f64>,
    },
    /// Preconditioned Crank-Nicolson: prior-invariant for i.i.d. standard
    /// Gaussian increment priors, so acceptance reduces to the constraint.
    Pcn { steps: usize, beta: f64 },
    /// Unconditional prior draws until the constraint holds.
    Rejection { max_tries: usize },
    /// Univariate slice sampling with stepping-out on the prior density
    /// intersected with the constraint.
    Slice1d { updates: usize, initial_width: f64 },
}

impl SamplerConfig {
    pub fn default_rwm() -> Self {
        SamplerConfig::Rwm {
            steps: 20,
            step_size: None,
        }
    }

    pub fn default_slice() -> Self {
        SamplerConfig::Slice1d {
            updates: 10,
            initial_width: 1.0,
        }
    }
}

/// Threshold, survivors, and proposal budget for one replenishment call.
pub struct ConstraintContext<'a> {
    pub threshold: f64,
    pub live: &'a [(Position, f64)],
    pub budget: usize,
}

/// A constrained draw plus a degenerate-chain flag (no proposal was ever
/// accepted within the budget; the returned point is the chain's start).
#[derive(Debug)]
pub struct SampleOutcome {
    pub position: Position,
    pub level: f64,
    pub degenerate: bool,
}

pub fn sample(
    problem: &dyn Problem,
    config: SamplerConfig,
    ctx: &ConstraintContext,
    rng: &mut ChaCha8Rng,
) -> Result<SampleOutcome, SamplerError> {
    match config {
        SamplerConfig::Rwm { steps, step_size } => {
            let step = step_size.unwrap_or_else(|| problem.prior_std().unwrap_or(1.0) * 0.5);
            sample_rwm(problem, ctx, steps, step, rng)
        }
        SamplerConfig::Pcn { steps, beta } => sample_pcn(problem, ctx, steps, beta, rng),
        SamplerConfig::Rejection { max_tries } => sample_rejection(problem, ctx, max_tries, rng),
        SamplerConfig::Slice1d {
            updates,
            initial_width,
        } => sample_slice_1d(problem, ctx, updates, initial_width, rng),
    }
}

fn pick_strict_survivor<'a>(
    ctx: &'a ConstraintContext,
    rng: &mut ChaCha8Rng,
) -> Result<&'a (Position, f64), SamplerError> {
    let strict: Vec<&(Position, f64)> = ctx
        .live
        .iter()
        .filter(|&&(_, level)| level > ctx.threshold)
        .collect();
    if strict.is_empty() {
        return Err(SamplerError::NoStrictSurvivor {
            threshold: ctx.threshold,
        });
    }
    Ok(strict[rng.gen_range(0..strict.len())])
}

/// Random-walk Metropolis on a real-vector space: Gaussian perturbations,
/// accepted by prior-density ratio AND constraint indicator. Consumes
/// exactly `steps` proposals.
pub fn sample_rwm(
    problem: &dyn Problem,
    ctx: &ConstraintContext,
    steps: usize,
    step_size: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SampleOutcome, SamplerError> {
    let start = pick_strict_survivor(ctx, rng)?;
    let mut current = start.0.clone();
    let mut current_level = start.1;
    let mut current_log_density = problem
        .log_prior_density(&current)
        .ok_or(SamplerError::Unsupported("an evaluable prior density"))?;
    let mut accepted_any = false;

    for _ in 0..steps {
        let proposal = match &current {
            Position::Vector(v) => {
                let perturbed: Vec<f64> = v
                    .iter()
                    .map(|&x| x + step_size * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Position::Vector(perturbed)
            }
            Position::Walk(_) => return Err(SamplerError::Unsupported("a real-vector space")),
        };
        let log_density = match problem.log_prior_density(&proposal) {
            Some(d) => d,
            None => continue,
        };
        let accept_prob = (log_density - current_log_density).exp();
        if rng.gen::<f64>() < accept_prob {
            let level = problem.surrogate(&proposal);
            if level > ctx.threshold {
                current = proposal;
                current_level = level;
                current_log_density = log_density;
                accepted_any = true;
            }
        }
    }
    Ok(SampleOutcome {
        position: current,
        level: current_level,
        degenerate: !accepted_any,
    })
}

/// Preconditioned Crank-Nicolson: `x' = sqrt(1 - beta^2) x + beta w` with
/// fresh Gaussian `w`. The proposal is prior-invariant, so acceptance is
/// the constraint indicator alone. `beta = 1` is independent resampling.
pub fn sample_pcn(
    problem: &dyn Problem,
    ctx: &ConstraintContext,
    steps: usize,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SampleOutcome, SamplerError> {
    if !problem.gaussian_increment_prior() {
        return Err(SamplerError::Unsupported(
            "an i.i.d. standard-Gaussian increment prior",
        ));
    }
    let start = pick_strict_survivor(ctx, rng)?;
    let mut current = match &start.0 {
        Position::Vector(v) => v.clone(),
        Position::Walk(_) => return Err(SamplerError::Unsupported("a real-vector space")),
    };
    let mut current_level = start.1;
    let mut accepted_any = false;
    let keep = (1.0 - beta * beta).max(0.0).sqrt();

    for _ in 0..steps {
        let proposal: Vec<f64> = current
            .iter()
            .map(|&x| keep * x + beta * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let pos = Position::Vector(proposal);
        let level = problem.surrogate(&pos);
        if level > ctx.threshold {
            current = match pos {
                Position::Vector(v) => v,
                Position::Walk(_) => unreachable!(),
            };
            current_level = level;
            accepted_any = true;
        }
    }
    Ok(SampleOutcome {
        position: Position::Vector(current),
        level: current_level,
        degenerate: !accepted_any,
    })
}

/// Unconditional prior draws until `g > lambda*`. Hard error when the
/// budget runs out: the constraint is too rare for rejection and the caller
/// should switch samplers.
pub fn sample_rejection(
    problem: &dyn Problem,
    ctx: &ConstraintContext,
    max_tries: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SampleOutcome, SamplerError> {
    for _ in 0..max_tries {
        let position = problem.sample_prior(rng);
        let level = problem.surrogate(&position);
        if level > ctx.threshold {
            return Ok(SampleOutcome {
                position,
                level,
                degenerate: false,
            });
        }
    }
    Err(SamplerError::RejectionExhausted {
        tries: max_tries,
        threshold: ctx.threshold,
    })
}

/// Univariate slice sampling on the prior density intersected with the
/// constraint. The constrained slice is an interval for the unimodal priors
/// this crate ships, so stepping out by doubling followed by shrinkage is
/// exact.
pub fn sample_slice_1d(
    problem: &dyn Problem,
    ctx: &ConstraintContext,
    updates: usize,
    initial_width: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SampleOutcome, SamplerError> {
    if problem.dimension() != Some(1) {
        return Err(SamplerError::Unsupported("a 1-D real sample space"));
    }
    let start = pick_strict_survivor(ctx, rng)?;
    let mut x = match &start.0 {
        Position::Vector(v) => v[0],
        Position::Walk(_) => return Err(SamplerError::Unsupported("a real-vector space")),
    };
    let mut level = start.1;

    // log density on the constrained support, -inf outside
    let constrained = |x: f64| -> (f64, f64) {
        let pos = Position::Vector(vec![x]);
        let g = problem.surrogate(&pos);
        if g > ctx.threshold {
            (problem.log_prior_density(&pos).unwrap_or(f64::NEG_INFINITY), g)
        } else {
            (f64::NEG_INFINITY, g)
        }
    };

    let mut made_update = false;
    for _ in 0..updates {
        let (log_fx, _) = constrained(x);
        if log_fx == f64::NEG_INFINITY {
            break; // start violated the constraint; cannot slice
        }
        let log_y = log_fx + rng.gen::<f64>().ln();

        // stepping out with doubling; valid for interval slices
        let u: f64 = rng.gen();
        let mut width = initial_width;
        let mut lo = x - width * u;
        let mut hi = lo + width;
        for _ in 0..128 {
            let grow_lo = constrained(lo).0 >= log_y;
            let grow_hi = constrained(hi).0 >= log_y;
            if !grow_lo && !grow_hi {
                break;
            }
            width *= 2.0;
            if grow_lo {
                lo -= width;
            }
            if grow_hi {
                hi += width;
            }
        }

        // shrinkage
        for _ in 0..256 {
            let cand = lo + rng.gen::<f64>() * (hi - lo);
            let (log_fc, g) = constrained(cand);
            if log_fc >= log_y {
                x = cand;
                level = g;
                made_update = true;
                break;
            }
            if cand < x {
                lo = cand;
            } else {
                hi = cand;
            }
        }
    }

    Ok(SampleOutcome {
        position: Position::Vector(vec![x]),
        level,
        degenerate: !made_update,
    })
}
