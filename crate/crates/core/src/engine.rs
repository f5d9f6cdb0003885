//! The modified nested-sampling loop: live-set evolution, plateau tie
//! removal, dead-record accumulation. All live particles sharing the
//! current minimum level die together in one tie group, and the iteration
//! counter advances once per removed particle, so a tie of size n consumes
//! n contraction factors (`e^{-n/J}` total under the exponential scheme).
//!
//! Quadrature is deferred to `estimators`; the engine's output is the
//! ordered dead list.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    remaining_log_mass, ContractionScheme, DeadRecord, NsRun, Position, Problem,
    TerminationReason,
};
use crate::numerics::log_add_exp;
use crate::samplers::{sample, sample_rejection, ConstraintContext, SamplerConfig, SamplerError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("live count and iteration budget must both be >= 1")]
    BadConfig,
    #[error("replenishment failed at threshold {threshold}: {source}")]
    SamplerFailure {
        threshold: f64,
        source: SamplerError,
        /// The run accumulated so far; flagged invalid, kept for diagnosis.
        partial: Box<NsRun>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EngineConfig {
    /// J, the live-particle count.
    pub live_count: usize,
    /// N, the dead-sample budget. A tie batch straddling the budget is
    /// completed, so the dead count may exceed N by at most J - 1.
    pub max_dead: usize,
    pub scheme: ContractionScheme,
    pub sampler: SamplerConfig,
    pub seed: u64,
    /// 0 disables the early stop.
    pub termination_epsilon: f64,
    /// Tie detection tolerance; 0 means exact floating-point equality.
    pub level_equality_tolerance: f64,
    /// Budget for the rejection fallback when no strict survivor exists.
    pub rejection_fallback_tries: usize,
    /// Replenish slots on multiple threads. Results are identical either
    /// way: each slot draws from its own RNG stream.
    pub parallel_replenish: bool,
}

impl EngineConfig {
    pub fn new(live_count: usize, max_dead: usize, sampler: SamplerConfig, seed: u64) -> Self {
        EngineConfig {
            live_count,
            max_dead,
            scheme: ContractionScheme::Exponential,
            sampler,
            seed,
            termination_epsilon: 0.0,
            level_equality_tolerance: 0.0,
            rejection_fallback_tries: 1_000_000,
            parallel_replenish: false,
        }
    }
}

/// RNG stream for one (run, batch, slot) triple. Batch 0 is the initial
/// prior draw; replenishment for the batch removed at outer step b uses
/// streams (b, slot).
fn stream_rng(seed: u64, batch: u64, slot: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&batch.to_le_bytes());
    key[16..24].copy_from_slice(&slot.to_le_bytes());
    key[24..32].copy_from_slice(&0x6e73_7175_6164u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Progress event emitted once per removed batch.
#[derive(Debug, Clone)]
pub struct BatchEvent {
    pub iteration: usize,
    pub level: f64,
    pub tie_group: usize,
    pub log_remaining_mass: f64,
}

/// Run the sample-generation loop on a problem.
pub fn run(problem: &dyn Problem, config: &EngineConfig) -> Result<NsRun, EngineError> {
    run_with_progress(problem, config, |_| {})
}

pub fn run_with_progress(
    problem: &dyn Problem,
    config: &EngineConfig,
    mut on_batch: impl FnMut(&BatchEvent),
) -> Result<NsRun, EngineError> {
    if config.live_count == 0 || config.max_dead == 0 {
        return Err(EngineError::BadConfig);
    }
    let j = config.live_count;
    let primary = problem
        .integrand_names()
        .first()
        .cloned()
        .unwrap_or_default();

    let mut live: Vec<(Position, f64)> = (0..j)
        .map(|slot| {
            let mut rng = stream_rng(config.seed, 0, slot as u64);
            let position = problem.sample_prior(&mut rng);
            let level = problem.surrogate(&position);
            (position, level)
        })
        .collect();

    let mut dead: Vec<DeadRecord> = Vec::with_capacity(config.max_dead);
    let mut warnings = 0usize;
    let mut log_partial_evidence = f64::NEG_INFINITY;
    let mut termination = TerminationReason::BudgetExhausted;
    let mut batch_index = 0u64;

    while dead.len() < config.max_dead {
        batch_index += 1;

        // remove every particle tied at the minimum level
        let level_min = live
            .iter()
            .map(|&(_, l)| l)
            .fold(f64::INFINITY, f64::min);
        let tol = config.level_equality_tolerance;
        let (tied, survivors): (Vec<_>, Vec<_>) = live
            .drain(..)
            .partition(|&(_, l)| l <= level_min + tol);
        live = survivors;
        let tie_group = tied.len();
        for (position, level) in tied {
            let iteration = dead.len() + 1;
            let log_xi = crate::model::contraction_log_weight(config.scheme, iteration, j)
                .expect("iteration and live count are positive")
                .value();
            let value = problem.integrand(&primary, &position).unwrap_or(0.0);
            if value > 0.0 {
                log_partial_evidence =
                    log_add_exp(log_partial_evidence, log_xi + value.ln());
            }
            dead.push(DeadRecord {
                iteration,
                tie_group,
                level,
                position,
            });
        }

        let log_remaining = remaining_log_mass(config.scheme, dead.len(), j).value();
        on_batch(&BatchEvent {
            iteration: dead.len(),
            level: level_min,
            tie_group,
            log_remaining_mass: log_remaining,
        });

        if dead.len() >= config.max_dead {
            termination = TerminationReason::BudgetExhausted;
            break;
        }

        // replenish to size J at threshold L*
        let needed = j - live.len();
        let has_strict_survivor = live.iter().any(|&(_, l)| l > level_min);
        if !has_strict_survivor {
            // full-plateau degenerate case: everything was tied; refill
            // entirely by rejection against the strict constraint
            let ctx = ConstraintContext {
                threshold: level_min,
                live: &live,
                budget: config.rejection_fallback_tries,
            };
            let mut refilled = Vec::with_capacity(needed);
            let mut exhausted = false;
            for slot in 0..needed {
                let mut rng = stream_rng(config.seed, batch_index, slot as u64);
                match sample_rejection(problem, &ctx, config.rejection_fallback_tries, &mut rng) {
                    Ok(out) => refilled.push((out.position, out.level)),
                    Err(SamplerError::RejectionExhausted { .. }) => {
                        // nothing above the plateau: the ascent is complete
                        exhausted = true;
                        break;
                    }
                    Err(err) => {
                        return Err(sampler_failure(
                            level_min, err, problem, config, dead, live, warnings,
                        ));
                    }
                }
            }
            if exhausted {
                termination = TerminationReason::LevelSetExhausted;
                break;
            }
            for pair in refilled {
                debug_assert!(pair.1 > level_min);
                live.push(pair);
            }
        } else {
            let (replenished, degenerate) = replenish(
                problem,
                config,
                &ConstraintContext {
                    threshold: level_min,
                    live: &live,
                    budget: config.rejection_fallback_tries,
                },
                batch_index,
                needed,
            )
            .map_err(|err| {
                sampler_failure(
                    level_min,
                    err,
                    problem,
                    config,
                    std::mem::take(&mut dead),
                    std::mem::take(&mut live),
                    warnings,
                )
            })?;
            warnings += degenerate;
            for pair in replenished {
                debug_assert!(
                    pair.1 > level_min,
                    "constraint safety: replenished level {} at threshold {}",
                    pair.1,
                    level_min
                );
                live.push(pair);
            }
        }

        if early_stop_check(
            config,
            log_remaining,
            log_partial_evidence,
            problem,
            &primary,
            &live,
        ) {
            termination = TerminationReason::RemainingMassNegligible;
            break;
        }
    }

    Ok(NsRun {
        problem_name: problem.name().to_string(),
        live_count: j,
        max_dead: config.max_dead,
        scheme: config.scheme,
        seed: config.seed,
        termination_reason: termination,
        degenerate_chain_warnings: warnings,
        dead,
        final_live: live,
    })
}

fn sampler_failure(
    threshold: f64,
    source: SamplerError,
    problem: &dyn Problem,
    config: &EngineConfig,
    dead: Vec<DeadRecord>,
    live: Vec<(Position, f64)>,
    warnings: usize,
) -> EngineError {
    EngineError::SamplerFailure {
        threshold,
        source,
        partial: Box::new(NsRun {
            problem_name: problem.name().to_string(),
            live_count: config.live_count,
            max_dead: config.max_dead,
            scheme: config.scheme,
            seed: config.seed,
            termination_reason: TerminationReason::BudgetExhausted,
            degenerate_chain_warnings: warnings,
            dead,
            final_live: live,
        }),
    }
}

/// Fill the live set back to size J with points strictly above the
/// threshold. Each slot draws from its own RNG stream, so the result does
/// not depend on execution order.
pub fn replenish(
    problem: &dyn Problem,
    config: &EngineConfig,
    ctx: &ConstraintContext,
    batch_index: u64,
    needed: usize,
) -> Result<(Vec<(Position, f64)>, usize), SamplerError> {
    let one_slot = |slot: usize| -> Result<(Position, f64, bool), SamplerError> {
        let mut rng = stream_rng(config.seed, batch_index, slot as u64);
        let out = sample(problem, config.sampler, ctx, &mut rng)?;
        Ok((out.position, out.level, out.degenerate))
    };

    let results: Vec<Result<(Position, f64, bool), SamplerError>> =
        if config.parallel_replenish && needed > 1 {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..needed)
                    .map(|slot| scope.spawn(move || one_slot(slot)))
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            })
        } else {
            (0..needed).map(one_slot).collect()
        };

    let mut out = Vec::with_capacity(needed);
    let mut degenerate = 0usize;
    for res in results {
        let (position, level, degen) = res?;
        if degen {
            degenerate += 1;
        }
        out.push((position, level));
    }
    Ok((out, degenerate))
}

/// True when the largest possible remaining contribution is negligible
/// against the evidence already accumulated:
/// `exp(remaining) * max live L <= epsilon * Z`, in log domain.
///
/// Fires unconditionally once the remaining mass underflows. While the
/// partial evidence is still zero the check stays off; stopping on the
/// degenerate `0 <= 0` comparison would end indicator-integrand runs
/// before the event is ever reached.
pub fn early_stop_check(
    config: &EngineConfig,
    log_remaining: f64,
    log_partial_evidence: f64,
    problem: &dyn Problem,
    primary: &str,
    live: &[(Position, f64)],
) -> bool {
    if config.termination_epsilon <= 0.0 {
        return false;
    }
    if log_remaining == f64::NEG_INFINITY {
        return true;
    }
    if log_partial_evidence == f64::NEG_INFINITY {
        return false;
    }
    let max_live = live
        .iter()
        .map(|(p, _)| problem.integrand(primary, p).unwrap_or(0.0))
        .fold(0.0f64, f64::max);
    if max_live <= 0.0 {
        return true;
    }
    log_remaining + max_live.ln()
        <= config.termination_epsilon.ln() + log_partial_evidence
}
