//! Domain data model: problems, surrogates, dead records, runs, contraction
//! schemes, and the line-delimited run serialization.

use std::io::{BufRead, Write};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::LogWeight;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("contraction parameters out of range: i = {i}, j = {j} (both must be >= 1)")]
    BadContractionParams { i: usize, j: usize },
    #[error("run serialization: {0}")]
    Io(#[from] std::io::Error),
    #[error("run serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("run file is missing its header line")]
    MissingHeader,
    #[error("unknown integrand {0:?}")]
    UnknownIntegrand(String),
}

/// A point in a problem's sample space. Real-vector problems (including SDE
/// driving noise and hypercube parameterizations) use `Vector`; lattice
/// random walks use `Walk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Position {
    Vector(Vec<f64>),
    Walk(Vec<(u16, u16)>),
}

impl Position {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Position::Vector(v) => Some(v),
            Position::Walk(_) => None,
        }
    }

    pub fn as_walk(&self) -> Option<&[(u16, u16)]> {
        match self {
            Position::Walk(w) => Some(w),
            Position::Vector(_) => None,
        }
    }
}

/// One benchmark instance: a prior sampler, a level-set surrogate, the named
/// integrands it supports, and the rare-event threshold.
///
/// Every integrand must be a monotone function of the surrogate (a level-set
/// surrogate companion); this is declared by construction, not checked at
/// runtime.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    /// One unconditional draw from the prior.
    fn sample_prior(&self, rng: &mut ChaCha8Rng) -> Position;

    /// The level-set surrogate g.
    fn surrogate(&self, position: &Position) -> f64;

    /// Names of the declared integrands, primary first.
    fn integrand_names(&self) -> Vec<String>;

    /// Evaluate a declared integrand at a position.
    fn integrand(&self, name: &str, position: &Position) -> Result<f64, ModelError>;

    /// Rare-event threshold kappa; the event is `{g > kappa}`.
    fn event_threshold(&self) -> f64;

    /// Dimension of the real-vector sample space, if it has one.
    fn dimension(&self) -> Option<usize>;

    /// Log prior density on the real-vector space, up to a constant.
    /// `None` for problems without a tractable density (walk spaces).
    fn log_prior_density(&self, _position: &Position) -> Option<f64> {
        None
    }

    /// Per-coordinate prior standard deviation, where computable. Used for
    /// the random-walk-Metropolis step-size default.
    fn prior_std(&self) -> Option<f64> {
        None
    }

    /// True when the prior is an i.i.d. standard-Gaussian increment vector,
    /// which makes the preconditioned Crank-Nicolson proposal prior-invariant.
    fn gaussian_increment_prior(&self) -> bool {
        false
    }

    /// Scalar statistic s(x) for moments and CDF tables. Defaults to the
    /// first coordinate of a vector position.
    fn statistic(&self, position: &Position) -> Option<f64> {
        position.as_vector().and_then(|v| v.first().copied())
    }
}

/// A removed live point: its surrogate level, 1-based index in the dead
/// list, and how many particles shared this minimum level when removed.
///
/// `tie_group` is stored explicitly; reconstructing it from floating-point
/// level equality after the fact is fragile, and plateau multiplicity drives
/// the `e^{-n/J}` contraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeadRecord {
    pub iteration: usize,
    pub tie_group: usize,
    pub level: f64,
    pub position: Position,
}

/// Rule mapping the iteration index i (and live count J) to the log
/// prior-mass weight `log xi_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionScheme {
    /// `xi_i = (1 - e^{-1/J}) e^{-(i-1)/J}`; the default.
    Exponential,
    /// `xi_i = J^{i-1}/(J+1)^i`, the Beta(J,1) mean contraction.
    BetaMean,
}

impl Default for ContractionScheme {
    fn default() -> Self {
        ContractionScheme::Exponential
    }
}

/// `log xi_i` for the scheme; `sum_{i<=K} xi_i < 1` for all finite K.
pub fn contraction_log_weight(
    scheme: ContractionScheme,
    i: usize,
    j: usize,
) -> Result<LogWeight, ModelError> {
    if i == 0 || j == 0 {
        return Err(ModelError::BadContractionParams { i, j });
    }
    let j_f = j as f64;
    let log_xi = match scheme {
        ContractionScheme::Exponential => {
            (-(-1.0 / j_f).exp()).ln_1p() - (i as f64 - 1.0) / j_f
        }
        ContractionScheme::BetaMean => {
            (i as f64 - 1.0) * j_f.ln() - (i as f64) * (j_f + 1.0).ln()
        }
    };
    Ok(LogWeight(log_xi))
}

/// `log(1 - sum_{i<=K} xi_i)`: the prior mass not yet consumed after K
/// removals. Exact closed forms; `-K/J` for the exponential scheme.
pub fn remaining_log_mass(scheme: ContractionScheme, consumed: usize, j: usize) -> LogWeight {
    let j_f = j as f64;
    let k = consumed as f64;
    let log_rem = match scheme {
        ContractionScheme::Exponential => -k / j_f,
        ContractionScheme::BetaMean => k * (j_f.ln() - (j_f + 1.0).ln()),
    };
    LogWeight(log_rem)
}

/// Why the sample-generation loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    BudgetExhausted,
    RemainingMassNegligible,
    /// All live particles were tied at the supremum of the surrogate;
    /// nothing lies strictly above, so the level-set ascent is complete.
    LevelSetExhausted,
}

/// The reusable output of the sampling loop: the ordered dead list plus
/// everything needed to replay the quadrature against any level-set
/// surrogate companion integrand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsRun {
    pub problem_name: String,
    pub live_count: usize,
    pub max_dead: usize,
    pub scheme: ContractionScheme,
    pub seed: u64,
    pub termination_reason: TerminationReason,
    #[serde(default)]
    pub degenerate_chain_warnings: usize,
    pub dead: Vec<DeadRecord>,
    pub final_live: Vec<(Position, f64)>,
}

/// Header object for the line-delimited run format. One `DeadRecord` per
/// subsequent line, field order fixed: iteration, tie_group, level, position.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunHeader {
    problem_name: String,
    live_count: usize,
    max_dead: usize,
    scheme: ContractionScheme,
    seed: u64,
    termination_reason: TerminationReason,
    #[serde(default)]
    degenerate_chain_warnings: usize,
    dead_count: usize,
    final_live: Vec<(Position, f64)>,
}

impl NsRun {
    /// Nestedness check: dead levels non-decreasing, iteration indices
    /// contiguous from 1, levels equal within each tie group.
    pub fn check_invariants(&self) -> bool {
        let mut prev_level = f64::NEG_INFINITY;
        for (idx, rec) in self.dead.iter().enumerate() {
            if rec.iteration != idx + 1 || rec.level < prev_level {
                return false;
            }
            prev_level = rec.level;
        }
        let max_dead_level = prev_level;
        self.final_live
            .iter()
            .all(|&(_, level)| level >= max_dead_level)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), ModelError> {
        let header = RunHeader {
            problem_name: self.problem_name.clone(),
            live_count: self.live_count,
            max_dead: self.max_dead,
            scheme: self.scheme,
            seed: self.seed,
            termination_reason: self.termination_reason,
            degenerate_chain_warnings: self.degenerate_chain_warnings,
            dead_count: self.dead.len(),
            final_live: self.final_live.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for rec in &self.dead {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, ModelError> {
        let mut lines = input.lines();
        let header_line = lines.next().ok_or(ModelError::MissingHeader)??;
        let header: RunHeader = serde_json::from_str(&header_line)?;
        let mut dead = Vec::with_capacity(header.dead_count);
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            dead.push(serde_json::from_str(&line)?);
        }
        Ok(NsRun {
            problem_name: header.problem_name,
            live_count: header.live_count,
            max_dead: header.max_dead,
            scheme: header.scheme,
            seed: header.seed,
            termination_reason: header.termination_reason,
            degenerate_chain_warnings: header.degenerate_chain_warnings,
            dead,
            final_live: header.final_live,
        })
    }
}
