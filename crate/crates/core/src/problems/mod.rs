//! The benchmark problems: one-dimensional Gaussian/Cauchy tails, the
//! double-well diffusion, the loaded beam, the labyrinth walk, and the
//! synthetic plateau fixtures. Each ships with an analytic or brute-force
//! oracle used by the verification suites.

mod beam;
mod double_well;
mod labyrinth;

pub use beam::{beam_deflection, BeamProblem, BeamSpec};
pub use double_well::{simulate_double_well, DoubleWellProblem, DoubleWellSpec};
pub use labyrinth::{LabyrinthProblem, LabyrinthSpec};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::model::{ModelError, Position, Problem};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("plateau mass must lie in (0,1), got {0}")]
    BadPlateauMass(f64),
    #[error("unknown problem {0:?}")]
    UnknownProblem(String),
    #[error("labyrinth: {0}")]
    Labyrinth(String),
}

/// `log P(X > a)` for standard normal `X`, via the complementary error
/// function. `log P_6 ~= -20.74`.
pub fn gaussian_tail_log_prob(a: f64) -> f64 {
    (0.5 * erfc(a / std::f64::consts::SQRT_2)).ln()
}

/// `log P(X > a)` for standard Cauchy `X` and `a > 0`:
/// `log(arctan(1/a) / pi)`.
pub fn cauchy_tail_log_prob(a: f64) -> f64 {
    ((1.0 / a).atan() / std::f64::consts::PI).ln()
}

/// Standard normal prior, surrogate `g(x) = x`, rare event `{x > a}`.
pub struct GaussianProblem {
    pub threshold: f64,
}

pub fn gaussian_problem(a: f64) -> GaussianProblem {
    GaussianProblem { threshold: a }
}

impl Problem for GaussianProblem {
    fn name(&self) -> &str {
        "gaussian"
    }
    fn sample_prior(&self, rng: &mut ChaCha8Rng) -> Position {
        Position::Vector(vec![rng.sample(StandardNormal)])
    }
    fn surrogate(&self, position: &Position) -> f64 {
        position.as_vector().unwrap()[0]
    }
    fn integrand_names(&self) -> Vec<String> {
        vec!["indicator".into(), "identity".into()]
    }
    fn integrand(&self, name: &str, position: &Position) -> Result<f64, ModelError> {
        let x = position.as_vector().unwrap()[0];
        match name {
            "indicator" => Ok(if x > self.threshold { 1.0 } else { 0.0 }),
            "identity" => Ok(x),
            other => Err(ModelError::UnknownIntegrand(other.into())),
        }
    }
    fn event_threshold(&self) -> f64 {
        self.threshold
    }
    fn dimension(&self) -> Option<usize> {
        Some(1)
    }
    fn log_prior_density(&self, position: &Position) -> Option<f64> {
        let x = position.as_vector()?[0];
        Some(-0.5 * x * x)
    }
    fn prior_std(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Standard Cauchy prior, surrogate `g(x) = x`, rare event `{x > a}`.
pub struct CauchyProblem {
    pub threshold: f64,
}

pub fn cauchy_problem(a: f64) -> CauchyProblem {
    CauchyProblem { threshold: a }
}

impl Problem for CauchyProblem {
    fn name(&self) -> &str {
        "cauchy"
    }
    fn sample_prior(&self, rng: &mut ChaCha8Rng) -> Position {
        let u: f64 = rng.gen();
        Position::Vector(vec![(std::f64::consts::PI * (u - 0.5)).tan()])
    }
    fn surrogate(&self, position: &Position) -> f64 {
        position.as_vector().unwrap()[0]
    }
    fn integrand_names(&self) -> Vec<String> {
        vec!["indicator".into(), "identity".into()]
    }
    fn integrand(&self, name: &str, position: &Position) -> Result<f64, ModelError> {
        let x = position.as_vector().unwrap()[0];
        match name {
            "indicator" => Ok(if x > self.threshold { 1.0 } else { 0.0 }),
            "identity" => Ok(x),
            other => Err(ModelError::UnknownIntegrand(other.into())),
        }
    }
    fn event_threshold(&self) -> f64 {
        self.threshold
    }
    fn dimension(&self) -> Option<usize> {
        Some(1)
    }
    fn log_prior_density(&self, position: &Position) -> Option<f64> {
        let x = position.as_vector()?[0];
        Some(-(1.0 + x * x).ln())
    }
}

/// Uniform prior on `[0,1]`, surrogate `g(x) = x`. The no-plateau reference
/// problem for contraction statistics; the rare event is `{x > kappa}`.
pub struct UniformIdentityProblem {
    pub threshold: f64,
}

pub fn uniform_identity_problem(kappa: f64) -> UniformIdentityProblem {
    UniformIdentityProblem { threshold: kappa }
}

impl Problem for UniformIdentityProblem {
    fn name(&self) -> &str {
        "uniform"
    }
    fn sample_prior(&self, rng: &mut ChaCha8Rng) -> Position {
        Position::Vector(vec![rng.gen()])
    }
    fn surrogate(&self, position: &Position) -> f64 {
        position.as_vector().unwrap()[0]
    }
    fn integrand_names(&self) -> Vec<String> {
        vec!["identity".into(), "indicator".into(), "one".into()]
    }
    fn integrand(&self, name: &str, position: &Position) -> Result<f64, ModelError> {
        let x = position.as_vector().unwrap()[0];
        match name {
            "identity" => Ok(x),
            "indicator" => Ok(if x > self.threshold { 1.0 } else { 0.0 }),
            "one" => Ok(1.0),
            other => Err(ModelError::UnknownIntegrand(other.into())),
        }
    }
    fn event_threshold(&self) -> f64 {
        self.threshold
    }
    fn dimension(&self) -> Option<usize> {
        Some(1)
    }
    fn log_prior_density(&self, position: &Position) -> Option<f64> {
        let x = position.as_vector()?[0];
        Some(if (0.0..=1.0).contains(&x) {
            0.0
        } else {
            f64::NEG_INFINITY
        })
    }
    fn prior_std(&self) -> Option<f64> {
        Some((1.0f64 / 12.0).sqrt())
    }
}

/// Where the synthetic fixture puts its plateau.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateauLocation {
    MinPlateau,
    MaxPlateau,
}

/// Uniform prior on `[0,1]` with a mass-`delta` plateau at the surrogate's
/// minimum (`g(x) = max(x, delta)`) or maximum (`g(x) = min(x/(1-delta), 1)`).
pub struct PlateauFixture {
    pub delta: f64,
    pub location: PlateauLocation,
}

pub fn plateau_fixture(
    delta: f64,
    location: PlateauLocation,
) -> Result<PlateauFixture, ProblemError> {
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(ProblemError::BadPlateauMass(delta));
    }
    Ok(PlateauFixture { delta, location })
}

impl PlateauFixture {
    /// Analytic `int g dmu` used as the oracle.
    pub fn analytic_integral(&self) -> f64 {
        let d = self.delta;
        match self.location {
            // g = delta on [0, delta], then x: delta^2 + (1 - delta^2)/2
            PlateauLocation::MinPlateau => d * d + (1.0 - d * d) / 2.0,
            // g = x/(1-delta) on [0, 1-delta], then 1: (1-delta)/2 + delta
            PlateauLocation::MaxPlateau => (1.0 - d) / 2.0 + d,
        }
    }
}

impl Problem for PlateauFixture {
    fn name(&self) -> &str {
        match self.location {
            PlateauLocation::MinPlateau => "plateau-min",
            PlateauLocation::MaxPlateau => "plateau-max",
        }
    }
    fn sample_prior(&self, rng: &mut ChaCha8Rng) -> Position {
        Position::Vector(vec![rng.gen()])
    }
    fn surrogate(&self, position: &Position) -> f64 {
        let x = position.as_vector().unwrap()[0];
        match self.location {
            PlateauLocation::MinPlateau => x.max(self.delta),
            PlateauLocation::MaxPlateau => (x / (1.0 - self.delta)).min(1.0),
        }
    }
    fn integrand_names(&self) -> Vec<String> {
        vec!["surrogate".into(), "indicator".into()]
    }
    fn integrand(&self, name: &str, position: &Position) -> Result<f64, ModelError> {
        match name {
            "surrogate" => Ok(self.surrogate(position)),
            "indicator" => Ok(if self.surrogate(position) > self.event_threshold() {
                1.0
            } else {
                0.0
            }),
            other => Err(ModelError::UnknownIntegrand(other.into())),
        }
    }
    fn event_threshold(&self) -> f64 {
        match self.location {
            PlateauLocation::MinPlateau => self.delta,
            PlateauLocation::MaxPlateau => 0.5,
        }
    }
    fn dimension(&self) -> Option<usize> {
        Some(1)
    }
    fn log_prior_density(&self, position: &Position) -> Option<f64> {
        let x = position.as_vector()?[0];
        Some(if (0.0..=1.0).contains(&x) {
            0.0
        } else {
            f64::NEG_INFINITY
        })
    }
    fn prior_std(&self) -> Option<f64> {
        Some((1.0f64 / 12.0).sqrt())
    }
}

/// Parameters accepted by the by-name problem registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemParams {
    /// Rare-event threshold for the gaussian/cauchy/uniform problems.
    pub a: f64,
    /// Plateau mass for the plateau fixtures.
    pub delta: f64,
    pub plateau_location: PlateauLocation,
    /// Noise scale for the double well.
    pub sigma: f64,
    pub dt: f64,
    /// Labyrinth grid: side length of an open grid, or a map file.
    pub grid_size: usize,
    pub walk_len: usize,
    pub maze: Option<String>,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams {
            a: 6.0,
            delta: 0.3,
            plateau_location: PlateauLocation::MinPlateau,
            sigma: 0.7,
            dt: 0.01,
            grid_size: 12,
            walk_len: 100,
            maze: None,
        }
    }
}

/// Build a registered problem by name.
pub fn build_problem(
    name: &str,
    params: &ProblemParams,
) -> Result<Box<dyn Problem>, ProblemError> {
    match name {
        "gaussian" => Ok(Box::new(gaussian_problem(params.a))),
        "cauchy" => Ok(Box::new(cauchy_problem(params.a))),
        "uniform" => Ok(Box::new(uniform_identity_problem(params.a.min(1.0)))),
        "plateau" => Ok(Box::new(plateau_fixture(
            params.delta,
            params.plateau_location,
        )?)),
        "double-well" => Ok(Box::new(DoubleWellProblem::new(DoubleWellSpec {
            sigma: params.sigma,
            dt: params.dt,
            ..DoubleWellSpec::default()
        }))),
        "beam" => Ok(Box::new(BeamProblem::new(BeamSpec::default()))),
        "labyrinth" => {
            let spec = match &params.maze {
                Some(text) => LabyrinthSpec::parse(text, params.walk_len)
                    .map_err(ProblemError::Labyrinth)?,
                None if params.grid_size == 12 => {
                    LabyrinthSpec::paper_scale(params.walk_len).map_err(ProblemError::Labyrinth)?
                }
                None => LabyrinthSpec::open(params.grid_size, params.walk_len)
                    .map_err(ProblemError::Labyrinth)?,
            };
            Ok(Box::new(LabyrinthProblem::new(spec)))
        }
        other => Err(ProblemError::UnknownProblem(other.into())),
    }
}

pub fn registered_names() -> &'static [&'static str] {
    &[
        "gaussian",
        "cauchy",
        "uniform",
        "plateau",
        "double-well",
        "beam",
        "labyrinth",
    ]
}
