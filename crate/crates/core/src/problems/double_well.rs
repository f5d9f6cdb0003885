//! Overdamped Langevin diffusion in a double-well potential
//! `V(x) = -(a/2) x^2 + (b/4) x^4`, simulated by Euler-Maruyama. The rare
//! event is the path dipping below the barrier within the horizon; the
//! surrogate is the negated path minimum so the engine ascends the levels.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{ModelError, Position, Problem};

#[derive(Debug, Clone, Copy)]
pub struct DoubleWellSpec {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub horizon: f64,
    pub dt: f64,
    pub x0: f64,
    pub barrier: f64,
}

impl Default for DoubleWellSpec {
    fn default() -> Self {
        // wells at +-sqrt(a/b) = +-2; start in the right well
        DoubleWellSpec {
            a: 2.0,
            b: 0.5,
            sigma: 0.7,
            horizon: 10.0,
            dt: 0.01,
            x0: 2.0,
            barrier: -1.5,
        }
    }
}

impl DoubleWellSpec {
    pub fn step_count(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn drift(&self, x: f64) -> f64 {
        // -V'(x) with V'(x) = -a x + b x^3
        self.a * x - self.b * x * x * x
    }
}

/// Euler-Maruyama path `x_{n+1} = x_n - V'(x_n) dt + sigma sqrt(dt) z_n`
/// driven by the given standard-normal increments. Returns the full path
/// including `x0`; errors on a non-finite state.
pub fn simulate_double_well(spec: &DoubleWellSpec, increments: &[f64]) -> Result<Vec<f64>, String> {
    let sqrt_dt = spec.dt.sqrt();
    let mut path = Vec::with_capacity(increments.len() + 1);
    let mut x = spec.x0;
    path.push(x);
    for &z in increments {
        x = x + spec.drift(x) * spec.dt + spec.sigma * sqrt_dt * z;
        if !x.is_finite() {
            return Err(format!("double-well path blew up (dt = {})", spec.dt));
        }
        path.push(x);
    }
    Ok(path)
}

pub struct DoubleWellProblem {
    spec: DoubleWellSpec,
    steps: usize,
}

impl DoubleWellProblem {
    pub fn new(spec: DoubleWellSpec) -> Self {
        let steps = spec.step_count();
        DoubleWellProblem { spec, steps }
    }

    pub fn spec(&self) -> &DoubleWellSpec {
        &self.spec
    }

    pub fn path_min(&self, increments: &[f64]) -> f64 {
        let path = simulate_double_well(&self.spec, increments).expect("finite path");
        path.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl Problem for DoubleWellProblem {
    fn name(&self) -> &str {
        "double-well"
    }
    fn sample_prior(&self, rng: &mut ChaCha8Rng) -> Position {
        Position::Vector((0..self.steps).map(|_| rng.sample(StandardNormal)).collect())
    }
    fn surrogate(&self, position: &Position) -> f64 {
        // negated path minimum: larger = deeper excursion toward the left well
        -self.path_min(position.as_vector().unwrap())
    }
    fn integrand_names(&self) -> Vec<String> {
        vec!["indicator".into()]
    }
    fn integrand(&self, name: &str, position: &Position) -> Result<f64, ModelError> {
        match name {
            "indicator" => Ok(if self.surrogate(position) > self.event_threshold() {
                1.0
            } else {
                0.0
            }),
            other => Err(ModelError::UnknownIntegrand(other.into())),
        }
    }
    fn event_threshold(&self) -> f64 {
        -self.spec.barrier
    }
    fn dimension(&self) -> Option<usize> {
        Some(self.steps)
    }
    fn gaussian_increment_prior(&self) -> bool {
        true
    }
    fn statistic(&self, position: &Position) -> Option<f64> {
        Some(self.path_min(position.as_vector().unwrap()))
    }
}
