//! Cantilever beam with Poisson-process point inclusions. The flexibility is
//! a constant plus weighted Dirac masses at exponential arrival times; the
//! Euler-Bernoulli tip deflection has a closed form. The sample space is the
//! unit hypercube mapped through inverse exponential CDFs, so generic
//! real-vector samplers apply.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{ModelError, Position, Problem};

#[derive(Debug, Clone, Copy)]
pub struct BeamSpec {
    pub length: f64,
    pub base_flexibility: f64,
    pub load: f64,
    pub inclusion_weight: f64,
    pub inclusion_rate: f64,
    pub max_inclusions: usize,
    pub deflection_threshold: f64,
}

impl Default for BeamSpec {
    fn default() -> Self {
        BeamSpec {
            length: 5.0,
            base_flexibility: 1.0,
            load: 0.01,
            inclusion_weight: 0.05,
            inclusion_rate: 1.0,
            max_inclusions: 20,
            deflection_threshold: -0.55,
        }
    }
}

/// Closed-form tip deflection
/// `d(L) = -P (c L^3 / 2 - c L^3 / 6 + sum_{T_i <= L} w (L - T_i) L)`
/// for sorted inclusion times within `[0, L]`.
pub fn beam_deflection(spec: &BeamSpec, inclusion_times: &[f64]) -> f64 {
    let l = spec.length;
    let c = spec.base_flexibility;
    let homogeneous = c * l * l * l / 2.0 - c * l * l * l / 6.0;
    let inclusions: f64 = inclusion_times
        .iter()
        .filter(|&&t| t <= l)
        .map(|&t| spec.inclusion_weight * (l - t) * l)
        .sum();
    -spec.load * (homogeneous + inclusions)
}

pub struct BeamProblem {
    spec: BeamSpec,
}

impl BeamProblem {
    pub fn new(spec: BeamSpec) -> Self {
        BeamProblem { spec }
    }

    pub fn spec(&self) -> &BeamSpec {
        &self.spec
    }

    /// Inclusion arrival times from a unit-hypercube point: inverse
    /// exponential CDFs of the increments, cumulated, truncated at the
    /// beam length.
    pub fn inclusion_times(&self, unit_point: &[f64]) -> Vec<f64> {
        let mut times = Vec::new();
        let mut t = 0.0;
        for &u in unit_point {
            // guard the open end of the cube
            let u = u.min(1.0 - 1e-16);
            t += -(1.0 - u).ln() / self.spec.inclusion_rate;
            if t > self.spec.length {
                break;
            }
            times.push(t);
        }
        times
    }

    pub fn deflection(&self, position: &Position) -> f64 {
        let times = self.inclusion_times(position.as_vector().unwrap());
        beam_deflection(&self.spec, &times)
    }
}

impl Problem for BeamProblem {
    fn name(&self) -> &str {
        "beam"
    }
    fn sample_prior(&self, rng: &mut ChaCha8Rng) -> Position {
        Position::Vector(
            (0..self.spec.max_inclusions)
                .map(|_| rng.gen::<f64>())
                .collect(),
        )
    }
    fn surrogate(&self, position: &Position) -> f64 {
        -self.deflection(position)
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
        -self.spec.deflection_threshold
    }
    fn dimension(&self) -> Option<usize> {
        Some(self.spec.max_inclusions)
    }
    fn log_prior_density(&self, position: &Position) -> Option<f64> {
        let inside = position
            .as_vector()?
            .iter()
            .all(|&u| (0.0..1.0).contains(&u));
        Some(if inside { 0.0 } else { f64::NEG_INFINITY })
    }
    fn prior_std(&self) -> Option<f64> {
        Some((1.0f64 / 12.0).sqrt())
    }
    fn statistic(&self, position: &Position) -> Option<f64> {
        Some(self.deflection(position))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn no_inclusion_deflection_closed_form() {
        let spec = BeamSpec::default();
        // -P c L^3 / 3 = -0.01 * 125 / 3
        assert_relative_eq!(
            beam_deflection(&spec, &[]),
            -0.01 * 125.0 / 3.0,
            max_relative = 1e-15
        );
        assert!((beam_deflection(&spec, &[]) - (-0.41667)).abs() < 1e-5);
    }

    #[test]
    fn single_inclusion_at_origin() {
        let spec = BeamSpec::default();
        let d = beam_deflection(&spec, &[0.0]);
        assert_relative_eq!(d, -0.01 * 125.0 / 3.0 - 0.01 * 0.05 * 5.0 * 5.0, max_relative = 1e-14);
        assert!((d - (-0.42917)).abs() < 1e-5);
    }

    #[test]
    fn poisson_truncation_mass() {
        // Poisson(5) mass on >= 21 inclusions
        let lambda: f64 = 5.0;
        let mut term = (-lambda).exp();
        let mut below = 0.0;
        for k in 0..=20u32 {
            if k > 0 {
                term *= lambda / k as f64;
            }
            below += term;
        }
        let tail = 1.0 - below;
        assert!(
            (tail / 8.11e-8 - 1.0).abs() < 0.01,
            "Poisson(5)[21, inf) = {tail:e}"
        );
    }

    #[test]
    fn inclusion_count_is_truncated_poisson() {
        let problem = BeamProblem::new(BeamSpec::default());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let mut total = 0usize;
        for _ in 0..n {
            let p = problem.sample_prior(&mut rng);
            total += problem.inclusion_times(p.as_vector().unwrap()).len();
        }
        let mean = total as f64 / n as f64;
        // Poisson mean lambda * L = 5, truncation negligible
        let tol = 3.0 * (5.0f64).sqrt() / (n as f64).sqrt();
        assert!((mean - 5.0).abs() < tol, "mean inclusion count = {mean}");
    }

    #[test]
    fn zero_increment_corner_stacks_inclusions_at_origin() {
        let problem = BeamProblem::new(BeamSpec::default());
        let times = problem.inclusion_times(&vec![0.0; 20]);
        assert_eq!(times.len(), 20);
        assert!(times.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn adding_an_inclusion_never_raises_deflection() {
        let spec = BeamSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let mut times: Vec<f64> = (0..5).map(|_| rng.gen::<f64>() * 5.0).collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let base = beam_deflection(&spec, &times);
            times.push(rng.gen::<f64>() * 5.0);
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(beam_deflection(&spec, &times) <= base);
        }
    }
}
