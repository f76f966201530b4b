//! Seeded generators for random tensors, dictionaries and separable
//! problems, used by the self-test suite and the test harnesses.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dictionary::Dictionary;
use crate::index::IndexSpace;
use crate::smomp::{FactorBlock, SeparableProblem};
use crate::tensor::ComplexTensor;

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_tensor<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> ComplexTensor {
    let space = IndexSpace::new(dims.to_vec()).expect("positive dims");
    let data = (0..space.total_size())
        .map(|_| complex_normal(rng))
        .collect();
    ComplexTensor::new(space, data).expect("finite samples")
}

/// Gaussian dictionary with atom parameters `0, 1, ..`.
pub fn random_dictionary<R: Rng + ?Sized>(
    n_samples: usize,
    n_atoms: usize,
    rng: &mut R,
) -> Dictionary {
    let entries = (0..n_samples * n_atoms)
        .map(|_| complex_normal(rng))
        .collect();
    Dictionary::new(n_samples, entries, (0..n_atoms).map(|j| j as f64).collect())
        .expect("gaussian atoms are nonzero")
}

/// Size limits for [`random_separable_problem`].
#[derive(Debug, Clone, Copy)]
pub struct ProblemShape {
    pub n_factors: usize,
    pub max_dicts_per_factor: usize,
    pub min_samples: usize,
    pub max_samples: usize,
    pub max_atoms: usize,
    pub max_observations: usize,
    pub max_columns: usize,
}

impl Default for ProblemShape {
    fn default() -> Self {
        ProblemShape {
            n_factors: 2,
            max_dicts_per_factor: 3,
            min_samples: 2,
            max_samples: 4,
            max_atoms: 6,
            max_observations: 8,
            max_columns: 2,
        }
    }
}

/// Random separable problem whose observation is a random combination of
/// `n_true` joint atoms plus `noise`-scaled Gaussian noise.
///
/// Every dictionary has at least `min_atoms` atoms and at least as many atoms
/// as samples. Dimensions with a single sample make every atom of that
/// dictionary collinear, so `min_samples` defaults to 2.
pub fn random_separable_problem<R: Rng + ?Sized>(
    shape: &ProblemShape,
    n_true: usize,
    min_atoms: usize,
    noise: f64,
    rng: &mut R,
) -> SeparableProblem {
    let mut factors = Vec::with_capacity(shape.n_factors);
    for _ in 0..shape.n_factors {
        let n_dicts = rng.random_range(1..=shape.max_dicts_per_factor);
        let samples: Vec<usize> = (0..n_dicts)
            .map(|_| rng.random_range(shape.min_samples..=shape.max_samples))
            .collect();
        let n_q = rng.random_range(1..=shape.max_observations);
        let mut dims = vec![n_q];
        dims.extend_from_slice(&samples);
        let measurement = random_tensor(&dims, rng);
        let dicts = samples
            .iter()
            .map(|&s| {
                let lo = s.max(min_atoms).min(shape.max_atoms);
                let n_a = rng.random_range(lo..=shape.max_atoms.max(lo));
                random_dictionary(s, n_a, rng)
            })
            .collect();
        factors.push(FactorBlock::new(measurement, dicts).expect("consistent shapes"));
    }
    let n_m = rng.random_range(1..=shape.max_columns);
    let mut obs_dims: Vec<usize> = factors.iter().map(|f| f.measurement.dims()[0]).collect();
    obs_dims.push(n_m);
    let space = IndexSpace::new(obs_dims.clone()).expect("positive dims");
    let n_q = space.total_size() / n_m;

    let placeholder = ComplexTensor::zeros(space.clone());
    let mut problem = SeparableProblem::new(placeholder, factors).expect("consistent shapes");
    let mut data: Vec<Complex64> = (0..space.total_size())
        .map(|_| complex_normal(rng) * noise)
        .collect();
    for _ in 0..n_true {
        let j = problem.random_atom(rng);
        let col = problem.joint_column(&j).expect("valid atom");
        for m in 0..n_m {
            let g = complex_normal(rng) + Complex64::new(0.5, 0.0);
            for (dst, &a) in data[m * n_q..(m + 1) * n_q].iter_mut().zip(&col) {
                *dst += a * g;
            }
        }
    }
    problem.observation = ComplexTensor::new(space, data).expect("finite samples");
    problem
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn same_seed_same_problem() {
        let shape = ProblemShape::default();
        let a = random_separable_problem(&shape, 2, 3, 0.0, &mut ChaCha8Rng::seed_from_u64(4));
        let b = random_separable_problem(&shape, 2, 3, 0.0, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a.observation, b.observation);
        assert!(a.validate().is_ok());
        for f in &a.factors {
            for d in &f.dictionaries {
                assert!(d.n_atoms() >= 3 && d.n_atoms() <= 6);
                assert!(d.n_samples() <= 4);
            }
        }
    }
}
