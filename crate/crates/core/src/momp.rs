//! Dense multidimensional OMP over an explicit measurement tensor.
//!
//! This solver materializes the full measurement tensor and evaluates every
//! selection ratio by direct summation over the joint sample index. It is
//! the reference the separable solver is checked against and the baseline
//! of the time/memory comparison.

use num_complex::Complex64;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::index::{IndexSpace, MultiIndex};
use crate::linalg;
use crate::smomp::SeparableProblem;
use crate::solution::{IterationTrace, SolverConfig, SparseSolution};
use crate::tensor::ComplexTensor;

const BYTES_PER_ENTRY: u128 = std::mem::size_of::<Complex64>() as u128;

/// `min_C || O - sum_i sum_j Phi[:, i] prod_k Psi_k[i_k, j_k] C[j, :] ||^2`.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    /// `N^q x N^m`.
    pub observation: ComplexTensor,
    /// `N^q x N_1^s x ... x N_D^s`.
    pub measurement: ComplexTensor,
    pub dictionaries: Vec<Dictionary>,
}

impl DenseProblem {
    pub fn new(
        observation: ComplexTensor,
        measurement: ComplexTensor,
        dictionaries: Vec<Dictionary>,
    ) -> Result<Self> {
        let p = DenseProblem {
            observation,
            measurement,
            dictionaries,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.observation.rank() != 2 {
            return Err(Error::Shape(format!(
                "observation must be a matrix, got shape {}",
                self.observation.space()
            )));
        }
        let dims = self.measurement.dims();
        if dims.first() != Some(&self.observation.dims()[0]) {
            return Err(Error::Shape(format!(
                "measurement {} does not match observation {}",
                self.measurement.space(),
                self.observation.space()
            )));
        }
        if dims.len() != self.dictionaries.len() + 1 {
            return Err(Error::Shape(format!(
                "{} dictionaries for a measurement of shape {}",
                self.dictionaries.len(),
                self.measurement.space()
            )));
        }
        for (k, d) in self.dictionaries.iter().enumerate() {
            if d.n_samples() != dims[k + 1] {
                return Err(Error::Shape(format!(
                    "dictionary {k} has {} rows but measurement dimension is {}",
                    d.n_samples(),
                    dims[k + 1]
                )));
            }
        }
        Ok(())
    }

    pub fn n_columns(&self) -> usize {
        self.observation.dims()[1]
    }

    pub fn sample_space(&self) -> IndexSpace {
        IndexSpace::new(self.measurement.dims()[1..].to_vec()).expect("validated dims")
    }

    /// Measurement-domain image of the joint atom `j`.
    pub fn combined_atom(&self, j: &MultiIndex) -> Result<Vec<Complex64>> {
        check_atom(&self.dictionaries, j)?;
        let nq = self.measurement.dims()[0];
        let mut col = vec![Complex64::new(0.0, 0.0); nq];
        let phi = self.measurement.data();
        self.sample_space().for_each(|lin, i| {
            let w: Complex64 = self
                .dictionaries
                .iter()
                .zip(i)
                .zip(j.coords())
                .map(|((d, &ik), &jk)| d.entry(ik, jk))
                .product();
            for (dst, &p) in col.iter_mut().zip(&phi[lin * nq..(lin + 1) * nq]) {
                *dst += p * w;
            }
        });
        Ok(col)
    }
}

fn check_atom(dicts: &[Dictionary], j: &MultiIndex) -> Result<()> {
    if j.len() != dicts.len() {
        return Err(Error::Range(format!(
            "joint atom index {j} has {} coordinates for {} dictionaries",
            j.len(),
            dicts.len()
        )));
    }
    for (k, (d, &jk)) in dicts.iter().zip(j.coords()).enumerate() {
        if jk >= d.n_atoms() {
            return Err(Error::Range(format!(
                "atom {jk} out of range for dictionary {k} with {} atoms",
                d.n_atoms()
            )));
        }
    }
    Ok(())
}

/// Number of entries of the densified measurement tensor.
pub fn dense_measurement_len(sep: &SeparableProblem) -> u128 {
    sep.factors
        .iter()
        .map(|f| f.measurement.len() as u128)
        .product()
}

/// Bytes needed to hold the densified measurement tensor.
pub fn dense_measurement_bytes(sep: &SeparableProblem) -> u128 {
    dense_measurement_len(sep) * BYTES_PER_ENTRY
}

/// Builds the equivalent dense problem: `Phi[o, i] = prod_f Phi_f[o_f, i_f]`
/// with `o` and `i` linearized first-index-fastest and the dictionaries
/// concatenated in grouped order.
///
/// Refuses before allocating when the dense tensor exceeds `budget_bytes`.
pub fn densify(sep: &SeparableProblem, budget_bytes: Option<u128>) -> Result<DenseProblem> {
    sep.validate()?;
    let required = dense_measurement_bytes(sep);
    if let Some(budget) = budget_bytes {
        if required > budget {
            return Err(Error::Capacity { required, budget });
        }
    }
    let q_dims: Vec<usize> = sep
        .factors
        .iter()
        .map(|f| f.measurement.dims()[0])
        .collect();
    let s_dims: Vec<usize> = sep
        .factors
        .iter()
        .flat_map(|f| f.measurement.dims()[1..].iter().copied())
        .collect();
    let q_space = IndexSpace::new(q_dims.clone())?;
    let s_space = IndexSpace::new(s_dims)?;
    let nq = q_space.total_size();
    let mut dims = vec![nq];
    dims.extend_from_slice(s_space.dims());

    let ranks: Vec<usize> = sep
        .factors
        .iter()
        .map(|f| f.measurement.rank() - 1)
        .collect();
    let mut data = Vec::with_capacity(nq * s_space.total_size());
    let mut fcoords: Vec<Vec<usize>> = ranks.iter().map(|&r| vec![0; r + 1]).collect();
    s_space.for_each(|_, i| {
        let mut offset = 0;
        for (fc, &r) in fcoords.iter_mut().zip(&ranks) {
            fc[1..].copy_from_slice(&i[offset..offset + r]);
            offset += r;
        }
        q_space.for_each(|_, o| {
            let mut v = Complex64::new(1.0, 0.0);
            for ((fc, &of), factor) in fcoords.iter_mut().zip(o).zip(&sep.factors) {
                fc[0] = of;
                v *= factor.measurement.get(fc).expect("coordinates in range");
            }
            data.push(v);
        });
    });
    let measurement = ComplexTensor::new(IndexSpace::new(dims)?, data)?;
    let n_m = sep.n_columns();
    let observation = sep.observation.clone().reshape(vec![nq, n_m])?;
    let dictionaries = sep
        .factors
        .iter()
        .flat_map(|f| f.dictionaries.iter().cloned())
        .collect();
    DenseProblem::new(observation, measurement, dictionaries)
}

/// `O_Phi[m, i] = sum_q conj(O_res[q, m]) Phi[q, i]`.
pub fn momp_correlation(
    residual: &ComplexTensor,
    measurement: &ComplexTensor,
) -> Result<ComplexTensor> {
    if residual.rank() != 2 {
        return Err(Error::Shape("residual must be a matrix".into()));
    }
    residual.conj().contract_leading(measurement)
}

/// Scores of every atom of dictionary `target` under the marginal ratio
///
/// `sum_{i_U} || sum_{i_E, i_t} T[:, i] Psi_t[i_t, j] prod_{E} Psi[i, j_hat] ||^2`
///
/// where `E` are the fixed dimensions and `U` the remaining free ones. Run on
/// the correlation tensor it gives the numerator, on the measurement tensor
/// the denominator. With every other dimension fixed it is the refinement
/// ratio's numerator or denominator.
fn marginal_energies(
    tensor: &ComplexTensor,
    dicts: &[Dictionary],
    fixed: &[Option<usize>],
    target: usize,
) -> Vec<f64> {
    let lead = tensor.dims()[0];
    let s_space = IndexSpace::new(tensor.dims()[1..].to_vec()).expect("valid dims");
    let free: Vec<usize> = (0..dicts.len())
        .filter(|&k| k != target && fixed[k].is_none())
        .collect();
    let bucket_space =
        IndexSpace::new(free.iter().map(|&k| dicts[k].n_samples()).collect()).expect("valid dims");
    let n_buckets = bucket_space.total_size();

    let mut fixed_weight = Vec::with_capacity(s_space.total_size());
    let mut bucket_of = Vec::with_capacity(s_space.total_size());
    let mut target_row = Vec::with_capacity(s_space.total_size());
    let bucket_strides = bucket_space.strides();
    s_space.for_each(|_, i| {
        let w: Complex64 = fixed
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != target)
            .filter_map(|(k, j)| j.map(|j| dicts[k].entry(i[k], j)))
            .product();
        fixed_weight.push(w);
        bucket_of.push(
            free.iter()
                .zip(&bucket_strides)
                .map(|(&k, s)| i[k] * s)
                .sum::<usize>(),
        );
        target_row.push(i[target]);
    });

    let data = tensor.data();
    let mut acc = vec![Complex64::new(0.0, 0.0); lead * n_buckets];
    (0..dicts[target].n_atoms())
        .map(|j| {
            acc.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (lin, (&w, &b)) in fixed_weight.iter().zip(&bucket_of).enumerate() {
                let w = w * dicts[target].entry(target_row[lin], j);
                let dst = &mut acc[b * lead..(b + 1) * lead];
                for (d, &t) in dst.iter_mut().zip(&data[lin * lead..(lin + 1) * lead]) {
                    *d += t * w;
                }
            }
            acc.iter().map(|z| z.norm_sqr()).sum()
        })
        .collect()
}

fn dense_scores(
    o_phi: &ComplexTensor,
    p: &DenseProblem,
    fixed: &[Option<usize>],
    target: usize,
) -> Vec<f64> {
    let num = marginal_energies(o_phi, &p.dictionaries, fixed, target);
    let den = marginal_energies(&p.measurement, &p.dictionaries, fixed, target);
    linalg::ratio_scores(&num, &den)
}

/// Normalized correlation of the joint atom `j` with the residual.
fn dense_objective(o_phi: &ComplexTensor, p: &DenseProblem, j: &[usize]) -> f64 {
    let mut fixed: Vec<Option<usize>> = j.iter().map(|&x| Some(x)).collect();
    fixed[0] = None;
    dense_scores(o_phi, p, &fixed, 0)[j[0]]
}

/// Dense multidimensional OMP.
///
/// Each iteration initializes the joint index dimension by dimension in
/// ascending order, runs `refinement_sweeps` cyclic refinement passes, then
/// refits every selected atom by least squares. Stops early under the same
/// rules as [`crate::smomp::smomp_solve`].
pub fn momp_solve(p: &DenseProblem, cfg: &SolverConfig) -> Result<SparseSolution> {
    p.validate()?;
    let n_dims = p.dictionaries.len();
    let atoms_per_dim: Vec<usize> = p.dictionaries.iter().map(|d| d.n_atoms()).collect();
    cfg.validate(&atoms_per_dim)?;

    let obs = &p.observation;
    let nq = obs.dims()[0];
    let n_m = p.n_columns();
    let obs_norm = obs.norm();
    let mut sol = SparseSolution::empty(obs, n_m);
    if obs_norm == 0.0 {
        return Ok(sol);
    }

    let mut columns: Vec<Complex64> = Vec::new();
    let mut residual = obs.clone();
    for _ in 0..cfg.n_atoms {
        if residual.norm() <= cfg.rel_tol * obs_norm {
            break;
        }
        let o_phi = momp_correlation(&residual, &p.measurement)?;

        let mut current: Vec<Option<usize>> = vec![None; n_dims];
        for k in 0..n_dims {
            let scores = dense_scores(&o_phi, p, &current, k);
            let mask = linalg::support_mask(&sol.support, &current, k, atoms_per_dim[k]);
            current[k] = linalg::argmax(&scores, mask.as_deref());
        }
        let mut joint: Vec<usize> = current
            .iter()
            .map(|j| j.expect("all dimensions initialized"))
            .collect();
        let initial = MultiIndex(joint.clone());
        let mut objective = vec![dense_objective(&o_phi, p, &joint)];

        let mut sweeps_run = 0;
        for _ in 0..cfg.refinement_sweeps {
            sweeps_run += 1;
            let mut changed = false;
            for k in 0..n_dims {
                let mut others: Vec<Option<usize>> = joint.iter().map(|&j| Some(j)).collect();
                others[k] = None;
                let scores = dense_scores(&o_phi, p, &others, k);
                let mask = linalg::support_mask(&sol.support, &others, k, atoms_per_dim[k]);
                let best = linalg::argmax(&scores, mask.as_deref()).expect("dictionary has atoms");
                if best != joint[k] {
                    joint[k] = best;
                    changed = true;
                }
                objective.push(scores[joint[k]]);
            }
            if !changed {
                break;
            }
        }

        if linalg::is_exhausted(
            *objective.last().expect("objective recorded"),
            residual.norm(),
        ) {
            break;
        }
        let selected = MultiIndex(joint);
        columns.extend(p.combined_atom(&selected)?);
        sol.support.push(selected.clone());
        sol.trace.push(IterationTrace {
            initial,
            selected,
            sweeps_run,
            objective,
        });

        let (coef, deficient) = linalg::lstsq(&columns, obs.data(), nq, cfg.rcond);
        let r = linalg::residual(&columns, &coef, obs.data(), nq);
        residual = ComplexTensor::new(obs.space().clone(), r)?;
        sol.coefficients = coef;
        sol.rank_deficient = deficient;
        sol.residual_norms.push(residual.norm());
    }
    sol.residual = residual;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_dictionary, random_tensor};
    use crate::smomp::{FactorBlock, SeparableProblem};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn identity_problem(n: usize, target: usize) -> DenseProblem {
        let phi = ComplexTensor::from_fn(IndexSpace::new(vec![n, n]).unwrap(), |i| {
            if i[0] == i[1] {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        let obs = ComplexTensor::from_fn(IndexSpace::new(vec![n, 1]).unwrap(), |i| {
            if i[0] == target {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        DenseProblem::new(obs, phi, vec![Dictionary::identity(n).unwrap()]).unwrap()
    }

    #[test]
    fn identity_instance_selects_basis_vector() {
        let p = identity_problem(5, 3);
        let sol = momp_solve(&p, &SolverConfig::with_atoms(1)).unwrap();
        assert_eq!(sol.support, vec![MultiIndex(vec![3])]);
        assert!((sol.coefficient(0, 0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(sol.final_residual_norm() < 1e-14);
    }

    #[test]
    fn zero_observation_returns_empty_solution() {
        let mut p = identity_problem(4, 0);
        p.observation = ComplexTensor::zeros(p.observation.space().clone());
        let sol = momp_solve(&p, &SolverConfig::with_atoms(2)).unwrap();
        assert!(sol.is_empty());
        assert_eq!(sol.residual_norms, vec![0.0]);
    }

    #[test]
    fn too_many_atoms_rejected() {
        let p = identity_problem(3, 0);
        assert!(matches!(
            momp_solve(&p, &SolverConfig::with_atoms(4)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn correlation_conjugates_the_residual() {
        let eye = ComplexTensor::from_dims(
            &[2, 2],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let res = ComplexTensor::from_dims(&[2, 1], vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let o = momp_correlation(&res, &eye).unwrap();
        assert_eq!(o.dims(), &[1, 2]);
        assert_eq!(o.get(&[0, 0]).unwrap(), c(1.0, 0.0));
        assert_eq!(o.get(&[0, 1]).unwrap(), c(0.0, -1.0));
        let zero = ComplexTensor::zeros(res.space().clone());
        assert_eq!(momp_correlation(&zero, &eye).unwrap().norm(), 0.0);
        assert!(momp_correlation(
            &res,
            &ComplexTensor::zeros(IndexSpace::new(vec![3, 2]).unwrap())
        )
        .is_err());
    }

    #[test]
    fn correlation_matches_explicit_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let res = random_tensor(&[3, 2], &mut rng);
        let phi = random_tensor(&[3, 2, 2], &mut rng);
        let o = momp_correlation(&res, &phi).unwrap();
        for m in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let expect: Complex64 = (0..3)
                        .map(|q| res.get(&[q, m]).unwrap().conj() * phi.get(&[q, a, b]).unwrap())
                        .sum();
                    assert!((o.get(&[m, a, b]).unwrap() - expect).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn densify_single_factor_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = random_tensor(&[4, 2, 3], &mut rng);
        let dicts = vec![
            random_dictionary(2, 3, &mut rng),
            random_dictionary(3, 4, &mut rng),
        ];
        let obs = random_tensor(&[4, 1], &mut rng);
        let sep = SeparableProblem::new(
            obs.clone(),
            vec![FactorBlock::new(phi.clone(), dicts.clone()).unwrap()],
        )
        .unwrap();
        let dense = densify(&sep, None).unwrap();
        assert_eq!(dense.measurement, phi);
        assert_eq!(dense.observation, obs);
        assert_eq!(dense.dictionaries, dicts);
    }

    #[test]
    fn densify_scalar_factors_multiply() {
        let two = ComplexTensor::from_dims(&[1, 1], vec![c(2.0, 0.0)]).unwrap();
        let d = Dictionary::identity(1).unwrap();
        let f = FactorBlock::new(two, vec![d]).unwrap();
        let obs = ComplexTensor::from_dims(&[1, 1, 1], vec![c(1.0, 0.0)]).unwrap();
        let sep = SeparableProblem::new(obs, vec![f.clone(), f]).unwrap();
        let dense = densify(&sep, None).unwrap();
        assert_eq!(dense.measurement.data(), &[c(4.0, 0.0)]);
    }

    #[test]
    fn densify_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi1 = random_tensor(&[2, 3], &mut rng);
        let phi2 = random_tensor(&[3, 2, 2], &mut rng);
        let f1 = FactorBlock::new(phi1.clone(), vec![random_dictionary(3, 4, &mut rng)]).unwrap();
        let f2 = FactorBlock::new(
            phi2.clone(),
            vec![
                random_dictionary(2, 3, &mut rng),
                random_dictionary(2, 2, &mut rng),
            ],
        )
        .unwrap();
        let obs = random_tensor(&[2, 3, 2], &mut rng);
        let sep = SeparableProblem::new(obs.clone(), vec![f1, f2]).unwrap();
        let dense = densify(&sep, None).unwrap();
        assert_eq!(dense.measurement.dims(), &[6, 3, 2, 2]);
        for o1 in 0..2 {
            for o2 in 0..3 {
                let ob = o1 + 2 * o2;
                for m in 0..2 {
                    assert_eq!(
                        dense.observation.get(&[ob, m]).unwrap(),
                        obs.get(&[o1, o2, m]).unwrap()
                    );
                }
                for i1 in 0..3 {
                    for a in 0..2 {
                        for b in 0..2 {
                            let expect =
                                phi1.get(&[o1, i1]).unwrap() * phi2.get(&[o2, a, b]).unwrap();
                            assert_eq!(dense.measurement.get(&[ob, i1, a, b]).unwrap(), expect);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn densify_respects_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = FactorBlock::new(
            random_tensor(&[4, 4], &mut rng),
            vec![random_dictionary(4, 4, &mut rng)],
        )
        .unwrap();
        let sep =
            SeparableProblem::new(random_tensor(&[4, 4, 1], &mut rng), vec![f.clone(), f]).unwrap();
        let bytes = dense_measurement_bytes(&sep);
        assert_eq!(bytes, 16 * 16 * 16);
        assert!(densify(&sep, Some(bytes)).is_ok());
        assert!(matches!(
            densify(&sep, Some(bytes - 1)),
            Err(Error::Capacity { required, budget }) if required == bytes && budget == bytes - 1
        ));
    }

    /// Exhaustive single-atom objective: for every joint atom, the best
    /// least-squares fit of the observation.
    fn brute_force_best_atom(p: &DenseProblem) -> MultiIndex {
        let space = IndexSpace::new(p.dictionaries.iter().map(|d| d.n_atoms()).collect()).unwrap();
        let mut best = (f64::INFINITY, MultiIndex(vec![]));
        for j in space.iter() {
            let a = p.combined_atom(&j).unwrap();
            let aa: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            let mut err = 0.0;
            for m in 0..p.n_columns() {
                let col: Vec<Complex64> = (0..a.len())
                    .map(|q| p.observation.get(&[q, m]).unwrap())
                    .collect();
                let ab: Complex64 = a.iter().zip(&col).map(|(x, y)| x.conj() * y).sum();
                let yy: f64 = col.iter().map(|z| z.norm_sqr()).sum();
                err += yy - ab.norm_sqr() / aa;
            }
            if err < best.0 - 1e-12 {
                best = (err, j);
            }
        }
        best.1
    }

    #[test]
    fn single_atom_matches_brute_force_after_refinement() {
        // one-atom instances built from a true joint atom plus mild noise;
        // after refinement the selected atom is the exhaustive optimum
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let dicts = vec![
                random_dictionary(3, 4, &mut rng),
                random_dictionary(3, 4, &mut rng),
            ];
            let phi = random_tensor(&[9, 3, 3], &mut rng);
            let tmp =
                DenseProblem::new(random_tensor(&[9, 1], &mut rng), phi.clone(), dicts.clone())
                    .unwrap();
            let truth = MultiIndex(vec![(seed % 4) as usize, ((seed / 4) % 4) as usize]);
            let atom = tmp.combined_atom(&truth).unwrap();
            let noise = random_tensor(&[9, 1], &mut rng);
            let obs: Vec<Complex64> = atom
                .iter()
                .zip(noise.data())
                .map(|(a, n)| a * c(0.8, 0.6) + n * 0.05)
                .collect();
            let p = DenseProblem::new(ComplexTensor::from_dims(&[9, 1], obs).unwrap(), phi, dicts)
                .unwrap();
            let cfg = SolverConfig {
                refinement_sweeps: 10,
                ..SolverConfig::with_atoms(1)
            };
            let sol = momp_solve(&p, &cfg).unwrap();
            assert_eq!(sol.support[0], brute_force_best_atom(&p), "seed {seed}");
        }
    }

    #[test]
    fn initialization_objective_is_maximal_per_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let dicts = vec![
            random_dictionary(3, 5, &mut rng),
            random_dictionary(2, 4, &mut rng),
        ];
        let p = DenseProblem::new(
            random_tensor(&[6, 2], &mut rng),
            random_tensor(&[6, 3, 2], &mut rng),
            dicts,
        )
        .unwrap();
        let o_phi = momp_correlation(&p.observation, &p.measurement).unwrap();
        let s0 = dense_scores(&o_phi, &p, &[None, None], 0);
        let j0 = linalg::argmax(&s0, None).unwrap();
        assert!(s0.iter().all(|&s| s <= s0[j0]));
        let s1 = dense_scores(&o_phi, &p, &[Some(j0), None], 1);
        let j1 = linalg::argmax(&s1, None).unwrap();
        assert!(s1.iter().all(|&s| s <= s1[j1]));
        let sol = momp_solve(
            &p,
            &SolverConfig {
                refinement_sweeps: 0,
                ..SolverConfig::with_atoms(1)
            },
        )
        .unwrap();
        assert_eq!(sol.support[0], MultiIndex(vec![j0, j1]));
    }
}
