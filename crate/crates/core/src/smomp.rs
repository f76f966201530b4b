//! Separable multidimensional OMP.
//!
//! The measurement operator is a product of small per-factor tensors
//! `Phi_f`, each with its own list of dictionaries. The solver works on the
//! factors directly: the correlation tensor is built by successive
//! per-factor contractions, selection denominators only involve the factor
//! that owns the dimension being estimated, and least-squares columns are
//! Kronecker products of per-factor combined atoms. Nothing of the size of
//! the dense measurement tensor is ever allocated.

use num_complex::Complex64;
use rand::Rng;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::index::{group_dictionary_index, split_dictionary_index, MultiIndex};
use crate::linalg;
use crate::solution::{IterationTrace, SolverConfig, SparseSolution};
use crate::tensor::ComplexTensor;

/// One separable factor: `Phi_f` of shape `N_f^q x N_{f,1}^s x ...` and the
/// dictionaries of its sample dimensions.
#[derive(Debug, Clone)]
pub struct FactorBlock {
    pub measurement: ComplexTensor,
    pub dictionaries: Vec<Dictionary>,
}

impl FactorBlock {
    pub fn new(measurement: ComplexTensor, dictionaries: Vec<Dictionary>) -> Result<Self> {
        let block = FactorBlock {
            measurement,
            dictionaries,
        };
        block.validate()?;
        Ok(block)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.measurement.dims();
        if dims.len() != self.dictionaries.len() + 1 {
            return Err(Error::Shape(format!(
                "factor measurement {} needs {} dictionaries, got {}",
                self.measurement.space(),
                dims.len().saturating_sub(1),
                self.dictionaries.len()
            )));
        }
        for (k, d) in self.dictionaries.iter().enumerate() {
            if d.n_samples() != dims[k + 1] {
                return Err(Error::Shape(format!(
                    "dictionary {k} has {} rows, factor dimension is {}",
                    d.n_samples(),
                    dims[k + 1]
                )));
            }
        }
        Ok(())
    }

    pub fn n_observations(&self) -> usize {
        self.measurement.dims()[0]
    }

    pub fn n_dictionaries(&self) -> usize {
        self.dictionaries.len()
    }
}

/// `min_C sum_o || O[o, :] - sum_i sum_j prod_f (Phi_f[o_f, i_f] prod_k Psi_{f,k}[i_{f,k}, j_{f,k}]) C[j, :] ||^2`.
#[derive(Debug, Clone)]
pub struct SeparableProblem {
    /// `N_1^q x ... x N_F^q x N^m`.
    pub observation: ComplexTensor,
    pub factors: Vec<FactorBlock>,
}

impl SeparableProblem {
    pub fn new(observation: ComplexTensor, factors: Vec<FactorBlock>) -> Result<Self> {
        let p = SeparableProblem {
            observation,
            factors,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::Shape(
                "separable problem needs at least one factor".into(),
            ));
        }
        for f in &self.factors {
            f.validate()?;
        }
        let dims = self.observation.dims();
        let expect: Vec<usize> = self.factors.iter().map(|f| f.n_observations()).collect();
        if dims.len() != expect.len() + 1 || dims[..expect.len()] != expect[..] {
            return Err(Error::Shape(format!(
                "observation {} does not match factor observation sizes {expect:?}",
                self.observation.space()
            )));
        }
        Ok(())
    }

    /// `N^m`, the number of jointly sparse observation columns.
    pub fn n_columns(&self) -> usize {
        *self.observation.dims().last().expect("validated")
    }

    /// `N^q`, the flattened observation length.
    pub fn n_observations(&self) -> usize {
        self.factors.iter().map(|f| f.n_observations()).product()
    }

    /// Number of dictionaries per factor.
    pub fn layout(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.n_dictionaries()).collect()
    }

    pub fn n_dims(&self) -> usize {
        self.factors.iter().map(|f| f.n_dictionaries()).sum()
    }

    /// Dictionary in grouped position `g`.
    pub fn dictionary(&self, g: usize) -> &Dictionary {
        dictionary_at(&self.factors, g)
    }

    pub fn atoms_per_dim(&self) -> Vec<usize> {
        self.factors
            .iter()
            .flat_map(|f| f.dictionaries.iter().map(|d| d.n_atoms()))
            .collect()
    }

    pub fn random_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> MultiIndex {
        MultiIndex(
            self.atoms_per_dim()
                .into_iter()
                .map(|n| rng.random_range(0..n))
                .collect(),
        )
    }

    /// Splits a grouped joint index into per-factor indices.
    pub fn split_atom(&self, j: &MultiIndex) -> Result<Vec<MultiIndex>> {
        if j.len() != self.n_dims() {
            return Err(Error::Range(format!(
                "joint atom {j} has {} coordinates, problem has {} dictionaries",
                j.len(),
                self.n_dims()
            )));
        }
        let mut out = Vec::with_capacity(self.factors.len());
        let mut offset = 0;
        for f in &self.factors {
            let n = f.n_dictionaries();
            out.push(MultiIndex(j.coords()[offset..offset + n].to_vec()));
            offset += n;
        }
        Ok(out)
    }

    /// Flattened measurement-domain column of the joint atom `j`:
    /// `col[o] = prod_f combined_atom(f, j_f)[o_f]`, first factor fastest.
    pub fn joint_column(&self, j: &MultiIndex) -> Result<Vec<Complex64>> {
        let parts = self.split_atom(j)?;
        let mut col = vec![Complex64::new(1.0, 0.0)];
        for (factor, jf) in self.factors.iter().zip(&parts) {
            let a = combined_atom(factor, jf)?;
            col = a
                .iter()
                .flat_map(|&x| col.iter().map(move |&y| y * x))
                .collect();
        }
        Ok(col)
    }
}

fn dictionary_at(factors: &[FactorBlock], g: usize) -> &Dictionary {
    let layout: Vec<usize> = factors.iter().map(|f| f.n_dictionaries()).collect();
    let (f, k) = split_dictionary_index(g, &layout).expect("grouped index in range");
    &factors[f].dictionaries[k]
}

/// `O_Phi[m, i] = sum_o conj(O_res[o, m]) prod_f Phi_f[o_f, i_f]`, computed by
/// contracting one observation axis at a time.
///
/// The result has shape `N^m x` (all sample dimensions in grouped order).
pub fn smomp_correlation(
    residual: &ComplexTensor,
    factors: &[FactorBlock],
) -> Result<ComplexTensor> {
    let dims = residual.dims();
    if dims.len() != factors.len() + 1 {
        return Err(Error::Shape(format!(
            "residual of shape {} for {} factors",
            residual.space(),
            factors.len()
        )));
    }
    let mut acc = residual.conj();
    for (f, factor) in factors.iter().enumerate() {
        if acc.dims()[0] != factor.n_observations() {
            return Err(Error::Shape(format!(
                "residual axis {f} has size {} but factor {f} observes {}",
                acc.dims()[0],
                factor.n_observations()
            )));
        }
        acc = acc.contract_leading(&factor.measurement)?;
    }
    Ok(acc)
}

/// `sum_{i_f} Phi_f[:, i_f] prod_k Psi_{f,k}[i_{f,k}, j_k]`.
pub fn combined_atom(factor: &FactorBlock, j: &MultiIndex) -> Result<Vec<Complex64>> {
    if j.len() != factor.n_dictionaries() {
        return Err(Error::Range(format!(
            "atom index {j} for a factor with {} dictionaries",
            factor.n_dictionaries()
        )));
    }
    for (k, (&jk, d)) in j.coords().iter().zip(&factor.dictionaries).enumerate() {
        if jk >= d.n_atoms() {
            return Err(Error::Range(format!(
                "atom {jk} out of range for dictionary {k} with {} atoms",
                d.n_atoms()
            )));
        }
    }
    let mut acc = factor.measurement.clone();
    for k in (0..factor.n_dictionaries()).rev() {
        acc = acc.contract_axis(k + 1, factor.dictionaries[k].atom(j.coords()[k]))?;
    }
    Ok(acc.into_data())
}

/// Partial contractions carried through projection initialization.
///
/// `numerator` is the correlation tensor with every estimated dimension
/// contracted against its chosen atom; `factor_partials[f]` is `Phi_f` with
/// the estimated dimensions of factor `f` contracted.
#[derive(Debug, Clone)]
pub struct ProjectionState {
    layout: Vec<usize>,
    chosen: Vec<Option<usize>>,
    numerator: ComplexTensor,
    factor_partials: Vec<ComplexTensor>,
}

impl ProjectionState {
    pub fn new(o_phi: &ComplexTensor, factors: &[FactorBlock]) -> Self {
        let layout: Vec<usize> = factors.iter().map(|f| f.n_dictionaries()).collect();
        let n_dims = layout.iter().sum();
        ProjectionState {
            layout,
            chosen: vec![None; n_dims],
            numerator: o_phi.clone(),
            factor_partials: factors.iter().map(|f| f.measurement.clone()).collect(),
        }
    }

    pub fn chosen(&self) -> &[Option<usize>] {
        &self.chosen
    }

    pub fn is_complete(&self) -> bool {
        self.chosen.iter().all(Option::is_some)
    }

    pub fn joint_index(&self) -> Option<MultiIndex> {
        self.chosen
            .iter()
            .copied()
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    fn numerator_axis(&self, g: usize) -> usize {
        1 + self.chosen[..g].iter().filter(|c| c.is_none()).count()
    }

    fn factor_axis(&self, f: usize, k: usize) -> usize {
        let start = group_dictionary_index(f, 0, &self.layout).expect("valid factor");
        1 + self.chosen[start..start + k]
            .iter()
            .filter(|c| c.is_none())
            .count()
    }

    fn fix(&mut self, g: usize, j: usize, atom: &[Complex64]) -> Result<()> {
        let (f, k) = split_dictionary_index(g, &self.layout)?;
        let axis = self.numerator_axis(g);
        self.numerator = self.numerator.contract_axis(axis, atom)?;
        let faxis = self.factor_axis(f, k);
        self.factor_partials[f] = self.factor_partials[f].contract_axis(faxis, atom)?;
        self.chosen[g] = Some(j);
        Ok(())
    }
}

/// Projection initialization for dictionary `target` (grouped index).
///
/// Scores every atom by the energy of the correlation tensor contracted over
/// the estimated dimensions plus the candidate, summed over the remaining
/// free dimensions, divided by the analogous energy of the owning factor's
/// measurement tensor alone. Records the winner in `state`.
pub fn project_initialize(
    factors: &[FactorBlock],
    state: &mut ProjectionState,
    target: usize,
    support: &[MultiIndex],
) -> Result<usize> {
    if target >= state.chosen.len() {
        return Err(Error::Range(format!("dictionary {target} out of range")));
    }
    if state.chosen[target].is_some() {
        return Err(Error::Range(format!(
            "dictionary {target} is already estimated"
        )));
    }
    let (f, k) = split_dictionary_index(target, &state.layout)?;
    let dict = &factors[f].dictionaries[k];
    let axis = state.numerator_axis(target);
    let faxis = state.factor_axis(f, k);
    let mut scratch = Vec::new();
    let mut num = Vec::with_capacity(dict.n_atoms());
    let mut den = Vec::with_capacity(dict.n_atoms());
    for j in 0..dict.n_atoms() {
        num.push(
            state
                .numerator
                .contract_axis_energy(axis, dict.atom(j), &mut scratch),
        );
        den.push(state.factor_partials[f].contract_axis_energy(faxis, dict.atom(j), &mut scratch));
    }
    let scores = linalg::ratio_scores(&num, &den);
    let mask = linalg::support_mask(support, &state.chosen, target, dict.n_atoms());
    let best = linalg::argmax(&scores, mask.as_deref()).expect("dictionary has atoms");
    state.fix(target, best, dict.atom(best))?;
    Ok(best)
}

/// Contracts every sample axis of `t` (axes `1..`) except `keep` against the
/// chosen atoms, leaving a `lead x N_keep^s` tensor.
fn contract_all_but(
    t: &ComplexTensor,
    dicts: &[&Dictionary],
    joint: &[usize],
    keep: Option<usize>,
) -> Result<ComplexTensor> {
    let mut acc = t.clone();
    for g in (0..dicts.len()).rev() {
        if Some(g) != keep {
            acc = acc.contract_axis(g + 1, dicts[g].atom(joint[g]))?;
        }
    }
    Ok(acc)
}

fn refine_scores(
    o_phi: &ComplexTensor,
    factors: &[FactorBlock],
    joint: &[usize],
    target: usize,
) -> Result<Vec<f64>> {
    let layout: Vec<usize> = factors.iter().map(|f| f.n_dictionaries()).collect();
    let (f, k) = split_dictionary_index(target, &layout)?;
    let all: Vec<&Dictionary> = (0..joint.len())
        .map(|g| dictionary_at(factors, g))
        .collect();
    let num_t = contract_all_but(o_phi, &all, joint, Some(target))?;
    let start = group_dictionary_index(f, 0, &layout)?;
    let local: Vec<&Dictionary> = factors[f].dictionaries.iter().collect();
    let den_t = contract_all_but(
        &factors[f].measurement,
        &local,
        &joint[start..start + local.len()],
        Some(k),
    )?;

    let dict = local[k];
    let mut scratch = Vec::new();
    let (num, den): (Vec<f64>, Vec<f64>) = (0..dict.n_atoms())
        .map(|j| {
            (
                num_t.contract_axis_energy(1, dict.atom(j), &mut scratch),
                den_t.contract_axis_energy(1, dict.atom(j), &mut scratch),
            )
        })
        .unzip();
    Ok(linalg::ratio_scores(&num, &den))
}

/// Projection refinement for dictionary `target` with every other dimension
/// held at `joint`.
///
/// The numerator is the full contraction of the correlation tensor; the
/// denominator is the energy of the owning factor's combined atom only,
/// since the other factors' atom energies do not depend on the candidate.
pub fn project_refine(
    o_phi: &ComplexTensor,
    factors: &[FactorBlock],
    joint: &[usize],
    target: usize,
    support: &[MultiIndex],
) -> Result<usize> {
    if target >= joint.len() {
        return Err(Error::Range(format!("dictionary {target} out of range")));
    }
    let scores = refine_scores(o_phi, factors, joint, target)?;
    let mut others: Vec<Option<usize>> = joint.iter().map(|&j| Some(j)).collect();
    others[target] = None;
    let mask = linalg::support_mask(support, &others, target, scores.len());
    Ok(linalg::argmax(&scores, mask.as_deref()).expect("dictionary has atoms"))
}

/// `sum_m |<atom_j, r_m>|^2 / ||atom_j||^2` from the factored quantities.
pub fn joint_objective(
    o_phi: &ComplexTensor,
    factors: &[FactorBlock],
    joint: &[usize],
) -> Result<f64> {
    let all: Vec<&Dictionary> = (0..joint.len())
        .map(|g| dictionary_at(factors, g))
        .collect();
    let num = contract_all_but(o_phi, &all, joint, None)?.norm_sqr();
    let mut den = 1.0;
    let mut offset = 0;
    for factor in factors {
        let n = factor.n_dictionaries();
        let a = combined_atom(factor, &MultiIndex(joint[offset..offset + n].to_vec()))?;
        den *= a.iter().map(|z| z.norm_sqr()).sum::<f64>();
        offset += n;
    }
    Ok(if den > 0.0 {
        num / den
    } else {
        f64::NEG_INFINITY
    })
}

/// Output of [`residual_update`].
#[derive(Debug, Clone)]
pub struct ResidualUpdate {
    /// `support.len() x N^m`, atom index fastest.
    pub coefficients: Vec<Complex64>,
    pub residual: ComplexTensor,
    pub rank_deficient: bool,
}

/// Least-squares refit of every selected joint atom against the full
/// observation, with columns built as Kronecker products of per-factor
/// combined atoms.
pub fn residual_update(
    problem: &SeparableProblem,
    support: &[MultiIndex],
    rcond: f64,
) -> Result<ResidualUpdate> {
    if support.is_empty() {
        return Err(Error::Range(
            "residual update needs at least one selected atom".into(),
        ));
    }
    let nq = problem.n_observations();
    let mut columns = Vec::with_capacity(nq * support.len());
    for j in support {
        columns.extend(problem.joint_column(j)?);
    }
    let obs = problem.observation.data();
    let (coefficients, rank_deficient) = linalg::lstsq(&columns, obs, nq, rcond);
    let r = linalg::residual(&columns, &coefficients, obs, nq);
    Ok(ResidualUpdate {
        coefficients,
        residual: ComplexTensor::new(problem.observation.space().clone(), r)?,
        rank_deficient,
    })
}

/// Separable multidimensional OMP.
///
/// Per iteration: correlation tensor from the current residual, projection
/// initialization over all dictionaries in grouped order, up to
/// `refinement_sweeps` cyclic refinement passes (stopping early once a pass
/// changes nothing), then a joint least-squares refit. Stops early when the
/// residual is small or orthogonal to every atom.
pub fn smomp_solve(problem: &SeparableProblem, cfg: &SolverConfig) -> Result<SparseSolution> {
    problem.validate()?;
    let atoms_per_dim = problem.atoms_per_dim();
    cfg.validate(&atoms_per_dim)?;
    let n_dims = atoms_per_dim.len();
    let factors = &problem.factors;

    let obs_norm = problem.observation.norm();
    let mut sol = SparseSolution::empty(&problem.observation, problem.n_columns());
    if obs_norm == 0.0 {
        return Ok(sol);
    }

    let mut residual = problem.observation.clone();
    for _ in 0..cfg.n_atoms {
        if residual.norm() <= cfg.rel_tol * obs_norm {
            break;
        }
        let o_phi = smomp_correlation(&residual, factors)?;

        let mut state = ProjectionState::new(&o_phi, factors);
        for g in 0..n_dims {
            project_initialize(factors, &mut state, g, &sol.support)?;
        }
        let initial = state.joint_index().expect("all dimensions initialized");
        let mut joint = initial.0.clone();
        let mut objective = vec![joint_objective(&o_phi, factors, &joint)?];

        let mut sweeps_run = 0;
        for _ in 0..cfg.refinement_sweeps {
            sweeps_run += 1;
            let mut changed = false;
            for g in 0..n_dims {
                let best = project_refine(&o_phi, factors, &joint, g, &sol.support)?;
                if best != joint[g] {
                    joint[g] = best;
                    changed = true;
                }
                let value = joint_objective(&o_phi, factors, &joint)?;
                debug_assert!(
                    value >= objective.last().copied().unwrap_or(f64::NEG_INFINITY) * (1.0 - 1e-9),
                    "refinement decreased the objective"
                );
                objective.push(value);
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
        sol.support.push(selected.clone());
        sol.trace.push(IterationTrace {
            initial,
            selected,
            sweeps_run,
            objective,
        });

        let update = residual_update(problem, &sol.support, cfg.rcond)?;
        residual = update.residual;
        sol.coefficients = update.coefficients;
        sol.rank_deficient = update.rank_deficient;
        sol.residual_norms.push(residual.norm());
    }
    sol.residual = residual;
    Ok(sol)
}
