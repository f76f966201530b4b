use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::tensor::ComplexTensor;

/// Knobs shared by the dense and separable greedy solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Number of greedy iterations (atoms extracted).
    pub n_atoms: usize,
    /// Cyclic refinement passes over all dictionary dimensions per iteration.
    pub refinement_sweeps: usize,
    /// Stop early once `||residual|| <= rel_tol * ||observation||`.
    pub rel_tol: f64,
    /// Relative singular-value cutoff of the least-squares refit.
    pub rcond: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_atoms: 1,
            refinement_sweeps: 1,
            rel_tol: 1e-6,
            rcond: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn with_atoms(n_atoms: usize) -> Self {
        SolverConfig {
            n_atoms,
            ..Default::default()
        }
    }

    pub(crate) fn validate(&self, atoms_per_dim: &[usize]) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::Config("at least one atom must be requested".into()));
        }
        let min_atoms = atoms_per_dim.iter().copied().min().unwrap_or(0);
        if self.n_atoms > min_atoms {
            return Err(Error::Config(format!(
                "{} atoms requested but the smallest dictionary has {min_atoms}",
                self.n_atoms
            )));
        }
        if !(self.rel_tol >= 0.0) || !(self.rcond >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

/// What happened inside one greedy iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// Joint index after projection initialization.
    pub initial: MultiIndex,
    /// Joint index after refinement (the one appended to the support).
    pub selected: MultiIndex,
    pub sweeps_run: usize,
    /// Normalized correlation `sum_m |<atom, r_m>|^2 / ||atom||^2` of the
    /// current joint index, after initialization and after every refinement
    /// step.
    pub objective: Vec<f64>,
}

/// Output of a greedy solve.
#[derive(Debug, Clone)]
pub struct SparseSolution {
    /// Selected joint dictionary indices in selection order, one coordinate
    /// per dictionary in grouped order.
    pub support: Vec<MultiIndex>,
    /// Coefficients, `support.len() x n_columns`, atom index fastest.
    pub coefficients: Vec<Complex64>,
    pub n_columns: usize,
    /// Residual norm before the first iteration and after each one.
    pub residual_norms: Vec<f64>,
    /// Final residual, shaped like the observation.
    pub residual: ComplexTensor,
    /// The last least-squares refit truncated at least one singular value.
    pub rank_deficient: bool,
    pub trace: Vec<IterationTrace>,
}

impl SparseSolution {
    pub(crate) fn empty(observation: &ComplexTensor, n_columns: usize) -> Self {
        SparseSolution {
            support: Vec::new(),
            coefficients: Vec::new(),
            n_columns,
            residual_norms: vec![observation.norm()],
            residual: observation.clone(),
            rank_deficient: false,
            trace: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn coefficient(&self, atom: usize, column: usize) -> Complex64 {
        self.coefficients[column * self.support.len() + atom]
    }

    /// Energy of an atom's coefficient row across all observation columns.
    pub fn atom_energy(&self, atom: usize) -> f64 {
        (0..self.n_columns)
            .map(|c| self.coefficient(atom, c).norm_sqr())
            .sum()
    }

    pub fn final_residual_norm(&self) -> f64 {
        *self
            .residual_norms
            .last()
            .expect("residual history is never empty")
    }
}
