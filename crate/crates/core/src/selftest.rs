//! Quick oracle-equivalence suite behind `smomp selftest`.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::index::MultiIndex;
use crate::linalg;
use crate::mmwave::estimate::nearest_grid_atom;
use crate::mmwave::problem::{
    assemble_problem, channel_dictionaries, direct_dense_measurement, direct_row_to_separable,
};
use crate::mmwave::scene::{gen_channel_taps, generate_scene, SceneMode};
use crate::mmwave::sounding::{
    build_frames, sound_channel, sound_noiseless, whiten_frames, whiten_observations,
};
use crate::mmwave::system::SystemConfig;
use crate::momp::{densify, momp_solve};
use crate::random::{random_separable_problem, ProblemShape};
use crate::smomp::smomp_solve;
use crate::solution::SolverConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, failures: usize, total: usize, what: &str) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: failures == 0,
        detail: format!("{} of {total} {what} agree", total - failures),
    }
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Separable vs dense solver on random problems.
pub fn check_oracle_equivalence(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let shape = ProblemShape::default();
    let mut failures = 0;
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let n_atoms = rng.random_range(1..=3);
        let p = random_separable_problem(&shape, n_atoms, 3, 0.05, &mut rng);
        let cfg = SolverConfig::with_atoms(n_atoms);
        let s = smomp_solve(&p, &cfg)?;
        let m = momp_solve(&densify(&p, None)?, &cfg)?;
        if s.support != m.support || rel_diff(&s.coefficients, &m.coefficients) > 1e-8 {
            failures += 1;
        }
    }
    Ok(outcome(
        "oracle-equivalence",
        failures,
        instances,
        "random problems",
    ))
}

/// Plain OMP on the columns of `a` (`rows x n`, column-major) with
/// normalized correlations and smallest-index tie-breaking. Stops early once
/// the residual drops to `rel_tol * ||b||` or is orthogonal to every column.
pub fn textbook_omp(
    a: &[Complex64],
    b: &[Complex64],
    rows: usize,
    n_atoms: usize,
    rel_tol: f64,
) -> Vec<usize> {
    let stop = rel_tol * b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let n = a.len() / rows;
    let col = |j: usize| &a[j * rows..(j + 1) * rows];
    let norms: Vec<f64> = (0..n)
        .map(|j| col(j).iter().map(|x| x.norm_sqr()).sum())
        .collect();
    let mut support = Vec::new();
    let mut r = b.to_vec();
    for _ in 0..n_atoms {
        if r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() <= stop {
            break;
        }
        let num: Vec<f64> = (0..n)
            .map(|j| {
                (0..r.len() / rows)
                    .map(|c| {
                        col(j)
                            .iter()
                            .zip(&r[c * rows..(c + 1) * rows])
                            .map(|(x, y)| x.conj() * y)
                            .sum::<Complex64>()
                            .norm_sqr()
                    })
                    .sum()
            })
            .collect();
        let scores = linalg::ratio_scores(&num, &norms);
        let mut mask = vec![false; n];
        for &j in &support {
            mask[j] = true;
        }
        let Some(best) = linalg::argmax(&scores, Some(&mask)) else {
            break;
        };
        if linalg::is_exhausted(
            scores[best],
            r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt(),
        ) {
            break;
        }
        support.push(best);
        let sub: Vec<Complex64> = support
            .iter()
            .flat_map(|&j| col(j).iter().copied())
            .collect();
        let (x, _) = linalg::lstsq(&sub, b, rows, 1e-12);
        r = linalg::residual(&sub, &x, b, rows);
    }
    support
}

/// One factor with one dictionary against [`textbook_omp`].
pub fn check_omp_reduction(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let shape = ProblemShape {
        n_factors: 1,
        max_dicts_per_factor: 1,
        max_samples: 6,
        max_atoms: 10,
        ..ProblemShape::default()
    };
    let mut failures = 0;
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let n_atoms = rng.random_range(1..=3);
        let p = random_separable_problem(&shape, n_atoms, 4, 0.05, &mut rng);
        let f = &p.factors[0];
        let d = &f.dictionaries[0];
        let rows = f.n_observations();
        // effective matrix Phi * Psi
        let a: Vec<Complex64> = (0..d.n_atoms())
            .flat_map(|j| {
                (0..rows).map(move |q| {
                    (0..d.n_samples())
                        .map(|s| f.measurement.get(&[q, s]).unwrap() * d.entry(s, j))
                        .sum()
                })
            })
            .collect();
        let expect = textbook_omp(
            &a,
            p.observation.data(),
            rows,
            n_atoms,
            SolverConfig::default().rel_tol,
        );
        let got: Vec<usize> = smomp_solve(&p, &SolverConfig::with_atoms(n_atoms))?
            .support
            .iter()
            .map(|j| j.coords()[0])
            .collect();
        if got != expect {
            failures += 1;
        }
    }
    Ok(outcome("omp-reduction", failures, instances, "instances"))
}

/// Densified separable measurement against the directly built dense one.
pub fn check_formulation(preset: &str) -> Result<CheckOutcome> {
    let cfg = SystemConfig::preset(preset)?;
    let mut frames = build_frames(&cfg)?;
    whiten_frames(&mut frames)?;
    let y: Vec<Mat<Complex64>> = frames
        .iter()
        .map(|_| Mat::zeros(cfg.rf_rx, cfg.training_len))
        .collect();
    let dense = densify(&assemble_problem(&y, &frames, &cfg)?, None)?;
    let direct = direct_dense_measurement(&frames, &cfg)?;
    let rows = direct.dims()[0];
    let cols = direct.len() / rows;
    let mut worst: f64 = 0.0;
    for r in 0..rows {
        let s = direct_row_to_separable(r, &cfg);
        for c in 0..cols {
            let a = direct.data()[r + rows * c];
            let b = dense.measurement.data()[s + rows * c];
            worst = worst.max((a - b).norm() / a.norm().max(1.0));
        }
    }
    Ok(CheckOutcome {
        name: "formulation",
        passed: worst <= 1e-12,
        detail: format!("{preset}: largest entry difference {worst:.3e}"),
    })
}

/// Noiseless on-grid scenes must be recovered exactly.
pub fn check_exact_recovery(preset: &str, seeds: u64) -> Result<CheckOutcome> {
    let cfg = SystemConfig::preset(preset)?;
    let dicts = channel_dictionaries(&cfg)?;
    let mut frames = build_frames(&cfg)?;
    whiten_frames(&mut frames)?;
    let mut failures = 0;
    let mut total = 0;
    for n_paths in 1..=3 {
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scene = generate_scene(&cfg, SceneMode::OnGrid, n_paths, &mut rng)?;
            let taps = gen_channel_taps(&scene, &cfg);
            let w = whiten_observations(&frames, &sound_noiseless(&taps, &frames, &cfg))?;
            let p = assemble_problem(&w, &frames, &cfg)?;
            let sol = smomp_solve(&p, &SolverConfig::with_atoms(n_paths))?;
            let mut truth: Vec<MultiIndex> = (0..n_paths)
                .map(|l| nearest_grid_atom(&scene, l, &dicts))
                .collect();
            let mut got = sol.support.clone();
            truth.sort();
            got.sort();
            total += 1;
            if got != truth || sol.final_residual_norm() >= 1e-8 * p.observation.norm() {
                failures += 1;
            }
        }
    }
    let mut o = outcome("exact-recovery", failures, total, "scenes");
    o.detail = format!("{preset}: {}", o.detail);
    Ok(o)
}

/// Empirical covariance of whitened noise against `sigma^2 I`.
pub fn check_whitening(preset: &str, samples: usize, seed: u64) -> Result<CheckOutcome> {
    let cfg = SystemConfig::preset(preset)?;
    let mut frames = build_frames(&cfg)?;
    whiten_frames(&mut frames)?;
    let frame = std::slice::from_ref(&frames[0]);
    let taps = vec![Mat::<Complex64>::zeros(cfg.n_rx(), cfg.n_tx()); cfg.delay_taps];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cov = Mat::<Complex64>::zeros(cfg.rf_rx, cfg.rf_rx);
    let mut n = 0;
    while n < samples {
        let y = &whiten_observations(frame, &sound_channel(&taps, frame, &cfg, &mut rng))?[0];
        cov += y * y.adjoint();
        n += y.ncols();
    }
    cov /= n as f64;
    let expect = Mat::<Complex64>::identity(cfg.rf_rx, cfg.rf_rx)
        * faer::Scale(Complex64::new(cfg.noise_mw, 0.0));
    let rel = (&cov - &expect).norm_l2() / expect.norm_l2();
    Ok(CheckOutcome {
        name: "whitening",
        passed: rel <= 0.05,
        detail: format!("{n} samples, relative covariance error {rel:.4}"),
    })
}

/// The whole suite at its default sizes.
pub fn run_selftest(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_oracle_equivalence(seed, 100)?,
        check_omp_reduction(seed, 100)?,
        check_formulation("system1-desk")?,
        check_exact_recovery("system1-desk", 10)?,
        check_exact_recovery("system2-desk", 5)?,
        check_whitening("system1-desk", 10_000, seed)?,
    ])
}
