//! Training frames: DFT codebooks, Hadamard pilots, the received blocks and
//! their whitening.

use std::f64::consts::PI;

use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::system::{PilotReuse, SystemConfig};
use crate::error::{Error, Result};
use crate::random::complex_normal;

/// One training frame `m = m1 * M_2 + m2`.
#[derive(Debug, Clone)]
pub struct SoundingFrame {
    pub m1: usize,
    pub m2: usize,
    /// `W_{m1}`, `N_R x M_R`.
    pub combiner: Mat<Complex64>,
    /// `F_{m2}`, `N_T x M_T`.
    pub precoder: Mat<Complex64>,
    /// `S_{m2}`, `M_T x (pad_pre + Q + pad_post)`.
    pub pilot: Mat<Complex64>,
    /// Lower-triangular `L_{m1}` with `L L^H = W^H W`, once whitened.
    pub whitener: Option<Mat<Complex64>>,
}

/// `N x N` DFT matrix `exp(-2 pi i a k / N)`, unscaled.
pub fn dft_matrix(n: usize) -> Mat<Complex64> {
    Mat::from_fn(n, n, |a, k| {
        Complex64::from_polar(1.0, -2.0 * PI * ((a * k) % n) as f64 / n as f64)
    })
}

/// `(DFT_nx kron DFT_ny) / sqrt(nx ny)`: unitary with unit-modulus entries
/// scaled by `1/sqrt(N)`.
pub fn kron_dft(nx: usize, ny: usize) -> Mat<Complex64> {
    let (fx, fy) = (dft_matrix(nx), dft_matrix(ny));
    let scale = 1.0 / ((nx * ny) as f64).sqrt();
    Mat::from_fn(nx * ny, nx * ny, |r, c| {
        fx[(r / ny, c / ny)] * fy[(r % ny, c % ny)] * scale
    })
}

fn column_blocks(m: &Mat<Complex64>, width: usize) -> Vec<Mat<Complex64>> {
    (0..m.ncols() / width)
        .map(|b| m.subcols(b * width, width).to_owned())
        .collect()
}

/// Analog-digital beamformer set, one matrix per frame index.
pub type Codebook = Vec<Mat<Complex64>>;

/// Combiners `W_{m1}` and precoders `F_{m2}`: consecutive column blocks of the
/// Kronecker-DFT matrices, as many columns as RF chains.
pub fn gen_codebooks(cfg: &SystemConfig) -> Result<(Codebook, Codebook)> {
    cfg.validate()?;
    let w = column_blocks(&kron_dft(cfg.nrx_x, cfg.nrx_y), cfg.rf_rx);
    let f = column_blocks(&kron_dft(cfg.ntx_x, cfg.ntx_y), cfg.rf_tx);
    Ok((w, f))
}

/// Sylvester Hadamard matrix of order `n` (a power of two).
pub fn hadamard(n: usize) -> Result<Mat<Complex64>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "Hadamard order {n} is not a power of two"
        )));
    }
    Ok(Mat::from_fn(n, n, |a, b| {
        let sign = if (a & b).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        Complex64::new(sign, 0.0)
    }))
}

/// Column signs applied to the pilot body: all ones, or a fixed
/// pseudo-random `+-1` sequence.
fn scramble_signs(q: usize, scramble: bool) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(PILOT_SCRAMBLE_SEED);
    (0..q)
        .map(|_| {
            if !scramble || rng.random_bool(0.5) {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

const PILOT_SCRAMBLE_SEED: u64 = 0x5eed_9110;

/// Pilot matrices `S_{m2}`: `M_T` Hadamard rows of length `Q` between
/// `pad_pre` and `pad_post` zero symbols.
pub fn gen_pilots(cfg: &SystemConfig) -> Result<Vec<Mat<Complex64>>> {
    cfg.validate()?;
    let q = cfg.training_len;
    let h = hadamard(q)?;
    let signs = scramble_signs(q, cfg.pilot_scramble);
    Ok((0..cfg.n_precoders())
        .map(|m2| {
            let first = match cfg.pilot_reuse {
                PilotReuse::Identical => 0,
                PilotReuse::PerFrameRows => m2 * cfg.rf_tx,
            };
            Mat::from_fn(cfg.rf_tx, cfg.pilot_len(), |r, c| {
                if c < cfg.pad_pre || c >= cfg.pad_pre + q {
                    Complex64::new(0.0, 0.0)
                } else {
                    h[((first + r) % q, c - cfg.pad_pre)] * signs[c - cfg.pad_pre]
                }
            })
        })
        .collect())
}

/// All `M_1 M_2` frames, ordered by `m = m1 * M_2 + m2`, not yet whitened.
pub fn build_frames(cfg: &SystemConfig) -> Result<Vec<SoundingFrame>> {
    let (w, f) = gen_codebooks(cfg)?;
    let s = gen_pilots(cfg)?;
    let mut frames = Vec::with_capacity(cfg.n_frames());
    for (m1, wm) in w.iter().enumerate() {
        for (m2, (fm, sm)) in f.iter().zip(&s).enumerate() {
            frames.push(SoundingFrame {
                m1,
                m2,
                combiner: wm.clone(),
                precoder: fm.clone(),
                pilot: sm.clone(),
                whitener: None,
            });
        }
    }
    Ok(frames)
}

/// Pilot column sounded by tap `d` at received symbol `q`.
pub fn pilot_column(cfg: &SystemConfig, q: usize, d: usize) -> usize {
    q + cfg.delay_taps - 1 - d
}

/// Noiseless received blocks `sqrt(P) sum_d W^H H_d F S[:, q + D - 1 - d]`,
/// `M_R x Q` each.
pub fn sound_noiseless(
    taps: &[Mat<Complex64>],
    frames: &[SoundingFrame],
    cfg: &SystemConfig,
) -> Vec<Mat<Complex64>> {
    let sqrt_p = cfg.power_mw.sqrt();
    frames
        .iter()
        .map(|fr| {
            let wh = fr.combiner.adjoint().to_owned();
            let mut y = Mat::<Complex64>::zeros(cfg.rf_rx, cfg.training_len);
            for (d, h) in taps.iter().enumerate() {
                let g = &wh * h * &fr.precoder;
                for q in 0..cfg.training_len {
                    let s = fr.pilot.col(pilot_column(cfg, q, d));
                    let contrib = &g * s;
                    for r in 0..cfg.rf_rx {
                        y[(r, q)] += contrib[r] * sqrt_p;
                    }
                }
            }
            y
        })
        .collect()
}

/// Received blocks with receiver noise `W^H N`, `N` i.i.d. `CN(0, sigma^2)`.
pub fn sound_channel<R: Rng + ?Sized>(
    taps: &[Mat<Complex64>],
    frames: &[SoundingFrame],
    cfg: &SystemConfig,
    rng: &mut R,
) -> Vec<Mat<Complex64>> {
    let sigma = cfg.noise_mw.sqrt();
    let mut ys = sound_noiseless(taps, frames, cfg);
    for (y, fr) in ys.iter_mut().zip(frames) {
        let n = Mat::from_fn(cfg.n_rx(), cfg.training_len, |_, _| {
            complex_normal(rng) * sigma
        });
        *y += fr.combiner.adjoint() * &n;
    }
    ys
}

/// Lower Cholesky factor of `W^H W`.
pub fn whitener(combiner: &Mat<Complex64>) -> Result<Mat<Complex64>> {
    let gram = combiner.adjoint() * combiner;
    let llt = gram
        .llt(Side::Lower)
        .map_err(|_| Error::Config("combiner Gram matrix is not positive definite".into()))?;
    Ok(llt.L().to_owned())
}

/// Populates `L_{m1}` on every frame.
pub fn whiten_frames(frames: &mut [SoundingFrame]) -> Result<()> {
    for fr in frames {
        fr.whitener = Some(whitener(&fr.combiner)?);
    }
    Ok(())
}

/// `L^{-1} X` for a whitened frame.
pub fn apply_whitener(frame: &SoundingFrame, x: &Mat<Complex64>) -> Result<Mat<Complex64>> {
    let l = frame.whitener.as_ref().ok_or_else(|| {
        Error::Config(format!(
            "frame ({}, {}) is not whitened",
            frame.m1, frame.m2
        ))
    })?;
    let mut out = x.clone();
    solve_lower_triangular_in_place(l.as_ref(), out.as_mut(), Par::Seq);
    Ok(out)
}

/// Whitened observations `L_{m1}^{-1} Y_m`.
pub fn whiten_observations(
    frames: &[SoundingFrame],
    ys: &[Mat<Complex64>],
) -> Result<Vec<Mat<Complex64>>> {
    if frames.len() != ys.len() {
        return Err(Error::Shape(format!(
            "{} frames but {} received blocks",
            frames.len(),
            ys.len()
        )));
    }
    frames
        .iter()
        .zip(ys)
        .map(|(f, y)| apply_whitener(f, y))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tiny(nrx: usize, mr: usize, ntx: usize, mt: usize, q: usize, d: usize) -> SystemConfig {
        let mut cfg = SystemConfig::preset("system1-desk").unwrap();
        cfg.nrx_x = 1;
        cfg.nrx_y = nrx;
        cfg.rf_rx = mr;
        cfg.ntx_x = 1;
        cfg.ntx_y = ntx;
        cfg.rf_tx = mt;
        cfg.training_len = q;
        cfg.delay_taps = d;
        cfg.pad_pre = d;
        cfg.pad_post = d;
        cfg.pilot_scramble = false;
        cfg
    }

    fn close(a: &Mat<Complex64>, b: &Mat<Complex64>, tol: f64) -> bool {
        a.nrows() == b.nrows() && a.ncols() == b.ncols() && (a - b).norm_l2() <= tol
    }

    #[test]
    fn two_element_combiners_are_dft_columns() {
        let cfg = tiny(2, 1, 1, 1, 4, 1);
        let (w, f) = gen_codebooks(&cfg).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(w.len(), 2);
        assert!(close(&w[0], &Mat::from_fn(2, 1, |_, _| c(s, 0.0)), 1e-15));
        assert!(close(
            &w[1],
            &Mat::from_fn(2, 1, |r, _| c(if r == 0 { s } else { -s }, 0.0)),
            1e-15
        ));
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn codebook_blocks_are_orthonormal_and_reassemble() {
        let cfg = SystemConfig::preset("system2-desk").unwrap();
        let (w, f) = gen_codebooks(&cfg).unwrap();
        assert_eq!(w.len(), cfg.n_combiners());
        assert_eq!(f.len(), cfg.n_precoders());
        for (blocks, n, nx, ny) in [
            (&w, cfg.n_rx(), cfg.nrx_x, cfg.nrx_y),
            (&f, cfg.n_tx(), cfg.ntx_x, cfg.ntx_y),
        ] {
            let mut full = Mat::<Complex64>::zeros(n, n);
            let width = blocks[0].ncols();
            for (b, m) in blocks.iter().enumerate() {
                let gram = m.adjoint() * m;
                assert!(close(&gram, &Mat::identity(width, width), 1e-12));
                for i in 0..n {
                    for j in 0..width {
                        assert!((m[(i, j)].norm() - 1.0 / (n as f64).sqrt()).abs() < 1e-14);
                        full[(i, b * width + j)] = m[(i, j)];
                    }
                }
            }
            assert!(close(
                &(full.adjoint() * &full),
                &Mat::identity(n, n),
                1e-12
            ));
            // reassembly equals the Kronecker product of unscaled DFTs
            let (fx, fy) = (dft_matrix(nx), dft_matrix(ny));
            for i in 0..n {
                for j in 0..n {
                    let expect = fx[(i / ny, j / ny)] * fy[(i % ny, j % ny)] / (n as f64).sqrt();
                    assert!((full[(i, j)] - expect).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn pilot_examples() {
        let cfg = tiny(1, 1, 1, 1, 4, 2);
        let s = &gen_pilots(&cfg).unwrap()[0];
        assert_eq!((s.nrows(), s.ncols()), (1, 2 + 4 + 2));
        for col in 0..8 {
            let expect = if (2..6).contains(&col) { 1.0 } else { 0.0 };
            assert_eq!(s[(0, col)], c(expect, 0.0));
        }

        let cfg = tiny(1, 1, 2, 2, 2, 1);
        let s = &gen_pilots(&cfg).unwrap()[0];
        let body: Vec<Complex64> = (0..2)
            .flat_map(|r| (1..3).map(move |q| (r, q)))
            .map(|(r, q)| s[(r, q)])
            .collect();
        assert_eq!(
            body,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]
        );
    }

    #[test]
    fn pilot_rows_are_orthogonal() {
        let cfg = SystemConfig::preset("system2-desk").unwrap();
        let s = &gen_pilots(&cfg).unwrap()[0];
        let q = cfg.training_len;
        for a in 0..cfg.rf_tx {
            for b in 0..cfg.rf_tx {
                let x: Complex64 = (0..s.ncols()).map(|k| s[(a, k)] * s[(b, k)].conj()).sum();
                let expect = if a == b { q as f64 } else { 0.0 };
                assert!((x - c(expect, 0.0)).norm() < 1e-12);
            }
        }
        // the scrambled DC row is no longer constant
        assert!(cfg.pilot_scramble);
        let body: Vec<f64> = (cfg.pad_pre..cfg.pad_pre + q)
            .map(|k| s[(0, k)].re)
            .collect();
        assert!(body.iter().all(|v| v.abs() == 1.0) && body.iter().any(|&v| v < 0.0));
    }

    #[test]
    fn per_frame_rows_differ_between_frames() {
        let mut cfg = SystemConfig::preset("system1-desk").unwrap();
        cfg.pilot_reuse = PilotReuse::PerFrameRows;
        let s = gen_pilots(&cfg).unwrap();
        assert!((&s[0] - &s[1]).norm_l2() > 1.0);
        cfg.pilot_reuse = PilotReuse::Identical;
        let s = gen_pilots(&cfg).unwrap();
        assert!((&s[0] - &s[1]).norm_l2() == 0.0);
    }

    #[test]
    fn non_power_of_two_training_rejected() {
        let mut cfg = SystemConfig::preset("system1-desk").unwrap();
        cfg.training_len = 12;
        assert!(gen_pilots(&cfg).is_err());
        assert!(hadamard(6).is_err());
    }

    #[test]
    fn zero_channel_noiseless_is_silent() {
        let cfg = SystemConfig::preset("system1-desk").unwrap();
        let frames = build_frames(&cfg).unwrap();
        let taps = vec![Mat::<Complex64>::zeros(cfg.n_rx(), cfg.n_tx()); cfg.delay_taps];
        for y in sound_noiseless(&taps, &frames, &cfg) {
            assert_eq!(y.norm_l2(), 0.0);
        }
    }

    #[test]
    fn scalar_link_reproduces_shifted_pilot() {
        let mut cfg = tiny(1, 1, 1, 1, 4, 3);
        cfg.power_mw = 4.0;
        let frames = build_frames(&cfg).unwrap();
        // only tap 0 is active, H_0 = 1
        let mut taps = vec![Mat::<Complex64>::zeros(1, 1); 3];
        taps[0][(0, 0)] = c(1.0, 0.0);
        let y = &sound_noiseless(&taps, &frames, &cfg)[0];
        let s = &frames[0].pilot;
        for q in 0..4 {
            assert_eq!(y[(0, q)], s[(0, q + 2)] * 2.0);
        }
        // y_0 reads the last padding zero, the body starts at q = 1
        assert_eq!(y[(0, 0)], c(0.0, 0.0));
        assert_eq!(y[(0, 1)], c(2.0, 0.0));
    }

    #[test]
    fn noise_covariance_matches_combiner_gram() {
        let mut cfg = tiny(4, 2, 1, 1, 16, 1);
        cfg.noise_mw = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // a non-orthogonal combiner makes the check non-trivial
        let w = Mat::from_fn(4, 2, |_, _| complex_normal(&mut rng));
        let frame = SoundingFrame {
            m1: 0,
            m2: 0,
            combiner: w.clone(),
            precoder: Mat::identity(1, 1),
            pilot: Mat::zeros(1, cfg.pilot_len()),
            whitener: None,
        };
        let taps = vec![Mat::<Complex64>::zeros(4, 1); 1];
        let mut cov = Mat::<Complex64>::zeros(2, 2);
        let mut n = 0;
        while n < 10_000 {
            let y = &sound_channel(&taps, std::slice::from_ref(&frame), &cfg, &mut rng)[0];
            cov += y * y.adjoint();
            n += y.ncols();
        }
        cov /= n as f64;
        let expect = (w.adjoint() * &w) * cfg.noise_mw;
        assert!((&cov - &expect).norm_l2() < 0.05 * expect.norm_l2());
    }

    #[test]
    fn whitener_examples() {
        let cfg = SystemConfig::preset("system1-desk").unwrap();
        let mut frames = build_frames(&cfg).unwrap();
        whiten_frames(&mut frames).unwrap();
        for f in &frames {
            let l = f.whitener.as_ref().unwrap();
            assert!(close(l, &Mat::identity(cfg.rf_rx, cfg.rf_rx), 1e-12));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Mat::from_fn(6, 3, |_, _| complex_normal(&mut rng));
        let l = whitener(&w).unwrap();
        let gram = w.adjoint() * &w;
        assert!((&l * l.adjoint() - &gram).norm_l2() < 1e-12 * gram.norm_l2());
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(l[(i, j)], c(0.0, 0.0));
            }
        }

        let dependent = Mat::from_fn(4, 2, |i, _| c(i as f64, 1.0));
        assert!(whitener(&dependent).is_err());
    }

    #[test]
    fn unwhitened_frame_is_rejected() {
        let cfg = SystemConfig::preset("system1-desk").unwrap();
        let frames = build_frames(&cfg).unwrap();
        let y = Mat::<Complex64>::zeros(cfg.rf_rx, cfg.training_len);
        assert!(apply_whitener(&frames[0], &y).is_err());
    }
}
