//! Fully-digital spectral efficiency on the subcarriers of a tapped channel.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;

use super::system::SystemConfig;
use crate::error::{Error, Result};

/// `H[f] = sum_d H_d exp(-2 pi i f d / K)` for `f = 0..K`.
pub fn frequency_response(taps: &[Mat<Complex64>], n_subcarriers: usize) -> Vec<Mat<Complex64>> {
    let (nr, nt) = taps.first().map_or((0, 0), |h| (h.nrows(), h.ncols()));
    (0..n_subcarriers)
        .map(|f| {
            let mut hf = Mat::<Complex64>::zeros(nr, nt);
            for (d, h) in taps.iter().enumerate() {
                let w = Complex64::from_polar(
                    1.0,
                    -2.0 * PI * ((f * d) % n_subcarriers) as f64 / n_subcarriers as f64,
                );
                hf += h * faer::Scale(w);
            }
            hf
        })
        .collect()
}

/// Water-filling power split of a unit budget over channels with
/// signal-to-noise gains `g_s`: `p_s = max(0, mu - 1/g_s)`.
pub fn waterfill(gains: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).expect("finite gains"));
    let mut powers = vec![0.0; gains.len()];
    if gains.iter().all(|&g| g <= 0.0) {
        powers
            .iter_mut()
            .for_each(|p| *p = 1.0 / gains.len().max(1) as f64);
        return powers;
    }
    for k in (1..=order.len()).rev() {
        let active = &order[..k];
        if gains[active[k - 1]] <= 0.0 {
            continue;
        }
        let mu = (1.0 + active.iter().map(|&s| 1.0 / gains[s]).sum::<f64>()) / k as f64;
        if mu - 1.0 / gains[active[k - 1]] > 0.0 {
            for &s in active {
                powers[s] = mu - 1.0 / gains[s];
            }
            return powers;
        }
    }
    powers
}

fn n_streams(cfg: &SystemConfig) -> usize {
    cfg.rf_tx.min(cfg.n_rx()).min(cfg.n_tx())
}

fn check_subcarriers(cfg: &SystemConfig, n_subcarriers: usize) -> Result<()> {
    if n_subcarriers < cfg.delay_taps {
        return Err(Error::Config(format!(
            "{n_subcarriers} subcarriers cannot resolve {} taps",
            cfg.delay_taps
        )));
    }
    Ok(())
}

struct Modes {
    sigma: Vec<f64>,
    u: Mat<Complex64>,
    v: Mat<Complex64>,
}

fn strongest_modes(h: &Mat<Complex64>, n: usize) -> Result<Modes> {
    let svd = h
        .thin_svd()
        .map_err(|_| Error::NonFinite("channel singular value decomposition"))?;
    let k = n.min(svd.S().column_vector().nrows());
    Ok(Modes {
        sigma: (0..k).map(|i| svd.S()[i].re).collect(),
        u: svd.U().subcols(0, k).to_owned(),
        v: svd.V().subcols(0, k).to_owned(),
    })
}

/// Mean over subcarriers of `sum_s log2(1 + P p_s lambda_s^2 / sigma^2)`,
/// water-filling over the `N_S = M_T` strongest singular values.
pub fn spectral_efficiency(
    taps: &[Mat<Complex64>],
    cfg: &SystemConfig,
    n_subcarriers: usize,
) -> Result<f64> {
    check_subcarriers(cfg, n_subcarriers)?;
    let snr = cfg.power_mw / cfg.noise_mw;
    let mut total = 0.0;
    for hf in frequency_response(taps, n_subcarriers) {
        let modes = strongest_modes(&hf, n_streams(cfg))?;
        let gains: Vec<f64> = modes.sigma.iter().map(|s| snr * s * s).collect();
        let p = waterfill(&gains);
        total += gains
            .iter()
            .zip(&p)
            .map(|(g, p)| (1.0 + g * p).log2())
            .sum::<f64>();
    }
    Ok(total / n_subcarriers as f64)
}

/// Rate achieved on the true channel when precoder, combiner and power
/// split are designed from an estimate: mean over subcarriers of
/// `log2 det(I + P/sigma^2 W^H H F diag(p) F^H H^H W)` with `W`, `F` the
/// dominant singular vectors of the estimate.
pub fn achieved_spectral_efficiency(
    truth: &[Mat<Complex64>],
    estimate: &[Mat<Complex64>],
    cfg: &SystemConfig,
    n_subcarriers: usize,
) -> Result<f64> {
    check_subcarriers(cfg, n_subcarriers)?;
    let snr = cfg.power_mw / cfg.noise_mw;
    let ns = n_streams(cfg);
    let h_true = frequency_response(truth, n_subcarriers);
    let h_est = frequency_response(estimate, n_subcarriers);
    let mut total = 0.0;
    for (h, he) in h_true.iter().zip(&h_est) {
        let modes = strongest_modes(he, ns)?;
        let gains: Vec<f64> = modes.sigma.iter().map(|s| snr * s * s).collect();
        let p = waterfill(&gains);
        let k = p.len();
        let scaled_f = Mat::from_fn(modes.v.nrows(), k, |i, j| {
            modes.v[(i, j)] * (snr * p[j]).sqrt()
        });
        let g = modes.u.adjoint() * h * &scaled_f;
        let m = Mat::<Complex64>::identity(k, k) + &g * g.adjoint();
        let llt = m
            .llt(Side::Lower)
            .map_err(|_| Error::NonFinite("effective channel covariance"))?;
        let l = llt.L();
        total += (0..k).map(|i| 2.0 * l[(i, i)].re.log2()).sum::<f64>();
    }
    Ok(total / n_subcarriers as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmwave::scene::ura_response;
    use crate::random::complex_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk() -> SystemConfig {
        SystemConfig::preset("system1-desk").unwrap()
    }

    #[test]
    fn zero_channel_has_zero_rate() {
        let cfg = desk();
        let taps = vec![Mat::<Complex64>::zeros(cfg.n_rx(), cfg.n_tx()); cfg.delay_taps];
        assert_eq!(spectral_efficiency(&taps, &cfg, 64).unwrap(), 0.0);
        assert_eq!(
            achieved_spectral_efficiency(&taps, &taps, &cfg, 64).unwrap(),
            0.0
        );
    }

    #[test]
    fn rank_one_single_tap_closed_form() {
        let mut cfg = desk();
        cfg.rf_tx = 1;
        let g = Complex64::new(3e-5, -4e-5);
        let ar = ura_response(cfg.nrx_x, cfg.nrx_y, 0.3, -0.1);
        let at = ura_response(cfg.ntx_x, cfg.ntx_y, -0.6, 0.2);
        let mut taps = vec![Mat::<Complex64>::zeros(cfg.n_rx(), cfg.n_tx()); cfg.delay_taps];
        taps[0] = Mat::from_fn(cfg.n_rx(), cfg.n_tx(), |i, j| g * ar[i] * at[j].conj());
        let expect = (1.0
            + cfg.power_mw * (cfg.n_rx() * cfg.n_tx()) as f64 * g.norm_sqr() / cfg.noise_mw)
            .log2();
        let se = spectral_efficiency(&taps, &cfg, 64).unwrap();
        assert!((se - expect).abs() < 1e-9 * expect, "{se} vs {expect}");
        let achieved = achieved_spectral_efficiency(&taps, &taps, &cfg, 64).unwrap();
        assert!((achieved - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn waterfilling_examples() {
        assert_eq!(waterfill(&[1.0]), vec![1.0]);
        let p = waterfill(&[1.0, 1.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        // a very weak mode gets nothing
        let p = waterfill(&[10.0, 0.01]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = waterfill(&[2.0, 4.0, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(waterfill(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn perfect_knowledge_is_an_upper_bound() {
        let cfg = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let scale = 1e-4;
        for _ in 0..10 {
            let truth: Vec<Mat<Complex64>> = (0..cfg.delay_taps)
                .map(|_| {
                    Mat::from_fn(cfg.n_rx(), cfg.n_tx(), |_, _| {
                        complex_normal(&mut rng) * scale
                    })
                })
                .collect();
            let est: Vec<Mat<Complex64>> = truth
                .iter()
                .map(|h| {
                    h + Mat::from_fn(h.nrows(), h.ncols(), |_, _| {
                        complex_normal(&mut rng) * scale * 0.5
                    })
                })
                .collect();
            let perfect = spectral_efficiency(&truth, &cfg, 64).unwrap();
            let achieved = achieved_spectral_efficiency(&truth, &est, &cfg, 64).unwrap();
            assert!(
                achieved <= perfect * (1.0 + 1e-12),
                "{achieved} > {perfect}"
            );
            assert!(achieved > 0.0);
        }
    }

    #[test]
    fn too_few_subcarriers_rejected() {
        let cfg = desk();
        let taps = vec![Mat::<Complex64>::zeros(cfg.n_rx(), cfg.n_tx()); cfg.delay_taps];
        assert!(spectral_efficiency(&taps, &cfg, cfg.delay_taps - 1).is_err());
    }
}
