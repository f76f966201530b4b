//! From a sparse solution back to physical path parameters, and the metrics
//! computed on them.

use faer::Mat;
use nalgebra::Vector3;
use num_complex::Complex64;

use super::scene::{ura_response, ArrayPose, ChannelScene};
use super::system::{SystemConfig, SPEED_OF_LIGHT};
use crate::dictionary::Dictionary;
use crate::index::MultiIndex;
use crate::solution::SparseSolution;

/// Path parameters read off one selected atom.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedPath {
    pub gain: Complex64,
    /// Receive spatial frequencies `(omega_x, omega_y)`.
    pub doa: (f64, f64),
    /// Transmit spatial frequencies `(omega_x, omega_y)`.
    pub dod: (f64, f64),
    /// Absolute delay in seconds (`tau0` plus the dictionary delay).
    pub delay: f64,
    pub atom: MultiIndex,
}

impl EstimatedPath {
    /// World-frame arrival direction. Spatial frequency pairs outside the
    /// unit disc are projected onto its boundary.
    pub fn doa_direction(&self, rx: &ArrayPose) -> Vector3<f64> {
        let (x, y) = self.doa;
        let r = (x * x + y * y).sqrt();
        if r <= 1.0 {
            rx.direction(x, y).expect("inside the unit disc")
        } else {
            rx.orientation * Vector3::new(x / r, y / r, 0.0)
        }
    }
}

/// One estimated path per selected atom, strongest `|gain|` first. The
/// dictionaries are in grouped order (receive x, receive y, transmit x,
/// transmit y, delay).
pub fn extract_paths(
    sol: &SparseSolution,
    dictionaries: &[Dictionary],
    tau0: f64,
) -> Vec<EstimatedPath> {
    let mut paths: Vec<EstimatedPath> = sol
        .support
        .iter()
        .enumerate()
        .map(|(a, j)| {
            let p = |k: usize| dictionaries[k].param(j.coords()[k]);
            EstimatedPath {
                gain: sol.coefficient(a, 0),
                doa: (p(0), p(1)),
                dod: (p(2), p(3)),
                delay: tau0 + p(4),
                atom: j.clone(),
            }
        })
        .collect();
    // stable: equal gains keep selection order
    paths.sort_by(|a, b| {
        b.gain
            .norm()
            .partial_cmp(&a.gain.norm())
            .expect("finite gains")
    });
    paths
}

/// Grid atom closest to the true parameters of `scene.paths[l]`.
pub fn nearest_grid_atom(
    scene: &ChannelScene,
    l: usize,
    dictionaries: &[Dictionary],
) -> MultiIndex {
    let path = &scene.paths[l];
    let (rx, ry) = scene.rx.spatial_frequencies(&path.doa);
    let (tx, ty) = scene.tx.spatial_frequencies(&path.dod);
    let values = [rx, ry, tx, ty, path.delay - scene.tau0];
    MultiIndex(
        values
            .iter()
            .zip(dictionaries)
            .map(|(&v, d)| d.nearest_atom(v))
            .collect(),
    )
}

/// Channel taps synthesized from estimated paths.
pub fn reconstruct_taps(
    paths: &[EstimatedPath],
    cfg: &SystemConfig,
    tau0: f64,
) -> Vec<Mat<Complex64>> {
    let ts = cfg.sample_period();
    let mut taps = vec![Mat::<Complex64>::zeros(cfg.n_rx(), cfg.n_tx()); cfg.delay_taps];
    for p in paths {
        let ar = ura_response(cfg.nrx_x, cfg.nrx_y, p.doa.0, p.doa.1);
        let at = ura_response(cfg.ntx_x, cfg.ntx_y, p.dod.0, p.dod.1);
        for (d, h) in taps.iter_mut().enumerate() {
            let g = p.gain * cfg.pulse.evaluate(d as f64 * ts + tau0 - p.delay);
            if g == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..cfg.n_tx() {
                let c = g * at[j].conj();
                for i in 0..cfg.n_rx() {
                    h[(i, j)] += ar[i] * c;
                }
            }
        }
    }
    taps
}

/// Transmitter position from the strongest path taken as line of sight:
/// `rx + c * delay * direction`. `None` when the arrival spatial
/// frequencies fall outside the unit disc.
pub fn estimate_position(path: &EstimatedPath, rx: &ArrayPose) -> Option<Vector3<f64>> {
    let dir = rx.direction(path.doa.0, path.doa.1)?;
    Some(rx.position + dir * (SPEED_OF_LIGHT * path.delay))
}

/// Worst-case position error caused by grid quantization alone: half a delay
/// cell in range plus the angular grid step at the given range.
pub fn position_error_bound(cfg: &SystemConfig, range: f64) -> f64 {
    let n_a = (cfg.k_res * cfg.nrx_x.min(cfg.nrx_y)) as f64;
    SPEED_OF_LIGHT * cfg.sample_period() / 2.0 + range * 2.0 / n_a
}

/// Angle between two directions in degrees. Non-unit inputs are normalized.
pub fn angular_error(truth: &Vector3<f64>, estimate: &Vector3<f64>) -> f64 {
    let (a, b) = (truth.norm(), estimate.norm());
    if (a - 1.0).abs() > 1e-9 || (b - 1.0).abs() > 1e-9 {
        log::warn!("angular_error: normalizing non-unit inputs ({a}, {b})");
    }
    let cos = (truth.dot(estimate) / (a * b)).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// `10 log10(sum ||H_d - H^_d||^2 / sum ||H_d||^2)`; `None` for a zero
/// channel, `-inf` for a perfect estimate.
pub fn channel_nmse(truth: &[Mat<Complex64>], estimate: &[Mat<Complex64>]) -> Option<f64> {
    let energy: f64 = truth.iter().map(|h| h.norm_l2().powi(2)).sum();
    if energy == 0.0 {
        return None;
    }
    let err: f64 = truth
        .iter()
        .zip(estimate)
        .map(|(h, e)| (h - e).norm_l2().powi(2))
        .sum();
    Some(10.0 * (err / energy).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::IndexSpace;
    use crate::mmwave::problem::channel_dictionaries;
    use crate::mmwave::scene::access_point_pose;
    use crate::tensor::ComplexTensor;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn angular_error_examples() {
        let x = Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(angular_error(&x, &x), 0.0);
        assert!((angular_error(&x, &Vector3::new(0.0, 1.0, 0.0)) - 90.0).abs() < 1e-12);
        let one = 1f64.to_radians();
        let e = angular_error(&x, &Vector3::new(one.cos(), one.sin(), 0.0));
        assert!((e - 1.0).abs() < 1e-9);
        assert!((angular_error(&(x * 3.0), &Vector3::new(0.0, 0.0, 2.0)) - 90.0).abs() < 1e-12);
    }

    #[test]
    fn nmse_examples() {
        let h = vec![Mat::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64))];
        assert_eq!(channel_nmse(&h, &h), Some(f64::NEG_INFINITY));
        let zero = vec![Mat::<Complex64>::zeros(2, 2)];
        assert!(channel_nmse(&h, &zero).unwrap().abs() < 1e-12);
        let scaled: Vec<Mat<Complex64>> = h.iter().map(|m| m * faer::Scale(c(1.1, 0.0))).collect();
        assert!((channel_nmse(&h, &scaled).unwrap() + 20.0).abs() < 1e-9);
        assert_eq!(channel_nmse(&zero, &h), None);
    }

    fn solution(support: Vec<MultiIndex>, gains: Vec<Complex64>) -> SparseSolution {
        let residual = ComplexTensor::zeros(IndexSpace::new(vec![1, 1]).unwrap());
        SparseSolution {
            support,
            coefficients: gains,
            n_columns: 1,
            residual_norms: vec![1.0, 0.0],
            residual,
            rank_deficient: false,
            trace: vec![],
        }
    }

    #[test]
    fn extract_orders_by_gain() {
        let cfg = SystemConfig::preset("system1-desk").unwrap();
        let dicts = channel_dictionaries(&cfg).unwrap();
        let sol = solution(
            vec![
                MultiIndex(vec![1, 2, 3, 4, 5]),
                MultiIndex(vec![10, 20, 3, 4, cfg.k_res]),
            ],
            vec![c(0.1, 0.0), c(0.0, -0.5)],
        );
        let paths = extract_paths(&sol, &dicts, 1e-8);
        assert_eq!(paths[0].atom, MultiIndex(vec![10, 20, 3, 4, cfg.k_res]));
        assert_eq!(paths[0].gain, c(0.0, -0.5));
        assert_eq!(paths[0].doa, (dicts[0].param(10), dicts[1].param(20)));
        assert!((paths[0].delay - (1e-8 + cfg.sample_period())).abs() < 1e-20);
        let empty = solution(vec![], vec![]);
        assert!(extract_paths(&empty, &dicts, 0.0).is_empty());
    }

    #[test]
    fn position_from_exact_parameters() {
        let rx = access_point_pose();
        let target = Vector3::new(3.0, 5.0, 1.3);
        let diff = target - rx.position;
        let (wx, wy) = rx.spatial_frequencies(&(diff / diff.norm()));
        let path = EstimatedPath {
            gain: c(1.0, 0.0),
            doa: (wx, wy),
            dod: (0.0, 0.0),
            delay: diff.norm() / SPEED_OF_LIGHT,
            atom: MultiIndex(vec![]),
        };
        let p = estimate_position(&path, &rx).unwrap();
        assert!((p - target).norm() < 1e-9);
        let bad = EstimatedPath {
            doa: (0.8, 0.7),
            ..path
        };
        assert!(estimate_position(&bad, &rx).is_none());
        assert!((bad.doa_direction(&rx).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_of_on_grid_path_is_exact() {
        use crate::mmwave::scene::{gen_channel_taps, generate_scene, SceneMode};
        use rand::SeedableRng;
        let cfg = SystemConfig::preset("system1-desk").unwrap();
        let dicts = channel_dictionaries(&cfg).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let scene = generate_scene(&cfg, SceneMode::OnGrid, 2, &mut rng).unwrap();
        let paths: Vec<EstimatedPath> = (0..2)
            .map(|l| {
                let j = nearest_grid_atom(&scene, l, &dicts);
                let p = |k: usize| dicts[k].param(j.coords()[k]);
                EstimatedPath {
                    gain: scene.paths[l].gain,
                    doa: (p(0), p(1)),
                    dod: (p(2), p(3)),
                    delay: scene.tau0 + p(4),
                    atom: j,
                }
            })
            .collect();
        let truth = gen_channel_taps(&scene, &cfg);
        let est = reconstruct_taps(&paths, &cfg, scene.tau0);
        assert!(channel_nmse(&truth, &est).unwrap() < -200.0);
    }
}
