//! Geometric multipath scenes and the tapped-delay channel they induce.

use std::f64::consts::PI;

use faer::Mat;
use nalgebra::{Rotation3, Unit, Vector3};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::system::{SystemConfig, SPEED_OF_LIGHT};
use crate::dictionary::steering_vector;
use crate::error::{Error, Result};

/// One propagation path. Directions are world-frame unit vectors: `doa`
/// points from the receiver towards where the wave comes from, `dod` from
/// the transmitter towards where it leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPath {
    pub gain: Complex64,
    /// Absolute propagation delay in seconds.
    pub delay: f64,
    pub doa: Vector3<f64>,
    pub dod: Vector3<f64>,
}

/// Position and orientation of a planar array. The array lies in the local
/// x-y plane and faces local +z.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayPose {
    pub position: Vector3<f64>,
    pub orientation: Rotation3<f64>,
}

impl ArrayPose {
    /// Spatial frequencies `(omega_x, omega_y)` of a world-frame direction.
    pub fn spatial_frequencies(&self, direction: &Vector3<f64>) -> (f64, f64) {
        let local = self.orientation.inverse() * direction;
        (local.x, local.y)
    }

    /// World-frame unit direction of the front-hemisphere wave with the given
    /// spatial frequencies; `None` when `omega_x^2 + omega_y^2 > 1`.
    pub fn direction(&self, omega_x: f64, omega_y: f64) -> Option<Vector3<f64>> {
        let rho = omega_x * omega_x + omega_y * omega_y;
        if !(rho <= 1.0) {
            return None;
        }
        Some(self.orientation * Vector3::new(omega_x, omega_y, (1.0 - rho).sqrt()))
    }

    /// Whether a direction lies strictly in front of the array.
    pub fn in_front(&self, direction: &Vector3<f64>, min_cos: f64) -> bool {
        (self.orientation.inverse() * direction).z > min_cos
    }
}

/// A transmitter, a receiver and the paths between them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScene {
    pub paths: Vec<ChannelPath>,
    pub tx: ArrayPose,
    pub rx: ArrayPose,
    /// Clock offset: the delay that lands on the first tap. Set to the
    /// earliest path delay and known to the estimator.
    pub tau0: f64,
    /// `paths[0]` is the line-of-sight path.
    pub los: bool,
}

impl ChannelScene {
    /// Index of the path with the largest `|gain|`.
    pub fn strongest_path(&self) -> Option<usize> {
        (0..self.paths.len()).max_by(|&a, &b| {
            self.paths[a]
                .gain
                .norm()
                .partial_cmp(&self.paths[b].gain.norm())
                .expect("finite gains")
                .then(b.cmp(&a))
        })
    }

    /// Checks unit directions, non-negative delays and the line-of-sight
    /// geometry.
    pub fn validate(&self) -> Result<()> {
        for (l, p) in self.paths.iter().enumerate() {
            if (p.doa.norm() - 1.0).abs() > 1e-12 || (p.dod.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("path {l} has a non-unit direction")));
            }
            if !(p.delay >= 0.0) || !p.gain.re.is_finite() || !p.gain.im.is_finite() {
                return Err(Error::Config(format!(
                    "path {l} has an invalid delay or gain"
                )));
            }
        }
        if self.los {
            let p = self
                .paths
                .first()
                .ok_or_else(|| Error::Config("LoS scene without paths".into()))?;
            let diff = self.tx.position - self.rx.position;
            let range = diff.norm();
            if (p.delay - range / SPEED_OF_LIGHT).abs() > 1e-9 {
                return Err(Error::Config(
                    "LoS delay does not match the geometry".into(),
                ));
            }
            if (p.doa - diff / range).norm() > 1e-9 {
                return Err(Error::Config(
                    "LoS direction does not match the geometry".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Response of an `nx x ny` half-wavelength URA, element `(a, b)` at
/// position `a * ny + b`.
pub fn ura_response(nx: usize, ny: usize, omega_x: f64, omega_y: f64) -> Vec<Complex64> {
    let ax = steering_vector(nx, omega_x);
    let ay = steering_vector(ny, omega_y);
    ax.iter()
        .flat_map(|&x| ay.iter().map(move |&y| x * y))
        .collect()
}

/// Tapped-delay channel `H_d = sum_l alpha_l a_R a_T^H p(d T_s + tau0 - tau_l)`
/// for `d = 0..D`, each `N_R x N_T`.
pub fn gen_channel_taps(scene: &ChannelScene, cfg: &SystemConfig) -> Vec<Mat<Complex64>> {
    let (nr, nt) = (cfg.n_rx(), cfg.n_tx());
    let ts = cfg.sample_period();
    let mut taps = vec![Mat::<Complex64>::zeros(nr, nt); cfg.delay_taps];
    for path in &scene.paths {
        let (rx, ry) = scene.rx.spatial_frequencies(&path.doa);
        let (tx, ty) = scene.tx.spatial_frequencies(&path.dod);
        let ar = ura_response(cfg.nrx_x, cfg.nrx_y, rx, ry);
        let at = ura_response(cfg.ntx_x, cfg.ntx_y, tx, ty);
        for (d, h) in taps.iter_mut().enumerate() {
            let p = cfg.pulse.evaluate(d as f64 * ts + scene.tau0 - path.delay);
            if p == 0.0 {
                continue;
            }
            let g = path.gain * p;
            for j in 0..nt {
                let c = g * at[j].conj();
                for i in 0..nr {
                    h[(i, j)] += ar[i] * c;
                }
            }
        }
    }
    taps
}

/// How scene geometry is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SceneMode {
    /// Indoor room with a wall-mounted access point, a user at 1.3 m height
    /// and first-order wall/floor/ceiling reflections. Parameters fall off
    /// the dictionary grids.
    #[default]
    Geometric,
    /// Every path parameter sits exactly on a dictionary grid point, with
    /// paths kept apart on every grid. Used for exact-recovery checks.
    OnGrid,
}

/// Room width (x), depth (y) and height (z) in meters.
pub const ROOM: [f64; 3] = [10.0, 8.0, 3.0];
/// Height of the user terminal in meters.
pub const USER_HEIGHT: f64 = 1.3;
/// Amplitude reflection coefficient of walls, floor and ceiling.
pub const REFLECTION_LOSS: f64 = 0.4;
/// Smallest grid distance between on-grid paths, in cells, per dimension.
/// On-grid paths are additionally one resolution cell (`k_res` grid cells)
/// apart in delay and along at least one receive axis; closer paths merge
/// into a single greedy pick on the oversampled grids.
pub const MIN_GRID_SEPARATION: usize = 2;
/// On-grid spatial frequencies are drawn from `[-LIMIT, LIMIT]` per axis.
const ON_GRID_OMEGA_LIMIT: f64 = 0.7;

/// Access point on the `y = 0` wall, facing into the room with its local y
/// axis pointing down.
pub fn access_point_pose() -> ArrayPose {
    ArrayPose {
        position: Vector3::new(ROOM[0] / 2.0, 0.0, 2.5),
        orientation: facing_room(),
    }
}

fn facing_room() -> Rotation3<f64> {
    let m = nalgebra::Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0);
    Rotation3::from_matrix_unchecked(m)
}

/// Rotation taking `from` onto `to` (both unit).
fn rotation_onto(from: &Vector3<f64>, to: &Vector3<f64>) -> Rotation3<f64> {
    Rotation3::rotation_between(from, to).unwrap_or_else(|| {
        let helper = if from.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        Rotation3::from_axis_angle(&Unit::new_normalize(from.cross(&helper)), PI)
    })
}

fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}

fn free_space_amplitude(cfg: &SystemConfig, length: f64) -> f64 {
    cfg.wavelength() / (4.0 * PI * length)
}

/// Draws a scene with one line-of-sight path and up to `n_paths - 1`
/// reflections.
pub fn generate_scene<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    mode: SceneMode,
    n_paths: usize,
    rng: &mut R,
) -> Result<ChannelScene> {
    if n_paths == 0 {
        return Err(Error::Config("a scene needs at least one path".into()));
    }
    let scene = match mode {
        SceneMode::Geometric => geometric_scene(cfg, n_paths, rng),
        SceneMode::OnGrid => on_grid_scene(cfg, n_paths, rng)?,
    };
    scene.validate()?;
    Ok(scene)
}

fn mirror(p: &Vector3<f64>, axis: usize, plane: f64) -> Vector3<f64> {
    let mut q = *p;
    q[axis] = 2.0 * plane - q[axis];
    q
}

fn geometric_scene<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    n_paths: usize,
    rng: &mut R,
) -> ChannelScene {
    let rx = access_point_pose();
    let user = Vector3::new(
        rng.random_range(1.0..ROOM[0] - 1.0),
        rng.random_range(1.5..ROOM[1] - 0.5),
        USER_HEIGHT,
    );
    let diff = user - rx.position;
    let range = diff.norm();
    let doa = diff / range;

    // the user array faces the access point within 30 degrees, with random roll
    let towards_ap = -doa;
    let tilt_axis = Unit::new_normalize(towards_ap.cross(&Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )));
    let boresight =
        Rotation3::from_axis_angle(&tilt_axis, rng.random_range(0.0..30f64.to_radians()))
            * towards_ap;
    let roll = Rotation3::from_axis_angle(
        &Unit::new_normalize(Vector3::z()),
        rng.random_range(0.0..2.0 * PI),
    );
    let tx = ArrayPose {
        position: user,
        orientation: rotation_onto(&Vector3::z(), &boresight) * roll,
    };

    let tau0 = range / SPEED_OF_LIGHT;
    let mut paths = vec![ChannelPath {
        gain: random_phase(rng) * free_space_amplitude(cfg, range),
        delay: tau0,
        doa,
        dod: towards_ap,
    }];

    // first-order reflections off every surface except the wall holding the AP
    let planes = [(0, 0.0), (0, ROOM[0]), (1, ROOM[1]), (2, 0.0), (2, ROOM[2])];
    let mut reflections = Vec::new();
    for &(axis, plane) in &planes {
        let image = mirror(&user, axis, plane);
        let to_image = image - rx.position;
        let length = to_image.norm();
        let doa = to_image / length;
        let ap_image = mirror(&rx.position, axis, plane);
        let dod = (ap_image - user).normalize();
        let excess = (length - range) / SPEED_OF_LIGHT;
        if rx.in_front(&doa, 0.05)
            && tx.in_front(&dod, 0.05)
            && excess < (cfg.delay_taps as f64 - 1.0) * cfg.sample_period()
        {
            reflections.push(ChannelPath {
                gain: random_phase(rng) * REFLECTION_LOSS * free_space_amplitude(cfg, length),
                delay: length / SPEED_OF_LIGHT,
                doa,
                dod,
            });
        }
    }
    reflections.shuffle(rng);
    paths.extend(reflections.into_iter().take(n_paths - 1));
    ChannelScene {
        paths,
        tx,
        rx,
        tau0,
        los: true,
    }
}

/// Grid sizes and spacings of the five dictionaries, in the order
/// receive x, receive y, transmit x, transmit y, delay.
fn grid_sizes(cfg: &SystemConfig) -> [usize; 5] {
    [
        cfg.k_res * cfg.nrx_x,
        cfg.k_res * cfg.nrx_y,
        cfg.k_res * cfg.ntx_x,
        cfg.k_res * cfg.ntx_y,
        cfg.k_res * cfg.delay_taps,
    ]
}

fn grid_omega(j: usize, n: usize) -> f64 {
    -1.0 + 2.0 * j as f64 / n as f64
}

fn random_omega_index<R: Rng + ?Sized>(n: usize, rng: &mut R) -> usize {
    let lo = ((1.0 - ON_GRID_OMEGA_LIMIT) / 2.0 * n as f64).ceil() as usize;
    let hi = ((1.0 + ON_GRID_OMEGA_LIMIT) / 2.0 * n as f64).floor() as usize;
    rng.random_range(lo..=hi.max(lo))
}

fn cyclic_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

fn on_grid_scene<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    n_paths: usize,
    rng: &mut R,
) -> Result<ChannelScene> {
    let sizes = grid_sizes(cfg);
    let mut chosen: Vec<[usize; 5]> = Vec::with_capacity(n_paths);
    let mut attempts = 0;
    while chosen.len() < n_paths {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::Config(format!(
                "cannot place {n_paths} well-separated paths on the grid"
            )));
        }
        let delay = if chosen.is_empty() {
            0
        } else {
            rng.random_range(MIN_GRID_SEPARATION..sizes[4] - cfg.k_res)
        };
        let idx = [
            random_omega_index(sizes[0], rng),
            random_omega_index(sizes[1], rng),
            random_omega_index(sizes[2], rng),
            random_omega_index(sizes[3], rng),
            delay,
        ];
        let apart = chosen.iter().all(|c| {
            (0..4).all(|k| cyclic_distance(c[k], idx[k], sizes[k]) >= MIN_GRID_SEPARATION)
                && c[4].abs_diff(idx[4]) >= MIN_GRID_SEPARATION.max(cfg.k_res)
                && (0..2).any(|k| cyclic_distance(c[k], idx[k], sizes[k]) >= cfg.k_res)
        });
        if apart {
            chosen.push(idx);
        }
    }

    let rx = ArrayPose {
        position: Vector3::new(0.0, 0.0, 2.5),
        orientation: facing_room(),
    };
    let los = chosen[0];
    let doa = rx
        .direction(grid_omega(los[0], sizes[0]), grid_omega(los[1], sizes[1]))
        .expect("grid limited to the visible region");
    let range = rng.random_range(2.0..8.0);
    let position = rx.position + doa * range;
    let dod_local = Vector3::new(
        grid_omega(los[2], sizes[2]),
        grid_omega(los[3], sizes[3]),
        0.0,
    );
    let dod_local = Vector3::new(
        dod_local.x,
        dod_local.y,
        (1.0 - dod_local.norm_squared()).sqrt(),
    );
    let tx = ArrayPose {
        position,
        orientation: rotation_onto(&dod_local, &(-doa)),
    };

    let tau0 = range / SPEED_OF_LIGHT;
    let amp = free_space_amplitude(cfg, range);
    let step = cfg.max_excess_delay() / sizes[4] as f64;
    let paths = chosen
        .iter()
        .enumerate()
        .map(|(l, idx)| {
            let scale = if l == 0 {
                1.0
            } else {
                rng.random_range(0.2..0.7)
            };
            ChannelPath {
                gain: random_phase(rng) * amp * scale,
                delay: tau0 + idx[4] as f64 * step,
                doa: rx
                    .direction(grid_omega(idx[0], sizes[0]), grid_omega(idx[1], sizes[1]))
                    .expect("visible"),
                dod: tx
                    .direction(grid_omega(idx[2], sizes[2]), grid_omega(idx[3], sizes[3]))
                    .expect("visible"),
            }
        })
        .collect::<Vec<_>>();
    let mut scene = ChannelScene {
        paths,
        tx,
        rx,
        tau0,
        los: true,
    };
    // the LoS delay is recomputed from the position so the geometry is exact
    scene.paths[0].delay = (scene.tx.position - scene.rx.position).norm() / SPEED_OF_LIGHT;
    scene.tau0 = scene.paths[0].delay;
    Ok(scene)
}
