//! The channel-estimation instance in separable form, and the direct dense
//! construction it must agree with.

use faer::Mat;
use num_complex::Complex64;

use super::sounding::{apply_whitener, pilot_column, SoundingFrame};
use super::system::SystemConfig;
use crate::dictionary::{build_axis_dictionary, build_delay_dictionary, Dictionary};
use crate::error::{Error, Result};
use crate::index::IndexSpace;
use crate::smomp::{FactorBlock, SeparableProblem};
use crate::tensor::ComplexTensor;

/// Receive x, receive y, transmit x, transmit y and delay dictionaries, in
/// grouped order. The transmit dictionaries hold conjugated steering
/// vectors because the channel applies `a_T^H`.
pub fn channel_dictionaries(cfg: &SystemConfig) -> Result<Vec<Dictionary>> {
    cfg.validate()?;
    let k = cfg.k_res;
    Ok(vec![
        build_axis_dictionary(cfg.nrx_x, k * cfg.nrx_x)?,
        build_axis_dictionary(cfg.nrx_y, k * cfg.nrx_y)?,
        build_axis_dictionary(cfg.ntx_x, k * cfg.ntx_x)?.conjugate(),
        build_axis_dictionary(cfg.ntx_y, k * cfg.ntx_y)?.conjugate(),
        build_delay_dictionary(
            cfg.delay_taps,
            k * cfg.delay_taps,
            &cfg.pulse,
            cfg.max_excess_delay(),
        )?,
    ])
}

fn check_frames(frames: &[SoundingFrame], cfg: &SystemConfig) -> Result<()> {
    if frames.len() != cfg.n_frames() {
        return Err(Error::Shape(format!(
            "expected {} frames, got {}",
            cfg.n_frames(),
            frames.len()
        )));
    }
    let m2s = cfg.n_precoders();
    for (m, f) in frames.iter().enumerate() {
        if f.m1 * m2s + f.m2 != m {
            return Err(Error::Shape(format!(
                "frame {m} is labelled ({}, {})",
                f.m1, f.m2
            )));
        }
        let base_w = &frames[f.m1 * m2s];
        let base_f = &frames[f.m2];
        if f.combiner != base_w.combiner || f.precoder != base_f.precoder || f.pilot != base_f.pilot
        {
            return Err(Error::Shape(format!(
                "frame {m}: combiners must depend on m1 only, precoders and pilots on m2 only"
            )));
        }
        if (f.combiner.nrows(), f.combiner.ncols()) != (cfg.n_rx(), cfg.rf_rx)
            || (f.precoder.nrows(), f.precoder.ncols()) != (cfg.n_tx(), cfg.rf_tx)
            || (f.pilot.nrows(), f.pilot.ncols()) != (cfg.rf_tx, cfg.pilot_len())
        {
            return Err(Error::Shape(format!(
                "frame {m} has matrices of the wrong size"
            )));
        }
    }
    Ok(())
}

/// `L_{m1}^{-1} W_{m1}^H` for every combiner index.
fn whitened_combiners(frames: &[SoundingFrame], cfg: &SystemConfig) -> Result<Vec<Mat<Complex64>>> {
    (0..cfg.n_combiners())
        .map(|m1| {
            let f = &frames[m1 * cfg.n_precoders()];
            apply_whitener(f, &f.combiner.adjoint().to_owned())
        })
        .collect()
}

/// `F_{m2} S_{m2}` for every precoder index.
fn transmitted(frames: &[SoundingFrame], cfg: &SystemConfig) -> Vec<Mat<Complex64>> {
    (0..cfg.n_precoders())
        .map(|m2| &frames[m2].precoder * &frames[m2].pilot)
        .collect()
}

/// Separable problem from whitened observations `L_{m1}^{-1} Y_m`:
///
/// - `O[m1 M_R + r, m2 Q + q] = [L^{-1} Y_m]_{r, q}`, one column;
/// - `Phi_1[m1 M_R + r, i_x, i_y] = sqrt(P) [L^{-1} W^H]_{r, i_x N_R^y + i_y}`;
/// - `Phi_2[m2 Q + q, i_x, i_y, d] = [F S]_{i_x N_T^y + i_y, q + D - 1 - d}`;
///
/// with the receive dictionaries on factor 0 and the transmit and delay
/// dictionaries on factor 1.
pub fn assemble_problem(
    whitened: &[Mat<Complex64>],
    frames: &[SoundingFrame],
    cfg: &SystemConfig,
) -> Result<SeparableProblem> {
    check_frames(frames, cfg)?;
    if whitened.len() != frames.len() {
        return Err(Error::Shape(format!(
            "{} observations for {} frames",
            whitened.len(),
            frames.len()
        )));
    }
    for (m, y) in whitened.iter().enumerate() {
        if (y.nrows(), y.ncols()) != (cfg.rf_rx, cfg.training_len) {
            return Err(Error::Shape(format!(
                "observation {m} is {}x{}, expected {}x{}",
                y.nrows(),
                y.ncols(),
                cfg.rf_rx,
                cfg.training_len
            )));
        }
    }
    let (mr, q, d) = (cfg.rf_rx, cfg.training_len, cfg.delay_taps);
    let (m1s, m2s) = (cfg.n_combiners(), cfg.n_precoders());
    let sqrt_p = cfg.power_mw.sqrt();

    let lw = whitened_combiners(frames, cfg)?;
    let phi1 = ComplexTensor::from_fn(
        IndexSpace::new(vec![m1s * mr, cfg.nrx_x, cfg.nrx_y])?,
        |c| lw[c[0] / mr][(c[0] % mr, c[1] * cfg.nrx_y + c[2])] * sqrt_p,
    )?;

    let fs = transmitted(frames, cfg);
    let phi2 = ComplexTensor::from_fn(
        IndexSpace::new(vec![m2s * q, cfg.ntx_x, cfg.ntx_y, d])?,
        |c| fs[c[0] / q][(c[1] * cfg.ntx_y + c[2], pilot_column(cfg, c[0] % q, c[3]))],
    )?;

    let obs = ComplexTensor::from_fn(IndexSpace::new(vec![m1s * mr, m2s * q, 1])?, |c| {
        let (m1, r) = (c[0] / mr, c[0] % mr);
        let (m2, qq) = (c[1] / q, c[1] % q);
        whitened[m1 * m2s + m2][(r, qq)]
    })?;

    let dicts = channel_dictionaries(cfg)?;
    let (rx, tx) = dicts.split_at(2);
    SeparableProblem::new(
        obs,
        vec![
            FactorBlock::new(phi1, rx.to_vec())?,
            FactorBlock::new(phi2, tx.to_vec())?,
        ],
    )
}

/// The dense measurement tensor built directly, row
/// `m M_R Q + r Q + q` for frame `m`, combiner output `r` and symbol `q`:
/// `sqrt(P) [L^{-1} W^H]_{r, i1 N_R^y + i2} [F S]_{i3 N_T^y + i4, q + D - 1 - i5}`.
pub fn direct_dense_measurement(
    frames: &[SoundingFrame],
    cfg: &SystemConfig,
) -> Result<ComplexTensor> {
    check_frames(frames, cfg)?;
    let (mr, q) = (cfg.rf_rx, cfg.training_len);
    let lw = whitened_combiners(frames, cfg)?;
    let fs = transmitted(frames, cfg);
    let sqrt_p = cfg.power_mw.sqrt();
    let space = IndexSpace::new(vec![
        cfg.n_frames() * mr * q,
        cfg.nrx_x,
        cfg.nrx_y,
        cfg.ntx_x,
        cfg.ntx_y,
        cfg.delay_taps,
    ])?;
    ComplexTensor::from_fn(space, |c| {
        let m = c[0] / (mr * q);
        let r = (c[0] / q) % mr;
        let qq = c[0] % q;
        let f = &frames[m];
        sqrt_p
            * lw[f.m1][(r, c[1] * cfg.nrx_y + c[2])]
            * fs[f.m2][(c[3] * cfg.ntx_y + c[4], pilot_column(cfg, qq, c[5]))]
    })
}

/// The dense observation vector in the same row order as
/// [`direct_dense_measurement`].
pub fn direct_dense_observation(whitened: &[Mat<Complex64>], cfg: &SystemConfig) -> Vec<Complex64> {
    whitened
        .iter()
        .flat_map(|y| {
            (0..cfg.rf_rx).flat_map(move |r| (0..cfg.training_len).map(move |q| y[(r, q)]))
        })
        .collect()
}

/// Maps a row of the direct construction to the row of the densified
/// separable problem, `(m1 M_R + r) + M_1 M_R (m2 Q + q)`.
pub fn direct_row_to_separable(row: usize, cfg: &SystemConfig) -> usize {
    let (mr, q) = (cfg.rf_rx, cfg.training_len);
    let m = row / (mr * q);
    let r = (row / q) % mr;
    let qq = row % q;
    let (m1, m2) = (m / cfg.n_precoders(), m % cfg.n_precoders());
    (m1 * mr + r) + cfg.n_combiners() * mr * (m2 * q + qq)
}
