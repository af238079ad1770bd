//! Per-subcarrier-block complex channel generation: i.i.d. Rayleigh fading
//! scaled by distance-based path loss, plus the radio-level constants
//! (bandwidth, noise density, power limits, SNR gap).

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrixkit::{svd, CMat, RANK_TOL};
use crate::topology::{link_distances, CellTopology, NetworkConfig};

/// Transmitter/receiver pairs closer than this are treated as being at this
/// distance, keeping the path-loss model away from its d -> 0 singularity.
pub const MIN_LINK_DISTANCE_M: f64 = 10.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Radio constants in linear units (watts, Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    /// Subcarrier block bandwidth W in Hz.
    pub bandwidth_hz: f64,
    /// Noise power spectral density N0 in W/Hz.
    pub noise_psd_w_per_hz: f64,
    /// SNR gap of the transceivers, linear (>= 1 for a gap configured in dB >= 0).
    pub snr_gap: f64,
    /// Maximum instantaneous BS transmit power in watts.
    pub p_max_bs_w: f64,
    /// Maximum instantaneous per-RN transmit power in watts.
    pub p_max_rn_w: f64,
}

impl RadioParams {
    /// Build from the customary configuration units.
    pub fn from_config_units(
        bandwidth_hz: f64,
        noise_psd_dbm_per_hz: f64,
        snr_gap_db: f64,
        p_max_bs_dbm: f64,
        p_max_rn_dbm: f64,
    ) -> Result<Self> {
        let params = RadioParams {
            bandwidth_hz,
            noise_psd_w_per_hz: dbm_to_watts(noise_psd_dbm_per_hz),
            snr_gap: db_to_linear(snr_gap_db),
            p_max_bs_w: dbm_to_watts(p_max_bs_dbm),
            p_max_rn_w: dbm_to_watts(p_max_rn_dbm),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.bandwidth_hz,
            self.noise_psd_w_per_hz,
            self.snr_gap,
            self.p_max_bs_w,
            self.p_max_rn_w,
        ];
        if all.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::Config("radio parameters must be positive and finite".into()));
        }
        Ok(())
    }

    /// Noise power per subcarrier block, N0 * W, in watts.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_psd_w_per_hz * self.bandwidth_hz
    }
}

/// Radio constants in the units they are configured in (dB/dBm). Kept
/// alongside [`RadioParams`] so that config files round-trip exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub snr_gap_db: f64,
    pub p_max_bs_dbm: f64,
    pub p_max_rn_dbm: f64,
}

impl RadioConfig {
    pub fn to_params(&self) -> crate::error::Result<RadioParams> {
        RadioParams::from_config_units(
            self.bandwidth_hz,
            self.noise_psd_dbm_per_hz,
            self.snr_gap_db,
            self.p_max_bs_dbm,
            self.p_max_rn_dbm,
        )
    }
}

/// Line-of-sight classification of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Los,
    Nlos,
}

/// Log-distance path loss: `PL(d) = intercept + slope * log10(d_km)` in dB.
/// BS-to-RN links are LOS; BS-to-UE and RN-to-UE links are NLOS.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLossModel {
    pub los_intercept_db: f64,
    pub los_slope_db_per_decade: f64,
    pub nlos_intercept_db: f64,
    pub nlos_slope_db_per_decade: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        PathLossModel {
            los_intercept_db: 100.7,
            los_slope_db_per_decade: 23.5,
            nlos_intercept_db: 131.1,
            nlos_slope_db_per_decade: 42.8,
        }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.los_slope_db_per_decade > 0.0) || !(self.nlos_slope_db_per_decade > 0.0) {
            return Err(Error::Config("path-loss slopes must be positive".into()));
        }
        Ok(())
    }

    pub fn kind_of_link(bs_to_rn: bool) -> LinkKind {
        if bs_to_rn {
            LinkKind::Los
        } else {
            LinkKind::Nlos
        }
    }
}

/// Linear power gain `10^(-PL(d)/10)` for a link of `distance_m` meters.
pub fn path_loss_gain(distance_m: f64, kind: LinkKind, model: &PathLossModel) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Domain(format!("path loss requires distance > 0, got {distance_m}")));
    }
    let d_km = distance_m / 1000.0;
    let pl_db = match kind {
        LinkKind::Los => model.los_intercept_db + model.los_slope_db_per_decade * d_km.log10(),
        LinkKind::Nlos => model.nlos_intercept_db + model.nlos_slope_db_per_decade * d_km.log10(),
    };
    Ok(db_to_linear(-pl_db))
}

/// One Monte-Carlo draw of every channel matrix, indexed per subcarrier block.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `h_bu[n][k]`: N_U x N_B BS-to-UE channel.
    pub h_bu: Vec<Vec<CMat>>,
    /// `h_br[n][m]`: N_R x N_B BS-to-RN channel.
    pub h_br: Vec<Vec<CMat>>,
    /// `h_ru[n][m][k]`: N_U x N_R RN-to-UE channel.
    pub h_ru: Vec<Vec<Vec<CMat>>>,
}

fn has_full_row_rank(m: &CMat) -> bool {
    match svd(m) {
        Ok(dec) => {
            let smax = dec.singular_values.max();
            smax > 0.0
                && dec.singular_values.len() >= m.nrows()
                && dec.singular_values.min() > RANK_TOL * smax
        }
        Err(_) => false,
    }
}

fn draw_matrix<R: Rng>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> CMat {
    let scale = (gain / 2.0).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re * scale, im * scale)
    })
}

fn draw_full_rank<R: Rng>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> CMat {
    // Rank deficiency has probability zero; redraw defensively anyway.
    for _ in 0..16 {
        let m = draw_matrix(rows, cols, gain, rng);
        if has_full_row_rank(&m) {
            return m;
        }
    }
    panic!("unable to draw a full-row-rank channel matrix");
}

/// Draw all channel matrices for one sample: each entry is
/// `sqrt(gain(d)) * CN(0, 1)`, i.i.d. across antennas, nodes and subcarrier
/// blocks. The same realization is used by both transmission phases.
pub fn draw_channels<R: Rng>(
    topology: &CellTopology,
    config: &NetworkConfig,
    model: &PathLossModel,
    rng: &mut R,
) -> ChannelRealization {
    let (n_b, n_r, n_u) = config.antennas;
    let dists = link_distances(topology);
    let clamp = |d: f64| d.max(MIN_LINK_DISTANCE_M);
    let gain_bu: Vec<f64> = dists
        .bs_ue
        .iter()
        .map(|&d| path_loss_gain(clamp(d), LinkKind::Nlos, model).expect("positive distance"))
        .collect();
    let gain_br: Vec<f64> = dists
        .bs_rn
        .iter()
        .map(|&d| path_loss_gain(clamp(d), LinkKind::Los, model).expect("positive distance"))
        .collect();
    let gain_ru: Vec<Vec<f64>> = dists
        .rn_ue
        .iter()
        .map(|row| {
            row.iter()
                .map(|&d| path_loss_gain(clamp(d), LinkKind::Nlos, model).expect("positive distance"))
                .collect()
        })
        .collect();

    let n = config.num_subcarriers;
    let mut h_bu = Vec::with_capacity(n);
    let mut h_br = Vec::with_capacity(n);
    let mut h_ru = Vec::with_capacity(n);
    for _ in 0..n {
        h_bu.push((0..config.num_ues).map(|k| draw_full_rank(n_u, n_b, gain_bu[k], rng)).collect());
        h_br.push((0..config.num_relays).map(|m| draw_full_rank(n_r, n_b, gain_br[m], rng)).collect());
        h_ru.push(
            (0..config.num_relays)
                .map(|m| {
                    (0..config.num_ues)
                        .map(|k| draw_full_rank(n_u, n_r, gain_ru[m][k], rng))
                        .collect()
                })
                .collect(),
        );
    }
    ChannelRealization { h_bu, h_br, h_ru }
}
