//! Propagation, interference and SINR models for the three link types:
//! relay to ground user, gNB to ground user, and gNB to relay (backhaul).
//!
//! Losses are in dB, powers in dBm at the edges and mW inside the SINR
//! sums. Shadowing samples are always passed in by the caller.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    /// LoS excess attenuation, dB.
    pub xi_los: f64,
    /// NLoS excess attenuation, dB.
    pub xi_nlos: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// gNB carrier, used for both access and backhaul, Hz.
    pub f_gnb: f64,
    /// Relay access carrier, Hz.
    pub f_relay: f64,
    /// Noise bandwidth of gNB links, Hz.
    pub w_gnb_total: f64,
    /// Noise bandwidth of relay access links, Hz.
    pub w_relay_total: f64,
    /// dBm.
    pub p_tx_gnb: f64,
    /// dBm.
    pub p_tx_relay: f64,
    /// dBm/Hz.
    pub noise_density: f64,
    pub eta_ground: f64,
    pub eta_backhaul: f64,
    /// Shadowing deviation of gNB access links, dB.
    pub sigma_ground: f64,
    /// Shadowing deviation of backhaul links, dB.
    pub sigma_backhaul: f64,
    /// Backhaul beam gain on boresight, dB.
    pub main_lobe_gain: f64,
    pub side_lobe: SideLobe,
    /// m/s.
    pub speed_of_light: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            xi_los: 1.6,
            xi_nlos: 23.0,
            beta1: 12.08,
            beta2: 0.11,
            f_gnb: 1815.1e6,
            f_relay: 2.63e9,
            w_gnb_total: 20e6,
            w_relay_total: 20e6,
            p_tx_gnb: 44.0,
            p_tx_relay: 25.0,
            noise_density: -174.0,
            eta_ground: 3.0,
            eta_backhaul: 2.0,
            sigma_ground: 8.0,
            sigma_backhaul: 4.0,
            main_lobe_gain: 15.0,
            side_lobe: SideLobe::default(),
            speed_of_light: 299_792_458.0,
        }
    }
}

/// Off-axis attenuation of a backhaul beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SideLobe {
    /// Attenuation `front_to_side_db * (1 - cos phi)` up to 90 degrees off
    /// axis, `front_to_side_db` beyond.
    CosineTaper { front_to_side_db: f64 },
    /// No radiation off boresight.
    Ideal,
}

impl Default for SideLobe {
    fn default() -> Self {
        SideLobe::CosineTaper { front_to_side_db: 25.0 }
    }
}

/// Position in meters; `h` is the altitude, zero for ground nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePosition {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl NodePosition {
    pub fn ground(x: f64, y: f64) -> Self {
        Self { x, y, h: 0.0 }
    }

    pub fn ground_distance(&self, other: &Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.ground_distance(other).hypot(self.h - other.h)
    }

    fn vector_to(&self, other: &Self) -> [f64; 3] {
        [other.x - self.x, other.y - self.y, other.h - self.h]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPattern {
    /// Unit vector from the gNB toward the served relay.
    pub boresight: [f64; 3],
    pub main_lobe_gain: f64,
    pub side_lobe: SideLobe,
}

impl BeamPattern {
    pub fn toward(from: &NodePosition, to: &NodePosition, params: &ChannelParams) -> Self {
        let v = from.vector_to(to);
        let n = norm(v);
        let boresight = if n > 0.0 { [v[0] / n, v[1] / n, v[2] / n] } else { [0.0, 0.0, 1.0] };
        Self {
            boresight,
            main_lobe_gain: params.main_lobe_gain,
            side_lobe: params.side_lobe,
        }
    }

    /// Angle between boresight and the direction from `from` to `target`.
    pub fn off_axis(&self, from: &NodePosition, target: &NodePosition) -> f64 {
        let v = from.vector_to(target);
        let n = norm(v);
        if n == 0.0 {
            return 0.0;
        }
        let b = self.boresight;
        let cos = (v[0] * b[0] + v[1] * b[1] + v[2] * b[2]) / n;
        cos.clamp(-1.0, 1.0).acos()
    }

    /// Gain in dB at off-axis angle `phi` (radians).
    pub fn gain_db(&self, phi: f64) -> f64 {
        let phi = phi.abs();
        match self.side_lobe {
            SideLobe::CosineTaper { front_to_side_db } => {
                let att = if phi <= PI / 2.0 { 1.0 - phi.cos() } else { 1.0 };
                self.main_lobe_gain - front_to_side_db * att
            }
            SideLobe::Ideal => {
                if phi == 0.0 {
                    self.main_lobe_gain
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Ground-level links shorter than this are evaluated at this distance, m.
pub const MIN_LINK_DISTANCE: f64 = 1.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Thermal noise over `band` Hz, in mW.
pub fn noise_mw(params: &ChannelParams, band: f64) -> f64 {
    db_to_linear(params.noise_density + linear_to_db(band))
}

/// Free-space loss `20 log10(4 pi f d / c)` in dB.
pub fn free_space_loss(freq: f64, dist: f64, params: &ChannelParams) -> f64 {
    20.0 * (4.0 * PI * freq / params.speed_of_light * dist).log10()
}

/// LoS probability of an air-to-ground link seen under elevation
/// `atan(h / r_ground)`.
pub fn los_probability(h: f64, r_ground: f64, params: &ChannelParams) -> f64 {
    let theta = h.atan2(r_ground).to_degrees();
    1.0 / (1.0 + params.beta1 * (-params.beta2 * (theta - params.beta1)).exp())
}

/// Mean air-to-ground loss in dB: free space plus LoS-weighted excess.
pub fn air_to_ground_loss(relay: &NodePosition, user: &NodePosition, params: &ChannelParams) -> f64 {
    let h = relay.h - user.h;
    let r = relay.ground_distance(user);
    let p = los_probability(h, r, params);
    free_space_loss(params.f_relay, h.hypot(r), params)
        + p * (params.xi_los - params.xi_nlos)
        + params.xi_nlos
}

/// gNB to ground user loss in dB.
pub fn ground_loss(dist: f64, params: &ChannelParams, shadowing: f64) -> f64 {
    10.0 * params.eta_ground * (4.0 * PI * params.f_gnb / params.speed_of_light * dist).log10()
        + shadowing
}

/// gNB to relay loss in dB.
pub fn backhaul_loss(dist: f64, params: &ChannelParams, shadowing: f64) -> f64 {
    10.0 * params.eta_backhaul * (4.0 * PI * params.f_gnb / params.speed_of_light * dist).log10()
        + shadowing
}

/// Mean received power of a relay at a user, dBm.
pub fn relay_rx_dbm(relay: &NodePosition, user: &NodePosition, params: &ChannelParams) -> f64 {
    params.p_tx_relay - air_to_ground_loss(relay, user, params)
}

/// Mean received power of a gNB at a user, dBm.
pub fn gnb_rx_dbm(
    gnb: &NodePosition,
    user: &NodePosition,
    shadowing: f64,
    params: &ChannelParams,
) -> f64 {
    params.p_tx_gnb - ground_loss(gnb.distance(user).max(MIN_LINK_DISTANCE), params, shadowing)
}

/// Boresight received power of a backhaul link, dBm.
pub fn backhaul_rx_dbm(
    gnb: &NodePosition,
    relay: &NodePosition,
    shadowing: f64,
    params: &ChannelParams,
) -> f64 {
    let dist = gnb.distance(relay).max(MIN_LINK_DISTANCE);
    params.p_tx_gnb + params.main_lobe_gain - backhaul_loss(dist, params, shadowing)
}

/// SINR of a user served by `relays[serving]`; every other relay interferes.
pub fn sinr_access_relay(
    user: &NodePosition,
    serving: usize,
    relays: &[NodePosition],
    params: &ChannelParams,
) -> f64 {
    let rx = |a: &NodePosition| db_to_linear(relay_rx_dbm(a, user, params));
    let interference: f64 = relays
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != serving)
        .map(|(_, a)| rx(a))
        .sum();
    rx(&relays[serving]) / (noise_mw(params, params.w_relay_total) + interference)
}

/// SINR of a user served by `gnbs[serving]`; every other gNB interferes.
/// `shadowing[g]` is the sample of the link from gNB `g` to this user.
pub fn sinr_access_gnb(
    user: &NodePosition,
    serving: usize,
    gnbs: &[NodePosition],
    shadowing: &[f64],
    params: &ChannelParams,
) -> f64 {
    let rx = |g: usize| db_to_linear(gnb_rx_dbm(&gnbs[g], user, shadowing[g], params));
    let interference: f64 = (0..gnbs.len()).filter(|g| *g != serving).map(rx).sum();
    rx(serving) / (noise_mw(params, params.w_gnb_total) + interference)
}

/// SINR of the backhaul link from `gnbs[serving]` to `relay`.
///
/// `beams[g]` holds one beam per relay attached to gNB `g`; a gNB without
/// beams does not transmit on the backhaul. An interfering gNB with several
/// beams contributes its mean linear gain toward the victim relay.
/// `shadowing[g]` is the sample of the link from gNB `g` to this relay.
pub fn sinr_backhaul(
    serving: usize,
    relay: &NodePosition,
    gnbs: &[NodePosition],
    beams: &[Vec<BeamPattern>],
    shadowing: &[f64],
    params: &ChannelParams,
) -> f64 {
    let signal = db_to_linear(backhaul_rx_dbm(&gnbs[serving], relay, shadowing[serving], params));
    let mut interference = 0.0;
    for (g, pos) in gnbs.iter().enumerate() {
        if g == serving || beams[g].is_empty() {
            continue;
        }
        let gain = beams[g]
            .iter()
            .map(|b| db_to_linear(b.gain_db(b.off_axis(pos, relay))))
            .sum::<f64>()
            / beams[g].len() as f64;
        let loss = backhaul_loss(pos.distance(relay).max(MIN_LINK_DISTANCE), params, shadowing[g]);
        interference += db_to_linear(params.p_tx_gnb - loss) * gain;
    }
    signal / (noise_mw(params, params.w_gnb_total) + interference)
}
