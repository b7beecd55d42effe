//! Random network topologies, cell selection and per-gNB instance assembly.
//!
//! Every random draw comes from a ChaCha stream keyed by the run seed and
//! selected by `(run_index, node class, sub-index)`, so growing one class
//! (more users, more relays) leaves the draws of the others untouched and
//! the first nodes of a class keep their positions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channels::{
    backhaul_rx_dbm, gnb_rx_dbm, relay_rx_dbm, sinr_access_gnb, sinr_access_relay,
    sinr_backhaul, BeamPattern, ChannelParams, NodePosition,
};
use crate::error::{Error, Result};
use crate::model::{
    validate_instance, BandwidthConfig, NetworkInstance, RelayId, Serving, StationId, UserId,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// m.
    pub region_radius: f64,
    pub n_gnbs: usize,
    pub relays_per_gnb: usize,
    pub n_users: usize,
    /// Wired cap of every gNB, bit/s.
    pub tau_g: f64,
    pub seed: u64,
    /// Relay altitude range, m.
    pub relay_height_min: f64,
    pub relay_height_max: f64,
    pub channel: ChannelParams,
    pub bw: BandwidthConfig,
    pub runs: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            region_radius: 750.0,
            n_gnbs: 3,
            relays_per_gnb: 3,
            n_users: 600,
            tau_g: 180e6,
            seed: 0,
            relay_height_min: 40.0,
            relay_height_max: 300.0,
            channel: ChannelParams::default(),
            bw: BandwidthConfig::default(),
            runs: 1000,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.region_radius.is_finite() && self.region_radius > 0.0) {
            return bad("region_radius must be positive");
        }
        if self.n_gnbs == 0 || self.n_users == 0 || self.runs == 0 {
            return bad("n_gnbs, n_users and runs must be positive");
        }
        if self.tau_g.is_nan() || self.tau_g <= 0.0 {
            return bad("tau_g must be positive");
        }
        if !(self.relay_height_min > 0.0 && self.relay_height_min <= self.relay_height_max)
            || !self.relay_height_max.is_finite()
        {
            return bad("relay heights need 0 < min <= max");
        }
        if self.channel.sigma_ground < 0.0 || self.channel.sigma_backhaul < 0.0 {
            return bad("shadowing deviations must be non-negative");
        }
        self.bw.check()
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_json(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_relays(&self) -> usize {
        self.n_gnbs * self.relays_per_gnb
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Gnb = 1,
    Relay = 2,
    User = 3,
    AccessShadowing = 4,
    BackhaulShadowing = 5,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, run_index: u64, class: Class, sub: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = splitmix(run_index) ^ splitmix(((class as u64) << 48) ^ sub ^ 0x5eed);
    rng.set_stream(splitmix(key));
    rng
}

/// A point uniform over the disc of radius `radius` (uniform in area).
pub fn sample_disc<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> (f64, f64) {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = 2.0 * PI * rng.gen::<f64>();
    (r * theta.cos(), r * theta.sin())
}

/// Node positions and, once [`associate`] ran, attachments. Relays and
/// users are indexed globally; ids in the instances use the same indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub gnbs: Vec<NodePosition>,
    pub relays: Vec<NodePosition>,
    pub users: Vec<NodePosition>,
    /// Serving gNB of each relay.
    pub relay_gnb: Vec<StationId>,
    /// Serving station of each user.
    pub user_station: Vec<Serving>,
}

impl Topology {
    pub fn is_associated(&self) -> bool {
        self.relay_gnb.len() == self.relays.len() && self.user_station.len() == self.users.len()
    }
}

pub fn generate_topology(cfg: &ScenarioConfig, run_index: u64) -> Topology {
    let r = cfg.region_radius;
    let mut rng = stream(cfg.seed, run_index, Class::Gnb, 0);
    let gnbs = (0..cfg.n_gnbs)
        .map(|_| {
            let (x, y) = sample_disc(&mut rng, r);
            NodePosition::ground(x, y)
        })
        .collect();
    let mut rng = stream(cfg.seed, run_index, Class::Relay, 0);
    let relays = (0..cfg.n_relays())
        .map(|_| {
            let (x, y) = sample_disc(&mut rng, r);
            let h = if cfg.relay_height_max > cfg.relay_height_min {
                rng.gen_range(cfg.relay_height_min..cfg.relay_height_max)
            } else {
                cfg.relay_height_min
            };
            NodePosition { x, y, h }
        })
        .collect();
    let mut rng = stream(cfg.seed, run_index, Class::User, 0);
    let users = (0..cfg.n_users)
        .map(|_| {
            let (x, y) = sample_disc(&mut rng, r);
            NodePosition::ground(x, y)
        })
        .collect();
    Topology {
        gnbs,
        relays,
        users,
        relay_gnb: Vec::new(),
        user_station: Vec::new(),
    }
}

/// Shadowing samples in dB: `access[g][u]` for gNB `g` to user `u`,
/// `backhaul[g][a]` for gNB `g` to relay `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSamples {
    pub access: Vec<Vec<f64>>,
    pub backhaul: Vec<Vec<f64>>,
}

impl ChannelSamples {
    /// All-zero samples for the given topology.
    pub fn zero(topo: &Topology) -> Self {
        Self {
            access: vec![vec![0.0; topo.users.len()]; topo.gnbs.len()],
            backhaul: vec![vec![0.0; topo.relays.len()]; topo.gnbs.len()],
        }
    }

    fn access_column(&self, u: usize) -> Vec<f64> {
        self.access.iter().map(|row| row[u]).collect()
    }

    fn backhaul_column(&self, a: usize) -> Vec<f64> {
        self.backhaul.iter().map(|row| row[a]).collect()
    }
}

pub fn sample_channels(cfg: &ScenarioConfig, run_index: u64, topo: &Topology) -> ChannelSamples {
    let draw = |class, g: usize, n: usize, sigma: f64| -> Vec<f64> {
        let mut rng = stream(cfg.seed, run_index, class, g as u64);
        let normal = Normal::new(0.0, sigma).expect("validated deviation");
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    };
    let ch = &cfg.channel;
    ChannelSamples {
        access: (0..topo.gnbs.len())
            .map(|g| draw(Class::AccessShadowing, g, topo.users.len(), ch.sigma_ground))
            .collect(),
        backhaul: (0..topo.gnbs.len())
            .map(|g| draw(Class::BackhaulShadowing, g, topo.relays.len(), ch.sigma_backhaul))
            .collect(),
    }
}

/// Index of the largest value; the first one wins ties.
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Cell selection by strongest mean received power, shadowing included.
///
/// Relays attach to the gNB whose boresight backhaul signal is strongest.
/// Users compare every gNB and every relay; ties go to the lowest id with
/// gNBs ranked before relays.
pub fn associate(topo: &Topology, samples: &ChannelSamples, params: &ChannelParams) -> Topology {
    let mut out = topo.clone();
    out.relay_gnb = topo
        .relays
        .iter()
        .enumerate()
        .map(|(a, pos)| {
            let rx = topo
                .gnbs
                .iter()
                .enumerate()
                .map(|(g, gp)| backhaul_rx_dbm(gp, pos, samples.backhaul[g][a], params));
            StationId(argmax(rx).expect("at least one gNB") as u32)
        })
        .collect();
    let n_gnbs = topo.gnbs.len();
    out.user_station = topo
        .users
        .iter()
        .enumerate()
        .map(|(u, pos)| {
            let gnb_rx = topo
                .gnbs
                .iter()
                .enumerate()
                .map(|(g, gp)| gnb_rx_dbm(gp, pos, samples.access[g][u], params));
            let relay_rx = topo.relays.iter().map(|a| relay_rx_dbm(a, pos, params));
            let best = argmax(gnb_rx.chain(relay_rx)).expect("at least one gNB");
            if best < n_gnbs {
                Serving::Gnb(StationId(best as u32))
            } else {
                Serving::Relay(RelayId((best - n_gnbs) as u32))
            }
        })
        .collect();
    out
}

/// One instance per gNB with SINRs from the channel models.
///
/// Fails with [`Error::InfeasibleGnb`] naming the first gNB whose bandwidth
/// floors cannot be met.
pub fn build_instances(
    topo: &Topology,
    samples: &ChannelSamples,
    cfg: &ScenarioConfig,
) -> Result<Vec<NetworkInstance>> {
    if !topo.is_associated() {
        return Err(Error::Config("topology has not been associated".into()));
    }
    let params = &cfg.channel;
    let mut beams: Vec<Vec<BeamPattern>> = vec![Vec::new(); topo.gnbs.len()];
    for (a, g) in topo.relay_gnb.iter().enumerate() {
        beams[g.index()].push(BeamPattern::toward(&topo.gnbs[g.index()], &topo.relays[a], params));
    }

    let mut instances: Vec<NetworkInstance> = (0..topo.gnbs.len())
        .map(|g| NetworkInstance {
            gnb: StationId(g as u32),
            relays: Vec::new(),
            gnb_users: Vec::new(),
            relay_users: BTreeMap::new(),
            bw: cfg.bw,
            tau_g: cfg.tau_g,
            gamma_backhaul: BTreeMap::new(),
            gamma_access: BTreeMap::new(),
        })
        .collect();

    for (a, g) in topo.relay_gnb.iter().enumerate() {
        let inst = &mut instances[g.index()];
        let r = RelayId(a as u32);
        let gamma = sinr_backhaul(
            g.index(),
            &topo.relays[a],
            &topo.gnbs,
            &beams,
            &samples.backhaul_column(a),
            params,
        );
        inst.relays.push(r);
        inst.relay_users.insert(r, Vec::new());
        inst.gamma_backhaul.insert(r, gamma);
    }
    for (u, station) in topo.user_station.iter().enumerate() {
        let id = UserId(u as u32);
        let pos = &topo.users[u];
        match *station {
            Serving::Gnb(g) => {
                let gamma = sinr_access_gnb(
                    pos,
                    g.index(),
                    &topo.gnbs,
                    &samples.access_column(u),
                    params,
                );
                let inst = &mut instances[g.index()];
                inst.gnb_users.push(id);
                inst.gamma_access.insert((*station, id), gamma);
            }
            Serving::Relay(r) => {
                let gamma = sinr_access_relay(pos, r.index(), &topo.relays, params);
                let inst = &mut instances[topo.relay_gnb[r.index()].index()];
                inst.relay_users.get_mut(&r).expect("relay registered").push(id);
                inst.gamma_access.insert((*station, id), gamma);
            }
        }
    }

    for inst in &instances {
        validate_instance(inst).map_err(|e| match e {
            Error::InfeasibleInstance(violation) => Error::InfeasibleGnb {
                gnb: inst.gnb,
                violation,
            },
            other => other,
        })?;
    }
    Ok(instances)
}

/// Everything one run produces before allocation.
#[derive(Debug)]
pub struct RunScenario {
    pub topology: Topology,
    pub samples: ChannelSamples,
    pub instances: Result<Vec<NetworkInstance>>,
}

/// Topology, channels, association and instances of run `run_index`.
pub fn run_scenario(cfg: &ScenarioConfig, run_index: u64) -> RunScenario {
    let topo = generate_topology(cfg, run_index);
    let samples = sample_channels(cfg, run_index, &topo);
    let topology = associate(&topo, &samples, &cfg.channel);
    let instances = build_instances(&topology, &samples, cfg);
    RunScenario {
        topology,
        samples,
        instances,
    }
}
