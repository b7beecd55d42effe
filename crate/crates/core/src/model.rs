//! Domain types for a single gNB allocation problem.
//!
//! All quantities are SI: bandwidths in Hz, rates in bit/s, SINRs as linear
//! power ratios. Conversions from dB, MHz or Mbps happen at the I/O edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FloorViolation, Result};

/// Relative tolerance used to decide that two rates are the same level.
pub const EPS_RATE: f64 = 1e-9;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                Self(v)
            }
        }

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// A gNB.
    StationId
);
id_type!(
    /// A wirelessly backhauled relay.
    RelayId
);
id_type!(
    /// A mobile user.
    UserId
);

/// The station serving a user: the gNB itself or one of its relays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Serving {
    Gnb(StationId),
    Relay(RelayId),
}

/// Capacity per unit bandwidth, `w * log2(1 + gamma)` with `w = 1 Hz`.
#[inline]
pub fn unit_capacity(gamma: f64) -> f64 {
    (1.0 + gamma).log2()
}

/// Shannon rate in bit/s of a link with `w` Hz and linear SINR `gamma`.
#[inline]
pub fn shannon_rate(w: f64, gamma: f64) -> f64 {
    w * unit_capacity(gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandwidthConfig {
    pub w_g_relays: f64,
    pub w_g_users: f64,
    pub w_r_users: f64,
    pub w_min_relays: f64,
    pub w_min_users: f64,
}

impl Default for BandwidthConfig {
    /// 20 MHz reused by backhaul, gNB access and relay access. The 180 kHz
    /// user floor is one LTE resource block.
    fn default() -> Self {
        Self {
            w_g_relays: 20e6,
            w_g_users: 20e6,
            w_r_users: 20e6,
            w_min_relays: 1e6,
            w_min_users: 180e3,
        }
    }
}

impl BandwidthConfig {
    pub fn check(&self) -> Result<()> {
        let all = [
            self.w_g_relays,
            self.w_g_users,
            self.w_r_users,
            self.w_min_relays,
            self.w_min_users,
        ];
        if all.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config(format!(
                "bandwidths must be finite and positive: {self:?}"
            )));
        }
        if self.w_min_relays > self.w_g_relays {
            return Err(Error::Config("w_min_relays exceeds w_g_relays".into()));
        }
        if self.w_min_users > self.w_g_users.min(self.w_r_users) {
            return Err(Error::Config("w_min_users exceeds a station band".into()));
        }
        Ok(())
    }
}

/// The allocation problem solved independently by one gNB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    pub gnb: StationId,
    pub relays: Vec<RelayId>,
    pub gnb_users: Vec<UserId>,
    pub relay_users: BTreeMap<RelayId, Vec<UserId>>,
    pub bw: BandwidthConfig,
    /// Wired backhaul cap in bit/s; `f64::INFINITY` when uncapped (JSON `null`).
    #[serde(with = "infinite_as_null")]
    pub tau_g: f64,
    pub gamma_backhaul: BTreeMap<RelayId, f64>,
    #[serde(with = "access_entries")]
    pub gamma_access: BTreeMap<(Serving, UserId), f64>,
}

impl NetworkInstance {
    /// Users of relay `r`; empty when the relay serves nobody.
    pub fn users_of(&self, r: RelayId) -> &[UserId] {
        self.relay_users.get(&r).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every user, gNB-served first, then relay-served in relay order.
    pub fn all_users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.gnb_users
            .iter()
            .copied()
            .chain(self.relays.iter().flat_map(|r| self.users_of(*r).iter().copied()))
    }

    pub fn user_count(&self) -> usize {
        self.gnb_users.len() + self.relays.iter().map(|r| self.users_of(*r).len()).sum::<usize>()
    }

    pub fn relay_user_count(&self) -> usize {
        self.user_count() - self.gnb_users.len()
    }

    /// Serving station of every user.
    pub fn serving_map(&self) -> BTreeMap<UserId, Serving> {
        let mut map = BTreeMap::new();
        for u in &self.gnb_users {
            map.insert(*u, Serving::Gnb(self.gnb));
        }
        for r in &self.relays {
            for u in self.users_of(*r) {
                map.insert(*u, Serving::Relay(*r));
            }
        }
        map
    }

    /// SINR of the serving access link of `u` at `station`.
    pub fn access_gamma(&self, station: Serving, u: UserId) -> Result<f64> {
        self.gamma_access
            .get(&(station, u))
            .copied()
            .ok_or(Error::MissingSinr(u))
    }

    pub fn backhaul_gamma(&self, r: RelayId) -> Result<f64> {
        self.gamma_backhaul
            .get(&r)
            .copied()
            .ok_or_else(|| Error::InvalidInstance(format!("relay {r} has no backhaul SINR")))
    }

    /// Unit capacities `log2(1 + gamma)` of the gNB's own users, in `gnb_users` order.
    pub fn gnb_user_capacities(&self) -> Result<Vec<f64>> {
        self.gnb_users
            .iter()
            .map(|u| self.access_gamma(Serving::Gnb(self.gnb), *u).map(unit_capacity))
            .collect()
    }

    /// Unit capacities of relay `r`'s users, in `relay_users[r]` order.
    pub fn relay_user_capacities(&self, r: RelayId) -> Result<Vec<f64>> {
        self.users_of(r)
            .iter()
            .map(|u| self.access_gamma(Serving::Relay(r), *u).map(unit_capacity))
            .collect()
    }

    /// Checks structural invariants and the bandwidth floors.
    pub fn validate(&self) -> Result<()> {
        validate_instance(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Checks that `inst` is well formed and that every bandwidth floor fits.
pub fn validate_instance(inst: &NetworkInstance) -> Result<()> {
    inst.bw.check()?;
    if inst.tau_g.is_nan() || inst.tau_g < 0.0 {
        return Err(Error::InvalidInstance(format!("tau_g = {}", inst.tau_g)));
    }

    let relay_set: BTreeSet<RelayId> = inst.relays.iter().copied().collect();
    if relay_set.len() != inst.relays.len() {
        return Err(Error::InvalidInstance("duplicate relay id".into()));
    }
    if let Some(r) = inst.relay_users.keys().find(|r| !relay_set.contains(r)) {
        return Err(Error::InvalidInstance(format!(
            "users attached to unknown relay {r}"
        )));
    }

    let mut seen = BTreeSet::new();
    for u in inst.all_users() {
        if !seen.insert(u) {
            return Err(Error::InvalidInstance(format!("user {u} attached twice")));
        }
    }

    for r in &inst.relays {
        let g = inst.backhaul_gamma(*r)?;
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "backhaul SINR of relay {r} is {g}"
            )));
        }
    }
    for (u, s) in inst.serving_map() {
        let g = inst.access_gamma(s, u)?;
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidInstance(format!("access SINR of user {u} is {g}")));
        }
    }

    let bw = &inst.bw;
    let needed = inst.relays.len() as f64 * bw.w_min_relays;
    if needed > bw.w_g_relays {
        return Err(Error::InfeasibleInstance(FloorViolation::Relays {
            relays: inst.relays.len(),
            needed,
            available: bw.w_g_relays,
        }));
    }
    let needed = inst.gnb_users.len() as f64 * bw.w_min_users;
    if needed > bw.w_g_users {
        return Err(Error::InfeasibleInstance(FloorViolation::GnbUsers {
            users: inst.gnb_users.len(),
            needed,
            available: bw.w_g_users,
        }));
    }
    for r in &inst.relays {
        let n = inst.users_of(*r).len();
        let needed = n as f64 * bw.w_min_users;
        if needed > bw.w_r_users {
            return Err(Error::InfeasibleInstance(FloorViolation::RelayUsers {
                relay: *r,
                users: n,
                needed,
                available: bw.w_r_users,
            }));
        }
    }
    Ok(())
}

/// Bandwidth shares and throughputs of every node of one instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub w_user: BTreeMap<UserId, f64>,
    pub t_user: BTreeMap<UserId, f64>,
    pub w_relay: BTreeMap<RelayId, f64>,
    pub t_relay: BTreeMap<RelayId, f64>,
}

impl Allocation {
    /// The utility: smallest user throughput, `None` without users.
    pub fn min_user_rate(&self) -> Option<f64> {
        self.t_user.values().copied().reduce(f64::min)
    }

    /// JSON with every number printed as a 17-significant-digit double.
    pub fn to_json(&self) -> String {
        fn section<K: fmt::Display>(out: &mut String, name: &str, map: &BTreeMap<K, f64>) {
            out.push_str(&format!("  \"{name}\": {{"));
            let mut first = true;
            for (k, v) in map {
                out.push_str(if first { "\n" } else { ",\n" });
                first = false;
                out.push_str(&format!("    \"{k}\": {}", fmt_f64(*v)));
            }
            out.push_str(if first { "}" } else { "\n  }" });
        }
        let mut out = String::from("{\n");
        section(&mut out, "w_user", &self.w_user);
        out.push_str(",\n");
        section(&mut out, "t_user", &self.t_user);
        out.push_str(",\n");
        section(&mut out, "w_relay", &self.w_relay);
        out.push_str(",\n");
        section(&mut out, "t_relay", &self.t_relay);
        out.push_str("\n}\n");
        out
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// `{:.16e}` keeps 17 significant digits, enough to round-trip any f64.
fn fmt_f64(v: f64) -> String {
    assert!(v.is_finite(), "allocation values are finite");
    format!("{v:.16e}")
}

/// Operation counters collected while an allocator runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocatorTrace {
    /// Passes through the relay-raising loop; zero for the baseline.
    pub loop_iterations: u64,
    pub arithmetic_ops: u64,
    pub comparisons: u64,
}

impl AllocatorTrace {
    #[inline]
    pub fn ops(&mut self, n: u64) {
        self.arithmetic_ops += n;
    }

    #[inline]
    pub fn cmp(&mut self, n: u64) {
        self.comparisons += n;
    }

    #[inline]
    pub fn iteration(&mut self) {
        self.loop_iterations += 1;
    }

    pub fn absorb(&mut self, other: &AllocatorTrace) {
        self.loop_iterations += other.loop_iterations;
        self.arithmetic_ops += other.arithmetic_ops;
        self.comparisons += other.comparisons;
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

mod access_entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{Serving, UserId};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        station: Serving,
        user: UserId,
        gamma: f64,
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(Serving, UserId), f64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|((station, user), gamma)| Entry {
            station: *station,
            user: *user,
            gamma: *gamma,
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(Serving, UserId), f64>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| ((e.station, e.user), e.gamma))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(relay_loads: &[usize], gnb_users: usize, bw: BandwidthConfig) -> NetworkInstance {
        let gnb = StationId(0);
        let mut next = 0u32;
        let mut take = |n: usize| -> Vec<UserId> {
            (0..n)
                .map(|_| {
                    next += 1;
                    UserId(next - 1)
                })
                .collect()
        };
        let gnb_users = take(gnb_users);
        let relays: Vec<RelayId> = (0..relay_loads.len() as u32).map(RelayId).collect();
        let relay_users: BTreeMap<_, _> = relays
            .iter()
            .zip(relay_loads)
            .map(|(r, n)| (*r, take(*n)))
            .collect();
        let mut gamma_access = BTreeMap::new();
        for u in &gnb_users {
            gamma_access.insert((Serving::Gnb(gnb), *u), 3.0);
        }
        for (r, us) in &relay_users {
            for u in us {
                gamma_access.insert((Serving::Relay(*r), *u), 7.0);
            }
        }
        NetworkInstance {
            gnb,
            gamma_backhaul: relays.iter().map(|r| (*r, 100.0)).collect(),
            relays,
            gnb_users,
            relay_users,
            bw,
            tau_g: f64::INFINITY,
            gamma_access,
        }
    }

    #[test]
    fn shannon_rate_examples() {
        assert_eq!(shannon_rate(1.0, 1.0), 1.0);
        assert_eq!(shannon_rate(0.0, 10.0), 0.0);
        let r = shannon_rate(20e6, 3.0);
        assert!((r - 40e6).abs() <= 1e-9 * 40e6);
    }

    #[test]
    fn validate_examples() {
        let bw = BandwidthConfig {
            w_min_relays: 1e6,
            w_g_relays: 20e6,
            w_min_users: 1e6,
            w_r_users: 20e6,
            ..Default::default()
        };
        assert!(validate_instance(&instance(&[1, 1, 1], 0, bw)).is_ok());
        assert!(validate_instance(&instance(&[], 0, bw)).is_ok());
        let err = validate_instance(&instance(&[25], 0, bw)).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleInstance(FloorViolation::RelayUsers { users: 25, .. })
        ));
        let err = validate_instance(&instance(&[0; 21], 0, bw)).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleInstance(FloorViolation::Relays { relays: 21, .. })
        ));
        let err = validate_instance(&instance(&[], 200, BandwidthConfig::default())).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleInstance(FloorViolation::GnbUsers { users: 200, .. })
        ));
    }

    #[test]
    fn validate_rejects_bad_sinr_and_duplicates() {
        let mut inst = instance(&[2], 1, BandwidthConfig::default());
        inst.gamma_backhaul.insert(RelayId(0), 0.0);
        assert!(matches!(validate_instance(&inst), Err(Error::InvalidInstance(_))));

        let mut inst = instance(&[2], 1, BandwidthConfig::default());
        inst.gnb_users.push(UserId(1));
        assert!(matches!(validate_instance(&inst), Err(Error::InvalidInstance(_))));

        let mut inst = instance(&[2], 1, BandwidthConfig::default());
        inst.gamma_access.clear();
        assert!(matches!(validate_instance(&inst), Err(Error::MissingSinr(_))));
    }

    #[test]
    fn instance_json_replays_exactly() {
        let mut inst = instance(&[2, 0, 3], 4, BandwidthConfig::default());
        inst.gamma_backhaul.insert(RelayId(1), 0.1 + 0.2);
        let text = inst.to_json();
        let back = NetworkInstance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"tau_g\": null"));

        inst.tau_g = 180e6;
        let back = NetworkInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back.tau_g, 180e6);
    }

    #[test]
    fn allocation_json_uses_seventeen_digits() {
        let mut a = Allocation::default();
        a.w_user.insert(UserId(0), 5e6);
        a.t_user.insert(UserId(0), 0.1);
        let text = a.to_json();
        assert!(text.contains("\"0\": 5.0000000000000000e6"), "{text}");
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"w_relay\": {}"));
        assert_eq!(Allocation::from_json(&text).unwrap(), a);
    }
}
