//! Instances built by hand or drawn from simple SINR distributions, without
//! any geometry. Used by tests, the complexity sweep and the oracle checks.

use std::collections::BTreeMap;

use rand::Rng;

use crate::model::{BandwidthConfig, NetworkInstance, RelayId, Serving, StationId, UserId};

/// Incremental construction of a single-gNB instance with dense ids.
#[derive(Debug, Clone)]
pub struct InstanceBuilder {
    inst: NetworkInstance,
    next_user: u32,
}

impl InstanceBuilder {
    pub fn new(bw: BandwidthConfig, tau_g: f64) -> Self {
        Self {
            inst: NetworkInstance {
                gnb: StationId(0),
                relays: Vec::new(),
                gnb_users: Vec::new(),
                relay_users: BTreeMap::new(),
                bw,
                tau_g,
                gamma_backhaul: BTreeMap::new(),
                gamma_access: BTreeMap::new(),
            },
            next_user: 0,
        }
    }

    fn user(&mut self) -> UserId {
        self.next_user += 1;
        UserId(self.next_user - 1)
    }

    /// Adds a gNB-served user with access SINR `gamma` (linear).
    pub fn gnb_user(mut self, gamma: f64) -> Self {
        let u = self.user();
        self.inst.gnb_users.push(u);
        self.inst
            .gamma_access
            .insert((Serving::Gnb(self.inst.gnb), u), gamma);
        self
    }

    /// Adds a relay with backhaul SINR `backhaul` and one user per entry of `access`.
    pub fn relay(mut self, backhaul: f64, access: &[f64]) -> Self {
        let r = RelayId(self.inst.relays.len() as u32);
        self.inst.relays.push(r);
        self.inst.gamma_backhaul.insert(r, backhaul);
        let mut users = Vec::with_capacity(access.len());
        for gamma in access {
            let u = self.user();
            self.inst.gamma_access.insert((Serving::Relay(r), u), *gamma);
            users.push(u);
        }
        self.inst.relay_users.insert(r, users);
        self
    }

    pub fn build(self) -> NetworkInstance {
        self.inst
    }
}

/// Distribution of a random synthetic instance.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub relays: usize,
    pub users: usize,
    /// Access SINR range in dB.
    pub access_db: (f64, f64),
    /// Backhaul SINR range in dB.
    pub backhaul_db: (f64, f64),
    pub bw: BandwidthConfig,
    /// Wired cap as a fraction of the uncapped sum of station capacities;
    /// `None` leaves it infinite.
    pub tau_fraction: Option<(f64, f64)>,
}

impl SyntheticSpec {
    pub fn new(relays: usize, users: usize) -> Self {
        Self {
            relays,
            users,
            access_db: (-5.0, 30.0),
            backhaul_db: (-5.0, 30.0),
            bw: BandwidthConfig::default(),
            tau_fraction: None,
        }
    }

    /// Draws an instance. Users pick a station uniformly (gNB or any relay).
    /// The user floor is lowered, if needed, so that the busiest station
    /// can still grant it to everybody.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NetworkInstance {
        let db = |rng: &mut R, (lo, hi): (f64, f64)| {
            let x: f64 = if hi > lo { rng.gen_range(lo..hi) } else { lo };
            10f64.powf(x / 10.0)
        };
        let mut gnb_access = Vec::new();
        let mut relay_access = vec![Vec::new(); self.relays];
        for _ in 0..self.users {
            let station = rng.gen_range(0..=self.relays);
            let gamma = db(rng, self.access_db);
            if station == 0 {
                gnb_access.push(gamma);
            } else {
                relay_access[station - 1].push(gamma);
            }
        }
        let backhaul: Vec<f64> = (0..self.relays).map(|_| db(rng, self.backhaul_db)).collect();

        let mut bw = self.bw;
        let busiest_relay = relay_access.iter().map(Vec::len).max().unwrap_or(0);
        if busiest_relay > 0 {
            bw.w_min_users = bw.w_min_users.min(bw.w_r_users / busiest_relay as f64);
        }
        if !gnb_access.is_empty() {
            bw.w_min_users = bw.w_min_users.min(bw.w_g_users / gnb_access.len() as f64);
        }
        if self.relays > 0 {
            bw.w_min_relays = bw.w_min_relays.min(bw.w_g_relays / self.relays as f64);
        }

        let tau_g = match self.tau_fraction {
            None => f64::INFINITY,
            Some((lo, hi)) => {
                let full = |gammas: &[f64], band: f64| {
                    gammas.iter().map(|g| (1.0 + g).log2()).fold(0.0, f64::max) * band
                };
                let mut total = full(&gnb_access, bw.w_g_users);
                for (gb, acc) in backhaul.iter().zip(&relay_access) {
                    total += full(acc, bw.w_r_users).min((1.0 + gb).log2() * bw.w_g_relays);
                }
                let frac = if hi > lo { rng.gen_range(lo..hi) } else { lo };
                (total * frac).max(1.0)
            }
        };

        let mut b = InstanceBuilder::new(bw, tau_g);
        for g in gnb_access {
            b = b.gnb_user(g);
        }
        for (gb, acc) in backhaul.into_iter().zip(relay_access) {
            b = b.relay(gb, &acc);
        }
        b.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builder_assigns_dense_ids() {
        let inst = InstanceBuilder::new(BandwidthConfig::default(), f64::INFINITY)
            .gnb_user(1.0)
            .relay(10.0, &[2.0, 3.0])
            .relay(5.0, &[])
            .build();
        assert_eq!(inst.gnb_users, vec![UserId(0)]);
        assert_eq!(inst.users_of(RelayId(0)), &[UserId(1), UserId(2)]);
        assert!(inst.users_of(RelayId(1)).is_empty());
        assert_eq!(inst.user_count(), 3);
        validate_instance(&inst).unwrap();
    }

    #[test]
    fn samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (relays, users) in [(0, 5), (2, 6), (8, 400), (3, 0)] {
            let mut spec = SyntheticSpec::new(relays, users);
            spec.tau_fraction = Some((0.2, 1.2));
            let inst = spec.sample(&mut rng);
            validate_instance(&inst).unwrap();
            assert_eq!(inst.user_count(), users);
            assert_eq!(inst.relays.len(), relays);
        }
    }
}
