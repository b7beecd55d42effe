use std::collections::BTreeMap;

use crate::allocators::reduce_max_min;
use crate::model::{unit_capacity, Allocation, AllocatorTrace, NetworkInstance, RelayId, Serving, UserId};

/// Rates within this relative distance of the minimum count as minimal.
const TIE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transfer {
    /// Access band moved between users of one station.
    User { station: Serving, from: UserId, to: UserId },
    /// Backhaul band moved between relays.
    Relay { from: RelayId, to: RelayId },
}

/// An improving bandwidth exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Every move of the probe; the donor gives `amount` Hz in total, split
    /// evenly over its recipients.
    pub transfers: Vec<Transfer>,
    pub amount: f64,
    pub before: f64,
    pub after: f64,
}

impl Witness {
    pub fn is_relay_to_relay(&self) -> bool {
        self.transfers.iter().any(|t| matches!(t, Transfer::Relay { .. }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub pass: bool,
    pub witness: Option<Witness>,
}

/// `(user, capacity per Hz, bandwidth)`.
type UserBand = (UserId, f64, f64);
/// `(relay, c_gr, w_r, users)`.
type RelayBand = (RelayId, f64, f64, Vec<UserBand>);

/// Bandwidths of an allocation laid out per station.
#[derive(Clone)]
struct Layout {
    gnb: Vec<UserBand>,
    relays: Vec<RelayBand>,
}

impl Layout {
    fn new(inst: &NetworkInstance, alloc: &Allocation) -> Option<Self> {
        let user = |s: Serving, u: UserId| -> Option<(UserId, f64, f64)> {
            let g = inst.access_gamma(s, u).ok()?;
            Some((u, unit_capacity(g), *alloc.w_user.get(&u)?))
        };
        let gnb = inst
            .gnb_users
            .iter()
            .map(|u| user(Serving::Gnb(inst.gnb), *u))
            .collect::<Option<_>>()?;
        let mut relays = Vec::new();
        for r in &inst.relays {
            let users = inst
                .users_of(*r)
                .iter()
                .map(|u| user(Serving::Relay(*r), *u))
                .collect::<Option<_>>()?;
            let c = unit_capacity(inst.backhaul_gamma(*r).ok()?);
            relays.push((*r, c, *alloc.w_relay.get(r)?, users));
        }
        Some(Self { gnb, relays })
    }

    /// Best minimum rate these bandwidths support: Shannon rates, cut to the
    /// relay backhaul capacities, then to the wired cap.
    fn induced(&self, tau_g: f64) -> Vec<(UserId, f64)> {
        let mut tr = AllocatorTrace::default();
        let mut ids = Vec::new();
        let mut rates = Vec::new();
        for (u, c, w) in &self.gnb {
            ids.push(*u);
            rates.push(w * c);
        }
        for (_, c, w, users) in &self.relays {
            let own: Vec<f64> = users.iter().map(|(_, cu, wu)| wu * cu).collect();
            rates.extend(reduce_max_min(&own, w * c, &mut tr));
            ids.extend(users.iter().map(|(u, ..)| *u));
        }
        ids.into_iter().zip(reduce_max_min(&rates, tau_g, &mut tr)).collect()
    }

    fn min(&self, tau_g: f64) -> f64 {
        self.induced(tau_g).into_iter().map(|(_, t)| t).fold(f64::INFINITY, f64::min)
    }

    fn users_mut(&mut self, station: Serving) -> &mut Vec<UserBand> {
        match station {
            Serving::Gnb(_) => &mut self.gnb,
            Serving::Relay(r) => {
                &mut self.relays.iter_mut().find(|x| x.0 == r).expect("known relay").3
            }
        }
    }
}

/// Checks the first-order max-min exchange condition.
///
/// Probes move `1e-6 * W^g_relays` Hz of bandwidth, either between users
/// of one station (from the user holding the most band to the station's
/// minimum-rate users) or over the backhaul (from a relay without
/// minimum-rate users to the relays that have some). Each probe is tried
/// alone, then all of them at once, which covers minima spread over several
/// stations. The allocation fails if any probe lifts the minimum rate by
/// more than a relative `tol`, or if its own rates sit below what its
/// bandwidths already support.
pub fn maxmin_certificate(inst: &NetworkInstance, alloc: &Allocation, tol: f64) -> Certificate {
    let pass = Certificate { pass: true, witness: None };
    let Some(layout) = Layout::new(inst, alloc) else {
        return pass;
    };
    let Some(before) = alloc.min_user_rate() else {
        return pass;
    };
    let improves = |after: f64| after > before * (1.0 + tol);

    let induced = layout.induced(inst.tau_g);
    let now = induced.iter().map(|(_, t)| *t).fold(f64::INFINITY, f64::min);
    if improves(now) {
        return Certificate {
            pass: false,
            witness: Some(Witness { transfers: Vec::new(), amount: 0.0, before, after: now }),
        };
    }
    let at_min: BTreeMap<UserId, bool> = induced
        .iter()
        .map(|(u, t)| (*u, *t <= now * (1.0 + TIE)))
        .collect();

    let eps = 1e-6 * inst.bw.w_g_relays;
    let w_min_u = inst.bw.w_min_users;
    let w_min_r = inst.bw.w_min_relays;
    let mut probes: Vec<Vec<Transfer>> = Vec::new();

    let mut stations: Vec<(Serving, &Vec<UserBand>)> =
        vec![(Serving::Gnb(inst.gnb), &layout.gnb)];
    stations.extend(layout.relays.iter().map(|(r, _, _, us)| (Serving::Relay(*r), us)));
    for (station, users) in &stations {
        let donor = users
            .iter()
            .filter(|(u, _, w)| !at_min[u] && w - eps >= w_min_u)
            .max_by(|a, b| a.2.total_cmp(&b.2));
        let Some((from, ..)) = donor else { continue };
        let moves: Vec<Transfer> = users
            .iter()
            .filter(|(u, ..)| at_min[u])
            .map(|(to, ..)| Transfer::User { station: *station, from: *from, to: *to })
            .collect();
        if !moves.is_empty() {
            probes.push(moves);
        }
    }

    let hosts: Vec<RelayId> = layout
        .relays
        .iter()
        .filter(|(_, _, _, us)| us.iter().any(|(u, ..)| at_min[u]))
        .map(|x| x.0)
        .collect();
    if !hosts.is_empty() {
        let mut donors: Vec<&RelayBand> = layout
            .relays
            .iter()
            .filter(|x| !hosts.contains(&x.0) && x.2 - eps >= w_min_r)
            .collect();
        donors.sort_by(|a, b| b.2.total_cmp(&a.2));
        for d in donors {
            probes.push(hosts.iter().map(|to| Transfer::Relay { from: d.0, to: *to }).collect());
        }
    }
    if probes.len() > 1 {
        // Combined probe: every station probe plus the first backhaul probe.
        let mut all: Vec<Transfer> = Vec::new();
        let mut relay_done = false;
        for p in &probes {
            let is_relay = matches!(p[0], Transfer::Relay { .. });
            if is_relay && relay_done {
                continue;
            }
            relay_done |= is_relay;
            all.extend(p.iter().copied());
        }
        probes.push(all);
    }

    for moves in probes {
        let mut probe = layout.clone();
        apply(&mut probe, &moves, eps);
        let after = probe.min(inst.tau_g);
        if improves(after) {
            return Certificate {
                pass: false,
                witness: Some(Witness { transfers: moves, amount: eps, before, after }),
            };
        }
    }
    pass
}

/// Applies grouped moves: each donor gives `eps` in total, evenly split.
fn apply(layout: &mut Layout, moves: &[Transfer], eps: f64) {
    let mut fan_out: BTreeMap<(u8, u32, u32), usize> = BTreeMap::new();
    let key = |t: &Transfer| match t {
        Transfer::User { station: Serving::Gnb(g), from, .. } => (0, g.0, from.0),
        Transfer::User { station: Serving::Relay(r), from, .. } => (1, r.0, from.0),
        Transfer::Relay { from, .. } => (2, 0, from.0),
    };
    for t in moves {
        *fan_out.entry(key(t)).or_default() += 1;
    }
    for t in moves {
        let share = eps / fan_out[&key(t)] as f64;
        match *t {
            Transfer::User { station, from, to } => {
                for (u, _, w) in layout.users_mut(station).iter_mut() {
                    if *u == from {
                        *w -= share;
                    } else if *u == to {
                        *w += share;
                    }
                }
            }
            Transfer::Relay { from, to } => {
                for (r, _, w, _) in layout.relays.iter_mut() {
                    if *r == from {
                        *w -= share;
                    } else if *r == to {
                        *w += share;
                    }
                }
            }
        }
    }
}
