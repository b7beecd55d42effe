//! Exact max-min allocation for a gNB, its relays and all their users.
//!
//! Every relay starts from its minimum backhaul share and each station
//! allocates its own users under that relay traffic. The raising loop then
//! repeatedly takes the relay-served users that share the lowest rate still
//! below their Shannon bound and lifts them together, up to the next rate
//! level or the first Shannon bound in the group, buying the extra backhaul
//! bandwidth each relay needs for it. When the free backhaul band cannot pay
//! for a full step, the group is lifted as far as the band allows and the
//! loop ends. The wired cap `tau_g` is enforced last by one joint reduction.
//!
//! Relay users are sorted by rate once, and the group's Shannon bounds sit in
//! a min-heap, so every iteration costs `O(|relays|)` arithmetic plus
//! amortised `O(1)` work per user entering or leaving the group.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{finish, single_cell_alloc, CellAllocation};
use crate::error::Result;
use crate::model::{
    unit_capacity, validate_instance, Allocation, AllocatorTrace, NetworkInstance, EPS_RATE,
};

/// Result of a LinEx run with the loop's leftover backhaul band exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinexOutcome {
    pub allocation: Allocation,
    pub trace: AllocatorTrace,
    /// Backhaul band still free when the raising loop stopped. It is split
    /// evenly over the relays so that the relay shares fill the band.
    pub residual_relay_band: f64,
}

pub fn linex(inst: &NetworkInstance) -> Result<(Allocation, AllocatorTrace)> {
    let out = linex_detailed(inst)?;
    Ok((out.allocation, out.trace))
}

#[derive(Debug, Clone, Copy)]
struct RelayUser {
    relay: usize,
    /// Shannon bound `w_u log2(1 + gamma)` of the granted bandwidth.
    cap: f64,
    rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    /// Not reached by the rising level (or saturated from the start).
    Waiting,
    /// In the lowest group, riding the level.
    Rising,
    /// Left the group at its Shannon bound.
    Settled(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Bound(f64);

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[inline]
fn saturated(rate: f64, cap: f64) -> bool {
    rate >= cap * (1.0 - EPS_RATE)
}

pub fn linex_detailed(inst: &NetworkInstance) -> Result<LinexOutcome> {
    validate_instance(inst)?;
    let bw = inst.bw;
    let mut trace = AllocatorTrace::default();
    let n_relays = inst.relays.len();

    // Minimum backhaul share for every relay.
    let mut backhaul_cap = Vec::with_capacity(n_relays);
    for r in &inst.relays {
        backhaul_cap.push(unit_capacity(inst.backhaul_gamma(*r)?));
    }
    let inv_backhaul: Vec<f64> = backhaul_cap.iter().map(|c| 1.0 / c).collect();
    trace.ops(3 * n_relays as u64);
    let mut w_relay = vec![bw.w_min_relays; n_relays];

    // Per-station allocation under the current relay traffic, wired cap ignored.
    let gnb_cell = single_cell_alloc(
        &inst.gnb_user_capacities()?,
        bw.w_g_users,
        bw.w_min_users,
        f64::INFINITY,
        &mut trace,
    )?;
    let mut cells: Vec<CellAllocation> = Vec::with_capacity(n_relays);
    let mut users: Vec<RelayUser> = Vec::with_capacity(inst.relay_user_count());
    for (i, r) in inst.relays.iter().enumerate() {
        let caps = inst.relay_user_capacities(*r)?;
        let t_relay = w_relay[i] * backhaul_cap[i];
        trace.ops(1);
        let cell = single_cell_alloc(&caps, bw.w_r_users, bw.w_min_users, t_relay, &mut trace)?;
        for (j, c) in caps.iter().enumerate() {
            users.push(RelayUser {
                relay: i,
                cap: cell.w[j] * c,
                rate: cell.t[j],
            });
        }
        trace.ops(caps.len() as u64);
        cells.push(cell);
    }

    let n = users.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut comparisons = 0u64;
    order.sort_by(|a, b| {
        comparisons += 1;
        users[*a].rate.total_cmp(&users[*b].rate).then(a.cmp(b))
    });
    trace.cmp(comparisons);

    let mut phase = vec![Phase::Waiting; n];
    let mut group_size = 0usize;
    let mut members_at = vec![0u32; n_relays];
    let mut bounds: BinaryHeap<Reverse<(Bound, usize)>> = BinaryHeap::new();
    let mut next = 0usize;
    let mut level = 0.0f64;

    loop {
        if group_size == 0 {
            // Lowest rate still below its Shannon bound; none left means done.
            while next < n && saturated(users[order[next]].rate, users[order[next]].cap) {
                next += 1;
                trace.cmp(1);
            }
            if next == n {
                break;
            }
            level = users[order[next]].rate;
        }

        // Everyone sitting at the level joins the group.
        let join_limit = level * (1.0 + EPS_RATE);
        trace.ops(2);
        while next < n && users[order[next]].rate <= join_limit {
            let k = order[next];
            next += 1;
            trace.cmp(2);
            if !saturated(users[k].rate, users[k].cap) {
                phase[k] = Phase::Rising;
                group_size += 1;
                members_at[users[k].relay] += 1;
                bounds.push(Reverse((Bound(users[k].cap), k)));
            }
        }
        // Members that reached their Shannon bound leave for good.
        while let Some(&Reverse((Bound(cap), k))) = bounds.peek() {
            trace.cmp(1);
            if !saturated(level, cap) {
                break;
            }
            bounds.pop();
            phase[k] = Phase::Settled(level.min(cap));
            group_size -= 1;
            members_at[users[k].relay] -= 1;
        }
        if group_size == 0 {
            continue;
        }

        trace.iteration();
        let next_rate = if next < n {
            users[order[next]].rate
        } else {
            f64::INFINITY
        };
        let lowest_bound = bounds.peek().map(|Reverse((b, _))| b.0).unwrap_or(f64::INFINITY);
        let target = next_rate.min(lowest_bound);
        let gap = target - level;
        trace.cmp(2);
        trace.ops(1);

        // Backhaul band needed per unit of rate gain, and band still free.
        let mut demand = 0.0;
        let mut used = 0.0;
        for i in 0..n_relays {
            demand += members_at[i] as f64 * inv_backhaul[i];
            used += w_relay[i];
        }
        let free = (bw.w_g_relays - used).max(0.0);
        let beta = (free / (gap * demand)).min(1.0);
        let step = beta * gap;
        trace.ops(3 * n_relays as u64 + 4);
        trace.cmp(2);

        for i in 0..n_relays {
            w_relay[i] += members_at[i] as f64 * step * inv_backhaul[i];
        }
        trace.ops(3 * n_relays as u64);

        trace.cmp(1);
        if beta < 1.0 {
            level += step;
            trace.ops(1);
            break;
        }
        level = target;
    }

    for (k, u) in users.iter_mut().enumerate() {
        match phase[k] {
            Phase::Waiting => {}
            Phase::Rising => u.rate = level.min(u.cap),
            Phase::Settled(rate) => u.rate = rate,
        }
    }
    let mut flat = users.iter();
    for cell in cells.iter_mut() {
        for t in cell.t.iter_mut() {
            *t = flat.next().expect("one entry per relay user").rate;
        }
    }

    // The loop can stop with band to spare; hand it out so the shares fill it.
    let used: f64 = w_relay.iter().sum();
    let residual = (bw.w_g_relays - used).max(0.0);
    if n_relays > 0 && residual > 0.0 {
        let share = residual / n_relays as f64;
        for w in w_relay.iter_mut() {
            *w += share;
        }
    }
    trace.ops(2 * n_relays as u64 + 2);

    let relays = w_relay.into_iter().zip(cells).collect();
    let allocation = finish(inst, gnb_cell, relays, &mut trace);
    Ok(LinexOutcome {
        allocation,
        trace,
        residual_relay_band: if n_relays > 0 { residual } else { 0.0 },
    })
}
