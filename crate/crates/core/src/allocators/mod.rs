//! Allocation algorithms: the single-station building blocks, the exact
//! relay-aware allocator and the per-station water-filling baseline.

mod linex;
mod reduce;
mod waterfill;
mod wfill;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use linex::{linex, linex_detailed, LinexOutcome};
pub use reduce::reduce_max_min;
pub use waterfill::{water_fill, CellAllocation};
pub use wfill::wfill_baseline;

use crate::error::{Error, Result};
use crate::model::{Allocation, AllocatorTrace, NetworkInstance};

/// Max-min allocation for one station whose users share `band` Hz and
/// whose aggregate traffic is capped at `tau` bit/s.
///
/// Bandwidths stay at their water-filling values; when `tau` binds, the
/// rates drop below the Shannon bound of the granted bandwidth.
pub fn single_cell_alloc(
    capacities: &[f64],
    band: f64,
    w_min: f64,
    tau: f64,
    trace: &mut AllocatorTrace,
) -> Result<CellAllocation> {
    let mut cell = water_fill(capacities, band, w_min, trace)?;
    cell.t = reduce_max_min(&cell.t, tau, trace);
    Ok(cell)
}

/// Steps shared by both relay-aware allocators once every station has its
/// user rates: relay throughput becomes the sum of its users' rates, then a
/// single joint reduction enforces the wired cap `tau_g` over all users.
fn finish(
    inst: &NetworkInstance,
    gnb: CellAllocation,
    relays: Vec<(f64, CellAllocation)>,
    trace: &mut AllocatorTrace,
) -> Allocation {
    let relay_sum = |cell: &CellAllocation| cell.t.iter().sum::<f64>();
    let mut relays = relays;
    let mut total: f64 = gnb.t.iter().sum();
    for (_, cell) in &relays {
        total += relay_sum(cell);
    }
    trace.ops(inst.user_count() as u64);
    trace.cmp(1);

    let mut gnb = gnb;
    if total > inst.tau_g {
        let joint: Vec<f64> = gnb
            .t
            .iter()
            .chain(relays.iter().flat_map(|(_, c)| c.t.iter()))
            .copied()
            .collect();
        let reduced = reduce_max_min(&joint, inst.tau_g, trace);
        let mut it = reduced.into_iter();
        for t in gnb.t.iter_mut().chain(relays.iter_mut().flat_map(|(_, c)| c.t.iter_mut())) {
            *t = it.next().expect("one reduced rate per user");
        }
    }

    let mut alloc = Allocation::default();
    for (i, u) in inst.gnb_users.iter().enumerate() {
        alloc.w_user.insert(*u, gnb.w[i]);
        alloc.t_user.insert(*u, gnb.t[i]);
    }
    for (r, (w_r, cell)) in inst.relays.iter().zip(&relays) {
        for (i, u) in inst.users_of(*r).iter().enumerate() {
            alloc.w_user.insert(*u, cell.w[i]);
            alloc.t_user.insert(*u, cell.t[i]);
        }
        alloc.w_relay.insert(*r, *w_r);
        alloc.t_relay.insert(*r, relay_sum(cell));
    }
    trace.ops(inst.relay_user_count() as u64);
    alloc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocatorKind {
    Linex,
    Wfill,
}

impl AllocatorKind {
    pub const ALL: [AllocatorKind; 2] = [AllocatorKind::Linex, AllocatorKind::Wfill];

    pub fn run(self, inst: &NetworkInstance) -> Result<(Allocation, AllocatorTrace)> {
        match self {
            AllocatorKind::Linex => linex(inst),
            AllocatorKind::Wfill => wfill_baseline(inst),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AllocatorKind::Linex => "linex",
            AllocatorKind::Wfill => "wfill",
        }
    }
}

impl fmt::Display for AllocatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllocatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linex" => Ok(AllocatorKind::Linex),
            "wfill" => Ok(AllocatorKind::Wfill),
            other => Err(Error::Config(format!("unknown allocator {other:?}"))),
        }
    }
}
