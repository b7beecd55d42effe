//! Max-min fair bandwidth split inside one station, ignoring any rate cap.
//!
//! Users start at the bandwidth floor. The set of users sharing the lowest
//! rate is then raised, one rate level at a time, until the band is spent.
//! Capacities are sorted once so the next level is always the next user in
//! order, and the running sum `S_J = sum 1/c_u` over the raised set is
//! carried forward, which keeps the loop linear in the number of users.

use crate::error::{Error, FloorViolation, Result};
use crate::model::AllocatorTrace;

/// Bandwidth (Hz) and throughput (bit/s) per user, in input order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellAllocation {
    pub w: Vec<f64>,
    pub t: Vec<f64>,
}

impl CellAllocation {
    pub fn min_rate(&self) -> Option<f64> {
        self.t.iter().copied().reduce(f64::min)
    }
}

/// Bookkeeping of the raised set while the level climbs.
#[derive(Debug, Clone, Copy)]
struct WaterFillState {
    /// Users `order[..raised]` share the current level.
    raised: usize,
    level: f64,
    /// Sum of `1/c_u` over the raised users.
    inv_cap_sum: f64,
}

/// Splits `band` Hz among users with unit capacities `capacities`
/// (bit/s/Hz) so that the smallest throughput is as large as possible,
/// every user keeps at least `w_min` Hz, and the whole band is used.
pub fn water_fill(
    capacities: &[f64],
    band: f64,
    w_min: f64,
    trace: &mut AllocatorTrace,
) -> Result<CellAllocation> {
    let n = capacities.len();
    if n == 0 {
        return Ok(CellAllocation::default());
    }
    if let Some(c) = capacities.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::InvalidInstance(format!("unit capacity {c}")));
    }
    let floor_total = n as f64 * w_min;
    trace.ops(1);
    if floor_total > band {
        return Err(Error::InfeasibleInstance(FloorViolation::Station {
            users: n,
            needed: floor_total,
            available: band,
        }));
    }

    // Rates at the floor are `w_min * c_u`, so sorting capacities sorts rates.
    let mut order: Vec<usize> = (0..n).collect();
    let mut comparisons = 0u64;
    order.sort_by(|a, b| {
        comparisons += 1;
        capacities[*a].total_cmp(&capacities[*b]).then(a.cmp(b))
    });
    trace.cmp(comparisons);

    let mut st = WaterFillState {
        raised: 0,
        level: w_min * capacities[order[0]],
        inv_cap_sum: 0.0,
    };
    trace.ops(1);
    // Initial set: every user tied at the lowest floor rate.
    while st.raised < n && capacities[order[st.raised]] == capacities[order[0]] {
        st.inv_cap_sum += 1.0 / capacities[order[st.raised]];
        st.raised += 1;
        trace.ops(2);
        trace.cmp(1);
    }

    let mut exhausted = false;
    while st.raised < n {
        let v0 = order[st.raised];
        let next_level = w_min * capacities[v0];
        // Band used if the raised users are lifted to the next user's rate.
        let used = next_level * st.inv_cap_sum + (n - st.raised) as f64 * w_min;
        trace.ops(5);
        trace.cmp(1);
        if used > band {
            let others = (n - st.raised) as f64 * w_min;
            st.level = (band - others) / st.inv_cap_sum;
            trace.ops(3);
            exhausted = true;
            break;
        }
        st.level = next_level;
        st.inv_cap_sum += 1.0 / capacities[v0];
        st.raised += 1;
        trace.ops(2);
    }
    if !exhausted {
        // Every user shares one level; spread whatever band is left.
        st.level = band / st.inv_cap_sum;
        trace.ops(1);
    }

    let mut w = vec![w_min; n];
    let mut t = vec![0.0; n];
    for (rank, &u) in order.iter().enumerate() {
        if rank < st.raised {
            w[u] = st.level / capacities[u];
            trace.ops(1);
        }
        t[u] = w[u] * capacities[u];
        trace.ops(1);
    }
    Ok(CellAllocation { w, t })
}
