use super::{finish, single_cell_alloc};
use crate::error::Result;
use crate::model::{unit_capacity, validate_instance, Allocation, AllocatorTrace, NetworkInstance};

/// Legacy per-station water-filling adapted to relays.
///
/// The backhaul band is split evenly over the relays regardless of their
/// load, each station then water-fills its own users under its own traffic
/// limit, and a final joint reduction enforces `tau_g`.
pub fn wfill_baseline(inst: &NetworkInstance) -> Result<(Allocation, AllocatorTrace)> {
    validate_instance(inst)?;
    let bw = inst.bw;
    let mut trace = AllocatorTrace::default();

    let gnb_cell = single_cell_alloc(
        &inst.gnb_user_capacities()?,
        bw.w_g_users,
        bw.w_min_users,
        f64::INFINITY,
        &mut trace,
    )?;

    let share = if inst.relays.is_empty() {
        0.0
    } else {
        bw.w_g_relays / inst.relays.len() as f64
    };
    let mut relays = Vec::with_capacity(inst.relays.len());
    for r in &inst.relays {
        let t_relay = share * unit_capacity(inst.backhaul_gamma(*r)?);
        trace.ops(3);
        let cell = single_cell_alloc(
            &inst.relay_user_capacities(*r)?,
            bw.w_r_users,
            bw.w_min_users,
            t_relay,
            &mut trace,
        )?;
        relays.push((share, cell));
    }

    Ok((finish(inst, gnb_cell, relays, &mut trace), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocators::linex;
    use crate::model::{BandwidthConfig, RelayId};
    use crate::synthetic::InstanceBuilder;

    fn bw(relays: f64) -> BandwidthConfig {
        BandwidthConfig {
            w_g_relays: relays,
            w_g_users: 10e6,
            w_r_users: 10e6,
            w_min_relays: 1e6,
            w_min_users: 1e6,
        }
    }

    #[test]
    fn symmetric_relays_tie_with_linex() {
        let inst = InstanceBuilder::new(bw(10e6), f64::INFINITY)
            .relay(3.0, &[1.0, 1.0])
            .relay(3.0, &[1.0, 1.0])
            .build();
        let (w, _) = wfill_baseline(&inst).unwrap();
        let (l, _) = linex(&inst).unwrap();
        assert_eq!(w.w_relay[&RelayId(0)], 5e6);
        let (a, b) = (w.min_user_rate().unwrap(), l.min_user_rate().unwrap());
        assert!((a - 5e6).abs() < 1e-6 && (b - 5e6).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn even_split_starves_the_busy_relay() {
        // 8 MHz split 4/4: the busy relay carries 4 MHz * 2 bit/s/Hz = 8 Mbps
        // for two users, 4 Mbps each. Linex reaches 5 Mbps.
        let inst = InstanceBuilder::new(bw(8e6), f64::INFINITY)
            .relay(3.0, &[1.0, 1.0])
            .relay(3.0, &[])
            .build();
        let (w, _) = wfill_baseline(&inst).unwrap();
        let (l, _) = linex(&inst).unwrap();
        assert!((w.min_user_rate().unwrap() - 4e6).abs() < 1e-6);
        assert!((l.min_user_rate().unwrap() - 5e6).abs() < 1e-6);
        assert_eq!(w.t_relay[&RelayId(0)], 8e6);
        assert_eq!(w.t_relay[&RelayId(1)], 0.0);
    }

    #[test]
    fn no_relays_matches_linex() {
        let inst = InstanceBuilder::new(bw(10e6), 9e6)
            .gnb_user(0.5)
            .gnb_user(3.0)
            .gnb_user(20.0)
            .build();
        assert_eq!(wfill_baseline(&inst).unwrap().0, linex(&inst).unwrap().0);
    }
}
