use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{unit_capacity, Allocation, NetworkInstance};

/// Names of the nine constraints, indexed like [`FeasibilityReport::residuals`].
pub const CONSTRAINTS: [&str; 9] = [
    "relay bandwidth floor",
    "relay bandwidth sum",
    "relay Shannon bound",
    "user bandwidth floor",
    "gNB user bandwidth sum",
    "relay user bandwidth sum",
    "user Shannon bound",
    "relay traffic",
    "wired backhaul cap",
];

/// Relative violation of every constraint of the allocation problem.
///
/// `residuals[k]` belongs to constraint `k + 1`; zero means satisfied.
/// Equalities (2, 5, 6) are checked in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub residuals: [f64; 9],
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl FeasibilityReport {
    /// 1-based number of the worst constraint, `None` when all residuals are zero.
    pub fn worst(&self) -> Option<usize> {
        self.residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| **r > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i + 1)
    }

    pub fn residual(&self, constraint: usize) -> f64 {
        self.residuals[constraint - 1]
    }
}

/// Positive part of `excess / scale`; non-finite values count as infinite.
fn rel(excess: f64, scale: f64) -> f64 {
    if !excess.is_finite() {
        return f64::INFINITY;
    }
    (excess / scale.max(1.0)).max(0.0)
}

fn raise(slot: &mut f64, v: f64) {
    if v.is_nan() || v > *slot {
        *slot = if v.is_nan() { f64::INFINITY } else { v };
    }
}

pub fn verify_feasibility(
    inst: &NetworkInstance,
    alloc: &Allocation,
    tol: f64,
) -> Result<FeasibilityReport> {
    let serving = inst.serving_map();
    let relays: BTreeSet<_> = inst.relays.iter().copied().collect();
    for u in alloc.w_user.keys().chain(alloc.t_user.keys()) {
        if !serving.contains_key(u) {
            return Err(Error::MismatchedIds(format!("unknown user {u}")));
        }
    }
    for r in alloc.w_relay.keys().chain(alloc.t_relay.keys()) {
        if !relays.contains(r) {
            return Err(Error::MismatchedIds(format!("unknown relay {r}")));
        }
    }
    let user = |u| -> Result<(f64, f64)> {
        match (alloc.w_user.get(&u), alloc.t_user.get(&u)) {
            (Some(w), Some(t)) => Ok((*w, *t)),
            _ => Err(Error::MismatchedIds(format!("user {u} missing from allocation"))),
        }
    };
    let relay = |r| -> Result<(f64, f64)> {
        match (alloc.w_relay.get(&r), alloc.t_relay.get(&r)) {
            (Some(w), Some(t)) => Ok((*w, *t)),
            _ => Err(Error::MismatchedIds(format!("relay {r} missing from allocation"))),
        }
    };

    let bw = inst.bw;
    let mut res = [0.0f64; 9];

    let mut relay_band = 0.0;
    let mut relay_traffic = 0.0;
    for r in &inst.relays {
        let (w, t) = relay(*r)?;
        relay_band += w;
        relay_traffic += t;
        raise(&mut res[0], rel(bw.w_min_relays - w, bw.w_min_relays));
        let cap = w * unit_capacity(inst.backhaul_gamma(*r)?);
        raise(&mut res[2], rel(t - cap, cap));
        if t < 0.0 {
            raise(&mut res[2], rel(-t, cap));
        }

        let mut band = 0.0;
        let mut traffic = 0.0;
        for u in inst.users_of(*r) {
            let (wu, tu) = user(*u)?;
            band += wu;
            traffic += tu;
        }
        if !inst.users_of(*r).is_empty() {
            raise(&mut res[5], rel((band - bw.w_r_users).abs(), bw.w_r_users));
        }
        raise(&mut res[7], rel(traffic - t, t));
    }
    if !inst.relays.is_empty() {
        raise(&mut res[1], rel((relay_band - bw.w_g_relays).abs(), bw.w_g_relays));
    }

    let mut gnb_band = 0.0;
    let mut gnb_traffic = 0.0;
    for (u, s) in &serving {
        let (w, t) = user(*u)?;
        raise(&mut res[3], rel(bw.w_min_users - w, bw.w_min_users));
        if !w.is_finite() {
            res[3] = f64::INFINITY;
        }
        let cap = w * unit_capacity(inst.access_gamma(*s, *u)?);
        raise(&mut res[6], rel(t - cap, cap));
        if t < 0.0 {
            raise(&mut res[6], rel(-t, cap));
        }
        if inst.gnb_users.contains(u) {
            gnb_band += w;
            gnb_traffic += t;
        }
    }
    if !inst.gnb_users.is_empty() {
        raise(&mut res[4], rel((gnb_band - bw.w_g_users).abs(), bw.w_g_users));
    }
    if inst.tau_g.is_finite() {
        raise(&mut res[8], rel(gnb_traffic + relay_traffic - inst.tau_g, inst.tau_g));
    }

    let max_violation = res.iter().copied().fold(0.0, f64::max);
    Ok(FeasibilityReport {
        residuals: res,
        max_violation,
        tolerance: tol,
        pass: max_violation <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocators::{linex, wfill_baseline};
    use crate::model::{BandwidthConfig, RelayId, UserId};
    use crate::synthetic::{InstanceBuilder, SyntheticSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> NetworkInstance {
        InstanceBuilder::new(BandwidthConfig::default(), 60e6)
            .gnb_user(3.0)
            .gnb_user(30.0)
            .relay(200.0, &[5.0, 9.0, 1.0])
            .relay(50.0, &[2.0])
            .build()
    }

    #[test]
    fn allocator_output_passes() {
        let inst = sample();
        for (a, _) in [linex(&inst).unwrap(), wfill_baseline(&inst).unwrap()] {
            let rep = verify_feasibility(&inst, &a, 1e-9).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn relay_band_overshoot_flagged() {
        let inst = sample();
        let (mut a, _) = linex(&inst).unwrap();
        let total: f64 = a.w_relay.values().sum();
        for w in a.w_relay.values_mut() {
            *w *= 1.01 * inst.bw.w_g_relays / total;
        }
        let rep = verify_feasibility(&inst, &a, 1e-9).unwrap();
        assert!(!rep.pass);
        assert!((rep.residual(2) - 0.01).abs() < 1e-9, "{rep:?}");
    }

    #[test]
    fn shannon_overshoot_flagged() {
        let mut inst = sample();
        inst.tau_g = f64::INFINITY;
        let (mut a, _) = linex(&inst).unwrap();
        let u = UserId(0);
        let cap = a.w_user[&u] * unit_capacity(3.0);
        a.t_user.insert(u, cap + 1.0);
        let rep = verify_feasibility(&inst, &a, 1e-9).unwrap();
        assert!(!rep.pass);
        assert!(rep.residual(7) > 0.0);
        assert_eq!(rep.worst(), Some(7));
    }

    #[test]
    fn unknown_ids_rejected() {
        let inst = sample();
        let (mut a, _) = linex(&inst).unwrap();
        a.w_relay.insert(RelayId(9), 1.0);
        assert!(matches!(
            verify_feasibility(&inst, &a, 1e-9),
            Err(Error::MismatchedIds(_))
        ));
        let (mut a, _) = linex(&inst).unwrap();
        a.t_user.remove(&UserId(2));
        assert!(matches!(
            verify_feasibility(&inst, &a, 1e-9),
            Err(Error::MismatchedIds(_))
        ));
    }

    #[test]
    fn nan_is_a_violation() {
        let inst = sample();
        let (mut a, _) = linex(&inst).unwrap();
        a.t_user.insert(UserId(1), f64::NAN);
        assert!(!verify_feasibility(&inst, &a, 1e-9).unwrap().pass);
    }

    #[test]
    fn random_instances_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..200 {
            let mut spec = SyntheticSpec::new(i % 5, 1 + i % 40);
            spec.tau_fraction = Some((0.05, 1.5));
            let inst = spec.sample(&mut rng);
            for (a, _) in [linex(&inst).unwrap(), wfill_baseline(&inst).unwrap()] {
                let rep = verify_feasibility(&inst, &a, 1e-9).unwrap();
                assert!(rep.pass, "instance {i}: {rep:?}");
            }
        }
    }
}
