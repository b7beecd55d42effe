use rayon::prelude::*;

use crate::allocators::{reduce_max_min, water_fill, CellAllocation};
use crate::error::{Error, Result};
use crate::model::{unit_capacity, validate_instance, AllocatorTrace, NetworkInstance};

pub const MAX_RELAYS: usize = 3;
pub const MAX_USERS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    /// Best minimum user rate found on the grid; always achievable.
    pub best_min_rate: f64,
    /// How far the true optimum may exceed `best_min_rate`.
    pub resolution_bound: f64,
    /// Relay bandwidths of the best grid point, in relay order.
    pub best_split: Vec<f64>,
    pub points_evaluated: u64,
}

/// Per-station water-fill results, independent of the relay split.
struct Cells {
    gnb: Vec<f64>,
    relays: Vec<(f64, Vec<f64>)>,
}

impl Cells {
    fn new(inst: &NetworkInstance) -> Result<Self> {
        let bw = inst.bw;
        let mut tr = AllocatorTrace::default();
        let fill = |caps: &[f64], band: f64, tr: &mut AllocatorTrace| -> Result<Vec<f64>> {
            let CellAllocation { t, .. } = water_fill(caps, band, bw.w_min_users, tr)?;
            Ok(t)
        };
        let gnb = fill(&inst.gnb_user_capacities()?, bw.w_g_users, &mut tr)?;
        let mut relays = Vec::with_capacity(inst.relays.len());
        for r in &inst.relays {
            let c = unit_capacity(inst.backhaul_gamma(*r)?);
            relays.push((c, fill(&inst.relay_user_capacities(*r)?, bw.w_r_users, &mut tr)?));
        }
        Ok(Self { gnb, relays })
    }

    fn min_rate(&self, split: &[f64], tau_g: f64) -> f64 {
        let mut tr = AllocatorTrace::default();
        let mut all = self.gnb.clone();
        for ((c, rates), w) in self.relays.iter().zip(split) {
            all.extend(reduce_max_min(rates, w * c, &mut tr));
        }
        reduce_max_min(&all, tau_g, &mut tr)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Calls `f` with every composition of `total` into `parts` non-negative parts.
fn compositions(parts: usize, total: u64, prefix: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
    if parts == 1 {
        prefix.push(total);
        f(prefix);
        prefix.pop();
        return;
    }
    for k in 0..=total {
        prefix.push(k);
        compositions(parts - 1, total - k, prefix, f);
        prefix.pop();
    }
}

/// Exhaustive search over relay bandwidth splits.
///
/// The band above the relay floors is cut into `grid_points_per_dim - 1`
/// steps of size `h` and every distribution of whole steps over the relays
/// is evaluated exactly (per-station water-fill, relay traffic cap, joint
/// wired cap). Rounding any optimal split down to the grid costs each relay
/// at most `h` Hz, so the optimum exceeds the grid best by at most
/// `h * max c_gr`. With zero or one relay the split is fixed and the bound
/// is zero.
pub fn grid_oracle(inst: &NetworkInstance, grid_points_per_dim: usize) -> Result<GridOutcome> {
    let relays = inst.relays.len();
    let users = inst.user_count();
    if relays > MAX_RELAYS || users > MAX_USERS {
        return Err(Error::TooLarge { relays, users });
    }
    if grid_points_per_dim < 2 {
        return Err(Error::Config(format!(
            "grid needs at least 2 points per dimension, got {grid_points_per_dim}"
        )));
    }
    validate_instance(inst)?;
    let cells = Cells::new(inst)?;
    let bw = inst.bw;

    if relays <= 1 {
        let split = vec![bw.w_g_relays; relays];
        return Ok(GridOutcome {
            best_min_rate: cells.min_rate(&split, inst.tau_g),
            resolution_bound: 0.0,
            best_split: split,
            points_evaluated: 1,
        });
    }

    let steps = grid_points_per_dim as u64 - 1;
    let free = bw.w_g_relays - relays as f64 * bw.w_min_relays;
    let h = free / steps as f64;
    let split_of = |ks: &[u64]| -> Vec<f64> {
        ks.iter().map(|k| bw.w_min_relays + *k as f64 * h).collect()
    };

    // Parallel over the first relay's share; the rest is enumerated serially.
    let (best, best_ks, count) = (0..=steps)
        .into_par_iter()
        .map(|k0| {
            let mut best = f64::NEG_INFINITY;
            let mut best_ks = Vec::new();
            let mut count = 0u64;
            let mut prefix = vec![k0];
            compositions(relays - 1, steps - k0, &mut prefix, &mut |ks| {
                count += 1;
                let m = cells.min_rate(&split_of(ks), inst.tau_g);
                if m > best {
                    best = m;
                    best_ks = ks.to_vec();
                }
            });
            (best, best_ks, count)
        })
        .reduce(
            || (f64::NEG_INFINITY, Vec::new(), 0),
            |a, b| {
                // Ties keep the lexicographically smaller split for determinism.
                let count = a.2 + b.2;
                let pick_b = b.0 > a.0
                    || (b.0 == a.0 && !b.1.is_empty() && (a.1.is_empty() || b.1 < a.1));
                if pick_b {
                    (b.0, b.1, count)
                } else {
                    (a.0, a.1, count)
                }
            },
        );

    let c_max = cells.relays.iter().map(|(c, _)| *c).fold(0.0, f64::max);
    Ok(GridOutcome {
        best_min_rate: best,
        resolution_bound: h * c_max,
        best_split: split_of(&best_ks),
        points_evaluated: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocators::{linex, single_cell_alloc, wfill_baseline};
    use crate::model::BandwidthConfig;
    use crate::synthetic::{InstanceBuilder, SyntheticSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bw10() -> BandwidthConfig {
        BandwidthConfig {
            w_g_relays: 10e6,
            w_g_users: 10e6,
            w_r_users: 10e6,
            w_min_relays: 1e6,
            w_min_users: 1e6,
        }
    }

    #[test]
    fn no_relays_is_single_cell() {
        let inst = InstanceBuilder::new(bw10(), 12e6)
            .gnb_user(1.0)
            .gnb_user(3.0)
            .gnb_user(15.0)
            .build();
        let out = grid_oracle(&inst, 50).unwrap();
        let caps = inst.gnb_user_capacities().unwrap();
        let cell =
            single_cell_alloc(&caps, 10e6, 1e6, 12e6, &mut AllocatorTrace::default()).unwrap();
        assert_eq!(Some(out.best_min_rate), cell.min_rate());
        assert_eq!(out.resolution_bound, 0.0);
        assert_eq!(out.points_evaluated, 1);
    }

    #[test]
    fn single_relay_matches_linex_trace() {
        let inst = InstanceBuilder::new(bw10(), f64::INFINITY)
            .relay(3.0, &[1.0, 1.0])
            .build();
        let out = grid_oracle(&inst, 100).unwrap();
        assert!((out.best_min_rate - 5e6).abs() < 1e-3);
        let (a, _) = linex(&inst).unwrap();
        assert!((a.min_user_rate().unwrap() - out.best_min_rate).abs() <= 1e-9 * 5e6);
    }

    #[test]
    fn symmetric_pair_peaks_at_equal_split() {
        let mut bw = bw10();
        bw.w_g_relays = 4e6;
        let inst = InstanceBuilder::new(bw, f64::INFINITY)
            .relay(3.0, &[7.0, 1.0])
            .relay(3.0, &[7.0, 1.0])
            .build();
        let out = grid_oracle(&inst, 101).unwrap();
        assert_eq!(out.best_split, vec![2e6, 2e6]);
        // Bound: 2 MHz free over 100 steps, 2 bit/s/Hz backhaul.
        assert!((out.resolution_bound - 2e6 / 100.0 * 2.0).abs() < 1e-6);
    }

    #[test]
    fn bound_shrinks_linearly() {
        let inst = InstanceBuilder::new(bw10(), f64::INFINITY)
            .relay(3.0, &[1.0])
            .relay(7.0, &[2.0, 5.0])
            .build();
        let a = grid_oracle(&inst, 11).unwrap();
        let b = grid_oracle(&inst, 101).unwrap();
        assert!((a.resolution_bound / b.resolution_bound - 10.0).abs() < 1e-9);
        assert!(b.best_min_rate >= a.best_min_rate - a.resolution_bound);
    }

    #[test]
    fn three_relays_enumerates_the_simplex() {
        let inst = InstanceBuilder::new(bw10(), f64::INFINITY)
            .relay(3.0, &[1.0])
            .relay(7.0, &[2.0])
            .relay(1.0, &[5.0])
            .build();
        let out = grid_oracle(&inst, 21).unwrap();
        // Compositions of 20 into 3 parts.
        assert_eq!(out.points_evaluated, 22 * 21 / 2);
        let sum: f64 = out.best_split.iter().sum();
        assert!((sum - 10e6).abs() < 1e-3);
    }

    #[test]
    fn too_large_rejected() {
        let mut b = InstanceBuilder::new(bw10(), f64::INFINITY);
        for _ in 0..4 {
            b = b.relay(3.0, &[1.0]);
        }
        assert!(matches!(grid_oracle(&b.build(), 10), Err(Error::TooLarge { .. })));
        let mut b = InstanceBuilder::new(BandwidthConfig::default(), f64::INFINITY);
        for _ in 0..9 {
            b = b.gnb_user(3.0);
        }
        assert!(matches!(grid_oracle(&b.build(), 10), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn allocators_never_beat_the_oracle_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..60 {
            let mut spec = SyntheticSpec::new(1 + i % 3, 1 + i % 8);
            spec.tau_fraction = Some((0.1, 1.5));
            let inst = spec.sample(&mut rng);
            let points = if inst.relays.len() == 3 { 60 } else { 400 };
            let g = grid_oracle(&inst, points).unwrap();
            let l = linex(&inst).unwrap().0.min_user_rate().unwrap();
            let w = wfill_baseline(&inst).unwrap().0.min_user_rate().unwrap();
            let slack = 1e-9 * g.best_min_rate;
            assert!(l >= g.best_min_rate - g.resolution_bound - slack, "{i}: {l} vs {g:?}");
            assert!(l <= g.best_min_rate + g.resolution_bound + slack, "{i}: {l} vs {g:?}");
            assert!(w <= g.best_min_rate + g.resolution_bound + slack);
        }
    }
}
