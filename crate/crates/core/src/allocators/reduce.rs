use crate::model::AllocatorTrace;

/// Lowers max-min fair rates so that they sum to at most `tau`.
///
/// The surplus above the current minimum is shaved proportionally. If the
/// whole surplus is not enough, every user gets `tau / n`.
pub fn reduce_max_min(rates: &[f64], tau: f64, trace: &mut AllocatorTrace) -> Vec<f64> {
    let n = rates.len();
    if n == 0 {
        return Vec::new();
    }
    let total: f64 = rates.iter().sum();
    trace.ops(n as u64);
    trace.cmp(1);
    if total <= tau {
        return rates.to_vec();
    }

    let t_min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    trace.cmp(n as u64);
    let excess = total - tau;
    let surplus: f64 = rates.iter().map(|t| t - t_min).sum();
    trace.ops(1 + 2 * n as u64);
    trace.cmp(1);
    if surplus <= excess {
        let share = tau / n as f64;
        trace.ops(1);
        return vec![share; n];
    }
    // t - E (t - t_min) / S, written as t_min + (t - t_min)(1 - E/S) so the
    // map is monotone in t under rounding.
    let keep = 1.0 - excess / surplus;
    trace.ops(2 + 3 * n as u64);
    rates.iter().map(|t| t_min + (t - t_min) * keep).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reduce(t: &[f64], tau: f64) -> Vec<f64> {
        reduce_max_min(t, tau, &mut AllocatorTrace::default())
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol * w.abs(), "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn surplus_covers_excess() {
        // E = 2, S = 3 + 1 = 4: half of each surplus goes.
        assert_close(&reduce(&[5e6, 3e6, 2e6], 8e6), &[3.5e6, 2.5e6, 2e6], 1e-12);
    }

    #[test]
    fn surplus_too_small_equalises() {
        // E = 3 = S: fall back to tau / n.
        assert_close(&reduce(&[4.0, 1.0, 1.0], 3.0), &[1.0, 1.0, 1.0], 1e-12);
    }

    #[test]
    fn no_excess_is_untouched() {
        assert_eq!(reduce(&[1.0, 1.0], 5.0), vec![1.0, 1.0]);
        assert_eq!(reduce(&[], 5.0), Vec::<f64>::new());
    }

    proptest! {
        #[test]
        fn sum_order_and_floor(
            rates in prop::collection::vec(0.0f64..1e8, 1..50),
            frac in 0.0f64..1.5,
        ) {
            let total: f64 = rates.iter().sum();
            let tau = total * frac;
            let out = reduce(&rates, tau);
            let out_sum: f64 = out.iter().sum();
            let target = total.min(tau);
            prop_assert!((out_sum - target).abs() <= 1e-9 * target.max(1.0));
            let n = rates.len() as f64;
            let min_out = out.iter().cloned().fold(f64::INFINITY, f64::min);
            let min_in = rates.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(min_out >= (tau / n).min(min_in) * (1.0 - 1e-12));
            for i in 0..rates.len() {
                prop_assert!(out[i] <= rates[i] * (1.0 + 1e-12));
                for j in 0..rates.len() {
                    if rates[i] <= rates[j] {
                        prop_assert!(out[i] <= out[j]);
                    }
                }
            }
        }
    }
}
