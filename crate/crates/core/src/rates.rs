//! Rate formulas: instantaneous and QoS-gated spectral efficiency, the
//! per-SBS / per-operator / social-welfare aggregation chain, and the
//! analytic expected-rate integral for a field of interferers of known
//! intensity (evaluated by adaptive quadrature; no closed form exists).

use crate::error::{Error, Result};

/// log2(1 + sinr), bits/s/Hz. Panics on negative input.
pub fn inst_rate(sinr_value: f64) -> f64 {
    assert!(
        sinr_value >= 0.0,
        "SINR must be non-negative, got {sinr_value}"
    );
    sinr_value.ln_1p() / std::f64::consts::LN_2
}

/// Achievable rate under the QoS gate: the instantaneous rate counts only
/// when the SINR meets the threshold, otherwise zero.
pub fn gated_rate(sinr_value: f64, sinr_th: f64) -> f64 {
    if sinr_value >= sinr_th {
        inst_rate(sinr_value)
    } else {
        0.0
    }
}

/// Average rate of one SBS over its operator's RB set: the SBS picks one of
/// the `rbs` uniformly, so the average weights each RB by 1/|rbs|.
/// An empty set yields 0 (the child operator is effectively unmatched).
pub fn sbs_avg_rate(rbs: &[usize], mut per_rb_rate: impl FnMut(usize) -> f64) -> f64 {
    if rbs.is_empty() {
        return 0.0;
    }
    rbs.iter().map(|&l| per_rb_rate(l)).sum::<f64>() / rbs.len() as f64
}

/// Weighted sum rate of an operator over its member SBSs.
pub fn op_rate(members: &[usize], rho: &[f64], per_sbs_rate: &[f64]) -> f64 {
    members.iter().map(|&f| rho[f] * per_sbs_rate[f]).sum()
}

/// Rate of a parent operator: the sum of its children's rates divided by
/// the number of distinct RBs the parent holds. Zero RBs yields 0.
pub fn parent_op_rate(children_rates: &[f64], rbs_held: usize) -> f64 {
    if rbs_held == 0 {
        return 0.0;
    }
    children_rates.iter().sum::<f64>() / rbs_held as f64
}

/// Per-parent inputs to the social welfare sum. `child_utilities` are the
/// indicator-masked child rates (a child colliding with a sibling on its RB
/// contributes 0), `rbs_held` the parent's distinct matched RBs.
#[derive(Debug, Clone)]
pub struct ParentWelfare {
    pub weight: f64,
    pub child_utilities: Vec<f64>,
    pub rbs_held: usize,
}

/// Social welfare: the weighted sum of parent-operator rates, each parent
/// entering once at its per-held-RB average rate. An unmatched parent
/// contributes zero.
pub fn social_welfare(parents: &[ParentWelfare]) -> f64 {
    parents
        .iter()
        .map(|p| p.weight * parent_op_rate(&p.child_utilities, p.rbs_held))
        .sum()
}

/// Rate breakdown of one network state at every aggregation level.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub per_sbs_rate: Vec<f64>,
    pub per_child_op_rate: Vec<f64>,
    pub per_parent_op_rate: Vec<f64>,
    pub social_welfare: f64,
}

/// Expected rate (bits/s/Hz) of a link of length `r_ff` transmitting at
/// `p_f` watts through a field of interferers of intensity `lambda` per m²
/// whose power draws have mean square root `mean_sqrt_power`.
///
/// Interference-limited (no noise term), fourth-power distance law. The
/// integrand in nats is exp(-c*sqrt(e^t - 1)) over t in (0, inf) with
/// c = lambda * pi^2 * r_ff^2 * mean_sqrt_power / (2 sqrt(p_f)); after the
/// substitution u = sqrt(e^t - 1) it becomes exp(-c u) * 2u / (1 + u^2),
/// which adaptive Simpson integrates on a truncated interval.
pub fn expected_rate_ppp(lambda: f64, p_f: f64, mean_sqrt_power: f64, r_ff: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "interferer intensity must be positive (got {lambda}); the integral diverges"
        )));
    }
    if !(p_f > 0.0) {
        return Err(Error::Domain(format!(
            "transmit power must be positive (got {p_f})"
        )));
    }
    if !(mean_sqrt_power > 0.0) {
        return Err(Error::Domain(format!(
            "mean sqrt interferer power must be positive (got {mean_sqrt_power})"
        )));
    }
    if !(r_ff > 0.0) {
        return Err(Error::Domain(format!(
            "link distance must be positive (got {r_ff})"
        )));
    }
    let area_const = std::f64::consts::PI.powi(2) * r_ff * r_ff;
    let c = lambda * area_const * mean_sqrt_power / (2.0 * p_f.sqrt());
    Ok(rate_integral_nats(c) / std::f64::consts::LN_2)
}

/// Integral of exp(-c u) 2u/(1+u^2) du over (0, inf), in nats.
pub(crate) fn rate_integral_nats(c: f64) -> f64 {
    debug_assert!(c > 0.0);
    // truncate where the integrand falls below 1e-12
    let upper = (2.0f64 / 1e-12).ln() / c;
    let upper = upper.max(1.0);
    let f = |u: f64| (-c * u).exp() * 2.0 * u / (1.0 + u * u);
    adaptive_simpson(&f, 0.0, upper, 1e-10, 52)
}

/// Adaptive Simpson quadrature with Richardson extrapolation.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inst_rate_reference_points() {
        assert_eq!(inst_rate(0.0), 0.0);
        assert!((inst_rate(1.0) - 1.0).abs() < 1e-12);
        assert!((inst_rate(3.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "non-negative")]
    fn inst_rate_rejects_negative() {
        inst_rate(-0.5);
    }

    #[test]
    fn gated_rate_boundary_inclusive() {
        let th = 2.0;
        assert!((gated_rate(2.0, th) - inst_rate(2.0)).abs() < 1e-15);
        assert_eq!(gated_rate(1.999, th), 0.0);
        assert!((gated_rate(3.0, th) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sbs_avg_rate_cases() {
        let rates = [0.0, 1.0, 3.0, 7.5];
        let eval = |l: usize| rates[l];
        assert!((sbs_avg_rate(&[3], eval) - 7.5).abs() < 1e-15);
        assert!((sbs_avg_rate(&[1, 1, 1], eval) - 1.0).abs() < 1e-15);
        assert!((sbs_avg_rate(&[1, 2], eval) - 2.0).abs() < 1e-15);
        assert_eq!(sbs_avg_rate(&[], eval), 0.0);
    }

    #[test]
    fn op_rate_cases() {
        let rates = [2.0, 1.0, 2.0, 3.0];
        assert!((op_rate(&[0], &[1.0; 4], &rates) - 2.0).abs() < 1e-15);
        assert!((op_rate(&[1, 2, 3], &[1.0; 4], &rates) - 6.0).abs() < 1e-15);
        assert_eq!(op_rate(&[1, 2, 3], &[0.0; 4], &rates), 0.0);
    }

    #[test]
    fn parent_op_rate_cases() {
        assert!((parent_op_rate(&[4.0], 1) - 4.0).abs() < 1e-15);
        assert!((parent_op_rate(&[2.0, 4.0], 2) - 3.0).abs() < 1e-15);
        // both children on one RB: utilities were zeroed upstream
        assert_eq!(parent_op_rate(&[0.0, 0.0], 1), 0.0);
        assert_eq!(parent_op_rate(&[], 0), 0.0);
    }

    #[test]
    fn social_welfare_cases() {
        assert_eq!(social_welfare(&[]), 0.0);
        let single = vec![ParentWelfare {
            weight: 1.0,
            child_utilities: vec![4.0],
            rbs_held: 1,
        }];
        assert!((social_welfare(&single) - 4.0).abs() < 1e-15);
        let two = vec![
            ParentWelfare {
                weight: 2.0,
                child_utilities: vec![1.0, 3.0],
                rbs_held: 2,
            },
            ParentWelfare {
                weight: 0.5,
                child_utilities: vec![2.0],
                rbs_held: 1,
            },
        ];
        // 2 * ((1+3)/2) + 0.5 * 2 = 4 + 1
        assert!((social_welfare(&two) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_agrees_with_t_domain_route() {
        // independent route: integrate exp(-c sqrt(e^t - 1)) dt directly
        for &c in &[0.02, 0.1, 0.5, 1.0, 3.0] {
            let u_route = rate_integral_nats(c);
            let f = |t: f64| (-c * (t.exp_m1()).sqrt().max(0.0)).exp();
            let upper = {
                // exp(-c sqrt(e^t)) < 1e-14  =>  t > 2 ln(32.3/c)
                2.0 * (32.3 / c).ln().max(1.0)
            };
            let t_route = adaptive_simpson(&f, 0.0, upper, 1e-11, 52);
            assert!(
                (u_route - t_route).abs() / t_route < 1e-6,
                "c={c}: u-route {u_route} vs t-route {t_route}"
            );
        }
    }

    #[test]
    fn expected_rate_monotonicity() {
        let base = expected_rate_ppp(0.05, 0.005, 0.07, 5.0).unwrap();
        let more_dense = expected_rate_ppp(0.10, 0.005, 0.07, 5.0).unwrap();
        let stronger_intf = expected_rate_ppp(0.05, 0.005, 0.10, 5.0).unwrap();
        let more_power = expected_rate_ppp(0.05, 0.020, 0.07, 5.0).unwrap();
        assert!(more_dense < base);
        assert!(stronger_intf < base);
        assert!(more_power > base);
        // 4x own power with fixed interferer stats halves c and raises the rate
        let quad = expected_rate_ppp(0.05, 0.02, 0.07, 5.0).unwrap();
        assert!(quad > base);
    }

    #[test]
    fn expected_rate_vanishes_for_heavy_interference() {
        let r = expected_rate_ppp(50.0, 1e-4, 0.1, 5.0).unwrap();
        assert!(r < 1e-6, "rate should vanish, got {r}");
    }

    #[test]
    fn expected_rate_domain_errors() {
        assert!(expected_rate_ppp(0.0, 0.01, 0.1, 5.0).is_err());
        assert!(expected_rate_ppp(-1.0, 0.01, 0.1, 5.0).is_err());
        assert!(expected_rate_ppp(0.05, 0.0, 0.1, 5.0).is_err());
        assert!(expected_rate_ppp(0.05, 0.01, 0.0, 5.0).is_err());
    }
}
