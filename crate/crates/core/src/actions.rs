//! Classical actions along the energy shell: turning points, the well action
//! `A(E)`, its energy derivative, the area `S(E)` between the two
//! trajectories, and Bohr-Sommerfeld energies.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::expr::Expr;
use crate::problem::{refine_root, ValidatedProblem};
use crate::quad::{between_turning_points, toward_turning_point, GapPower, QuadError};
use crate::roots::bisect_polish;

const QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ActionError {
    #[error(
        "assumption violated at energy E = {0}: turning points not found in the expected order"
    )]
    AssumptionViolated(f64),
    #[error("energy E = {e} is outside the window |E - E0| <= {delta0}")]
    OutsideWindow { e: f64, delta0: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionTable {
    pub e: f64,
    pub a_action: f64,
    pub da_de: f64,
    pub s: f64,
    pub turning: TurningPoints,
}

/// Root of `e(x) = level` next to `x0`, found by widening a symmetric
/// bracket until the sign flips.
fn root_near(e: &Expr, level: f64, x0: f64, lo: f64, hi: f64) -> Option<f64> {
    let f = |x: f64| e.eval(x) - level;
    if f(x0) == 0.0 {
        return Some(x0);
    }
    let mut d = 1e-3;
    while d < hi - lo {
        let (l, r) = ((x0 - d).max(lo), (x0 + d).min(hi));
        if (f(l) < 0.0) != (f(r) < 0.0) {
            return Some(refine_root(e, level, l, r));
        }
        d *= 2.0;
    }
    None
}

pub fn turning_points(p: &ValidatedProblem, e: f64) -> Result<TurningPoints, ActionError> {
    let delta0 = p.spec.delta0;
    if !((e - p.spec.e0).abs() <= delta0) {
        return Err(ActionError::OutsideWindow { e, delta0 });
    }
    let [xl, xr] = p.spec.domain;
    let fail = ActionError::AssumptionViolated(e);
    let a = root_near(&p.v1, e, p.a, xl, 0.0).ok_or(fail)?;
    let a_prime = root_near(&p.v1, e, p.a_prime, 0.0, xr).ok_or(fail)?;
    let b = root_near(&p.v2, e, p.b, 0.0, a_prime).ok_or(fail)?;
    if !(a < 0.0 && 0.0 < b && b < a_prime) {
        return Err(fail);
    }
    Ok(TurningPoints { a, b, a_prime })
}

/// `A(E) = 2 ∫_a^{a'} sqrt(E - V1) dx`.
pub fn action_a(p: &ValidatedProblem, e: f64) -> Result<f64, ActionError> {
    let t = turning_points(p, e)?;
    let v = between_turning_points(
        |x| e - p.v1.eval(x),
        GapPower::Sqrt,
        t.a,
        t.a_prime,
        QUAD_TOL,
    )?;
    Ok(2.0 * v)
}

/// `A'(E) = ∫_a^{a'} dx / sqrt(E - V1)`.
pub fn da_de(p: &ValidatedProblem, e: f64) -> Result<f64, ActionError> {
    let t = turning_points(p, e)?;
    Ok(between_turning_points(
        |x| e - p.v1.eval(x),
        GapPower::InvSqrt,
        t.a,
        t.a_prime,
        QUAD_TOL,
    )?)
}

/// `S(E) = 2 (∫_0^{a'} sqrt(E - V1) - ∫_0^b sqrt(E - V2))`.
pub fn action_s(p: &ValidatedProblem, e: f64) -> Result<f64, ActionError> {
    let t = turning_points(p, e)?;
    let one = toward_turning_point(
        |x| e - p.v1.eval(x),
        GapPower::Sqrt,
        0.0,
        t.a_prime,
        QUAD_TOL,
    )?;
    let two = toward_turning_point(|x| e - p.v2.eval(x), GapPower::Sqrt, 0.0, t.b, QUAD_TOL)?;
    Ok(2.0 * (one - two))
}

pub fn action_table(p: &ValidatedProblem, e: f64) -> Result<ActionTable, ActionError> {
    Ok(ActionTable {
        e,
        a_action: action_a(p, e)?,
        da_de: da_de(p, e)?,
        s: action_s(p, e)?,
        turning: turning_points(p, e)?,
    })
}

/// Solutions of `action(E) = (2n+1)πh` in `[lo, hi]` for an increasing
/// action, as `(n, E)` pairs in increasing order.
pub fn quantized_energies<F, D>(
    action: F,
    d_action: D,
    lo: f64,
    hi: f64,
    h: f64,
) -> Result<Vec<(u64, f64)>, ActionError>
where
    F: Fn(f64) -> Result<f64, ActionError>,
    D: Fn(f64) -> Result<f64, ActionError>,
{
    let (a_lo, a_hi) = (action(lo)?, action(hi)?);
    let n_min = ((a_lo / (PI * h) - 1.0) / 2.0).ceil().max(0.0);
    let n_max = ((a_hi / (PI * h) - 1.0) / 2.0).floor();
    let mut out = Vec::new();
    if n_max < n_min {
        return Ok(out);
    }
    for n in (n_min as u64)..=(n_max as u64) {
        let target = (2 * n + 1) as f64 * PI * h;
        // errors inside the closures are surfaced by the final re-evaluation
        let f = |e: f64| action(e).map(|v| v - target).unwrap_or(f64::NAN);
        let df = |e: f64| d_action(e).unwrap_or(f64::NAN);
        let e = bisect_polish(f, df, lo, hi, 1e-10, 5);
        action(e)?;
        out.push((n, e));
    }
    Ok(out)
}

/// Bohr-Sommerfeld energies in `[E0 - h·delta0, E0 + h·delta0]`.
pub fn bohr_sommerfeld(p: &ValidatedProblem, h: f64) -> Result<Vec<(u64, f64)>, ActionError> {
    let (e0, d) = (p.spec.e0, p.spec.delta0);
    quantized_energies(
        |e| action_a(p, e),
        |e| da_de(p, e),
        e0 - h * d,
        e0 + h * d,
        h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{reference_r1, reference_r2, validate};

    // ∫_0^{b} sqrt(1 - 4 tanh x) dx, b = artanh(1/4), from an independent
    // adaptive quadrature run
    const I2: f64 = 0.169_122_670_292_901_18;

    #[test]
    fn r1_turning_points_closed_form() {
        let p = validate(&reference_r1()).unwrap();
        let t = turning_points(&p, 1.0).unwrap();
        assert!((t.a - (1.0 - 2f64.sqrt())).abs() < 1e-10);
        assert!((t.a_prime - (1.0 + 2f64.sqrt())).abs() < 1e-10);
        assert!((t.b - 0.25f64.atanh()).abs() < 1e-10);
        let t2 = turning_points(&p, 1.3).unwrap();
        assert!((t2.a_prime - (1.0 + 2.3f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn r1_actions_closed_form() {
        let p = validate(&reference_r1()).unwrap();
        assert!((action_a(&p, 1.0).unwrap() - 2.0 * PI).abs() < 1e-10);
        assert!((da_de(&p, 1.0).unwrap() - PI).abs() < 1e-10);
        assert!(action_a(&p, 1.02).unwrap() > action_a(&p, 1.0).unwrap());
        let s = action_s(&p, 1.0).unwrap();
        assert!((s - 2.0 * (0.75 * PI + 0.5 - I2)).abs() < 1e-10);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for spec in [reference_r1(), reference_r2()] {
            let p = validate(&spec).unwrap();
            for e in [0.7, 1.0, 1.4] {
                let d = 1e-5;
                let fd = (action_a(&p, e + d).unwrap() - action_a(&p, e - d).unwrap()) / (2.0 * d);
                let exact = da_de(&p, e).unwrap();
                assert!(((fd - exact) / exact).abs() < 1e-5, "E = {e}");
            }
        }
    }

    #[test]
    fn actions_ignore_box_and_blend_placement() {
        let base = validate(&reference_r1()).unwrap();
        let mut s = reference_r1();
        s.domain = [-10.0, 10.0];
        s.flatten[0].start = 2.95;
        let moved = validate(&s).unwrap();
        for e in [0.9, 1.0, 1.1] {
            assert!((action_a(&base, e).unwrap() - action_a(&moved, e).unwrap()).abs() < 1e-9);
            assert!((action_s(&base, e).unwrap() - action_s(&moved, e).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn bohr_sommerfeld_r1() {
        let p = validate(&reference_r1()).unwrap();
        let h = 2.0 / 41.0;
        let bs = bohr_sommerfeld(&p, h).unwrap();
        assert_eq!(bs.len(), 1);
        assert_eq!(bs[0].0, 20);
        assert!((bs[0].1 - 1.0).abs() < 1e-10);
        assert!((action_a(&p, bs[0].1).unwrap() / (2.0 * h)).cos().abs() <= 1e-8);
        assert!(bohr_sommerfeld(&p, 0.05).unwrap().is_empty());
    }

    #[test]
    fn identity_action() {
        let h = 0.01;
        let roots = quantized_energies(Ok, |_| Ok(1.0), 0.0, 0.2, h).unwrap();
        assert_eq!(roots.len(), 3);
        for (n, e) in roots {
            assert!((e - (2 * n + 1) as f64 * PI * h).abs() < 1e-12);
        }
    }

    #[test]
    fn window_is_enforced() {
        let p = validate(&reference_r1()).unwrap();
        assert!(matches!(
            turning_points(&p, 2.5),
            Err(ActionError::OutsideWindow { .. })
        ));
    }
}
