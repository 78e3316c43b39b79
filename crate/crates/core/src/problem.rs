//! Problem instances: two potentials, the interaction `U = r0 + i h r1 D_x`,
//! a reference energy and a box, plus validation and crossing data.

use alloc::vec::Vec;

use num_traits::Float;

use crate::expr::{Expr, DEFAULT_MAX_ORDER};
use crate::roots::bisect_polish;

/// Number of sample points used when checking sign patterns on the box.
pub const SAMPLE_POINTS: usize = 4096;
/// Required clearance between a flattening blend and the well `[a, a']`.
pub const FLATTEN_MARGIN: f64 = 0.5;
/// Relative threshold used for vanishing orders.
pub const ORDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    V1,
    V2,
}

/// Smoothly replaces a potential by the constant `limit` beyond `start`.
/// The blend occupies `[start, start + width]` on the right side and
/// `[start - width, start]` on the left side.
#[derive(Debug, Clone, PartialEq)]
pub struct Flatten {
    pub side: Side,
    pub which: Channel,
    pub start: f64,
    pub limit: f64,
    pub width: f64,
}

impl Flatten {
    pub fn blend_region(&self) -> (f64, f64) {
        match self.side {
            Side::Right => (self.start, self.start + self.width),
            Side::Left => (self.start - self.width, self.start),
        }
    }

    pub fn apply(&self, e: &Expr) -> Expr {
        let t = match self.side {
            Side::Right => Expr::x().sub(&Expr::constant(self.start)),
            Side::Left => Expr::constant(self.start).sub(&Expr::x()),
        }
        .div(&Expr::constant(self.width));
        let b = t.step();
        Expr::one()
            .sub(&b)
            .mul(e)
            .add(&b.mul(&Expr::constant(self.limit)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub v1: Expr,
    pub v2: Expr,
    pub r0: Expr,
    pub r1: Expr,
    pub e0: f64,
    pub delta0: f64,
    pub domain: [f64; 2],
    pub flatten: Vec<Flatten>,
}

impl ProblemSpec {
    /// Potentials with all flattening recipes applied, in order.
    pub fn effective_potentials(&self) -> (Expr, Expr) {
        let mut v1 = self.v1.clone();
        let mut v2 = self.v2.clone();
        for f in &self.flatten {
            match f.which {
                Channel::V1 => v1 = f.apply(&v1),
                Channel::V2 => v2 = f.apply(&v2),
            }
        }
        (v1, v2)
    }

    /// Same problem with the interaction multiplied by `eps`.
    pub fn with_coupling_scale(&self, eps: f64) -> Self {
        let c = Expr::constant(eps);
        ProblemSpec {
            r0: c.mul(&self.r0),
            r1: c.mul(&self.r1),
            ..self.clone()
        }
    }
}

/// Local Taylor data at the crossing `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingData {
    /// Contact order: vanishing order of `V2 - V1` at 0.
    pub m: u32,
    pub v_m: f64,
    pub v_m1: f64,
    /// Vanishing order of the interaction, `min` over `r0` and `r1`.
    pub k: u32,
    pub r_k: f64,
    pub r_k1: f64,
    pub r1_k: f64,
    pub r1_k1: f64,
    pub dv1_0: f64,
    pub dv2_0: f64,
    pub e0: f64,
    /// False when both `r0` and `r1` vanish identically (to the order cap).
    pub coupled: bool,
}

impl CrossingData {
    pub fn sigma(&self) -> f64 {
        self.v_m.signum()
    }

    /// Both orders odd with `k + 1 < m`: the general leading term vanishes
    /// and the next order takes over.
    pub fn is_odd_regime(&self) -> bool {
        self.k % 2 == 1 && self.m % 2 == 1 && self.k + 1 < self.m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedProblem {
    pub spec: ProblemSpec,
    pub v1: Expr,
    pub v2: Expr,
    pub crossing: CrossingData,
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum OrderError {
    #[error("order undetectable: all derivatives up to order {max_order} vanish at x = {x0}")]
    Undetectable { x0: f64, max_order: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("box must be finite with xL < xR, got [{0}, {1}]")]
    BadBox(f64, f64),
    #[error("E0 must be a positive finite energy, got {0}")]
    BadEnergy(f64),
    #[error("delta0 must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("flattening width must be positive and finite, got {0}")]
    BadFlattenWidth(f64),
    #[error("potentials must vanish at the crossing: V1(0) = {v1_0}, V2(0) = {v2_0}")]
    NotNormalized { v1_0: f64, v2_0: f64 },
    #[error("V1 - E0 must change sign exactly twice on the box, found {0} sign changes")]
    WellNotClosed(usize),
    #[error("a ≥ 0: left turning point of V1 at a = {0}")]
    ANonNegative(f64),
    #[error("V2 - E0 must change sign exactly once on the box, found {0} sign changes")]
    V2TurningPoints(usize),
    #[error("b ≤ 0: turning point of V2 at b = {0}")]
    BNonPositive(f64),
    #[error("b ≥ a': turning point of V2 at b = {b} is not left of a' = {a_prime}")]
    BNotBelowAPrime { b: f64, a_prime: f64 },
    #[error("V2 must lie below E0 left of b and above E0 right of b")]
    V2WrongSide,
    #[error("second crossing of V1=V2 at x≈{0}")]
    SecondCrossing(f64),
    #[error("V2 - V1 must be negative at a and positive at a' (found {at_a} and {at_a_prime}); this is what makes the contact order odd")]
    CrossingSign { at_a: f64, at_a_prime: f64 },
    #[error("contact order of V2 - V1 at 0: {0}")]
    ContactOrder(OrderError),
    #[error("contact order m = {0} is even although V2 - V1 changes sign across 0")]
    EvenContact(u32),
    #[error("k ≥ m: interaction vanishes to order k = {k} at the crossing, which is not below the contact order m = {m}")]
    InteractionOrder { k: u32, m: u32 },
    #[error("flattening blend [{lo}, {hi}] of {which:?} intrudes on [a - {margin}, a' + {margin}] = [{well_lo}, {well_hi}]")]
    FlattenOverlap {
        which: Channel,
        lo: f64,
        hi: f64,
        margin: f64,
        well_lo: f64,
        well_hi: f64,
    },
}

/// Smallest `j` with `|e^(j)(x0)| > tol * scale`, where
/// `scale = max(1, sum_i |e^(i)(x0)| / i!)` over `i <= max_order`.
pub fn vanishing_order(
    e: &Expr,
    x0: f64,
    max_order: usize,
    tol: f64,
) -> Result<(u32, f64), OrderError> {
    let d = e.derivatives_at(x0, max_order);
    let mut fact = 1.0;
    let mut sum = 0.0;
    for (i, v) in d.iter().enumerate() {
        if i > 0 {
            fact *= i as f64;
        }
        sum += v.abs() / fact;
    }
    let scale = sum.max(1.0);
    d.iter()
        .enumerate()
        .find(|(_, v)| v.abs() > tol * scale)
        .map(|(j, v)| (j as u32, *v))
        .ok_or(OrderError::Undetectable { x0, max_order })
}

fn sample_grid(lo: f64, hi: f64) -> Vec<f64> {
    let n = SAMPLE_POINTS;
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Brackets `[x_i, x_{i+1}]` across which `f` changes sign (zero counts as positive).
fn sign_changes(xs: &[f64], f: &dyn Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let vals: Vec<bool> = xs.iter().map(|&x| f(x) >= 0.0).collect();
    (0..xs.len() - 1)
        .filter(|&i| vals[i] != vals[i + 1])
        .map(|i| (xs[i], xs[i + 1]))
        .collect()
}

pub(crate) fn refine_root(e: &Expr, level: f64, lo: f64, hi: f64) -> f64 {
    let de = e.diff();
    bisect_polish(|x| e.eval(x) - level, |x| de.eval(x), lo, hi, 1e-10, 5)
}

// golden-section minimum of |f| on [lo, hi]
fn min_abs(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c).abs(), f(d).abs());
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c).abs();
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d).abs();
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

pub fn validate(spec: &ProblemSpec) -> Result<ValidatedProblem, ValidationError> {
    let [xl, xr] = spec.domain;
    if !(xl.is_finite() && xr.is_finite() && xl < xr) {
        return Err(ValidationError::BadBox(xl, xr));
    }
    if !(spec.e0.is_finite() && spec.e0 > 0.0) {
        return Err(ValidationError::BadEnergy(spec.e0));
    }
    if !(spec.delta0 > 0.0 && spec.delta0 < 1.0) {
        return Err(ValidationError::BadDelta(spec.delta0));
    }
    for f in &spec.flatten {
        if !(f.width.is_finite() && f.width > 0.0) {
            return Err(ValidationError::BadFlattenWidth(f.width));
        }
    }
    let e0 = spec.e0;
    let (v1, v2) = spec.effective_potentials();
    let (v1_0, v2_0) = (v1.eval(0.0), v2.eval(0.0));
    let zero_tol = 1e-12 * (1.0 + e0);
    if v1_0.abs() > zero_tol || v2_0.abs() > zero_tol {
        return Err(ValidationError::NotNormalized { v1_0, v2_0 });
    }

    let xs = sample_grid(xl, xr);

    // V1: a closed well, below E0 exactly on (a, a')
    let g1 = |x: f64| v1.eval(x) - e0;
    let br1 = sign_changes(&xs, &g1);
    if br1.len() != 2 || g1(xl) < 0.0 {
        return Err(ValidationError::WellNotClosed(br1.len()));
    }
    let a = refine_root(&v1, e0, br1[0].0, br1[0].1);
    let a_prime = refine_root(&v1, e0, br1[1].0, br1[1].1);
    if a >= 0.0 {
        return Err(ValidationError::ANonNegative(a));
    }

    // V2: a single turning point b with 0 < b < a'
    let g2 = |x: f64| v2.eval(x) - e0;
    let br2 = sign_changes(&xs, &g2);
    if br2.len() != 1 {
        return Err(ValidationError::V2TurningPoints(br2.len()));
    }
    let b = refine_root(&v2, e0, br2[0].0, br2[0].1);
    if b <= 0.0 {
        return Err(ValidationError::BNonPositive(b));
    }
    if b >= a_prime {
        return Err(ValidationError::BNotBelowAPrime { b, a_prime });
    }
    if g2(xl) >= 0.0 || g2(xr) <= 0.0 {
        return Err(ValidationError::V2WrongSide);
    }

    // V2 - V1: a single zero, at 0, with a sign flip
    let w = v2.sub(&v1);
    let gw = |x: f64| w.eval(x);
    let (at_a, at_a_prime) = (gw(a), gw(a_prime));
    if !(at_a < 0.0 && at_a_prime > 0.0) {
        return Err(ValidationError::CrossingSign { at_a, at_a_prime });
    }
    let brw = sign_changes(&xs, &gw);
    if let Some(&(lo, hi)) = brw.iter().find(|(lo, hi)| !(*lo <= 0.0 && 0.0 <= *hi)) {
        return Err(ValidationError::SecondCrossing(refine_root(
            &w, 0.0, lo, hi,
        )));
    }
    let vals: Vec<f64> = xs.iter().map(|&x| gw(x).abs()).collect();
    let wscale = 1.0 + vals.iter().cloned().fold(0.0, f64::max);
    let step = xs[1] - xs[0];
    for i in 1..xs.len() - 1 {
        if xs[i].abs() <= 2.0 * step || vals[i] > vals[i - 1] || vals[i] > vals[i + 1] {
            continue;
        }
        let (xm, fm) = min_abs(&gw, xs[i - 1], xs[i + 1]);
        if fm < 1e-10 * wscale && xm.abs() > step {
            return Err(ValidationError::SecondCrossing(xm));
        }
    }

    let (m, v_m) = vanishing_order(&w, 0.0, DEFAULT_MAX_ORDER, ORDER_TOL)
        .map_err(ValidationError::ContactOrder)?;
    if m % 2 == 0 {
        return Err(ValidationError::EvenContact(m));
    }
    let wd = w.derivatives_at(0.0, m as usize + 1);
    let v_m1 = wd[m as usize + 1];

    let k0 = vanishing_order(&spec.r0, 0.0, DEFAULT_MAX_ORDER, ORDER_TOL).ok();
    let k1 = vanishing_order(&spec.r1, 0.0, DEFAULT_MAX_ORDER, ORDER_TOL).ok();
    let (k, coupled) = match (k0, k1) {
        (None, None) => (0, false),
        (Some((k, _)), None) | (None, Some((k, _))) => (k, true),
        (Some((ka, _)), Some((kb, _))) => (ka.min(kb), true),
    };
    if coupled && k >= m {
        return Err(ValidationError::InteractionOrder { k, m });
    }
    let r0d = spec.r0.derivatives_at(0.0, k as usize + 1);
    let r1d = spec.r1.derivatives_at(0.0, k as usize + 1);
    let crossing = CrossingData {
        m,
        v_m,
        v_m1,
        k,
        r_k: r0d[k as usize],
        r_k1: r0d[k as usize + 1],
        r1_k: r1d[k as usize],
        r1_k1: r1d[k as usize + 1],
        dv1_0: v1.diff().eval(0.0),
        dv2_0: v2.diff().eval(0.0),
        e0,
        coupled,
    };

    let (well_lo, well_hi) = (a - FLATTEN_MARGIN, a_prime + FLATTEN_MARGIN);
    for f in &spec.flatten {
        let (lo, hi) = f.blend_region();
        if hi > well_lo && lo < well_hi {
            return Err(ValidationError::FlattenOverlap {
                which: f.which,
                lo,
                hi,
                margin: FLATTEN_MARGIN,
                well_lo,
                well_hi,
            });
        }
    }

    Ok(ValidatedProblem {
        spec: spec.clone(),
        v1,
        v2,
        crossing,
        a,
        b,
        a_prime,
    })
}

/// Reference problem with contact order 1 and a constant interaction.
pub fn reference_r1() -> ProblemSpec {
    ProblemSpec {
        v1: Expr::parse("x^2 - 2*x").unwrap(),
        v2: Expr::parse("4*tanh(x)").unwrap(),
        r0: Expr::one(),
        r1: Expr::zero(),
        e0: 1.0,
        delta0: 0.9,
        domain: [-8.0, 8.0],
        flatten: alloc::vec![Flatten {
            side: Side::Right,
            which: Channel::V1,
            start: 3.1,
            limit: 3.6,
            width: 0.3,
        }],
    }
}

/// Reference problem with contact order 3 and an interaction vanishing to
/// first order: `V2 = V1 + 4x^3`, `r0 = x`.
pub fn reference_r2() -> ProblemSpec {
    let mut spec = reference_r1();
    spec.v2 = Expr::parse("x^2 - 2*x + 4*x^3").unwrap();
    spec.r0 = Expr::x();
    spec.flatten.push(Flatten {
        side: Side::Left,
        which: Channel::V2,
        start: -1.5,
        limit: -4.0,
        width: 1.0,
    });
    spec.flatten.push(Flatten {
        side: Side::Right,
        which: Channel::V2,
        start: 3.0,
        limit: 16.0,
        width: 1.0,
    });
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn vanishing_orders() {
        let e = Expr::parse("x^3").unwrap();
        assert_eq!(vanishing_order(&e, 0.0, 12, 1e-9).unwrap(), (3, 6.0));
        let e = Expr::parse("4*tanh(x) - (x^2 - 2*x)").unwrap();
        let (j, v) = vanishing_order(&e, 0.0, 12, 1e-9).unwrap();
        assert_eq!(j, 1);
        assert!(close(v, 6.0, 1e-14));
        assert_eq!(
            vanishing_order(&Expr::one(), 0.0, 12, 1e-9).unwrap(),
            (0, 1.0)
        );
        let e = Expr::parse("x + 1e-15").unwrap();
        assert_eq!(vanishing_order(&e, 0.0, 12, 1e-9).unwrap().0, 1);
        assert!(vanishing_order(&Expr::zero(), 0.0, 12, 1e-9).is_err());
    }

    #[test]
    fn r1_is_valid_with_closed_form_geometry() {
        let p = validate(&reference_r1()).unwrap();
        let s2 = 2f64.sqrt();
        assert!(close(p.a, 1.0 - s2, 1e-12));
        assert!(close(p.a_prime, 1.0 + s2, 1e-12));
        assert!(close(p.b, 0.25f64.atanh(), 1e-12));
        let c = p.crossing;
        assert_eq!((c.m, c.k), (1, 0));
        assert!(close(c.v_m, 6.0, 1e-13));
        assert!(close(c.v_m1, -2.0, 1e-12));
        assert!(close(c.r_k, 1.0, 0.0) && c.coupled);
        assert!(close(c.dv1_0, -2.0, 1e-14) && close(c.dv2_0, 4.0, 1e-14));
    }

    #[test]
    fn r2_is_valid_odd_regime() {
        let p = validate(&reference_r2()).unwrap();
        let c = p.crossing;
        assert_eq!((c.m, c.k), (3, 1));
        assert!(close(c.v_m, 24.0, 1e-11));
        assert!(close(c.v_m1, 0.0, 1e-9));
        assert!(close(c.r_k, 1.0, 0.0) && close(c.r_k1, 0.0, 0.0));
        assert!(c.is_odd_regime());
        // root of x^2 - 2x + 4x^3 = 1 near 0.79
        assert!(close(p.b, 0.79, 0.01));
        let poly = |x: f64| x * x - 2.0 * x + 4.0 * x * x * x - 1.0;
        assert!(poly(p.b).abs() < 1e-10);
    }

    #[test]
    fn violations_have_distinct_diagnostics() {
        let mut s = reference_r1();
        s.v2 = Expr::parse("-2*x").unwrap();
        let e = validate(&s).unwrap_err();
        assert!(matches!(e, ValidationError::BNonPositive(b) if close(b, -0.5, 1e-10)));
        assert!(e.to_string().contains("b ≤ 0"));

        let mut s = reference_r1();
        s.r0 = Expr::parse("x^2").unwrap();
        let e = validate(&s).unwrap_err();
        assert_eq!(e, ValidationError::InteractionOrder { k: 2, m: 1 });
        assert!(e.to_string().starts_with("k ≥ m"));

        let mut s = reference_r1();
        s.flatten[0].width = 1.0;
        let e = validate(&s).unwrap_err();
        assert!(
            matches!(e, ValidationError::SecondCrossing(x) if x > 3.0 && x < 4.0),
            "{e:?}"
        );
        assert!(e.to_string().contains("second crossing of V1=V2 at x≈"));

        let mut s = reference_r1();
        s.flatten[0].start = 2.5;
        assert!(matches!(
            validate(&s).unwrap_err(),
            ValidationError::FlattenOverlap { .. }
        ));

        let mut s = reference_r1();
        s.v1 = Expr::parse("x^2 - 2*x + 1").unwrap();
        assert!(matches!(
            validate(&s).unwrap_err(),
            ValidationError::NotNormalized { .. }
        ));

        let mut s = reference_r1();
        s.delta0 = 1.5;
        assert_eq!(validate(&s).unwrap_err(), ValidationError::BadDelta(1.5));
    }

    #[test]
    fn decoupled_problem_validates() {
        let mut s = reference_r1();
        s.r0 = Expr::zero();
        let p = validate(&s).unwrap();
        assert!(!p.crossing.coupled);
    }

    #[test]
    fn interaction_order_takes_the_minimum() {
        let mut s = reference_r2();
        s.r0 = Expr::parse("x^2").unwrap();
        s.r1 = Expr::parse("x").unwrap();
        let c = validate(&s).unwrap().crossing;
        assert_eq!(c.k, 1);
        assert_eq!((c.r_k, c.r_k1, c.r1_k, c.r1_k1), (0.0, 2.0, 1.0, 0.0));
    }

    #[test]
    fn validation_is_idempotent() {
        let p = validate(&reference_r2()).unwrap();
        let q = validate(&p.spec).unwrap();
        assert_eq!((p.a, p.b, p.a_prime), (q.a, q.b, q.a_prime));
    }
}
