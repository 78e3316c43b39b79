//! Degenerate stationary phase: `∫ e^{iφ(y)/h} a(y) dy` with
//! `φ'(y) = y^m φ1(y)` and `a(y) = y^k a0(y)`.
//!
//! Leading terms are exact evaluations of the closed forms; the brute-force
//! integral resolves the oscillation with panels spanning at most π/4 of
//! phase and a Gauss-Legendre rule on each.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::quad::{pairwise_sum, GaussLegendre};
use crate::special::gamma;

/// Smallest `h` accepted by the brute-force integrator.
pub const H_MIN: f64 = 1e-6;
const PANEL_PHASE: f64 = PI / 4.0;
const PANEL_NODES: usize = 10;

/// `μ_{k,m}(θ) = (e^{iθ} + (-1)^k e^{i(-1)^{m+1}θ}) / 2`.
pub fn mu(k: u32, m: u32, theta: f64) -> Complex64 {
    let s = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let t = if (m + 1).is_multiple_of(2) {
        theta
    } else {
        -theta
    };
    (Complex64::from_polar(1.0, theta) + Complex64::from_polar(1.0, t) * s) * 0.5
}

/// Which `μ` factor multiplies the next-order term when `k` and `m` are odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuInterpretation {
    /// `μ_{k+1,m}`: the parity index of the `y^{k+1}` amplitude term.
    #[default]
    Shifted,
    /// `μ_{k,m}`, which vanishes identically for odd `k`, `m`.
    Verbatim,
}

impl MuInterpretation {
    pub fn factor(self, k: u32, m: u32, theta: f64) -> Complex64 {
        match self {
            MuInterpretation::Shifted => mu(k + 1, m, theta),
            MuInterpretation::Verbatim => mu(k, m, theta),
        }
    }
}

/// Coefficient of `φ1'(0) a0(0)` in the next-order bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OddBracket {
    /// `a0'(0) - (k+2) φ1'(0) a0(0) / ((m+2) φ1(0))`, from the change of
    /// variables that straightens the phase.
    #[default]
    Derived,
    /// `a0'(0) - 2(2k+1) φ1'(0) a0(0) / ((m+2) |φ1(0)|)`.
    Verbatim,
}

impl OddBracket {
    pub fn eval(self, d: &PhaseData) -> Complex64 {
        let (k, m) = (d.k as f64, d.m as f64);
        let c = match self {
            OddBracket::Derived => (k + 2.0) * d.phi1p_0 / ((m + 2.0) * d.phi1_0),
            OddBracket::Verbatim => {
                2.0 * (2.0 * k + 1.0) * d.phi1p_0 / ((m + 2.0) * d.phi1_0.abs())
            }
        };
        d.a0p_0 - d.a0_0 * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseData {
    pub k: u32,
    pub m: u32,
    pub phi1_0: f64,
    pub phi1p_0: f64,
    pub a0_0: Complex64,
    pub a0p_0: Complex64,
    pub phi_0: f64,
    pub h: f64,
}

impl PhaseData {
    fn epsilon(&self) -> f64 {
        self.phi1_0.signum()
    }

    fn term(&self, j: u32, mu_factor: Complex64) -> Complex64 {
        let m1 = (self.m + 1) as f64;
        let p = j as f64 / m1;
        let scale = 2.0 / m1 * gamma(p) * (m1 / self.phi1_0.abs()).powf(p) * self.h.powf(p);
        Complex64::from_polar(1.0, self.phi_0 / self.h) * mu_factor * scale
    }
}

/// Leading term of order `h^{(k+1)/(m+1)}`.
pub fn leading_general(d: &PhaseData) -> Complex64 {
    let theta = d.epsilon() * (d.k + 1) as f64 * PI / (2.0 * (d.m + 1) as f64);
    d.term(d.k + 1, mu(d.k, d.m, theta)) * d.a0_0
}

/// Term of order `h^{(k+2)/(m+1)}`, the leading one when `k` and `m` are odd.
pub fn leading_odd(d: &PhaseData, mu_interp: MuInterpretation, bracket: OddBracket) -> Complex64 {
    let theta = d.epsilon() * (d.k + 2) as f64 * PI / (2.0 * (d.m + 1) as f64);
    d.term(d.k + 2, mu_interp.factor(d.k, d.m, theta)) * bracket.eval(d)
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SpError {
    #[error("h = {h} is below the brute-force floor {floor}")]
    HTooSmall { h: f64, floor: f64 },
    #[error("quadrature not converged: refinement changed the result by {diff} (tolerance {tol})")]
    NotConverged { diff: f64, tol: f64 },
    #[error("remainder at noise floor: all residuals below 1e-13")]
    NoiseFloor,
    #[error("degenerate fit: need at least {need} usable points, got {got}")]
    DegenerateFit { need: usize, got: usize },
}

/// Panel breakpoints on `[lo, hi]` such that `φ/h` varies by at most π/4
/// on each panel (checked on five points per panel).
fn panel_breaks<P: Fn(f64) -> f64>(phi: &P, lo: f64, hi: f64, h: f64, max_len: f64) -> Vec<f64> {
    let limit = PANEL_PHASE * h;
    let spread = |a: f64, b: f64| {
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        for i in 0..5 {
            let v = phi(a + (b - a) * i as f64 / 4.0);
            mn = mn.min(v);
            mx = mx.max(v);
        }
        mx - mn
    };
    let mut out = alloc::vec![lo];
    let mut y = lo;
    let mut step = max_len.min(hi - lo);
    while y < hi {
        step = step.min(hi - y).min(max_len);
        loop {
            let s = spread(y, y + step);
            if s <= limit || step < 1e-14 * (1.0 + y.abs()) {
                break;
            }
            // phase is locally close to linear: aim just below the limit
            step *= (0.9 * limit / s).clamp(0.1, 0.5);
        }
        y = if hi - (y + step) < 1e-15 * (1.0 + hi.abs()) {
            hi
        } else {
            y + step
        };
        out.push(y);
        step *= 2.0;
    }
    out
}

fn integrate_panels<A, P>(
    a: &A,
    phi: &P,
    breaks: &[f64],
    h: f64,
    gl: &GaussLegendre,
    split: bool,
) -> Vec<Complex64>
where
    A: Fn(f64) -> Complex64,
    P: Fn(f64) -> f64,
{
    let f = |y: f64| a(y) * Complex64::from_polar(1.0, phi(y) / h);
    let rule = |lo: f64, hi: f64| {
        let c = 0.5 * (lo + hi);
        let s = 0.5 * (hi - lo);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            acc += f(c + s * x) * *w;
        }
        acc * s
    };
    breaks
        .windows(2)
        .map(|w| {
            if split {
                let mid = 0.5 * (w[0] + w[1]);
                rule(w[0], mid) + rule(mid, w[1])
            } else {
                rule(w[0], w[1])
            }
        })
        .collect()
}

/// Integrals `∫_α^{x_j} e^{iφ/h} a dy` for increasing `xs` (all `>= alpha`),
/// validated by halving every panel once.
pub fn running_integral<A, P>(
    a: A,
    phi: P,
    alpha: f64,
    xs: &[f64],
    h: f64,
) -> Result<Vec<Complex64>, SpError>
where
    A: Fn(f64) -> Complex64,
    P: Fn(f64) -> f64,
{
    if !(h >= H_MIN) {
        return Err(SpError::HTooSmall { h, floor: H_MIN });
    }
    let gl = GaussLegendre::new(PANEL_NODES);
    let mut coarse_total = Complex64::new(0.0, 0.0);
    let mut fine_total = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(xs.len());
    let mut lo = alpha;
    for &x in xs {
        if x > lo {
            let max_len = ((x - lo) / 8.0).min(0.05);
            let breaks = panel_breaks(&phi, lo, x, h, max_len);
            coarse_total += pairwise_sum(&integrate_panels(&a, &phi, &breaks, h, &gl, false));
            fine_total += pairwise_sum(&integrate_panels(&a, &phi, &breaks, h, &gl, true));
            lo = x;
        }
        let diff = (coarse_total - fine_total).norm();
        let tol = 1e-10 * (1.0 + fine_total.norm());
        if diff > tol {
            return Err(SpError::NotConverged { diff, tol });
        }
        out.push(fine_total);
    }
    Ok(out)
}

/// `∫_α^x e^{iφ(y)/h} a(y) dy`.
pub fn oscillatory_integral<A, P>(
    a: A,
    phi: P,
    alpha: f64,
    x: f64,
    h: f64,
) -> Result<Complex64, SpError>
where
    A: Fn(f64) -> Complex64,
    P: Fn(f64) -> f64,
{
    if x < alpha {
        return oscillatory_integral(a, phi, x, alpha, h).map(|v| -v);
    }
    Ok(running_integral(a, phi, alpha, &[x], h)?[0])
}

/// Expression-valued convenience wrapper around [`oscillatory_integral`].
pub fn oscillatory_integral_expr(
    a: &crate::expr::Expr,
    phi: &crate::expr::Expr,
    alpha: f64,
    x: f64,
    h: f64,
) -> Result<Complex64, SpError> {
    oscillatory_integral(
        |y| Complex64::new(a.eval(y), 0.0),
        |y| phi.eval(y),
        alpha,
        x,
        h,
    )
}

/// `exp(1 - 1/(1 - y²))` on `|y| < 1`, zero outside.
pub fn bump(y: f64) -> f64 {
    let u = 1.0 - y * y;
    if u <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / u).exp()
    }
}

/// Test family with `φ(y) = σ(y^{m+1}/(m+1) + c_φ y^{m+2}/(m+2))` and
/// `a(y) = y^k (1 + c_a y) bump(y)`, so `φ1 = σ(1 + c_φ y)`, `a0(0) = 1`,
/// `a0'(0) = c_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpFamily {
    pub k: u32,
    pub m: u32,
    pub sigma: f64,
    pub c_phase: f64,
    pub c_amp: f64,
}

impl SpFamily {
    pub fn standard(k: u32, m: u32) -> Self {
        SpFamily {
            k,
            m,
            sigma: 1.0,
            c_phase: 0.3,
            c_amp: 0.5,
        }
    }

    pub fn phase(&self, y: f64) -> f64 {
        let m = self.m as i32;
        self.sigma
            * (y.powi(m + 1) / (m + 1) as f64 + self.c_phase * y.powi(m + 2) / (m + 2) as f64)
    }

    pub fn a0(&self, y: f64) -> f64 {
        (1.0 + self.c_amp * y) * bump(y)
    }

    pub fn amplitude(&self, y: f64) -> Complex64 {
        Complex64::new(y.powi(self.k as i32) * self.a0(y), 0.0)
    }

    pub fn phase_data(&self, h: f64) -> PhaseData {
        PhaseData {
            k: self.k,
            m: self.m,
            phi1_0: self.sigma,
            phi1p_0: self.sigma * self.c_phase,
            a0_0: Complex64::new(1.0, 0.0),
            a0p_0: Complex64::new(self.c_amp, 0.0),
            phi_0: 0.0,
            h,
        }
    }

    /// Whole-line integral (the amplitude is supported in `[-1, 1]`).
    pub fn brute_force(&self, h: f64) -> Result<Complex64, SpError> {
        oscillatory_integral(|y| self.amplitude(y), |y| self.phase(y), -1.0, 1.0, h)
    }

    /// The leading term appropriate for `(k, m)`: the next-order one when
    /// both are odd, since the general one vanishes.
    pub fn leading(&self, h: f64, mu_interp: MuInterpretation, bracket: OddBracket) -> Complex64 {
        let d = self.phase_data(h);
        if self.k % 2 == 1 && self.m % 2 == 1 {
            leading_odd(&d, mu_interp, bracket)
        } else {
            leading_general(&d)
        }
    }

    /// Order of the leading term in `h`.
    pub fn leading_power(&self) -> f64 {
        let j = if self.k % 2 == 1 && self.m % 2 == 1 {
            self.k + 2
        } else {
            self.k + 1
        };
        j as f64 / (self.m + 1) as f64
    }

    /// Order of the first neglected term.
    pub fn remainder_power(&self) -> f64 {
        self.leading_power() + 1.0 / (self.m + 1) as f64
    }
}

/// Least-squares line `y = slope·x + intercept`, with the standard error of
/// the slope.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sigma = if xs.len() > 2 {
        let ss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (slope * x + intercept);
                r * r
            })
            .sum();
        (ss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpRow {
    pub h: f64,
    pub numeric: Complex64,
    pub leading: Complex64,
    pub abs_resid: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemainderReport {
    pub rows: Vec<SpRow>,
    /// Slope of `log |I_num - I_leading|` against `log h`.
    pub slope: f64,
}

/// Brute force versus leading term over `h_grid`, with the fitted
/// remainder slope.
pub fn remainder_order(
    family: &SpFamily,
    h_grid: &[f64],
    mu_interp: MuInterpretation,
    bracket: OddBracket,
) -> Result<RemainderReport, SpError> {
    if h_grid.len() < 5 {
        return Err(SpError::DegenerateFit {
            need: 5,
            got: h_grid.len(),
        });
    }
    let mut rows = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let numeric = family.brute_force(h)?;
        let leading = family.leading(h, mu_interp, bracket);
        rows.push(SpRow {
            h,
            numeric,
            leading,
            abs_resid: (numeric - leading).norm(),
        });
    }
    let usable: Vec<&SpRow> = rows.iter().filter(|r| r.abs_resid >= 1e-13).collect();
    if usable.is_empty() {
        return Err(SpError::NoiseFloor);
    }
    if usable.len() < 3 {
        return Err(SpError::DegenerateFit {
            need: 3,
            got: usable.len(),
        });
    }
    let lx: Vec<f64> = usable.iter().map(|r| r.h.ln()).collect();
    let ly: Vec<f64> = usable.iter().map(|r| r.abs_resid.ln()).collect();
    let (slope, _, _) = fit_line(&lx, &ly);
    Ok(RemainderReport { rows, slope })
}

/// 64 endpoints for the variable-endpoint bound: 32 on each side of the
/// stationary point, geometrically spaced in `[1e-3, 1]`.
pub fn bound_samples() -> Vec<f64> {
    let pos: Vec<f64> = (0..32)
        .map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 31.0))
        .collect();
    let mut xs: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    xs.extend(pos);
    xs
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub k: u32,
    pub m: u32,
    pub h: Vec<f64>,
    /// `sup_x |∫_{-1}^x|` for `a = y^k a0`.
    pub sup: Vec<f64>,
    /// `sup / (h^{(k+1)/(m+1)} ‖a0‖ + h^{(k+2)/(m+1)} ‖a0'‖ log(1/h)^δ)`.
    pub constant: Vec<f64>,
    /// `max / min` of `constant`.
    pub spread: f64,
    /// `sup_x |∫_{-1}^x|` for the `y^{k+1}` part that carries `‖a0'‖`.
    pub residual: Vec<f64>,
    pub log_flag: bool,
}

fn sup_over_samples<A: Fn(f64) -> Complex64, P: Fn(f64) -> f64>(
    a: A,
    phi: P,
    h: f64,
) -> Result<f64, SpError> {
    let xs = bound_samples();
    let vals = running_integral(a, phi, -1.0, &xs, h)?;
    Ok(vals.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

fn sup_norm<F: Fn(f64) -> f64>(f: F) -> f64 {
    (0..=4000)
        .map(|i| f(-1.0 + 2.0 * i as f64 / 4000.0).abs())
        .fold(0.0, f64::max)
}

/// Variable-endpoint bound check over `h_grid` for the standard family.
///
/// The log flag compares two growth hypotheses for
/// `q(h) = residual(h) / h^{(k+2)/(m+1)}`: it is raised when
/// `q / log(1/h)` stays within 20% over the grid while `q` itself does not.
pub fn bound_check(k: u32, m: u32, h_grid: &[f64]) -> Result<BoundReport, SpError> {
    let fam = SpFamily::standard(k, m);
    let a0_norm = sup_norm(|y| fam.a0(y));
    let a0p_norm = {
        let d = 1e-6;
        sup_norm(|y| (fam.a0(y + d) - fam.a0(y - d)) / (2.0 * d))
    };
    let p1 = (k + 1) as f64 / (m + 1) as f64;
    let p2 = (k + 2) as f64 / (m + 1) as f64;
    let log_power = if m == k + 1 { 1 } else { 0 };
    let mut sup = Vec::new();
    let mut constant = Vec::new();
    let mut residual = Vec::new();
    for &h in h_grid {
        let s = sup_over_samples(|y| fam.amplitude(y), |y| fam.phase(y), h)?;
        let bound = h.powf(p1) * a0_norm + h.powf(p2) * a0p_norm * (1.0 / h).ln().powi(log_power);
        sup.push(s);
        constant.push(s / bound);
        let r = sup_over_samples(
            |y| Complex64::new(y.powi(k as i32 + 1) * bump(y), 0.0),
            |y| fam.phase(y),
            h,
        )?;
        residual.push(r);
    }
    let cmax = constant.iter().cloned().fold(0.0, f64::max);
    let cmin = constant.iter().cloned().fold(f64::INFINITY, f64::min);
    let q: Vec<f64> = h_grid
        .iter()
        .zip(&residual)
        .map(|(h, r)| r / h.powf(p2))
        .collect();
    let q_log: Vec<f64> = h_grid
        .iter()
        .zip(&q)
        .map(|(h, q)| q / (1.0 / h).ln())
        .collect();
    let within = |v: &[f64]| {
        let mx = v.iter().cloned().fold(0.0, f64::max);
        let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
        mx <= 1.2 * mn
    };
    let log_flag = within(&q_log) && !within(&q);
    Ok(BoundReport {
        k,
        m,
        h: h_grid.to_vec(),
        sup,
        constant,
        spread: cmax / cmin,
        residual,
        log_flag,
    })
}

/// Geometric grid from `hi` down to `lo` with `n` points.
pub fn geometric_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| hi * (lo / hi).powf(i as f64 / (n - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mu_examples() {
        for th in [-1.0, 0.3, 2.0] {
            assert!((mu(0, 1, th) - Complex64::from_polar(1.0, th)).norm() < 1e-15);
            assert_eq!(mu(1, 1, th), c(0.0, 0.0));
        }
        assert!((mu(0, 2, PI / 6.0) - c(3f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mu_vanishes_exactly_for_odd_odd() {
        for k in 0..=7u32 {
            for m in 1..=7u32 {
                let zero = (0..50).all(|i| mu(k, m, -3.0 + 0.123 * i as f64) == c(0.0, 0.0));
                assert_eq!(zero, k % 2 == 1 && m % 2 == 1, "k={k} m={m}");
            }
        }
    }

    proptest! {
        #[test]
        fn mu_conjugation(k in 0u32..=4, m in 1u32..=5, th in -10.0f64..10.0) {
            let d = mu(k, m, -th) - mu(k, m, th).conj();
            prop_assert!(d.norm() < 1e-15);
        }

        #[test]
        fn mu_even_m_trig_forms(k in 0u32..=6, half_m in 1u32..=3, th in -10.0f64..10.0) {
            let v = mu(k, 2 * half_m, th);
            let want = if k % 2 == 0 { c(th.cos(), 0.0) } else { c(0.0, th.sin()) };
            prop_assert!((v - want).norm() < 1e-15);
        }

        #[test]
        fn brute_force_is_linear(s in -2.0f64..2.0, t in -2.0f64..2.0) {
            let f = SpFamily::standard(0, 1);
            let g = |y: f64| Complex64::new(y * y * bump(y), 0.0);
            let h = 1e-2;
            let lhs = oscillatory_integral(|y| f.amplitude(y) * s + g(y) * t, |y| f.phase(y), -1.0, 1.0, h).unwrap();
            let one = oscillatory_integral(|y| f.amplitude(y), |y| f.phase(y), -1.0, 1.0, h).unwrap();
            let two = oscillatory_integral(g, |y| f.phase(y), -1.0, 1.0, h).unwrap();
            let rhs = one * s + two * t;
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn gaussian_damped_fresnel() {
        let h = 1e-3;
        let got =
            oscillatory_integral(|y| c((-y * y).exp(), 0.0), |y| y * y, -6.0, 6.0, h).unwrap();
        // ∫ e^{-(1 - i/h) y²} dy = sqrt(π / (1 - i/h))
        let want = (c(PI, 0.0) / c(1.0, -1.0 / h)).sqrt();
        assert!(
            (got - want).norm() < 1e-10 * (1.0 + want.norm()),
            "{got} vs {want}"
        );
        let lead = leading_general(&PhaseData {
            k: 0,
            m: 1,
            phi1_0: 2.0,
            phi1p_0: 0.0,
            a0_0: c(1.0, 0.0),
            a0p_0: c(0.0, 0.0),
            phi_0: 0.0,
            h,
        });
        let fresnel = Complex64::from_polar((PI * h).sqrt(), PI / 4.0);
        assert!((lead - fresnel).norm() < 1e-15);
        assert!(((got / lead) - 1.0).norm() < 2.0 * h);
    }

    #[test]
    fn odd_amplitude_integrates_to_zero() {
        let v = oscillatory_integral(|y| c(y * (-y * y).exp(), 0.0), |y| y * y, -6.0, 6.0, 1e-3)
            .unwrap();
        assert!(v.norm() <= 1e-12);
        let z = oscillatory_integral(|_| c(0.0, 0.0), |y| y * y, -1.0, 1.0, 1e-3).unwrap();
        assert_eq!(z, c(0.0, 0.0));
    }

    #[test]
    fn leading_term_examples() {
        let h = 1e-4;
        let d = PhaseData {
            k: 0,
            m: 3,
            phi1_0: 4.0,
            phi1p_0: 0.0,
            a0_0: c(2.0, 0.0),
            a0p_0: c(0.0, 0.0),
            phi_0: 0.0,
            h,
        };
        let want =
            Complex64::from_polar(1.0, PI / 8.0) * (2.0 / 4.0) * gamma(0.25) * 2.0 * h.powf(0.25);
        assert!((leading_general(&d) - want).norm() < 1e-15);
        let odd = PhaseData { k: 1, ..d };
        assert_eq!(leading_general(&odd), c(0.0, 0.0));

        let d = PhaseData {
            k: 1,
            m: 3,
            phi1_0: 4.0,
            phi1p_0: 0.0,
            a0_0: c(0.0, 0.0),
            a0p_0: c(1.0, 0.0),
            phi_0: 0.0,
            h,
        };
        let want = Complex64::from_polar(1.0, 3.0 * PI / 8.0) / 2.0 * gamma(0.75) * h.powf(0.75);
        let got = leading_odd(&d, MuInterpretation::Shifted, OddBracket::Derived);
        assert!((got - want).norm() < 1e-15);
        let twice = PhaseData {
            a0p_0: c(2.0, 0.0),
            ..d
        };
        let got2 = leading_odd(&twice, MuInterpretation::Shifted, OddBracket::Derived);
        assert!((got2 - got * 2.0).norm() < 1e-15);
        assert_eq!(
            leading_odd(&d, MuInterpretation::Verbatim, OddBracket::Derived),
            c(0.0, 0.0)
        );
        let quad = PhaseData {
            k: 1,
            m: 1,
            phi1_0: 2.0,
            a0_0: c(1.0, 0.0),
            a0p_0: c(0.0, 0.0),
            ..d
        };
        assert_eq!(
            leading_odd(&quad, MuInterpretation::Shifted, OddBracket::Derived),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn brute_force_matches_leading_term() {
        let h = 1e-4;
        for (k, m) in [(0, 1), (0, 2), (1, 2), (0, 3)] {
            for sigma in [1.0, -1.0] {
                let f = SpFamily {
                    sigma,
                    ..SpFamily::standard(k, m)
                };
                let num = f.brute_force(h).unwrap();
                let lead = f.leading(h, MuInterpretation::Shifted, OddBracket::Derived);
                let rel = (num - lead).norm() / lead.norm();
                let expect = 20.0 * h.powf(1.0 / (m + 1) as f64);
                assert!(rel < expect, "k={k} m={m} σ={sigma}: rel {rel}");
            }
        }
    }

    #[test]
    fn derived_bracket_matches_for_negative_phase() {
        // k = m = 1 with σ = -1 and both a0'(0) and φ1'(0) nonzero
        let f = SpFamily {
            sigma: -1.0,
            ..SpFamily::standard(1, 3)
        };
        let h = 1e-5;
        let num = f.brute_force(h).unwrap();
        let lead = f.leading(h, MuInterpretation::Shifted, OddBracket::Derived);
        assert!(((num / lead) - 1.0).norm() < 0.1, "{}", num / lead);
    }

    #[test]
    fn h_floor_is_enforced() {
        let f = SpFamily::standard(0, 1);
        assert!(matches!(
            f.brute_force(1e-7),
            Err(SpError::HTooSmall { .. })
        ));
    }

    #[test]
    fn fit_line_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (s, i, e) = fit_line(&xs, &ys);
        assert!((s - 3.0).abs() < 1e-14 && (i + 1.0).abs() < 1e-14 && e < 1e-14);
    }
}
