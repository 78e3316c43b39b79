//! Complex-energy shooting for the coupled system.
//!
//! With `U = r0 + i h r1 D_x` the equation `(P - E) w = 0` reads
//!
//! ```text
//! h² w1'' = (V1 - E) w1 + h r0 w2 + h² r1 w2'
//! h² w2'' = (V2 - E) w2 + h r0 w1 - h² (r1 w1' + r1' w1)
//! ```
//!
//! Admissible solutions are propagated from both box edges to the matching
//! point `x = 0`, and resonances are the zeros of the 4×4 matching
//! determinant.
//!
//! The RK4 mesh, the renormalization points and the pivot rows used there
//! are fixed at a reference energy, so for a given propagator the
//! determinant is an analytic function of `E`.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::asymptotics::{width_power, Regime};
use crate::expr::Expr;
use crate::linalg::det;
use crate::problem::ValidatedProblem;

type C = Complex64;
type State = [C; 4];
type Frame = [State; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub x_left: f64,
    pub x_right: f64,
    /// Target RK4 phase error per radian of local oscillation or decay.
    pub ode_tol: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub renorm_threshold: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            x_left: -6.0,
            x_right: 6.0,
            ode_tol: 1e-12,
            newton_tol: 1e-8,
            max_newton: 60,
            renorm_threshold: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Shooting,
    Cap,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Shooting => "shooting",
            Method::Cap => "cap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceMeasurement {
    pub e: C,
    pub residual: f64,
    pub method: Method,
    pub h: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("invalid oracle configuration: {0}")]
    BadConfig(&'static str),
    #[error(
        "channel openness mismatch at the {edge:?} edge x = {x} for E = {e}: expected {expected}"
    )]
    ChannelMismatch {
        edge: Edge,
        x: f64,
        e: C,
        expected: &'static str,
    },
    #[error("overflow despite renormalization")]
    Overflow,
    #[error("no convergence after {iterations} iterations (last E = {last}, residual {residual})")]
    NonConvergence {
        iterations: usize,
        last: C,
        residual: f64,
    },
    #[error("wrong basin: converged to E = {e}, farther than {limit} from the start {e_init}")]
    WrongBasin { e: C, e_init: f64, limit: f64 },
    #[error("converged to E = {0} with positive imaginary part")]
    PositiveImaginary(C),
    #[error("no eta-stationary eigenvalue found near E = {0}")]
    NoStationary(f64),
    #[error("singular shifted matrix at E = {0}")]
    Singular(C),
}

#[derive(Debug, Clone, Copy)]
struct Coeffs {
    v1: f64,
    v2: f64,
    r0: f64,
    r1: f64,
    r1p: f64,
}

struct Fields {
    v1: Expr,
    v2: Expr,
    r0: Expr,
    r1: Expr,
    r1p: Expr,
}

impl Fields {
    fn new(p: &ValidatedProblem) -> Self {
        Fields {
            v1: p.v1.clone(),
            v2: p.v2.clone(),
            r0: p.spec.r0.clone(),
            r1: p.spec.r1.clone(),
            r1p: p.spec.r1.diff(),
        }
    }

    fn at(&self, x: f64) -> Coeffs {
        Coeffs {
            v1: self.v1.eval(x),
            v2: self.v2.eval(x),
            r0: self.r0.eval(x),
            r1: self.r1.eval(x),
            r1p: self.r1p.eval(x),
        }
    }
}

fn rhs(c: &Coeffs, e: C, h: f64, y: &State) -> State {
    let h2 = h * h;
    [
        y[2],
        y[3],
        (y[0] * (c.v1 - e)) / h2 + y[1] * (c.r0 / h) + y[3] * c.r1,
        y[0] * (c.r0 / h - c.r1p) + (y[1] * (c.v2 - e)) / h2 - y[2] * c.r1,
    ]
}

fn axpy(y: &State, a: f64, k: &State) -> State {
    [
        y[0] + k[0] * a,
        y[1] + k[1] * a,
        y[2] + k[2] * a,
        y[3] + k[3] * a,
    ]
}

/// One side of the propagation: nodes `x_0 (edge) .. x_n = 0` and the
/// coefficients at nodes and midpoints.
struct SideMesh {
    xs: Vec<f64>,
    // 2n+1 entries: node i at 2i, midpoint of [i, i+1] at 2i+1
    coeffs: Vec<Coeffs>,
    // after step j (landing on node j+1): pivot rows for renormalization
    renorm: Vec<Option<(usize, usize)>>,
}

/// Local rate `max_j sqrt|V_j - E|/h`, floored so that flat regions still
/// get resolved.
fn local_rate(c: &Coeffs, e: f64, h: f64) -> f64 {
    let g = (c.v1 - e).abs().max((c.v2 - e).abs());
    g.sqrt().max(h.powf(1.0 / 3.0)) / h
}

fn build_nodes(fields: &Fields, edge: f64, e_ref: f64, h: f64, cfg: &ShootingConfig) -> Vec<f64> {
    let per_step = (120.0 * cfg.ode_tol).powf(0.25).min(0.2);
    let max_dx = 0.01;
    let dir = -edge.signum();
    let mut xs = alloc::vec![edge];
    let mut x = edge;
    loop {
        let rate = local_rate(&fields.at(x), e_ref, h);
        let mut dx = (per_step / rate).min(max_dx);
        // the rate may rise within the step; look ahead once
        let ahead = local_rate(&fields.at(x + dir * dx), e_ref, h);
        dx = dx.min(per_step / ahead);
        if (x + dir * dx) * dir >= 0.0 || x.abs() < dx * 1.5 {
            xs.push(0.0);
            break;
        }
        x += dir * dx;
        xs.push(x);
    }
    xs
}

/// Largest 2×2 minor of a frame, as `(|minor|, rows)`.
fn max_minor(f: &Frame) -> (f64, (usize, usize)) {
    let mut best = (-1.0, (0, 1));
    for i in 0..4 {
        for j in i + 1..4 {
            let d = (f[0][i] * f[1][j] - f[0][j] * f[1][i]).norm();
            if d > best.0 {
                best = (d, (i, j));
            }
        }
    }
    best
}

/// `F ← F (P F)^{-1}` with `P` selecting `rows`; analytic in the entries.
fn normalize(f: &Frame, rows: (usize, usize)) -> Frame {
    let (i, j) = rows;
    let (a, b, c, d) = (f[0][i], f[1][i], f[0][j], f[1][j]);
    let det = a * d - b * c;
    // columns of F times [[d, -b], [-c, a]] / det
    let mut out = [[C::zero(); 4]; 2];
    for r in 0..4 {
        out[0][r] = (f[0][r] * d - f[1][r] * c) / det;
        out[1][r] = (f[1][r] * a - f[0][r] * b) / det;
    }
    out
}

fn frame_norm(f: &Frame) -> f64 {
    f.iter()
        .flat_map(|s| s.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

fn condition(f: &Frame) -> f64 {
    let n0 = f[0].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let n1 = f[1].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let (m, _) = max_minor(f);
    if m == 0.0 {
        f64::INFINITY
    } else {
        n0 * n1 / m
    }
}

impl SideMesh {
    fn new(fields: &Fields, edge: f64, e_ref: f64, h: f64, cfg: &ShootingConfig) -> Self {
        let xs = build_nodes(fields, edge, e_ref, h, cfg);
        let mut coeffs = Vec::with_capacity(2 * xs.len() - 1);
        for i in 0..xs.len() {
            coeffs.push(fields.at(xs[i]));
            if i + 1 < xs.len() {
                coeffs.push(fields.at(0.5 * (xs[i] + xs[i + 1])));
            }
        }
        SideMesh {
            renorm: alloc::vec![None; xs.len() - 1],
            xs,
            coeffs,
        }
    }

    fn step(&self, j: usize, e: C, h: f64, y: &State) -> State {
        let dx = self.xs[j + 1] - self.xs[j];
        let (c0, cm, c1) = (
            &self.coeffs[2 * j],
            &self.coeffs[2 * j + 1],
            &self.coeffs[2 * j + 2],
        );
        let k1 = rhs(c0, e, h, y);
        let k2 = rhs(cm, e, h, &axpy(y, 0.5 * dx, &k1));
        let k3 = rhs(cm, e, h, &axpy(y, 0.5 * dx, &k2));
        let k4 = rhs(c1, e, h, &axpy(y, dx, &k3));
        let mut out = *y;
        for i in 0..4 {
            out[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dx / 6.0);
        }
        out
    }

    /// Propagates `frame` to `x = 0`, choosing and storing the
    /// renormalization points from the frame condition and growth.
    fn record_schedule(
        &mut self,
        mut frame: Frame,
        e: C,
        h: f64,
        threshold: f64,
    ) -> Result<(), OracleError> {
        for j in 0..self.xs.len() - 1 {
            frame = [self.step(j, e, h, &frame[0]), self.step(j, e, h, &frame[1])];
            if frame_norm(&frame) > 1e4 || condition(&frame) > threshold {
                let (_, rows) = max_minor(&frame);
                self.renorm[j] = Some(rows);
                frame = normalize(&frame, rows);
            }
            if !frame_norm(&frame).is_finite() {
                return Err(OracleError::Overflow);
            }
        }
        Ok(())
    }
}

/// Symmetric 2×2 eigen-decomposition of `[[p, q], [q, s]]`, eigenvalues
/// ordered so that the first vector is mostly channel 1.
fn channel_eigen(p: f64, q: f64, s: f64) -> [(f64, [f64; 2]); 2] {
    let mean = 0.5 * (p + s);
    let half = 0.5 * (p - s);
    let r = (half * half + q * q).sqrt();
    let (l1, l2) = if half >= 0.0 {
        (mean + r, mean - r)
    } else {
        (mean - r, mean + r)
    };
    let vec_for = |l: f64, first: bool| -> [f64; 2] {
        // (p - l) x + q y = 0
        let v = if first {
            if q == 0.0 {
                [1.0, 0.0]
            } else {
                [q, l - p]
            }
        } else if q == 0.0 {
            [0.0, 1.0]
        } else {
            [l - s, q]
        };
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [v[0] / n, v[1] / n]
    };
    [(l1, vec_for(l1, true)), (l2, vec_for(l2, false))]
}

/// Admissible boundary solutions at `x`: decaying in closed channels, and
/// outgoing (left-travelling) in the open channel at the left edge.
/// Channels are the eigenvectors of the local potential matrix
/// `[[V1, h r0], [h r0, V2]]`; log-derivatives carry the first WKB
/// curvature correction.
pub fn boundary_basis(
    p: &ValidatedProblem,
    e: C,
    h: f64,
    edge: Edge,
    x: f64,
) -> Result<Frame, OracleError> {
    let fields = Fields::new(p);
    boundary_from_fields(&fields, e, h, edge, x)
}

fn boundary_from_fields(
    fields: &Fields,
    e: C,
    h: f64,
    edge: Edge,
    x: f64,
) -> Result<Frame, OracleError> {
    let eig_at = |x: f64| {
        let c = fields.at(x);
        channel_eigen(c.v1, h * c.r0, c.v2)
    };
    let d = 1e-5;
    let (em, e0, ep) = (eig_at(x - d), eig_at(x), eig_at(x + d));
    let mut frame = [[C::zero(); 4]; 2];
    for ch in 0..2 {
        let (lam, v) = e0[ch];
        let dlam = (ep[ch].0 - em[ch].0) / (2.0 * d);
        let gap = C::new(lam, 0.0) - e;
        let closed = gap.re > 0.0;
        let expected_closed = match edge {
            Edge::Right => true,
            Edge::Left => ch == 0,
        };
        if closed != expected_closed {
            return Err(OracleError::ChannelMismatch {
                edge,
                x,
                e,
                expected: match (edge, ch) {
                    (Edge::Right, _) => "both channels closed",
                    (Edge::Left, 0) => "channel 1 closed",
                    _ => "channel 2 open",
                },
            });
        }
        let log_deriv = if closed {
            let q = gap.sqrt();
            let dq = C::new(dlam, 0.0) / (q * 2.0);
            let sign = if edge == Edge::Left { 1.0 } else { -1.0 };
            q * (sign / h) - dq / (q * 2.0)
        } else {
            let k = (-gap).sqrt();
            let dk = C::new(-dlam, 0.0) / (k * 2.0);
            -C::i() * k / h - dk / (k * 2.0)
        };
        frame[ch] = [
            C::new(v[0], 0.0),
            C::new(v[1], 0.0),
            log_deriv * v[0],
            log_deriv * v[1],
        ];
    }
    Ok(frame)
}

/// Propagator with mesh and renormalization schedule frozen at `e_ref`.
pub struct Propagator {
    h: f64,
    cfg: ShootingConfig,
    fields: Fields,
    left: SideMesh,
    right: SideMesh,
}

impl Propagator {
    pub fn new(
        p: &ValidatedProblem,
        h: f64,
        cfg: &ShootingConfig,
        e_ref: f64,
    ) -> Result<Self, OracleError> {
        let [xl, xr] = p.spec.domain;
        if !(cfg.x_left >= xl && cfg.x_right <= xr) {
            return Err(OracleError::BadConfig(
                "matching box must lie inside the problem box",
            ));
        }
        if !(cfg.x_left < p.a - 1.0 && cfg.x_right > p.a_prime + 1.0) {
            return Err(OracleError::BadConfig(
                "need x_left < a - 1 and x_right > a' + 1",
            ));
        }
        if !(cfg.ode_tol > 0.0 && cfg.newton_tol > 0.0 && cfg.renorm_threshold > 1.0 && h > 0.0) {
            return Err(OracleError::BadConfig("tolerances and h must be positive"));
        }
        let fields = Fields::new(p);
        let left = SideMesh::new(&fields, cfg.x_left, e_ref, h, cfg);
        let right = SideMesh::new(&fields, cfg.x_right, e_ref, h, cfg);
        let mut prop = Propagator {
            h,
            cfg: *cfg,
            fields,
            left,
            right,
        };
        let e = C::new(e_ref, 0.0);
        let fl = prop.start_frame(e, Edge::Left)?;
        let fr = prop.start_frame(e, Edge::Right)?;
        let thr = cfg.renorm_threshold;
        prop.left.record_schedule(fl, e, h, thr)?;
        prop.right.record_schedule(fr, e, h, thr)?;
        Ok(prop)
    }

    fn start_frame(&self, e: C, edge: Edge) -> Result<Frame, OracleError> {
        let x = match edge {
            Edge::Left => self.cfg.x_left,
            Edge::Right => self.cfg.x_right,
        };
        let f = boundary_from_fields(&self.fields, e, self.h, edge, x)?;
        Ok(normalize(&f, max_minor(&f).1))
    }

    /// Matching determinant at `E`.
    pub fn determinant(&self, e: C) -> Result<C, OracleError> {
        let h = self.h;
        let fl = replay(&self.left, self.start_frame(e, Edge::Left)?, e, h)?;
        let fr = replay(&self.right, self.start_frame(e, Edge::Right)?, e, h)?;
        // derivative rows scaled by h to the size of the values
        let mut m = [[C::zero(); 4]; 4];
        for r in 0..4 {
            let s = if r >= 2 { h } else { 1.0 };
            m[r] = [fl[0][r] * s, fl[1][r] * s, fr[0][r] * s, fr[1][r] * s];
        }
        Ok(det(m))
    }

    pub fn mesh_sizes(&self) -> (usize, usize) {
        (self.left.xs.len(), self.right.xs.len())
    }
}

fn replay(mesh: &SideMesh, mut frame: Frame, e: C, h: f64) -> Result<Frame, OracleError> {
    for j in 0..mesh.xs.len() - 1 {
        frame = [mesh.step(j, e, h, &frame[0]), mesh.step(j, e, h, &frame[1])];
        if let Some(rows) = mesh.renorm[j] {
            frame = normalize(&frame, rows);
        }
    }
    if !frame_norm(&frame).is_finite() {
        return Err(OracleError::Overflow);
    }
    Ok(frame)
}

/// Matching determinant with a propagator frozen at `Re E`.
pub fn shooting_determinant(
    p: &ValidatedProblem,
    e: C,
    h: f64,
    cfg: &ShootingConfig,
) -> Result<C, OracleError> {
    Propagator::new(p, h, cfg, e.re)?.determinant(e)
}

/// Newton iteration on the matching determinant from a Bohr-Sommerfeld
/// energy, with a central-difference derivative of step `1e-2 h^{power}`.
pub fn find_resonance(
    p: &ValidatedProblem,
    h: f64,
    e_init: f64,
    cfg: &ShootingConfig,
) -> Result<ResonanceMeasurement, OracleError> {
    let c = &p.crossing;
    let power = width_power(c, Regime::of(c));
    let prop = Propagator::new(p, h, cfg, e_init)?;
    newton(&prop, h, e_init, power, cfg)
}

fn newton(
    prop: &Propagator,
    h: f64,
    e_init: f64,
    power: f64,
    cfg: &ShootingConfig,
) -> Result<ResonanceMeasurement, OracleError> {
    let delta = 1e-2 * h.powf(power);
    let mut e = C::new(e_init, 0.0);
    let mut f = prop.determinant(e)?;
    let mut last_step = f64::INFINITY;
    for it in 1..=cfg.max_newton {
        let dp = prop.determinant(e + delta)?;
        let dm = prop.determinant(e - delta)?;
        let df = (dp - dm) / (2.0 * delta);
        if df.is_zero() || !df.is_finite() {
            break;
        }
        let mut step = f / df;
        // damp steps that would leave the neighbourhood of the start
        let cap = 0.5 * h;
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        e -= step;
        f = prop.determinant(e)?;
        let s = step.norm();
        let converged = s < 1e-13 * (1.0 + e.norm()) || (s < 1e-11 && s >= last_step);
        last_step = s;
        if converged {
            let residual = f.norm();
            if residual > cfg.newton_tol {
                return Err(OracleError::NonConvergence {
                    iterations: it,
                    last: e,
                    residual,
                });
            }
            let limit = 10.0 * h.powf(power);
            if (e - e_init).norm() > limit {
                return Err(OracleError::WrongBasin { e, e_init, limit });
            }
            if e.im > 1e-12 {
                return Err(OracleError::PositiveImaginary(e));
            }
            return Ok(ResonanceMeasurement {
                e,
                residual,
                method: Method::Shooting,
                h,
                iterations: it,
            });
        }
    }
    Err(OracleError::NonConvergence {
        iterations: cfg.max_newton,
        last: e,
        residual: f.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{reference_r1, validate};

    #[test]
    fn boundary_rates_r1() {
        let p = validate(&reference_r1()).unwrap();
        let h = 0.05;
        let e = C::new(1.0, 0.0);
        let f = boundary_basis(&p, e, h, Edge::Right, 6.0).unwrap();
        // channel 1: decay rate sqrt(3.6 - 1)/h, shifted by the coupling to
        // the lower eigenvalue of [[3.6, h], [h, 4 tanh 6]]
        let l1 = f[0][2] / f[0][0];
        assert!((l1.re + 2.6f64.sqrt() / h).abs() / (2.6f64.sqrt() / h) < 5e-3);
        let v2 = 4.0 * 6.0f64.tanh();
        let lam = 0.5 * (3.6 + v2) - (0.25 * (v2 - 3.6).powi(2) + h * h).sqrt();
        let rate = (lam - 1.0).sqrt() / h;
        assert!((l1.re + rate).abs() / rate < 1e-3);
        let f = boundary_basis(&p, e, h, Edge::Left, -6.0).unwrap();
        let l2 = f[1][3] / f[1][1];
        let k = (1.0 - 4.0 * (-6.0f64).tanh()).sqrt();
        assert!((l2.im + k / h).abs() / (k / h) < 1e-3, "{l2} {}", k / h);
        // curvature correction only: V2'(-6) = 4 sech²6 ≈ 2.5e-4
        assert!(l2.re.abs() < 1e-4);
    }

    #[test]
    fn decoupled_channel_one_is_real() {
        let mut s = reference_r1();
        s.r0 = Expr::zero();
        let p = validate(&s).unwrap();
        let f = boundary_basis(&p, C::new(1.0, 0.0), 0.05, Edge::Left, -6.0).unwrap();
        assert!(f[0].iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn right_edge_rejects_open_channel() {
        let p = validate(&reference_r1()).unwrap();
        let r = boundary_basis(&p, C::new(3.8, 0.0), 0.05, Edge::Right, 6.0);
        assert!(matches!(r, Err(OracleError::ChannelMismatch { .. })));
    }

    #[test]
    fn decoupled_levels_are_harmonic() {
        let mut s = reference_r1();
        s.r0 = Expr::zero();
        let p = validate(&s).unwrap();
        for n in [15u32, 25] {
            let h = 2.0 / (2 * n + 1) as f64;
            let r = find_resonance(&p, h, 1.0 + 0.01 * h, &ShootingConfig::default()).unwrap();
            // V1 = (x - 1)² - 1: E_n = (2n + 1) h - 1
            assert!((r.e - 1.0).norm() < 1e-6, "{:?}", r.e);
        }
    }

    #[test]
    fn r1_matches_absorbing_potential_reference() {
        // complex-absorbing-potential eigenvalue from an independent
        // finite-difference prototype (1600 points per channel)
        let reference = C::new(0.99935474, -2.9322e-4);
        let p = validate(&reference_r1()).unwrap();
        let h = 2.0 / 41.0;
        let cfg = ShootingConfig::default();
        let r = find_resonance(&p, h, 1.0, &cfg).unwrap();
        assert!(r.residual <= cfg.newton_tol);
        assert!((r.e.im / reference.im - 1.0).abs() < 0.01, "{:?}", r.e);
        assert!((r.e.re - reference.re).abs() < 5e-5);
        let mut loose = cfg;
        loose.ode_tol *= 10.0;
        let r2 = find_resonance(&p, h, 1.0, &loose).unwrap();
        assert!((r2.e - r.e).norm() < 1e-3 * r.e.im.abs());
    }

    #[test]
    fn determinant_is_continuous() {
        let p = validate(&reference_r1()).unwrap();
        let h = 2.0 / 41.0;
        let prop = Propagator::new(&p, h, &ShootingConfig::default(), 1.0).unwrap();
        let e = C::new(1.0, -1e-4);
        let a = prop.determinant(e).unwrap();
        let b = prop.determinant(e + 1e-8).unwrap();
        assert!((a - b).norm() < 1e-5 * (1.0 + a.norm()));
    }
}
