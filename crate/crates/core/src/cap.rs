//! Complex absorbing potential eigensolver: `P - iηW` discretized with
//! fourth-order finite differences, eigenvalues by shift-invert and
//! Rayleigh-quotient iteration on banded LU factors.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::linalg::BandLu;
use crate::problem::ValidatedProblem;
use crate::shooting::{Method, OracleError, ResonanceMeasurement};

type C = Complex64;

const D2: [f64; 5] = [
    -1.0 / 12.0,
    16.0 / 12.0,
    -30.0 / 12.0,
    16.0 / 12.0,
    -1.0 / 12.0,
];
const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];

/// `W(x) = ((left - x)/scale)^power` left of `left`, mirrored right of
/// `right`, zero in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapSpec {
    pub left: f64,
    pub right: f64,
    pub scale: f64,
    pub power: i32,
}

impl Default for CapSpec {
    fn default() -> Self {
        CapSpec {
            left: -4.5,
            right: 4.5,
            scale: 3.5,
            power: 3,
        }
    }
}

impl CapSpec {
    pub fn w(&self, x: f64) -> f64 {
        if x < self.left {
            ((self.left - x) / self.scale).powi(self.power)
        } else if x > self.right {
            ((x - self.right) / self.scale).powi(self.power)
        } else {
            0.0
        }
    }
}

/// Default η-grid for stabilization.
pub fn default_etas() -> Vec<f64> {
    (0..7).map(|i| 0.125 * 2f64.powi(i)).collect()
}

pub struct CapOperator {
    h: f64,
    dx: f64,
    n: usize,
    v1: Vec<f64>,
    v2: Vec<f64>,
    w: Vec<f64>,
    r0: Vec<f64>,
    r1: Vec<f64>,
    r1p: Vec<f64>,
    xs: Vec<f64>,
}

impl CapOperator {
    pub fn new(
        p: &ValidatedProblem,
        h: f64,
        grid_n: usize,
        cap: &CapSpec,
    ) -> Result<Self, OracleError> {
        if grid_n < 800 {
            return Err(OracleError::BadConfig("grid_n must be at least 800"));
        }
        if !(cap.left < p.a - 1.0 && cap.right > p.a_prime + 1.0) {
            return Err(OracleError::BadConfig(
                "absorbing potential must vanish on [a - 1, a' + 1]",
            ));
        }
        if !(cap.scale > 0.0 && cap.power >= 3 && h > 0.0) {
            return Err(OracleError::BadConfig(
                "absorbing ramp must be C² with positive scale",
            ));
        }
        let [lo, hi] = p.spec.domain;
        let dx = (hi - lo) / (grid_n + 1) as f64;
        let xs: Vec<f64> = (0..grid_n).map(|i| lo + (i + 1) as f64 * dx).collect();
        let r1p = p.spec.r1.diff();
        Ok(CapOperator {
            h,
            dx,
            n: grid_n,
            v1: xs.iter().map(|&x| p.v1.eval(x)).collect(),
            v2: xs.iter().map(|&x| p.v2.eval(x)).collect(),
            w: xs.iter().map(|&x| cap.w(x)).collect(),
            r0: xs.iter().map(|&x| p.spec.r0.eval(x)).collect(),
            r1: xs.iter().map(|&x| p.spec.r1.eval(x)).collect(),
            r1p: xs.iter().map(|&x| r1p.eval(x)).collect(),
            xs,
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Matrix entry in the interleaved ordering `2 i + channel`.
    fn entry(&self, eta: f64, r: usize, c: usize) -> C {
        let (i, a) = (r / 2, r % 2);
        let (j, b) = (c / 2, c % 2);
        let d = j as isize - i as isize;
        if d.abs() > 2 {
            return C::zero();
        }
        let s = (d + 2) as usize;
        let h2 = self.h * self.h;
        match (a, b) {
            (0, 0) | (1, 1) => {
                let mut v = C::new(-h2 * D2[s] / (self.dx * self.dx), 0.0);
                if d == 0 {
                    let pot = if a == 0 { self.v1[i] } else { self.v2[i] };
                    v += C::new(pot, -eta * self.w[i]);
                }
                v
            }
            (0, 1) => {
                let mut v = h2 * self.r1[i] * D1[s] / self.dx;
                if d == 0 {
                    v += self.h * self.r0[i];
                }
                C::new(v, 0.0)
            }
            _ => {
                let mut v = -h2 * self.r1[i] * D1[s] / self.dx;
                if d == 0 {
                    v += self.h * self.r0[i] - h2 * self.r1p[i];
                }
                C::new(v, 0.0)
            }
        }
    }

    fn factor(&self, eta: f64, sigma: C) -> Result<BandLu, OracleError> {
        BandLu::from_fn(self.dim(), 5, 5, |r, c| {
            let v = self.entry(eta, r, c);
            if r == c {
                v - sigma
            } else {
                v
            }
        })
        .factorize()
        .map_err(|_| OracleError::Singular(sigma))
    }

    fn apply(&self, eta: f64, v: &[C]) -> Vec<C> {
        let n = self.dim();
        (0..n)
            .map(|r| {
                let (lo, hi) = (r.saturating_sub(5), (r + 5).min(n - 1));
                (lo..=hi).map(|c| self.entry(eta, r, c) * v[c]).sum()
            })
            .collect()
    }

    /// Channel-1 Gaussian centred in the well, a start vector that
    /// overlaps the resonant state.
    fn start_vector(&self) -> Vec<C> {
        let mut v = vec![C::zero(); self.dim()];
        for (i, &x) in self.xs.iter().enumerate() {
            v[2 * i] = C::new((-(x - 1.0) * (x - 1.0)).exp(), 0.0);
            v[2 * i + 1] = C::new(1e-3 * (-(x * x)).exp(), 0.0);
        }
        v
    }

    /// Eigenvalue nearest to `sigma`, returned with its residual
    /// `‖(H - λ) v‖ / ‖v‖` and the number of linear solves.
    pub fn eigen_near(
        &self,
        eta: f64,
        sigma: C,
        start: Option<&[C]>,
    ) -> Result<(C, f64, usize, Vec<C>), OracleError> {
        let mut v = start
            .map(|s| s.to_vec())
            .unwrap_or_else(|| self.start_vector());
        let mut shift = sigma;
        let mut lambda = sigma;
        let mut solves = 0;
        for outer in 0..12 {
            let lu = self.factor(eta, shift)?;
            // a few plain inverse iterations before the first shift update
            let inner = if outer == 0 { 6 } else { 1 };
            let mut prev = lambda;
            for _ in 0..inner {
                let mut w = v.clone();
                lu.solve(&mut w);
                solves += 1;
                let vw: C = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                let vv: C = v.iter().map(|a| a * a).sum();
                prev = lambda;
                lambda = shift + vv / vw;
                let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v = w.into_iter().map(|z| z / norm).collect();
            }
            if outer > 0 && (lambda - prev).norm() < 1e-13 * (1.0 + lambda.norm()) {
                break;
            }
            shift = lambda;
        }
        let hv = self.apply(eta, &v);
        let res = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        Ok((lambda, res, solves, v))
    }
}

/// Index of the η-sample with the smallest `|dE/d log η|` (central
/// difference), over samples that have both neighbours.
pub fn stationary_index(samples: &[(f64, C)]) -> Option<usize> {
    (1..samples.len().saturating_sub(1))
        .map(|i| {
            let (e0, e1) = (samples[i - 1], samples[i + 1]);
            let rate = (e1.1 - e0.1).norm() / (e1.0 / e0.0).ln();
            (i, rate)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// η-tracked eigenvalue near `sigma`: one solve per η (continued from the
/// previous η), then the η-stationary sample.
pub fn cap_track(
    op: &CapOperator,
    etas: &[f64],
    sigma: f64,
) -> Result<(Vec<(f64, C)>, ResonanceMeasurement), OracleError> {
    let mut samples = Vec::new();
    let mut meas = Vec::new();
    let mut guess = C::new(sigma, 0.0);
    let mut vec_guess: Option<Vec<C>> = None;
    for &eta in etas {
        let (e, res, it, v) = op.eigen_near(eta, guess, vec_guess.as_deref())?;
        if (e - sigma).norm() > 0.5 * op.h {
            break;
        }
        samples.push((eta, e));
        meas.push(ResonanceMeasurement {
            e,
            residual: res,
            method: Method::Cap,
            h: op.h,
            iterations: it,
        });
        guess = e;
        vec_guess = Some(v);
    }
    let i = stationary_index(&samples).ok_or(OracleError::NoStationary(sigma))?;
    Ok((samples, meas[i]))
}

/// η-stabilized CAP eigenvalues next to each energy in `centers`.
pub fn cap_resonances(
    p: &ValidatedProblem,
    h: f64,
    grid_n: usize,
    etas: &[f64],
    cap: &CapSpec,
    centers: &[f64],
) -> Result<Vec<ResonanceMeasurement>, OracleError> {
    let op = CapOperator::new(p, h, grid_n, cap)?;
    centers
        .iter()
        .map(|&c| cap_track(&op, etas, c).map(|r| r.1))
        .collect()
}
