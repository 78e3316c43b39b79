//! h-sweeps: Bohr-Sommerfeld grids, predicted versus measured widths, and
//! power-law fits in ratio form.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::actions::{action_a, ActionError};
use crate::asymptotics::{predict, AsymptoticOptions, Regime};
use crate::problem::ValidatedProblem;
use crate::shooting::{find_resonance, OracleError, ShootingConfig};
use crate::stationary_phase::fit_line;

/// Rows whose cos factor falls below this are kept but not fitted.
pub const NODE_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("h range must lie in [0.02, 0.2] with h_min < h_max, got [{0}, {1}]")]
    BadRange(f64, f64),
    #[error("need at least 4 grid points, got {0}")]
    TooFewPoints(usize),
    #[error("empty feasible set: no h in range keeps the cos factor away from its nodes")]
    EmptyFeasibleSet,
    #[error(transparent)]
    Action(#[from] ActionError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 4 usable rows, got {0}")]
    InsufficientRows(usize),
    #[error("rows span {0:.3} decades in h, need at least {1}")]
    NarrowSpan(f64, f64),
    #[error("row with h = {0} has a non-negative or non-finite width")]
    BadWidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub h: f64,
    pub n: u64,
    pub e_bs: f64,
    pub cos_factor: f64,
    pub near_node: bool,
}

/// `h_n = A(E0)/((2n+1)π)`, so that `E0` itself is a Bohr-Sommerfeld
/// energy, for `n_points` quantum numbers spread evenly over the range.
pub fn choose_h_grid(
    p: &ValidatedProblem,
    n_points: usize,
    h_range: (f64, f64),
    opts: &AsymptoticOptions,
) -> Result<Vec<GridPoint>, SweepError> {
    let (lo, hi) = h_range;
    if !(0.02 <= lo && lo < hi && hi <= 0.2) {
        return Err(SweepError::BadRange(lo, hi));
    }
    if n_points < 4 {
        return Err(SweepError::TooFewPoints(n_points));
    }
    let e0 = p.spec.e0;
    let a0 = action_a(p, e0)?;
    let n_lo = (a0 / (2.0 * PI * hi) - 0.5).ceil().max(0.0) as u64;
    let n_hi = (a0 / (2.0 * PI * lo) - 0.5).floor() as u64;
    if n_hi < n_lo {
        return Err(SweepError::EmptyFeasibleSet);
    }
    let available = (n_hi - n_lo + 1) as usize;
    let ns: Vec<u64> = if available <= n_points {
        (n_lo..=n_hi).collect()
    } else {
        let mut v: Vec<u64> = (0..n_points)
            .map(|i| {
                n_lo + ((i as f64) * (available - 1) as f64 / (n_points - 1) as f64).round() as u64
            })
            .collect();
        v.dedup();
        v
    };
    let mut out = Vec::with_capacity(ns.len());
    for n in ns {
        let h = a0 / ((2 * n + 1) as f64 * PI);
        let pred = predict(p, e0, h, opts)?;
        out.push(GridPoint {
            h,
            n,
            e_bs: e0,
            cos_factor: pred.cos_factor,
            near_node: pred.cos_factor.abs() < NODE_THRESHOLD,
        });
    }
    if out.iter().all(|g| g.near_node) {
        return Err(SweepError::EmptyFeasibleSet);
    }
    out.sort_by(|a, b| b.h.total_cmp(&a.h));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub n: u64,
    pub e_bs: f64,
    pub regime: Regime,
    pub power_pred: f64,
    pub d: f64,
    pub cos_factor: f64,
    pub im_pred: f64,
    pub im_meas: Option<f64>,
    pub re_meas: Option<f64>,
    pub ratio: Option<f64>,
    pub skip: Option<String>,
}

impl SweepRow {
    pub fn fitted(&self) -> bool {
        self.skip.is_none() && self.ratio.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub p_hat: f64,
    pub p_sigma: f64,
    pub c_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub fit: Option<Fit>,
    pub fit_error: Option<FitError>,
    pub regime: Regime,
}

/// Prediction and shooting measurement at one grid point. Failures are
/// recorded as skip reasons.
pub fn sweep_row(
    p: &ValidatedProblem,
    g: &GridPoint,
    cfg: &ShootingConfig,
    opts: &AsymptoticOptions,
) -> SweepRow {
    use alloc::string::ToString;
    let regime = Regime::of(&p.crossing);
    let pred = match predict(p, g.e_bs, g.h, opts) {
        Ok(pr) => pr,
        Err(e) => {
            return SweepRow {
                h: g.h,
                n: g.n,
                e_bs: g.e_bs,
                regime,
                power_pred: f64::NAN,
                d: f64::NAN,
                cos_factor: g.cos_factor,
                im_pred: f64::NAN,
                im_meas: None,
                re_meas: None,
                ratio: None,
                skip: Some(e.to_string()),
            }
        }
    };
    let meas: Result<_, OracleError> = find_resonance(p, g.h, g.e_bs, cfg);
    let (im_meas, re_meas, mut skip) = match meas {
        Ok(m) => (Some(m.e.im), Some(m.e.re), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    if skip.is_none() && g.near_node {
        skip = Some("near node".to_string());
    }
    let ratio = match im_meas {
        Some(im) if pred.im_z != 0.0 => Some(im / pred.im_z),
        _ => None,
    };
    if skip.is_none() && ratio.is_none() {
        skip = Some("no leading-order prediction".to_string());
    }
    SweepRow {
        h: g.h,
        n: g.n,
        e_bs: g.e_bs,
        regime,
        power_pred: pred.power_total,
        d: pred.d,
        cos_factor: pred.cos_factor,
        im_pred: pred.im_z,
        im_meas,
        re_meas,
        ratio,
        skip,
    }
}

/// Sorts rows by `h` descending and fits the unskipped ones.
pub fn assemble_report(mut rows: Vec<SweepRow>, regime: Regime) -> SweepReport {
    rows.sort_by(|a, b| b.h.total_cmp(&a.h));
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.fitted())
        .map(|r| (r.h, r.im_meas.unwrap_or(f64::NAN), r.d))
        .collect();
    let (fit, fit_error) = match fit_exponent(&pts) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e)),
    };
    SweepReport {
        rows,
        fit,
        fit_error,
        regime,
    }
}

pub fn run_sweep(
    p: &ValidatedProblem,
    grid: &[GridPoint],
    cfg: &ShootingConfig,
    opts: &AsymptoticOptions,
) -> SweepReport {
    let rows = grid.iter().map(|g| sweep_row(p, g, cfg, opts)).collect();
    assemble_report(rows, Regime::of(&p.crossing))
}

/// Minimal span of a fit, in decades of `h`.
pub const MIN_FIT_SPAN: f64 = 0.5;

/// Least squares of `log(|Im E| / D)` against `log h` over `(h, Im E, D)`
/// rows: slope `p_hat`, its standard error, and `C_hat = exp(intercept)`.
pub fn fit_exponent(rows: &[(f64, f64, f64)]) -> Result<Fit, FitError> {
    fit_exponent_spanning(rows, MIN_FIT_SPAN)
}

/// [`fit_exponent`] with an explicit minimal span in decades.
pub fn fit_exponent_spanning(rows: &[(f64, f64, f64)], min_span: f64) -> Result<Fit, FitError> {
    if rows.len() < 4 {
        return Err(FitError::InsufficientRows(rows.len()));
    }
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for &(h, im, d) in rows {
        if !(im < 0.0 && d > 0.0 && h > 0.0) {
            return Err(FitError::BadWidth(h));
        }
        xs.push(h.ln());
        ys.push((-im / d).ln());
    }
    let (hmin, hmax) = rows.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| {
        (a.min(r.0), b.max(r.0))
    });
    let span = (hmax / hmin).log10();
    if span < min_span {
        return Err(FitError::NarrowSpan(span, min_span));
    }
    let (slope, intercept, sigma) = fit_line(&xs, &ys);
    Ok(Fit {
        p_hat: slope,
        p_sigma: sigma,
        c_hat: intercept.exp(),
    })
}
