//! Parallel drivers. Jobs are independent and results are assembled in
//! input order, so output does not depend on scheduling.

use crossing_core::asymptotics::{AsymptoticOptions, Regime};
use crossing_core::cap::{stationary_index, CapOperator, CapSpec};
use crossing_core::problem::ValidatedProblem;
use crossing_core::shooting::{Method, OracleError, ResonanceMeasurement, ShootingConfig};
use crossing_core::sweep::{assemble_report, sweep_row, GridPoint, SweepReport};
use num_complex::Complex64;
use rayon::prelude::*;

pub fn run_sweep(
    p: &ValidatedProblem,
    grid: &[GridPoint],
    cfg: &ShootingConfig,
    opts: &AsymptoticOptions,
) -> SweepReport {
    let rows = grid
        .par_iter()
        .map(|g| sweep_row(p, g, cfg, opts))
        .collect();
    assemble_report(rows, Regime::of(&p.crossing))
}

/// CAP eigenvalue near `sigma` for every η in parallel (each solve starts
/// from `sigma`), then the η-stationary one.
pub fn cap_stabilized(
    p: &ValidatedProblem,
    h: f64,
    grid_n: usize,
    etas: &[f64],
    cap: &CapSpec,
    sigma: f64,
) -> Result<ResonanceMeasurement, OracleError> {
    let op = CapOperator::new(p, h, grid_n, cap)?;
    let solved: Vec<Result<(f64, Complex64, f64, usize), OracleError>> = etas
        .par_iter()
        .map(|&eta| {
            op.eigen_near(eta, Complex64::new(sigma, 0.0), None)
                .map(|(e, res, it, _)| (eta, e, res, it))
        })
        .collect();
    let mut kept = Vec::new();
    for s in solved {
        let s = s?;
        if (s.1 - sigma).norm() <= 0.5 * h {
            kept.push(s);
        }
    }
    let samples: Vec<(f64, Complex64)> = kept.iter().map(|s| (s.0, s.1)).collect();
    let i = stationary_index(&samples).ok_or(OracleError::NoStationary(sigma))?;
    let (_, e, residual, iterations) = kept[i];
    Ok(ResonanceMeasurement {
        e,
        residual,
        method: Method::Cap,
        h,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crossing_core::cap::{cap_track, default_etas};
    use crossing_core::problem::{reference_r1, validate};

    #[test]
    fn parallel_cap_matches_tracked() {
        let p = validate(&reference_r1()).unwrap();
        let h = 2.0 / 41.0;
        let etas = default_etas();
        let par = cap_stabilized(&p, h, 1600, &etas, &CapSpec::default(), 1.0).unwrap();
        let op = CapOperator::new(&p, h, 1600, &CapSpec::default()).unwrap();
        let (_, seq) = cap_track(&op, &etas, 1.0).unwrap();
        assert!((par.e - seq.e).norm() < 1e-10 * seq.e.im.abs().max(1e-12) + 1e-12);
    }
}
