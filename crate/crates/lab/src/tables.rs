//! CSV tables. Floats are written with 17 significant digits so that
//! regression files compare exactly.

use std::fmt::Write as _;

use crossing_core::actions::ActionTable;
use crossing_core::asymptotics::ResonancePrediction;
use crossing_core::shooting::ResonanceMeasurement;
use crossing_core::stationary_phase::SpRow;
use crossing_core::sweep::SweepReport;

pub const SWEEP_HEADER: &str =
    "h,n,E_bs,regime,power_pred,D,cos_factor,im_pred,im_meas,re_meas,ratio,skipped,reason";
pub const MEASUREMENT_HEADER: &str = "h,method,re_E,im_E,residual,iterations";
pub const PREDICTION_HEADER: &str =
    "h,E_bs,regime,power_pred,D,cos_factor,im_pred,S,arg_omega,omega_re,omega_im,dA_dE_E0,error_order,note";
pub const BS_HEADER: &str = "n,E_bs";
pub const SP_HEADER: &str = "h,re_numeric,im_numeric,re_leading,im_leading,abs_resid";

/// 17 significant digits, scientific notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Quotes a free-text field when it would break the row.
fn text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::new();
    writeln!(out, "{SWEEP_HEADER}").unwrap();
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(r.h),
            r.n,
            num(r.e_bs),
            r.regime.name(),
            num(r.power_pred),
            num(r.d),
            num(r.cos_factor),
            num(r.im_pred),
            opt(r.im_meas),
            opt(r.re_meas),
            opt(r.ratio),
            r.skip.is_some(),
            text(r.skip.as_deref().unwrap_or("")),
        )
        .unwrap();
    }
    out
}

pub fn measurement_csv(rows: &[ResonanceMeasurement]) -> String {
    let mut out = String::new();
    writeln!(out, "{MEASUREMENT_HEADER}").unwrap();
    for m in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            num(m.h),
            m.method.name(),
            num(m.e.re),
            num(m.e.im),
            num(m.residual),
            m.iterations
        )
        .unwrap();
    }
    out
}

pub fn prediction_csv(rows: &[ResonancePrediction]) -> String {
    let mut out = String::new();
    writeln!(out, "{PREDICTION_HEADER}").unwrap();
    for p in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(p.h),
            num(p.e_bs),
            p.regime.name(),
            num(p.power_total),
            num(p.d),
            num(p.cos_factor),
            num(p.im_z),
            num(p.s),
            num(p.arg_omega),
            num(p.omega.re),
            num(p.omega.im),
            num(p.da_de_e0),
            num(p.error_order),
            text(p.note.map(|n| n.describe()).unwrap_or("")),
        )
        .unwrap();
    }
    out
}

pub fn bs_csv(rows: &[(u64, f64)]) -> String {
    let mut out = String::new();
    writeln!(out, "{BS_HEADER}").unwrap();
    for (n, e) in rows {
        writeln!(out, "{n},{}", num(*e)).unwrap();
    }
    out
}

pub fn sp_csv(rows: &[SpRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{SP_HEADER}").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            num(r.h),
            num(r.numeric.re),
            num(r.numeric.im),
            num(r.leading.re),
            num(r.leading.im),
            num(r.abs_resid)
        )
        .unwrap();
    }
    out
}

pub fn actions_json(t: &ActionTable) -> serde_json::Value {
    serde_json::json!({
        "E": t.e,
        "A": t.a_action,
        "dA_dE": t.da_de,
        "S": t.s,
        "a": t.turning.a,
        "b": t.turning.b,
        "a_prime": t.turning.a_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-2.0 / 41.0).len(), "-4.8780487804878050e-2".len());
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn free_text_is_quoted() {
        assert_eq!(text("near node"), "near node");
        assert_eq!(text("a, b"), "\"a, b\"");
    }
}
