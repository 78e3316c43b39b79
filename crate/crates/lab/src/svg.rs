//! Standalone SVG 1.1 log-log scatter of measured widths.

use std::fmt::Write as _;

use crossing_core::sweep::SweepReport;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 64.0;

fn decade_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
    (a..=b)
        .map(|e| 10f64.powi(e))
        .filter(|t| *t >= lo * 0.999 && *t <= hi * 1.001)
        .collect()
}

/// `|Im E|` against `h` on log axes. Filled markers are fitted rows, hollow
/// ones skipped rows. The fitted line is `C_hat · D_g · h^{p_hat}` with
/// `D_g` the geometric mean of `D` over fitted rows.
pub fn width_plot(report: &SweepReport, title: &str) -> String {
    let pts: Vec<(f64, f64, bool)> = report
        .rows
        .iter()
        .filter_map(|r| {
            r.im_meas
                .filter(|v| *v < 0.0)
                .map(|v| (r.h, -v, r.fitted()))
        })
        .collect();
    let mut out = String::new();
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    if pts.is_empty() {
        writeln!(out, "</svg>").unwrap();
        return out;
    }
    let (mut hx0, mut hx1) = (f64::INFINITY, 0.0f64);
    let (mut wy0, mut wy1) = (f64::INFINITY, 0.0f64);
    for &(h, w, _) in &pts {
        hx0 = hx0.min(h);
        hx1 = hx1.max(h);
        wy0 = wy0.min(w);
        wy1 = wy1.max(w);
    }
    // pad by a tenth of a decade on each side
    let (lx0, lx1) = (hx0.log10() - 0.1, hx1.log10() + 0.1);
    let (ly0, ly1) = (wy0.log10() - 0.1, wy1.log10() + 0.1);
    let px = |h: f64| MARGIN + (h.log10() - lx0) / (lx1 - lx0) * (W - 2.0 * MARGIN);
    let py = |w: f64| H - MARGIN - (w.log10() - ly0) / (ly1 - ly0) * (H - 2.0 * MARGIN);
    writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    )
    .unwrap();
    for t in decade_ticks(10f64.powf(lx0), 10f64.powf(lx1)) {
        let x = px(t);
        writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{t:e}</text>"#,
            H - MARGIN + 16.0
        )
        .unwrap();
    }
    for t in decade_ticks(10f64.powf(ly0), 10f64.powf(ly1)) {
        let y = py(t);
        writeln!(
            out,
            r#"<text x="{:.2}" y="{y:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{t:e}</text>"#,
            MARGIN - 6.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">h</text>"#,
        W / 2.0,
        H - 20.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 18 {})">|Im E|</text>"#,
        H / 2.0,
        H / 2.0
    )
    .unwrap();
    if let Some(fit) = report.fit {
        let ds: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.fitted())
            .map(|r| r.d.ln())
            .collect();
        if !ds.is_empty() {
            let dg = (ds.iter().sum::<f64>() / ds.len() as f64).exp();
            let line = |h: f64| fit.c_hat * dg * h.powf(fit.p_hat);
            let (h0, h1) = (10f64.powf(lx0), 10f64.powf(lx1));
            writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-width="1.5"/>"#,
                px(h0),
                py(line(h0)),
                px(h1),
                py(line(h1))
            )
            .unwrap();
            writeln!(
                out,
                r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="12" fill="steelblue">p = {:.3} ± {:.3}</text>"#,
                MARGIN + 8.0,
                MARGIN + 16.0,
                fit.p_hat,
                fit.p_sigma
            )
            .unwrap();
        }
    }
    for &(h, w, fitted) in &pts {
        let fill = if fitted { "black" } else { "none" };
        writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{fill}" stroke="black"/>"#,
            px(h),
            py(w)
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crossing_core::asymptotics::Regime;
    use crossing_core::sweep::{assemble_report, SweepRow};

    fn row(h: f64, im: f64, skip: bool) -> SweepRow {
        SweepRow {
            h,
            n: 0,
            e_bs: 1.0,
            regime: Regime::General,
            power_pred: 2.0,
            d: 1.0,
            cos_factor: 1.0,
            im_pred: -h * h,
            im_meas: Some(im),
            re_meas: Some(1.0),
            ratio: Some(im / (-h * h)),
            skip: skip.then(|| "near node".to_string()),
        }
    }

    #[test]
    fn plot_is_well_formed() {
        let rows = (0..6).map(|i| {
            let h = 0.02 * 1.5f64.powi(i);
            row(h, -h * h, i == 2)
        });
        let rep = assemble_report(rows.collect(), Regime::General);
        let svg = width_plot(&rep, "R1 <widths>");
        assert!(svg.contains(r#"version="1.1""#));
        assert_eq!(svg.matches("<circle").count(), 6);
        assert_eq!(svg.matches(r#"fill="none" stroke="black"/>"#).count(), 2);
        assert!(svg.contains("&lt;widths&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
