//! Minimal SVG rendering for regression scatter plots and ROC curves.

use crate::stats::{RegressionFit, RocCurve};
use std::fmt::Write as _;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn padded(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                return (0.0, 1.0);
            }
            let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5f64.max(lo.abs() * 0.05) };
            (lo - pad, hi + pad)
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    s
}

fn axis_ticks(s: &mut String, f: &Frame) {
    for (v, x) in [(f.x0, f.px(f.x0)), (f.x1, f.px(f.x1))] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{v:.3}</text>"#, HEIGHT - MARGIN + 16.0);
    }
    for (v, y) in [(f.y0, f.py(f.y0)), (f.y1, f.py(f.y1))] {
        let _ = writeln!(s, r#"<text x="{}" y="{y:.1}" text-anchor="end">{v:.3}</text>"#, MARGIN - 4.0);
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter of `y` against `x` with the fitted line. Masked points are
/// drawn hollow.
pub fn scatter_svg(title: &str, x_label: &str, y_label: &str, x: &[f64], y: &[f64], fit: &RegressionFit) -> String {
    let f = Frame::padded(x.iter().copied(), y.iter().copied());
    let mut s = open(title, x_label, y_label);
    axis_ticks(&mut s, &f);
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let masked = fit.outlier_mask.get(i).copied().unwrap_or(false);
        let fill = if masked { "none" } else { "steelblue" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{fill}" stroke="steelblue"/>"#,
            f.px(a),
            f.py(b)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="1.5"/>"#,
        f.px(f.x0),
        f.py(fit.predict(f.x0)).clamp(0.0, HEIGHT),
        f.px(f.x1),
        f.py(fit.predict(f.x1)).clamp(0.0, HEIGHT),
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">r = {:.3}, p = {:.3e}, n = {}</text>"#,
        WIDTH - MARGIN - 4.0,
        MARGIN + 16.0,
        fit.r,
        fit.p,
        fit.n_used
    );
    s.push_str("</svg>\n");
    s
}

/// ROC staircase with the chance diagonal.
pub fn roc_svg(title: &str, curve: &RocCurve) -> String {
    let f = Frame { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    let mut s = open(title, "1 - specificity", "sensitivity");
    axis_ticks(&mut s, &f);
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        f.px(0.0),
        f.py(0.0),
        f.px(1.0),
        f.py(1.0)
    );
    let pts: Vec<String> = curve
        .points
        .iter()
        .map(|&(fpr, tpr)| format!("{:.2},{:.2}", f.px(fpr), f.py(tpr)))
        .collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="firebrick" stroke-width="1.5"/>"#, pts.join(" "));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">AUC = {:.3} ± {:.3}</text>"#,
        WIDTH - MARGIN - 4.0,
        HEIGHT - MARGIN - 8.0,
        curve.auc,
        curve.auc_se
    );
    s.push_str("</svg>\n");
    s
}
