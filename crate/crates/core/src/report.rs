//! CSV and SVG emission for evaluation and explanation results.
//!
//! The SVGs are deliberately plain: fixed-precision coordinates and no
//! timestamps, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::RocCurve;
use crate::shapley::{waterfall_order, GlobalImportance, ShapleyExplanation};
use crate::signalprep::io::ensure_parent;

const POSITIVE_COLOR: &str = "#ff0051";
const NEGATIVE_COLOR: &str = "#008bfb";

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Per-instance explanation table: header rows, then one row per feature.
pub fn explanation_csv(
    expl: &ShapleyExplanation,
    feature_names: &[String],
    feature_values: &[f64],
    predicted_class: u8,
    true_class: u8,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "base_value,{:?}", expl.base_value);
    let _ = writeln!(out, "explained_output,{:?}", expl.explained_output);
    let _ = writeln!(out, "predicted_class,{predicted_class}");
    let _ = writeln!(out, "true_class,{true_class}");
    let _ = writeln!(out, "target_class,{}", expl.target_class);
    let _ = writeln!(out, "backend,{}", expl.backend);
    out.push_str("feature,phi,feature_value\n");
    for ((name, phi), value) in feature_names.iter().zip(&expl.phi).zip(feature_values) {
        let _ = writeln!(out, "{name},{phi:?},{value:?}");
    }
    out
}

pub fn global_csv(global: &GlobalImportance) -> String {
    let mut out = String::from("feature,mean_abs_phi_class1,rank\n");
    for (i, name) in global.feature_names.iter().enumerate() {
        let _ = writeln!(
            out,
            "{name},{:?},{}",
            global.mean_abs_phi[1][i],
            global.rank_of(i)
        );
    }
    out
}

pub fn roc_csv(roc: &RocCurve) -> String {
    let mut out = String::from("fpr,tpr\n");
    for (fpr, tpr) in &roc.points {
        let _ = writeln!(out, "{fpr:?},{tpr:?}");
    }
    out
}

/// Waterfall chart walking from the base value to the explained output,
/// largest contributions first.
pub fn waterfall_svg(
    expl: &ShapleyExplanation,
    feature_names: &[String],
    feature_values: &[f64],
    title: &str,
) -> String {
    let order = waterfall_order(expl);
    let (left, right, top, row_h) = (220.0, 620.0, 60.0, 28.0);
    let height = top + row_h * order.len() as f64 + 60.0;

    // Cumulative positions in draw order, starting at the output and
    // peeling contributions off toward the base value.
    let mut lo = expl.base_value.min(expl.explained_output);
    let mut hi = expl.base_value.max(expl.explained_output);
    let mut end = expl.explained_output;
    let mut spans = Vec::with_capacity(order.len());
    for &i in &order {
        let start = end - expl.phi[i];
        lo = lo.min(start).min(end);
        hi = hi.max(start).max(end);
        spans.push((i, start, end));
        end = start;
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let pad = (hi - lo) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);
    let sx = |v: f64| left + (v - lo) / (hi - lo) * (right - left);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="680" height="{height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="10" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="44" text-anchor="middle">f(x) = {:.4}</text>"#,
        sx(expl.explained_output),
        expl.explained_output
    );
    for (row, &(i, start, end)) in spans.iter().enumerate() {
        let y = top + row_h * row as f64;
        let (x0, x1) = (sx(start.min(end)), sx(start.max(end)));
        let color = if expl.phi[i] >= 0.0 {
            POSITIVE_COLOR
        } else {
            NEGATIVE_COLOR
        };
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{} = {:.4}</text>"#,
            left - 8.0,
            y + 17.0,
            escape(&feature_names[i]),
            feature_values[i]
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            y + 4.0,
            (x1 - x0).max(0.5),
            row_h - 8.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{:+.4}</text>"#,
            x1 + 4.0,
            y + 17.0,
            expl.phi[i]
        );
    }
    let axis_y = top + row_h * spans.len() as f64 + 8.0;
    let _ = writeln!(
        svg,
        r##"<line x1="{left:.2}" y1="{axis_y:.2}" x2="{right:.2}" y2="{axis_y:.2}" stroke="#333"/>"##
    );
    for (v, label) in [
        (expl.base_value, "E[f(X)]"),
        (expl.explained_output, "f(x)"),
    ] {
        let x = sx(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{axis_y:.2}" stroke="#999" stroke-dasharray="3,3"/>"##,
            top - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label} = {v:.4}</text>"#,
            axis_y + 18.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Horizontal bar chart of mean |phi| per feature, most important on top.
pub fn importance_svg(global: &GlobalImportance, title: &str) -> String {
    let (left, right, top, row_h) = (160.0, 600.0, 50.0, 26.0);
    let values = &global.mean_abs_phi[1];
    let max = values.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let height = top + row_h * values.len() as f64 + 30.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="680" height="{height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="10" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
    for (row, &i) in global.ranking.iter().enumerate() {
        let y = top + row_h * row as f64;
        let w = values[i] / max * (right - left);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 8.0,
            y + 16.0,
            escape(&global.feature_names[i])
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{left:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{NEGATIVE_COLOR}"/>"#,
            y + 4.0,
            row_h - 8.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{:.4}</text>"#,
            left + w + 4.0,
            y + 16.0,
            values[i]
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn roc_svg(roc: &RocCurve, title: &str) -> String {
    let (x0, y0, size) = (60.0, 40.0, 400.0);
    let px = |fpr: f64| x0 + fpr * size;
    let py = |tpr: f64| y0 + (1.0 - tpr) * size;
    let path: Vec<String> = roc
        .points
        .iter()
        .map(|&(f, t)| format!("{:.2},{:.2}", px(f), py(t)))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="500" height="500" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="10" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{x0}" y="{y0}" width="{size}" height="{size}" fill="none" stroke="#333"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4,4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{POSITIVE_COLOR}" stroke-width="2"/>"#,
        path.join(" ")
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">False positive rate</text>"#,
        x0 + size / 2.0,
        y0 + size + 30.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}">AUC = {:.4}</text>"#,
        x0 + size * 0.6,
        y0 + size - 16.0,
        roc.auc
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" transform="rotate(-90 20 {:.2})" text-anchor="middle">True positive rate</text>"#,
        y0 + size / 2.0,
        y0 + size / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}
