//! Text and SVG renderings of explanations and class statistics.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dataset::{ClassStats, Outcome, FEATURE_NAMES, NUM_FEATURES};
use crate::explain::Explanation;
use crate::models::TrainReport;
use crate::numfmt::format_sig;

const REPORT_DIGITS: usize = 6;
pub const MIN_SVG_SIZE: u32 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("SVG size {width}x{height} below the {MIN_SVG_SIZE}x{MIN_SVG_SIZE} minimum")]
    Dimensions { width: u32, height: u32 },
}

fn fmt6(v: f64) -> String {
    format_sig(v, REPORT_DIGITS)
}

/// One explanation row.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewRow {
    pub feature: usize,
    pub name: &'static str,
    pub value: f64,
    pub weight: f64,
}

/// Rows sorted by descending |weight|, ties in schema order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplanationView {
    pub instance_id: u64,
    pub prediction: f64,
    pub fidelity: f64,
    pub rows: Vec<ViewRow>,
}

impl ExplanationView {
    pub fn new(e: &Explanation) -> Self {
        let mut rows: Vec<ViewRow> = e
            .features
            .iter()
            .enumerate()
            .map(|(feature, f)| ViewRow {
                feature,
                name: f.name,
                value: f.value,
                weight: f.weight,
            })
            .collect();
        // stable sort keeps schema order among equal magnitudes
        rows.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()));
        Self {
            instance_id: e.instance_id,
            prediction: e.prediction,
            fidelity: e.fidelity,
            rows,
        }
    }
}

/// `instance <id> p=<prob> fidelity=<loss>` followed by
/// `name<TAB>raw_value<TAB>weight` rows.
pub fn render_explanation_text(e: &Explanation) -> String {
    let view = ExplanationView::new(e);
    let mut out = format!(
        "instance {} p={} fidelity={}\n",
        view.instance_id,
        fmt6(view.prediction),
        fmt6(view.fidelity)
    );
    for r in &view.rows {
        writeln!(out, "{}\t{}\t{}", r.name, fmt6(r.value), fmt6(r.weight)).unwrap();
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Horizontal bar chart of the feature weights, largest |weight| on top.
/// Positive bars extend right of the zero axis with `class="pos"`,
/// negative ones left with `class="neg"`. The longest bar spans the full
/// half-width of the plot.
pub fn render_explanation_svg(
    e: &Explanation,
    width: u32,
    height: u32,
) -> Result<String, ReportError> {
    if width < MIN_SVG_SIZE || height < MIN_SVG_SIZE {
        return Err(ReportError::Dimensions { width, height });
    }
    let view = ExplanationView::new(e);
    let (w, h) = (width as f64, height as f64);
    let top = 24.0;
    let bottom = 8.0;
    let label_w = (w * 0.38).round();
    let axis_x = label_w + ((w - label_w - 8.0) / 2.0).round();
    let half = axis_x - label_w - 4.0;
    let band = (h - top - bottom) / NUM_FEATURES as f64;
    let bar_h = (band * 0.6).max(1.0);
    let max_abs = view.rows.iter().fold(0.0f64, |m, r| m.max(r.weight.abs()));
    let px = |v: f64| format!("{:.2}", v);

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="{}">"#,
        px((band * 0.35).clamp(6.0, 14.0))
    )
    .unwrap();
    writeln!(
        out,
        "<style>.pos{{fill:#2e7d32}}.neg{{fill:#c62828}}.axis{{stroke:#333;stroke-width:1}}</style>"
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="4" y="16">instance {} p={} fidelity={}</text>"#,
        view.instance_id,
        fmt6(view.prediction),
        fmt6(view.fidelity)
    )
    .unwrap();
    writeln!(
        out,
        r#"<line class="axis" x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#,
        px(axis_x),
        px(top),
        px(h - bottom)
    )
    .unwrap();
    for (k, r) in view.rows.iter().enumerate() {
        let y = top + band * k as f64 + (band - bar_h) / 2.0;
        let len = if max_abs > 0.0 {
            half * r.weight.abs() / max_abs
        } else {
            0.0
        };
        let (class, x) = if r.weight < 0.0 {
            ("neg", axis_x - len)
        } else {
            ("pos", axis_x)
        };
        writeln!(
            out,
            r#"<rect class="{class}" data-feature="{}" data-weight="{}" x="{}" y="{}" width="{}" height="{}"/>"#,
            xml_escape(r.name),
            fmt6(r.weight),
            px(x),
            px(y),
            px(len),
            px(bar_h)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="4" y="{}">{} ({})</text>"#,
            px(y + bar_h * 0.8),
            xml_escape(r.name),
            fmt6(r.value)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// One row per (feature, class): mean, std, count, then the 10 bin counts.
/// Undefined moments render as empty cells.
pub fn render_distribution_report(s: &ClassStats) -> String {
    let mut out = String::from("feature\tclass\tmean\tstd\tcount");
    for b in 0..crate::dataset::HISTOGRAM_BINS {
        write!(out, "\tbin{b}").unwrap();
    }
    out.push('\n');
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        for class in [Outcome::Failure, Outcome::Success] {
            let fs = s.get(class, j);
            let cell = |v: Option<f64>| v.map(fmt6).unwrap_or_default();
            write!(
                out,
                "{name}\t{}\t{}\t{}\t{}",
                class.label(),
                cell(fs.mean),
                cell(fs.std),
                fs.count
            )
            .unwrap();
            for c in fs.histogram {
                write!(out, "\t{c}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn render_train_report(r: &TrainReport) -> String {
    format!(
        "model\ttrain_accuracy\ttest_accuracy\tfinal_loss\tepochs\n{}\t{}\t{}\t{}\t{}\n",
        r.kind,
        fmt6(r.train_accuracy),
        fmt6(r.test_accuracy),
        fmt6(r.final_loss),
        r.epochs
    )
}
