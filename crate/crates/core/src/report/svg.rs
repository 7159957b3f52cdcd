//! Standalone SVG figures. Every plotted value is carried in a
//! `data-value` attribute formatted exactly as in the CSV outputs.

use std::fmt::Write as _;
use std::path::Path;

use super::{fmt_num, AggregateRow, ReportError};

const FONT: &str = "font-family=\"sans-serif\" font-size=\"11\"";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(width: f64, height: f64, title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>").unwrap();
    s
}

/// Horizontal gridlines with tick labels for a `[0, top]` value axis.
fn value_axis(s: &mut String, left: f64, right: f64, y0: f64, scale: f64, top: f64, step: f64) {
    let mut v = 0.0;
    while v <= top + 1e-9 {
        let y = y0 - v * scale;
        writeln!(
            s,
            "<line x1=\"{left:.1}\" y1=\"{y:.1}\" x2=\"{right:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" {FONT}>{v:.1}</text>",
            left - 4.0,
            y + 4.0
        )
        .unwrap();
        v += step;
    }
}

const SERIES: [(&str, &str, &str); 3] = [
    ("hm_mean", "HM", "#4c72b0"),
    ("qm_full", "QM full", "#dd8452"),
    ("qm_optimal", "QM optimal", "#55a868"),
];

/// Grouped bars of the aggregate scores, one group per run, with the
/// survey standard deviation as error bars on the HM bar.
pub fn bar_chart_svg(rows: &[AggregateRow]) -> String {
    let bar = 12.0;
    let group = bar * 3.0 + 14.0;
    let (left, top, plot_h, bottom) = (50.0, 40.0, 260.0, 120.0);
    let width = left + group * rows.len().max(1) as f64 + 20.0;
    let height = top + plot_h + bottom;
    let y0 = top + plot_h;
    let y_max = 1.2;
    let scale = plot_h / y_max;

    let mut s = open(width, height, "Aggregate scores per run");
    value_axis(&mut s, left, width - 20.0, y0, scale, y_max, 0.2);
    for (i, (_, label, color)) in SERIES.iter().enumerate() {
        let x = left + i as f64 * 110.0;
        writeln!(
            s,
            "<rect x=\"{x:.1}\" y=\"12\" width=\"10\" height=\"10\" fill=\"{color}\"/>\
             <text x=\"{:.1}\" y=\"21\" {FONT}>{label}</text>",
            x + 14.0
        )
        .unwrap();
    }
    for (g, r) in rows.iter().enumerate() {
        let gx = left + g as f64 * group + 7.0;
        let id = escape(&r.experiment_id);
        writeln!(s, "<g class=\"run\" data-experiment=\"{id}\">").unwrap();
        let values = [r.hm_mean, r.qm_full, r.qm_optimal];
        for (b, ((series, _, color), v)) in SERIES.iter().zip(values).enumerate() {
            let Some(v) = v else { continue };
            let x = gx + b as f64 * bar;
            let h = v.clamp(0.0, y_max) * scale;
            writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{color}\" \
                 data-series=\"{series}\" data-value=\"{}\"/>",
                y0 - h,
                bar - 1.0,
                fmt_num(v)
            )
            .unwrap();
            if b == 0 {
                if let Some(sd) = r.hm_std {
                    let cx = x + (bar - 1.0) / 2.0;
                    let lo = y0 - (v - sd).clamp(0.0, y_max) * scale;
                    let hi = y0 - (v + sd).clamp(0.0, y_max) * scale;
                    writeln!(
                        s,
                        "<line x1=\"{cx:.1}\" y1=\"{lo:.1}\" x2=\"{cx:.1}\" y2=\"{hi:.1}\" stroke=\"black\" \
                         data-series=\"hm_std\" data-value=\"{}\"/>",
                        fmt_num(sd)
                    )
                    .unwrap();
                }
            }
        }
        let lx = gx + bar * 1.5;
        writeln!(
            s,
            "<text x=\"{lx:.1}\" y=\"{:.1}\" transform=\"rotate(-60 {lx:.1} {:.1})\" text-anchor=\"end\" {FONT}>{id}</text>",
            y0 + 12.0,
            y0 + 12.0
        )
        .unwrap();
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

fn heat_color(v: f64) -> String {
    let a = v.abs().clamp(0.0, 1.0);
    let fade = |c: f64| (255.0 - (255.0 - c) * a).round() as u8;
    if v >= 0.0 {
        format!("#{:02x}{:02x}{:02x}", fade(180.0), fade(30.0), fade(40.0))
    } else {
        format!("#{:02x}{:02x}{:02x}", fade(30.0), fade(70.0), fade(170.0))
    }
}

/// Signed correlation strength for every consistent QM/HM pair, given as
/// a `qm_columns × hm_columns` matrix. Rows and columns without any value
/// are left out.
pub fn heatmap_svg(qm_columns: &[String], hm_columns: &[String], values: &[Vec<Option<f64>>]) -> String {
    let rows: Vec<usize> = (0..qm_columns.len()).filter(|&i| values[i].iter().any(Option::is_some)).collect();
    let cols: Vec<usize> = (0..hm_columns.len()).filter(|&j| values.iter().any(|r| r[j].is_some())).collect();

    if rows.is_empty() {
        let mut s = open(360.0, 80.0, "Consistent QM/HM correlations");
        writeln!(s, "<text x=\"180\" y=\"45\" text-anchor=\"middle\" {FONT}>no consistent correlations</text>").unwrap();
        s.push_str("</svg>\n");
        return s;
    }

    let (left, top, size) = (70.0, 90.0, 40.0);
    let width = left + size * cols.len() as f64 + 20.0;
    let height = top + size * rows.len() as f64 + 20.0;
    let mut s = open(width, height, "Consistent QM/HM correlations");
    for (j, &h) in cols.iter().enumerate() {
        let x = left + (j as f64 + 0.5) * size;
        writeln!(
            s,
            "<text x=\"{x:.1}\" y=\"{:.1}\" transform=\"rotate(-45 {x:.1} {:.1})\" {FONT}>{}</text>",
            top - 6.0,
            top - 6.0,
            escape(&hm_columns[h])
        )
        .unwrap();
    }
    for (i, &q) in rows.iter().enumerate() {
        let y = top + i as f64 * size;
        writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" {FONT}>{}</text>",
            left - 6.0,
            y + size / 2.0 + 4.0,
            escape(&qm_columns[q])
        )
        .unwrap();
        for (j, &h) in cols.iter().enumerate() {
            let x = left + j as f64 * size;
            match values[q][h] {
                Some(v) => writeln!(
                    s,
                    "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{size:.1}\" height=\"{size:.1}\" fill=\"{}\" stroke=\"white\" \
                     data-qm=\"{}\" data-hm=\"{}\" data-value=\"{}\"><title>{}</title></rect>",
                    heat_color(v),
                    escape(&qm_columns[q]),
                    escape(&hm_columns[h]),
                    fmt_num(v),
                    fmt_num(v)
                ),
                None => writeln!(
                    s,
                    "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{size:.1}\" height=\"{size:.1}\" fill=\"#f2f2f2\" stroke=\"white\"/>"
                ),
            }
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Bars of the cumulative ARI per metric, in the given order.
pub fn cumulative_ari_svg(scores: &[(String, f64)]) -> String {
    let (left, top, plot_h, bar) = (50.0, 30.0, 240.0, 34.0);
    let width = left + bar * scores.len().max(1) as f64 + 20.0;
    let height = top + plot_h + 60.0;
    let y0 = top + plot_h;
    let max = scores.iter().map(|s| s.1).fold(0.0, f64::max);
    let top_value = if max > 0.0 { max * 1.1 } else { 1.0 };
    let scale = plot_h / top_value;
    let step = (top_value / 5.0).max(1e-9);

    let mut s = open(width, height, "Cumulative ARI per metric");
    value_axis(&mut s, left, width - 20.0, y0, scale, top_value, step);
    for (i, (m, v)) in scores.iter().enumerate() {
        let x = left + i as f64 * bar + 4.0;
        let h = v.max(0.0) * scale;
        writeln!(
            s,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"#4c72b0\" \
             data-metric=\"{}\" data-value=\"{}\"/>",
            y0 - h,
            bar - 8.0,
            escape(m),
            fmt_num(*v)
        )
        .unwrap();
        let lx = x + (bar - 8.0) / 2.0;
        writeln!(
            s,
            "<text x=\"{lx:.1}\" y=\"{:.1}\" transform=\"rotate(-45 {lx:.1} {:.1})\" text-anchor=\"end\" {FONT}>{}</text>",
            y0 + 12.0,
            y0 + 12.0,
            escape(m)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, svg: &str) -> Result<(), ReportError> {
    std::fs::write(path, svg).map_err(|e| ReportError::io(path, e))
}
