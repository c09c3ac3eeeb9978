//! Curve tables and self-contained SVG plots.
//!
//! Every SVG uses the fixed view box `0 0 640 400`, the generic
//! `sans-serif` font family and no timestamps, so identical inputs give
//! identical bytes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dataset::format_value;
use crate::error::Result;
use crate::types::CurveReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Writes `c, ell_raw, ell_corrected, ell_smoothed, ell_normalized, heuristic`
/// rows; the heuristic is blank outside the detection window.
pub fn write_curve_csv(path: &Path, curve: &CurveReport) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "c,ell_raw,ell_corrected,ell_smoothed,ell_normalized,heuristic")?;
    for j in 0..curve.cs.len() {
        let h = curve.heuristic[j].map(format_value).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_value(curve.cs[j]),
            format_value(curve.ell_raw[j]),
            format_value(curve.ell_corrected[j]),
            format_value(curve.ell_smoothed[j]),
            format_value(curve.ell_normalized[j]),
            h
        )?;
    }
    out.flush()?;
    Ok(())
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, frame: &Frame, xlabel: &str, ylabel: &str, yticks: &[f64]) {
    let (l, r) = (LEFT, WIDTH - RIGHT);
    let (t, b) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<path d="M{l} {t}V{b}H{r}" fill="none" stroke="black"/>"#
    );
    for &y in yticks {
        let py = frame.py(y);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 4.0,
            l - 6.0,
            py + 4.0,
            trim(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(ylabel)
    );
}

fn trim(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn vrule(svg: &mut String, frame: &Frame, x: f64, color: &str, dash: &str, label: &str) {
    let px = frame.px(x);
    let _ = writeln!(
        svg,
        r#"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="{color}" stroke-dasharray="{dash}"/><text x="{:.2}" y="{}" fill="{color}">{}</text>"#,
        HEIGHT - BOTTOM,
        px + 4.0,
        TOP + 14.0,
        escape(label)
    );
}

/// Line plot of the normalized curve with the estimate and, if known, the
/// true proportion marked as vertical rules.
pub fn curve_svg(curve: &CurveReport, alpha_hat: f64, true_alpha: Option<f64>) -> String {
    let frame = Frame {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };
    let mut svg = String::new();
    header(&mut svg, "normalized log-likelihood");
    axes(
        &mut svg,
        &frame,
        "mixing proportion c",
        "normalized log-likelihood",
        &[0.0, 0.25, 0.5, 0.75, 1.0],
    );
    for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            frame.px(x),
            HEIGHT - BOTTOM + 16.0,
            trim(x)
        );
    }
    let points: Vec<String> = curve
        .cs
        .iter()
        .zip(&curve.ell_normalized)
        .map(|(&c, &l)| format!("{:.2},{:.2}", frame.px(c), frame.py(l)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        points.join(" ")
    );
    vrule(&mut svg, &frame, alpha_hat, "firebrick", "6 3", &format!("estimate {}", trim(alpha_hat)));
    if let Some(a) = true_alpha {
        vrule(&mut svg, &frame, a, "darkgreen", "2 2", &format!("true {}", trim(a)));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Quartiles by linear interpolation between order statistics.
fn quartiles(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < v.len() {
            v[i] + frac * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    [v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]]
}

/// Box-and-whisker summary of one value list per group; empty groups are
/// drawn as a label only.
pub fn boxplot_svg(title: &str, ylabel: &str, groups: &[(String, Vec<f64>)]) -> String {
    let all: Vec<f64> = groups.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let lo = all.iter().copied().fold(0.0_f64, f64::min);
    let mut hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let frame = Frame {
        x0: 0.0,
        x1: groups.len().max(1) as f64,
        y0: lo,
        y1: hi,
    };
    let mut svg = String::new();
    header(&mut svg, title);
    let ticks: Vec<f64> = (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
    axes(&mut svg, &frame, "", ylabel, &ticks);
    let half = 0.25 * (frame.px(1.0) - frame.px(0.0));
    for (g, (name, values)) in groups.iter().enumerate() {
        let cx = frame.px(g as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 16.0,
            escape(name)
        );
        if values.is_empty() {
            continue;
        }
        let [min, q1, med, q3, max] = quartiles(values);
        let y = |v: f64| frame.py(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            y(max),
            y(q3)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            y(q1),
            y(min)
        );
        for v in [min, max] {
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
                cx - half / 2.0,
                y(v),
                cx + half / 2.0,
                y(v)
            );
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="black"/>"#,
            cx - half,
            y(q3),
            2.0 * half,
            (y(q1) - y(q3)).max(0.5)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="2"/>"#,
            cx - half,
            y(med),
            cx + half,
            y(med)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> CurveReport {
        let cs: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let ells: Vec<f64> = cs.iter().map(|c| if *c <= 0.3 { 1.0 } else { 1.3 - c }).collect();
        CurveReport {
            cs: cs.clone(),
            ell_raw: ells.clone(),
            ell_corrected: ells.clone(),
            ell_smoothed: ells.clone(),
            ell_normalized: ells,
            heuristic: (0..9).map(|j| if j == 4 { Some(0.5) } else { None }).collect(),
            unconverged: vec![],
        }
    }

    #[test]
    fn curve_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let r = report();
        write_curve_csv(&path, &r).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 10);
        let row: Vec<&str> = lines[5].split(',').collect();
        assert_eq!(row[0].parse::<f64>().unwrap(), r.cs[4]);
        assert_eq!(row[5].parse::<f64>().unwrap(), 0.5);
        assert!(lines[1].ends_with(','));
    }

    #[test]
    fn svg_is_deterministic_and_fixed_size() {
        let a = curve_svg(&report(), 0.3, Some(0.25));
        assert_eq!(a, curve_svg(&report(), 0.3, Some(0.25)));
        assert!(a.contains(r#"viewBox="0 0 640 400""#));
        assert!(a.contains("estimate 0.3"));
        assert!(a.contains("true 0.25"));
        assert!(!curve_svg(&report(), 0.3, None).contains("true "));
    }

    #[test]
    fn boxplot_quartiles() {
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]), [1.0, 2.0, 3.0, 4.0, 5.0]);
        let svg = boxplot_svg(
            "errors",
            "absolute error",
            &[("a".into(), vec![0.1, 0.2, 0.3]), ("b<c".into(), vec![])],
        );
        assert!(svg.contains("b&lt;c"));
        assert_eq!(svg.matches("<rect").count(), 2);
    }
}
