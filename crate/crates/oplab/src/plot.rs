//! Static SVG figures for sweep results, stability profiles and error
//! traces. The files are self-contained vector graphics with log-scaled
//! axes, one series per algorithm and slope annotations in the legend,
//! written without any plotting dependency.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{fit_power_law, StabilityProfile};
use crate::error::{Error, Result};
use crate::experiments::SweepResult;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// One labeled point set. Points that cannot be drawn on the panel's
/// scales (non-finite, or nonpositive on a log axis) are dropped.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scale {
    /// Both axes logarithmic; legend slopes come from power-law fits.
    LogLog,
    /// Linear abscissa, logarithmic ordinate; legend shows the fitted
    /// per-step decay factor.
    SemilogY,
}

/// A dashed straight guide line on the transformed scale, described by
/// its two endpoints in data coordinates.
#[derive(Clone, Copy, Debug)]
struct Guide {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    scale: Scale,
    series: Vec<Series>,
    /// Trend line plus its legend label.
    guide: Option<(Guide, String)>,
    /// Vertical marker at one abscissa, with a label drawn beside it.
    marker: Option<(f64, String)>,
}

fn tx(scale: Scale, x: f64) -> f64 {
    match scale {
        Scale::LogLog => x.ln(),
        Scale::SemilogY => x,
    }
}

fn drawable(scale: Scale, (x, y): (f64, f64)) -> bool {
    let x_ok = match scale {
        Scale::LogLog => x.is_finite() && x > 0.0,
        Scale::SemilogY => x.is_finite(),
    };
    x_ok && y.is_finite() && y > 0.0
}

/// Least squares line through (x, ln y); used for the semilog legend.
fn semilog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let ly = y.ln();
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

fn fmt_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        return "0".to_string();
    }
    let s = if a >= 1e4 || a < 1e-3 {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    };
    if s.contains('.') && !s.contains('e') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn escape_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Mapper {
    tx_min: f64,
    tx_span: f64,
    ty_min: f64,
    ty_span: f64,
}

impl Mapper {
    fn new(scale: Scale, panel: &Panel) -> Result<Self> {
        let mut txs: Vec<f64> = Vec::new();
        let mut tys: Vec<f64> = Vec::new();
        for s in &panel.series {
            for &p in s.points.iter().filter(|p| drawable(scale, **p)) {
                txs.push(tx(scale, p.0));
                tys.push(p.1.ln());
            }
        }
        if let Some((g, _)) = panel.guide {
            for (x, y) in [(g.x0, g.y0), (g.x1, g.y1)] {
                if drawable(scale, (x, y)) {
                    txs.push(tx(scale, x));
                    tys.push(y.ln());
                }
            }
        }
        if txs.is_empty() {
            return Err(Error::validation(format!(
                "panel '{}' has nothing drawable on its log scales",
                panel.title
            )));
        }
        let min_max = |v: &[f64]| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &x in v {
                lo = lo.min(x);
                hi = hi.max(x);
            }
            (lo, hi)
        };
        let (mut x0, mut x1) = min_max(&txs);
        let (mut y0, mut y1) = min_max(&tys);
        if let Some((mx, _)) = &panel.marker {
            if drawable(scale, (*mx, 1.0)) || scale == Scale::SemilogY {
                x0 = x0.min(tx(scale, *mx));
                x1 = x1.max(tx(scale, *mx));
            }
        }
        let pad = |lo: &mut f64, hi: &mut f64| {
            let span = *hi - *lo;
            let p = if span > 0.0 { 0.05 * span } else { 0.5 };
            *lo -= p;
            *hi += p;
        };
        pad(&mut x0, &mut x1);
        pad(&mut y0, &mut y1);
        Ok(Mapper {
            tx_min: x0,
            tx_span: x1 - x0,
            ty_min: y0,
            ty_span: y1 - y0,
        })
    }

    fn px(&self, t: f64) -> f64 {
        MARGIN_L + (t - self.tx_min) / self.tx_span * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn py(&self, t: f64) -> f64 {
        MARGIN_T + (self.ty_min + self.ty_span - t) / self.ty_span * (PANEL_H - MARGIN_T - MARGIN_B)
    }
}

fn render_panel(out: &mut String, panel: &Panel) -> Result<()> {
    let scale = panel.scale;
    let map = Mapper::new(scale, panel)?;
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;

    let _ = write!(
        out,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444" stroke-width="1"/>"##
    );
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14" font-weight="bold">{}</text>"#,
        PANEL_W / 2.0,
        escape_text(&panel.title)
    );
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        PANEL_H - 14.0,
        escape_text(&panel.x_label)
    );
    let _ = write!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape_text(&panel.y_label)
    );

    // Ticks: five stops evenly spaced on the transformed scale.
    for i in 0..5 {
        let f = i as f64 / 4.0;
        let txv = map.tx_min + f * map.tx_span;
        let x = map.px(txv);
        let value = match scale {
            Scale::LogLog => txv.exp(),
            Scale::SemilogY => txv,
        };
        let _ = write!(
            out,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444" stroke-width="1"/>"##,
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        );
        let _ = write!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
            MARGIN_T + plot_h + 18.0,
            fmt_value(value)
        );
        let tyv = map.ty_min + f * map.ty_span;
        let y = map.py(tyv);
        let _ = write!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{MARGIN_L}" y2="{y:.1}" stroke="#444" stroke-width="1"/>"##,
            MARGIN_L - 5.0
        );
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{}</text>"#,
            MARGIN_L - 8.0,
            y + 4.0,
            fmt_value(tyv.exp())
        );
    }

    let mut legend: Vec<(String, &str, bool)> = Vec::new();
    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|p| drawable(scale, *p))
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("drawable points are finite"));
        if pts.is_empty() {
            continue;
        }
        let mut attr = String::new();
        for &(x, y) in &pts {
            let _ = write!(attr, "{:.2},{:.2} ", map.px(tx(scale, x)), map.py(y.ln()));
        }
        let _ = write!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            attr.trim_end()
        );
        for &(x, y) in &pts {
            let _ = write!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.6" fill="{color}"/>"#,
                map.px(tx(scale, x)),
                map.py(y.ln())
            );
        }
        let annotation = match scale {
            Scale::LogLog => {
                let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
                let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
                fit_power_law(&xs, &ys)
                    .ok()
                    .map(|fit| format!(" (slope {:.2})", fit.slope))
            }
            Scale::SemilogY => {
                semilog_slope(&pts).map(|m| format!(" (rate {:.3}/iter)", m.exp()))
            }
        };
        legend.push((
            format!("{}{}", s.label, annotation.unwrap_or_default()),
            color,
            false,
        ));
    }

    if let Some((g, label)) = &panel.guide {
        let _ = write!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-width="1.4" stroke-dasharray="6 4"/>"##,
            map.px(tx(scale, g.x0)),
            map.py(g.y0.ln()),
            map.px(tx(scale, g.x1)),
            map.py(g.y1.ln())
        );
        legend.push((label.clone(), "#555", true));
    }

    if let Some((x, label)) = &panel.marker {
        let px = map.px(tx(scale, *x));
        let _ = write!(
            out,
            r##"<line x1="{px:.2}" y1="{MARGIN_T}" x2="{px:.2}" y2="{:.1}" stroke="#888" stroke-width="1.2" stroke-dasharray="3 3"/>"##,
            MARGIN_T + plot_h
        );
        let _ = write!(
            out,
            r##"<text x="{:.1}" y="{:.1}" font-size="11" fill="#555">{}</text>"##,
            px + 5.0,
            MARGIN_T + 14.0,
            escape_text(label)
        );
    }

    for (i, (label, color, dashed)) in legend.iter().enumerate() {
        let y = MARGIN_T + 16.0 + 16.0 * i as f64;
        let x0 = MARGIN_L + 10.0;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = write!(
            out,
            r#"<line x1="{x0}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            y - 4.0,
            x0 + 18.0,
            y - 4.0
        );
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" font-size="12">{}</text>"#,
            x0 + 24.0,
            escape_text(label)
        );
    }
    Ok(())
}

fn render_figure(panels: &[Panel]) -> Result<String> {
    if panels.is_empty() {
        return Err(Error::validation("a figure needs at least one panel"));
    }
    let height = PANEL_H * panels.len() as f64;
    let mut out = String::new();
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" viewBox="0 0 {PANEL_W} {height}" font-family="Helvetica, Arial, sans-serif">"#
    );
    let _ = write!(
        out,
        r#"<rect x="0" y="0" width="{PANEL_W}" height="{height}" fill="white"/>"#
    );
    for (k, panel) in panels.iter().enumerate() {
        let _ = write!(out, r#"<g transform="translate(0 {:.1})">"#, PANEL_H * k as f64);
        render_panel(&mut out, panel)?;
        out.push_str("</g>");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn write_svg(svg: &str, path: &Path) -> Result<()> {
    std::fs::write(path, svg).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Renders a sweep's medians as a two-panel log-log figure: final error
/// against n on top, iterations to the threshold against n below, one
/// series per algorithm, each legend entry annotated with its fitted
/// power-law slope.
pub fn emit_plot(result: &SweepResult, path: &Path) -> Result<()> {
    if result.summary.is_empty() {
        return Err(Error::validation("cannot plot an empty sweep"));
    }
    let mut algorithms = Vec::new();
    for row in &result.summary {
        if !algorithms.contains(&row.algorithm) {
            algorithms.push(row.algorithm);
        }
    }
    let series_of = |value: &dyn Fn(&crate::experiments::SummaryRow) -> Option<f64>| -> Vec<Series> {
        algorithms
            .iter()
            .map(|&a| Series {
                label: a.to_string(),
                points: result
                    .summary
                    .iter()
                    .filter(|r| r.algorithm == a)
                    .filter_map(|r| value(r).map(|v| (r.n as f64, v)))
                    .collect(),
            })
            .collect()
    };
    let model = result.summary[0].model.clone();
    let panels = vec![
        Panel {
            title: format!("{model}: median final error vs n"),
            x_label: "sample size n".to_string(),
            y_label: "median final error".to_string(),
            scale: Scale::LogLog,
            series: series_of(&|r| r.median_final_error),
            guide: None,
            marker: None,
        },
        Panel {
            title: format!("{model}: median iterations to threshold vs n"),
            x_label: "sample size n".to_string(),
            y_label: "median hit iteration".to_string(),
            scale: Scale::LogLog,
            series: series_of(&|r| r.median_hit_iteration),
            guide: None,
            marker: None,
        },
    ];
    write_svg(&render_figure(&panels)?, path)
}

/// Renders a stability profile on log-log axes: the measured deviation
/// sups against the probe radius, the fitted power-law trend when one
/// exists, and a vertical marker at the detected inner radius.
pub fn plot_profile(profile: &StabilityProfile, path: &Path) -> Result<()> {
    let points: Vec<(f64, f64)> = profile
        .radii()
        .iter()
        .zip(profile.sups())
        .zip(profile.valid())
        .filter(|(_, &ok)| ok)
        .map(|((&r, &s), _)| (r, s))
        .collect();
    let series = vec![Series {
        label: "measured deviation".to_string(),
        points,
    }];
    let guide = profile.gamma_fit().map(|fit| {
        let (r0, r1) = profile
            .fit_range()
            .unwrap_or((profile.radii()[0], *profile.radii().last().expect("nonempty")));
        (
            Guide {
                x0: r0,
                y0: fit.predict(r0.ln()).exp(),
                x1: r1,
                y1: fit.predict(r1.ln()).exp(),
            },
            format!("power-law trend (slope {:.2})", fit.slope),
        )
    });
    let marker = profile
        .inner_radius()
        .map(|r| (r, format!("inner radius {}", fmt_value(r))));
    let panel = Panel {
        title: "operator deviation vs probe radius".to_string(),
        x_label: "probe radius r".to_string(),
        y_label: "sup deviation over probes".to_string(),
        scale: Scale::LogLog,
        series,
        guide,
        marker,
    };
    write_svg(&render_figure(&[panel])?, path)
}

/// Renders error traces on a semilog scale: iteration count on the
/// abscissa, error on a logarithmic ordinate, one series per labeled
/// trace. Exact zeros (an iterate that landed on the fixed point) cannot
/// be drawn on a log axis and are dropped.
pub fn plot_traces(traces: &[(String, Vec<f64>)], path: &Path) -> Result<()> {
    if traces.is_empty() {
        return Err(Error::validation("no traces to plot"));
    }
    let series: Vec<Series> = traces
        .iter()
        .map(|(label, errors)| Series {
            label: label.clone(),
            points: errors
                .iter()
                .enumerate()
                .map(|(t, &e)| (t as f64, e))
                .collect(),
        })
        .collect();
    let panel = Panel {
        title: "error per iteration".to_string(),
        x_label: "iteration t".to_string(),
        y_label: "distance to the fixed point".to_string(),
        scale: Scale::SemilogY,
        series,
        guide: None,
        marker: None,
    };
    write_svg(&render_figure(&[panel])?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::Algorithm;
    use crate::experiments::{summarize_rows, SweepRow};

    fn synthetic_sweep() -> SweepResult {
        let mut rows = Vec::new();
        for &algorithm in &[Algorithm::Gd, Algorithm::Newton] {
            for &n in &[16usize, 256, 4096] {
                let nf = n as f64;
                rows.push(SweepRow {
                    model: "regression".to_string(),
                    algorithm,
                    n,
                    d: 1,
                    trial: 0,
                    seed: 1,
                    final_error: nf.powf(-0.25),
                    min_error: nf.powf(-0.25),
                    hit_iteration: Some(nf.sqrt() as usize),
                    iterations_run: 500,
                    failed: false,
                });
            }
        }
        let summary = summarize_rows(&rows);
        SweepResult { rows, summary }
    }

    #[test]
    fn sweep_plot_has_one_series_per_algorithm_and_slopes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.svg");
        emit_plot(&synthetic_sweep(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert_eq!(text.matches("<polyline").count(), 4, "2 series x 2 panels");
        // Exact power laws: error slope -1/4, hit slope 1/2.
        assert!(text.contains("gd (slope -0.25)"), "legend: {text}");
        assert!(text.contains("nm (slope 0.50)"));
    }

    #[test]
    fn profile_plot_draws_trend_and_inner_radius() {
        let radii: Vec<f64> = (0..8).map(|k| 0.01 * 1.6f64.powi(k)).collect();
        let sups: Vec<f64> = radii.iter().map(|r| 1e-3 / r).collect();
        let profile = StabilityProfile::from_measurements(radii, sups, vec![2; 8], 2).unwrap();
        assert!(profile.gamma_fit().is_some());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.svg");
        plot_profile(&profile, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("<polyline").count(), 1);
        assert!(text.contains("slope -1.00"), "legend: {text}");
        assert!(text.contains("inner radius"));
    }

    #[test]
    fn trace_plot_drops_exact_zeros() {
        let a: Vec<f64> = (0..30).map(|t| 0.9f64.powi(t)).collect();
        let mut b: Vec<f64> = (0..30).map(|t| 0.5f64.powi(t)).collect();
        b.extend([0.0, 0.0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traces.svg");
        plot_traces(&[("slow".to_string(), a), ("fast".to_string(), b)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("<polyline").count(), 2);
        assert!(!text.contains("NaN") && !text.contains("inf"));
        assert!(text.contains("rate 0.900/iter"));
        assert!(text.contains("rate 0.500/iter"));
    }

    #[test]
    fn empty_figures_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.svg");
        let empty = SweepResult { rows: vec![], summary: vec![] };
        assert!(emit_plot(&empty, &path).is_err());
        assert!(plot_traces(&[], &path).is_err());
        let zeros = vec![("flat".to_string(), vec![0.0; 10])];
        assert!(plot_traces(&zeros, &path).is_err());
        assert!(!path.exists());
    }
}
