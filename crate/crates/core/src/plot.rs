//! SVG rendering of monitoring charts and ARL curves.
//!
//! Output is plain hand-assembled SVG so the files are self-contained and
//! text-greppable: out-of-control points carry class="ooc-marker", one per
//! signal, and each ARL curve carries class="arl-curve". That makes golden
//! tests a matter of counting substrings.

use crate::monitor::{ArlTableRow, MonitoringRun};
use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn plot_area() -> (f64, f64) {
    (WIDTH - MARGIN_LEFT - MARGIN_RIGHT, HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
}

/// Round a raw tick spacing to 1, 2, or 5 times a power of ten.
fn nice_step(raw: f64) -> f64 {
    if raw <= 0.0 || !raw.is_finite() {
        return 1.0;
    }
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0
    } else if r <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
}

/// Render one monitoring run as an SVG string.
pub fn chart_svg(run: &MonitoringRun) -> String {
    let (pw, ph) = plot_area();
    let npts = run.points.len().max(1) as f64;
    let zmax = run
        .points
        .iter()
        .map(|p| p.z)
        .fold(run.limits.ucl, f64::max);
    let ymax = (zmax * 1.12).max(1e-9);
    let x = |index: f64| MARGIN_LEFT + (index - 0.5) / npts * pw;
    let y = |v: f64| MARGIN_TOP + ph - (v / ymax) * ph;

    let mut s = String::new();
    svg_open(&mut s);

    let title = if run.config.lambda == 1.0 {
        format!("Shewhart chart (L = {:.3})", run.config.l)
    } else {
        format!(
            "EWMA chart (lambda = {:.2}, L = {:.3})",
            run.config.lambda, run.config.l
        )
    };
    let _ = writeln!(
        s,
        "<text x=\"{MARGIN_LEFT}\" y=\"24\" font-size=\"15\" font-weight=\"bold\">{title}</text>"
    );

    // horizontal grid and y ticks
    let step = nice_step(ymax / 5.0);
    let mut tick = 0.0;
    while tick <= ymax + 1e-12 {
        let yy = y(tick);
        let _ = writeln!(
            s,
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" \
             stroke=\"#e0e0e0\"/>",
            MARGIN_LEFT + pw
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{tick}</text>",
            MARGIN_LEFT - 8.0,
            yy + 4.0
        );
        tick += step;
    }

    // x ticks on observation index
    let xstep = nice_step(npts / 8.0).max(1.0);
    let mut ix = xstep;
    while ix <= npts {
        let xx = x(ix);
        let _ = writeln!(
            s,
            "<text x=\"{xx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{ix}</text>",
            MARGIN_TOP + ph + 18.0
        );
        ix += xstep;
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">observation</text>",
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 10.0
    );

    // control limits
    let yu = y(run.limits.ucl);
    let yc = y(run.limits.cl);
    let _ = writeln!(
        s,
        "<line class=\"ucl-line\" x1=\"{MARGIN_LEFT}\" y1=\"{yu:.2}\" x2=\"{:.2}\" y2=\"{yu:.2}\" \
         stroke=\"#d62728\" stroke-dasharray=\"6 3\" stroke-width=\"1.5\"/>",
        MARGIN_LEFT + pw
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#d62728\">UCL = {:.4}</text>",
        MARGIN_LEFT + 6.0,
        yu - 5.0,
        run.limits.ucl
    );
    let _ = writeln!(
        s,
        "<line class=\"cl-line\" x1=\"{MARGIN_LEFT}\" y1=\"{yc:.2}\" x2=\"{:.2}\" y2=\"{yc:.2}\" \
         stroke=\"#888888\" stroke-width=\"1\"/>",
        MARGIN_LEFT + pw
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#888888\">CL = {:.4}</text>",
        MARGIN_LEFT + 6.0,
        yc - 5.0,
        run.limits.cl
    );
    if run.limits.lcl > 0.0 {
        let yl = y(run.limits.lcl);
        let _ = writeln!(
            s,
            "<line class=\"lcl-line\" x1=\"{MARGIN_LEFT}\" y1=\"{yl:.2}\" x2=\"{:.2}\" \
             y2=\"{yl:.2}\" stroke=\"#d62728\" stroke-dasharray=\"6 3\"/>",
            MARGIN_LEFT + pw
        );
    }

    // phase divider
    if run.phase1_end < run.points.len() {
        let xd = x(run.phase1_end as f64 + 0.5);
        let _ = writeln!(
            s,
            "<line class=\"phase-divider\" x1=\"{xd:.2}\" y1=\"{MARGIN_TOP}\" x2=\"{xd:.2}\" \
             y2=\"{:.2}\" stroke=\"#555555\" stroke-dasharray=\"2 4\"/>",
            MARGIN_TOP + ph
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#555555\">Phase I</text>",
            xd - 6.0,
            MARGIN_TOP + 14.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#555555\">Phase II</text>",
            xd + 6.0,
            MARGIN_TOP + 14.0
        );
    }

    // statistic path
    let mut pts = String::new();
    for p in &run.points {
        let _ = write!(pts, "{:.2},{:.2} ", x(p.index as f64), y(p.z));
    }
    let _ = writeln!(
        s,
        "<polyline class=\"z-path\" points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" \
         stroke-width=\"1.3\"/>",
        pts.trim_end()
    );

    // signal markers, Phase II in red and Phase I in orange
    for p in run.points.iter().filter(|p| p.signal) {
        let class = if p.index > run.phase1_end {
            ("ooc-marker", "#d62728")
        } else {
            ("phase1-marker", "#ff7f0e")
        };
        let _ = writeln!(
            s,
            "<circle class=\"{}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{}\" \
             stroke=\"white\" stroke-width=\"1\"><title>index {} z = {:.4}</title></circle>",
            class.0,
            x(p.index as f64),
            y(p.z),
            class.1,
            p.index,
            p.z
        );
    }

    s.push_str("</svg>\n");
    s
}

/// Render ARL curves, one per lambda, ARL on a log axis against the shifted
/// success probability (in-control at the left edge).
pub fn arl_curves_svg(rows: &[ArlTableRow]) -> String {
    let (pw, ph) = plot_area();
    let mut s = String::new();
    svg_open(&mut s);
    if rows.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }

    // group by lambda, preserving first-seen order
    let mut groups: Vec<(f64, Vec<ArlTableRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(l, _)| *l == r.lambda) {
            Some((_, v)) => v.push(*r),
            None => groups.push((r.lambda, vec![*r])),
        }
    }
    for (_, v) in &mut groups {
        // larger p1 = smaller shift plotted leftmost
        v.sort_by(|a, b| b.p1.partial_cmp(&a.p1).unwrap());
    }

    let p_max = rows.iter().map(|r| r.p1).fold(f64::MIN, f64::max);
    let p_min = rows.iter().map(|r| r.p1).fold(f64::MAX, f64::min);
    let p_span = (p_max - p_min).max(1e-12);
    let arl_max = rows.iter().map(|r| r.arl).fold(1.0, f64::max);
    let log_max = arl_max.log10().max(0.5) * 1.05;

    let x = |p1: f64| MARGIN_LEFT + (p_max - p1) / p_span * pw;
    let y = |arl: f64| MARGIN_TOP + ph - (arl.max(1.0).log10() / log_max) * ph;

    let _ = writeln!(
        s,
        "<text x=\"{MARGIN_LEFT}\" y=\"24\" font-size=\"15\" font-weight=\"bold\">\
         Average run length by shift size</text>"
    );

    // log-decade grid
    let mut decade = 1.0f64;
    while decade.log10() <= log_max {
        let yy = y(decade);
        let _ = writeln!(
            s,
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" \
             stroke=\"#e0e0e0\"/>",
            MARGIN_LEFT + pw
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{decade}</text>",
            MARGIN_LEFT - 8.0,
            yy + 4.0
        );
        decade *= 10.0;
    }

    // x ticks at each distinct p1
    let mut p_ticks: Vec<f64> = rows.iter().map(|r| r.p1).collect();
    p_ticks.sort_by(|a, b| b.partial_cmp(a).unwrap());
    p_ticks.dedup();
    for p1 in &p_ticks {
        let xx = x(*p1);
        let _ = writeln!(
            s,
            "<text x=\"{xx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{p1}</text>",
            MARGIN_TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">p1 (shift grows rightward)</text>",
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 10.0
    );

    for (gi, (lambda, v)) in groups.iter().enumerate() {
        let color = PALETTE[gi % PALETTE.len()];
        let mut pts = String::new();
        for r in v {
            let _ = write!(pts, "{:.2},{:.2} ", x(r.p1), y(r.arl));
        }
        let _ = writeln!(
            s,
            "<polyline class=\"arl-curve\" points=\"{}\" fill=\"none\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>",
            pts.trim_end()
        );
        for r in v {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>",
                x(r.p1),
                y(r.arl)
            );
        }
        // legend entry
        let ly = MARGIN_TOP + 10.0 + gi as f64 * 16.0;
        let lx = MARGIN_LEFT + pw - 110.0;
        let _ = writeln!(
            s,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>",
            lx + 22.0
        );
        let label = if *lambda == 1.0 {
            "Shewhart".to_string()
        } else {
            format!("lambda = {lambda}")
        };
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\">{label}</text>",
            lx + 28.0,
            ly + 4.0
        );
    }

    s.push_str("</svg>\n");
    s
}

/// Write the monitoring chart for `run` to `path`.
pub fn render_chart(run: &MonitoringRun, path: &Path) -> Result<()> {
    std::fs::write(path, chart_svg(run))?;
    Ok(())
}

/// Write ARL curves for `rows` to `path`.
pub fn render_arl_curves(rows: &[ArlTableRow], path: &Path) -> Result<()> {
    std::fs::write(path, arl_curves_svg(rows))?;
    Ok(())
}
