//! Minimal deterministic SVG emission for log-log convergence plots.
//!
//! Hand-rolled on purpose: the chart is a fixed-layout scatter with one
//! reference line, and byte-stable output matters more than styling
//! flexibility (files are compared verbatim in tests). Both axes are
//! logarithmic; the red reference line decays with slope 1/2 and is
//! anchored at the first data point.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 64.0;

const DATA_COLOR: &str = "#1f77b4";
const REFERENCE_COLOR: &str = "#d62728";

/// Renders `(n, error)` points on log-log axes with a red slope-1/2
/// reference line. Non-positive coordinates cannot be drawn on log axes
/// and are skipped.
pub fn log_log_plot(points: &[(f64, f64)], title: &str) -> String {
    let mut logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(n, e)| n > 0.0 && e > 0.0)
        .map(|&(n, e)| (n.log10(), e.log10()))
        .collect();
    logs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        xml_escape(title)
    );

    if logs.len() < 2 {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">not enough positive points to plot</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        out.push_str("</svg>\n");
        return out;
    }

    // Reference line through the first (coarsest-grid) point with slope -1/2
    // in log-log coordinates.
    let (x0, y0) = logs[0];
    let reference = |x: f64| y0 - 0.5 * (x - x0);

    let x_min = logs.first().unwrap().0;
    let x_max = logs.last().unwrap().0;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for &(_, y) in &logs {
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    y_min = y_min.min(reference(x_max));
    y_max = y_max.max(reference(x_min));
    let y_pad = 0.08 * (y_max - y_min).max(0.1);
    y_min -= y_pad;
    y_max += y_pad;

    let px =
        |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
    let py = |y: f64| {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    };

    // Frame.
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );

    // X ticks: one per data point, labelled with the grid size itself.
    for &(x, _) in &logs {
        let xp = px(x);
        let _ = writeln!(
            out,
            r#"<line x1="{xp:.2}" y1="{:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/>"#,
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 6.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{xp:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 20.0,
            format_tick(10f64.powf(x))
        );
    }

    // Y ticks: five even positions, labelled with the error value.
    for i in 0..5 {
        let y = y_min + (y_max - y_min) * i as f64 / 4.0;
        let yp = py(y);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{yp:.2}" x2="{MARGIN_LEFT}" y2="{yp:.2}" stroke="black"/>"#,
            MARGIN_LEFT - 6.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{:.2e}</text>"#,
            MARGIN_LEFT - 10.0,
            yp + 4.0,
            10f64.powf(y)
        );
    }

    // Axis labels.
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">grid size n (log)</text>"#,
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 18.0
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.2})">strong error (log)</text>"#,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0
    );

    // Red slope-1/2 reference line.
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{REFERENCE_COLOR}" stroke-width="1.5"/>"#,
        px(x_min),
        py(reference(x_min)),
        px(x_max),
        py(reference(x_max))
    );

    // Data polyline and markers.
    let path: Vec<String> =
        logs.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{DATA_COLOR}" stroke-width="1.5"/>"#,
        path.join(" ")
    );
    for &(x, y) in &logs {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{DATA_COLOR}"/>"#,
            px(x),
            py(y)
        );
    }

    // Legend.
    let legend_x = WIDTH - MARGIN_RIGHT - 170.0;
    let _ = writeln!(
        out,
        r#"<line x1="{legend_x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{DATA_COLOR}" stroke-width="1.5"/>"#,
        MARGIN_TOP + 14.0,
        legend_x + 26.0,
        MARGIN_TOP + 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">measured error</text>"#,
        legend_x + 32.0,
        MARGIN_TOP + 18.0
    );
    let _ = writeln!(
        out,
        r#"<line x1="{legend_x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{REFERENCE_COLOR}" stroke-width="1.5"/>"#,
        MARGIN_TOP + 32.0,
        legend_x + 26.0,
        MARGIN_TOP + 32.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">reference slope 1/2</text>"#,
        legend_x + 32.0,
        MARGIN_TOP + 36.0
    );

    out.push_str("</svg>\n");
    out
}

/// Grid sizes are powers of two in practice; print them as integers when
/// they are integral, otherwise with three significant digits.
fn format_tick(value: f64) -> String {
    let rounded = value.round();
    if (value - rounded).abs() < 1e-6 * value.abs().max(1.0) {
        format!("{}", rounded as i64)
    } else {
        format!("{value:.3}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
