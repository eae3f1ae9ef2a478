//! Static SVG overlay plots: empirical density versus the macroscopic
//! reference profile on a shared axis, with a legend. No interactivity, no
//! external assets; coordinates are written with fixed precision so the
//! output is byte-deterministic.

use slowbond_core::observables::DensityField;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 52.0;

const EMPIRICAL_COLOR: &str = "#1f77b4";
const REFERENCE_COLOR: &str = "#d62728";

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, u: f64) -> f64 {
        MARGIN_LEFT + (u - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn polyline(frame: &Frame, field: &DensityField, color: &str, dashed: bool) -> String {
    let mut points = String::new();
    for (u, v) in field.centers().zip(field.values()) {
        if !points.is_empty() {
            points.push(' ');
        }
        points.push_str(&format!("{:.2},{:.2}", frame.x(u), frame.y(*v)));
    }
    let dash = if dashed { " stroke-dasharray=\"7,4\"" } else { "" };
    format!(
        "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash} points=\"{points}\"/>\n"
    )
}

/// Render one overlay: the empirical profile as a solid line, the reference
/// profile dashed, with axes, tick labels, a title, and a legend.
pub fn overlay_svg(title: &str, empirical: &DensityField, reference: &DensityField) -> String {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for field in [empirical, reference] {
        x_min = x_min.min(field.left_edge());
        x_max = x_max.max(field.right_edge());
        for &v in field.values() {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if !x_min.is_finite() || x_max <= x_min {
        x_min = -1.0;
        x_max = 1.0;
    }
    // Densities live in [0, 1]; keep that band visible and pad a little.
    y_min = y_min.min(0.0);
    y_max = y_max.max(1.0);
    let pad = 0.05 * (y_max - y_min);
    let frame = Frame {
        x_min,
        x_max,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Axes.
    let x0 = frame.x(x_min);
    let x1 = frame.x(x_max);
    let y0 = frame.y(frame.y_min);
    let y1 = frame.y(frame.y_max);
    svg.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\" stroke=\"black\"/>\n"
    ));
    // Interface marker at u = 0 when it is inside the frame.
    if x_min < 0.0 && 0.0 < x_max {
        let xi = frame.x(0.0);
        svg.push_str(&format!(
            "  <line x1=\"{xi:.2}\" y1=\"{y0:.2}\" x2=\"{xi:.2}\" y2=\"{y1:.2}\" \
             stroke=\"#bbbbbb\" stroke-width=\"0.8\"/>\n"
        ));
    }

    // Tick labels: x extremes and zero, y extremes.
    for (u, anchor) in [(x_min, "start"), (x_max, "end")] {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"{anchor}\">{u:.2}</text>\n",
            frame.x(u),
            y0 + 18.0
        ));
    }
    if x_min < 0.0 && 0.0 < x_max {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">0</text>\n",
            frame.x(0.0),
            y0 + 18.0
        ));
    }
    for v in [frame.y_min, frame.y_max] {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.2}</text>\n",
            x0 - 8.0,
            frame.y(v) + 4.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">u</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    ));

    // Title.
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        (x0 + x1) / 2.0,
        escape(title)
    ));

    // Curves.
    svg.push_str(&polyline(&frame, empirical, EMPIRICAL_COLOR, false));
    svg.push_str(&polyline(&frame, reference, REFERENCE_COLOR, true));

    // Legend (top right).
    let lx = WIDTH - MARGIN_RIGHT - 190.0;
    let ly = MARGIN_TOP + 10.0;
    svg.push_str(&format!(
        "  <rect x=\"{lx:.2}\" y=\"{ly:.2}\" width=\"182\" height=\"44\" fill=\"white\" \
         stroke=\"#888888\"/>\n"
    ));
    for (i, (color, dashed, label)) in [
        (EMPIRICAL_COLOR, false, "ensemble density"),
        (REFERENCE_COLOR, true, "macroscopic profile"),
    ]
    .into_iter()
    .enumerate()
    {
        let yy = ly + 14.0 + 18.0 * i as f64;
        let dash = if dashed { " stroke-dasharray=\"7,4\"" } else { "" };
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"{color}\" \
             stroke-width=\"1.8\"{dash}/>\n",
            lx + 8.0,
            lx + 40.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\">{label}</text>\n",
            lx + 48.0,
            yy + 4.0
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
