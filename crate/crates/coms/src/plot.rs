//! SVG figure emission: reward-heatmap scatter plots and gradient-field
//! quiver plots over the design box. Figures are plain marker/rect/line
//! primitives written directly; output bytes are deterministic given the
//! inputs.

use std::fmt::Write as _;

use crate::data::{ground_truth_reward, LabeledPoint};
use crate::nnet::ScalarField;
use crate::Vec2;

/// Plotted region, matching the sampler prior box.
pub const PLOT_LO: f64 = -1.5;
pub const PLOT_HI: f64 = 2.0;

const CANVAS: f64 = 700.0;
const HEATMAP_CELLS: usize = 100;

/// Default quiver grid resolution per axis.
pub const DEFAULT_QUIVER_GRID: usize = 25;

/// World coordinates to canvas pixels; the y axis flips so rewards plot the
/// usual way up.
fn to_px(x: Vec2) -> (f64, f64) {
    let sx = (x[0] - PLOT_LO) / (PLOT_HI - PLOT_LO) * CANVAS;
    let sy = CANVAS - (x[1] - PLOT_LO) / (PLOT_HI - PLOT_LO) * CANVAS;
    (sx, sy)
}

/// Linear two-color ramp from dark violet to yellow.
fn ramp(frac: f64) -> String {
    let f = frac.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(48.0, 253.0),
        lerp(18.0, 231.0),
        lerp(59.0, 37.0)
    )
}

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
        c = CANVAS
    );
}

fn heatmap(out: &mut String) {
    let cell = CANVAS / HEATMAP_CELLS as f64;
    let world_cell = (PLOT_HI - PLOT_LO) / HEATMAP_CELLS as f64;
    // Reward on this grid spans [~0, 2]; normalize by the grid extrema so
    // the ramp fills its range.
    let mut values = Vec::with_capacity(HEATMAP_CELLS * HEATMAP_CELLS);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in 0..HEATMAP_CELLS {
        for col in 0..HEATMAP_CELLS {
            let x = [
                PLOT_LO + world_cell * (col as f64 + 0.5),
                PLOT_HI - world_cell * (row as f64 + 0.5),
            ];
            let r = ground_truth_reward(x);
            min = min.min(r);
            max = max.max(r);
            values.push(r);
        }
    }
    let span = (max - min).max(f64::MIN_POSITIVE);
    let _ = writeln!(out, r#"<g shape-rendering="crispEdges">"#);
    for (i, r) in values.iter().enumerate() {
        let (row, col) = (i / HEATMAP_CELLS, i % HEATMAP_CELLS);
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            col as f64 * cell,
            row as f64 * cell,
            cell,
            cell,
            ramp((r - min) / span)
        );
    }
    let _ = writeln!(out, "</g>");
}

fn frame(out: &mut String) {
    let _ = writeln!(
        out,
        r##"<rect x="0.5" y="0.5" width="{w:.1}" height="{w:.1}" fill="none" stroke="#333" stroke-width="1"/>"##,
        w = CANVAS - 1.0
    );
    let _ = writeln!(
        out,
        r##"<text x="4" y="{:.0}" font-size="12" fill="#333">({lo}, {lo})</text>"##,
        CANVAS - 6.0,
        lo = PLOT_LO
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.0}" y="14" font-size="12" fill="#333" text-anchor="end">({hi}, {hi})</text>"##,
        CANVAS - 4.0,
        hi = PLOT_HI
    );
}

/// Scatter figure: ground-truth reward heatmap, dataset points in orange,
/// generated samples as black crosses.
pub fn scatter_svg(data: &[LabeledPoint], samples: &[Vec2]) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    heatmap(&mut out);
    for p in data {
        let (cx, cy) = to_px(p.x);
        let _ = writeln!(
            out,
            r##"<circle class="data" cx="{cx:.2}" cy="{cy:.2}" r="3" fill="#ff7f0e" fill-opacity="0.85"/>"##
        );
    }
    for &s in samples {
        let (cx, cy) = to_px(s);
        let _ = writeln!(
            out,
            r#"<path class="sample" d="M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}" stroke="black" stroke-width="1.6" fill="none"/>"#,
            cx - 4.0,
            cy - 4.0,
            cx + 4.0,
            cy + 4.0,
            cx - 4.0,
            cy + 4.0,
            cx + 4.0,
            cy - 4.0
        );
    }
    frame(&mut out);
    out.push_str("</svg>\n");
    out
}

/// Field gradient evaluated on an `n x n` grid of cell centers over
/// `[lo, hi]^2`; returns `(point, gradient)` pairs in row-major order.
pub fn quiver_grid(field: &dyn ScalarField, n: usize, lo: f64, hi: f64) -> Vec<(Vec2, Vec2)> {
    let cell = (hi - lo) / n as f64;
    let mut arrows = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let x = [
                lo + cell * (col as f64 + 0.5),
                lo + cell * (row as f64 + 0.5),
            ];
            arrows.push((x, field.grad(x)));
        }
    }
    arrows
}

/// Mean cosine similarity between grid gradients and the direction from
/// each grid point toward the origin, restricted to `||x|| < radius`.
/// Close to 1 means the field climbs straight toward the center.
pub fn mean_alignment_to_origin(arrows: &[(Vec2, Vec2)], radius: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, g) in arrows {
        let xn = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if xn >= radius || xn == 0.0 {
            continue;
        }
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gn == 0.0 {
            continue;
        }
        // Direction to origin is -x / ||x||.
        sum += (-(x[0] * g[0]) - x[1] * g[1]) / (xn * gn);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Quiver figure of the field gradient: arrows scaled so the largest one
/// spans a grid cell; exact zero gradients render as dots.
pub fn quiver_svg(field: &dyn ScalarField, n: usize) -> String {
    let arrows = quiver_grid(field, n, PLOT_LO, PLOT_HI);
    let cell_px = CANVAS / n as f64;
    let max_norm = arrows
        .iter()
        .map(|(_, g)| (g[0] * g[0] + g[1] * g[1]).sqrt())
        .fold(0.0f64, f64::max);

    let mut out = String::new();
    svg_open(&mut out);
    let _ = writeln!(
        out,
        r##"<defs><marker id="head" viewBox="0 0 6 6" refX="5" refY="3" markerWidth="4" markerHeight="4" orient="auto"><path d="M 0 0 L 6 3 L 0 6 z" fill="#1f4e9c"/></marker></defs>"##
    );
    let _ = writeln!(
        out,
        r##"<rect width="{c}" height="{c}" fill="#fafafa"/>"##,
        c = CANVAS
    );
    for (x, g) in &arrows {
        let (cx, cy) = to_px(*x);
        let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if norm == 0.0 || max_norm == 0.0 {
            let _ = writeln!(
                out,
                r##"<circle class="arrow-dot" cx="{cx:.2}" cy="{cy:.2}" r="1.5" fill="#1f4e9c"/>"##
            );
            continue;
        }
        let scale = cell_px * (norm / max_norm) / norm;
        // Canvas y points down, so the world dy flips sign.
        let tip_x = cx + g[0] * scale;
        let tip_y = cy - g[1] * scale;
        let _ = writeln!(
            out,
            r##"<line class="arrow" x1="{cx:.2}" y1="{cy:.2}" x2="{tip_x:.2}" y2="{tip_y:.2}" stroke="#1f4e9c" stroke-width="1.2" marker-end="url(#head)"/>"##
        );
    }
    frame(&mut out);
    out.push_str("</svg>\n");
    out
}
