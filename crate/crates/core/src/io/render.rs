//! SVG rendering of a deformation: deformed grid lines, both boundaries, and
//! cells filled by the local distortion k(|DΦ|²).

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use crate::deformation::{k_field, DiffeoMap};
use crate::error::Result;
use crate::grid::{Chart, Topology};

use super::snapshot::write_atomic;

/// k at or below this value gets the zero colour.
pub const K_FLOOR: f64 = 1e-6;
/// k at or above this value gets the full colour.
pub const K_CEIL: f64 = 10.0;
/// Every this many lattice lines is drawn.
const LINE_STRIDE: usize = 4;
const OUTLINE_SAMPLES: usize = 256;

/// Colour for k on the fixed scale: white at K_FLOOR, through amber to dark
/// red at K_CEIL, linear in log10 k.
pub fn k_color(k: f64) -> String {
    let t = if k <= K_FLOOR {
        0.0
    } else {
        ((k.log10() - K_FLOOR.log10()) / (K_CEIL.log10() - K_FLOOR.log10())).clamp(0.0, 1.0)
    };
    let lerp = |a: [f64; 3], b: [f64; 3], s: f64| [0, 1, 2].map(|c| a[c] + s * (b[c] - a[c]));
    let (white, amber, red) = ([255.0, 255.0, 255.0], [250.0, 190.0, 60.0], [150.0, 0.0, 20.0]);
    let c = if t < 0.5 { lerp(white, amber, 2.0 * t) } else { lerp(amber, red, 2.0 * t - 1.0) };
    format!("#{:02x}{:02x}{:02x}", c[0].round() as u8, c[1].round() as u8, c[2].round() as u8)
}

/// Closed boundary curve of a chart.
fn outline(chart: &Chart<f64>) -> Vec<[f64; 2]> {
    match chart.topology() {
        Topology::Polar => {
            (0..OUTLINE_SAMPLES).map(|s| chart.map_reference([1.0, TAU * s as f64 / OUTLINE_SAMPLES as f64])).collect()
        }
        Topology::Rect => {
            let side = OUTLINE_SAMPLES / 4;
            let mut pts = Vec::with_capacity(4 * side);
            for s in 0..side {
                let t = s as f64 / side as f64;
                pts.push(chart.map_reference([t, 0.0]));
            }
            for s in 0..side {
                let t = s as f64 / side as f64;
                pts.push(chart.map_reference([1.0, t]));
            }
            for s in 0..side {
                let t = s as f64 / side as f64;
                pts.push(chart.map_reference([1.0 - t, 1.0]));
            }
            for s in 0..side {
                let t = s as f64 / side as f64;
                pts.push(chart.map_reference([0.0, 1.0 - t]));
            }
            pts
        }
    }
}

/// Lattice index lines to draw along one direction: every stride-th line
/// plus the last one.
fn strided(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).step_by(LINE_STRIDE).collect();
    if v.last() != Some(&(n - 1)) {
        v.push(n - 1);
    }
    v
}

fn points_attr(pts: &[[f64; 2]]) -> String {
    let mut s = String::with_capacity(24 * pts.len());
    for p in pts {
        // SVG y grows downwards
        let _ = write!(s, "{:.6},{:.6} ", p[0], -p[1]);
    }
    s.pop();
    s
}

/// SVG text for `phi`.
pub fn svg_string(phi: &DiffeoMap<f64>) -> String {
    let chart = phi.source().as_ref();
    let (nu, nv) = chart.shape();
    let image = |i: usize, j: usize| phi.image(chart.index(i, j));
    let k = k_field(phi);
    let kk = |i: usize, j: usize| k.get(chart.index(i, j));
    let src_outline = outline(chart);
    let tgt_outline = outline(phi.target());

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in src_outline.iter().chain(&tgt_outline).copied().chain(phi.images()) {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let pad = 0.05 * extent;
    let stroke = 0.002 * extent;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        "<!-- Cell fill: k(|DPhi|^2) = (g11 - g22)^2 + 4 g12^2 averaged over the cell corners, on a fixed \
         logarithmic scale: k <= {K_FLOOR:e} is white (#ffffff), log10 k rises linearly through amber (#fabe3c) \
         at the midpoint to dark red (#960014) at k >= {K_CEIL:e}. Blue lines: every {LINE_STRIDE}th deformed \
         grid line. Dashed grey: source boundary. Black: target boundary. -->"
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}" width="800" height="800">"#,
        lo[0] - pad,
        -hi[1] - pad,
        hi[0] - lo[0] + 2.0 * pad,
        hi[1] - lo[1] + 2.0 * pad
    );

    let _ = writeln!(s, r#"<g stroke="none">"#);
    let mut cell = |corners: &[(usize, usize)]| {
        let pts: Vec<[f64; 2]> = corners.iter().map(|&(i, j)| image(i, j)).collect();
        let mean = corners.iter().map(|&(i, j)| kk(i, j)).sum::<f64>() / corners.len() as f64;
        let _ = writeln!(s, r#"<polygon points="{}" fill="{}"/>"#, points_attr(&pts), k_color(mean));
    };
    match chart.topology() {
        Topology::Polar => {
            let centre: Vec<(usize, usize)> = (0..nv).map(|j| (0, j)).collect();
            cell(&centre);
            for i in 0..nu - 1 {
                for j in 0..nv {
                    let jn = (j + 1) % nv;
                    cell(&[(i, j), (i, jn), (i + 1, jn), (i + 1, j)]);
                }
            }
        }
        Topology::Rect => {
            for i in 0..nu - 1 {
                for j in 0..nv - 1 {
                    cell(&[(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)]);
                }
            }
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g fill="none" stroke="#2456a4" stroke-width="{stroke:.6}">"##);
    let closed = chart.topology() == Topology::Polar;
    for i in strided(nu) {
        let pts: Vec<[f64; 2]> = (0..nv).map(|j| image(i, j)).collect();
        let tag = if closed { "polygon" } else { "polyline" };
        let _ = writeln!(s, r#"<{tag} points="{}"/>"#, points_attr(&pts));
    }
    let spokes: Vec<usize> = if closed { (0..nv).step_by(LINE_STRIDE).collect() } else { strided(nv) };
    for j in spokes {
        let pts: Vec<[f64; 2]> = (0..nu).map(|i| image(i, j)).collect();
        let _ = writeln!(s, r#"<polyline points="{}"/>"#, points_attr(&pts));
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="none" stroke="#808080" stroke-dasharray="{:.6}" stroke-width="{:.6}"/>"##,
        points_attr(&src_outline),
        4.0 * stroke,
        stroke
    );
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="none" stroke="#000000" stroke-width="{:.6}"/>"##,
        points_attr(&tgt_outline),
        1.5 * stroke
    );
    let _ = writeln!(s, "</svg>");
    s
}

pub fn render_svg(phi: &DiffeoMap<f64>, out_path: &Path) -> Result<()> {
    write_atomic(out_path, svg_string(phi).as_bytes())
}
