//! Orthographic SVG plots of agent paths.
//!
//! The northern hemisphere (`z ≥ 0`) is drawn on the left as seen from
//! above, the southern one on the right as seen from below. Starts are
//! stars, ends are circles.

use std::f64::consts::PI;
use std::fmt::Write;

use ringform::dynamics::Trajectory;
use ringform::sphere_geom::Vec3;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const RADIUS: f64 = 190.0;
const CENTERS: [(f64, f64); 2] = [(225.0, 250.0), (675.0, 250.0)];
/// Recorded points kept per agent; longer paths are thinned with a fixed stride.
const MAX_POINTS: usize = 1500;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    "#bcbd22", "#7f7f7f",
];

fn hemisphere(p: &Vec3) -> usize {
    usize::from(p.z < 0.0)
}

fn project(p: &Vec3, side: usize) -> (f64, f64) {
    let (cx, cy) = CENTERS[side];
    // seen from below the x axis is mirrored
    let x = if side == 0 { p.x } else { -p.x };
    (cx + RADIUS * x, cy - RADIUS * p.y)
}

/// Polylines per hemisphere, split where the path crosses the equator.
fn split_path(points: &[Vec3]) -> Vec<(usize, Vec<Vec3>)> {
    let mut pieces: Vec<(usize, Vec<Vec3>)> = Vec::new();
    for (k, p) in points.iter().enumerate() {
        let side = hemisphere(p);
        match pieces.last_mut() {
            Some((s, piece)) if *s == side => piece.push(*p),
            Some((_, piece)) => {
                let q = points[k - 1];
                let t = q.z / (q.z - p.z);
                let crossing = (q + (p - q) * t).normalize();
                piece.push(crossing);
                pieces.push((side, vec![crossing, *p]));
            }
            None => pieces.push((side, vec![*p])),
        }
    }
    pieces
}

fn star(x: f64, y: f64, r: f64) -> String {
    (0..10)
        .map(|k| {
            let rad = if k % 2 == 0 { r } else { 0.45 * r };
            let a = -PI / 2.0 + k as f64 * PI / 5.0;
            format!("{:.2},{:.2}", x + rad * a.cos(), y + rad * a.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn draw_frame(svg: &mut String) {
    for (side, title) in ["northern hemisphere (φ ≥ 0)", "southern hemisphere (φ ≤ 0)"]
        .iter()
        .enumerate()
    {
        let (cx, cy) = CENTERS[side];
        let _ = writeln!(
            svg,
            r##"<circle cx="{cx}" cy="{cy}" r="{RADIUS}" fill="#f7f7f7" stroke="#000" stroke-width="1.2"/>"##
        );
        for lat in [30.0f64, 60.0] {
            let r = RADIUS * lat.to_radians().cos();
            let _ = writeln!(
                svg,
                r##"<circle cx="{cx}" cy="{cy}" r="{r:.2}" fill="none" stroke="#bbb" stroke-dasharray="3,3"/>"##
            );
            let label = if side == 0 { lat } else { -lat };
            let _ = writeln!(
                svg,
                r##"<text x="{:.2}" y="{:.2}" font-size="10" fill="#666">{label}°</text>"##,
                cx + 3.0,
                cy - r - 2.0
            );
        }
        for lon in [0.0f64, 90.0, 180.0, -90.0] {
            let (x, y) = project(
                &Vec3::new(lon.to_radians().cos(), lon.to_radians().sin(), 0.0),
                side,
            );
            let (ex, ey) = (x + 0.09 * (x - cx), y + 0.09 * (y - cy));
            let _ = writeln!(
                svg,
                r##"<line x1="{cx}" y1="{cy}" x2="{x:.2}" y2="{y:.2}" stroke="#ddd"/>"##
            );
            let _ = writeln!(
                svg,
                r##"<text x="{ex:.2}" y="{:.2}" font-size="11" text-anchor="middle" fill="#333">{lon}°</text>"##,
                ey + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r##"<text x="{cx}" y="28" font-size="14" text-anchor="middle" fill="#000">{title}</text>"##
        );
    }
}

pub fn render_paths(traj: &Trajectory) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#fff"/>"##
    );
    draw_frame(&mut svg);

    let stride = traj.records.len().div_ceil(MAX_POINTS).max(1);
    let last = traj.records.len() - 1;
    let kept: Vec<usize> = (0..=last)
        .step_by(stride)
        .chain((!last.is_multiple_of(stride)).then_some(last))
        .collect();
    let n = traj.records[0].state.n();
    for i in 0..n {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<Vec3> = kept
            .iter()
            .map(|&k| *traj.records[k].state[i].vector())
            .collect();
        let _ = writeln!(svg, r#"<g class="agent" id="agent-{}">"#, i + 1);
        for (side, piece) in split_path(&path) {
            let pts: Vec<String> = piece
                .iter()
                .map(|p| {
                    let (x, y) = project(p, side);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="path" points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        let start = path[0];
        let (sx, sy) = project(&start, hemisphere(&start));
        let _ = writeln!(
            svg,
            r##"<polygon class="start" points="{}" fill="{colour}" stroke="#000" stroke-width="0.6"/>"##,
            star(sx, sy, 7.0)
        );
        let end = path[path.len() - 1];
        let (ex, ey) = project(&end, hemisphere(&end));
        let _ = writeln!(
            svg,
            r##"<circle class="end" cx="{ex:.2}" cy="{ey:.2}" r="5" fill="{colour}" stroke="#000" stroke-width="0.6"/>"##
        );
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(
        svg,
        r##"<text x="{}" y="{}" font-size="12" text-anchor="middle" fill="#333">star: start, circle: end</text>"##,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_splits_the_path() {
        let path = [
            Vec3::new(1.0, 0.0, 0.1).normalize(),
            Vec3::new(1.0, 0.0, -0.1).normalize(),
        ];
        let pieces = split_path(&path);
        assert_eq!(pieces.len(), 2);
        assert_eq!((pieces[0].0, pieces[1].0), (0, 1));
        assert!(pieces[0].1[1].z.abs() < 1e-15);
        assert_eq!(pieces[0].1[1], pieces[1].1[0]);
    }

    #[test]
    fn southern_view_is_mirrored() {
        let p = Vec3::new(0.5, 0.5, -0.7);
        let (x, _) = project(&p, 1);
        assert!(x < CENTERS[1].0);
    }
}
