//! Simplex scatter of per-draw region probabilities as a standalone SVG.

use std::fmt::Write;

use crate::decision::{region_probs, simplex_coordinates, DecisionTriple};

const WIDTH: f64 = 600.0;
const HEIGHT: f64 = 560.0;
const SIDE: f64 = 500.0;
const LEFT_X: f64 = 50.0;
const BASE_Y: f64 = 480.0;

/// Simplex position of every draw `(delta0, sigma0, nu)` against a ROPE of
/// `halfwidth` on the same scale as the draws.
pub fn simplex_points(draws: impl IntoIterator<Item = (f64, f64, f64)>, halfwidth: f64) -> Vec<(f64, f64)> {
    draws
        .into_iter()
        .map(|(d, s, nu)| simplex_coordinates(region_probs(d, s, nu, halfwidth)))
        .collect()
}

fn to_px((x, y): (f64, f64)) -> (f64, f64) {
    (LEFT_X + SIDE * x, BASE_Y - SIDE * y)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the triangle with one dot per point. The left vertex carries
/// `left_label` (the system favoured by negative differences), the right
/// vertex `right_label`. Output depends only on the inputs.
pub fn render_simplex_svg(
    points: &[(f64, f64)],
    left_label: &str,
    right_label: &str,
    triple: &DecisionTriple,
) -> String {
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="14">"#
    );
    let (lx, ly) = to_px((0.0, 0.0));
    let (tx, ty) = to_px((0.5, 0.75f64.sqrt()));
    let (rx, ry) = to_px((1.0, 0.0));
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<polygon points="{lx:.2},{ly:.2} {tx:.2},{ty:.2} {rx:.2},{ry:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#
    );
    let _ = writeln!(svg, r##"<g fill="#1f5fa8" fill-opacity="0.15">"##);
    for &p in points {
        let (x, y) = to_px(p);
        let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2"/>"#);
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        lx,
        ly + 22.0,
        escape(left_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        rx,
        ry + 22.0,
        escape(right_label)
    );
    let _ = writeln!(svg, r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">rope</text>"#, ty - 12.0);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="start" font-size="12">p = {:.3}</text>"#,
        lx - 40.0,
        ly + 42.0,
        triple.p_left
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="12">p = {:.3}</text>"#,
        rx + 40.0,
        ry + 42.0,
        triple.p_right
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="start" font-size="12">p = {:.3}</text>"#,
        tx + 14.0,
        ty + 4.0,
        triple.p_rope
    );
    let _ = writeln!(svg, "</svg>");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_heavy_draws_sit_on_left_vertex() {
        let draws = vec![(-1.0, 0.001, 5.0); 10];
        let pts = simplex_points(draws, 0.01);
        for (x, y) in pts {
            assert!(x.abs() < 1e-12 && y.abs() < 1e-12);
        }
    }

    #[test]
    fn rendering_is_deterministic_and_escaped() {
        let t = DecisionTriple::from_counts(1, 2, 3);
        let pts = vec![(0.2, 0.1), (0.5, 0.4)];
        let a = render_simplex_svg(&pts, "B<1>", "A&co", &t);
        let b = render_simplex_svg(&pts, "B<1>", "A&co", &t);
        assert_eq!(a, b);
        assert!(a.contains("B&lt;1&gt;") && a.contains("A&amp;co"));
        assert_eq!(a.matches("<circle").count(), 2);
    }
}
