//! SVG rendering of a single episode's paths.
//!
//! The plot shows the robot path, every human path, start and goal
//! markers, and dashed discomfort-radius circles (0.5 m) around the
//! final human positions. Output is deterministic: fixed scale, fixed
//! formatting, no timestamps.

use std::fmt::Write;

use crowdbench_core::Vec2;

use crate::ingest::PlotStep;

/// Pixels per meter.
const SCALE: f64 = 60.0;
/// World-space border around the content, m.
const MARGIN: f64 = 1.0;
/// Discomfort separation drawn around final human positions, m.
const DISCOMFORT_RADIUS: f64 = 0.5;

struct Frame {
    min: Vec2,
    max: Vec2,
}

impl Frame {
    /// Maps world coordinates to pixels, flipping y so world-up is
    /// screen-up.
    fn project(&self, p: Vec2) -> (f64, f64) {
        (
            (p.x - self.min.x + MARGIN) * SCALE,
            (self.max.y - p.y + MARGIN) * SCALE,
        )
    }

    fn width(&self) -> f64 {
        (self.max.x - self.min.x + 2.0 * MARGIN) * SCALE
    }

    fn height(&self) -> f64 {
        (self.max.y - self.min.y + 2.0 * MARGIN) * SCALE
    }
}

fn polyline(out: &mut String, frame: &Frame, points: &[Vec2], style: &str) {
    if points.is_empty() {
        return;
    }
    out.push_str("  <polyline points=\"");
    for (i, &p) in points.iter().enumerate() {
        let (x, y) = frame.project(p);
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:.3},{y:.3}");
    }
    let _ = writeln!(out, "\" fill=\"none\" {style}/>");
}

fn circle(out: &mut String, frame: &Frame, center: Vec2, radius_m: f64, style: &str) {
    let (cx, cy) = frame.project(center);
    let _ = writeln!(
        out,
        "  <circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{r:.3}\" {style}/>",
        r = radius_m * SCALE
    );
}

/// Renders one episode's log lines to SVG.
///
/// `goal` positions the goal marker; when absent the robot's final
/// position stands in for it. Returns an empty drawing for an empty
/// step list.
pub fn episode_svg(steps: &[PlotStep], goal: Option<Vec2>) -> String {
    let robot: Vec<Vec2> = steps
        .iter()
        .map(|s| Vec2::new(s.robot[0], s.robot[1]))
        .collect();
    let human_count = steps.first().map_or(0, |s| s.humans.len());
    let humans: Vec<Vec<Vec2>> = (0..human_count)
        .map(|i| {
            steps
                .iter()
                .filter_map(|s| s.humans.get(i))
                .map(|&[x, y]| Vec2::new(x, y))
                .collect()
        })
        .collect();
    let goal = goal.or_else(|| robot.last().copied());

    let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut include = |p: Vec2| {
        min = Vec2::new(min.x.min(p.x), min.y.min(p.y));
        max = Vec2::new(max.x.max(p.x), max.y.max(p.y));
    };
    for &p in robot.iter().chain(humans.iter().flatten()) {
        include(p);
    }
    if let Some(g) = goal {
        include(g);
    }
    if !min.x.is_finite() {
        min = Vec2::ZERO;
        max = Vec2::ZERO;
    }
    let frame = Frame { min, max };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w:.3} {h:.3}\" \
         width=\"{w:.3}\" height=\"{h:.3}\">",
        w = frame.width(),
        h = frame.height()
    );
    let _ = writeln!(
        out,
        "  <rect width=\"{w:.3}\" height=\"{h:.3}\" fill=\"white\"/>",
        w = frame.width(),
        h = frame.height()
    );

    for path in &humans {
        polyline(&mut out, &frame, path, "stroke=\"#9e9e9e\" stroke-width=\"1.5\"");
        if let Some(&last) = path.last() {
            circle(
                &mut out,
                &frame,
                last,
                DISCOMFORT_RADIUS,
                "fill=\"none\" stroke=\"#e57373\" stroke-width=\"1\" stroke-dasharray=\"4 3\"",
            );
            circle(&mut out, &frame, last, 0.1, "fill=\"#9e9e9e\"");
        }
    }
    polyline(&mut out, &frame, &robot, "stroke=\"#1565c0\" stroke-width=\"2.5\"");
    if let Some(&start) = robot.first() {
        circle(&mut out, &frame, start, 0.15, "fill=\"#2e7d32\"");
    }
    if let Some(g) = goal {
        circle(
            &mut out,
            &frame,
            g,
            0.15,
            "fill=\"none\" stroke=\"#2e7d32\" stroke-width=\"2\"",
        );
    }
    out.push_str("</svg>\n");
    out
}
