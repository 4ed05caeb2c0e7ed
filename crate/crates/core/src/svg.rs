//! Three-panel SVG rendering of a run: physical, mapped and model layers.

use std::fmt::Write as _;

use crate::engine::TrajectoryLog;
use crate::geom::{ConvexObstacle, Vec2};
use crate::world::World;

const PANEL: f64 = 360.0;
const MARGIN: f64 = 16.0;
const TITLE: f64 = 22.0;

/// Maps world coordinates into one panel.
struct Frame {
    lo: Vec2,
    scale: f64,
    height: f64,
    offset_x: f64,
}

impl Frame {
    fn new(world: &World, index: usize) -> Frame {
        let vs = world.boundary.vertices();
        let (mut lo, mut hi) = (vs[0], vs[0]);
        for v in vs {
            lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        let scale = PANEL / (hi.x - lo.x).max(hi.y - lo.y);
        Frame {
            lo,
            scale,
            height: hi.y - lo.y,
            offset_x: MARGIN + index as f64 * (PANEL + MARGIN),
        }
    }

    fn pt(&self, p: Vec2) -> (f64, f64) {
        (
            self.offset_x + (p.x - self.lo.x) * self.scale,
            TITLE + MARGIN + (self.height - (p.y - self.lo.y)) * self.scale,
        )
    }

    fn len(&self, l: f64) -> f64 {
        l * self.scale
    }
}

fn points_attr(frame: &Frame, pts: impl IntoIterator<Item = Vec2>) -> String {
    let mut s = String::new();
    for p in pts {
        let (x, y) = frame.pt(p);
        let _ = write!(s, "{x:.2},{y:.2} ");
    }
    s.pop();
    s
}

fn polygon(out: &mut String, frame: &Frame, pts: &[Vec2], style: &str) {
    let _ = writeln!(out, r#"<polygon points="{}" {style}/>"#, points_attr(frame, pts.iter().copied()));
}

fn circle(out: &mut String, frame: &Frame, c: Vec2, r: f64, style: &str) {
    let (x, y) = frame.pt(c);
    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" {style}/>"#, frame.len(r));
}

fn polyline(out: &mut String, frame: &Frame, pts: impl IntoIterator<Item = Vec2>, style: &str) {
    let attr = points_attr(frame, pts);
    if !attr.is_empty() {
        let _ = writeln!(out, r#"<polyline points="{attr}" fill="none" {style}/>"#);
    }
}

fn convex(out: &mut String, frame: &Frame, o: &ConvexObstacle, style: &str) {
    match o {
        ConvexObstacle::Disk { center, radius } => circle(out, frame, *center, *radius, style),
        ConvexObstacle::Polygon(p) => polygon(out, frame, p.vertices(), style),
    }
}

fn panel_start(out: &mut String, frame: &Frame, world: &World, title: &str) {
    let (x, _) = frame.pt(frame.lo);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14">{title}</text>"#, x, TITLE);
    polygon(out, frame, world.boundary.vertices(), r##"fill="#ffffff" stroke="#000000" stroke-width="1.5""##);
}

fn goal_marker(out: &mut String, frame: &Frame, goal: Vec2) {
    let (x, y) = frame.pt(goal);
    let _ = writeln!(
        out,
        r##"<path d="M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}" stroke="#d62728" stroke-width="2"/>"##,
        x - 5.0,
        y - 5.0,
        x + 5.0,
        y + 5.0,
        x - 5.0,
        y + 5.0,
        x + 5.0,
        y - 5.0
    );
}

/// Renders `log` in the physical, mapped and model layers side by side.
///
/// `discovered` lists the familiar obstacles in the final map and
/// `fragments` the last sensed points of unrecognised obstacles.
pub fn render_layers(world: &World, log: &TrajectoryLog, discovered: &[usize], fragments: &[Vec2]) -> String {
    let frames: Vec<Frame> = (0..3).map(|i| Frame::new(world, i)).collect();
    let width = 3.0 * PANEL + 4.0 * MARGIN;
    let height = frames[0].len(frames[0].height) + TITLE + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let path_style = r##"stroke="#1f77b4" stroke-width="1.5""##;

    let f = &frames[0];
    out.push_str("<g id=\"physical\">\n");
    panel_start(&mut out, f, world, "physical");
    for o in &world.familiar {
        polygon(&mut out, f, &o.raw_vertices, r##"fill="#7f7f7f" stroke="none""##);
        polygon(&mut out, f, &o.vertices, r##"fill="none" stroke="#7f7f7f" stroke-dasharray="3,3""##);
    }
    for o in &world.unknown {
        convex(&mut out, f, o, r##"fill="#c49c94" stroke="#8c564b""##);
    }
    polyline(&mut out, f, log.path(), path_style);
    if let Some(last) = log.rows.last() {
        circle(&mut out, f, last.x, world.robot_radius.max(0.02), r##"fill="#aec7e8" stroke="#1f77b4""##);
    }
    goal_marker(&mut out, f, world.goal);
    out.push_str("</g>\n");

    let f = &frames[1];
    out.push_str("<g id=\"mapped\">\n");
    panel_start(&mut out, f, world, "mapped");
    for &k in discovered {
        polygon(&mut out, f, &world.familiar[k].vertices, r##"fill="#98df8a" stroke="#2ca02c""##);
        circle(&mut out, f, world.familiar[k].placed.center, 0.05, r##"fill="#2ca02c""##);
    }
    for &p in fragments {
        circle(&mut out, f, p, 0.03, r##"fill="#8c564b""##);
    }
    polyline(&mut out, f, log.path(), path_style);
    goal_marker(&mut out, f, world.goal);
    out.push_str("</g>\n");

    let f = &frames[2];
    out.push_str("<g id=\"model\">\n");
    panel_start(&mut out, f, world, "model");
    for &k in discovered {
        let star = &world.familiar[k].placed;
        circle(&mut out, f, star.center, star.rho, r##"fill="#98df8a" stroke="#2ca02c""##);
    }
    for &p in fragments {
        circle(&mut out, f, p, 0.03, r##"fill="#8c564b""##);
    }
    polyline(&mut out, f, log.model_path(), path_style);
    goal_marker(&mut out, f, world.goal);
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, RobotKind, SimParams};
    use crate::world::MapMode;

    #[test]
    fn three_panels_parse() {
        let mut world = World::empty(5.0, Vec2::ZERO, 4.0);
        world.unknown.push(ConvexObstacle::Disk {
            center: Vec2::new(1.5, 0.2),
            radius: 0.4,
        });
        let (result, log) = run(&world, &SimParams::default(), RobotKind::Full, MapMode::Semantic, Vec2::new(3.0, 0.0), 0.0, true);
        let doc = render_layers(&world, &log, &[], &result.final_fragments);
        let xml = roxmltree::Document::parse(&doc).unwrap();
        let ids: Vec<_> = xml
            .descendants()
            .filter(|n| n.has_tag_name("g"))
            .filter_map(|n| n.attribute("id"))
            .collect();
        assert_eq!(ids, ["physical", "mapped", "model"]);
        assert_eq!(xml.descendants().filter(|n| n.has_tag_name("polyline")).count(), 3);
    }
}
