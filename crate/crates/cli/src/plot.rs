//! Top-view SVG of a trajectory file.

use std::fmt::Write as _;

use crate::trajectory::Trajectory;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

pub struct Series {
    pub name: &'static str,
    pub color: &'static str,
    pub points: Vec<[f64; 2]>,
}

/// Truth, network and filter points, in that order.
pub fn series(traj: &Trajectory) -> [Series; 3] {
    [
        Series {
            name: "ground truth",
            color: "#1f77b4",
            points: traj.rows.iter().map(|r| r.truth).collect(),
        },
        Series {
            name: "network",
            color: "#ff7f0e",
            points: traj.rows.iter().filter_map(|r| r.nn).collect(),
        },
        Series {
            name: "particle filter",
            color: "#2ca02c",
            points: traj.rows.iter().map(|r| r.pf).collect(),
        },
    ]
}

struct Frame {
    cx: f64,
    cy: f64,
    scale: f64,
}

impl Frame {
    fn fit(all: impl Iterator<Item = [f64; 2]>) -> Self {
        let (mut lo, mut hi) = ([0.0f64; 2], [0.0f64; 2]);
        for p in all {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
        Self {
            cx: 0.5 * (lo[0] + hi[0]),
            cy: 0.5 * (lo[1] + hi[1]),
            scale: (SIZE - 2.0 * MARGIN) / span,
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            SIZE / 2.0 + (p[0] - self.cx) * self.scale,
            SIZE / 2.0 - (p[1] - self.cy) * self.scale,
        )
    }
}

pub fn render_svg(traj: &Trajectory) -> String {
    let series = series(traj);
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter().copied()));
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    let (ox, oy) = frame.map([0.0, 0.0]);
    writeln!(
        out,
        r#"<g id="robot"><rect x="{:.2}" y="{:.2}" width="12" height="12" fill="black"/><text x="{:.2}" y="{:.2}" font-size="12" font-family="sans-serif">robot (0, 0)</text></g>"#,
        ox - 6.0,
        oy - 6.0,
        ox + 10.0,
        oy - 10.0
    )
    .unwrap();

    for s in &series {
        let id = s.name.replace(' ', "-");
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&p| {
                let (x, y) = frame.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(
            out,
            r#"<polyline id="{id}" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            s.color
        )
        .unwrap();
        if let Some(&last) = s.points.last() {
            let (x, y) = frame.map(last);
            writeln!(out, r#"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"/>"#, s.color).unwrap();
        }
    }

    writeln!(out, r#"<g id="legend" font-size="13" font-family="sans-serif">"#).unwrap();
    for (i, s) in series.iter().enumerate() {
        let y = 20.0 + 18.0 * i as f64;
        writeln!(
            out,
            r#"<line x1="12" y1="{y}" x2="36" y2="{y}" stroke="{}" stroke-width="3"/><text x="42" y="{}">{}</text>"#,
            s.color,
            y + 4.0,
            s.name
        )
        .unwrap();
    }
    writeln!(out, "</g>\n</svg>").unwrap();
    out
}
