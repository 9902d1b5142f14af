//! Route maps as standalone SVG.

use std::fmt::Write as _;

use q4rpd_core::model::ProblemInstance;
use q4rpd_core::orchestrator::Q4rpdSolution;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;
const LEGEND_ROW: f64 = 18.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f",
];

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
}

impl Frame {
    fn new(instance: &ProblemInstance) -> Self {
        let pts = std::iter::once((instance.depot.x, instance.depot.y))
            .chain(instance.deliveries.iter().map(|d| (d.location.x, d.location.y)));
        let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for (x, y) in pts {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        let span = (max_x - min_x).max(max_y - min_y).max(1e-9);
        Self {
            min_x,
            max_y,
            scale: (SIZE - 2.0 * MARGIN) / span,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (MARGIN + (x - self.min_x) * self.scale, MARGIN + (self.max_y - y) * self.scale)
    }
}

pub fn render_svg(solution: &Q4rpdSolution, instance: &ProblemInstance) -> String {
    let frame = Frame::new(instance);
    let height = SIZE + LEGEND_ROW * (solution.routes.len() as f64 + 1.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE:.0}" height="{height:.0}" viewBox="0 0 {SIZE:.0} {height:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (k, route) in solution.routes.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = route
            .stops
            .iter()
            .filter_map(|&id| instance.location(id))
            .map(|l| {
                let (x, y) = frame.map(l.x, l.y);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="route" data-truck="{}" points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            route.truck_id,
            points.join(" ")
        );
    }

    for d in &instance.deliveries {
        let (x, y) = frame.map(d.location.x, d.location.y);
        if d.is_top_priority() {
            let _ = writeln!(
                s,
                r#"<circle class="tp" cx="{x:.2}" cy="{y:.2}" r="9" fill="none" stroke="red" stroke-width="2"/>"#
            );
        }
        let _ = writeln!(s, r#"<circle class="delivery" cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif">{}</text>"#,
            x + 6.0,
            y - 6.0,
            d.id
        );
    }

    let (dx, dy) = frame.map(instance.depot.x, instance.depot.y);
    let _ = writeln!(
        s,
        r#"<rect class="depot" x="{:.2}" y="{:.2}" width="12" height="12" fill="black"/>"#,
        dx - 6.0,
        dy - 6.0
    );

    for (k, route) in solution.routes.iter().enumerate() {
        let y = SIZE + LEGEND_ROW * (k as f64 + 0.5);
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{colour}" stroke-width="3"/>"#,
            MARGIN + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" font-family="sans-serif">truck {}: {:.2}</text>"#,
            MARGIN + 32.0,
            y + 4.0,
            route.truck_id,
            route.distance
        );
    }
    s.push_str("</svg>\n");
    s
}
