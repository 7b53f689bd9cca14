//! SVG rendering of one window.
//!
//! Scene coordinates map to SVG user units by the affine transform
//! `X = a·x + b`, `Y = c·y + d` (with `c < 0`, so y points up). The four
//! coefficients are written to the root element's `data-affine` attribute
//! and to its `<desc>`.

use std::fmt::Write as _;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 20.0;

pub struct PedTrajectories {
    pub ped: i64,
    pub past: Vec<[f64; 2]>,
    pub truth: Vec<[f64; 2]>,
    pub raw: Vec<[f64; 2]>,
    pub refined: Vec<[f64; 2]>,
}

impl PedTrajectories {
    fn roles(&self) -> [(&'static str, &[[f64; 2]]); 4] {
        [
            ("past", &self.past),
            ("truth", &self.truth),
            ("raw", &self.raw),
            ("refined", &self.refined),
        ]
    }
}

fn style(role: &str) -> &'static str {
    match role {
        "past" => r##"stroke="#444444" stroke-width="2""##,
        "truth" => r##"stroke="#2a9d4b" stroke-width="2" stroke-dasharray="6 3""##,
        "raw" => r##"stroke="#e07b24" stroke-width="1.5" stroke-dasharray="2 2""##,
        _ => r##"stroke="#2659c9" stroke-width="2""##,
    }
}

/// Affine coefficients `(a, b, c, d)` fitting every point into the canvas.
pub fn viewport(peds: &[PedTrajectories]) -> (f64, f64, f64, f64) {
    let pts = peds.iter().flat_map(|p| p.roles().into_iter().flat_map(|(_, v)| v.iter()));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let a = (SIZE - 2.0 * MARGIN) / span;
    (a, MARGIN - a * x0, -a, MARGIN + a * y1)
}

/// The SVG document and a `ped,role,step,x,y` CSV of the same points.
pub fn render_window(title: &str, peds: &[PedTrajectories]) -> (String, String) {
    let (a, b, c, d) = viewport(peds);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" data-affine="{a:?} {b:?} {c:?} {d:?}">"#
    )
    .unwrap();
    writeln!(svg, "<title>{}</title>", escape(title)).unwrap();
    writeln!(svg, "<desc>X = {a:?}*x + {b:?}; Y = {c:?}*y + {d:?}</desc>").unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    let mut csv = String::from("ped,role,step,x,y\n");
    for p in peds {
        for (role, points) in p.roles() {
            let coords: Vec<String> = points
                .iter()
                .map(|q| format!("{:?},{:?}", a * q[0] + b, c * q[1] + d))
                .collect();
            writeln!(
                svg,
                r#"<polyline class="{role}" data-ped="{}" fill="none" {} points="{}"/>"#,
                p.ped,
                style(role),
                coords.join(" ")
            )
            .unwrap();
            for (t, q) in points.iter().enumerate() {
                writeln!(csv, "{},{role},{t},{:?},{:?}", p.ped, q[0], q[1]).unwrap();
            }
        }
    }
    svg.push_str("</svg>\n");
    (svg, csv)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
