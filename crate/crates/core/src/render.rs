//! Deterministic SVG figures: the polygon outline, level curves of a field,
//! streamlines colored by class and the high ridge.

use crate::contour::level_curves;
use crate::fields::ScalarField;
use crate::geometry::{HighRidge, Polygon};
use crate::streamlines::{StreamClass, Streamline};
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderOptions {
    pub levels: Vec<f64>,
    /// Width in pixels of the longer side of the bounding box.
    pub size: f64,
    pub margin: f64,
    pub outline_width: f64,
    pub level_width: f64,
    pub stream_width: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            levels: (1..=9).map(|k| k as f64 / 10.0).collect(),
            size: 600.0,
            margin: 20.0,
            outline_width: 2.0,
            level_width: 0.8,
            stream_width: 1.2,
        }
    }
}

fn color(class: StreamClass) -> &'static str {
    match class {
        StreamClass::Attracting => "#c0392b",
        StreamClass::Median => "#1f618d",
        StreamClass::Generic => "#7f8c8d",
    }
}

struct Frame {
    lo: Vec2,
    hi: Vec2,
    scale: f64,
    margin: f64,
}

impl Frame {
    fn map(&self, x: Vec2) -> (f64, f64) {
        (
            self.margin + (x.x - self.lo.x) * self.scale,
            self.margin + (self.hi.y - x.y) * self.scale,
        )
    }

    fn path(&self, pts: &[Vec2], closed: bool) -> String {
        let mut d = String::new();
        for (i, &p) in pts.iter().enumerate() {
            let (x, y) = self.map(p);
            let _ = write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { " L" }, x, y);
        }
        if closed {
            d.push_str(" Z");
        }
        d
    }
}

/// SVG of `field`'s level curves (if given) and `streamlines` over the
/// polygon, with `H` drawn in black. The output depends only on the inputs.
pub fn render_svg(
    field: Option<&ScalarField>,
    streamlines: &[Streamline],
    polygon: &Polygon,
    ridge: &HighRidge,
    opts: &RenderOptions,
) -> String {
    let (lo, hi) = polygon.bounding_box();
    let span = (hi.x - lo.x).max(hi.y - lo.y);
    let frame = Frame {
        lo,
        hi,
        scale: opts.size / span,
        margin: opts.margin,
    };
    let w = (hi.x - lo.x) * frame.scale + 2.0 * opts.margin;
    let h = (hi.y - lo.y) * frame.scale + 2.0 * opts.margin;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    if let Some(f) = field {
        let _ = writeln!(
            s,
            r##"<g id="levels" fill="none" stroke="#555555" stroke-width="{}">"##,
            opts.level_width
        );
        for &c in &opts.levels {
            for cv in level_curves(f, c) {
                let _ = writeln!(
                    s,
                    r#"<path data-level="{c}" d="{}"/>"#,
                    frame.path(&cv.points, cv.closed)
                );
            }
        }
        s.push_str("</g>\n");
    }
    let _ = writeln!(
        s,
        r#"<g id="streamlines" fill="none" stroke-width="{}">"#,
        opts.stream_width
    );
    for st in streamlines {
        let _ = writeln!(
            s,
            r#"<path class="{}" stroke="{}" d="{}"/>"#,
            st.class.as_str(),
            color(st.class),
            frame.path(&st.points, false)
        );
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r##"<path id="outline" fill="none" stroke="#000000" stroke-width="{}" d="{}"/>"##,
        opts.outline_width,
        frame.path(polygon.vertices(), true)
    );
    if ridge.is_point() {
        let (x, y) = frame.map(ridge.endpoints[0]);
        let _ = writeln!(
            s,
            r##"<circle id="ridge" cx="{x:.2}" cy="{y:.2}" r="3" fill="#000000"/>"##
        );
    } else {
        let _ = writeln!(
            s,
            r##"<path id="ridge" fill="none" stroke="#000000" stroke-width="{}" d="{}"/>"##,
            2.0 * opts.outline_width,
            frame.path(&ridge.endpoints, false)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{rasterize, FieldLabel};
    use crate::geometry::chebyshev_set;
    use std::sync::Arc;

    fn pyramid() -> (ScalarField, Polygon, HighRidge) {
        let p = Polygon::unit_square();
        let g = Arc::new(rasterize(&p, 1.0 / 32.0).unwrap());
        let f = ScalarField::from_fn(g, FieldLabel::U, 0.0, |x| {
            2.0 * x.x.min(x.y).min(1.0 - x.x).min(1.0 - x.y)
        });
        (f, p.clone(), chebyshev_set(&p))
    }

    #[test]
    fn levels_only_without_streamlines() {
        let (f, p, r) = pyramid();
        let svg = render_svg(Some(&f), &[], &p, &r, &RenderOptions::default());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("data-level=").count(), 9);
        assert!(!svg.contains("class=\"generic\""));
        assert!(svg.contains("<circle id=\"ridge\""));
    }

    #[test]
    fn deterministic() {
        let (f, p, r) = pyramid();
        let a = render_svg(Some(&f), &[], &p, &r, &RenderOptions::default());
        let b = render_svg(Some(&f), &[], &p, &r, &RenderOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn rectangle_ridge_is_a_segment() {
        let p = Polygon::rectangle(2.0, 1.0).unwrap();
        let svg = render_svg(None, &[], &p, &chebyshev_set(&p), &RenderOptions::default());
        assert!(svg.contains("<path id=\"ridge\""));
        assert!(!svg.contains("data-level"));
    }
}
