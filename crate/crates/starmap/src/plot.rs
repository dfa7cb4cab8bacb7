//! Static SVG scatter plots of 2-D embeddings.
//!
//! Points render as circles, anchors as larger five-pointed stars on
//! top. Data coordinates map linearly into the viewport with a 5%
//! margin and a single shared scale for both axes, so the plot never
//! distorts the embedding's aspect ratio; the vertical axis is flipped
//! to match mathematical orientation.

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Fixed color cycle; class `c` uses entry `c % 20`.
pub const PALETTE: [&str; 20] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94",
    "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
];

/// Fraction of each viewport dimension left blank on each side.
const MARGIN: f64 = 0.05;
/// Star outer radius as a multiple of the point radius.
const STAR_SCALE: f64 = 4.0;
/// Star inner radius as a fraction of its outer radius.
const STAR_INNER: f64 = 0.382;

/// Rendering options.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub width: u32,
    pub height: u32,
    pub point_radius: f64,
    /// Label column to color by; resolved by the caller into class ids.
    pub color_by: Option<String>,
    pub show_stars: bool,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            width: 800,
            height: 800,
            point_radius: 1.5,
            color_by: None,
            show_stars: true,
        }
    }
}

/// Renders a 2-D embedding as an SVG document string.
///
/// `colors` assigns a class id per point (palette cycles past 20);
/// uncolored plots draw every point in the first palette color. Stars
/// are drawn after (on top of) the points when `spec.show_stars`.
///
/// # Errors
/// Points or stars not 2-D, a color-length mismatch, or a degenerate
/// spec (zero size or non-positive radius).
pub fn render_scatter_svg(
    points: &DataMatrix,
    colors: Option<&[usize]>,
    stars: Option<&DataMatrix>,
    spec: &PlotSpec,
) -> Result<String> {
    if points.cols() != 2 {
        return Err(Error::InvalidInput(format!(
            "plotting needs 2-D points, got {}-D",
            points.cols()
        )));
    }
    if let Some(s) = stars {
        if s.cols() != 2 {
            return Err(Error::InvalidInput(format!(
                "plotting needs 2-D stars, got {}-D",
                s.cols()
            )));
        }
    }
    if let Some(c) = colors {
        if c.len() != points.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} colors for {} points",
                c.len(),
                points.rows()
            )));
        }
    }
    if spec.width == 0 || spec.height == 0 || spec.point_radius <= 0.0 || spec.point_radius.is_nan()
    {
        return Err(Error::InvalidInput(
            "plot needs positive dimensions and point radius".into(),
        ));
    }

    let drawn_stars = stars.filter(|_| spec.show_stars);
    let map = Viewport::fit(points, drawn_stars, spec);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n",
        w = spec.width,
        h = spec.height
    ));
    for i in 0..points.rows() {
        let (px, py) = map.apply(points.get(i, 0), points.get(i, 1));
        let fill = PALETTE[colors.map_or(0, |c| c[i] % PALETTE.len())];
        svg.push_str(&format!(
            "<circle cx=\"{px}\" cy=\"{py}\" r=\"{}\" fill=\"{fill}\"/>\n",
            spec.point_radius
        ));
    }
    if let Some(s) = drawn_stars {
        let outer = STAR_SCALE * spec.point_radius;
        for i in 0..s.rows() {
            let (px, py) = map.apply(s.get(i, 0), s.get(i, 1));
            svg.push_str(&format!(
                "<polygon class=\"star\" points=\"{}\" fill=\"#111111\" \
                 stroke=\"#ffffff\" stroke-width=\"1\"/>\n",
                star_points(px, py, outer)
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Affine data-to-pixel map: shared scale, centered, y flipped.
struct Viewport {
    center_x: f64,
    center_y: f64,
    pixel_cx: f64,
    pixel_cy: f64,
    scale: f64,
}

impl Viewport {
    fn fit(points: &DataMatrix, stars: Option<&DataMatrix>, spec: &PlotSpec) -> Viewport {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut take = |m: &DataMatrix| {
            for i in 0..m.rows() {
                for a in 0..2 {
                    lo[a] = lo[a].min(m.get(i, a));
                    hi[a] = hi[a].max(m.get(i, a));
                }
            }
        };
        take(points);
        if let Some(s) = stars {
            take(s);
        }
        let avail = [
            f64::from(spec.width) * (1.0 - 2.0 * MARGIN),
            f64::from(spec.height) * (1.0 - 2.0 * MARGIN),
        ];
        // One scale for both axes, set by the tighter one; a fully
        // degenerate extent collapses everything onto the center.
        let mut scale = f64::INFINITY;
        for a in 0..2 {
            if hi[a] > lo[a] {
                scale = scale.min(avail[a] / (hi[a] - lo[a]));
            }
        }
        if !scale.is_finite() {
            scale = 0.0;
        }
        Viewport {
            center_x: (lo[0] + hi[0]) / 2.0,
            center_y: (lo[1] + hi[1]) / 2.0,
            pixel_cx: f64::from(spec.width) / 2.0,
            pixel_cy: f64::from(spec.height) / 2.0,
            scale,
        }
    }

    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.pixel_cx + (x - self.center_x) * self.scale,
            self.pixel_cy - (y - self.center_y) * self.scale,
        )
    }
}

fn star_points(cx: f64, cy: f64, outer: f64) -> String {
    let inner = STAR_INNER * outer;
    let mut out = String::new();
    for k in 0..10 {
        let angle = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 5.0;
        let r = if k % 2 == 0 { outer } else { inner };
        if k > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{},{}", cx + r * angle.cos(), cy + r * angle.sin()));
    }
    out
}
