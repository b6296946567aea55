//! Deterministic SVG scatter plots.
//!
//! Output bytes are a pure function of the inputs: fixed canvas policy,
//! fixed number formatting, no timestamps. Markers carry `class="pt"`,
//! Lennard-Jones balls `class="ball"`, reference samples `class="ref"`, so
//! tests and downstream tooling can count elements without an XML parser.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Axis pair used to flatten 3d clouds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    Xy,
    Xz,
    Yz,
}

impl Projection {
    fn axes(self) -> (usize, usize) {
        match self {
            Projection::Xy => (0, 1),
            Projection::Xz => (0, 2),
            Projection::Yz => (1, 2),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Projection::Xy => "xy",
            Projection::Xz => "xz",
            Projection::Yz => "yz",
        }
    }
}

impl FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xy" => Ok(Projection::Xy),
            "xz" => Ok(Projection::Xz),
            "yz" => Ok(Projection::Yz),
            other => Err(Error::invalid(format!(
                "projection must be xy, xz or yz, got `{other}`"
            ))),
        }
    }
}

const CANVAS: f64 = 640.0;
const MARKER_R: f64 = 2.5;
const REF_R: f64 = 1.2;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

// world-space positions to draw, one entry per cloud
struct Layout {
    clouds: Vec<Vec<(f64, f64)>>,
    reference: Vec<(f64, f64)>,
}

fn project(p: &[f64], dim: usize, proj: Projection, row: f64) -> (f64, f64) {
    match dim {
        1 => (p[0], row),
        2 => (p[0], p[1]),
        _ => {
            let (a, b) = proj.axes();
            (p[a], p[b])
        }
    }
}

fn layout(
    clouds: &[PointCloud],
    reference: Option<&PointCloud>,
    proj: Projection,
) -> Result<Layout> {
    let dim = clouds
        .first()
        .map(PointCloud::dim)
        .or_else(|| reference.map(PointCloud::dim))
        .ok_or_else(|| Error::invalid("plot: nothing to draw"))?;
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!(
            "plot: unsupported dimension {dim} (need 1, 2 or 3)"
        )));
    }
    for c in clouds {
        if c.dim() != dim {
            return Err(Error::dim("plot: clouds have mixed dimensions"));
        }
    }
    if let Some(r) = reference {
        if r.dim() != dim {
            return Err(Error::dim("plot: reference dimension mismatch"));
        }
    }
    // 1d clouds are stacked on separate rows, reference on its own row below
    let rows = |i: usize| -(i as f64);
    Ok(Layout {
        clouds: clouds
            .iter()
            .enumerate()
            .map(|(i, c)| c.iter().map(|p| project(p, dim, proj, rows(i))).collect())
            .collect(),
        reference: reference
            .map(|r| {
                r.iter()
                    .map(|p| project(p, dim, proj, rows(clouds.len())))
                    .collect()
            })
            .unwrap_or_default(),
    })
}

/// Renders clouds (several allowed; colors cycle) with optional reference
/// sample underneath and optional balls of world radius `delta` around every
/// cloud point. 3d clouds are flattened by `proj`; 1d clouds get one row per
/// cloud. The scale is isotropic.
pub fn render_svg(
    clouds: &[PointCloud],
    reference: Option<&PointCloud>,
    delta: Option<f64>,
    proj: Projection,
) -> Result<String> {
    if let Some(dl) = delta {
        if dl < 0.0 || !dl.is_finite() {
            return Err(Error::invalid("plot: delta must be finite and ≥ 0"));
        }
    }
    let lay = layout(clouds, reference, proj)?;

    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let margin = delta.unwrap_or(0.0);
    for (x, y) in lay.clouds.iter().flatten() {
        lo = (lo.0.min(x - margin), lo.1.min(y - margin));
        hi = (hi.0.max(x + margin), hi.1.max(y + margin));
    }
    for &(x, y) in &lay.reference {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let extent = (hi.0 - lo.0).max(hi.1 - lo.1);
    let pad = if extent > 0.0 { 0.05 * extent } else { 1.0 };
    lo = (lo.0 - pad, lo.1 - pad);
    hi = (hi.0 + pad, hi.1 + pad);

    let scale = CANVAS / (hi.0 - lo.0).max(hi.1 - lo.1);
    let width = (hi.0 - lo.0) * scale;
    let height = (hi.1 - lo.1) * scale;
    let sx = |x: f64| (x - lo.0) * scale;
    let sy = |y: f64| (hi.1 - y) * scale;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{width:.1}\" height=\"{height:.1}\" \
         viewBox=\"0 0 {width:.1} {height:.1}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
    );

    if !lay.reference.is_empty() {
        svg.push_str("<g fill=\"#b0b0b0\">\n");
        for &(x, y) in &lay.reference {
            let _ = writeln!(
                svg,
                "<circle class=\"ref\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"{REF_R}\"/>",
                sx(x),
                sy(y)
            );
        }
        svg.push_str("</g>\n");
    }

    if let Some(dl) = delta {
        let r = dl * scale;
        svg.push_str("<g fill=\"none\" stroke=\"#7f7f7f\" stroke-width=\"0.6\">\n");
        for pts in &lay.clouds {
            for &(x, y) in pts {
                let _ = writeln!(
                    svg,
                    "<circle class=\"ball\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"{r:.2}\"/>",
                    sx(x),
                    sy(y)
                );
            }
        }
        svg.push_str("</g>\n");
    }

    for (i, pts) in lay.clouds.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, "<g fill=\"{color}\">");
        for &(x, y) in pts {
            let _ = writeln!(
                svg,
                "<circle class=\"pt\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"{MARKER_R}\"/>",
                sx(x),
                sy(y)
            );
        }
        svg.push_str("</g>\n");
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn save_svg(
    path: &Path,
    clouds: &[PointCloud],
    reference: Option<&PointCloud>,
    delta: Option<f64>,
    proj: Projection,
) -> Result<()> {
    let svg = render_svg(clouds, reference, delta, proj)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(dim: usize, data: &[f64]) -> PointCloud {
        PointCloud::new(dim, data.to_vec()).unwrap()
    }

    fn count(hay: &str, needle: &str) -> usize {
        hay.matches(needle).count()
    }

    #[test]
    fn single_point_single_marker() {
        let svg = render_svg(&[cloud(2, &[0.3, -0.7])], None, None, Projection::Xy).unwrap();
        assert_eq!(count(&svg, "class=\"pt\""), 1);
        assert_eq!(count(&svg, "class=\"ball\""), 0);
        assert_eq!(count(&svg, "class=\"ref\""), 0);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("version=\"1.1\""));
    }

    #[test]
    fn ball_per_point_when_delta_given() {
        let x = cloud(2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let svg = render_svg(&[x], None, Some(0.25), Projection::Xy).unwrap();
        assert_eq!(count(&svg, "class=\"pt\""), 3);
        assert_eq!(count(&svg, "class=\"ball\""), 3);
    }

    #[test]
    fn reference_markers_are_separate() {
        let x = cloud(1, &[0.1, 0.4]);
        let r = cloud(1, &[0.0, 0.5, 1.0]);
        let svg = render_svg(&[x], Some(&r), None, Projection::Xy).unwrap();
        assert_eq!(count(&svg, "class=\"pt\""), 2);
        assert_eq!(count(&svg, "class=\"ref\""), 3);
    }

    #[test]
    fn deterministic_bytes() {
        let x = cloud(2, &[0.0, 0.0, 0.25, 0.5, -1.0, 2.0]);
        let a = render_svg(std::slice::from_ref(&x), None, Some(0.1), Projection::Xy).unwrap();
        let b = render_svg(&[x], None, Some(0.1), Projection::Xy).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn projections_differ_in_3d() {
        let x = cloud(3, &[0.1, 0.2, 0.9, -0.5, 0.7, 0.3]);
        let xy = render_svg(std::slice::from_ref(&x), None, None, Projection::Xy).unwrap();
        let xz = render_svg(std::slice::from_ref(&x), None, None, Projection::Xz).unwrap();
        let yz = render_svg(&[x], None, None, Projection::Yz).unwrap();
        assert_ne!(xy, xz);
        assert_ne!(xz, yz);
    }

    #[test]
    fn multiple_1d_clouds_stack_rows() {
        let a = cloud(1, &[0.0, 1.0]);
        let b = cloud(1, &[0.5]);
        let svg = render_svg(&[a, b], None, None, Projection::Xy).unwrap();
        assert_eq!(count(&svg, "class=\"pt\""), 3);
        assert_eq!(count(&svg, "<g fill=\"#"), 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(render_svg(&[], None, None, Projection::Xy).is_err());
        let x4 = cloud(4, &[0.0, 0.0, 0.0, 0.0]);
        assert!(render_svg(&[x4], None, None, Projection::Xy).is_err());
        let a = cloud(1, &[0.0]);
        let b = cloud(2, &[0.0, 0.0]);
        assert!(render_svg(&[a.clone(), b], None, None, Projection::Xy).is_err());
        assert!(render_svg(&[a], None, Some(f64::NAN), Projection::Xy).is_err());
        assert!("zz".parse::<Projection>().is_err());
        assert_eq!("xz".parse::<Projection>().unwrap(), Projection::Xz);
    }
}
