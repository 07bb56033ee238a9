use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use brouwer::Curve;
use serde::{Deserialize, Serialize};

use crate::output::OutDir;
use crate::{CliError, Outcome};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 40.0;

/// A lifted polyline; drawn modulo 1 in the flat annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub label: String,
    #[serde(default)]
    pub tile: Option<usize>,
    pub points: Vec<[f64; 2]>,
}

impl Polyline {
    pub fn from_samples(label: &str, tile: Option<usize>, pts: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self { label: label.into(), tile, points: pts.into_iter().map(|(x, y)| [x, y]).collect() }
    }
}

/// Cell-centre tile indices over `[0,1]²`, rows from `y = 0` upwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileGrid {
    pub nx: usize,
    pub ny: usize,
    pub tiles: Vec<Option<usize>>,
}

/// Render input: the curves of `Γ`, overlays such as `γ` and `γ*`, and optional tile colouring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Number of tiles, for the colour wheel.
    pub q: usize,
    pub curves: Vec<Polyline>,
    #[serde(default)]
    pub overlays: Vec<Polyline>,
    #[serde(default)]
    pub tiles: Option<TileGrid>,
}

fn px(x: f64) -> f64 {
    MARGIN + x * WIDTH
}

fn py(y: f64) -> f64 {
    MARGIN + (1.0 - y) * HEIGHT
}

pub fn tile_colour(j: usize, q: usize) -> String {
    let hue = 360.0 * j as f64 / q.max(1) as f64;
    format!("hsl({hue:.1},65%,78%)")
}

/// Pieces of a lifted polyline reduced into `0 ≤ x ≤ 1`, cut where it crosses the seam.
fn wrapped(points: &[[f64; 2]]) -> Vec<Vec<(f64, f64)>> {
    let mut pieces = Vec::new();
    let Some(first) = points.first() else { return pieces };
    let mut cur = vec![(first[0] - first[0].floor(), first[1])];
    for w in points.windows(2) {
        let ([x0, y0], [x1, y1]) = (w[0], w[1]);
        let (mut k, k1) = (x0.floor(), x1.floor());
        while k != k1 {
            // Crossing x = k + 1 going right, or x = k going left.
            let (b, next) = if k1 > k { (k + 1.0, k + 1.0) } else { (k, k - 1.0) };
            let t = (b - x0) / (x1 - x0);
            let y = y0 + t * (y1 - y0);
            cur.push((b - k, y));
            pieces.push(std::mem::take(&mut cur));
            cur.push((b - next, y));
            k = next;
        }
        cur.push((x1 - k1, y1));
    }
    pieces.push(cur);
    pieces
}

fn path(d: &mut String, piece: &[(f64, f64)]) {
    for (i, (x, y)) in piece.iter().enumerate() {
        let _ = write!(d, "{}{:.3},{:.3}", if i == 0 { "M" } else { " L" }, px(*x), py(*y));
    }
}

fn stroke(label: &str) -> (&'static str, &'static str, f64) {
    match label {
        "gamma" => ("#1f4fbf", "none", 2.5),
        "gamma_star" => ("#d62728", "6,4", 2.0),
        _ => ("#111111", "none", 1.0),
    }
}

pub fn render_svg(scene: &Scene) -> String {
    let (w, h) = (WIDTH + 2.0 * MARGIN, HEIGHT + 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    if let Some(t) = &scene.tiles {
        let (cw, ch) = (WIDTH / t.nx as f64, HEIGHT / t.ny as f64);
        s.push_str("<g id=\"tiles\" stroke=\"none\">\n");
        for (idx, tile) in t.tiles.iter().enumerate() {
            let Some(j) = tile else { continue };
            let (i, r) = (idx % t.nx, idx / t.nx);
            let (x, y) = (MARGIN + i as f64 * cw, MARGIN + HEIGHT - (r + 1) as f64 * ch);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{}" data-tile="{j}"/>"#,
                cw + 0.05,
                ch + 0.05,
                tile_colour(*j, scene.q)
            );
        }
        s.push_str("</g>\n");
    }
    // Boundary circles solid; the identified sides x = 0 and x = 1 dashed.
    let _ = writeln!(
        s,
        r##"<g id="frame" stroke="#555555" fill="none"><path d="M{a:.3},{b:.3} L{c:.3},{b:.3} M{a:.3},{d:.3} L{c:.3},{d:.3}" stroke-width="1.5"/><path d="M{a:.3},{b:.3} L{a:.3},{d:.3} M{c:.3},{b:.3} L{c:.3},{d:.3}" stroke-dasharray="3,3"/></g>"##,
        a = px(0.0),
        b = py(0.0),
        c = px(1.0),
        d = py(1.0)
    );
    let _ = writeln!(
        s,
        r##"<text x="{:.3}" y="{:.3}" font-size="12" font-family="sans-serif" fill="#555555">x = 0 ~ x = 1</text>"##,
        px(0.0),
        MARGIN - 12.0
    );
    for (group, lines) in [("curves", &scene.curves), ("overlays", &scene.overlays)] {
        let _ = writeln!(s, r#"<g id="{group}" fill="none">"#);
        for line in lines {
            let (colour, dash, width) = stroke(&line.label);
            let mut d = String::new();
            for piece in wrapped(&line.points) {
                if !d.is_empty() {
                    d.push(' ');
                }
                path(&mut d, &piece);
            }
            let tile = line.tile.map(|j| format!(r#" data-tile="{j}""#)).unwrap_or_default();
            let _ = writeln!(
                s,
                r#"<path d="{d}" stroke="{colour}" stroke-width="{width}" stroke-dasharray="{dash}" data-label="{}"{tile}/>"#,
                line.label
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// A scene JSON file, or a single curve CSV.
pub fn load_artifact(path: &Path) -> Result<Scene, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text).map_err(|e| CliError::Parse {
            origin: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        }),
        Some("csv") => {
            let c = Curve::from_csv(&text)?;
            Ok(Scene {
                q: 1,
                curves: vec![Polyline::from_samples("curve", None, c.samples().iter().map(|p| (p.x, p.y)))],
                overlays: vec![],
                tiles: None,
            })
        }
        _ => Err(CliError::Artifact(format!("{}: expected a scene .json or a curve .csv", path.display()))),
    }
}

pub fn cmd_render(artifact: &Path, out: &Path) -> Result<Outcome, CliError> {
    let scene = load_artifact(artifact)?;
    let stem = artifact.file_stem().and_then(|s| s.to_str()).unwrap_or("render");
    let mut dir = OutDir::create(out)?;
    let file = dir.text(&format!("{stem}.svg"), &render_svg(&scene))?;
    let summary = format!("{} curves, {} overlays -> {}\n", scene.curves.len(), scene.overlays.len(), file.display());
    Ok(Outcome { pass: true, files: dir.into_files(), summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seam_crossing_splits_the_path() {
        let pieces = wrapped(&[[0.8, 0.0], [1.2, 1.0]]);
        assert_eq!(pieces.len(), 2);
        let (a, b) = (pieces[0].last().unwrap(), pieces[1][0]);
        assert!((a.0 - 1.0).abs() < 1e-12 && b.0.abs() < 1e-12 && (a.1 - 0.5).abs() < 1e-12 && a.1 == b.1);
        assert!((pieces[1][1].0 - 0.2).abs() < 1e-12);
        assert_eq!(wrapped(&[[-0.5, 0.0], [-0.5, 1.0]]), vec![vec![(0.5, 0.0), (0.5, 1.0)]]);
    }

    #[test]
    fn rigid_rotation_gives_vertical_lines() {
        let q = 5;
        let curves =
            (0..q).map(|j| Polyline::from_samples("curve", Some(j), [(j as f64 * 0.2 + 0.1, 0.0), (j as f64 * 0.2 + 0.1, 1.0)])).collect();
        let svg = render_svg(&Scene { q, curves, overlays: vec![], tiles: None });
        assert_eq!(svg.matches("data-label=\"curve\"").count(), q);
        for j in 0..q {
            let x = px(j as f64 * 0.2 + 0.1);
            assert!(svg.contains(&format!("M{x:.3},{:.3} L{x:.3},{:.3}", py(0.0), py(1.0))));
        }
    }

    #[test]
    fn overlays_are_distinguishable() {
        let gamma = Polyline::from_samples("gamma", None, [(0.0, 0.0), (0.0, 1.0)]);
        let star = Polyline::from_samples("gamma_star", None, [(0.01, 0.0), (0.01, 1.0)]);
        let svg = render_svg(&Scene { q: 1, curves: vec![], overlays: vec![gamma, star], tiles: None });
        assert!(svg.contains("stroke=\"#1f4fbf\"") && svg.contains("stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6,4\""));
    }

    #[test]
    fn tiles_carry_their_index() {
        let tiles = TileGrid { nx: 2, ny: 1, tiles: vec![Some(0), Some(3)] };
        let svg = render_svg(&Scene { q: 4, curves: vec![], overlays: vec![], tiles: Some(tiles) });
        assert!(svg.contains(&format!("fill=\"{}\" data-tile=\"3\"", tile_colour(3, 4))));
        assert_ne!(tile_colour(0, 4), tile_colour(3, 4));
    }

    #[test]
    fn missing_artifact_is_an_error() {
        assert!(matches!(load_artifact(Path::new("/nonexistent/scene.json")), Err(CliError::Io { .. })));
    }
}
