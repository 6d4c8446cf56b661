//! Artifact writers: field and table CSV, SVG heatmaps, content hashes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::grid::{NodeClass, ScalarField};

/// CSV with header `x,y,value` over all non-exterior nodes, in index order.
///
/// Numbers use the shortest representation that round-trips, so equal fields
/// give byte-identical files.
pub fn field_csv(field: &ScalarField) -> String {
    let grid = field.grid();
    let mut s = String::from("x,y,value\n");
    for k in 0..grid.len() {
        if grid.class(k) == NodeClass::Exterior {
            continue;
        }
        let [x, y] = grid.position(k);
        let _ = writeln!(s, "{x},{y},{}", field.get(k));
    }
    s
}

/// CSV from a header and rows of already-formatted cells.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Viridis-like ramp through five fixed stops.
fn ramp(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = t * 4.0;
    let i = (x.floor() as usize).min(3);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heatmap of the non-exterior nodes, one square per node, with min/max noted.
pub fn field_svg(field: &ScalarField, title: &str) -> String {
    let grid = field.grid();
    let (nx, ny) = grid.dims();
    let cell = (600.0 / nx.max(ny) as f64).clamp(1.0, 24.0);
    let (w, hgt) = (nx as f64 * cell, ny as f64 * cell);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..grid.len() {
        if grid.class(k) != NodeClass::Exterior {
            lo = lo.min(field.get(k));
            hi = hi.max(field.get(k));
        }
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w,
        hgt + 40.0,
        w,
        hgt + 40.0
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    for k in 0..grid.len() {
        if grid.class(k) == NodeClass::Exterior {
            continue;
        }
        let (i, j) = (k % nx, k / nx);
        let (r, g, b) = ramp((field.get(k) - lo) / span);
        // Row 0 is the bottom of the domain.
        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
            i as f64 * cell,
            (ny - 1 - j) as f64 * cell
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="4" y="{}" font-family="monospace" font-size="12">{}  min={lo:e}  max={hi:e}</text>"#,
        hgt + 24.0,
        escape(title)
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes `contents` to `dir/name` and returns its SHA-256.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> io::Result<String> {
    fs::write(dir.join(name), contents)?;
    Ok(sha256_hex(contents.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, sample_field, Domain};
    use std::sync::Arc;

    #[test]
    fn csv_round_trips_values() {
        let g = Arc::new(build_grid(&Domain::unit_square(), 0.25).unwrap());
        let u = sample_field(&g, |x, y| x * 0.1 + y / 3.0).unwrap();
        let csv = field_csv(&u);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        let mut n = 0;
        for l in lines {
            let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(v[2], v[0] * 0.1 + v[1] / 3.0);
            n += 1;
        }
        assert_eq!(n, 25);
    }

    #[test]
    fn svg_is_deterministic() {
        let g = Arc::new(build_grid(&Domain::disc([0.0, 0.0], 1.0), 0.25).unwrap());
        let u = sample_field(&g, |x, y| x * y).unwrap();
        let a = field_svg(&u, "u<1>");
        assert_eq!(a, field_svg(&u, "u<1>"));
        assert!(a.starts_with("<svg") && a.contains("u&lt;1&gt;") && a.contains("min="));
        assert_eq!(ramp(0.0), (68, 1, 84));
        assert_eq!(ramp(1.0), (253, 231, 37));
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn tables() {
        let t = table_csv(&["a", "b"], &[vec!["1".into(), "2".into()]]);
        assert_eq!(t, "a,b\n1,2\n");
    }
}
