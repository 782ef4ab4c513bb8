//! Field export: CSV (canonical, lossless) and legacy ASCII VTK.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use defectgeom_core::{Grid2D, TensorField};

use crate::error::{invalid, io_err, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Vtk,
}

/// 17 significant digits, e.g. `-1.2500000000000000e-3`.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// Component labels `c`, `c1..c3`, `c11..c33`, ... with 1-based indices.
pub fn component_labels(rank: usize) -> Vec<String> {
    let n = 3usize.pow(rank as u32);
    (0..n)
        .map(|c| {
            let mut s = String::from("c");
            for r in (0..rank).rev() {
                let idx = (c / 3usize.pow(r as u32)) % 3;
                s.push(char::from(b'1' + idx as u8));
            }
            s
        })
        .collect()
}

/// CSV text of a field: header `x,y,c...`, one row per node in node order.
pub fn csv_string(f: &TensorField) -> String {
    let g = f.grid();
    let mut s = String::with_capacity(g.node_count() * (f.ncomp() + 2) * 24);
    s.push_str("x,y");
    for l in component_labels(f.rank()) {
        s.push(',');
        s.push_str(&l);
    }
    s.push('\n');
    for n in 0..g.node_count() {
        let p = g.point(n);
        let _ = write!(s, "{},{}", sci(p[0]), sci(p[1]));
        for v in f.node(n) {
            s.push(',');
            s.push_str(&sci(*v));
        }
        s.push('\n');
    }
    s
}

/// Legacy ASCII structured-points file with one scalar attribute per component.
pub fn vtk_string(f: &TensorField, title: &str) -> String {
    let g = f.grid();
    let o = g.origin();
    let h = g.spacing();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {} {} 1", g.nx(), g.ny());
    let _ = writeln!(s, "ORIGIN {} {} 0", sci(o[0]), sci(o[1]));
    let _ = writeln!(s, "SPACING {} {} 1", sci(h), sci(h));
    let _ = writeln!(s, "POINT_DATA {}", g.node_count());
    for (c, label) in component_labels(f.rank()).iter().enumerate() {
        let _ = writeln!(s, "SCALARS {label} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for n in 0..g.node_count() {
            let _ = writeln!(s, "{}", sci(f.node(n)[c]));
        }
    }
    s
}

/// Writes `f` to `path` in the given format.
pub fn write_field(f: &TensorField, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        Format::Csv => csv_string(f),
        Format::Vtk => vtk_string(f, &path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())),
    };
    fs::write(path, text).map_err(io_err(path))
}

/// Reads a CSV written by [`write_field`]. Values round-trip bit for bit;
/// the grid is rebuilt from the coordinate columns.
pub fn read_csv(path: impl AsRef<Path>) -> Result<TensorField> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_csv(&text).map_err(|e| invalid(path.display().to_string(), e.to_string()))
}

/// [`read_csv`] on text in memory.
pub fn parse_csv(text: &str) -> Result<TensorField> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| invalid("csv", "empty file"))?.split(',').collect();
    if header.len() < 3 || header[0] != "x" || header[1] != "y" {
        return Err(invalid("csv", "header must start with x,y"));
    }
    let ncomp = header.len() - 2;
    let rank = (0..=4)
        .find(|r| 3usize.pow(*r as u32) == ncomp)
        .ok_or_else(|| invalid("csv", format!("{ncomp} components is not a tensor of rank ≤ 4")))?;
    if header[2..] != component_labels(rank).iter().map(String::as_str).collect::<Vec<_>>()[..] {
        return Err(invalid("csv", "unexpected component labels"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut data = Vec::new();
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != ncomp + 2 {
            return Err(invalid("csv", format!("row {} has {} columns, expected {}", k + 2, cols.len(), ncomp + 2)));
        }
        let mut vals = cols.iter().map(|c| {
            c.parse::<f64>()
                .map_err(|_| invalid("csv", format!("row {}: `{c}` is not a number", k + 2)))
        });
        xs.push(vals.next().unwrap()?);
        ys.push(vals.next().unwrap()?);
        for v in vals {
            data.push(v?);
        }
    }
    let grid = infer_grid(&xs, &ys)?;
    Ok(TensorField::from_data(grid, rank, data)?)
}

fn infer_grid(xs: &[f64], ys: &[f64]) -> Result<Grid2D> {
    let total = xs.len();
    let nx = ys.iter().take_while(|y| **y == ys[0]).count();
    if nx < 3 || !total.is_multiple_of(nx) || total / nx < 3 {
        return Err(invalid("csv", "rows do not form a grid with at least 3 nodes per axis"));
    }
    let ny = total / nx;
    let origin = [xs[0], ys[0]];
    let candidates = [
        xs[1] - xs[0],
        (xs[nx - 1] - xs[0]) / (nx - 1) as f64,
        (ys[total - 1] - ys[0]) / (ny - 1) as f64,
    ];
    let matches = |g: &Grid2D| (0..total).all(|n| g.point(n) == [xs[n], ys[n]]);
    for h in candidates {
        let g = Grid2D::new(origin, h, nx, ny)?;
        if matches(&g) {
            return Ok(g);
        }
    }
    // Not bit-identical; accept if every coordinate agrees to rounding.
    let g = Grid2D::new(origin, candidates[1], nx, ny)?;
    let tol = 1e-9 * g.spacing();
    if (0..total).all(|n| {
        let p = g.point(n);
        (p[0] - xs[n]).abs() <= tol && (p[1] - ys[n]).abs() <= tol
    }) {
        Ok(g)
    } else {
        Err(invalid("csv", "coordinates are not a uniform grid"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_scalar_rows() {
        let g = Grid2D::square(0.0, 1.0, 3).unwrap();
        let s = csv_string(&TensorField::zeros(g, 0).unwrap());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "x,y,c");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[1], "0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0");
        assert_eq!(lines[2].split(',').next().unwrap(), "5.0000000000000000e-1");
        assert!(s.ends_with('\n') && !s.contains('\r'));
    }

    #[test]
    fn rank_two_column_order() {
        assert_eq!(
            component_labels(2),
            ["c11", "c12", "c13", "c21", "c22", "c23", "c31", "c32", "c33"]
        );
        assert_eq!(component_labels(1), ["c1", "c2", "c3"]);
        assert_eq!(component_labels(3)[5], "c123");
        let g = Grid2D::square(0.0, 1.0, 3).unwrap();
        let f = TensorField::from_fn(g, 2, |_, o| o[1] = 7.0).unwrap();
        let s = csv_string(&f);
        assert!(s.lines().nth(1).unwrap().ends_with(",0.0000000000000000e0,7.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0"));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = Grid2D::new([-2.0, -1.3], 0.1, 23, 17).unwrap();
        let f = TensorField::from_fn(g, 2, |p, o| {
            for (c, v) in o.iter_mut().enumerate() {
                *v = (p[0] * 1.7 + c as f64).sin() / 3.0 * p[1].exp() * 1e-7;
            }
            o[4] = -0.0;
            o[5] = f64::MIN_POSITIVE;
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field(&f, &path, Format::Csv).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.grid().nx(), 23);
        assert_eq!(back.grid().ny(), 17);
        for (a, b) in f.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn vtk_layout() {
        let g = Grid2D::square(0.0, 1.0, 3).unwrap();
        let f = TensorField::zeros(g, 1).unwrap();
        let s = vtk_string(&f, "u");
        assert!(s.starts_with("# vtk DataFile Version 3.0\nu\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS 3 3 1\n"));
        assert_eq!(s.matches("SCALARS").count(), 3);
        assert!(s.contains("SCALARS c3 double 1\nLOOKUP_TABLE default\n"));
        assert_eq!(s.lines().count(), 8 + 3 * (2 + 9));
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,b,c\n").is_err());
        assert!(parse_csv("x,y,c1,c2\n").is_err());
        assert!(parse_csv("x,y,c\n0,0,1\n1,0\n").is_err());
        assert!(parse_csv("x,y,c\n0,0,1\n1,0,2\n0,1,3\n1,1,zz\n").is_err());
    }

    #[test]
    fn write_failure_names_the_path() {
        let g = Grid2D::square(0.0, 1.0, 3).unwrap();
        let e = write_field(&TensorField::zeros(g, 0).unwrap(), "/nonexistent/dir/f.csv", Format::Csv).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/dir/f.csv"));
    }
}
