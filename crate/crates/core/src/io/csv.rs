//! Plain-text CSV with `#` metadata lines.
//!
//! Values are written with 17 significant digits, enough for an exact `f64`
//! round trip.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::phasespace::{Kind, Marginals, PhaseSpaceGrid};
use crate::scalar::{lit, to_f64, Real};
use crate::wavefield::{Axis, Domain, Grid1D, SampledField, UnitMode};

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Metadata from `# key = value` lines plus the numeric rows below them.
struct Parsed {
    meta: HashMap<String, String>,
    rows: Vec<Vec<f64>>,
}

fn parse(path: &Path, text: &str) -> Result<Parsed> {
    let mut meta = HashMap::new();
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            // a column header row
            Err(_) if rows.is_empty() => continue,
            Err(e) => return Err(malformed(path, format!("line {}: {e}", idx + 1))),
        }
    }
    Ok(Parsed { meta, rows })
}

impl Parsed {
    fn get<V: FromStr>(&self, path: &Path, key: &str) -> Result<V>
    where
        V::Err: std::fmt::Display,
    {
        let raw = self
            .meta
            .get(key)
            .ok_or_else(|| malformed(path, format!("missing metadata `{key}`")))?;
        raw.parse()
            .map_err(|e| malformed(path, format!("metadata `{key}`: {e}")))
    }

    fn columns(&self, path: &Path, width: usize) -> Result<()> {
        match self.rows.iter().position(|r| r.len() < width) {
            Some(i) => Err(malformed(path, format!("data row {} has fewer than {width} columns", i + 1))),
            None => Ok(()),
        }
    }
}

pub fn write_grid_csv<T: Real>(grid: &PhaseSpaceGrid<T>, path: impl AsRef<Path>) -> Result<()> {
    let (nx, np) = grid.dim();
    let (xa, pa) = (grid.x_axis(), grid.p_axis());
    let mut out = String::with_capacity(nx * np * 100 + 512);
    let _ = writeln!(out, "# krphase phase-space grid");
    let _ = writeln!(out, "# kind = {}", grid.kind());
    let _ = writeln!(out, "# unit_mode = {}", grid.unit_mode());
    let _ = writeln!(out, "# wavenumber = {}", num(to_f64(grid.wavenumber())));
    let _ = writeln!(out, "# n_x = {nx}");
    let _ = writeln!(out, "# n_p = {np}");
    let _ = writeln!(out, "# x_origin = {}", num(to_f64(xa.origin)));
    let _ = writeln!(out, "# x_spacing = {}", num(to_f64(xa.spacing)));
    let _ = writeln!(out, "# p_origin = {}", num(to_f64(pa.origin)));
    let _ = writeln!(out, "# p_spacing = {}", num(to_f64(pa.spacing)));
    out.push_str("x,p,re,im\n");
    for ((i, j), v) in grid.values().indexed_iter() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(to_f64(xa.coordinate(i))),
            num(to_f64(pa.coordinate(j))),
            num(to_f64(v.re)),
            num(to_f64(v.im))
        );
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_grid_csv<T: Real>(path: impl AsRef<Path>) -> Result<PhaseSpaceGrid<T>> {
    let path = path.as_ref();
    let parsed = parse(path, &fs::read_to_string(path)?)?;
    let kind: Kind = parsed.get(path, "kind")?;
    let unit_mode: UnitMode = parsed.get(path, "unit_mode")?;
    let nx: usize = parsed.get(path, "n_x")?;
    let np: usize = parsed.get(path, "n_p")?;
    if parsed.rows.len() != nx * np {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: (nx * np) as u64,
            actual: parsed.rows.len() as u64,
        });
    }
    parsed.columns(path, 4)?;
    let x = Axis::new(lit(parsed.get(path, "x_origin")?), lit(parsed.get(path, "x_spacing")?), nx);
    let p = Axis::new(lit(parsed.get(path, "p_origin")?), lit(parsed.get(path, "p_spacing")?), np);
    let values: Vec<Complex<T>> = parsed
        .rows
        .iter()
        .map(|r| Complex::new(lit(r[2]), lit(r[3])))
        .collect();
    let values = Array2::from_shape_vec((nx, np), values).map_err(|e| malformed(path, e.to_string()))?;
    PhaseSpaceGrid::new(kind, x, p, unit_mode, lit(parsed.get(path, "wavenumber")?), values)
        .map_err(|e| malformed(path, e.to_string()))
}

pub fn write_field_csv<T: Real>(field: &SampledField<T>, path: impl AsRef<Path>) -> Result<()> {
    let g = field.grid();
    let mut out = String::with_capacity(g.n_points() * 80 + 256);
    let _ = writeln!(out, "# krphase field");
    let _ = writeln!(
        out,
        "# domain = {}",
        match field.domain() {
            Domain::Position => "position",
            Domain::Momentum => "momentum",
        }
    );
    let _ = writeln!(out, "# unit_mode = {}", g.unit_mode());
    let _ = writeln!(out, "# wavenumber = {}", num(to_f64(field.wavenumber())));
    let _ = writeln!(out, "# n_points = {}", g.n_points());
    let _ = writeln!(out, "# extent = {}", num(to_f64(g.extent())));
    let _ = writeln!(out, "# norm_squared = {}", num(to_f64(field.norm_squared())));
    out.push_str("x,re,im\n");
    for (x, v) in g.coordinates().iter().zip(field.amplitudes()) {
        let _ = writeln!(out, "{},{},{}", num(to_f64(*x)), num(to_f64(v.re)), num(to_f64(v.im)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a field written by [`write_field_csv`]. Files without metadata are
/// accepted when their `x` column is a centered grid; they load in position
/// space with the wavenumber of `fallback_mode`.
pub fn read_field_csv<T: Real>(path: impl AsRef<Path>, fallback_mode: UnitMode) -> Result<SampledField<T>> {
    let path = path.as_ref();
    let parsed = parse(path, &fs::read_to_string(path)?)?;
    parsed.columns(path, 3)?;
    let n = parsed.rows.len();
    if n < 2 {
        return Err(malformed(path, "a field needs at least two samples"));
    }
    let unit_mode = if parsed.meta.contains_key("unit_mode") {
        parsed.get(path, "unit_mode")?
    } else {
        fallback_mode
    };
    let domain = match parsed.meta.get("domain").map(String::as_str) {
        None | Some("position") => Domain::Position,
        Some("momentum") => Domain::Momentum,
        Some(other) => return Err(malformed(path, format!("unknown domain `{other}`"))),
    };
    let wavenumber: f64 = if parsed.meta.contains_key("wavenumber") {
        parsed.get(path, "wavenumber")?
    } else {
        unit_mode.default_wavenumber()
    };
    let grid = if parsed.meta.contains_key("extent") {
        Grid1D::new(n, lit(parsed.get::<f64>(path, "extent")?), unit_mode)?
    } else {
        let spacing = (parsed.rows[n - 1][0] - parsed.rows[0][0]) / (n - 1) as f64;
        let axis = Axis::new(lit::<T>(parsed.rows[0][0]), lit(spacing), n);
        Grid1D::from_axis(&axis, unit_mode).map_err(|e| malformed(path, e.to_string()))?
    };
    let amps = parsed
        .rows
        .iter()
        .map(|r| Complex::new(lit(r[1]), lit(r[2])))
        .collect();
    SampledField::with_domain(grid, amps, lit(wavenumber), domain)
}

/// Writes one marginal as `coord,value` with the axis name in the metadata.
pub fn write_marginal_csv<T: Real>(
    axis_name: &str,
    coords: &[T],
    values: &[T],
    residual_imag: T,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::with_capacity(values.len() * 50 + 128);
    let _ = writeln!(out, "# krphase marginal");
    let _ = writeln!(out, "# axis = {axis_name}");
    let _ = writeln!(out, "# residual_imag = {}", num(to_f64(residual_imag)));
    let _ = writeln!(out, "{axis_name},value");
    for (c, v) in coords.iter().zip(values) {
        let _ = writeln!(out, "{},{}", num(to_f64(*c)), num(to_f64(*v)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the position and momentum marginals of a grid to two files.
pub fn write_marginals<T: Real>(
    grid: &PhaseSpaceGrid<T>,
    marginals: &Marginals<T>,
    x_path: impl AsRef<Path>,
    p_path: impl AsRef<Path>,
) -> Result<()> {
    let r = marginals.residual_imag;
    write_marginal_csv("x", &grid.x_axis().coordinates(), &marginals.position, r, x_path)?;
    write_marginal_csv("p", &grid.p_axis().coordinates(), &marginals.momentum, r, p_path)
}

/// Reads the first two numeric columns of any `#`-commented CSV.
pub fn read_xy_csv<T: Real>(path: impl AsRef<Path>) -> Result<(Vec<T>, Vec<T>)> {
    let path = path.as_ref();
    let parsed = parse(path, &fs::read_to_string(path)?)?;
    parsed.columns(path, 2)?;
    Ok(parsed.rows.iter().map(|r| (lit::<T>(r[0]), lit::<T>(r[1]))).unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::{direct_wigner, kr_conjugate, marginals};
    use crate::wavefield::{apply_obstruction, make_gaussian};

    fn field() -> SampledField<f64> {
        let g = Grid1D::new(64, 13.6, UnitMode::Millimeters).unwrap();
        apply_obstruction(&make_gaussian(g, 0.85, 500.0, 0.1).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn grid_csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.csv");
        let k = kr_conjugate(&field()).unwrap();
        write_grid_csv(&k, &path).unwrap();
        let back: PhaseSpaceGrid<f64> = read_grid_csv(&path).unwrap();
        assert_eq!(back, k);
    }

    #[test]
    fn field_csv_round_trips_and_accepts_bare_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let f = field();
        write_field_csv(&f, &path).unwrap();
        assert_eq!(read_field_csv::<f64>(&path, UnitMode::Dimensionless).unwrap(), f);

        let bare: String = f
            .grid()
            .coordinates()
            .iter()
            .zip(f.amplitudes())
            .map(|(x, v)| format!("{x:.17e},{:.17e},{:.17e}\n", v.re, v.im))
            .collect();
        std::fs::write(&path, bare).unwrap();
        let g = read_field_csv::<f64>(&path, UnitMode::Millimeters).unwrap();
        assert_eq!(g.grid().n_points(), 64);
        assert!((g.grid().extent() - 13.6).abs() < 1e-12);
    }

    #[test]
    fn marginal_csv_feeds_the_xy_reader() {
        let dir = tempfile::tempdir().unwrap();
        let (xp, pp) = (dir.path().join("mx.csv"), dir.path().join("mp.csv"));
        let w = direct_wigner(&field()).unwrap();
        let m = marginals(&w);
        write_marginals(&w, &m, &xp, &pp).unwrap();
        let (xs, ys): (Vec<f64>, Vec<f64>) = read_xy_csv(&xp).unwrap();
        assert_eq!(xs, w.x_axis().coordinates());
        assert_eq!(ys, m.position);
    }

    #[test]
    fn short_grid_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.csv");
        write_grid_csv(&kr_conjugate(&field()).unwrap(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(100).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, cut).unwrap();
        assert!(matches!(read_grid_csv::<f64>(&path), Err(Error::Truncated { .. })));
    }
}
