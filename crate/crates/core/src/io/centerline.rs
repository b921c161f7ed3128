use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::geometry::{Point2D, Point3D, Polyline2D, Polyline3D};
use crate::report::SeriesBundle;

use super::IoError;

/// A parsed centerline file; the column count decides the dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Centerline {
    Planar(Polyline2D),
    Spatial(Polyline3D),
}

impl Centerline {
    pub fn len(&self) -> usize {
        match self {
            Self::Planar(l) => l.len(),
            Self::Spatial(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn parse_centerline(path: &Path) -> Result<Centerline, IoError> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    read_centerline(file)
}

pub fn read_centerline(reader: impl Read) -> Result<Centerline, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| IoError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let columns: Vec<&str> = header.iter().collect();
    let width = match columns.as_slice() {
        ["x", "y"] => 2,
        ["x", "y", "z"] => 3,
        _ => {
            return Err(IoError::Parse {
                line: 1,
                message: format!(
                    "expected header `x,y` or `x,y,z`, got `{}`",
                    columns.join(",")
                ),
            })
        }
    };

    let mut rows: Vec<[f64; 3]> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| IoError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(IoError::Parse {
                line,
                message: format!("expected {width} columns, got {}", record.len()),
            });
        }
        let mut row = [0.0; 3];
        for (i, field) in record.iter().enumerate() {
            row[i] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IoError::Parse {
                    line,
                    message: format!("`{field}` is not a finite decimal"),
                })?;
        }
        rows.push(row);
    }

    if width == 2 {
        let points = rows.iter().map(|r| Point2D::new(r[0], r[1])).collect();
        Ok(Centerline::Planar(Polyline2D::new(points)?))
    } else {
        if rows.len() < 3 {
            return Err(crate::geometry::GeometryError::TooFewPoints {
                needed: 3,
                got: rows.len(),
            }
            .into());
        }
        let points = rows
            .iter()
            .map(|r| Point3D::new(r[0], r[1], r[2]))
            .collect();
        Ok(Centerline::Spatial(Polyline3D::new(points)?))
    }
}

/// Writes `x,y[,z]` rows with six fractional digits.
pub fn write_centerline(line: &Centerline, path: &Path) -> Result<(), IoError> {
    if line.is_empty() {
        return Err(IoError::Empty);
    }
    let mut out = String::with_capacity(line.len() * 40);
    match line {
        Centerline::Planar(l) => {
            out.push_str("x,y\n");
            for p in l.points() {
                out.push_str(&format!("{:.6},{:.6}\n", p.x, p.y));
            }
        }
        Centerline::Spatial(l) => {
            out.push_str("x,y,z\n");
            for p in l.points() {
                out.push_str(&format!("{:.6},{:.6},{:.6}\n", p.x, p.y, p.z));
            }
        }
    }
    std::fs::write(path, out).map_err(|e| IoError::io(path, e))
}

/// Writes `height.csv`, `slope.csv` and `curvature.csv` into `dir`.
pub fn write_series(series: &SeriesBundle, dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let s = &series.arc_length;
    write_columns(&dir.join("height.csv"), "s,z", s, &[&series.height])?;
    write_columns(&dir.join("slope.csv"), "s,slope", s, &[&series.slope])?;
    write_columns(
        &dir.join("curvature.csv"),
        "s,planar,spatial",
        s,
        &[&series.planar_curvature, &series.spatial_curvature],
    )
}

fn write_columns(path: &Path, header: &str, s: &[f64], columns: &[&[f64]]) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "{header}")?;
        for (k, sk) in s.iter().enumerate() {
            write!(w, "{sk:.6}")?;
            for col in columns {
                write!(w, ",{:.9}", col[k])?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    emit().map_err(|e| IoError::io(path, e))
}
