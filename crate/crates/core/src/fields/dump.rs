use super::grid::GridSpec;
use super::scalar::{FieldLabel, ScalarField, U_FLOOR};
use crate::error::{Error, Result};
use crate::vec2::Vec2;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

/// Parsed contents of a field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: Vec2,
    pub label: FieldLabel,
    /// Row-major, `j` outer; NaN marks outside nodes.
    pub values: Vec<f64>,
}

/// Text dump: a header `nx ny h ox oy label` followed by `ny` rows of `nx`
/// values. Seventeen significant digits make the round trip bit-exact.
pub fn dump_text(field: &ScalarField) -> String {
    let g = field.grid();
    let o = g.origin();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} {} {:.16e} {:.16e} {:.16e} {}",
        g.nx(),
        g.ny(),
        g.h(),
        o.x,
        o.y,
        field.label()
    );
    for j in 0..g.ny() {
        let row: Vec<String> = (0..g.nx())
            .map(|i| {
                let v = field.at(g.index(i, j));
                if v.is_nan() {
                    "NaN".to_string()
                } else {
                    format!("{v:.16e}")
                }
            })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_dump(field: &ScalarField, path: &Path) -> Result<()> {
    std::fs::write(path, dump_text(field))?;
    Ok(())
}

pub fn read_dump(text: &str) -> Result<FieldDump> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::DumpParse("empty dump".into()))?;
    let hv: Vec<&str> = header.split_whitespace().collect();
    if hv.len() != 6 {
        return Err(Error::DumpParse(format!(
            "header has {} fields, expected 6",
            hv.len()
        )));
    }
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::DumpParse(format!("{s:?}: {e}")))
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::DumpParse(format!("{s:?}: {e}")))
    };
    let nx = int(hv[0])?;
    let ny = int(hv[1])?;
    let h = num(hv[2])?;
    let origin = Vec2::new(num(hv[3])?, num(hv[4])?);
    let label = FieldLabel::parse(hv[5])?;
    let mut values = Vec::with_capacity(nx * ny);
    for (j, line) in lines.enumerate() {
        let row: Vec<f64> = line.split_whitespace().map(num).collect::<Result<_>>()?;
        if row.len() != nx {
            return Err(Error::DumpParse(format!(
                "row {j} has {} values, expected {nx}",
                row.len()
            )));
        }
        values.extend(row);
    }
    if values.len() != nx * ny {
        return Err(Error::DumpParse(format!(
            "expected {ny} rows, got {}",
            values.len() / nx.max(1)
        )));
    }
    Ok(FieldDump {
        nx,
        ny,
        h,
        origin,
        label,
        values,
    })
}

impl FieldDump {
    /// Attach the dumped values to `grid`, which must have the same layout.
    pub fn into_field(self, grid: Arc<GridSpec>) -> Result<ScalarField> {
        if grid.nx() != self.nx
            || grid.ny() != self.ny
            || grid.h() != self.h
            || grid.origin() != self.origin
            || self
                .values
                .iter()
                .zip(grid.inside_mask())
                .any(|(v, &inside)| v.is_nan() == inside)
        {
            return Err(Error::GridMismatch);
        }
        let datum = if self.label.is_log() {
            U_FLOOR.ln()
        } else {
            0.0
        };
        Ok(ScalarField::unchecked(grid, self.values, datum, self.label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::rasterize;
    use crate::geometry::Polygon;

    #[test]
    fn round_trip_is_bit_exact() {
        let tri = Polygon::new("t", &[[0.0, 0.0], [1.0, 0.1], [0.3, 0.9]]).unwrap();
        let g = Arc::new(rasterize(&tri, 1.0 / 37.0).unwrap());
        let f = ScalarField::from_fn(g.clone(), FieldLabel::Up, 0.0, |x| {
            (x.x * 3.1).sin() * x.y / 3.0 + 1e-300
        });
        let d = read_dump(&dump_text(&f)).unwrap();
        assert_eq!(d.label, FieldLabel::Up);
        let back = d.into_field(g).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn malformed_dumps() {
        assert!(read_dump("").is_err());
        assert!(read_dump("2 2 0.5 0 0 u\n1 2\n").is_err());
        assert!(read_dump("2 1 0.5 0 0 w\n1 2\n").is_err());
        assert!(read_dump("2 1 0.5 0 0 u\n1 x\n").is_err());
    }
}
