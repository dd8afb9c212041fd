//! Curve CSV: a versioned header comment, fixed column order, and
//! seventeen-significant-digit values that parse back bitwise.

use std::fmt::Write as _;

use condex_core::{DVector, ManifoldTag};

use crate::config::parse_manifold;
use crate::runner::CurveData;

pub const FORMAT_VERSION: u32 = 1;

fn manifold_code(m: ManifoldTag) -> String {
    match m {
        ManifoldTag::Euclidean(d) => format!("E{d}"),
        ManifoldTag::SpaceForm(condex_core::Signature::Sphere) => "S2".into(),
        ManifoldTag::SpaceForm(condex_core::Signature::Hyperbolic) => "H2".into(),
        ManifoldTag::UnitQuaternions => "S3".into(),
    }
}

pub fn header_columns(dim: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=dim).map(|i| format!("x{i}")));
    cols.extend((1..=dim).map(|i| format!("v{i}")));
    cols.extend(["integrand", "res_b", "res_c"].map(String::from));
    cols
}

pub fn write_csv(curve: &CurveData, hash: &str) -> String {
    let dim = curve.manifold.ambient_dim();
    let mut out = String::new();
    writeln!(
        out,
        "# condex {} format={FORMAT_VERSION} scenario={hash} curve={} manifold={}",
        env!("CARGO_PKG_VERSION"),
        curve.label,
        manifold_code(curve.manifold)
    )
    .unwrap();
    writeln!(out, "{}", header_columns(dim).join(",")).unwrap();
    for i in 0..curve.len() {
        let row = std::iter::once(curve.times[i])
            .chain(curve.points[i].iter().copied())
            .chain(curve.velocities[i].iter().copied())
            .chain([curve.integrand[i], curve.res_b[i], curve.res_c[i]]);
        let cells: Vec<String> = row.map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn malformed(line: usize, message: impl Into<String>) -> CsvError {
    CsvError::Malformed { line, message: message.into() }
}

/// Parse a file produced by [`write_csv`].
pub fn read_csv(text: &str) -> Result<CurveData, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| malformed(1, "empty file"))?;
    let field = |key: &str| head.split_whitespace().find_map(|w| w.strip_prefix(key)).map(str::to_string);
    let label = field("curve=").ok_or_else(|| malformed(1, "missing curve label"))?;
    let manifold = field("manifold=").as_deref().and_then(parse_manifold).ok_or_else(|| malformed(1, "missing or unknown manifold"))?;
    let dim = manifold.ambient_dim();
    let (_, cols) = lines.next().ok_or_else(|| malformed(2, "missing column header"))?;
    if cols.split(',').collect::<Vec<_>>() != header_columns(dim) {
        return Err(malformed(2, format!("unexpected columns {cols:?}")));
    }
    let mut c = CurveData {
        label,
        manifold,
        times: Vec::new(),
        points: Vec::new(),
        velocities: Vec::new(),
        integrand: Vec::new(),
        res_b: Vec::new(),
        res_c: Vec::new(),
    };
    for (i, line) in lines {
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| malformed(i + 1, e.to_string())))
            .collect::<Result<Vec<f64>, _>>()?;
        if vals.len() != 2 * dim + 4 {
            return Err(malformed(i + 1, format!("expected {} values, found {}", 2 * dim + 4, vals.len())));
        }
        c.times.push(vals[0]);
        c.points.push(DVector::from_column_slice(&vals[1..1 + dim]));
        c.velocities.push(DVector::from_column_slice(&vals[1 + dim..1 + 2 * dim]));
        c.integrand.push(vals[1 + 2 * dim]);
        c.res_b.push(vals[2 + 2 * dim]);
        c.res_c.push(vals[3 + 2 * dim]);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve(vals: &[f64], m: ManifoldTag) -> CurveData {
        let d = m.ambient_dim();
        let n = vals.len() / (2 * d + 4);
        let row = |i: usize| &vals[i * (2 * d + 4)..(i + 1) * (2 * d + 4)];
        CurveData {
            label: "probe".into(),
            manifold: m,
            times: (0..n).map(|i| row(i)[0]).collect(),
            points: (0..n).map(|i| DVector::from_column_slice(&row(i)[1..1 + d])).collect(),
            velocities: (0..n).map(|i| DVector::from_column_slice(&row(i)[1 + d..1 + 2 * d])).collect(),
            integrand: (0..n).map(|i| row(i)[1 + 2 * d]).collect(),
            res_b: (0..n).map(|i| row(i)[2 + 2 * d]).collect(),
            res_c: (0..n).map(|i| row(i)[3 + 2 * d]).collect(),
        }
    }

    #[test]
    fn header_and_columns() {
        let c = curve(&[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.25, 0.0, 0.0], ManifoldTag::SpaceForm(condex_core::Signature::Sphere));
        let text = write_csv(&c, "abc");
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# condex 0.1.0 format=1 scenario=abc curve=probe manifold=S2"));
        assert_eq!(lines.next().unwrap(), "t,x1,x2,x3,v1,v2,v3,integrand,res_b,res_c");
        assert_eq!(lines.next().unwrap().split(',').nth(7).unwrap(), "2.5000000000000000e-1");
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_csv("").is_err());
        assert!(matches!(read_csv("# condex curve=a manifold=E1\nt,x1,v1,integrand,res_b,res_c\n1,2,3\n"), Err(CsvError::Malformed { line: 3, .. })));
    }

    proptest! {
        #[test]
        fn bitwise_round_trip(bits in proptest::collection::vec(any::<u64>(), 20), dim in 1usize..4) {
            let m = ManifoldTag::Euclidean(dim);
            let vals: Vec<f64> = bits.iter().map(|b| f64::from_bits(*b)).map(|v| if v.is_finite() { v } else { 0.5 }).collect();
            let width = 2 * dim + 4;
            let c = curve(&vals[..(vals.len() / width) * width], m);
            let back = read_csv(&write_csv(&c, "h")).unwrap();
            let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
            prop_assert!(same(&back.times, &c.times));
            prop_assert!(same(&back.integrand, &c.integrand) && same(&back.res_b, &c.res_b) && same(&back.res_c, &c.res_c));
            for (p, q) in back.points.iter().zip(&c.points).chain(back.velocities.iter().zip(&c.velocities)) {
                prop_assert!(same(p.as_slice(), q.as_slice()));
            }
        }
    }
}
