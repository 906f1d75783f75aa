//! Lattice-tabulated product and inverse with multilinear interpolation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{GroupError, LocalGroup};
use crate::rng::SplitMix64;

/// Samples of `ψ` on `[−r, r]^{2n}` and `ν` on `[−r, r]^n`, `axis_count` nodes per axis.
///
/// Rows are stored in lexicographic lattice order with the first coordinate
/// most significant; `ψ` rows index `(x, y)` as one `2n`-vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub axis_count: usize,
    pub dim: usize,
    pub radius: f64,
    pub psi: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
}

fn node(axis_count: usize, radius: f64, i: usize) -> f64 {
    -radius + 2.0 * radius * i as f64 / (axis_count - 1) as f64
}

fn lattice_points(axis_count: usize, radius: f64, k: usize) -> impl Iterator<Item = Vec<f64>> {
    let total = axis_count.pow(k as u32);
    (0..total).map(move |mut idx| {
        let mut p = vec![0.0; k];
        for d in (0..k).rev() {
            p[d] = node(axis_count, radius, idx % axis_count);
            idx /= axis_count;
        }
        p
    })
}

impl Table {
    /// Tabulates `g` on the full cube, evaluating outside the ball without domain checks.
    pub fn tabulate(g: &dyn LocalGroup, axis_count: usize) -> Result<Self, GroupError> {
        if axis_count < 2 {
            return Err(GroupError::Table("axis_count must be at least 2".into()));
        }
        let (n, r) = (g.dim(), g.radius());
        let psi =
            lattice_points(axis_count, r, 2 * n).map(|p| g.psi_raw(&p[..n], &p[n..])).collect::<Result<Vec<_>, _>>()?;
        let nu = lattice_points(axis_count, r, n).map(|p| g.nu_raw(&p)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { axis_count, dim: n, radius: r, psi, nu })
    }

    /// Adds uniform noise in `[−a, a]` to every node except those with `x = 0` or `y = 0`.
    pub fn with_noise(&self, amplitude: f64, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let n = self.dim;
        let mut out = self.clone();
        for (p, row) in lattice_points(self.axis_count, self.radius, 2 * n).zip(out.psi.iter_mut()) {
            let axis = p[..n].iter().all(|v| *v == 0.0) || p[n..].iter().all(|v| *v == 0.0);
            for v in row.iter_mut() {
                let e = rng.uniform(-amplitude, amplitude);
                if !axis {
                    *v += e;
                }
            }
        }
        for (p, row) in lattice_points(self.axis_count, self.radius, n).zip(out.nu.iter_mut()) {
            let axis = p.iter().all(|v| *v == 0.0);
            for v in row.iter_mut() {
                let e = rng.uniform(-amplitude, amplitude);
                if !axis {
                    *v += e;
                }
            }
        }
        out
    }

    pub(crate) fn check(&self) -> Result<(), GroupError> {
        let n = self.dim;
        if self.axis_count < 2 {
            return Err(GroupError::Table("axis_count must be at least 2".into()));
        }
        let want_psi = self.axis_count.pow(2 * n as u32);
        let want_nu = self.axis_count.pow(n as u32);
        if self.psi.len() != want_psi || self.nu.len() != want_nu {
            return Err(GroupError::Table(format!(
                "expected {want_psi} psi rows and {want_nu} nu rows, got {} and {}",
                self.psi.len(),
                self.nu.len()
            )));
        }
        if self.psi.iter().chain(&self.nu).any(|r| r.len() != n || r.iter().any(|v| !v.is_finite())) {
            return Err(GroupError::Table(format!("every row needs {n} finite values")));
        }
        Ok(())
    }

    fn interpolate(&self, rows: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
        let m = self.axis_count;
        let k = p.len();
        let h = 2.0 * self.radius / (m - 1) as f64;
        let mut base = vec![0usize; k];
        let mut frac = vec![0.0; k];
        for d in 0..k {
            let u = ((p[d] + self.radius) / h).clamp(0.0, (m - 1) as f64);
            let i = (u.floor() as usize).min(m - 2);
            base[d] = i;
            frac[d] = u - i as f64;
        }
        let mut out = vec![0.0; self.dim];
        for corner in 0..(1usize << k) {
            let mut w = 1.0;
            let mut idx = 0;
            for d in 0..k {
                let bit = (corner >> (k - 1 - d)) & 1;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                idx = idx * m + base[d] + bit;
            }
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&rows[idx]) {
                *o += w * v;
            }
        }
        out
    }

    pub fn psi(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut p = x.to_vec();
        p.extend_from_slice(y);
        self.interpolate(&self.psi, &p)
    }

    pub fn nu(&self, x: &[f64]) -> Vec<f64> {
        self.interpolate(&self.nu, x)
    }

    /// CSV layout: `axis_count,dim,radius` header and its values, then `psi` and `nu` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), GroupError> {
        let err = |e: csv::Error| GroupError::Table(e.to_string());
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
        out.write_record(["axis_count", "dim", "radius"]).map_err(err)?;
        out.write_record([self.axis_count.to_string(), self.dim.to_string(), format!("{:?}", self.radius)])
            .map_err(err)?;
        for (tag, rows) in [("psi", &self.psi), ("nu", &self.nu)] {
            for row in rows {
                let mut rec = vec![tag.to_string()];
                rec.extend(row.iter().map(|v| format!("{v:?}")));
                out.write_record(&rec).map_err(err)?;
            }
        }
        out.flush().map_err(|e| GroupError::Table(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, GroupError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(r);
        let headers = rdr.headers().map_err(|e| GroupError::Table(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["axis_count", "dim", "radius"] {
            return Err(GroupError::Table("header must be axis_count,dim,radius".into()));
        }
        let mut records = rdr.records();
        let line_err = |line: u64, msg: String| GroupError::Table(format!("line {line}: {msg}"));
        let first = records
            .next()
            .ok_or_else(|| GroupError::Table("missing parameter row".into()))?
            .map_err(|e| GroupError::Table(e.to_string()))?;
        let parse_f = |s: &str, line: u64| s.trim().parse::<f64>().map_err(|e| line_err(line, format!("'{s}': {e}")));
        let parse_u = |s: &str, line: u64| s.trim().parse::<usize>().map_err(|e| line_err(line, format!("'{s}': {e}")));
        if first.len() != 3 {
            return Err(line_err(2, "parameter row needs 3 fields".into()));
        }
        let axis_count = parse_u(&first[0], 2)?;
        let dim = parse_u(&first[1], 2)?;
        let radius = parse_f(&first[2], 2)?;
        let (mut psi, mut nu) = (Vec::new(), Vec::new());
        for rec in records {
            let rec = rec.map_err(|e| GroupError::Table(e.to_string()))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let values = rec.iter().skip(1).map(|s| parse_f(s, line)).collect::<Result<Vec<_>, _>>()?;
            match rec.get(0) {
                Some("psi") => psi.push(values),
                Some("nu") => nu.push(values),
                other => return Err(line_err(line, format!("unknown row tag {other:?}"))),
            }
        }
        let table = Self { axis_count, dim, radius, psi, nu };
        table.check()?;
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Bracket;
    use crate::local_group::LocalGroupSpec;

    #[test]
    fn heisenberg_interpolation_is_exact() {
        // x + y + ½[x, y] is multilinear in the coordinates
        let g = LocalGroupSpec::bch(Bracket::heisenberg(), 0.5).unwrap();
        let t = Table::tabulate(&g, 3).unwrap();
        let x = [0.13, -0.21, 0.05];
        let y = [-0.3, 0.11, 0.2];
        let a = t.psi(&x, &y);
        let b = g.psi(&x, &y).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = LocalGroupSpec::bch(Bracket::affine1(), 0.4).unwrap();
        let t = Table::tabulate(&g, 3).unwrap().with_noise(1e-3, 5);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = Table::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn csv_errors_carry_line() {
        let text = "axis_count,dim,radius\n2,1,0.5\npsi,0\npsi,x\n";
        let err = Table::read_csv(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn noise_spares_axes() {
        let g = LocalGroupSpec::bch(Bracket::zero(2), 0.5).unwrap();
        let t = Table::tabulate(&g, 3).unwrap().with_noise(0.1, 1);
        let spec = LocalGroupSpec::tabulated(t).unwrap();
        let v = spec.psi(&[0.2, 0.1], &[0.0, 0.0]).unwrap();
        assert!((v[0] - 0.2).abs() < 1e-15 && (v[1] - 0.1).abs() < 1e-15, "{v:?}");
        assert_eq!(spec.nu(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }
}
