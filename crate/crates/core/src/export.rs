//! Plot-ready exports: CSV tables and a little-endian binary trajectory dump.
//!
//! Binary layout (all little-endian):
//! `b"DSPLTRJ1"`, `u32 d`, `u32 components`, `u64 times`, then per axis `u64 n, f64 length`,
//! then per time `f64 t` followed by each component as `re, im` `f64` pairs in row-major order.

use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;
use std::io::{Read, Write};

use crate::coefficients::CoefficientProfile;
use crate::error::{LabError, Result};
use crate::field::{Field, Trajectory};
use crate::grid::Grid1D;
use crate::operator1d::SpectralDecomposition1D;
use crate::phillips::DispersiveKernel;

const MAGIC: &[u8; 8] = b"DSPLTRJ1";

fn csv_err(e: csv::Error) -> LabError {
    LabError::Io(std::io::Error::other(e))
}

fn write_rows<W: Write>(w: W, headers: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(headers).map_err(csv_err)?;
    for r in rows {
        out.write_record(&r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

/// Columns `x, a`.
pub fn write_profile_csv<W: Write>(p: &CoefficientProfile, grid: &Grid1D, w: W) -> Result<()> {
    let rows = grid.points().into_iter().map(|x| vec![x.to_string(), p.eval(x).to_string()]);
    write_rows(w, &strings(&["x", "a"]), rows)
}

/// Columns `k, lambda`, ascending.
pub fn write_spectrum_csv<W: Write>(s: &SpectralDecomposition1D, w: W) -> Result<()> {
    let rows = s.sorted_eigenvalues().into_iter().enumerate().map(|(k, l)| vec![k.to_string(), l.to_string()]);
    write_rows(w, &strings(&["k", "lambda"]), rows)
}

/// Columns `t, i0, .., re, im` (`re_c, im_c` per component for spinors).
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let first = traj.states().first().ok_or_else(|| LabError::InvalidArgument("empty trajectory".into()))?;
    let (d, nc) = (first.dim(), first.n_components());
    let mut headers: Vec<String> = std::iter::once("t".to_string()).chain((0..d).map(|a| format!("i{a}"))).collect();
    if nc == 1 {
        headers.extend(strings(&["re", "im"]));
    } else {
        for c in 0..nc {
            headers.push(format!("re_{c}"));
            headers.push(format!("im_{c}"));
        }
    }
    let rows = traj.iter().flat_map(|(t, s)| {
        s.component(0)
            .indexed_iter()
            .map(|(idx, _)| {
                let mut row = vec![t.to_string()];
                row.extend(idx.slice().iter().map(|i| i.to_string()));
                for c in 0..nc {
                    let z = s.component(c)[idx.clone()];
                    row.push(z.re.to_string());
                    row.push(z.im.to_string());
                }
                row
            })
            .collect::<Vec<_>>()
    });
    write_rows(w, &headers, rows)
}

/// Columns `xi, re, im` (the `xi_2 = 0` line in `d = 2`).
pub fn write_kernel_csv<W: Write>(k: &DispersiveKernel, w: W) -> Result<()> {
    let rows = k.profile_rows().into_iter().map(|(x, re, im)| vec![x.to_string(), re.to_string(), im.to_string()]);
    write_rows(w, &strings(&["xi", "re", "im"]), rows)
}

pub fn write_trajectory_binary<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let first = traj.states().first().ok_or_else(|| LabError::InvalidArgument("empty trajectory".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(first.dim() as u32).to_le_bytes())?;
    w.write_all(&(first.n_components() as u32).to_le_bytes())?;
    w.write_all(&(traj.len() as u64).to_le_bytes())?;
    for g in first.grids() {
        w.write_all(&(g.n() as u64).to_le_bytes())?;
        w.write_all(&g.length().to_le_bytes())?;
    }
    for (t, s) in traj.iter() {
        w.write_all(&t.to_le_bytes())?;
        for c in s.components() {
            for z in c.iter() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_trajectory_binary<R: Read>(mut r: R) -> Result<Trajectory> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LabError::InvalidArgument("not a trajectory dump".into()));
    }
    let d = read_u32(&mut r)? as usize;
    let nc = read_u32(&mut r)? as usize;
    let nt = read_u64(&mut r)? as usize;
    let grids = (0..d).map(|_| Grid1D::new(read_u64(&mut r)? as usize, read_f64(&mut r)?)).collect::<Result<Vec<_>>>()?;
    let shape: Vec<usize> = grids.iter().map(|g| g.n()).collect();
    let size: usize = shape.iter().product();
    let mut times = Vec::with_capacity(nt);
    let mut states = Vec::with_capacity(nt);
    for _ in 0..nt {
        times.push(read_f64(&mut r)?);
        let comps = (0..nc)
            .map(|_| {
                let vals = (0..size).map(|_| Ok(Complex64::new(read_f64(&mut r)?, read_f64(&mut r)?))).collect::<Result<Vec<_>>>()?;
                ArrayD::from_shape_vec(IxDyn(&shape), vals).map_err(|e| LabError::Shape(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        states.push(Field::new(grids.clone(), comps)?);
    }
    Trajectory::new(times, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_profile, ProfileSpec};
    use crate::operator1d::{assemble_operator, auto_decompose};

    fn small_traj() -> Trajectory {
        let g = Grid1D::new(8, 2.0).unwrap();
        let s = |k: f64| Field::spinor_1d(g, (0..8).map(|j| Complex64::new(j as f64 + k, -k)).collect(), vec![Complex64::new(0.5, k); 8]).unwrap();
        Trajectory::new(vec![0.0, 0.5], vec![s(0.0), s(1.0)]).unwrap()
    }

    #[test]
    fn binary_roundtrip() {
        let traj = small_traj();
        let mut buf = Vec::new();
        write_trajectory_binary(&traj, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 8 + 16 + 2 * (8 + 2 * 8 * 16));
        assert_eq!(read_trajectory_binary(buf.as_slice()).unwrap(), traj);
        assert!(read_trajectory_binary(&b"nonsense-bytes"[..]).is_err());
    }

    #[test]
    fn csv_headers_and_rows() {
        let mut buf = Vec::new();
        write_trajectory_csv(&small_traj(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,i0,re_0,im_0,re_1,im_1");
        assert_eq!(lines.len(), 1 + 2 * 8);
        assert_eq!(lines[12], "0.5,3,4,-1,0.5,1");

        let p = build_profile(&ProfileSpec::Constant { value: 2.0 }).unwrap();
        let g = Grid1D::new(8, 4.0).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&p, &g, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,a\n0,2\n0.5,2\n"));
        let mut buf = Vec::new();
        write_spectrum_csv(&auto_decompose(&assemble_operator(&p, &g)).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.lines().nth(1).unwrap().starts_with("0,"));
    }
}
