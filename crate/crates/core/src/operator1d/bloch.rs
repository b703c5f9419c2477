//! Bloch-Floquet block diagonalization of a periodic stencil on a torus of `cells` periods.
//!
//! Index `j = c m + r` (cell `c`, offset `r`). A DFT over `c` at quasi-momentum
//! `theta_q = 2 pi q / cells` leaves an `m x m` Hermitian block per `q`; blocks with
//! `q > cells / 2` are complex conjugates of block `cells - q` and are not stored.

use faer::{c64, Mat, Side};
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use super::DiscreteOperator1D;
use crate::error::{LabError, Result};

#[derive(Clone)]
pub(super) struct BlochBasis {
    cells: usize,
    cell_len: usize,
    /// Eigenvectors `V_q` (columns) for `q = 0..=cells/2`.
    blocks: Vec<Mat<c64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl BlochBasis {
    pub(super) fn new(op: &DiscreteOperator1D, period: f64) -> Result<(Self, Vec<f64>)> {
        let g = op.grid();
        let n = g.n();
        let h = g.spacing();
        let m_f = period / h;
        let m = m_f.round() as usize;
        if (m_f - m as f64).abs() > 1e-9 || m < 3 || !n.is_multiple_of(m) {
            return Err(LabError::Eigen(format!("period {period} is not a whole number (>= 3) of cells of the grid")));
        }
        let cells = n / m;
        let s = op.stagger();
        let top = s.iter().cloned().fold(0.0, f64::max);
        for j in 0..n {
            if (s[j] - s[j % m]).abs() > 1e-12 * top {
                return Err(LabError::Eigen(format!("stagger is not {m}-periodic at index {j}")));
            }
        }
        let h2 = h * h;
        let mut blocks = Vec::with_capacity(cells / 2 + 1);
        let mut eig_half: Vec<Vec<f64>> = Vec::with_capacity(cells / 2 + 1);
        for q in 0..=cells / 2 {
            let theta = 2.0 * PI * q as f64 / cells as f64;
            let mut a = Mat::<c64>::zeros(m, m);
            for r in 0..m {
                let prev = (r + m - 1) % m;
                a[(r, r)] = c64::new((s[r] + s[prev]) / h2, 0.0);
                if r + 1 < m {
                    a[(r + 1, r)] = c64::new(-s[r] / h2, 0.0);
                    a[(r, r + 1)] = c64::new(-s[r] / h2, 0.0);
                }
            }
            let corner = c64::new(-s[m - 1] / h2, 0.0) * c64::new(theta.cos(), theta.sin());
            a[(m - 1, 0)] += corner;
            a[(0, m - 1)] += corner.conj();
            let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| LabError::Eigen(format!("{e:?}")))?;
            eig_half.push((0..m).map(|b| evd.S()[b].re).collect());
            blocks.push(evd.U().to_owned());
        }
        let eigenvalues = (0..cells).flat_map(|q| eig_half[q.min(cells - q)].clone()).collect();
        let mut planner = FftPlanner::new();
        let basis = BlochBasis { cells, cell_len: m, blocks, fwd: planner.plan_fft_forward(cells), inv: planner.plan_fft_inverse(cells) };
        Ok((basis, eigenvalues))
    }

    /// `(V_q[r, b], conjugated?)`
    fn entry(&self, q: usize, r: usize, b: usize) -> Complex64 {
        if q <= self.cells / 2 {
            let z = self.blocks[q][(r, b)];
            Complex64::new(z.re, z.im)
        } else {
            let z = self.blocks[self.cells - q][(r, b)];
            Complex64::new(z.re, -z.im)
        }
    }

    fn cell_dft(&self, line: &[Complex64], plan: &dyn Fft<f64>) -> Vec<Complex64> {
        let (mc, m) = (self.cells, self.cell_len);
        let scale = 1.0 / (mc as f64).sqrt();
        let mut out = vec![Complex64::new(0.0, 0.0); mc * m];
        let mut buf = vec![Complex64::new(0.0, 0.0); mc];
        for r in 0..m {
            for c in 0..mc {
                buf[c] = line[c * m + r];
            }
            plan.process(&mut buf);
            for q in 0..mc {
                out[q * m + r] = buf[q] * scale;
            }
        }
        out
    }

    pub(super) fn forward_lines(&self, mut lines: Array2<Complex64>) -> Array2<Complex64> {
        let (mc, m) = (self.cells, self.cell_len);
        for mut row in lines.rows_mut() {
            let line: Vec<Complex64> = row.iter().cloned().collect();
            let hat = self.cell_dft(&line, self.fwd.as_ref());
            for q in 0..mc {
                for b in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for r in 0..m {
                        acc += self.entry(q, r, b).conj() * hat[q * m + r];
                    }
                    row[q * m + b] = acc;
                }
            }
        }
        lines
    }

    pub(super) fn inverse_lines(&self, mut lines: Array2<Complex64>) -> Array2<Complex64> {
        let (mc, m) = (self.cells, self.cell_len);
        for mut row in lines.rows_mut() {
            let mut hat = vec![Complex64::new(0.0, 0.0); mc * m];
            for q in 0..mc {
                for r in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for b in 0..m {
                        acc += self.entry(q, r, b) * row[q * m + b];
                    }
                    hat[q * m + r] = acc;
                }
            }
            // inverse cell DFT: hat is indexed [q * m + r]
            let scale = 1.0 / (mc as f64).sqrt();
            let mut buf = vec![Complex64::new(0.0, 0.0); mc];
            for r in 0..m {
                for q in 0..mc {
                    buf[q] = hat[q * m + r];
                }
                self.inv.process(&mut buf);
                for c in 0..mc {
                    row[c * m + r] = buf[c] * scale;
                }
            }
        }
        lines
    }
}
