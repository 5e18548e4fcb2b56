//! Cell-centred finite-difference elliptic operators.
//!
//! `A = Σ_faces a_f D_fᵀ D_f / h² + diag(m)`: interior faces couple the two
//! adjacent cells, boundary faces use the reflected ghost value of a Dirichlet
//! condition and contribute `2 a_f u_p / h²`. For `a_f > 0` and `m ≥ 0` the
//! matrix is symmetric positive definite and an M-matrix.

use crate::error::{Error, Result};

/// Face topology of the `2^J`-per-axis grid.
#[derive(Debug, Clone)]
pub(crate) struct Faces {
    pub n_cells: usize,
    pub h: f64,
    /// Interior faces `(p, q)`.
    pub interior: Vec<(usize, usize)>,
    /// Cell adjacent to each boundary face (corner cells appear twice in 2D).
    pub boundary: Vec<usize>,
}

impl Faces {
    pub fn new(dim: usize, level: u32) -> Self {
        let n = 1usize << level;
        let h = 1.0 / n as f64;
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        match dim {
            1 => {
                interior.extend((0..n.saturating_sub(1)).map(|i| (i, i + 1)));
                boundary.push(0);
                boundary.push(n - 1);
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        let p = i * n + j;
                        if i + 1 < n {
                            interior.push((p, p + n));
                        }
                        if j + 1 < n {
                            interior.push((p, p + 1));
                        }
                    }
                }
                for k in 0..n {
                    boundary.extend([k, (n - 1) * n + k, k * n, k * n + n - 1]);
                }
            }
        }
        Self {
            n_cells: n.pow(dim as u32),
            h,
            interior,
            boundary,
        }
    }

    /// Arithmetic face averages of a cell field, boundary faces take the cell value.
    pub fn face_average(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let interior = self
            .interior
            .iter()
            .map(|&(p, q)| 0.5 * (f[p] + f[q]))
            .collect();
        let boundary = self.boundary.iter().map(|&p| f[p]).collect();
        (interior, boundary)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EllipticOperator<'a> {
    pub faces: &'a Faces,
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
    pub mass: Option<Vec<f64>>,
    pub dim: usize,
}

pub(crate) struct Solve {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

impl EllipticOperator<'_> {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let inv_h2 = 1.0 / (self.faces.h * self.faces.h);
        let mut y = match &self.mass {
            Some(m) => m.iter().zip(x).map(|(a, b)| a * b).collect(),
            None => vec![0.0; x.len()],
        };
        for (&(p, q), &a) in self.faces.interior.iter().zip(&self.interior) {
            let flux = a * (x[p] - x[q]) * inv_h2;
            y[p] += flux;
            y[q] -= flux;
        }
        for (&p, &a) in self.faces.boundary.iter().zip(&self.boundary) {
            y[p] += 2.0 * a * x[p] * inv_h2;
        }
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let inv_h2 = 1.0 / (self.faces.h * self.faces.h);
        let mut d = match &self.mass {
            Some(m) => m.clone(),
            None => vec![0.0; self.faces.n_cells],
        };
        for (&(p, q), &a) in self.faces.interior.iter().zip(&self.interior) {
            d[p] += a * inv_h2;
            d[q] += a * inv_h2;
        }
        for (&p, &a) in self.faces.boundary.iter().zip(&self.boundary) {
            d[p] += 2.0 * a * inv_h2;
        }
        d
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Solve> {
        let u = match self.dim {
            1 => self.solve_tridiagonal(rhs)?,
            _ => return self.solve_cg(rhs),
        };
        let relative_residual = self.relative_residual(&u, rhs);
        Ok(Solve {
            u,
            iterations: 1,
            relative_residual,
        })
    }

    /// Normwise backward error `‖Au − b‖ / (‖A‖ ‖u‖ + ‖b‖)`, with `‖A‖`
    /// bounded by twice the largest diagonal entry (valid for this M-matrix).
    pub fn relative_residual(&self, u: &[f64], rhs: &[f64]) -> f64 {
        let au = self.apply(u);
        let norm = |v: &[f64]| v.iter().map(|b| b * b).sum::<f64>().sqrt();
        let num: f64 = au
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let a_norm = 2.0 * self.diagonal().iter().cloned().fold(0.0, f64::max);
        let den = a_norm * norm(u) + norm(rhs);
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Thomas algorithm; interior faces of a 1D grid are `(i, i+1)` in order.
    fn solve_tridiagonal(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let inv_h2 = 1.0 / (self.faces.h * self.faces.h);
        let diag = self.diagonal();
        let off: Vec<f64> = self.interior.iter().map(|a| -a * inv_h2).collect();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = diag[0];
        if denom <= 0.0 {
            return Err(Error::Solver(
                "non-positive pivot in tridiagonal solve".into(),
            ));
        }
        c[0] = if n > 1 { off[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = diag[i] - off[i - 1] * c[i - 1];
            if !(denom > 0.0) {
                return Err(Error::Solver(format!(
                    "non-positive pivot {denom} at row {i}"
                )));
            }
            if i + 1 < n {
                c[i] = off[i] / denom;
            }
            d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Jacobi-preconditioned conjugate gradients to relative residual 1e-12.
    fn solve_cg(&self, rhs: &[f64]) -> Result<Solve> {
        const TOL: f64 = 1e-12;
        let n = rhs.len();
        let inv_diag: Vec<f64> = self.diagonal().iter().map(|d| 1.0 / d).collect();
        let bnorm = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(Solve {
                u: x,
                iterations: 0,
                relative_residual: 0.0,
            });
        }
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let max_iter = 20 * n + 100;
        for it in 1..=max_iter {
            let ap = self.apply(&p);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                return Err(Error::Solver("operator is not positive definite".into()));
            }
            let step = rz / pap;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rnorm <= TOL * bnorm {
                let relative_residual = self.relative_residual(&x, rhs);
                return Ok(Solve {
                    u: x,
                    iterations: it,
                    relative_residual,
                });
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Solver(format!(
            "conjugate gradients did not converge in {max_iter} iterations"
        )))
    }
}
