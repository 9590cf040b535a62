use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{divergence, gradient, Boundary, Grid, ScalarField, VectorField};
use crate::{Error, Result};

pub const CG_ITERATION_CAP: usize = 10_000;
pub const SOLVER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    /// Zero for direct spectral solves.
    pub iterations: usize,
    /// Relative residual of the final iterate.
    pub residual: f64,
    /// Mean subtracted from the right-hand side to make it compatible.
    pub mean_removed: f64,
}

struct Spectral {
    row: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Five-point Laplacian symbol.
    lap: Vec<f64>,
    /// Symbol of `divergence . gradient` with centred differences.
    wide: Vec<f64>,
}

/// Linear solvers bound to one grid. Periodic grids use FFTs, Dirichlet grids
/// use Jacobi-preconditioned conjugate gradients.
pub struct Solver {
    grid: Grid,
    spectral: Option<Spectral>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver").field("grid", &self.grid).finish()
    }
}

impl Solver {
    pub fn new(grid: &Grid) -> Self {
        let spectral = (grid.boundary() == Boundary::Periodic).then(|| {
            let (mx, my, h) = (grid.mx(), grid.my(), grid.h());
            let mut planner = FftPlanner::new();
            let symbol_1d = |k: usize, n: usize| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                ((2.0 * t.cos() - 2.0) / (h * h), -(t.sin() / h).powi(2))
            };
            let mut lap = Vec::with_capacity(mx * my);
            let mut wide = Vec::with_capacity(mx * my);
            // Spectral data is kept transposed: column index major.
            for i in 0..mx {
                let (lx, wx) = symbol_1d(i, mx);
                for j in 0..my {
                    let (ly, wy) = symbol_1d(j, my);
                    lap.push(lx + ly);
                    wide.push(wx + wy);
                }
            }
            Spectral {
                row: planner.plan_fft_forward(mx),
                row_inv: planner.plan_fft_inverse(mx),
                col: planner.plan_fft_forward(my),
                col_inv: planner.plan_fft_inverse(my),
                lap,
                wide,
            }
        });
        Self {
            grid: *grid,
            spectral,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check(&self, g: &Grid) -> Result<()> {
        if *g != self.grid {
            return Err(Error::GridMismatch(format!("{g:?} vs solver grid {:?}", self.grid)));
        }
        Ok(())
    }

    /// Solves `laplacian u = f` for zero-mean `u`. Periodic grids use the
    /// five-point operator; Dirichlet grids use the homogeneous Neumann
    /// five-point operator (reflected ghost nodes). The mean of `f` is removed.
    pub fn poisson(&self, f: &ScalarField) -> Result<(ScalarField, SolveInfo)> {
        self.check(f.grid())?;
        let mean = f.mean();
        let rhs: Vec<f64> = f.values().iter().map(|v| v - mean).collect();
        let (u, iterations, residual) = match &self.spectral {
            Some(sp) => (self.spectral_apply(sp, &rhs, |k| invert(sp.lap[k])), 0, 0.0),
            None => self.neumann_cg(&rhs)?,
        };
        let mut out = ScalarField::new(self.grid, u)?;
        let m = out.mean();
        out.values_mut().iter_mut().for_each(|v| *v -= m);
        Ok((
            out,
            SolveInfo {
                iterations,
                residual,
                mean_removed: mean,
            },
        ))
    }

    /// Solves `a u - b laplacian u = f` with `a > 0`, `b >= 0`. On Dirichlet
    /// grids boundary nodes are set to `f / a`.
    pub fn helmholtz(&self, f: &ScalarField, a: f64, b: f64) -> Result<ScalarField> {
        self.check(f.grid())?;
        check_coefficients(a, b)?;
        let u = match &self.spectral {
            Some(sp) => self.spectral_apply(sp, f.values(), |k| 1.0 / (a - b * sp.lap[k])),
            None => self.dirichlet_helmholtz_cg(f.values(), a, b)?,
        };
        ScalarField::new(self.grid, u)
    }

    /// Componentwise [`Solver::helmholtz`].
    pub fn helmholtz_vector(&self, f: &VectorField, a: f64, b: f64) -> Result<VectorField> {
        self.check(f.grid())?;
        check_coefficients(a, b)?;
        match &self.spectral {
            Some(sp) => {
                let mut data: Vec<Complex64> =
                    f.x().iter().zip(f.y()).map(|(&x, &y)| Complex64::new(x, y)).collect();
                self.fft2(sp, &mut data, true);
                // Transposed layout: index k addresses the symbol directly.
                for (k, z) in data.iter_mut().enumerate() {
                    *z /= a - b * sp.lap[k];
                }
                self.fft2(sp, &mut data, false);
                let scale = 1.0 / data.len() as f64;
                VectorField::new(
                    self.grid,
                    data.iter().map(|z| z.re * scale).collect(),
                    data.iter().map(|z| z.im * scale).collect(),
                )
            }
            None => VectorField::new(
                self.grid,
                self.dirichlet_helmholtz_cg(f.x(), a, b)?,
                self.dirichlet_helmholtz_cg(f.y(), a, b)?,
            ),
        }
    }

    /// Discrete Leray projection `u - gradient p` with `divergence gradient p
    /// = divergence u`. Returns the projected field and `p`.
    ///
    /// On periodic grids the result is divergence-free to round-off. On
    /// Dirichlet grids `p` solves the Neumann five-point problem, the result
    /// is set to zero on the boundary, and the divergence is `O(h^2)`.
    pub fn project(&self, u: &VectorField) -> Result<(VectorField, ScalarField)> {
        self.check(u.grid())?;
        let div = divergence(u);
        let p = match &self.spectral {
            Some(sp) => {
                ScalarField::new(self.grid, self.spectral_apply(sp, div.values(), |k| invert(sp.wide[k])))?
            }
            None => self.poisson(&div)?.0,
        };
        let gp = gradient(&p);
        let mut out = VectorField::new(
            self.grid,
            u.x().iter().zip(gp.x()).map(|(a, b)| a - b).collect(),
            u.y().iter().zip(gp.y()).map(|(a, b)| a - b).collect(),
        )?;
        out.enforce_dirichlet();
        Ok((out, p))
    }

    fn spectral_apply(&self, sp: &Spectral, f: &[f64], symbol: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(sp, &mut data, true);
        for (k, z) in data.iter_mut().enumerate() {
            *z *= symbol(k);
        }
        self.fft2(sp, &mut data, false);
        let scale = 1.0 / data.len() as f64;
        data.iter().map(|z| z.re * scale).collect()
    }

    /// Forward: row-major physical data to transposed spectral data.
    /// Inverse: the reverse (unnormalised).
    fn fft2(&self, sp: &Spectral, data: &mut Vec<Complex64>, forward: bool) {
        let (mx, my) = (self.grid.mx(), self.grid.my());
        if forward {
            sp.row.process(data);
            *data = transpose(data, mx, my);
            sp.col.process(data);
        } else {
            sp.col_inv.process(data);
            *data = transpose(data, my, mx);
            sp.row_inv.process(data);
        }
    }

    fn dirichlet_helmholtz_cg(&self, f: &[f64], a: f64, b: f64) -> Result<Vec<f64>> {
        let g = self.grid;
        let (mx, my, h) = (g.mx(), g.my(), g.h());
        let c = b / (h * h);
        let mut u = vec![0.0; g.len()];
        for j in 0..my {
            for i in 0..mx {
                if g.is_boundary(i, j) {
                    let k = g.index(i, j);
                    u[k] = f[k] / a;
                }
            }
        }
        // Interior right-hand side with known boundary values moved across.
        let mut rhs = vec![0.0; g.len()];
        for j in 1..my - 1 {
            for i in 1..mx - 1 {
                let k = g.index(i, j);
                let mut r = f[k];
                for (ii, jj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    if g.is_boundary(ii, jj) {
                        r += c * u[g.index(ii, jj)];
                    }
                }
                rhs[k] = r;
            }
        }
        let apply = |x: &[f64], y: &mut [f64]| {
            for j in 1..my - 1 {
                for i in 1..mx - 1 {
                    let k = j * mx + i;
                    let mut nb = 0.0;
                    if i > 1 {
                        nb += x[k - 1];
                    }
                    if i < mx - 2 {
                        nb += x[k + 1];
                    }
                    if j > 1 {
                        nb += x[k - mx];
                    }
                    if j < my - 2 {
                        nb += x[k + mx];
                    }
                    y[k] = (a + 4.0 * c) * x[k] - c * nb;
                }
            }
        };
        let interior = |k: usize| {
            let (i, j) = (k % mx, k / mx);
            !g.is_boundary(i, j)
        };
        let weights: Vec<f64> = (0..g.len()).map(|k| if interior(k) { 1.0 } else { 0.0 }).collect();
        let diag = a + 4.0 * c;
        let x = pcg(apply, &rhs, &weights, diag, false)?.0;
        for k in 0..g.len() {
            if interior(k) {
                u[k] = x[k];
            }
        }
        Ok(u)
    }

    /// Weighted CG for `-L_N p = -f` where `L_N` is the reflected-ghost
    /// Neumann Laplacian. `W L_N` is symmetric for trapezoid weights `W`.
    fn neumann_cg(&self, f: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
        let g = self.grid;
        let (mx, my, h) = (g.mx(), g.my(), g.h());
        let inv = 1.0 / (h * h);
        let apply = |x: &[f64], y: &mut [f64]| {
            for j in 0..my {
                for i in 0..mx {
                    let k = j * mx + i;
                    let xm = if i == 0 { x[k + 1] } else { x[k - 1] };
                    let xp = if i == mx - 1 { x[k - 1] } else { x[k + 1] };
                    let ym = if j == 0 { x[k + mx] } else { x[k - mx] };
                    let yp = if j == my - 1 { x[k - mx] } else { x[k + mx] };
                    y[k] = (4.0 * x[k] - xm - xp - ym - yp) * inv;
                }
            }
        };
        let weights: Vec<f64> = (0..g.len()).map(|k| g.weight(k % mx, k / mx)).collect();
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let (x, it, res) = pcg(apply, &rhs, &weights, 4.0 * inv, true)?;
        Ok((x, it, res))
    }
}

fn check_coefficients(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "helmholtz coefficients need a > 0, b >= 0, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

fn invert(s: f64) -> f64 {
    if s.abs() < 1e-12 {
        0.0
    } else {
        1.0 / s
    }
}

fn transpose(data: &[Complex64], cols: usize, rows: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Preconditioned CG in the inner product weighted by `w`. Entries with zero
/// weight are inactive and stay zero. With `singular` the iterate is kept
/// orthogonal to constants.
fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    w: &[f64],
    diag: f64,
    singular: bool,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let dot = |x: &[f64], y: &[f64]| -> f64 { (0..n).map(|k| w[k] * x[k] * y[k]).sum() };
    let wsum: f64 = w.iter().sum();
    let project = |x: &mut [f64]| {
        if singular {
            let m = (0..n).map(|k| w[k] * x[k]).sum::<f64>() / wsum;
            for k in 0..n {
                if w[k] > 0.0 {
                    x[k] -= m;
                }
            }
        }
    };
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = b.to_vec();
    project(&mut r);
    let bnorm = dot(&r, &r).sqrt();
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut z: Vec<f64> = r.iter().map(|v| v / diag).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = 1.0;
    for it in 1..=CG_ITERATION_CAP {
        apply(&p, &mut ap);
        for k in 0..n {
            if w[k] == 0.0 {
                ap[k] = 0.0;
            }
        }
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        project(&mut r);
        res = dot(&r, &r).sqrt() / bnorm;
        if res < SOLVER_TOLERANCE {
            project(&mut x);
            return Ok((x, it, res));
        }
        for k in 0..n {
            z[k] = r[k] / diag;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::SolverFailure {
        iterations: CG_ITERATION_CAP,
        residual: res,
    })
}
