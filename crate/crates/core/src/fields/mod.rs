//! Uniform node-centred Cartesian grid, second-order stencils and quadrature.
//!
//! Values are stored row-major: node `(i, j)` (x index `i`, y index `j`) lives
//! at `j * mx + i` where `mx` is the number of nodes per row. In periodic mode
//! there are `nx` nodes per row (the node at `x = Lx` is the image of `x = 0`);
//! in Dirichlet mode the boundary nodes are stored too, so rows have `nx + 1`
//! nodes.

mod solver;

use serde::{Deserialize, Serialize};

pub use solver::{SolveInfo, Solver, CG_ITERATION_CAP, SOLVER_TOLERANCE};

use crate::geometry::Rect;
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// No-slip velocity and `phi = -1` on the box boundary.
    Dirichlet,
}

impl Boundary {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Periodic => "periodic",
            Self::Dirichlet => "dirichlet",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "periodic" => Some(Self::Periodic),
            "dirichlet" => Some(Self::Dirichlet),
            _ => None,
        }
    }
}

pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    lx: f64,
    ly: f64,
    boundary: Boundary,
}

impl Grid {
    pub fn new(
        nx: usize,
        ny: usize,
        origin: [f64; 2],
        lx: f64,
        ly: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells per direction, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!("box lengths must be positive, got {lx} x {ly}")));
        }
        let (hx, hy) = (lx / nx as f64, ly / ny as f64);
        if ((hx - hy) / hx).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!(
                "spacing must be isotropic, got hx = {hx}, hy = {hy}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            origin,
            lx,
            ly,
            boundary,
        })
    }

    /// `n x n` cells on the unit square.
    pub fn unit_square(n: usize, boundary: Boundary) -> Result<Self> {
        Self::new(n, n, [0.0, 0.0], 1.0, 1.0, boundary)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn h(&self) -> f64 {
        self.lx / self.nx as f64
    }

    /// Nodes per row.
    pub fn mx(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.nx,
            Boundary::Dirichlet => self.nx + 1,
        }
    }

    /// Nodes per column.
    pub fn my(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.ny,
            Boundary::Dirichlet => self.ny + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.mx() * self.my()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.mx() + i
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Vec2 {
        let h = self.h();
        Vec2::new(self.origin[0] + i as f64 * h, self.origin[1] + j as f64 * h)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        self.boundary == Boundary::Dirichlet
            && (i == 0 || j == 0 || i == self.mx() - 1 || j == self.my() - 1)
    }

    /// Trapezoid weight of a node (one in periodic mode).
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => 1.0,
            Boundary::Dirichlet => {
                let wx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
                let wy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
                wx * wy
            }
        }
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            min: Vec2::new(self.origin[0], self.origin[1]),
            max: Vec2::new(self.origin[0] + self.lx, self.origin[1] + self.ly),
        }
    }

    /// Periodic image of `x` closest to `anchor`; identity in Dirichlet mode.
    pub fn nearest_image(&self, x: &Vec2, anchor: &Vec2) -> Vec2 {
        match self.boundary {
            Boundary::Dirichlet => *x,
            Boundary::Periodic => {
                let wrap = |d: f64, l: f64| d - l * (d / l).round();
                anchor + Vec2::new(wrap(x.x - anchor.x, self.lx), wrap(x.y - anchor.y, self.ly))
            }
        }
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&Vec2) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.my() {
            for i in 0..grid.mx() {
                values.push(f(&grid.position(i, j)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Quadrature mean over the box.
    pub fn mean(&self) -> f64 {
        integrate(self) / self.grid.area()
    }

    /// Overwrites boundary nodes with `value` (Dirichlet mode only).
    pub fn enforce_dirichlet(&mut self, value: f64) {
        if self.grid.boundary != Boundary::Dirichlet {
            return;
        }
        let (mx, my) = (self.grid.mx(), self.grid.my());
        for i in 0..mx {
            self.values[i] = value;
            self.values[(my - 1) * mx + i] = value;
        }
        for j in 0..my {
            self.values[j * mx] = value;
            self.values[j * mx + mx - 1] = value;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != grid.len() || y.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values per component, got {} and {}",
                grid.len(),
                x.len(),
                y.len()
            )));
        }
        Ok(Self { grid, x, y })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            x: vec![0.0; grid.len()],
            y: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&Vec2) -> Vec2) -> Self {
        let mut x = Vec::with_capacity(grid.len());
        let mut y = Vec::with_capacity(grid.len());
        for j in 0..grid.my() {
            for i in 0..grid.mx() {
                let v = f(&grid.position(i, j));
                x.push(v.x);
                y.push(v.y);
            }
        }
        Self { grid, x, y }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn components_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.x, &mut self.y)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Vec2 {
        let k = self.grid.index(i, j);
        Vec2::new(self.x[k], self.y[k])
    }

    pub fn max_norm(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// Pointwise `|v|^2` as a scalar field.
    pub fn norm_squared(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.x.iter().zip(&self.y).map(|(a, b)| a * a + b * b).collect(),
        }
    }

    pub fn enforce_dirichlet(&mut self) {
        if self.grid.boundary != Boundary::Dirichlet {
            return;
        }
        let mut sx = ScalarField {
            grid: self.grid,
            values: std::mem::take(&mut self.x),
        };
        let mut sy = ScalarField {
            grid: self.grid,
            values: std::mem::take(&mut self.y),
        };
        sx.enforce_dirichlet(0.0);
        sy.enforce_dirichlet(0.0);
        self.x = sx.values;
        self.y = sy.values;
    }
}

/// Neighbour offsets along one axis. Returns `(minus, plus)` indices, or
/// `None` on a Dirichlet boundary node.
#[inline]
fn neighbours(k: usize, n: usize, periodic: bool) -> Option<(usize, usize)> {
    if periodic {
        Some((if k == 0 { n - 1 } else { k - 1 }, if k + 1 == n { 0 } else { k + 1 }))
    } else if k == 0 || k + 1 == n {
        None
    } else {
        Some((k - 1, k + 1))
    }
}

/// First derivative along one axis at line position `k` of a strided line.
#[inline]
fn d1(line: impl Fn(usize) -> f64, k: usize, n: usize, periodic: bool, h: f64) -> f64 {
    match neighbours(k, n, periodic) {
        Some((m, p)) => (line(p) - line(m)) / (2.0 * h),
        None if k == 0 => (-3.0 * line(0) + 4.0 * line(1) - line(2)) / (2.0 * h),
        None => (3.0 * line(n - 1) - 4.0 * line(n - 2) + line(n - 3)) / (2.0 * h),
    }
}

/// Second derivative along one axis.
#[inline]
fn d2(line: impl Fn(usize) -> f64, k: usize, n: usize, periodic: bool, h: f64) -> f64 {
    match neighbours(k, n, periodic) {
        Some((m, p)) => (line(p) - 2.0 * line(k) + line(m)) / (h * h),
        None if k == 0 => (2.0 * line(0) - 5.0 * line(1) + 4.0 * line(2) - line(3)) / (h * h),
        None => {
            (2.0 * line(n - 1) - 5.0 * line(n - 2) + 4.0 * line(n - 3) - line(n - 4)) / (h * h)
        }
    }
}

/// Centred gradient; one-sided second-order differences on Dirichlet
/// boundary nodes.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = f.grid;
    let (mx, my, h) = (g.mx(), g.my(), g.h());
    let periodic = g.boundary == Boundary::Periodic;
    let v = &f.values;
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    for j in 0..my {
        let row = j * mx;
        for i in 0..mx {
            gx[row + i] = d1(|k| v[row + k], i, mx, periodic, h);
            gy[row + i] = d1(|k| v[k * mx + i], j, my, periodic, h);
        }
    }
    VectorField { grid: g, x: gx, y: gy }
}

/// Centred divergence, paired with [`gradient`]: in periodic mode
/// `<gradient f, u> = -<f, divergence u>` exactly.
pub fn divergence(u: &VectorField) -> ScalarField {
    let g = u.grid;
    let (mx, my, h) = (g.mx(), g.my(), g.h());
    let periodic = g.boundary == Boundary::Periodic;
    let (ux, uy) = (&u.x, &u.y);
    let mut out = vec![0.0; g.len()];
    for j in 0..my {
        let row = j * mx;
        for i in 0..mx {
            out[row + i] = d1(|k| ux[row + k], i, mx, periodic, h)
                + d1(|k| uy[k * mx + i], j, my, periodic, h);
        }
    }
    ScalarField { grid: g, values: out }
}

/// Five-point Laplacian; Dirichlet boundary nodes use one-sided second-order
/// second differences.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = f.grid;
    let (mx, my, h) = (g.mx(), g.my(), g.h());
    let periodic = g.boundary == Boundary::Periodic;
    let v = &f.values;
    let mut out = vec![0.0; g.len()];
    if periodic {
        let inv = 1.0 / (h * h);
        for j in 0..my {
            let (jm, jp) = (if j == 0 { my - 1 } else { j - 1 }, if j + 1 == my { 0 } else { j + 1 });
            let (row, rm, rp) = (j * mx, jm * mx, jp * mx);
            for i in 0..mx {
                let (im, ip) = (if i == 0 { mx - 1 } else { i - 1 }, if i + 1 == mx { 0 } else { i + 1 });
                out[row + i] = (v[row + im] + v[row + ip] + v[rm + i] + v[rp + i] - 4.0 * v[row + i]) * inv;
            }
        }
    } else {
        for j in 0..my {
            let row = j * mx;
            for i in 0..mx {
                out[row + i] = d2(|k| v[row + k], i, mx, false, h) + d2(|k| v[k * mx + i], j, my, false, h);
            }
        }
    }
    ScalarField { grid: g, values: out }
}

/// `(u . grad) w` for a vector field `w`, componentwise with [`gradient`].
pub fn advect_vector(u: &VectorField, w: &VectorField) -> VectorField {
    let gx = gradient(&ScalarField {
        grid: w.grid,
        values: w.x.clone(),
    });
    let gy = gradient(&ScalarField {
        grid: w.grid,
        values: w.y.clone(),
    });
    let n = u.grid.len();
    let mut ox = vec![0.0; n];
    let mut oy = vec![0.0; n];
    for k in 0..n {
        ox[k] = u.x[k] * gx.x[k] + u.y[k] * gx.y[k];
        oy[k] = u.x[k] * gy.x[k] + u.y[k] * gy.y[k];
    }
    VectorField {
        grid: u.grid,
        x: ox,
        y: oy,
    }
}

/// Trapezoid quadrature `h^2 sum w_ij f_ij`; exact for constants.
pub fn integrate(f: &ScalarField) -> f64 {
    let g = &f.grid;
    let h2 = g.h() * g.h();
    match g.boundary {
        Boundary::Periodic => f.values.iter().sum::<f64>() * h2,
        Boundary::Dirichlet => {
            let mut s = 0.0;
            for j in 0..g.my() {
                for i in 0..g.mx() {
                    s += g.weight(i, j) * f.values[g.index(i, j)];
                }
            }
            s * h2
        }
    }
}

/// Quadrature of a pointwise integrand evaluated at every node.
pub fn integrate_with(grid: &Grid, mut f: impl FnMut(usize, usize, usize) -> f64) -> f64 {
    let h2 = grid.h() * grid.h();
    let mut s = 0.0;
    for j in 0..grid.my() {
        for i in 0..grid.mx() {
            s += grid.weight(i, j) * f(i, j, grid.index(i, j));
        }
    }
    s * h2
}

/// Discrete `L2` inner product.
pub fn inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    let grid = f.grid;
    Ok(integrate_with(&grid, |_, _, k| f.values[k] * g.values[k]))
}

pub fn inner_vector(u: &VectorField, w: &VectorField) -> Result<f64> {
    u.grid.check_same(&w.grid)?;
    let grid = u.grid;
    Ok(integrate_with(&grid, |_, _, k| u.x[k] * w.x[k] + u.y[k] * w.y[k]))
}

/// `int |grad f|^2` with forward differences over grid edges. This is the
/// quadratic form whose negative gradient is the five-point Laplacian, so it
/// is the Dirichlet energy the semi-implicit diffusion steps dissipate.
pub fn edge_dirichlet_energy(f: &ScalarField) -> f64 {
    let g = f.grid;
    let (mx, my) = (g.mx(), g.my());
    let v = &f.values;
    let mut s = 0.0;
    match g.boundary {
        Boundary::Periodic => {
            for j in 0..my {
                let jp = if j + 1 == my { 0 } else { j + 1 };
                for i in 0..mx {
                    let ip = if i + 1 == mx { 0 } else { i + 1 };
                    let c = v[j * mx + i];
                    let a = v[j * mx + ip] - c;
                    let b = v[jp * mx + i] - c;
                    s += a * a + b * b;
                }
            }
        }
        Boundary::Dirichlet => {
            for j in 0..my {
                let wy = if j == 0 || j == my - 1 { 0.5 } else { 1.0 };
                for i in 0..mx - 1 {
                    let a = v[j * mx + i + 1] - v[j * mx + i];
                    s += wy * a * a;
                }
            }
            for i in 0..mx {
                let wx = if i == 0 || i == mx - 1 { 0.5 } else { 1.0 };
                for j in 0..my - 1 {
                    let b = v[(j + 1) * mx + i] - v[j * mx + i];
                    s += wx * b * b;
                }
            }
        }
    }
    s
}

/// Convenience wrapper around [`Solver::poisson`].
pub fn poisson_solve(rhs: &ScalarField) -> Result<(ScalarField, SolveInfo)> {
    Solver::new(rhs.grid()).poisson(rhs)
}

/// Convenience wrapper around [`Solver::helmholtz`].
pub fn helmholtz_solve(f: &ScalarField, a: f64, b: f64) -> Result<ScalarField> {
    Solver::new(f.grid()).helmholtz(f, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn periodic(n: usize) -> Grid {
        Grid::unit_square(n, Boundary::Periodic).unwrap()
    }

    fn sinsin(x: &Vec2) -> f64 {
        (2.0 * PI * x.x).sin() * (2.0 * PI * x.y).sin()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(8, 32, [0.0; 2], 1.0, 1.0, Boundary::Periodic).is_err());
        assert!(Grid::new(32, 32, [0.0; 2], 1.0, 2.0, Boundary::Periodic).is_err());
        assert!(Grid::new(32, 64, [0.0; 2], 1.0, 2.0, Boundary::Periodic).is_ok());
        let d = Grid::unit_square(16, Boundary::Dirichlet).unwrap();
        assert_eq!(d.len(), 17 * 17);
        assert_eq!(periodic(16).len(), 256);
    }

    #[test]
    fn linear_gradient_is_exact() {
        let g = Grid::new(20, 20, [-1.0, -1.0], 2.0, 2.0, Boundary::Dirichlet).unwrap();
        let f = ScalarField::from_fn(g, |x| x.x);
        let grad = gradient(&f);
        for j in 0..g.my() {
            for i in 0..g.mx() {
                let v = grad.at(i, j);
                assert_abs_diff_eq!(v.x, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_field_is_divergence_free() {
        for b in [Boundary::Periodic, Boundary::Dirichlet] {
            let g = Grid::unit_square(16, b).unwrap();
            let u = VectorField::from_fn(g, |_| Vec2::new(0.3, -1.7));
            assert!(divergence(&u).max_abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_second_order() {
        let mut errs = vec![];
        for n in [32, 64, 128] {
            let g = periodic(n);
            let f = ScalarField::from_fn(g, sinsin);
            let lap = laplacian(&f);
            let err = lap
                .values()
                .iter()
                .zip(f.values())
                .fold(0.0_f64, |m, (l, v)| m.max((l + 8.0 * PI * PI * v).abs()));
            errs.push(err);
        }
        assert!(errs[2] < 1e-2 * 8.0 * PI * PI, "{errs:?}");
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 4.0).abs() < 0.5, "{errs:?}");
        }
    }

    #[test]
    fn gradient_second_order() {
        let mut errs = vec![];
        for n in [32, 64, 128] {
            let g = periodic(n);
            let grad = gradient(&ScalarField::from_fn(g, sinsin));
            let exact = VectorField::from_fn(g, |x| {
                Vec2::new(
                    2.0 * PI * (2.0 * PI * x.x).cos() * (2.0 * PI * x.y).sin(),
                    2.0 * PI * (2.0 * PI * x.x).sin() * (2.0 * PI * x.y).cos(),
                )
            });
            let e = (0..g.len()).fold(0.0_f64, |m, k| {
                m.max((grad.x()[k] - exact.x()[k]).abs().max((grad.y()[k] - exact.y()[k]).abs()))
            });
            errs.push(e);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 4.0).abs() < 0.5, "{errs:?}");
        }
    }

    #[test]
    fn integration_examples() {
        let g = periodic(64);
        assert_abs_diff_eq!(integrate(&ScalarField::constant(g, 1.0)), 1.0, epsilon = 1e-14);
        assert_eq!(integrate(&ScalarField::zeros(g)), 0.0);
        let f = ScalarField::from_fn(g, |x| sinsin(x).powi(2));
        assert_abs_diff_eq!(integrate(&f), 0.25, epsilon = 1e-10);
        let d = Grid::unit_square(16, Boundary::Dirichlet).unwrap();
        assert_abs_diff_eq!(integrate(&ScalarField::constant(d, 1.0)), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn summation_by_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let g = Grid::new(32, 48, [0.0; 2], 1.0, 1.5, Boundary::Periodic).unwrap();
            let f = ScalarField::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let u = VectorField::new(
                g,
                (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let lhs = inner_vector(&gradient(&f), &u).unwrap() + inner(&f, &divergence(&u)).unwrap();
            let scale = inner(&f, &f).unwrap().sqrt() * inner_vector(&u, &u).unwrap().sqrt();
            assert!(lhs.abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn edge_energy_matches_laplacian_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for b in [Boundary::Periodic, Boundary::Dirichlet] {
            let g = Grid::unit_square(20, b).unwrap();
            let mut f = ScalarField::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            f.enforce_dirichlet(-1.0);
            if b == Boundary::Dirichlet {
                // The boundary rows carry no energy once they are constant.
                let lap = laplacian(&f);
                let form = -integrate_with(&g, |i, j, k| {
                    if g.is_boundary(i, j) {
                        0.0
                    } else {
                        (f.values()[k] + 1.0) * lap.values()[k]
                    }
                });
                assert_abs_diff_eq!(form, edge_dirichlet_energy(&f), epsilon = 1e-9 * form.abs());
            } else {
                let form = -inner(&f, &laplacian(&f)).unwrap();
                assert_abs_diff_eq!(form, edge_dirichlet_energy(&f), epsilon = 1e-9 * form.abs());
            }
        }
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = ScalarField::zeros(periodic(16));
        let b = ScalarField::zeros(periodic(32));
        assert!(matches!(inner(&a, &b), Err(Error::GridMismatch(_))));
        assert!(ScalarField::new(periodic(16), vec![0.0; 3]).is_err());
    }

    #[test]
    fn nearest_image_wraps() {
        let g = periodic(16);
        let x = g.nearest_image(&Vec2::new(0.95, 0.02), &Vec2::new(0.1, 0.9));
        assert_abs_diff_eq!(x.x, -0.05, epsilon = 1e-14);
        assert_abs_diff_eq!(x.y, 1.02, epsilon = 1e-14);
    }

    #[test]
    fn dirichlet_enforcement() {
        let g = Grid::unit_square(16, Boundary::Dirichlet).unwrap();
        let mut f = ScalarField::constant(g, 0.5);
        f.enforce_dirichlet(-1.0);
        for j in 0..g.my() {
            for i in 0..g.mx() {
                let expect = if g.is_boundary(i, j) { -1.0 } else { 0.5 };
                assert_eq!(f.at(i, j), expect);
            }
        }
    }
}
