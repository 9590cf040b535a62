//! Analytic interfaces in the plane and the calibration fields built on their
//! signed distance.
//!
//! Conventions: the signed distance `d` is positive in the phase `Omega+`, the
//! normal is `n = grad d` (pointing into `Omega+`) and the mean curvature is
//! `H = -lap d` evaluated at the projected point, so that a disk has `H = 1/R`.

use serde::{Deserialize, Serialize};

use crate::fields::Grid;
use crate::{Error, Result, Vec2};

/// Spatial dimension of every simulated configuration. Curvature formulas are
/// written in terms of it.
pub const DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InterfaceState {
    /// Circle; `Omega+` is the open disk.
    Circle { center: Vec2, radius: f64 },
    /// Straight line `{x : normal . x = offset}`; `Omega+` lies on the side the
    /// unit normal points to.
    Line { offset: f64, normal: Vec2 },
    /// Pair of parallel lines `normal . x = lower` and `normal . x = upper`;
    /// `Omega+` is the slab in between. This is the periodic-box realisation of
    /// a flat interface.
    Band { lower: f64, upper: f64, normal: Vec2 },
}

fn unit(v: Vec2) -> Result<Vec2> {
    let n = v.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidParams("interface normal must be nonzero".into()));
    }
    Ok(v / n)
}

impl InterfaceState {
    pub fn circle(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParams(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        Ok(Self::Circle { center, radius })
    }

    pub fn line(offset: f64, normal: Vec2) -> Result<Self> {
        Ok(Self::Line {
            offset,
            normal: unit(normal)?,
        })
    }

    pub fn band(lower: f64, upper: f64, normal: Vec2) -> Result<Self> {
        if !(upper > lower) {
            return Err(Error::InvalidParams(format!(
                "band needs lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self::Band {
            lower,
            upper,
            normal: unit(normal)?,
        })
    }

    /// Reference point used to pick periodic images of grid nodes.
    pub fn anchor(&self) -> Option<Vec2> {
        match *self {
            Self::Circle { center, .. } => Some(center),
            Self::Band {
                lower,
                upper,
                normal,
            } => Some(normal * (0.5 * (lower + upper))),
            Self::Line { .. } => None,
        }
    }

    /// Image of the node position `x` seen by this interface: the periodic
    /// image nearest to [`InterfaceState::anchor`] on periodic grids.
    pub fn local_position(&self, grid: &Grid, x: &Vec2) -> Vec2 {
        match self.anchor() {
            Some(a) => grid.nearest_image(x, &a),
            None => *x,
        }
    }

    pub fn signed_distance(&self, x: &Vec2) -> f64 {
        match *self {
            Self::Circle { center, radius } => radius - (x - center).norm(),
            Self::Line { offset, normal } => normal.dot(x) - offset,
            Self::Band {
                lower,
                upper,
                normal,
            } => {
                let s = normal.dot(x);
                (s - lower).min(upper - s)
            }
        }
    }

    fn singular(x: &Vec2) -> Error {
        Error::SingularProjection { x: x.x, y: x.y }
    }

    pub fn normal_extension(&self, x: &Vec2) -> Result<Vec2> {
        match *self {
            Self::Circle { center, .. } => {
                let r = x - center;
                let len = r.norm();
                if len == 0.0 {
                    return Err(Self::singular(x));
                }
                Ok(-r / len)
            }
            Self::Line { normal, .. } => Ok(normal),
            Self::Band {
                lower,
                upper,
                normal,
            } => {
                let s = normal.dot(x);
                let (below, above) = (s - lower, upper - s);
                if below == above {
                    Err(Self::singular(x))
                } else if below < above {
                    Ok(normal)
                } else {
                    Ok(-normal)
                }
            }
        }
    }

    pub fn closest_point(&self, x: &Vec2) -> Result<Vec2> {
        let n = self.normal_extension(x)?;
        Ok(x - n * self.signed_distance(x))
    }

    /// Mean curvature of the interface at the projection of `x`.
    pub fn curvature_extension(&self, x: &Vec2) -> Result<f64> {
        match *self {
            Self::Circle { center, radius } => {
                if (x - center).norm() == 0.0 {
                    return Err(Self::singular(x));
                }
                Ok((DIM - 1) as f64 / radius)
            }
            Self::Line { .. } => Ok(0.0),
            Self::Band { .. } => self.normal_extension(x).map(|_| 0.0),
        }
    }
}

/// Cutoff profiles entering the calibration fields.
pub mod cutoff {
    /// Width of the smoothing band of `theta_bar` near its saturation point.
    pub const THETA_SMOOTHING: f64 = 0.1;
    const THETA_KNEE: f64 = 1.0 - 0.5 * THETA_SMOOTHING;

    /// `(1 - r^2)^2` on `[-1, 1]`, zero outside. Quadratic decay with
    /// `1 - 2 r^2 <= eta_bar <= 1 - r^2`.
    #[inline]
    pub fn eta_bar(r: f64) -> f64 {
        if r.abs() >= 1.0 {
            0.0
        } else {
            let q = 1.0 - r * r;
            q * q
        }
    }

    #[inline]
    pub fn eta_bar_prime(r: f64) -> f64 {
        if r.abs() >= 1.0 {
            0.0
        } else {
            -4.0 * r * (1.0 - r * r)
        }
    }

    /// Plateau cutoff: one on `[-1, 1]`, quintic smoothstep down to zero at
    /// `|r| = 2`.
    #[inline]
    pub fn eta_tilde(r: f64) -> f64 {
        let a = r.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            let u = a - 1.0;
            1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
        }
    }

    /// Odd ramp: linear `r / 0.95` near zero, saturating at exactly `+-1` for
    /// `|r| >= 1` through a C2 corner of width [`THETA_SMOOTHING`].
    #[inline]
    pub fn theta_bar(r: f64) -> f64 {
        let a = r.abs();
        let v = if a >= 1.0 {
            1.0
        } else {
            let u = ((a - (THETA_KNEE - 0.5 * THETA_SMOOTHING)) / THETA_SMOOTHING).clamp(0.0, 1.0);
            let excess = THETA_SMOOTHING * (u * u * u - 0.5 * u * u * u * u);
            (a - excess) / THETA_KNEE
        };
        v.copysign(r)
    }

    /// Bounds `c |r| <= |theta_bar(r)| <= C |r|` on `[-1, 1]`.
    pub const THETA_LOWER: f64 = 1.0;
    pub const THETA_UPPER: f64 = 1.0 / THETA_KNEE;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    /// Half-width of the tube on which `xi` lives.
    pub delta: f64,
    /// Mobility of the reference flow.
    pub mobility: f64,
}

impl CalibrationParams {
    pub fn new(delta: f64, mobility: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) || !(mobility >= 0.0 && mobility.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need delta > 0 and mobility >= 0, got delta = {delta}, m = {mobility}"
            )));
        }
        Ok(Self { delta, mobility })
    }
}

/// `xi = n eta_bar(d / delta)`.
pub fn xi_field(iface: &InterfaceState, params: &CalibrationParams, x: &Vec2) -> Vec2 {
    let eta = cutoff::eta_bar(iface.signed_distance(x) / params.delta);
    if eta == 0.0 {
        return Vec2::zeros();
    }
    // eta > 0 only inside the tube, where the projection is regular.
    iface.normal_extension(x).map_or(Vec2::zeros(), |n| n * eta)
}

/// `B = v + m H n eta_tilde(d / delta)`.
pub fn b_field(
    iface: &InterfaceState,
    params: &CalibrationParams,
    background_velocity: &dyn Fn(&Vec2) -> Vec2,
    x: &Vec2,
) -> Vec2 {
    let v = background_velocity(x);
    let cut = cutoff::eta_tilde(iface.signed_distance(x) / params.delta);
    if cut == 0.0 || params.mobility == 0.0 {
        return v;
    }
    match (iface.normal_extension(x), iface.curvature_extension(x)) {
        (Ok(n), Ok(h)) => v + n * (params.mobility * h * cut),
        _ => v,
    }
}

/// `vartheta = theta_bar(d / delta)`.
pub fn vartheta_field(iface: &InterfaceState, params: &CalibrationParams, x: &Vec2) -> f64 {
    cutoff::theta_bar(iface.signed_distance(x) / params.delta)
}

/// Time-dependent interface together with the bulk velocity transporting it.
pub trait InterfaceMotion {
    fn interface_at(&self, t: f64) -> Result<InterfaceState>;
    fn velocity(&self, x: &Vec2, t: f64) -> Vec2;
}

/// Interface at rest in a quiescent fluid.
#[derive(Debug, Clone, Copy)]
pub struct Stationary(pub InterfaceState);

impl InterfaceMotion for Stationary {
    fn interface_at(&self, _t: f64) -> Result<InterfaceState> {
        Ok(self.0)
    }

    fn velocity(&self, _x: &Vec2, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn contains(&self, x: &Vec2) -> bool {
        x.x >= self.min.x && x.x <= self.max.x && x.y >= self.min.y && x.y <= self.max.y
    }
}

/// Defects of the calibration identities at one point, each already divided
/// by the distance weight the corresponding estimate allows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResiduals {
    /// `|div xi + H|`.
    pub curvature: f64,
    /// `|(B - v)/m . xi + div xi| / min{|d|, 1}`.
    pub normal_velocity: f64,
    /// `|(d/dt + B . grad)|xi|^2| / min{d^2, 1}`.
    pub length_transport: f64,
    /// `|d/dt xi + (B . grad) xi + (I - xi xi^T)(grad B)^T xi| / min{|d|, 1}`.
    pub normal_transport: f64,
    pub distance: f64,
}

/// Finite-difference evaluation of the calibration identities at `(x, t)`.
/// Time derivatives use the exact motion of the interface. Distance weights
/// are floored at `step` so that points on the interface report the raw
/// defect scaled by `1/step`.
pub fn calibration_residuals(
    motion: &dyn InterfaceMotion,
    params: &CalibrationParams,
    domain: &Rect,
    x: &Vec2,
    t: f64,
    step: f64,
) -> Result<CalibrationResiduals> {
    let ex = Vec2::new(step, 0.0);
    let ey = Vec2::new(0.0, step);
    for p in [x + ex, x - ex, x + ey, x - ey] {
        if !domain.contains(&p) {
            return Err(Error::StencilOutOfDomain { x: x.x, y: x.y });
        }
    }
    let now = motion.interface_at(t)?;
    let m = params.mobility;
    let xi = |p: &Vec2| xi_field(&now, params, p);
    let vel = |p: &Vec2| motion.velocity(p, t);
    let b = |p: &Vec2| b_field(&now, params, &vel, p);

    let d = now.signed_distance(x);
    let h_curv = now.curvature_extension(x)?;
    let xi0 = xi(x);

    // Jacobians, column j = derivative along e_j.
    let jac = |f: &dyn Fn(&Vec2) -> Vec2| -> [Vec2; 2] {
        [
            (f(&(x + ex)) - f(&(x - ex))) / (2.0 * step),
            (f(&(x + ey)) - f(&(x - ey))) / (2.0 * step),
        ]
    };
    let dxi = jac(&xi);
    let db = jac(&b);
    let div_xi = dxi[0].x + dxi[1].y;

    let b0 = b(x);
    let v0 = vel(x);
    let b_minus_v_over_m = if m > 0.0 {
        (b0 - v0) / m
    } else {
        let cut = cutoff::eta_tilde(d / params.delta);
        now.normal_extension(x)? * (h_curv * cut)
    };

    // Time derivative of xi at fixed x from the exact motion.
    let tau = step;
    let xi_at = |s: f64| -> Result<Vec2> { Ok(xi_field(&motion.interface_at(s)?, params, x)) };
    let dt_xi = if t >= tau {
        (xi_at(t + tau)? - xi_at(t - tau)?) / (2.0 * tau)
    } else {
        (-3.0 * xi0 + 4.0 * xi_at(t + tau)? - xi_at(t + 2.0 * tau)?) / (2.0 * tau)
    };

    let transport_xi = dxi[0] * b0.x + dxi[1] * b0.y;
    let grad_len2 = Vec2::new(2.0 * xi0.dot(&dxi[0]), 2.0 * xi0.dot(&dxi[1]));
    let dt_len2 = 2.0 * xi0.dot(&dt_xi);
    // (grad B)^T xi with (grad B)_{ij} = d_j B_i.
    let grad_b_t_xi = Vec2::new(db[0].dot(&xi0), db[1].dot(&xi0));
    let projected = grad_b_t_xi - xi0 * xi0.dot(&grad_b_t_xi);

    let lin = d.abs().min(1.0).max(step);
    let quad = (d * d).min(1.0).max(step * step);
    Ok(CalibrationResiduals {
        curvature: (div_xi + h_curv).abs(),
        normal_velocity: (b_minus_v_over_m.dot(&xi0) + div_xi).abs() / lin,
        length_transport: (dt_len2 + b0.dot(&grad_len2)).abs() / quad,
        normal_transport: (dt_xi + transport_xi + projected).norm() / lin,
        distance: d,
    })
}
