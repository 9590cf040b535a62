//! Exact solutions of the two-phase Navier-Stokes flow with surface tension
//! whose interface moves with normal speed `V = n . v + m H`.
//!
//! With a velocity that is zero or constant, the capillary jump is balanced
//! by a piecewise constant pressure and circles shrink by the curvature term
//! alone: `R(t)^2 = R0^2 - 2 (d - 1) m t`. Setting `m = 0` gives the
//! classical limit, where the same circles are static (or translate rigidly).

use serde::{Deserialize, Serialize};

use crate::geometry::{InterfaceMotion, InterfaceState, DIM};
use crate::potential::PotentialSpec;
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SharpKind {
    /// Disk at rest in a quiescent fluid.
    ShrinkingCircle { center: Vec2, r0: f64 },
    /// Disk carried by the uniform flow `velocity` (periodic box).
    TranslatingCircle { center0: Vec2, r0: f64, velocity: Vec2 },
    /// Half-plane `normal . x > offset` at rest.
    StaticLine { offset: f64, normal: Vec2 },
    /// Slab `lower < normal . x < upper` at rest (periodic box).
    StaticBand { lower: f64, upper: f64, normal: Vec2 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpSolution {
    pub kind: SharpKind,
    pub mobility: f64,
    pub sigma: f64,
    /// Tube half-width that must stay inside the droplet: `R(t) > 2 delta`.
    pub delta: f64,
}

impl SharpSolution {
    pub fn new(kind: SharpKind, mobility: f64, potential: &PotentialSpec, delta: f64) -> Result<Self> {
        if !(mobility >= 0.0 && mobility.is_finite()) {
            return Err(Error::InvalidParams(format!("mobility must be nonnegative, got {mobility}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParams(format!("delta must be positive, got {delta}")));
        }
        match kind {
            SharpKind::ShrinkingCircle { r0, .. } | SharpKind::TranslatingCircle { r0, .. } => {
                if !(r0 > 2.0 * delta) {
                    return Err(Error::NotEmbedded(format!("initial radius {r0} <= 2 delta = {}", 2.0 * delta)));
                }
            }
            SharpKind::StaticLine { normal, .. } | SharpKind::StaticBand { normal, .. } => {
                if !(normal.norm() > 0.0) {
                    return Err(Error::InvalidParams("normal must be nonzero".into()));
                }
            }
        }
        if let SharpKind::StaticBand { lower, upper, .. } = kind {
            if !(upper - lower > 4.0 * delta) {
                return Err(Error::NotEmbedded(format!("band [{lower}, {upper}] thinner than 4 delta")));
            }
        }
        Ok(Self {
            kind,
            mobility,
            sigma: potential.sigma(),
            delta,
        })
    }

    /// Same geometry with `m = 0`.
    pub fn limit(&self) -> Self {
        Self { mobility: 0.0, ..*self }
    }

    fn r0(&self) -> Option<f64> {
        match self.kind {
            SharpKind::ShrinkingCircle { r0, .. } | SharpKind::TranslatingCircle { r0, .. } => Some(r0),
            _ => None,
        }
    }

    fn shrink_rate(&self) -> f64 {
        2.0 * (DIM - 1) as f64 * self.mobility
    }

    /// End of the admissible time window `(R0^2 - 4 delta^2) / (2 (d-1) m)`.
    pub fn window_end(&self) -> f64 {
        match self.r0() {
            Some(r0) if self.mobility > 0.0 => (r0 * r0 - 4.0 * self.delta * self.delta) / self.shrink_rate(),
            _ => f64::INFINITY,
        }
    }

    /// Time at which the circle would vanish.
    pub fn collapse_time(&self) -> f64 {
        match self.r0() {
            Some(r0) if self.mobility > 0.0 => r0 * r0 / self.shrink_rate(),
            _ => f64::INFINITY,
        }
    }

    pub fn check_window(&self, t: f64) -> Result<()> {
        let limit = self.window_end();
        if !(t >= 0.0 && t < limit) {
            return Err(Error::WindowViolation { t, limit });
        }
        Ok(())
    }

    /// `sqrt(R0^2 - 2 (d-1) m t)`; infinite for flat interfaces.
    pub fn radius(&self, t: f64) -> Result<f64> {
        self.check_window(t)?;
        Ok(match self.r0() {
            Some(r0) => (r0 * r0 - self.shrink_rate() * t).sqrt(),
            None => f64::INFINITY,
        })
    }

    /// `dR/dt`, differentiated from the closed form.
    pub fn radius_rate(&self, t: f64) -> Result<f64> {
        self.check_window(t)?;
        Ok(match self.r0() {
            Some(r0) => -0.5 * self.shrink_rate() / (r0 * r0 - self.shrink_rate() * t).sqrt(),
            None => 0.0,
        })
    }

    pub fn center(&self, t: f64) -> Option<Vec2> {
        match self.kind {
            SharpKind::ShrinkingCircle { center, .. } => Some(center),
            SharpKind::TranslatingCircle { center0, velocity, .. } => Some(center0 + velocity * t),
            _ => None,
        }
    }

    fn bulk_velocity(&self) -> Vec2 {
        match self.kind {
            SharpKind::TranslatingCircle { velocity, .. } => velocity,
            _ => Vec2::zeros(),
        }
    }

    pub fn sharp_velocity(&self, _x: &Vec2, t: f64) -> Result<Vec2> {
        self.check_window(t)?;
        Ok(self.bulk_velocity())
    }

    /// `sigma (d-1) / R(t)` inside the disk, zero outside.
    pub fn sharp_pressure(&self, x: &Vec2, t: f64) -> Result<f64> {
        let iface = self.as_interface_state(t)?;
        Ok(match iface {
            InterfaceState::Circle { radius, .. } if iface.signed_distance(x) > 0.0 => {
                self.sigma * (DIM - 1) as f64 / radius
            }
            _ => 0.0,
        })
    }

    /// Pressure jump inner minus outer across the interface.
    pub fn pressure_jump(&self, t: f64) -> Result<f64> {
        let iface = self.as_interface_state(t)?;
        match iface {
            InterfaceState::Circle { center, radius } => {
                let dir = Vec2::new(1.0, 0.0);
                let inner = self.sharp_pressure(&(center + dir * (0.5 * radius)), t)?;
                let outer = self.sharp_pressure(&(center + dir * (1.5 * radius)), t)?;
                Ok(inner - outer)
            }
            _ => Ok(0.0),
        }
    }

    pub fn as_interface_state(&self, t: f64) -> Result<InterfaceState> {
        self.check_window(t)?;
        match self.kind {
            SharpKind::ShrinkingCircle { .. } | SharpKind::TranslatingCircle { .. } => {
                InterfaceState::circle(self.center(t).expect("circle"), self.radius(t)?)
            }
            SharpKind::StaticLine { offset, normal } => InterfaceState::line(offset, normal),
            SharpKind::StaticBand { lower, upper, normal } => InterfaceState::band(lower, upper, normal),
        }
    }

    /// Maximum of `|V - n . v - m H|` over `samples` interface points, with
    /// `V` from the time derivative of the closed-form parametrisation and
    /// `n`, `H` from the interface geometry.
    pub fn motion_law_residual(&self, t: f64, samples: usize) -> Result<f64> {
        let iface = self.as_interface_state(t)?;
        let mut worst = 0.0_f64;
        for k in 0..samples.max(1) {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / samples.max(1) as f64;
            let dir = Vec2::new(angle.cos(), angle.sin());
            let (point, point_velocity) = match iface {
                InterfaceState::Circle { center, radius } => {
                    (center + dir * radius, self.bulk_velocity() + dir * self.radius_rate(t)?)
                }
                InterfaceState::Line { offset, normal } => {
                    let tangent = Vec2::new(-normal.y, normal.x);
                    (normal * offset + tangent * (angle - 1.0), Vec2::zeros())
                }
                InterfaceState::Band { lower, upper, normal } => {
                    let tangent = Vec2::new(-normal.y, normal.x);
                    let level = if k % 2 == 0 { lower } else { upper };
                    (normal * level + tangent * angle, Vec2::zeros())
                }
            };
            let n = iface.normal_extension(&point)?;
            let h = iface.curvature_extension(&point)?;
            let v = self.sharp_velocity(&point, t)?;
            let speed = point_velocity.dot(&n);
            worst = worst.max((speed - n.dot(&v) - self.mobility * h).abs());
        }
        Ok(worst)
    }
}

impl InterfaceMotion for SharpSolution {
    fn interface_at(&self, t: f64) -> Result<InterfaceState> {
        self.as_interface_state(t)
    }

    fn velocity(&self, _x: &Vec2, _t: f64) -> Vec2 {
        self.bulk_velocity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{calibration_residuals, CalibrationParams, Rect};

    fn pot() -> PotentialSpec {
        PotentialSpec::default()
    }

    fn shrinking(r0: f64, m: f64) -> SharpSolution {
        SharpSolution::new(
            SharpKind::ShrinkingCircle {
                center: Vec2::new(0.5, 0.5),
                r0,
            },
            m,
            &pot(),
            0.1,
        )
        .unwrap()
    }

    fn rk4_radius(r0: f64, m: f64, t: f64) -> f64 {
        let f = |r: f64| -m / r;
        let n = 10_000;
        let dt = t / n as f64;
        let mut r = r0;
        for _ in 0..n {
            let k1 = f(r);
            let k2 = f(r + 0.5 * dt * k1);
            let k3 = f(r + 0.5 * dt * k2);
            let k4 = f(r + dt * k3);
            r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        r
    }

    #[test]
    fn radius_examples() {
        assert_eq!(shrinking(0.5, 0.0).radius(123.0).unwrap(), 0.5);
        let r = shrinking(0.5, 0.01).radius(1.0).unwrap();
        assert!((r - rk4_radius(0.5, 0.01, 1.0)).abs() < 1e-12);
        assert!((r - 0.23f64.sqrt()).abs() < 1e-15);
        let s = shrinking(0.5, 0.01);
        assert!(matches!(s.radius(20.0), Err(Error::WindowViolation { .. })));
        assert!(s.radius(-1.0).is_err());
    }

    #[test]
    fn closeness_to_limit_bound() {
        for m in [0.1, 0.05, 0.025, 0.01] {
            let s = shrinking(0.5, m);
            for k in 0..20 {
                let t = 0.5 * k as f64 / 20.0;
                let r = s.radius(t).unwrap();
                assert!((r - 0.5).abs() <= m * t / r + 1e-15);
            }
        }
    }

    #[test]
    fn half_collapse_radius() {
        let s = shrinking(0.4, 0.02);
        let t = 0.4 * 0.4 / (4.0 * 0.02);
        let c = s.as_interface_state(t).unwrap();
        match c {
            InterfaceState::Circle { radius, .. } => assert!((radius - 0.4 / 2f64.sqrt()).abs() < 1e-15),
            _ => panic!(),
        }
        assert_eq!(
            s.as_interface_state(0.0).unwrap(),
            InterfaceState::circle(Vec2::new(0.5, 0.5), 0.4).unwrap()
        );
        assert_eq!(
            s.limit().as_interface_state(5.0).unwrap(),
            InterfaceState::circle(Vec2::new(0.5, 0.5), 0.4).unwrap()
        );
    }

    #[test]
    fn pressure_examples() {
        let s = shrinking(0.5, 0.0);
        let jump = s.pressure_jump(0.0).unwrap();
        assert!((jump - 1.885618083164127).abs() < 1e-12);
        let line = SharpSolution::new(
            SharpKind::StaticLine {
                offset: 0.0,
                normal: Vec2::new(0.0, 1.0),
            },
            0.1,
            &pot(),
            0.1,
        )
        .unwrap();
        assert_eq!(line.sharp_pressure(&Vec2::new(0.2, 0.3), 1.0).unwrap(), 0.0);
        assert_eq!(line.sharp_velocity(&Vec2::new(0.2, 0.3), 1.0).unwrap(), Vec2::zeros());
        let m = shrinking(0.3, 0.05);
        for t in [0.0, 0.1, 0.3] {
            let r = m.radius(t).unwrap();
            assert_eq!(m.pressure_jump(t).unwrap(), m.sigma / r);
        }
    }

    #[test]
    fn translating_circle_moves_with_flow() {
        let s = SharpSolution::new(
            SharpKind::TranslatingCircle {
                center0: Vec2::new(0.5, 0.5),
                r0: 0.25,
                velocity: Vec2::new(1.0, 0.0),
            },
            0.01,
            &pot(),
            0.1,
        )
        .unwrap();
        assert_eq!(s.sharp_velocity(&Vec2::new(0.9, 0.1), 0.3).unwrap(), Vec2::new(1.0, 0.0));
        assert_eq!(s.center(0.3).unwrap(), Vec2::new(0.8, 0.5));
        assert!(s.motion_law_residual(0.3, 64).unwrap() < 1e-12);
    }

    #[test]
    fn motion_law_exact() {
        let s = shrinking(0.25, 0.07);
        for k in 0..10 {
            let t = s.window_end() * k as f64 / 10.0;
            assert!(s.motion_law_residual(t, 64).unwrap() < 1e-12);
        }
        for kind in [
            SharpKind::StaticLine {
                offset: 0.2,
                normal: Vec2::new(1.0, 1.0),
            },
            SharpKind::StaticBand {
                lower: 0.25,
                upper: 0.75,
                normal: Vec2::new(0.0, 1.0),
            },
        ] {
            let s = SharpSolution::new(kind, 0.3, &pot(), 0.05).unwrap();
            assert_eq!(s.motion_law_residual(0.7, 16).unwrap(), 0.0);
        }
    }

    #[test]
    fn embedding_preconditions() {
        assert!(SharpSolution::new(
            SharpKind::ShrinkingCircle {
                center: Vec2::zeros(),
                r0: 0.15
            },
            0.1,
            &pot(),
            0.1
        )
        .is_err());
        let s = shrinking(0.25, 0.01);
        assert!((s.window_end() - (0.0625 - 0.04) / 0.02).abs() < 1e-12);
        assert!(s.collapse_time() > s.window_end());
    }

    #[test]
    fn calibration_on_circle_interface() {
        let domain = Rect {
            min: Vec2::zeros(),
            max: Vec2::new(1.0, 1.0),
        };
        for m in [0.1, 0.01] {
            let s = shrinking(0.3, m);
            let params = CalibrationParams::new(0.1, m).unwrap();
            let on = Vec2::new(0.5 + s.radius(0.05).unwrap(), 0.5);
            let r = calibration_residuals(&s, &params, &domain, &on, 0.05, 1e-4).unwrap();
            assert!(r.curvature < 1e-5, "{r:?}");
            let mut worst = [0.0_f64; 3];
            for k in 0..200 {
                let angle = k as f64 * 0.7;
                let rad = s.radius(0.05).unwrap() + 0.19 * ((k as f64 * 0.37).sin());
                let x = Vec2::new(0.5, 0.5) + Vec2::new(angle.cos(), angle.sin()) * rad;
                let r = calibration_residuals(&s, &params, &domain, &x, 0.05, 1e-4).unwrap();
                worst[0] = worst[0].max(r.normal_velocity);
                worst[1] = worst[1].max(r.length_transport);
                worst[2] = worst[2].max(r.normal_transport);
            }
            assert!(worst.iter().all(|w| w.is_finite() && *w < 1e3), "{worst:?}");
        }
    }
}
