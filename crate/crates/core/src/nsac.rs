//! Time integration of the Navier-Stokes/Allen-Cahn system with unit density
//! and viscosity:
//!
//! ```text
//! dt v + (v . grad) v - lap v + grad p = -eps div(grad phi (x) grad phi)
//! div v = 0
//! dt phi + v . grad phi = m (lap phi - W'(phi) / eps^2)
//! ```
//!
//! Each step is an Allen-Cahn substep (semi-implicit diffusion, explicit
//! reaction and advection) followed by a Navier-Stokes substep (semi-implicit
//! viscosity, explicit advection, capillary force from the new phase field,
//! pressure projection).

use log::debug;

use crate::fields::{
    advect_vector, edge_dirichlet_energy, gradient, integrate, integrate_with, laplacian, Boundary, Grid,
    ScalarField, Solver, VectorField,
};
use crate::geometry::InterfaceState;
use crate::potential::PotentialSpec;
use crate::{Error, Result, Vec2};

/// Allowed overshoot of `|phi|` beyond one.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-6;
/// Maximum number of time-step halvings before a step is abandoned.
pub const MAX_REJECTIONS: usize = 10;
/// Minimum number of grid spacings per interface width.
pub const MIN_NODES_PER_EPSILON: f64 = 4.0;
/// Constant in the per-step energy slack `C dt (dt + h^2) (1 + |v|^2)`.
pub const ENERGY_SLACK_CONSTANT: f64 = 10.0;
/// Profile is blended to `+-1` between these multiples of `eps` from the
/// interface.
pub const CLAMP_START: f64 = 10.0;
pub const CLAMP_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsacParams {
    pub epsilon: f64,
    pub mobility: f64,
    /// Nominal time step.
    pub dt: f64,
    pub t_end: f64,
    pub potential: PotentialSpec,
    pub grid: Grid,
}

impl NsacParams {
    pub fn new(epsilon: f64, mobility: f64, dt: f64, t_end: f64, potential: PotentialSpec, grid: Grid) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
        }
        if epsilon < MIN_NODES_PER_EPSILON * grid.h() * (1.0 - 1e-12) {
            return Err(Error::InvalidParams(format!(
                "epsilon = {epsilon} under-resolved: need epsilon >= {MIN_NODES_PER_EPSILON} h = {}",
                MIN_NODES_PER_EPSILON * grid.h()
            )));
        }
        if !(mobility >= 0.0 && mobility.is_finite()) {
            return Err(Error::InvalidParams(format!("mobility must be nonnegative, got {mobility}")));
        }
        if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParams(format!("need dt > 0 and t_end >= 0, got {dt}, {t_end}")));
        }
        Ok(Self {
            epsilon,
            mobility,
            dt,
            t_end,
            potential,
            grid,
        })
    }

    /// Largest admissible step for the given velocity bound:
    /// `min{h^2/4, eps h / (4 vmax), eps^2 / (8 m max|W''|)}`.
    pub fn stability_limit(&self, vmax: f64) -> f64 {
        let h = self.grid.h();
        let mut limit = h * h / 4.0;
        if vmax > 0.0 {
            limit = limit.min(self.epsilon * h / (4.0 * vmax));
        }
        if self.mobility > 0.0 {
            limit = limit.min(self.epsilon * self.epsilon / (8.0 * self.mobility * self.potential.max_curvature()));
        }
        limit
    }

    /// Largest nominal step allowed for a fluid at rest.
    pub fn default_dt(grid: &Grid, epsilon: f64, mobility: f64, potential: &PotentialSpec) -> f64 {
        let h = grid.h();
        let mut dt = h * h / 4.0;
        if mobility > 0.0 {
            dt = dt.min(epsilon * epsilon / (8.0 * mobility * potential.max_curvature()));
        }
        dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub phi: ScalarField,
    pub vel: VectorField,
    pub p: ScalarField,
}

impl FieldState {
    /// `phi = -1`, `v = 0`, `p = 0`.
    pub fn rest(grid: Grid, t: f64) -> Self {
        Self {
            t,
            phi: ScalarField::constant(grid, -1.0),
            vel: VectorField::zeros(grid),
            p: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn check_max_principle(&self) -> Result<()> {
        let max_abs = self.phi.max_abs();
        if !(max_abs <= 1.0 + MAX_PRINCIPLE_SLACK) {
            return Err(Error::MaxPrinciple { max_abs, t: self.t });
        }
        Ok(())
    }
}

/// `-eps (lap phi) grad phi`: the capillary stress divergence with its
/// gradient part absorbed into the pressure.
pub fn capillary_force(phi: &ScalarField, epsilon: f64) -> VectorField {
    let lap = laplacian(phi);
    let mut f = gradient(phi);
    let (fx, fy) = f.components_mut();
    for (k, l) in lap.values().iter().enumerate() {
        fx[k] *= -epsilon * l;
        fy[k] *= -epsilon * l;
    }
    f
}

/// `H_eps = -eps lap phi + W'(phi) / eps`.
pub fn chemical_potential(phi: &ScalarField, epsilon: f64, potential: &PotentialSpec) -> ScalarField {
    let lap = laplacian(phi);
    let values = phi
        .values()
        .iter()
        .zip(lap.values())
        .map(|(&p, &l)| -epsilon * l + potential.w_prime(p) / epsilon)
        .collect();
    ScalarField::new(*phi.grid(), values).expect("same grid")
}

pub fn kinetic_energy(vel: &VectorField) -> f64 {
    0.5 * integrate(&vel.norm_squared())
}

/// `int eps |grad phi|^2 / 2 + W(phi) / eps` with the edge-difference
/// gradient energy.
pub fn interfacial_energy(phi: &ScalarField, epsilon: f64, potential: &PotentialSpec) -> f64 {
    let bulk = integrate_with(phi.grid(), |_, _, k| potential.w(phi.values()[k]));
    0.5 * epsilon * edge_dirichlet_energy(phi) + bulk / epsilon
}

pub fn energy(state: &FieldState, params: &NsacParams) -> f64 {
    kinetic_energy(&state.vel) + interfacial_energy(&state.phi, params.epsilon, &params.potential)
}

/// Per-step energy slack `C dt (dt + h^2) (1 + |v|^2)`.
pub fn energy_tolerance(params: &NsacParams, dt: f64, vel: &VectorField) -> f64 {
    let h = params.grid.h();
    ENERGY_SLACK_CONSTANT * dt * (dt + h * h) * (1.0 + 2.0 * kinetic_energy(vel))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissipation {
    /// `int |grad v|^2`.
    pub viscous: f64,
    /// `(m / eps) int H_eps^2`.
    pub ac: f64,
    /// `E(before) - E(after)`.
    pub energy_drop: f64,
    pub tolerance: f64,
    /// `energy_drop >= dt (viscous + ac) - tolerance`.
    pub balanced: bool,
}

pub fn dissipation(before: &FieldState, after: &FieldState, params: &NsacParams) -> Dissipation {
    let dt = after.t - before.t;
    let viscous = edge_dirichlet_energy(&ScalarField::new(params.grid, after.vel.x().to_vec()).expect("grid"))
        + edge_dirichlet_energy(&ScalarField::new(params.grid, after.vel.y().to_vec()).expect("grid"));
    let ac = if params.mobility > 0.0 {
        let h = chemical_potential(&after.phi, params.epsilon, &params.potential);
        params.mobility / params.epsilon * integrate(&h.map(|v| v * v))
    } else {
        0.0
    };
    let energy_drop = energy(before, params) - energy(after, params);
    let tolerance = energy_tolerance(params, dt, &before.vel);
    Dissipation {
        viscous,
        ac,
        energy_drop,
        tolerance,
        balanced: energy_drop >= dt * (viscous + ac) - tolerance,
    }
}

/// Checks that the interface plus a tube of half-width `tube` fits inside the
/// box without touching the boundary or its periodic images.
pub fn check_embedded(grid: &Grid, iface: &InterfaceState, tube: f64) -> Result<()> {
    let b = grid.bounds();
    let periodic = grid.boundary() == Boundary::Periodic;
    match *iface {
        InterfaceState::Circle { center, radius } => {
            if radius <= tube {
                return Err(Error::NotEmbedded(format!("radius {radius} <= tube half-width {tube}")));
            }
            let reach = radius + tube;
            let gap = if periodic {
                0.5 * grid.lx().min(grid.ly())
            } else {
                (center.x - b.min.x)
                    .min(b.max.x - center.x)
                    .min(center.y - b.min.y)
                    .min(b.max.y - center.y)
            };
            if reach >= gap {
                return Err(Error::NotEmbedded(format!(
                    "circle of radius {radius} with tube {tube} reaches the box boundary or its images"
                )));
            }
            Ok(())
        }
        InterfaceState::Band { lower, upper, normal } => {
            let (axis, length) = if normal.y.abs() < 1e-14 {
                ((b.min.x, b.max.x), grid.lx())
            } else if normal.x.abs() < 1e-14 {
                ((b.min.y, b.max.y), grid.ly())
            } else {
                return Err(Error::NotEmbedded("band normal must be axis aligned".into()));
            };
            let sign = normal.x + normal.y;
            let (lo, hi) = if sign > 0.0 { (lower, upper) } else { (-upper, -lower) };
            let width = upper - lower;
            let fits = if periodic {
                width > 2.0 * tube && length - width > 2.0 * tube
            } else {
                width > 2.0 * tube && lo - axis.0 > tube && axis.1 - hi > tube
            };
            if !fits {
                return Err(Error::NotEmbedded(format!(
                    "band [{lower}, {upper}] with tube {tube} does not fit"
                )));
            }
            Ok(())
        }
        InterfaceState::Line { .. } => match grid.boundary() {
            Boundary::Periodic => Err(Error::NotEmbedded(
                "a single line is not compatible with a periodic box; use a band".into(),
            )),
            Boundary::Dirichlet => Ok(()),
        },
    }
}

/// `theta0(d / eps)` blended in C2 fashion to `+-1` between `10 eps` and
/// `11 eps` from the interface.
pub fn clamped_profile(potential: &PotentialSpec, d: f64, epsilon: f64) -> f64 {
    let s = d.abs() / epsilon;
    let far = if d >= 0.0 { 1.0 } else { -1.0 };
    if s >= CLAMP_START + CLAMP_WIDTH {
        return far;
    }
    let theta = potential.optimal_profile(d / epsilon);
    if s <= CLAMP_START {
        return theta;
    }
    let u = (s - CLAMP_START) / CLAMP_WIDTH;
    let w = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    (1.0 - w) * theta + w * far
}

/// Initial data `phi = theta0(d / eps)` (clamped far away) and the projected
/// background velocity. `tube` is the half-width that must fit in the box.
pub fn well_prepared_data(
    iface: &InterfaceState,
    params: &NsacParams,
    background_velocity: &dyn Fn(&Vec2) -> Vec2,
    tube: f64,
) -> Result<FieldState> {
    let grid = params.grid;
    check_embedded(&grid, iface, tube)?;
    let phi = ScalarField::from_fn(grid, |x| {
        let y = iface.local_position(&grid, x);
        clamped_profile(&params.potential, iface.signed_distance(&y), params.epsilon)
    });
    let mut phi = phi;
    phi.enforce_dirichlet(-1.0);
    let mut vel = VectorField::from_fn(grid, background_velocity);
    vel.enforce_dirichlet();
    let (vel, _) = Solver::new(&grid).project(&vel)?;
    Ok(FieldState {
        t: 0.0,
        phi,
        vel,
        p: ScalarField::zeros(grid),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub dt: f64,
    pub energy: f64,
    /// `E(after) - E(before)`.
    pub increase: f64,
    pub tolerance: f64,
}

impl EnergyRecord {
    pub fn violated(&self) -> bool {
        self.increase > self.tolerance
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLog {
    pub initial: f64,
    pub records: Vec<EnergyRecord>,
}

impl EnergyLog {
    pub fn violations(&self) -> usize {
        self.records.iter().filter(|r| r.violated()).count()
    }

    /// Largest `increase / tolerance` over all steps.
    pub fn worst_ratio(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.increase / r.tolerance)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub struct Integrator {
    params: NsacParams,
    solver: Solver,
}

impl std::fmt::Debug for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrator").field("params", &self.params).finish()
    }
}

impl Integrator {
    pub fn new(params: NsacParams) -> Self {
        Self {
            solver: Solver::new(&params.grid),
            params,
        }
    }

    pub fn params(&self) -> &NsacParams {
        &self.params
    }

    /// `(I - dt m lap) phi' = phi - dt v . grad phi - dt (m / eps^2) W'(phi)`.
    pub fn allen_cahn_substep(&self, state: &FieldState, dt: f64) -> Result<ScalarField> {
        let p = &self.params;
        let grad = gradient(&state.phi);
        let (vx, vy) = (state.vel.x(), state.vel.y());
        let rate = p.mobility / (p.epsilon * p.epsilon);
        let mut rhs: Vec<f64> = state
            .phi
            .values()
            .iter()
            .enumerate()
            .map(|(k, &f)| f - dt * (vx[k] * grad.x()[k] + vy[k] * grad.y()[k]) - dt * rate * p.potential.w_prime(f))
            .collect();
        let mut rhs_field = ScalarField::new(p.grid, std::mem::take(&mut rhs))?;
        rhs_field.enforce_dirichlet(-1.0);
        let phi = if p.mobility > 0.0 {
            self.solver.helmholtz(&rhs_field, 1.0, dt * p.mobility)?
        } else {
            rhs_field
        };
        let max_abs = phi.max_abs();
        if !(max_abs <= 1.0 + MAX_PRINCIPLE_SLACK) {
            return Err(Error::MaxPrinciple {
                max_abs,
                t: state.t + dt,
            });
        }
        Ok(phi)
    }

    /// Viscous step with the capillary force of `new_phi`, then projection.
    pub fn ns_substep(&self, state: &FieldState, new_phi: &ScalarField, dt: f64) -> Result<(VectorField, ScalarField)> {
        let p = &self.params;
        let adv = advect_vector(&state.vel, &state.vel);
        let force = capillary_force(new_phi, p.epsilon);
        let n = p.grid.len();
        let mut rx = vec![0.0; n];
        let mut ry = vec![0.0; n];
        for k in 0..n {
            rx[k] = state.vel.x()[k] + dt * (force.x()[k] - adv.x()[k]);
            ry[k] = state.vel.y()[k] + dt * (force.y()[k] - adv.y()[k]);
        }
        let mut rhs = VectorField::new(p.grid, rx, ry)?;
        rhs.enforce_dirichlet();
        let star = self.solver.helmholtz_vector(&rhs, 1.0, dt)?;
        let (vel, q) = self.solver.project(&star)?;
        Ok((vel, q.map(|v| v / dt)))
    }

    /// One step of size `dt`; rejected if `dt` exceeds the stability limit.
    pub fn step_with(&self, state: &FieldState, dt: f64) -> Result<FieldState> {
        let limit = self.params.stability_limit(state.vel.max_norm());
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepRejected { dt, limit });
        }
        let phi = self.allen_cahn_substep(state, dt)?;
        let (vel, p) = self.ns_substep(state, &phi, dt)?;
        Ok(FieldState {
            t: state.t + dt,
            phi,
            vel,
            p,
        })
    }

    /// Advances by `span`, halving the step on rejection up to
    /// [`MAX_REJECTIONS`] times.
    pub fn advance(&self, state: &FieldState, span: f64) -> Result<Vec<FieldState>> {
        let mut pieces = 1usize;
        for attempt in 0..=MAX_REJECTIONS {
            let dt = span / pieces as f64;
            let mut out = Vec::with_capacity(pieces);
            let mut current = state.clone();
            let mut rejected = None;
            for _ in 0..pieces {
                match self.step_with(&current, dt) {
                    Ok(next) => {
                        out.push(next.clone());
                        current = next;
                    }
                    Err(e @ Error::StepRejected { .. }) => {
                        rejected = Some(e);
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            match rejected {
                None => return Ok(out),
                Some(e) if attempt == MAX_REJECTIONS => return Err(e),
                Some(_) => {
                    debug!("step of {dt:.3e} rejected at t = {:.6}, halving", state.t);
                    pieces *= 2;
                }
            }
        }
        unreachable!("loop returns on the last attempt")
    }

    /// Nominal step of [`NsacParams::dt`] with halving on rejection.
    pub fn step(&self, state: &FieldState) -> Result<FieldState> {
        Ok(self.advance(state, self.params.dt)?.pop().expect("at least one piece"))
    }

    /// Integrates from `initial` through the increasing `report_times`,
    /// calling `on_report` with the state at each of them. The interval to
    /// each report time is split into equal steps no larger than the nominal
    /// step, so reports land exactly on the requested times.
    pub fn run(
        &self,
        initial: &FieldState,
        report_times: &[f64],
        mut on_report: impl FnMut(&FieldState) -> Result<()>,
    ) -> Result<(FieldState, EnergyLog)> {
        let mut state = initial.clone();
        let mut log = EnergyLog {
            initial: energy(&state, &self.params),
            records: Vec::new(),
        };
        let mut e_prev = log.initial;
        for &target in report_times {
            let span = target - state.t;
            if span < -1e-14 {
                return Err(Error::InvalidParams(format!(
                    "report time {target} precedes current time {}",
                    state.t
                )));
            }
            if span > 1e-14 {
                let steps = (span / self.params.dt - 1e-9).ceil().max(1.0) as usize;
                let dt = span / steps as f64;
                for _ in 0..steps {
                    for next in self.advance(&state, dt)? {
                        let e = energy(&next, &self.params);
                        let step_dt = next.t - state.t;
                        log.records.push(EnergyRecord {
                            t: next.t,
                            dt: step_dt,
                            energy: e,
                            increase: e - e_prev,
                            tolerance: energy_tolerance(&self.params, step_dt, &state.vel),
                        });
                        e_prev = e;
                        state = next;
                    }
                }
                state.t = target;
            }
            on_report(&state)?;
        }
        Ok((state, log))
    }
}
