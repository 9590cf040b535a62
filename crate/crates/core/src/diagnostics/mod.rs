//! Relative entropy, bulk error and their coercivity estimates, evaluated by
//! grid quadrature for a phase-field state against a sharp-interface flow.
//!
//! All integrands use the centred gradient `g = grad_h phi` together with the
//! chain-rule gradient `grad psi_eps = sqrt(2 W(phi)) g`, so that the
//! algebraic inequalities between them hold node by node.

pub mod contour;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use contour::{extract_interface, interface_distance, mean_radius, Polyline};

use crate::fields::{gradient, integrate_with, Grid, ScalarField, VectorField};
use crate::geometry::{cutoff, CalibrationParams, InterfaceState};
use crate::nsac::{check_embedded, chemical_potential, FieldState};
use crate::potential::PotentialSpec;
use crate::reference::SharpSolution;
use crate::{Error, Result, Vec2};

/// Unit vector used for `n_eps` where the phase gradient vanishes.
pub const FALLBACK_NORMAL: [f64; 2] = [1.0, 0.0];
/// Gradients below this norm count as zero in [`n_eps`].
pub const GRADIENT_FLOOR: f64 = 1e-14;
/// Pinned constant of the weighted interface-energy estimate.
pub const WEIGHTED_ENERGY_CONSTANT: f64 = 4.0;
/// Pinned constant of the equipartition-deficit estimate.
pub const DEFICIT_CONSTANT: f64 = 2.0;
/// Pinned constant of the bulk-error estimate.
pub const BULK_CONSTANT: f64 = 1.0;

/// `grad / |grad|`, or `fallback` when the gradient vanishes.
pub fn n_eps(grad: &Vec2, fallback: &Vec2) -> Vec2 {
    let n = grad.norm();
    if n > GRADIENT_FLOOR {
        grad / n
    } else {
        *fallback
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticParams {
    pub epsilon: f64,
    /// Tube half-width of the calibration fields.
    pub delta: f64,
    pub potential: PotentialSpec,
}

impl DiagnosticParams {
    pub fn new(epsilon: f64, delta: f64, potential: PotentialSpec) -> Result<Self> {
        if !(epsilon > 0.0 && delta > 0.0 && epsilon.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need epsilon > 0 and delta > 0, got {epsilon}, {delta}"
            )));
        }
        Ok(Self {
            epsilon,
            delta,
            potential,
        })
    }
}

/// Quadratures at one time. Column order of the CSV output follows the field
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub t: f64,
    pub e_total: f64,
    /// `int |v - v_ref|^2 / 2`.
    pub e_velocity: f64,
    /// `int eps |grad phi|^2 / 2 + W / eps - xi . grad psi_eps`.
    pub e_interface: f64,
    /// `int (sigma chi - psi_eps) vartheta`.
    pub e_bulk: f64,
    /// `int (1 - n_eps . xi) |grad psi_eps|`.
    pub tilt_excess: f64,
    /// `int (sqrt(eps) |grad phi| - sqrt(2 W / eps))^2 / 2`.
    pub equipartition: f64,
    /// Same with the normal derivative `|d_n phi|`, over the `2 delta` tube.
    pub equipartition_normal: f64,
    /// `int eps |grad_tau phi|^2 / 2` over the `2 delta` tube.
    pub tangential_energy: f64,
    /// `|| sigma chi - psi_eps ||_L1`.
    pub psi_l1: f64,
    /// `|| v - v_ref ||_L2`.
    pub velocity_l2: f64,
    /// `|| H_eps ||_L2`.
    pub h_eps_l2: f64,
    pub quadrature_tol: f64,
}

impl EntropyReport {
    pub const COLUMNS: [&'static str; 13] = [
        "t",
        "e_total",
        "e_velocity",
        "e_interface",
        "e_bulk",
        "tilt_excess",
        "equipartition",
        "equipartition_normal",
        "tangential_energy",
        "psi_l1",
        "velocity_l2",
        "h_eps_l2",
        "quadrature_tol",
    ];

    /// Values in the order of [`EntropyReport::COLUMNS`].
    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.e_total,
            self.e_velocity,
            self.e_interface,
            self.e_bulk,
            self.tilt_excess,
            self.equipartition,
            self.equipartition_normal,
            self.tangential_energy,
            self.psi_l1,
            self.velocity_l2,
            self.h_eps_l2,
            self.quadrature_tol,
        ]
    }
}

/// Node values shared by the functionals.
struct Pointwise {
    grid: Grid,
    grad: Vec<Vec2>,
    phi: Vec<f64>,
    w: Vec<f64>,
    psi: Vec<f64>,
    d: Vec<f64>,
    xi: Vec<Vec2>,
    /// Normal of the reference interface, inside the `2 delta` tube.
    normal: Vec<Option<Vec2>>,
    vartheta: Vec<f64>,
    dv: Vec<Vec2>,
}

impl Pointwise {
    fn new(state: &FieldState, sol: &SharpSolution, params: &DiagnosticParams) -> Result<Self> {
        let grid = *state.grid();
        let iface = sol.as_interface_state(state.t)?;
        check_embedded(&grid, &iface, 2.0 * params.delta)?;
        let calib = CalibrationParams::new(params.delta, sol.mobility)?;
        let g = gradient(&state.phi);
        let n = grid.len();
        let mut out = Self {
            grid,
            grad: Vec::with_capacity(n),
            phi: state.phi.values().to_vec(),
            w: Vec::with_capacity(n),
            psi: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
            xi: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            vartheta: Vec::with_capacity(n),
            dv: Vec::with_capacity(n),
        };
        for j in 0..grid.my() {
            for i in 0..grid.mx() {
                let k = grid.index(i, j);
                let raw = grid.position(i, j);
                let x = iface.local_position(&grid, &raw);
                let phi = out.phi[k];
                let d = iface.signed_distance(&x);
                out.grad.push(Vec2::new(g.x()[k], g.y()[k]));
                out.w.push(params.potential.w(phi));
                out.psi.push(params.potential.psi_clamped(phi));
                out.d.push(d);
                out.xi.push(crate::geometry::xi_field(&iface, &calib, &x));
                out.normal.push(if d.abs() < 2.0 * params.delta {
                    Some(iface.normal_extension(&x)?)
                } else {
                    None
                });
                out.vartheta.push(cutoff::theta_bar(d / params.delta));
                out.dv.push(state.vel.at(i, j) - sol.sharp_velocity(&x, state.t)?);
            }
        }
        Ok(out)
    }

    fn sqrt_2w(&self, k: usize) -> f64 {
        (2.0 * self.w[k]).sqrt()
    }

    fn grad_psi(&self, k: usize) -> Vec2 {
        self.grad[k] * self.sqrt_2w(k)
    }

    fn chi(&self, k: usize) -> f64 {
        if self.d[k] > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        integrate_with(&self.grid, |_, _, k| f(k))
    }

    /// `10 h^2 |Omega| max(scale)`.
    fn tolerance(&self, scale: f64) -> f64 {
        let h = self.grid.h();
        10.0 * h * h * self.grid.area() * scale
    }
}

/// Node-wise integrands of the interface part.
struct InterfaceTerms {
    energy: f64,
    tilt: f64,
    equipartition: f64,
    normal_equipartition: f64,
    tangential: f64,
}

fn interface_terms(p: &Pointwise, params: &DiagnosticParams, k: usize) -> InterfaceTerms {
    let eps = params.epsilon;
    let g = p.grad[k];
    let g2 = g.norm_squared();
    let s2w = p.sqrt_2w(k);
    let grad_psi = p.grad_psi(k);
    let fallback = Vec2::new(FALLBACK_NORMAL[0], FALLBACK_NORMAL[1]);
    let n_e = n_eps(&g, &fallback);
    let xi = p.xi[k];
    let a = eps.sqrt() * g2.sqrt();
    let b = s2w / eps.sqrt();
    let (normal_equipartition, tangential) = match p.normal[k] {
        Some(n) => {
            let dn = n.dot(&g);
            let tau = g - n * dn;
            let e = eps.sqrt() * dn.abs() - b;
            (0.5 * e * e, 0.5 * eps * tau.norm_squared())
        }
        None => (0.0, 0.0),
    };
    InterfaceTerms {
        energy: 0.5 * eps * g2 + p.w[k] / eps - xi.dot(&grad_psi),
        tilt: (1.0 - n_e.dot(&xi)) * grad_psi.norm(),
        equipartition: 0.5 * (a - b) * (a - b),
        normal_equipartition,
        tangential,
    }
}

/// All functionals of `state` relative to `sol` at time `state.t`.
pub fn relative_entropy(state: &FieldState, sol: &SharpSolution, params: &DiagnosticParams) -> Result<EntropyReport> {
    let p = Pointwise::new(state, sol, params)?;
    let n = p.grid.len();
    let terms: Vec<InterfaceTerms> = (0..n).map(|k| interface_terms(&p, params, k)).collect();
    let sigma = params.potential.sigma();
    let e_velocity = p.integrate(|k| 0.5 * p.dv[k].norm_squared());
    let e_interface = p.integrate(|k| terms[k].energy);
    let e_bulk = p.integrate(|k| (sigma * p.chi(k) - p.psi[k]) * p.vartheta[k]);
    let h = chemical_potential(&state.phi, params.epsilon, &params.potential);
    let scale = (0..n)
        .map(|k| {
            let eps = params.epsilon;
            let t = &terms[k];
            (0.5 * eps * p.grad[k].norm_squared() + p.w[k] / eps + p.grad_psi(k).norm())
                .max(t.equipartition)
                .max(0.5 * p.dv[k].norm_squared())
        })
        .fold(sigma, f64::max);
    Ok(EntropyReport {
        t: state.t,
        e_total: e_velocity + e_interface,
        e_velocity,
        e_interface,
        e_bulk,
        tilt_excess: p.integrate(|k| terms[k].tilt),
        equipartition: p.integrate(|k| terms[k].equipartition),
        equipartition_normal: p.integrate(|k| terms[k].normal_equipartition),
        tangential_energy: p.integrate(|k| terms[k].tangential),
        psi_l1: p.integrate(|k| (sigma * p.chi(k) - p.psi[k]).abs()),
        velocity_l2: (2.0 * e_velocity).sqrt(),
        h_eps_l2: p.integrate(|k| h.values()[k] * h.values()[k]).sqrt(),
        quadrature_tol: p.tolerance(scale),
    })
}

/// `int (sigma chi - psi_eps) vartheta`.
pub fn bulk_error(state: &FieldState, sol: &SharpSolution, params: &DiagnosticParams) -> Result<f64> {
    let p = Pointwise::new(state, sol, params)?;
    let sigma = params.potential.sigma();
    Ok(p.integrate(|k| (sigma * p.chi(k) - p.psi[k]) * p.vartheta[k]))
}

/// `H_eps = -eps lap phi + W'(phi) / eps` on the grid.
pub fn h_eps_field(state: &FieldState, params: &DiagnosticParams) -> ScalarField {
    chemical_potential(&state.phi, params.epsilon, &params.potential)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityItem {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    /// Holds with constant one for every state.
    pub unit_constant: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub t: f64,
    pub quadrature_tol: f64,
    pub items: Vec<CoercivityItem>,
}

impl CoercivityReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    /// Items with unit constant, plus nonnegativity of the bulk error.
    pub fn unit_items_passed(&self) -> bool {
        self.items.iter().filter(|i| i.unit_constant).all(|i| i.passed)
    }

    pub fn item(&self, name: &str) -> Option<&CoercivityItem> {
        self.items.iter().find(|i| i.name == name)
    }

    /// Smallest constant with which `name` would hold, ignoring the slack.
    pub fn required_constant(&self, name: &str) -> Option<f64> {
        self.item(name).map(|i| if i.rhs > 0.0 { i.lhs / i.rhs } else { f64::INFINITY })
    }
}

/// Evaluates both sides of every coercivity estimate and checks
/// `lhs <= C rhs + quadrature_tol`.
pub fn coercivity_suite(state: &FieldState, sol: &SharpSolution, params: &DiagnosticParams) -> Result<CoercivityReport> {
    let report = relative_entropy(state, sol, params)?;
    let p = Pointwise::new(state, sol, params)?;
    let eps = params.epsilon;
    let sigma = params.potential.sigma();
    let fallback = Vec2::new(FALLBACK_NORMAL[0], FALLBACK_NORMAL[1]);
    let weighted = p.integrate(|k| {
        let n_e = n_eps(&p.grad[k], &fallback);
        let weight = (n_e - p.xi[k]).norm_squared() + (p.d[k] * p.d[k]).min(1.0);
        weight * (eps * p.grad[k].norm_squared() + p.grad_psi(k).norm())
    });
    let deficit = p.integrate(|k| {
        let n_e = n_eps(&p.grad[k], &fallback);
        let weight = p.d[k].abs().min(1.0) + (1.0 - n_e.dot(&p.xi[k])).max(0.0).sqrt();
        weight * (eps * p.grad[k].norm_squared() - p.grad_psi(k).norm()).abs()
    });
    let bulk_weighted = p.integrate(|k| (sigma * p.chi(k) - p.psi[k]).abs() * p.d[k].abs().min(1.0))
        + report.psi_l1 * report.psi_l1;
    let tol = report.quadrature_tol;
    let item = |name, lhs: f64, rhs: f64, constant: f64, unit_constant| CoercivityItem {
        name,
        lhs,
        rhs,
        constant,
        unit_constant,
        passed: lhs <= constant * rhs + tol,
    };
    Ok(CoercivityReport {
        t: report.t,
        quadrature_tol: tol,
        items: vec![
            item("velocity", report.e_velocity, report.e_total, 1.0, true),
            item("tilt", report.tilt_excess, report.e_interface, 1.0, true),
            item("equipartition", report.equipartition, report.e_interface, 1.0, true),
            item(
                "normal_tangential",
                report.equipartition_normal + report.tangential_energy,
                report.e_interface,
                1.0,
                true,
            ),
            item("bulk_nonnegative", 0.0, report.e_bulk, 1.0, true),
            item("weighted_energy", weighted, report.e_interface, WEIGHTED_ENERGY_CONSTANT, false),
            item("deficit", deficit, report.e_interface, DEFICIT_CONSTANT, false),
            item("bulk_weighted", bulk_weighted, report.e_bulk, BULK_CONSTANT, false),
        ],
    })
}

/// Seeded random state: a perturbed and clipped droplet profile together with
/// a random discretely solenoidal velocity (centred curl of a random stream
/// function).
pub fn random_admissible_state(grid: &Grid, seed: u64, epsilon: f64, potential: &PotentialSpec) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = Vec2::new(
        grid.origin()[0] + grid.lx() * rng.gen_range(0.4..0.6),
        grid.origin()[1] + grid.ly() * rng.gen_range(0.4..0.6),
    );
    let radius = grid.lx() * rng.gen_range(0.15..0.3);
    let width = epsilon * rng.gen_range(0.5..2.0);
    let noise = rng.gen_range(0.0..0.6);
    let mut modes = Vec::new();
    for _ in 0..6 {
        modes.push((
            rng.gen_range(1..4) as f64,
            rng.gen_range(1..4) as f64,
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        ));
    }
    let (lx, ly) = (grid.lx(), grid.ly());
    let wave = |x: &Vec2, modes: &[(f64, f64, f64, f64)]| -> f64 {
        modes
            .iter()
            .map(|&(kx, ky, a, ph)| {
                a * (std::f64::consts::TAU * (kx * x.x / lx + ky * x.y / ly) + ph).sin()
            })
            .sum::<f64>()
    };
    let phi = ScalarField::from_fn(*grid, |x| {
        let y = grid.nearest_image(x, &center);
        let base = potential.optimal_profile((radius - (y - center).norm()) / width);
        (base + noise * wave(x, &modes) / 3.0).clamp(-1.0, 1.0)
    });
    let mut phi = phi;
    phi.enforce_dirichlet(-1.0);

    let amp = rng.gen_range(0.0..1.0);
    let mut stream_modes = Vec::new();
    for _ in 0..4 {
        stream_modes.push((
            rng.gen_range(1..3) as f64,
            rng.gen_range(1..3) as f64,
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        ));
    }
    let stream = ScalarField::from_fn(*grid, |x| amp * wave(x, &stream_modes) / 10.0);
    let gs = gradient(&stream);
    let mut vel = VectorField::new(*grid, gs.y().to_vec(), gs.x().iter().map(|v| -v).collect()).expect("grid");
    vel.enforce_dirichlet();
    FieldState {
        t: 0.0,
        phi,
        vel,
        p: ScalarField::zeros(*grid),
    }
}

/// Reference solution for the well-prepared interface at `state.t`, useful
/// when only an interface is known.
pub fn interface_report(state: &FieldState, iface: &InterfaceState, params: &DiagnosticParams) -> Result<EntropyReport> {
    use crate::reference::SharpKind;
    let kind = match *iface {
        InterfaceState::Circle { center, radius } => SharpKind::ShrinkingCircle { center, r0: radius },
        InterfaceState::Line { offset, normal } => SharpKind::StaticLine { offset, normal },
        InterfaceState::Band { lower, upper, normal } => SharpKind::StaticBand { lower, upper, normal },
    };
    let sol = SharpSolution::new(kind, 0.0, &params.potential, params.delta)?;
    relative_entropy(&FieldState { t: 0.0, ..state.clone() }, &sol, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{integrate, Boundary};
    use crate::nsac::{well_prepared_data, NsacParams};
    use crate::reference::SharpKind;

    fn pot() -> PotentialSpec {
        PotentialSpec::default()
    }

    fn circle_solution(r0: f64, m: f64, delta: f64) -> SharpSolution {
        SharpSolution::new(
            SharpKind::ShrinkingCircle {
                center: Vec2::new(0.5, 0.5),
                r0,
            },
            m,
            &pot(),
            delta,
        )
        .unwrap()
    }

    fn prepared(n: usize, eps: f64, r0: f64) -> FieldState {
        let g = Grid::unit_square(n, Boundary::Periodic).unwrap();
        let p = NsacParams::new(eps, 0.0, 1e-6, 1.0, pot(), g).unwrap();
        let iface = InterfaceState::circle(Vec2::new(0.5, 0.5), r0).unwrap();
        well_prepared_data(&iface, &p, &|_| Vec2::zeros(), 0.1).unwrap()
    }

    #[test]
    fn n_eps_examples() {
        let s = Vec2::new(1.0, 0.0);
        assert_eq!(n_eps(&Vec2::zeros(), &s), s);
        let n = n_eps(&Vec2::new(3.0, 4.0), &s);
        assert!((n - Vec2::new(0.6, 0.8)).norm() < 1e-15);
        assert_eq!(n_eps(&Vec2::new(-2.0, 0.0), &s), Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn well_prepared_state_has_small_entropy() {
        let eps = 0.04;
        let s = prepared(150, eps, 0.25);
        let params = DiagnosticParams::new(eps, 0.1, pot()).unwrap();
        let sol = circle_solution(0.25, 0.1, 0.1);
        let r = relative_entropy(&s, &sol, &params).unwrap();
        assert!(r.e_velocity.abs() < 1e-20);
        assert!(r.e_interface > 0.0);
        assert!(r.e_interface < 400.0 * eps * eps, "{}", r.e_interface / (eps * eps));
        assert!(r.e_bulk >= 0.0);
        let c = coercivity_suite(&s, &sol, &params).unwrap();
        assert!(c.all_passed(), "{c:?}");
    }

    #[test]
    fn no_interface_gives_zero_entropy() {
        let g = Grid::unit_square(64, Boundary::Periodic).unwrap();
        let s = FieldState::rest(g, 0.0);
        let params = DiagnosticParams::new(0.1, 0.1, pot()).unwrap();
        let sol = circle_solution(0.25, 0.0, 0.1);
        let r = relative_entropy(&s, &sol, &params).unwrap();
        assert_eq!(r.e_interface, 0.0);
        assert!(r.e_total.abs() <= r.quadrature_tol);
        let c = coercivity_suite(&s, &sol, &params).unwrap();
        assert!(c.all_passed());
        for i in &c.items[..4] {
            assert_eq!(i.lhs, 0.0, "{}", i.name);
        }
    }

    #[test]
    fn mismatched_radius_is_detected() {
        let eps = 0.04;
        let s = prepared(150, eps, 0.25);
        let params = DiagnosticParams::new(eps, 0.05, pot()).unwrap();
        let sol = circle_solution(0.125, 0.0, 0.05);
        let r = relative_entropy(&s, &sol, &params).unwrap();
        assert!(r.e_interface > 0.1 * pot().sigma(), "{}", r.e_interface);
    }

    #[test]
    fn bulk_error_examples() {
        let g = Grid::unit_square(64, Boundary::Dirichlet).unwrap();
        let params = DiagnosticParams::new(0.1, 0.1, pot()).unwrap();
        let line = SharpSolution::new(
            SharpKind::StaticLine {
                offset: 2.0,
                normal: Vec2::new(1.0, 0.0),
            },
            0.0,
            &pot(),
            0.1,
        )
        .unwrap();
        assert_eq!(bulk_error(&FieldState::rest(g, 0.0), &line, &params).unwrap(), 0.0);

        let gp = Grid::unit_square(256, Boundary::Periodic).unwrap();
        let ones = FieldState {
            phi: ScalarField::constant(gp, 1.0),
            ..FieldState::rest(gp, 0.0)
        };
        let (r, delta) = (0.25, 0.1);
        let sol = circle_solution(r, 0.0, delta);
        let got = bulk_error(&ones, &sol, &params).unwrap();
        let sigma = pot().sigma();
        let n = 20_000;
        let ring: f64 = (0..n)
            .map(|k| {
                let s = delta * (k as f64 + 0.5) / n as f64;
                cutoff::theta_bar(-s / delta).abs() * 2.0 * std::f64::consts::PI * (r + s) * delta / n as f64
            })
            .sum();
        let far = 1.0 - std::f64::consts::PI * (r + delta).powi(2);
        let expect = sigma * (ring + far);
        let report = relative_entropy(&ones, &sol, &params).unwrap();
        assert!((got - expect).abs() < report.quadrature_tol, "{got} vs {expect}");
    }

    #[test]
    fn decomposition_identity_pointwise() {
        let g = Grid::unit_square(64, Boundary::Periodic).unwrap();
        let eps = 0.08;
        let s = random_admissible_state(&g, 11, eps, &pot());
        let grad = gradient(&s.phi);
        for k in 0..g.len() {
            let phi = s.phi.values()[k];
            let gn = Vec2::new(grad.x()[k], grad.y()[k]).norm();
            let w = pot().w(phi);
            let lhs = eps * gn * gn - (2.0 * w).sqrt() * gn;
            let e = eps.sqrt() * gn - (2.0 * w).sqrt() / eps.sqrt();
            let rhs = (eps / 2.0 * gn * gn - w / eps) + 0.5 * e * e;
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn chain_rule_gradient_converges() {
        let mut errs = vec![];
        for n in [32, 64, 128] {
            let g = Grid::unit_square(n, Boundary::Periodic).unwrap();
            let phi = ScalarField::from_fn(g, |x| 0.9 * (std::f64::consts::TAU * x.x).sin() * (std::f64::consts::TAU * x.y).cos());
            let psi = phi.map(|v| pot().psi_clamped(v));
            let gpsi = gradient(&psi);
            let gphi = gradient(&phi);
            let e = (0..g.len())
                .map(|k| {
                    let c = pot().sqrt_2w(phi.values()[k]);
                    (Vec2::new(gpsi.x()[k], gpsi.y()[k]) - Vec2::new(gphi.x()[k], gphi.y()[k]) * c).norm()
                })
                .fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 4.0).abs() < 0.5, "{errs:?}");
        }
    }

    #[test]
    fn random_states_satisfy_unit_inequalities() {
        let g = Grid::unit_square(64, Boundary::Periodic).unwrap();
        let params = DiagnosticParams::new(0.06, 0.1, pot()).unwrap();
        let sol = circle_solution(0.25, 0.05, 0.1);
        for seed in 0..20 {
            let s = random_admissible_state(&g, seed, params.epsilon, &pot());
            assert!(s.phi.max_abs() <= 1.0);
            assert!(crate::fields::divergence(&s.vel).max_abs() < 1e-10);
            let c = coercivity_suite(&s, &sol, &params).unwrap();
            assert!(c.unit_items_passed(), "seed {seed}: {c:?}");
        }
    }

    #[test]
    fn h_eps_vanishes_on_wells_and_is_small_for_planar_profile() {
        let g = Grid::unit_square(128, Boundary::Periodic).unwrap();
        let params = DiagnosticParams::new(0.05, 0.1, pot()).unwrap();
        let ones = FieldState {
            phi: ScalarField::constant(g, 1.0),
            ..FieldState::rest(g, 0.0)
        };
        assert_eq!(h_eps_field(&ones, &params).max_abs(), 0.0);
        let band = InterfaceState::band(0.25, 0.75, Vec2::new(1.0, 0.0)).unwrap();
        let planar = FieldState {
            phi: ScalarField::from_fn(g, |x| {
                let y = band.local_position(&g, x);
                pot().optimal_profile(band.signed_distance(&y) / params.epsilon)
            }),
            ..FieldState::rest(g, 0.0)
        };
        let h = g.h();
        let floor = h * h / params.epsilon.powi(3);
        // Periodic slabs have a kink in the distance midway between the two
        // interfaces; only nodes within 3 eps of an interface see one profile.
        let hm = h_eps_field(&planar, &params);
        let worst = (0..g.len())
            .filter(|&k| {
                let x = g.position(k % g.mx(), k / g.mx());
                band.signed_distance(&band.local_position(&g, &x)).abs() <= 3.0 * params.epsilon
            })
            .map(|k| hm.values()[k].abs())
            .fold(0.0, f64::max);
        assert!(worst < floor, "{worst} vs {floor}");
    }

    #[test]
    fn h_eps_matches_curvature_for_circle() {
        let eps = 0.02;
        let s = prepared(300, eps, 0.25);
        let params = DiagnosticParams::new(eps, 0.1, pot()).unwrap();
        let h = h_eps_field(&s, &params);
        // int H_eps^2 / eps ~ sigma H^2 |Gamma|.
        let got = integrate(&h.map(|v| v * v)) / eps;
        let expect = pot().sigma() * 16.0 * std::f64::consts::TAU * 0.25;
        assert!((got / expect - 1.0).abs() < 0.2, "{got} vs {expect}");
    }
}
