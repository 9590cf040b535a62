//! Marching-squares extraction of level lines of a nodal field.

use std::collections::{HashMap, HashSet};

use crate::fields::ScalarField;
use crate::geometry::InterfaceState;
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec2>,
    /// First and last point coincide logically; the last point is not repeated.
    pub closed: bool,
}

impl Polyline {
    /// Shoelace area; positive for counterclockwise closed curves.
    pub fn signed_area(&self) -> f64 {
        if !self.closed {
            return 0.0;
        }
        let n = self.points.len();
        (0..n)
            .map(|k| {
                let (a, b) = (self.points[k], self.points[(k + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            * 0.5
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.points.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |k| (self.points[k], self.points[(k + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// Between nodes `(i, j)` and `(i + 1, j)`.
    H(usize, usize),
    /// Between nodes `(i, j)` and `(i, j + 1)`.
    V(usize, usize),
}

/// Level line `phi = level`, traced through cells that do not wrap around a
/// periodic seam. Nodes with `phi >= level` count as inside. Closed curves
/// are oriented counterclockwise.
pub fn extract_interface(phi: &ScalarField, level: f64) -> Result<Vec<Polyline>> {
    if !(level.abs() < 1.0) {
        return Err(Error::Domain {
            what: "contour level",
            value: level,
            lo: -1.0,
            hi: 1.0,
        });
    }
    let g = *phi.grid();
    let (mx, my) = (g.mx(), g.my());
    let point_on = |e: Edge| -> Vec2 {
        let ((i0, j0), (i1, j1)) = match e {
            Edge::H(i, j) => ((i, j), (i + 1, j)),
            Edge::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (a, b) = (phi.at(i0, j0), phi.at(i1, j1));
        let s = if a == b { 0.5 } else { (level - a) / (b - a) };
        let p0 = g.position(i0, j0);
        p0 + (g.position(i1, j1) - p0) * s
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..my - 1 {
        for i in 0..mx - 1 {
            let v = [phi.at(i, j), phi.at(i + 1, j), phi.at(i + 1, j + 1), phi.at(i, j + 1)];
            let inside = v.map(|x| x >= level);
            let code = inside
                .iter()
                .enumerate()
                .fold(0u8, |c, (k, &b)| c | ((b as u8) << k));
            let (s, e, n, w) = (Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j));
            // Segments are oriented with the inside on the left.
            match code {
                0 | 15 => {}
                1 => segments.push((s, w)),
                2 => segments.push((e, s)),
                3 => segments.push((e, w)),
                4 => segments.push((n, e)),
                6 => segments.push((n, s)),
                7 => segments.push((n, w)),
                8 => segments.push((w, n)),
                9 => segments.push((s, n)),
                11 => segments.push((e, n)),
                12 => segments.push((w, e)),
                13 => segments.push((s, e)),
                14 => segments.push((w, s)),
                5 | 10 => {
                    let centre_inside = v.iter().sum::<f64>() / 4.0 >= level;
                    match (code, centre_inside) {
                        (5, true) => {
                            segments.push((n, w));
                            segments.push((s, e));
                        }
                        (5, false) => {
                            segments.push((s, w));
                            segments.push((n, e));
                        }
                        (10, true) => {
                            segments.push((e, n));
                            segments.push((w, s));
                        }
                        _ => {
                            segments.push((e, s));
                            segments.push((w, n));
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut by_start: HashMap<Edge, usize> = HashMap::with_capacity(segments.len());
    let mut has_pred: HashSet<Edge> = HashSet::with_capacity(segments.len());
    for (k, &(a, b)) in segments.iter().enumerate() {
        by_start.insert(a, k);
        has_pred.insert(b);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let trace = |start: usize, used: &mut Vec<bool>| -> Polyline {
        let mut edges = vec![segments[start].0];
        let mut k = start;
        let closed;
        loop {
            used[k] = true;
            let next = segments[k].1;
            if next == edges[0] {
                closed = true;
                break;
            }
            edges.push(next);
            match by_start.get(&next) {
                Some(&n) if !used[n] => k = n,
                _ => {
                    closed = false;
                    break;
                }
            }
        }
        Polyline {
            points: edges.into_iter().map(point_on).collect(),
            closed,
        }
    };
    // Open curves first, started from segments without a predecessor.
    for k in 0..segments.len() {
        if !used[k] && !has_pred.contains(&segments[k].0) {
            out.push(trace(k, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            out.push(trace(k, &mut used));
        }
    }
    for p in &mut out {
        if p.closed && p.signed_area() < 0.0 {
            p.points.reverse();
        }
    }
    Ok(out)
}

/// Largest `|d|` of any contour vertex with respect to `iface`.
pub fn interface_distance(polylines: &[Polyline], iface: &InterfaceState) -> Result<f64> {
    let mut worst: Option<f64> = None;
    for p in polylines {
        for x in &p.points {
            let d = iface.signed_distance(x).abs();
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
    }
    worst.ok_or(Error::EmptyContour)
}

/// Length-weighted mean distance of the contour from `center`.
pub fn mean_radius(polylines: &[Polyline], center: &Vec2) -> Result<f64> {
    let (mut total, mut weight) = (0.0, 0.0);
    for p in polylines {
        for (a, b) in p.segments() {
            let len = (b - a).norm();
            total += len * 0.5 * ((a - center).norm() + (b - center).norm());
            weight += len;
        }
    }
    if weight == 0.0 {
        return Err(Error::EmptyContour);
    }
    Ok(total / weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, Grid};

    #[test]
    fn linear_field_gives_straight_line() {
        let g = Grid::new(16, 16, [-1.0, -1.0], 2.0, 2.0, Boundary::Dirichlet).unwrap();
        let phi = ScalarField::from_fn(g, |x| x.x);
        let lines = extract_interface(&phi, 0.0).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert_eq!(lines[0].points.len(), 17);
        for p in &lines[0].points {
            assert!(p.x.abs() <= g.h() * 1e-12);
        }
    }

    #[test]
    fn constant_field_has_no_contour() {
        let g = Grid::unit_square(16, Boundary::Periodic).unwrap();
        let lines = extract_interface(&ScalarField::constant(g, -1.0), 0.0).unwrap();
        assert!(lines.is_empty());
        assert!(matches!(interface_distance(&lines, &InterfaceState::line(0.0, Vec2::new(1.0, 0.0)).unwrap()), Err(Error::EmptyContour)));
        assert!(extract_interface(&ScalarField::constant(g, -1.0), 1.0).is_err());
    }

    #[test]
    fn circle_contour_is_closed_and_counterclockwise() {
        let g = Grid::unit_square(64, Boundary::Periodic).unwrap();
        let c = Vec2::new(0.5, 0.5);
        let r = 0.3;
        let phi = ScalarField::from_fn(g, |x| r - (x - c).norm());
        let lines = extract_interface(&phi, 0.0).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        assert!(lines[0].signed_area() > 0.0);
        let circle = InterfaceState::circle(c, r).unwrap();
        let dist = interface_distance(&lines, &circle).unwrap();
        // Vertices of linear interpolation on a distance function.
        assert!(dist <= g.h() * g.h() / (8.0 * r) + 1e-12, "{dist}");
        let shifted = InterfaceState::circle(c, r + 0.01).unwrap();
        let d2 = interface_distance(&lines, &shifted).unwrap();
        assert!((d2 - 0.01).abs() <= g.h() * g.h() / (8.0 * r) + 1e-12);
        assert!((mean_radius(&lines, &c).unwrap() - r).abs() < g.h());
        assert!((lines[0].length() - 2.0 * std::f64::consts::PI * r).abs() < 0.01);
    }

    #[test]
    fn two_droplets_give_two_curves() {
        let g = Grid::unit_square(64, Boundary::Periodic).unwrap();
        let a = Vec2::new(0.3, 0.5);
        let b = Vec2::new(0.7, 0.5);
        let phi = ScalarField::from_fn(g, |x| (0.12 - (x - a).norm()).max(0.12 - (x - b).norm()));
        let lines = extract_interface(&phi, 0.0).unwrap();
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.closed && l.signed_area() > 0.0));
    }
}
