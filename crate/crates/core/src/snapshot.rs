//! Plain-text field snapshots.
//!
//! ```text
//! NSAC-SNAP v1 <nx> <ny> <Lx> <Ly> <periodic|dirichlet> <t>
//! <x> <y> <phi> <u> <v> <p>      one row per node, row-major
//! ```
//!
//! Floats are written with 17 significant digits so that loading a written
//! snapshot reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::fields::{Boundary, Grid, ScalarField, VectorField};
use crate::nsac::FieldState;
use crate::{Error, Result};

pub const MAGIC: &str = "NSAC-SNAP";
pub const VERSION: &str = "v1";

pub fn write_snapshot(path: &Path, state: &FieldState) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_to(&mut out, state)?;
    out.flush()?;
    Ok(())
}

pub fn write_to(out: &mut impl Write, state: &FieldState) -> Result<()> {
    let g = state.grid();
    writeln!(
        out,
        "{MAGIC} {VERSION} {} {} {:.16e} {:.16e} {} {:.16e}",
        g.nx(),
        g.ny(),
        g.lx(),
        g.ly(),
        g.boundary().tag(),
        state.t
    )?;
    for j in 0..g.my() {
        for i in 0..g.mx() {
            let x = g.position(i, j);
            let v = state.vel.at(i, j);
            writeln!(
                out,
                "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                x.x,
                x.y,
                state.phi.at(i, j),
                v.x,
                v.y,
                state.p.at(i, j)
            )?;
        }
    }
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<FieldState> {
    let file = File::open(path)?;
    read_from(BufReader::new(file), path)
}

pub fn read_from(input: impl BufRead, path: &Path) -> Result<FieldState> {
    let bad = |reason: String| Error::Snapshot {
        path: PathBuf::from(path),
        reason,
    };
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 8 || fields[0] != MAGIC || fields[1] != VERSION {
        return Err(bad(format!("unrecognised header {header:?}")));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
    let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
    let (nx, ny) = (int(fields[2])?, int(fields[3])?);
    let (lx, ly) = (float(fields[4])?, float(fields[5])?);
    let boundary = Boundary::from_tag(fields[6]).ok_or_else(|| bad(format!("unknown boundary {:?}", fields[6])))?;
    let t = float(fields[7])?;

    let mut rows: Vec<[f64; 6]> = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = [0.0; 6];
        let mut count = 0;
        for (k, tok) in line.split_whitespace().enumerate() {
            if k >= 6 {
                return Err(bad(format!("row {} has more than 6 columns", n + 2)));
            }
            row[k] = float(tok)?;
            count += 1;
        }
        if count != 6 {
            return Err(bad(format!("row {} has {count} columns", n + 2)));
        }
        rows.push(row);
    }
    let first = rows.first().ok_or_else(|| bad("no data rows".into()))?;
    let grid = Grid::new(nx, ny, [first[0], first[1]], lx, ly, boundary).map_err(|e| bad(e.to_string()))?;
    if rows.len() != grid.len() {
        return Err(bad(format!("expected {} rows, found {}", grid.len(), rows.len())));
    }
    let column = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    Ok(FieldState {
        t,
        phi: ScalarField::new(grid, column(2))?,
        vel: VectorField::new(grid, column(3), column(4))?,
        p: ScalarField::new(grid, column(5))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_state(seed: u64, n: usize, boundary: Boundary, origin: [f64; 2]) -> FieldState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid::new(n, n, origin, 0.7, 0.7, boundary).unwrap();
        let mut draw = |len: usize| (0..len).map(|_| rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-12..3))).collect::<Vec<_>>();
        let len = grid.len();
        FieldState {
            t: 0.123456789,
            phi: ScalarField::new(grid, draw(len)).unwrap(),
            vel: VectorField::new(grid, draw(len), draw(len)).unwrap(),
            p: ScalarField::new(grid, draw(len)).unwrap(),
        }
    }

    fn round_trip(state: &FieldState) -> FieldState {
        let mut buf = Vec::new();
        write_to(&mut buf, state).unwrap();
        read_from(&buf[..], Path::new("mem")).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), dirichlet in any::<bool>(), ox in -2.0f64..2.0) {
            let bc = if dirichlet { Boundary::Dirichlet } else { Boundary::Periodic };
            let s = random_state(seed, 16, bc, [ox, 0.0]);
            let r = round_trip(&s);
            prop_assert_eq!(r.t.to_bits(), s.t.to_bits());
            for (a, b) in s.phi.values().iter().zip(r.phi.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            for (a, b) in s.vel.x().iter().zip(r.vel.x()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            for (a, b) in s.p.values().iter().zip(r.p.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(r.grid().nx(), 16);
            prop_assert_eq!(r.grid().origin()[0].to_bits(), ox.to_bits());
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.snap");
        let s = random_state(3, 20, Boundary::Periodic, [0.0, 0.0]);
        write_snapshot(&path, &s).unwrap();
        assert_eq!(load_snapshot(&path).unwrap(), s);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("NSAC-SNAP v1 20 20 "));
        assert_eq!(text.lines().count(), 401);
    }

    #[test]
    fn malformed_inputs_rejected() {
        let p = Path::new("mem");
        assert!(read_from(&b""[..], p).is_err());
        assert!(read_from(&b"NSAC-SNAP v2 16 16 1 1 periodic 0\n"[..], p).is_err());
        assert!(read_from(&b"NSAC-SNAP v1 16 16 1 1 periodic 0\n0 0 0 0 0 0\n"[..], p).is_err());
        assert!(read_from(&b"NSAC-SNAP v1 16 16 1 1 sideways 0\n0 0 0 0 0 0\n"[..], p).is_err());
        assert!(read_from(&b"NSAC-SNAP v1 16 16 1 1 periodic 0\n0 0 0 0 x 0\n"[..], p).is_err());
    }
}
