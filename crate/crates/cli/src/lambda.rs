//! Building Λ from the config: point-list files and generators.

use std::path::Path;

use log::warn;
use rvfield::families::{spacetime, synthetic_families};
use rvfield::lattice::{box_points, parse_point_list, Component, IndexSet, InvariantOrder, LatticeUnion, Point, Sublattice};

use crate::config::{point, LambdaSpec, OrderSpec};
use crate::error::{CliError, CliResult};

/// Reads a point-list file; duplicate points are dropped with a warning.
pub fn ingest_lambda(path: &Path) -> CliResult<IndexSet> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_point_list(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if parsed.duplicates > 0 {
        warn!("{}: dropped {} duplicate point(s)", path.display(), parsed.duplicates);
    }
    Ok(parsed.set)
}

/// Builds Λ; `size` replaces the generator's size parameter (sides of a
/// hyperrectangle, the upper corner of a lattice union box, m, or the family n).
pub fn build_lambda(spec: &LambdaSpec, size: Option<i64>) -> CliResult<IndexSet> {
    let cfg = |e: rvfield::Error| CliError::Config(e.to_string());
    match spec {
        LambdaSpec::File { path } => {
            if size.is_some() {
                return Err(CliError::Config("a point-list file has no size parameter to sweep".into()));
            }
            ingest_lambda(path)
        }
        LambdaSpec::Hyperrectangle { n } => {
            if n.is_empty() || n.iter().any(|x| *x < 1) {
                return Err(CliError::Config("hyperrectangle needs positive sides".into()));
            }
            let hi: Vec<i64> = match size {
                Some(s) => vec![s; n.len()],
                None => n.clone(),
            };
            IndexSet::hyperrectangle(&point(&vec![1; n.len()])?, &point(&hi)?).map_err(cfg)
        }
        LambdaSpec::LatticeUnion { components, isolated, lo, hi } => {
            let dim = lo.len();
            if hi.len() != dim {
                return Err(CliError::Config("lattice_union lo and hi differ in dimension".into()));
            }
            let mut comps = Vec::new();
            for c in components {
                let gens = c.generators.iter().map(|g| point(g)).collect::<CliResult<Vec<_>>>()?;
                comps.push(Component { lattice: Sublattice::from_generators(dim, &gens).map_err(cfg)?, offset: point(&c.offset)? });
            }
            let iso = isolated.iter().map(|p| point(p)).collect::<CliResult<Vec<_>>>()?;
            let u = LatticeUnion::from_components(dim, comps, iso);
            let hi = match size {
                Some(s) => vec![s; dim],
                None => hi.clone(),
            };
            let pts: Vec<Point> = box_points(&point(lo)?, &point(&hi)?).into_iter().filter(|p| u.contains(p)).collect();
            IndexSet::new(dim, pts).map_err(cfg)
        }
        LambdaSpec::Spacetime { stations, stations_file, m } => {
            let cs: Vec<Point> = match (stations, stations_file) {
                (Some(s), None) => s.iter().map(|p| point(p)).collect::<CliResult<_>>()?,
                (None, Some(f)) => ingest_lambda(f)?.points().to_vec(),
                _ => return Err(CliError::Config("spacetime needs exactly one of `stations` and `stations_file`".into())),
            };
            spacetime(&cs, size.unwrap_or(*m)).map_err(cfg)
        }
        LambdaSpec::Family { name, n } => {
            let fam = synthetic_families()
                .into_iter()
                .find(|f| f.name == name)
                .ok_or_else(|| CliError::Config(format!("unknown family `{name}`")))?;
            Ok(fam.build(size.unwrap_or(*n)))
        }
    }
}

pub fn build_order(spec: &OrderSpec, dim: usize) -> CliResult<InvariantOrder> {
    match &spec.priority {
        None => Ok(InvariantOrder::lexicographic(dim)),
        Some(p) => {
            if p.len() != dim {
                return Err(CliError::Config(format!("order priority has {} entries, Λ has dimension {dim}", p.len())));
            }
            InvariantOrder::permuted(p.clone()).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn ingest_examples() {
        let f = file("k=2\n1 1\n");
        assert_eq!(ingest_lambda(f.path()).unwrap().points(), &[Point::of(&[1, 1])]);
        let f = file("k=1\n3\n3\n4\n");
        assert_eq!(ingest_lambda(f.path()).unwrap().len(), 2);
        let f = file("k=2\n1 1\n1 2 3\n");
        let e = ingest_lambda(f.path()).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn generators() {
        let h = build_lambda(&LambdaSpec::Hyperrectangle { n: vec![4, 3] }, None).unwrap();
        assert_eq!(h.len(), 12);
        assert_eq!(build_lambda(&LambdaSpec::Hyperrectangle { n: vec![4, 3] }, Some(5)).unwrap().len(), 25);
        let u = LambdaSpec::LatticeUnion {
            components: vec![crate::config::ComponentSpec { generators: vec![vec![2]], offset: vec![0] }],
            isolated: vec![vec![7]],
            lo: vec![1],
            hi: vec![10],
        };
        let pts: Vec<i64> = build_lambda(&u, None).unwrap().iter().map(|p| p.get(0)).collect();
        assert_eq!(pts, vec![2, 4, 6, 7, 8, 10]);
        let st = LambdaSpec::Spacetime { stations: Some(vec![vec![0], vec![2]]), stations_file: None, m: 5 };
        assert_eq!(build_lambda(&st, None).unwrap().len(), 10);
        let fam = LambdaSpec::Family { name: "checkerboard".into(), n: 10 };
        assert_eq!(build_lambda(&fam, None).unwrap().len(), 50);
        assert!(build_lambda(&LambdaSpec::Family { name: "nope".into(), n: 3 }, None).is_err());
    }
}
