//! Point-list text format: a header line `k=<dim>`, then one point per line as
//! whitespace-separated integers. Blank lines and `#` comments are ignored.

use super::index_set::IndexSet;
use super::point::Point;
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct ParsedPoints {
    pub set: IndexSet,
    pub duplicates: usize,
}

pub fn parse_point_list(text: &str) -> Result<ParsedPoints> {
    let mut dim = None;
    let mut pts = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some(k) = dim else {
            let k = line
                .strip_prefix("k=")
                .and_then(|s| s.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("expected header `k=<dim>`, found `{line}`") })?;
            if k == 0 || k > super::MAX_DIM {
                return Err(Error::Parse { line: line_no, msg: format!("unsupported dimension {k}") });
            }
            dim = Some(k);
            continue;
        };
        let coords = line
            .split_whitespace()
            .map(|tok| tok.parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        if coords.len() != k {
            return Err(Error::Parse { line: line_no, msg: format!("expected {k} coordinates, found {}", coords.len()) });
        }
        pts.push(Point::of(&coords));
    }
    let k = dim.ok_or(Error::Parse { line: 0, msg: "missing `k=<dim>` header".into() })?;
    let (set, duplicates) = IndexSet::with_duplicates(k, pts)?;
    Ok(ParsedPoints { set, duplicates })
}

pub fn format_point_list(set: &IndexSet) -> String {
    let mut out = format!("k={}\n", set.dim());
    for p in set.iter() {
        let row: Vec<String> = p.coords().iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_dedups() {
        let r = parse_point_list("k=2\n1 1\n").unwrap();
        assert_eq!(r.set.points(), &[Point::of(&[1, 1])]);
        let r = parse_point_list("k=2\n1 1\n1 1\n# note\n\n2 3\n").unwrap();
        assert_eq!((r.set.len(), r.duplicates), (2, 1));
    }

    #[test]
    fn reports_bad_line() {
        match parse_point_list("k=2\n1 1\n1 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_point_list("1 2\n").is_err());
        assert!(parse_point_list("k=1\nx\n").is_err());
    }

    #[test]
    fn roundtrip() {
        let s = IndexSet::hypercube(1, 2);
        assert_eq!(parse_point_list(&format_point_list(&s)).unwrap().set, s);
    }
}
