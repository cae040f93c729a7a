//! Plain-text point-set and weight files.
//!
//! Point sets: one point per line, fields separated by whitespace and/or
//! commas, `#` starts a comment, an optional `# dim=N` header pins the
//! dimension. Weights: either a dense `N_U × N_V` matrix or sparse `i k m`
//! triplet lines with 0-based indices; a `# format=dense` or
//! `# format=sparse` header overrides the shape-based detection.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stats::{PairTable, PointSet};

fn parse_error(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_string(), line, msg: msg.into() }
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let body = line.trim_start().strip_prefix('#')?.trim();
    let (k, v) = body.split_once('=')?;
    (k.trim() == key).then(|| v.trim())
}

/// Numeric rows with line numbers; comments and blank lines dropped.
fn numeric_rows(text: &str, origin: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_error(origin, idx + 1, format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((idx + 1, fields));
    }
    Ok(rows)
}

pub fn parse_point_set(text: &str, origin: &str) -> Result<PointSet<f64>> {
    let mut declared = None;
    for (idx, line) in text.lines().enumerate() {
        if let Some(v) = header_value(line, "dim") {
            let d = v
                .parse::<usize>()
                .map_err(|_| parse_error(origin, idx + 1, format!("bad dim header {v:?}")))?;
            declared = Some(d);
        }
    }
    let rows = numeric_rows(text, origin)?;
    let Some((_, first)) = rows.first() else {
        return Err(parse_error(origin, 0, "no points"));
    };
    let dim = declared.unwrap_or(first.len());
    let mut coords = Vec::with_capacity(rows.len() * dim);
    for (line, row) in rows {
        if row.len() != dim {
            return Err(parse_error(origin, line, format!("expected {dim} fields, found {}", row.len())));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(parse_error(origin, line, "non-finite coordinate"));
        }
        coords.extend(row);
    }
    PointSet::new(dim, coords)
}

pub fn read_point_set(path: &Path) -> Result<PointSet<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_point_set(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightLayout {
    Dense,
    Sparse,
}

/// Parses a weight file for sets of sizes `n_u` and `n_v`.
///
/// Without a header, a file with exactly `n_u` rows of `n_v` fields is dense;
/// otherwise every row must be an `i k m` triplet.
pub fn parse_weights(text: &str, n_u: usize, n_v: usize, origin: &str) -> Result<PairTable<f64>> {
    let mut forced = None;
    for (idx, line) in text.lines().enumerate() {
        if let Some(v) = header_value(line, "format") {
            forced = Some(match v {
                "dense" => WeightLayout::Dense,
                "sparse" => WeightLayout::Sparse,
                other => return Err(parse_error(origin, idx + 1, format!("unknown weight format {other:?}"))),
            });
        }
    }
    let rows = numeric_rows(text, origin)?;
    let dense_shape = rows.len() == n_u && rows.iter().all(|(_, r)| r.len() == n_v);
    let layout = forced.unwrap_or(if dense_shape { WeightLayout::Dense } else { WeightLayout::Sparse });

    let mut triplets = Vec::new();
    match layout {
        WeightLayout::Dense => {
            if !dense_shape {
                return Err(parse_error(origin, 0, format!("dense weights must be {n_u} rows of {n_v} values")));
            }
            for (i, (_, row)) in rows.iter().enumerate() {
                for (k, &m) in row.iter().enumerate() {
                    if m != 0.0 {
                        triplets.push((i, k, m));
                    }
                }
            }
        }
        WeightLayout::Sparse => {
            for (line, row) in &rows {
                let [i, k, m] = row[..] else {
                    return Err(parse_error(
                        origin,
                        *line,
                        format!("expected `i k m` triplet or a {n_u}x{n_v} dense matrix"),
                    ));
                };
                let index = |x: f64| -> Result<usize> {
                    if x >= 0.0 && x.fract() == 0.0 && x < usize::MAX as f64 {
                        Ok(x as usize)
                    } else {
                        Err(parse_error(origin, *line, format!("bad index {x}")))
                    }
                };
                triplets.push((index(i)?, index(k)?, m));
            }
        }
    }
    let table = PairTable::from_triplets(triplets)?;
    table.check_indices(n_u, n_v)?;
    Ok(table)
}

pub fn read_weights(path: &Path, n_u: usize, n_v: usize) -> Result<PairTable<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_weights(&text, n_u, n_v, &path.display().to_string())
}

/// Shortest round-trip decimal text with a `# dim=N` header.
pub fn format_point_set(set: &PointSet<f64>) -> String {
    let mut out = format!("# dim={}\n", set.dim());
    for p in set.points() {
        let fields: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "{}", fields.join(" "));
    }
    out
}

pub fn format_weights(table: &PairTable<f64>) -> String {
    let mut out = String::from("# format=sparse\n");
    for e in table.entries() {
        let _ = writeln!(out, "{} {} {:?}", e.i, e.k, e.weight);
    }
    out
}

/// Writes via a sibling temp file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_separators_and_header() {
        let text = "# dim=3\n1, 2, 3\n\n4 5 6  # trailing\n7,8 ,9\n";
        let set = parse_point_set(text, "mem").unwrap();
        assert_eq!(set.dim(), 3);
        assert_eq!(set.len(), 3);
        assert_eq!(set.point(2), &[7.0, 8.0, 9.0]);
    }

    #[test]
    fn point_set_errors_carry_line_numbers() {
        let err = parse_point_set("1 2\n3 4 5\n", "pts.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_point_set("# dim=3\n1 2\n", "pts.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_point_set("1 x\n", "pts.txt").unwrap_err();
        assert!(err.to_string().contains("not a number"));
        assert!(parse_point_set("# nothing\n", "pts.txt").is_err());
    }

    #[test]
    fn weights_dense_and_sparse() {
        let dense = parse_weights("1 0 0\n0 2 0\n", 2, 3, "w").unwrap();
        assert_eq!(dense.pairs(), vec![(0, 0), (1, 1)]);
        let sparse = parse_weights("0 2 0.5\n1 0 1.5\n1 1 1\n", 2, 3, "w").unwrap();
        assert_eq!(sparse.pairs(), vec![(0, 2), (1, 0), (1, 1)]);
        assert_eq!(sparse.entries()[1].weight, 1.5);
    }

    #[test]
    fn weight_layout_header_breaks_ties() {
        // 2 x 3 shape with integer-looking entries: dense unless told otherwise
        let text = "0 1 1\n1 0 1\n";
        assert_eq!(parse_weights(text, 2, 3, "w").unwrap().len(), 4);
        let sparse = parse_weights(&format!("# format=sparse\n{text}"), 2, 3, "w").unwrap();
        assert_eq!(sparse.pairs(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn weight_errors() {
        assert!(parse_weights("0 5 1.0\n", 2, 3, "w").is_err());
        assert!(parse_weights("0 1.5 1.0\n", 2, 3, "w").is_err());
        assert!(parse_weights("0 1 -1.0\n", 2, 3, "w").is_err());
        assert!(parse_weights("0 1\n", 2, 3, "w").is_err());
        assert!(parse_weights("# format=dense\n0 1 1\n", 2, 3, "w").is_err());
    }

    #[test]
    fn formatted_point_set_round_trips() {
        let set = PointSet::new(2, vec![0.1, 1.0 / 3.0, -2.5e-17, 12345.678]).unwrap();
        let back = parse_point_set(&format_point_set(&set), "mem").unwrap();
        assert_eq!(back, set);
    }
}
