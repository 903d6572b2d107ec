//! Line-oriented point-set files.
//!
//! ```text
//! dispgrid v1 d=2 k=2 n=3 repr=grid
//! # free-form metadata lines start with '#'
//! 1 3
//! 2 2
//! 3 1
//! ```
//!
//! Grid files list integer numerators over `2^k`; real files list decimal
//! literals in `[0, 1]` and carry `k=0`. Blank lines and `#` lines are ignored.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridParams, GridPointSet, PointSet, RealPointSet};

pub const FORMAT_TAG: &str = "dispgrid";
pub const FORMAT_VERSION: &str = "v1";

pub fn write_point_set_to<W: Write>(
    mut w: W,
    points: &PointSet,
    metadata: &[String],
) -> Result<()> {
    let k = match points {
        PointSet::Grid(g) => g.params().k(),
        PointSet::Real(_) => 0,
    };
    writeln!(
        w,
        "{FORMAT_TAG} {FORMAT_VERSION} d={} k={k} n={} repr={}",
        points.dim(),
        points.len(),
        points.repr_name()
    )?;
    for line in metadata {
        writeln!(w, "# {line}")?;
    }
    match points {
        PointSet::Grid(g) => {
            for p in g.iter() {
                write_row(&mut w, p)?;
            }
        }
        PointSet::Real(r) => {
            for p in r.iter() {
                write_row(&mut w, p)?;
            }
        }
    }
    Ok(())
}

fn write_row<W: Write, T: std::fmt::Display>(w: &mut W, row: &[T]) -> Result<()> {
    for (i, x) in row.iter().enumerate() {
        if i > 0 {
            write!(w, " ")?;
        }
        write!(w, "{x}")?;
    }
    writeln!(w)?;
    Ok(())
}

pub fn write_point_set(points: &PointSet, path: &Path, metadata: &[String]) -> Result<()> {
    let mut buf = Vec::new();
    write_point_set_to(&mut buf, points, metadata)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_point_set(path: &Path) -> Result<PointSet> {
    read_point_set_from(fs::File::open(path)?)
}

struct Header {
    d: usize,
    k: u32,
    n: usize,
    grid: bool,
}

fn parse_header(line: &str, lineno: usize) -> Result<Header> {
    let err = |msg: String| Error::Parse { line: lineno, msg };
    let mut parts = line.split_whitespace();
    if parts.next() != Some(FORMAT_TAG) {
        return Err(err(format!("expected header starting with '{FORMAT_TAG}'")));
    }
    if parts.next() != Some(FORMAT_VERSION) {
        return Err(err(format!(
            "unsupported format version, expected {FORMAT_VERSION}"
        )));
    }
    let (mut d, mut k, mut n, mut repr) = (None, None, None, None);
    for field in parts {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(format!("malformed header field '{field}'")))?;
        let number = || {
            value
                .parse::<u64>()
                .map_err(|_| err(format!("header field {key} is not a number: '{value}'")))
        };
        match key {
            "d" => d = Some(number()? as usize),
            "k" => k = Some(number()? as u32),
            "n" => n = Some(number()? as usize),
            "repr" => repr = Some(value.to_string()),
            _ => return Err(err(format!("unknown header field '{key}'"))),
        }
    }
    let missing = |name: &str| err(format!("header is missing {name}="));
    let grid = match repr.as_deref() {
        Some("grid") => true,
        Some("real") => false,
        Some(other) => return Err(err(format!("unknown repr '{other}'"))),
        None => return Err(missing("repr")),
    };
    Ok(Header {
        d: d.ok_or_else(|| missing("d"))?,
        k: k.ok_or_else(|| missing("k"))?,
        n: n.ok_or_else(|| missing("n"))?,
        grid,
    })
}

pub fn read_point_set_from<R: Read>(reader: R) -> Result<PointSet> {
    let reader = BufReader::new(reader);
    let mut header: Option<Header> = None;
    let mut set: Option<PointSet> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some(h) = &header else {
            let h = parse_header(trimmed, lineno)?;
            let err = |e: Error| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            };
            set = Some(if h.grid {
                PointSet::Grid(
                    GridPointSet::empty(GridParams::new(h.k).map_err(err)?, h.d).map_err(err)?,
                )
            } else {
                PointSet::Real(RealPointSet::empty(h.d).map_err(err)?)
            });
            header = Some(h);
            continue;
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != h.d {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {} coordinates, found {}", h.d, fields.len()),
            });
        }
        let wrap = |e: Error| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        };
        match set.as_mut().expect("set exists once header is read") {
            PointSet::Grid(g) => {
                let row = fields
                    .iter()
                    .map(|f| {
                        f.parse::<u64>().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("'{f}' is not an integer numerator"),
                        })
                    })
                    .collect::<Result<Vec<u64>>>()?;
                g.push(&row).map_err(wrap)?;
            }
            PointSet::Real(r) => {
                let row = fields
                    .iter()
                    .map(|f| {
                        f.parse::<f64>().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("'{f}' is not a decimal number"),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                r.push(&row).map_err(wrap)?;
            }
        }
    }
    let (Some(h), Some(set)) = (header, set) else {
        return Err(Error::Parse {
            line: 0,
            msg: "missing header line".into(),
        });
    };
    if set.len() != h.n {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "header declares n={} but file has {} points",
                h.n,
                set.len()
            ),
        });
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<PointSet> {
        read_point_set_from(s.as_bytes())
    }

    #[test]
    fn writes_expected_text() {
        let g = GridParams::new(2).unwrap();
        let ps: PointSet = GridPointSet::from_points(g, 2, [[1u64, 3], [2, 2]])
            .unwrap()
            .into();
        let mut buf = Vec::new();
        write_point_set_to(&mut buf, &ps, &["seed=1".into()]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "dispgrid v1 d=2 k=2 n=2 repr=grid\n# seed=1\n1 3\n2 2\n"
        );
    }

    #[test]
    fn rejects_out_of_range_numerator() {
        let e = parse("dispgrid v1 d=1 k=2 n=1 repr=grid\n4\n").unwrap_err();
        match e {
            Error::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("1..=3"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_real_outside_unit_interval() {
        let e = parse("dispgrid v1 d=1 k=0 n=1 repr=real\n1.2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn rejects_bad_rows_and_headers() {
        assert!(matches!(
            parse("dispgrid v1 d=2 k=2 n=1 repr=grid\n1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("dispgrid v1 d=1 k=2 n=2 repr=grid\n1\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse("hello\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
        assert!(matches!(
            parse("dispgrid v1 d=1 k=2 n=1 repr=grid\nx\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn real_values_round_trip() {
        let ps: PointSet = RealPointSet::from_points(2, [[0.1, 0.7], [1.0 / 3.0, 0.0]])
            .unwrap()
            .into();
        let mut buf = Vec::new();
        write_point_set_to(&mut buf, &ps, &[]).unwrap();
        assert_eq!(read_point_set_from(&buf[..]).unwrap(), ps);
    }
}
