//! Text grid format for HRTF sets.
//!
//! ```text
//! HRTFGRID 1
//! radius 0.0875
//! ear left
//! frequencies 200 400 800
//! # az el then one re im pair per frequency
//! 0 0 1.02 -0.11 0.97 -0.2 0.9 -0.35
//! 90 0 ...
//! ```
//!
//! The four header lines come first, in this order. Blank lines and lines
//! starting with `#` are ignored anywhere. Each data row holds one direction.
//! Numbers are written in shortest round-trip form, so a set survives a
//! write/parse cycle unchanged.

use super::{Direction, HrtfError, HrtfSet};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::Path;

pub const GRID_MAGIC: &str = "HRTFGRID";
pub const GRID_VERSION: u32 = 1;

pub fn load_hrtf_set(path: &Path) -> Result<HrtfSet, HrtfError> {
    let text = std::fs::read_to_string(path).map_err(|source| HrtfError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_hrtf_set(&text)
}

pub fn save_hrtf_set(path: &Path, set: &HrtfSet) -> Result<(), HrtfError> {
    std::fs::write(path, write_hrtf_set(set)).map_err(|source| HrtfError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_num(tok: &str, line: usize, what: &str) -> Result<f64, HrtfError> {
    tok.parse::<f64>().map_err(|_| HrtfError::Parse {
        line,
        message: format!("bad {what} {tok:?}"),
    })
}

pub fn parse_hrtf_set(text: &str) -> Result<HrtfSet, HrtfError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut header = |key: &str| -> Result<(usize, Vec<&str>), HrtfError> {
        let (n, l) = lines.next().ok_or(HrtfError::Parse {
            line: 0,
            message: format!("missing {key:?} line"),
        })?;
        let mut toks = l.split_whitespace();
        if toks.next() != Some(key) {
            return Err(HrtfError::Parse {
                line: n,
                message: format!("expected {key:?}"),
            });
        }
        Ok((n, toks.collect()))
    };

    let (n, v) = header(GRID_MAGIC)?;
    if v != [GRID_VERSION.to_string().as_str()] {
        return Err(HrtfError::Parse {
            line: n,
            message: format!("unsupported version {:?}, expected {GRID_VERSION}", v.join(" ")),
        });
    }
    let (n, r) = header("radius")?;
    if r.len() != 1 {
        return Err(HrtfError::Parse {
            line: n,
            message: "radius takes one value".into(),
        });
    }
    let radius = parse_num(r[0], n, "radius")?;
    let (n, e) = header("ear")?;
    if e.len() != 1 {
        return Err(HrtfError::Parse {
            line: n,
            message: "ear takes one word".into(),
        });
    }
    let ear = e[0].to_string();
    let (n, f) = header("frequencies")?;
    let frequencies = f
        .iter()
        .map(|t| parse_num(t, n, "frequency"))
        .collect::<Result<Vec<_>, _>>()?;
    if frequencies.is_empty() {
        return Err(HrtfError::Parse {
            line: n,
            message: "no frequencies".into(),
        });
    }

    let nf = frequencies.len();
    let mut directions = Vec::new();
    let mut values = Vec::new();
    for (n, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 + 2 * nf {
            return Err(HrtfError::Parse {
                line: n,
                message: format!("expected {} fields (az, el, {nf} re/im pairs), found {}", 2 + 2 * nf, toks.len()),
            });
        }
        directions.push(Direction::new(
            parse_num(toks[0], n, "azimuth")?,
            parse_num(toks[1], n, "elevation")?,
        ));
        for pair in toks[2..].chunks(2) {
            values.push(Complex64::new(
                parse_num(pair[0], n, "real part")?,
                parse_num(pair[1], n, "imaginary part")?,
            ));
        }
    }
    HrtfSet::new(directions, frequencies, values, ear, radius)
}

pub fn write_hrtf_set(set: &HrtfSet) -> String {
    let mut out = format!("{GRID_MAGIC} {GRID_VERSION}\nradius {}\near {}\nfrequencies", set.radius(), set.ear());
    for f in set.frequencies() {
        write!(out, " {f}").unwrap();
    }
    out.push_str("\n# az el then one re im pair per frequency\n");
    for (d, dir) in set.directions().iter().enumerate() {
        write!(out, "{} {}", dir.az_deg, dir.el_deg).unwrap();
        for v in set.row(d) {
            write!(out, " {} {}", v.re, v.im).unwrap();
        }
        out.push('\n');
    }
    out
}
