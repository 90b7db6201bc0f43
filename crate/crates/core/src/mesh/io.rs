//! OFF and ASCII-PLY reading and writing.
//!
//! Coordinates are written with 9 significant digits; reading the written
//! file back and writing it again is byte-identical.

use super::{MeshError, SurfaceMesh};
use crate::geom::Vec3;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Ply,
}

impl MeshFormat {
    /// Guesses the format from a `.off` / `.ply` extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "off" => Some(MeshFormat::Off),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<SurfaceMesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mesh = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::Ply => parse_ply(&text)?,
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(mesh.with_name(name))
}

pub fn save_mesh(mesh: &SurfaceMesh, path: &Path, format: MeshFormat) -> Result<(), MeshError> {
    let text = match format {
        MeshFormat::Off => write_off(mesh),
        MeshFormat::Ply => write_ply(mesh, &[]),
    };
    std::fs::write(path, text).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Formats `x` rounded to 9 significant digits, in the shortest decimal form
/// that reads back as the rounded value.
pub(crate) fn fmt_coord(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        "0".to_string()
    } else if rounded.abs() >= 1e-5 && rounded.abs() < 1e15 {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, MeshError> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("expected {what}, found '{tok}'")))
}

fn parse_vertex(toks: &[&str], line: usize) -> Result<Vec3, MeshError> {
    if toks.len() < 3 {
        return Err(parse_err(line, "vertex needs three coordinates"));
    }
    Ok(Vec3::new(
        parse_num(toks[0], line, "coordinate")?,
        parse_num(toks[1], line, "coordinate")?,
        parse_num(toks[2], line, "coordinate")?,
    ))
}

fn parse_face(toks: &[&str], line: usize) -> Result<[usize; 3], MeshError> {
    let k: usize = parse_num(toks.first().copied().unwrap_or(""), line, "face size")?;
    if k != 3 {
        return Err(parse_err(line, format!("only triangles are supported, found {k}-gon")));
    }
    if toks.len() < 4 {
        return Err(parse_err(line, "triangle needs three indices"));
    }
    Ok([
        parse_num(toks[1], line, "vertex index")?,
        parse_num(toks[2], line, "vertex index")?,
        parse_num(toks[3], line, "vertex index")?,
    ])
}

pub fn parse_off(text: &str) -> Result<SurfaceMesh, MeshError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut toks: Vec<&str> = header.split_whitespace().collect();
    if toks[0] != "OFF" {
        return Err(parse_err(hline, "missing OFF header"));
    }
    toks.remove(0);
    let (cline, counts) = if toks.is_empty() {
        let (l, s) = lines
            .next()
            .ok_or_else(|| parse_err(hline + 1, "missing counts line"))?;
        (l, s.split_whitespace().collect::<Vec<_>>())
    } else {
        (hline, toks)
    };
    if counts.len() < 2 {
        return Err(parse_err(cline, "counts line needs vertex and face counts"));
    }
    let nv: usize = parse_num(counts[0], cline, "vertex count")?;
    let nf: usize = parse_num(counts[1], cline, "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in vertex list"))?;
        vertices.push(parse_vertex(&s.split_whitespace().collect::<Vec<_>>(), l)?);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, s) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in face list"))?;
        faces.push(parse_face(&s.split_whitespace().collect::<Vec<_>>(), l)?);
    }
    SurfaceMesh::new(vertices, faces)
}

pub fn write_off(mesh: &SurfaceMesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    let _ = writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", fmt_coord(v.x), fmt_coord(v.y), fmt_coord(v.z));
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    /// Scalar property names, in order. List properties are recorded by name
    /// with `is_list` set.
    props: Vec<(String, bool)>,
}

pub fn parse_ply(text: &str) -> Result<SurfaceMesh, MeshError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(1, "missing 'ply' magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    loop {
        let (l, s) = lines
            .next()
            .ok_or_else(|| parse_err(0, "header not terminated by end_header"))?;
        let toks: Vec<&str> = s.split_whitespace().collect();
        match toks.first().copied() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                if toks.get(1) != Some(&"ascii") {
                    return Err(parse_err(l, "only ASCII PLY is supported"));
                }
                saw_format = true;
            }
            Some("element") => {
                if toks.len() != 3 {
                    return Err(parse_err(l, "malformed element line"));
                }
                elements.push(PlyElement {
                    name: toks[1].to_string(),
                    count: parse_num(toks[2], l, "element count")?,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(l, "property before any element"))?;
                let is_list = toks.get(1) == Some(&"list");
                let name = toks
                    .last()
                    .filter(|_| toks.len() >= if is_list { 5 } else { 3 })
                    .ok_or_else(|| parse_err(l, "malformed property line"))?;
                el.props.push((name.to_string(), is_list));
            }
            Some("end_header") => break,
            Some(other) => return Err(parse_err(l, format!("unknown header keyword '{other}'"))),
        }
    }
    if !saw_format {
        return Err(parse_err(0, "missing format line"));
    }

    let mut body = lines.filter(|(_, s)| !s.is_empty());
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut saw_vertex = false;
    let mut saw_face = false;
    for el in &elements {
        match el.name.as_str() {
            "vertex" => {
                saw_vertex = true;
                let pos = |n: &str| el.props.iter().position(|(p, list)| p == n && !list);
                let (ix, iy, iz) = match (pos("x"), pos("y"), pos("z")) {
                    (Some(x), Some(y), Some(z)) => (x, y, z),
                    _ => return Err(parse_err(0, "vertex element lacks x, y, z properties")),
                };
                if el.props.iter().any(|(_, list)| *list) {
                    return Err(parse_err(0, "list properties on vertices are not supported"));
                }
                for _ in 0..el.count {
                    let (l, s) = body
                        .next()
                        .ok_or_else(|| parse_err(0, "unexpected end of file in vertex list"))?;
                    let toks: Vec<&str> = s.split_whitespace().collect();
                    if toks.len() != el.props.len() {
                        return Err(parse_err(l, "vertex row has wrong number of values"));
                    }
                    vertices.push(Vec3::new(
                        parse_num(toks[ix], l, "coordinate")?,
                        parse_num(toks[iy], l, "coordinate")?,
                        parse_num(toks[iz], l, "coordinate")?,
                    ));
                }
            }
            "face" => {
                saw_face = true;
                if el.props.len() != 1
                    || !el.props[0].1
                    || !matches!(el.props[0].0.as_str(), "vertex_indices" | "vertex_index")
                {
                    return Err(parse_err(
                        0,
                        "face element must have a single vertex_indices list property",
                    ));
                }
                for _ in 0..el.count {
                    let (l, s) = body
                        .next()
                        .ok_or_else(|| parse_err(0, "unexpected end of file in face list"))?;
                    let toks: Vec<&str> = s.split_whitespace().collect();
                    if toks.len() != 4 {
                        return Err(parse_err(l, "face row must be '3 i j k'"));
                    }
                    faces.push(parse_face(&toks, l)?);
                }
            }
            _ => {
                for _ in 0..el.count {
                    body.next()
                        .ok_or_else(|| parse_err(0, format!("unexpected end of file in {}", el.name)))?;
                }
            }
        }
    }
    if !saw_vertex || !saw_face {
        return Err(parse_err(0, "PLY needs vertex and face elements"));
    }
    SurfaceMesh::new(vertices, faces)
}

/// ASCII PLY. Each `(name, values)` in `vertex_scalars` adds a per-vertex
/// float property after x, y, z.
pub fn write_ply(mesh: &SurfaceMesh, vertex_scalars: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    if let Some(name) = mesh.name() {
        if !name.is_empty() && !name.contains('\n') {
            let _ = writeln!(out, "comment name {name}");
        }
    }
    let _ = writeln!(out, "element vertex {}", mesh.vertex_count());
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    for (name, values) in vertex_scalars {
        assert_eq!(values.len(), mesh.vertex_count());
        let _ = writeln!(out, "property double {name}");
    }
    let _ = writeln!(out, "element face {}", mesh.face_count());
    out.push_str("property list uchar int vertex_indices\nend_header\n");
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = write!(out, "{} {} {}", fmt_coord(v.x), fmt_coord(v.y), fmt_coord(v.z));
        for (_, values) in vertex_scalars {
            let _ = write!(out, " {}", fmt_coord(values[i]));
        }
        out.push('\n');
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::IssueCode;
    use crate::shapes::icosphere;

    const TRI_OFF: &str = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";

    #[test]
    fn single_triangle_off() {
        let m = parse_off(TRI_OFF).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.face_count(), 1);
        assert_eq!(write_off(&m), TRI_OFF);
    }

    #[test]
    fn off_header_with_inline_counts_and_comments() {
        let m = parse_off("# made by hand\nOFF 3 1 0\n0 0 0\n1 0 0 # x\n0 1 0\n\n3 0 1 2\n").unwrap();
        assert_eq!(m.face_count(), 1);
    }

    #[test]
    fn off_out_of_range_index() {
        let err = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n").unwrap_err();
        assert!(matches!(
            err,
            MeshError::Invalid {
                code: IssueCode::IndexOutOfRange,
                index: 0,
                ..
            }
        ));
    }

    #[test]
    fn off_malformed() {
        assert!(matches!(parse_off(""), Err(MeshError::Parse { .. })));
        assert!(matches!(parse_off("PLY\n"), Err(MeshError::Parse { .. })));
        assert!(matches!(
            parse_off("OFF\n3 1 0\n0 0 0\n1 0\n0 1 0\n3 0 1 2\n"),
            Err(MeshError::Parse { line: 4, .. })
        ));
        assert!(matches!(
            parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n4 0 1 3 2\n"),
            Err(MeshError::Parse { .. })
        ));
        assert!(matches!(
            parse_off("OFF\n3 2 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"),
            Err(MeshError::Parse { .. })
        ));
    }

    #[test]
    fn ply_round_trip_and_extra_properties() {
        let text = "ply\nformat ascii 1.0\ncomment x\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0 1\n1 0 0 2\n0 1 0 3\n3 0 1 2\n";
        let m = parse_ply(text).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.face_normal(0), Vec3::new(0.0, 0.0, 0.5));
        let again = parse_ply(&write_ply(&m, &[])).unwrap();
        assert_eq!(again.vertices(), m.vertices());
        assert_eq!(again.faces(), m.faces());
    }

    #[test]
    fn ply_rejects_binary() {
        let text = "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse_ply(text), Err(MeshError::Parse { .. })));
    }

    #[test]
    fn icosphere_round_trip_is_a_fixed_point() {
        let m = icosphere(3, 1.0);
        let once = parse_off(&write_off(&m)).unwrap();
        assert!(once.max_vertex_distance(&m) < 1e-8);
        let twice = parse_off(&write_off(&once)).unwrap();
        assert_eq!(once.max_vertex_distance(&twice), 0.0);
        assert_eq!(write_off(&once), write_off(&twice));

        let p1 = parse_ply(&write_ply(&m, &[])).unwrap();
        let p2 = parse_ply(&write_ply(&p1, &[])).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.vertices(), once.vertices());
    }

    #[test]
    fn fmt_coord_keeps_nine_digits() {
        assert_eq!(fmt_coord(1.0), "1");
        assert_eq!(fmt_coord(0.1234567891234), "0.123456789");
        assert_eq!(fmt_coord(-2.5e-9), "-2.5e-9");
        assert_eq!(fmt_coord(0.0), "0");
        assert_eq!(fmt_coord(-0.0), "0");
    }

    #[test]
    fn save_to_unwritable_path() {
        let m = parse_off(TRI_OFF).unwrap();
        let err = save_mesh(&m, Path::new("/nonexistent-dir/x/y.off"), MeshFormat::Off).unwrap_err();
        assert!(matches!(err, MeshError::Io { .. }));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MeshFormat::from_path(Path::new("a/b.OFF")), Some(MeshFormat::Off));
        assert_eq!(MeshFormat::from_path(Path::new("b.ply")), Some(MeshFormat::Ply));
        assert_eq!(MeshFormat::from_path(Path::new("b.stl")), None);
    }
}
