use super::{SurfaceMesh, DEGENERATE_AREA};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    // errors
    NoFaces,
    NonFiniteCoordinate,
    IndexOutOfRange,
    RepeatedVertex,
    DegenerateFace,
    // warnings
    Orientation,
    NonManifoldEdge,
    UnreferencedVertex,
}

impl IssueCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            IssueCode::NoFaces => "NO_FACES",
            IssueCode::NonFiniteCoordinate => "NON_FINITE_COORDINATE",
            IssueCode::IndexOutOfRange => "INDEX_OUT_OF_RANGE",
            IssueCode::RepeatedVertex => "REPEATED_VERTEX",
            IssueCode::DegenerateFace => "DEGENERATE_FACE",
            IssueCode::Orientation => "ORIENTATION",
            IssueCode::NonManifoldEdge => "NON_MANIFOLD_EDGE",
            IssueCode::UnreferencedVertex => "UNREFERENCED_VERTEX",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One diagnostic. `index` is a face index, except for vertex-level codes
/// (`NON_FINITE_COORDINATE`, `UNREFERENCED_VERTEX`) where it is a vertex index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Issue {
    pub code: IssueCode,
    pub index: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
    pub is_usable: bool,
}

impl ValidationReport {
    fn error(&mut self, code: IssueCode, index: usize, message: String) {
        self.errors.push(Issue {
            code,
            index,
            message,
        });
    }

    fn warn(&mut self, code: IssueCode, index: usize, message: String) {
        self.warnings.push(Issue {
            code,
            index,
            message,
        });
    }

    pub fn has_warning(&self, code: IssueCode) -> bool {
        self.warnings.iter().any(|w| w.code == code)
    }

    pub fn has_error(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|w| w.code == code)
    }
}

/// Lists every violated structural invariant as an error, and orientation,
/// manifoldness and unreferenced-vertex problems as warnings.
pub fn validate(mesh: &SurfaceMesh) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = mesh.vertices.len();

    if mesh.faces.is_empty() {
        report.error(IssueCode::NoFaces, 0, "mesh has no faces".into());
    }

    let mut finite = vec![true; n];
    for (i, v) in mesh.vertices.iter().enumerate() {
        if !v.iter().all(|c| c.is_finite()) {
            finite[i] = false;
            report.error(
                IssueCode::NonFiniteCoordinate,
                i,
                format!("vertex {i} has a non-finite coordinate"),
            );
        }
    }

    let mut referenced = vec![false; n];
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut undirected: HashMap<(usize, usize), u32> = HashMap::new();

    for (m, f) in mesh.faces.iter().enumerate() {
        if let Some(&bad) = f.iter().find(|&&i| i >= n) {
            report.error(
                IssueCode::IndexOutOfRange,
                m,
                format!("face {m} references vertex {bad}, mesh has {n} vertices"),
            );
            continue;
        }
        for &i in f {
            referenced[i] = true;
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            report.error(
                IssueCode::RepeatedVertex,
                m,
                format!("face {m} repeats a vertex: {f:?}"),
            );
            continue;
        }
        if f.iter().all(|&i| finite[i]) {
            let area = mesh.face_area(m);
            if area.is_nan() || area < DEGENERATE_AREA {
                report.error(
                    IssueCode::DegenerateFace,
                    m,
                    format!("face {m} has area {area:e} m^2"),
                );
            }
        }
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if let Some(&other) = directed.get(&(a, b)) {
                report.warn(
                    IssueCode::Orientation,
                    m,
                    format!("edge ({a},{b}) traversed in the same direction by faces {other} and {m}"),
                );
            } else {
                directed.insert((a, b), m);
            }
            let count = undirected.entry((a.min(b), a.max(b))).or_insert(0);
            *count += 1;
            if *count == 3 {
                report.warn(
                    IssueCode::NonManifoldEdge,
                    m,
                    format!("edge ({a},{b}) is shared by more than two faces"),
                );
            }
        }
    }

    for (i, used) in referenced.iter().enumerate() {
        if !used {
            report.warn(
                IssueCode::UnreferencedVertex,
                i,
                format!("vertex {i} is not used by any face"),
            );
        }
    }

    report.is_usable = report.errors.is_empty();
    report
}
