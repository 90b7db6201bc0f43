//! Triangulated surface meshes.
//!
//! A [`SurfaceMesh`] is a list of vertices (meters) and counterclockwise
//! triangles, so that `(v1 - v0) x (v2 - v0)` points outward. Meshes built
//! through [`SurfaceMesh::new`] or loaded from disk satisfy the structural
//! invariants checked by [`validate`]; [`SurfaceMesh::from_raw`] skips those
//! checks and exists for diagnostics and tests.

mod align;
mod io;
mod validate;

pub use align::{area_centroid, translate_align};
pub use io::{load_mesh, parse_off, parse_ply, save_mesh, write_off, write_ply, MeshFormat};
pub use validate::{validate, Issue, IssueCode, ValidationReport};

use crate::geom::{Aabb, Vec3};
use std::path::PathBuf;
use thiserror::Error;

/// Faces with area below this (m²) are degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid mesh: {code} at index {index}: {message}")]
    Invalid {
        code: IssueCode,
        index: usize,
        message: String,
    },
    #[error("mesh has no faces")]
    Empty,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    name: Option<String>,
}

impl SurfaceMesh {
    /// Builds a mesh and checks the structural invariants, reporting the
    /// first offending element.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mesh = Self::from_raw(vertices, faces);
        let report = validate(&mesh);
        if let Some(first) = report.errors.first() {
            return Err(MeshError::Invalid {
                code: first.code,
                index: first.index,
                message: first.message.clone(),
            });
        }
        Ok(mesh)
    }

    /// Builds a mesh without any checks.
    pub fn from_raw(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        Self {
            vertices,
            faces,
            name: None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Same connectivity and name, new vertex positions.
    ///
    /// # Panics
    /// If `vertices` does not have the same length as the current vertex list.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Self {
        assert_eq!(
            vertices.len(),
            self.vertices.len(),
            "vertex count must be preserved"
        );
        Self {
            vertices,
            faces: self.faces.clone(),
            name: self.name.clone(),
        }
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        self.with_vertices(self.vertices.iter().map(|v| v + t).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.with_vertices(self.vertices.iter().map(|v| v * s).collect())
    }

    /// Corner positions of face `m`.
    pub fn triangle(&self, m: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[m];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Half the cross product of the two edges leaving the first corner.
    pub fn face_normal(&self, m: usize) -> Vec3 {
        let [a, b, c] = self.triangle(m);
        0.5 * (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, m: usize) -> f64 {
        self.face_normal(m).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|m| self.face_area(m)).sum()
    }

    pub fn bbox(&self) -> Option<Aabb> {
        Aabb::of_points(self.vertices.iter())
    }

    /// Bounding-box diagonal, zero for an empty mesh.
    pub fn bbox_diagonal(&self) -> f64 {
        self.bbox().map_or(0.0, |b| b.diagonal())
    }

    /// Disjoint union: the vertices and faces of `other` are appended with
    /// their indices shifted.
    pub fn concat(&self, other: &SurfaceMesh) -> Self {
        let offset = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut faces = self.faces.clone();
        faces.extend(
            other
                .faces
                .iter()
                .map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]),
        );
        Self {
            vertices,
            faces,
            name: self.name.clone(),
        }
    }

    /// Faces whose three corners lie inside `region`, as a standalone mesh
    /// with compacted vertex indices. Returns the kept original vertex
    /// indices alongside.
    pub fn submesh_in(&self, region: &Aabb) -> (Self, Vec<usize>) {
        self.submesh_where(|m| self.faces[m].iter().all(|&i| region.contains(&self.vertices[i])))
    }

    pub(crate) fn submesh_where<F: Fn(usize) -> bool>(&self, keep: F) -> (Self, Vec<usize>) {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut kept = Vec::new();
        let mut faces = Vec::new();
        for (m, f) in self.faces.iter().enumerate() {
            if !keep(m) {
                continue;
            }
            let mut g = [0usize; 3];
            for (k, &i) in f.iter().enumerate() {
                if remap[i] == usize::MAX {
                    remap[i] = kept.len();
                    kept.push(i);
                }
                g[k] = remap[i];
            }
            faces.push(g);
        }
        let vertices = kept.iter().map(|&i| self.vertices[i]).collect();
        (
            Self {
                vertices,
                faces,
                name: self.name.clone(),
            },
            kept,
        )
    }

    /// Reverses the orientation of face `m`.
    pub fn flip_face(&mut self, m: usize) {
        self.faces[m].swap(1, 2);
    }

    /// Largest vertex displacement between two meshes with the same vertex
    /// count.
    pub fn max_vertex_distance(&self, other: &SurfaceMesh) -> f64 {
        assert_eq!(self.vertices.len(), other.vertices.len());
        self.vertices
            .iter()
            .zip(&other.vertices)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_triangle() -> SurfaceMesh {
        SurfaceMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn face_normal_follows_right_hand_rule() {
        let m = unit_triangle();
        assert_eq!(m.face_normal(0), Vec3::new(0.0, 0.0, 0.5));
        assert_eq!(m.face_area(0), 0.5);
    }

    #[test]
    fn new_rejects_out_of_range_index() {
        let err = SurfaceMesh::new(
            vec![Vec3::zeros(), Vec3::x(), Vec3::y()],
            vec![[0, 1, 5]],
        )
        .unwrap_err();
        match err {
            MeshError::Invalid { code, index, .. } => {
                assert_eq!(code, IssueCode::IndexOutOfRange);
                assert_eq!(index, 0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn concat_shifts_indices() {
        let a = unit_triangle();
        let b = a.translated(&Vec3::new(0.0, 0.0, 1.0));
        let c = a.concat(&b);
        assert_eq!(c.vertex_count(), 6);
        assert_eq!(c.faces()[1], [3, 4, 5]);
    }

    #[test]
    fn submesh_keeps_faces_inside_region() {
        let a = unit_triangle();
        let b = a.translated(&Vec3::new(0.0, 0.0, 5.0));
        let c = a.concat(&b);
        let region = Aabb::new([-0.1, -0.1, 4.0], [1.1, 1.1, 6.0]);
        let (sub, kept) = c.submesh_in(&region);
        assert_eq!(sub.face_count(), 1);
        assert_eq!(kept, vec![3, 4, 5]);
        assert_eq!(sub.vertices(), b.vertices());
    }
}
