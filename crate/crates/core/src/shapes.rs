//! Deterministic synthetic meshes.

use crate::geom::Vec3;
use crate::mesh::SurfaceMesh;
use crate::pipeline::SubjectAssets;
use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Sphere of the given radius centred at the origin, from `subdivisions`
/// rounds of 4-to-1 splitting of an icosahedron: `10·4^s + 2` vertices and
/// `20·4^s` outward-oriented faces.
pub fn icosphere(subdivisions: u32, radius: f64) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }

    let verts = verts.into_iter().map(|v| v * radius).collect();
    SurfaceMesh::new(verts, faces)
        .expect("icosphere construction is valid")
        .with_name(format!("icosphere{subdivisions}"))
}

/// Ellipsoid with the given semi-axes, rotated by `rotation` and centred at
/// `center`.
pub fn ellipsoid(
    subdivisions: u32,
    semi_axes: [f64; 3],
    rotation: &Rotation3<f64>,
    center: Vec3,
) -> SurfaceMesh {
    let unit = icosphere(subdivisions, 1.0);
    let verts = unit
        .vertices()
        .iter()
        .map(|v| {
            let scaled = Vec3::new(v.x * semi_axes[0], v.y * semi_axes[1], v.z * semi_axes[2]);
            rotation * scaled + center
        })
        .collect();
    unit.with_vertices(verts).with_name("ellipsoid")
}

/// Parameters of a synthetic "subject": a sphere standing in for the head and
/// torso, with an ellipsoidal bump on each side standing in for the ears.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSubjectSpec {
    pub label: String,
    pub body_radius: f64,
    pub body_subdivisions: u32,
    /// Ear semi-axes: (front-back, outward, up-down).
    pub ear_semi_axes: [f64; 3],
    pub ear_subdivisions: u32,
    /// Rotation of the left ear about its outward (+y) axis, degrees.
    pub left_ear_twist_deg: f64,
}

impl BumpSubjectSpec {
    /// Reference source subject used by the tests and the CLI.
    pub fn reference_source() -> Self {
        Self {
            label: "S1".into(),
            body_radius: 1.0,
            body_subdivisions: 2,
            ear_semi_axes: [0.1, 0.05, 0.16],
            ear_subdivisions: 2,
            left_ear_twist_deg: 0.0,
        }
    }

    /// Target paired with [`Self::reference_source`]: a larger body and a
    /// twisted left ear.
    pub fn reference_target() -> Self {
        Self {
            label: "S2".into(),
            body_radius: 1.1,
            left_ear_twist_deg: 35.0,
            ..Self::reference_source()
        }
    }

    fn ear(&self, side: f64, twist_deg: f64) -> SurfaceMesh {
        let outward = Vec3::new(0.0, side, 0.0);
        let center = outward * (self.body_radius + 0.5 * self.ear_semi_axes[1]);
        let rot = Rotation3::from_axis_angle(&Vec3::y_axis(), twist_deg.to_radians());
        ellipsoid(self.ear_subdivisions, self.ear_semi_axes, &rot, center)
    }

    pub fn build(&self) -> SubjectAssets {
        let body = icosphere(self.body_subdivisions, self.body_radius);
        let left = self.ear(1.0, self.left_ear_twist_deg);
        let right = self.ear(-1.0, 0.0);
        let full = body.concat(&left).concat(&right);
        SubjectAssets {
            full: full.with_name(self.label.clone()),
            head_torso_no_ears: body.with_name(format!("HT{}", self.label)),
            left_ear: left.with_name(format!("LE{}", self.label)),
            label: self.label.clone(),
        }
    }

    /// Box enclosing the left ear with a small margin, in subject coordinates.
    pub fn left_ear_region(&self) -> crate::geom::Aabb {
        let ear = self.ear(1.0, self.left_ear_twist_deg);
        ear.bbox()
            .expect("ear mesh is nonempty")
            .expanded(1e-6 * self.body_radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate;

    #[test]
    fn icosphere_counts() {
        for (s, nv, nf) in [(0, 12, 20), (1, 42, 80), (2, 162, 320), (3, 642, 1280)] {
            let m = icosphere(s, 1.0);
            assert_eq!(m.vertex_count(), nv);
            assert_eq!(m.face_count(), nf);
        }
    }

    #[test]
    fn icosphere_faces_point_outward() {
        let m = icosphere(2, 2.0);
        for f in 0..m.face_count() {
            let [a, b, c] = m.triangle(f);
            let center = (a + b + c) / 3.0;
            assert!(m.face_normal(f).dot(&center) > 0.0);
        }
        for v in m.vertices() {
            assert!((v.norm() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subject_parts_are_valid() {
        let s = BumpSubjectSpec::reference_target().build();
        for m in [&s.full, &s.head_torso_no_ears, &s.left_ear] {
            assert!(validate(m).is_usable);
        }
        assert_eq!(
            s.full.face_count(),
            s.head_torso_no_ears.face_count() + 2 * s.left_ear.face_count()
        );
        let region = BumpSubjectSpec::reference_target().left_ear_region();
        let (ear, _) = s.full.submesh_in(&region);
        assert_eq!(ear.face_count(), s.left_ear.face_count());
    }
}
