//! Independent reference computations shared by the integration tests.
//!
//! Everything here works on plain `[f64; 3]` arrays with naive loops so that
//! it shares no code path with the library.

#![allow(dead_code)]

use morpho_core::{SurfaceMesh, Vec3};
use rand::rngs::StdRng;
use rand::Rng;

pub type P = [f64; 3];

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: P, b: P) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: P, b: P) -> P {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn arr(v: &Vec3) -> P {
    [v.x, v.y, v.z]
}

/// Face barycenters and half cross products.
pub fn brute_current(m: &SurfaceMesh) -> (Vec<P>, Vec<P>) {
    let mut centers = Vec::new();
    let mut normals = Vec::new();
    for f in m.faces() {
        let [a, b, c] = [arr(&m.vertices()[f[0]]), arr(&m.vertices()[f[1]]), arr(&m.vertices()[f[2]])];
        centers.push([
            (a[0] + b[0] + c[0]) / 3.0,
            (a[1] + b[1] + c[1]) / 3.0,
            (a[2] + b[2] + c[2]) / 3.0,
        ]);
        let n = cross(sub(b, a), sub(c, a));
        normals.push([0.5 * n[0], 0.5 * n[1], 0.5 * n[2]]);
    }
    (centers, normals)
}

pub fn gaussian(d2: f64, sigma: f64) -> f64 {
    (-d2 / (sigma * sigma)).exp()
}

pub fn cauchy(d2: f64, sigma: f64) -> f64 {
    1.0 / (1.0 + d2 / (sigma * sigma))
}

/// `Σ_p Σ_q k(c_p, c_q) n_p · n_q`
pub fn brute_inner(a: &SurfaceMesh, b: &SurfaceMesh, sigma: f64, k: fn(f64, f64) -> f64) -> f64 {
    let (ca, na) = brute_current(a);
    let (cb, nb) = brute_current(b);
    let mut s = 0.0;
    for p in 0..ca.len() {
        for q in 0..cb.len() {
            let d = sub(ca[p], cb[q]);
            s += k(dot(d, d), sigma) * dot(na[p], nb[q]);
        }
    }
    s
}

pub fn brute_e(a: &SurfaceMesh, b: &SurfaceMesh, sigma: f64, k: fn(f64, f64) -> f64) -> f64 {
    brute_inner(a, a, sigma, k) - 2.0 * brute_inner(a, b, sigma, k) + brute_inner(b, b, sigma, k)
}

/// Random triangle soup with `3..=12` vertices in the unit cube and
/// `1..=max_faces` non-degenerate faces.
pub fn random_mesh(rng: &mut StdRng, max_faces: usize) -> SurfaceMesh {
    loop {
        let nv = rng.random_range(3..=12);
        let verts: Vec<Vec3> = (0..nv)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let nf = rng.random_range(1..=max_faces);
        let faces: Vec<[usize; 3]> = (0..nf)
            .map(|_| loop {
                let f = [rng.random_range(0..nv), rng.random_range(0..nv), rng.random_range(0..nv)];
                if f[0] != f[1] && f[1] != f[2] && f[0] != f[2] {
                    break f;
                }
            })
            .collect();
        if let Ok(m) = SurfaceMesh::new(verts, faces) {
            if m.faces().iter().enumerate().all(|(i, _)| m.face_area(i) > 1e-4) {
                return m;
            }
        }
    }
}

/// Two triangles sharing an edge, randomly placed in a unit box.
pub fn random_quad(rng: &mut StdRng, offset: Vec3) -> SurfaceMesh {
    loop {
        let verts: Vec<Vec3> = (0..4)
            .map(|_| offset + Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        if let Ok(m) = SurfaceMesh::new(verts, vec![[0, 1, 2], [0, 2, 3]]) {
            if m.face_area(0) > 0.05 && m.face_area(1) > 0.05 {
                return m;
            }
        }
    }
}

/// Relative error `|a − b| / max(|b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}
