mod common;

use common::{brute_e, brute_inner, gaussian, random_mesh, rel_err};
use morpho_core::currents::{current_of, currents_inner, data_term_e, grad_data_term, CurrentsParams};
use morpho_core::lddmm::cauchy_kernel;
use morpho_core::{CurrentsKernel, SurfaceMesh, Vec3};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn kernel(cauchy: bool, sigma_w: f64) -> CurrentsParams {
    CurrentsParams {
        sigma_w,
        kernel: if cauchy {
            CurrentsKernel::Cauchy
        } else {
            CurrentsKernel::Gaussian
        },
    }
}

fn mesh_from_seed(seed: u64, max_faces: usize) -> SurfaceMesh {
    random_mesh(&mut StdRng::seed_from_u64(seed), max_faces)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_inner_product_is_nonnegative(seed in any::<u64>(), sigma in 0.05f64..2.0, cauchy in any::<bool>()) {
        let m = mesh_from_seed(seed, 30);
        let c = current_of(&m).unwrap();
        let aa = currents_inner(&c, &c, &kernel(cauchy, sigma));
        // zero for surfaces whose normals cancel, so only roundoff may go below
        prop_assert!(aa >= -1e-14 * c.total_area() * c.total_area(), "⟨A,A⟩ = {aa:e}");
    }

    #[test]
    fn inner_product_is_symmetric(seed in any::<u64>(), sigma in 0.05f64..2.0, cauchy in any::<bool>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (a, b) = (random_mesh(&mut rng, 20), random_mesh(&mut rng, 20));
        let (ca, cb) = (current_of(&a).unwrap(), current_of(&b).unwrap());
        let p = kernel(cauchy, sigma);
        let (ab, ba) = (currents_inner(&ca, &cb, &p), currents_inner(&cb, &ca, &p));
        // |⟨A,B⟩| is bounded by the product of total areas
        prop_assert!((ab - ba).abs() <= 1e-13 * ca.total_area() * cb.total_area());
    }

    #[test]
    fn face_order_does_not_matter(seed in any::<u64>(), sigma in 0.1f64..1.5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (a, b) = (random_mesh(&mut rng, 25), random_mesh(&mut rng, 25));
        let mut faces = a.faces().to_vec();
        // Fisher-Yates with the test's own generator
        for i in (1..faces.len()).rev() {
            faces.swap(i, rng.random_range(0..=i));
        }
        let shuffled = SurfaceMesh::new(a.vertices().to_vec(), faces).unwrap();
        let p = CurrentsParams::gaussian(sigma);
        let cb = current_of(&b).unwrap();
        let e1 = data_term_e(&a, &cb, &p).unwrap();
        let e2 = data_term_e(&shuffled, &cb, &p).unwrap();
        prop_assert!(rel_err(e1, e2, 1e-12) < 1e-12);
    }

    #[test]
    fn rigid_translation_preserves_data_term(
        seed in any::<u64>(),
        t in prop::array::uniform3(-5.0f64..5.0),
        cauchy in any::<bool>(),
    ) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (a, b) = (random_mesh(&mut rng, 20), random_mesh(&mut rng, 20));
        let shift = Vec3::new(t[0], t[1], t[2]);
        let p = kernel(cauchy, 0.4);
        let e1 = data_term_e(&a, &current_of(&b).unwrap(), &p).unwrap();
        let e2 = data_term_e(&a.translated(&shift), &current_of(&b.translated(&shift)).unwrap(), &p).unwrap();
        prop_assert!(rel_err(e1, e2, 1e-9) < 1e-9);
    }

    #[test]
    fn data_term_matches_double_sum(seed in any::<u64>(), sigma in 0.1f64..1.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (a, b) = (random_mesh(&mut rng, 15), random_mesh(&mut rng, 15));
        let e = data_term_e(&a, &current_of(&b).unwrap(), &CurrentsParams::gaussian(sigma)).unwrap();
        let expect = brute_e(&a, &b, sigma, gaussian);
        let scale = brute_inner(&a, &a, sigma, gaussian) + brute_inner(&b, &b, sigma, gaussian);
        prop_assert!((e - expect).abs() <= 1e-12 * scale);
    }

    #[test]
    fn data_term_vanishes_on_itself(seed in any::<u64>(), cauchy in any::<bool>()) {
        let m = mesh_from_seed(seed, 30);
        let p = kernel(cauchy, 0.3);
        let c = current_of(&m).unwrap();
        let e = data_term_e(&m, &c, &p).unwrap();
        prop_assert!(e.abs() <= 1e-12 * c.total_area() * c.total_area());
    }

    #[test]
    fn cauchy_gram_matrix_is_positive_definite(seed in any::<u64>(), n in 10usize..40, sigma in 0.05f64..3.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let pts: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect();
        let gram = DMatrix::from_fn(n, n, |i, j| cauchy_kernel(&pts[i], &pts[j], sigma));
        let min = SymmetricEigen::new(gram).eigenvalues.min();
        prop_assert!(min > 0.0, "min eigenvalue {min}");
    }
}

#[test]
fn data_term_gradient_matches_finite_differences() {
    let mut rng = StdRng::seed_from_u64(11);
    for case in 0..20 {
        let a = random_mesh(&mut rng, 12);
        let b = random_mesh(&mut rng, 12);
        let p = kernel(case % 2 == 1, rng.random_range(0.2..0.8));
        let tc = current_of(&b).unwrap();
        let g = grad_data_term(&a, &tc, &p).unwrap();
        let h = 1e-6 * a.bbox_diagonal();
        let gmax = g.iter().map(|v| v.amax()).fold(0.0, f64::max);
        // roundoff in the difference quotient scales with E / h
        let area = a.total_area() + b.total_area();
        let floor = (1e-3 * gmax).max(area * area / a.bbox_diagonal());
        for v in 0..a.vertex_count() {
            for c in 0..3 {
                let e_at = |d: f64| {
                    let mut verts = a.vertices().to_vec();
                    verts[v][c] += d;
                    data_term_e(&a.with_vertices(verts), &tc, &p).unwrap()
                };
                let fd = (e_at(h) - e_at(-h)) / (2.0 * h);
                // components far below the largest one are compared absolutely
                let err = rel_err(g[v][c], fd, floor);
                assert!(err < 1e-5, "case {case}, vertex {v}, axis {c}: analytic {} vs fd {fd}", g[v][c]);
            }
        }
    }
}

#[test]
fn unused_vertices_get_zero_gradient() {
    let verts = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(5.0, 5.0, 5.0),
    ];
    let a = SurfaceMesh::new(verts, vec![[0, 1, 2]]).unwrap();
    let b = a.translated(&Vec3::new(0.1, 0.0, 0.2));
    let g = grad_data_term(&a, &current_of(&b).unwrap(), &CurrentsParams::gaussian(0.5)).unwrap();
    assert_eq!(g[3], Vec3::zeros());
    assert!(g[0].norm() > 0.0);
}

#[test]
fn bad_kernel_width_is_rejected() {
    let a = mesh_from_seed(1, 5);
    let c = current_of(&a).unwrap();
    for sigma in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(data_term_e(&a, &c, &CurrentsParams::gaussian(sigma)).is_err(), "sigma {sigma}");
    }
}
