mod common;

use common::{cauchy, random_mesh, random_quad, rel_err};
use morpho_core::currents::{current_of, data_term_e, CurrentsParams};
use morpho_core::lddmm::{
    apply_flow, flow_snapshots, integrate_backward, match_surfaces, objective_j, testing, transport, velocity_at,
    MatchParams, MomentumField, Termination,
};
use morpho_core::shapes::{ellipsoid, icosphere};
use morpho_core::{SurfaceMesh, Vec3};
use nalgebra::Rotation3;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_vecs(rng: &mut StdRng, n: usize, scale: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            scale * Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .collect()
}

/// Plain RK4 over the stacked state `[controls; points]` with momenta frozen
/// per step, written against arrays of coordinates.
fn reference_transport(controls: &[Vec3], points: &[Vec3], momenta: &[Vec<Vec3>], sigma: f64) -> Vec<Vec3> {
    let nc = controls.len();
    let mut state: Vec<[f64; 3]> = controls.iter().chain(points).map(|v| [v.x, v.y, v.z]).collect();
    let h = 1.0 / momenta.len() as f64;
    let vel = |s: &[[f64; 3]], alpha: &[Vec3]| -> Vec<[f64; 3]> {
        s.iter()
            .map(|x| {
                let mut v = [0.0; 3];
                for (c, a) in s[..nc].iter().zip(alpha) {
                    let d2 = (0..3).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>();
                    let k = cauchy(d2, sigma);
                    for i in 0..3 {
                        v[i] += k * a[i];
                    }
                }
                v
            })
            .collect()
    };
    let shift = |s: &[[f64; 3]], k: &[[f64; 3]], a: f64| -> Vec<[f64; 3]> {
        s.iter().zip(k).map(|(x, k)| [x[0] + a * k[0], x[1] + a * k[1], x[2] + a * k[2]]).collect()
    };
    for alpha in momenta {
        let k1 = vel(&state, alpha);
        let k2 = vel(&shift(&state, &k1, h / 2.0), alpha);
        let k3 = vel(&shift(&state, &k2, h / 2.0), alpha);
        let k4 = vel(&shift(&state, &k3, h), alpha);
        for (j, x) in state.iter_mut().enumerate() {
            for i in 0..3 {
                x[i] += h / 6.0 * (k1[j][i] + 2.0 * k2[j][i] + 2.0 * k3[j][i] + k4[j][i]);
            }
        }
    }
    state[nc..].iter().map(|x| Vec3::new(x[0], x[1], x[2])).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transport_matches_reference_rk4(seed in any::<u64>(), steps in 1usize..6, sigma in 0.2f64..2.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let controls = random_vecs(&mut rng, 6, 1.0);
        let momenta: Vec<Vec<Vec3>> = (0..steps).map(|_| random_vecs(&mut rng, 6, 0.3)).collect();
        let points = random_vecs(&mut rng, 9, 1.5);
        let field = MomentumField::from_momenta(controls.clone(), momenta.clone(), sigma, 0.01).unwrap();
        let got = transport(&points, &field);
        let expect = reference_transport(&controls, &points, &momenta, sigma);
        for (g, e) in got.iter().zip(&expect) {
            prop_assert!((g - e).norm() < 1e-12, "{g:?} vs {e:?}");
        }
        // controls follow their own stored trajectories
        let moved = transport(&controls, &field);
        for (m, t) in moved.iter().zip(field.controls_at(steps)) {
            prop_assert!((m - t).norm() < 1e-12);
        }
    }

    #[test]
    fn velocity_is_a_kernel_sum(seed in any::<u64>(), sigma in 0.1f64..3.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let controls = random_vecs(&mut rng, 7, 1.0);
        let alpha = random_vecs(&mut rng, 7, 1.0);
        let x = random_vecs(&mut rng, 1, 2.0)[0];
        let mut expect = Vec3::zeros();
        for (c, a) in controls.iter().zip(&alpha) {
            expect += cauchy((x - c).norm_squared(), sigma) * a;
        }
        prop_assert!((velocity_at(&x, &controls, &alpha, sigma) - expect).norm() < 1e-13);
    }

    #[test]
    fn backward_integration_undoes_forward(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let controls = random_vecs(&mut rng, 5, 1.0);
        let momenta: Vec<Vec<Vec3>> = (0..20).map(|_| random_vecs(&mut rng, 5, 0.2)).collect();
        let field = MomentumField::from_momenta(controls, momenta, 1.0, 0.01).unwrap();
        let points = random_vecs(&mut rng, 10, 1.0);
        let back = integrate_backward(&transport(&points, &field), &field).unwrap();
        // points lie in a cube of diagonal 2√3
        for (b, p) in back.iter().zip(&points) {
            prop_assert!((b - p).norm() < 1e-3 * 2.0 * 3f64.sqrt());
        }
    }

    #[test]
    fn snapshot_displacement_is_monotone(seed in any::<u64>(), steps in 2usize..8) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mesh = random_mesh(&mut rng, 10);
        let controls = mesh.vertices().to_vec();
        let momenta: Vec<Vec<Vec3>> = (0..steps).map(|_| random_vecs(&mut rng, controls.len(), 0.5)).collect();
        let field = MomentumField::from_momenta(controls, momenta, 0.5, 0.01).unwrap();
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
        let snaps = flow_snapshots(&mesh, &field, &times).unwrap();
        for w in snaps.windows(2) {
            for (a, b) in w[0].displacement.iter().zip(&w[1].displacement) {
                prop_assert!(b >= a);
            }
        }
        prop_assert_eq!(&snaps.last().unwrap().mesh, &apply_flow(&mesh, &[field]).unwrap());
    }

    #[test]
    fn sequential_fields_compose(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mesh = random_mesh(&mut rng, 8);
        let f1 = MomentumField::from_momenta(random_vecs(&mut rng, 4, 1.0), vec![random_vecs(&mut rng, 4, 0.3); 3], 0.7, 0.01).unwrap();
        let f2 = MomentumField::from_momenta(random_vecs(&mut rng, 3, 1.0), vec![random_vecs(&mut rng, 3, 0.3); 4], 0.4, 0.01).unwrap();
        let both = apply_flow(&mesh, &[f1.clone(), f2.clone()]).unwrap();
        let one_by_one = apply_flow(&apply_flow(&mesh, &[f1]).unwrap(), &[f2]).unwrap();
        prop_assert_eq!(both, one_by_one);
    }

    #[test]
    fn field_json_round_trips(seed in any::<u64>(), steps in 1usize..5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let momenta: Vec<Vec<Vec3>> = (0..steps).map(|_| random_vecs(&mut rng, 4, 1.0)).collect();
        let field = MomentumField::from_momenta(random_vecs(&mut rng, 4, 1.0), momenta, 0.9, 0.02)
            .unwrap()
            .with_provenance("S1", "S2");
        let again = MomentumField::from_json(&field.to_json()).unwrap();
        prop_assert_eq!(again.momenta(), field.momenta());
        prop_assert_eq!(again.control_trajectories(), field.control_trajectories());
        prop_assert!(again.self_consistency_error() < 1e-15);
        prop_assert_eq!(again.provenance, field.provenance);
    }
}

#[test]
fn objective_gradient_matches_finite_differences_on_random_instances() {
    let mut rng = StdRng::seed_from_u64(5);
    for case in 0..20 {
        let source = random_quad(&mut rng, Vec3::zeros());
        let offset = random_vecs(&mut rng, 1, 0.3)[0];
        let target = random_quad(&mut rng, offset);
        let steps = rng.random_range(1..=4);
        let sigma_v = rng.random_range(0.3..1.5);
        let gamma = rng.random_range(0.0..0.1);
        let currents = CurrentsParams::gaussian(rng.random_range(0.3..1.0));
        let momenta: Vec<Vec<Vec3>> = (0..steps).map(|_| random_vecs(&mut rng, 4, 0.3)).collect();
        let j = |m: &[Vec<Vec3>]| {
            testing::objective_and_gradient(&source, &target, currents, sigma_v, gamma, m).unwrap().0.j
        };
        let (_, grad) = testing::objective_and_gradient(&source, &target, currents, sigma_v, gamma, &momenta).unwrap();
        let gmax = grad.iter().flatten().map(|v| v.amax()).fold(0.0, f64::max);
        let h = 1e-6 * source.bbox_diagonal();
        for k in 0..steps {
            for n in 0..4 {
                for c in 0..3 {
                    let (mut plus, mut minus) = (momenta.clone(), momenta.clone());
                    plus[k][n][c] += h;
                    minus[k][n][c] -= h;
                    let fd = (j(&plus) - j(&minus)) / (2.0 * h);
                    let err = rel_err(grad[k][n][c], fd, 1e-3 * gmax);
                    assert!(err < 1e-4, "case {case}: step {k} control {n} axis {c}: {} vs {fd}", grad[k][n][c]);
                }
            }
        }
    }
}

#[test]
fn zero_field_objective_is_the_data_term() {
    let mut rng = StdRng::seed_from_u64(8);
    let (a, b) = (random_mesh(&mut rng, 20), random_mesh(&mut rng, 20));
    let p = CurrentsParams::gaussian(0.4);
    let tc = current_of(&b).unwrap();
    let field = MomentumField::zero(a.vertices().to_vec(), 5, 0.5, 0.01).unwrap();
    let o = objective_j(&a, &tc, &field, &p).unwrap();
    assert_eq!(o.j, data_term_e(&a, &tc, &p).unwrap());
    assert_eq!(o.reg, 0.0);
}

#[test]
fn matching_a_mesh_to_itself_stops_immediately() {
    let m = icosphere(1, 1.0);
    let (field, report) = match_surfaces(&m, &m, &MatchParams::default()).unwrap();
    assert!(report.iterations <= 2);
    assert!(report.final_.e < 1e-12);
    assert!(field.max_momentum() < 1e-9);
}

fn normal_cosines(mesh: &SurfaceMesh, field: &MomentumField) -> f64 {
    let times: Vec<f64> = (0..=field.n_steps()).map(|k| k as f64 / field.n_steps() as f64).collect();
    let snaps = flow_snapshots(mesh, field, &times).unwrap();
    let base: Vec<Vec3> = (0..mesh.face_count()).map(|f| mesh.face_normal(f).normalize()).collect();
    snaps
        .iter()
        .flat_map(|s| (0..mesh.face_count()).map(|f| s.mesh.face_normal(f).normalize().dot(&base[f])).collect::<Vec<_>>())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn sphere_to_ellipsoid_is_regular_and_monotone() {
    let source = icosphere(2, 1.0);
    let target = ellipsoid(2, [1.3, 1.0, 0.8], &Rotation3::identity(), Vec3::zeros());
    let (field, report) = match_surfaces(&source, &target, &MatchParams::default()).unwrap();
    assert!(report.data_term_reduction() >= 0.95, "reduction {}", report.data_term_reduction());
    assert!(report.trace.windows(2).all(|w| w[1] <= w[0]), "J increased: {:?}", report.trace);
    let cos = normal_cosines(&source, &field);
    assert!(cos > 0.0, "a face normal turned by more than 90 degrees (cos {cos})");
}

#[test]
fn matching_is_deterministic() {
    let source = icosphere(1, 1.0);
    let target = ellipsoid(1, [1.2, 0.9, 1.0], &Rotation3::identity(), Vec3::zeros());
    let params = MatchParams {
        max_iterations: 15,
        ..MatchParams::default()
    };
    let (f1, r1) = match_surfaces(&source, &target, &params).unwrap();
    let (f2, r2) = match_surfaces(&source, &target, &params).unwrap();
    assert_eq!(f1.to_json(), f2.to_json());
    assert_eq!(r1, r2);
}

#[test]
fn iteration_budget_is_reported() {
    let source = icosphere(1, 1.0);
    let target = icosphere(1, 1.5);
    let params = MatchParams {
        max_iterations: 2,
        grad_tol: 1e-15,
        rel_j_tol: 1e-15,
        ..MatchParams::default()
    };
    let (_, report) = match_surfaces(&source, &target, &params).unwrap();
    assert_eq!(report.termination, Termination::MaxIterations);
    assert_eq!(report.iterations, 2);
    assert!(!report.converged);
    assert_eq!(report.trace.len(), 3);
}

#[test]
fn control_subsampling_still_matches() {
    let source = icosphere(2, 1.0);
    let target = icosphere(2, 1.2);
    let params = MatchParams {
        max_controls: Some(40),
        ..MatchParams::default()
    };
    let (field, report) = match_surfaces(&source, &target, &params).unwrap();
    assert_eq!(field.control_count(), 40);
    assert!(report.data_term_reduction() > 0.9, "reduction {}", report.data_term_reduction());
}
