mod common;

use common::{fibonacci_sphere, sphere_mean_mat, sphere_mean_vec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sediment_core::kernels::*;
use sediment_core::math::PI;
use sediment_core::quadrature::lebedev_50;
use sediment_core::{Mat3, Vec3};

fn random_mat(rng: &mut ChaCha8Rng) -> Mat3 {
    let mut m = Mat3::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            m.m[i][j] = rng.gen_range(-1.0..1.0);
        }
    }
    m
}

fn random_vec(rng: &mut ChaCha8Rng, s: f64) -> Vec3 {
    Vec3::new(rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s))
}

#[test]
fn correction_trace_matches_boundary_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dirs = fibonacci_sphere(400);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let l = random_mat(&mut rng);
        let c = random_vec(&mut rng, 2.0);
        let r = rng.gen_range(0.01..1.0);
        let scale = l.frobenius_norm() * r;
        for &d in &dirs {
            let y = d * r;
            let u = linear_correction_field(c, r, &l, c + y).unwrap();
            worst = worst.max((u + l.mul_vec(y)).norm() / scale);
        }
    }
    assert!(worst <= 1e-8, "worst relative boundary residual {worst:e}");
}

#[test]
fn translating_trace_is_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let f = random_vec(&mut rng, 1.0);
        let c = random_vec(&mut rng, 1.0);
        let r = rng.gen_range(0.01..1.0);
        let rigid = f / (6.0 * std::f64::consts::PI * r);
        for d in fibonacci_sphere(300) {
            let x = c + d * (r * (1.0 + 1e-13));
            let u = translating_sphere_field(c, r, f, x).unwrap();
            assert!((u - rigid).norm() <= 1e-10 * rigid.norm());
        }
    }
}

#[test]
fn correction_field_decays_like_force_free_field() {
    let l = Mat3::from_rows([[0.4, 0.1, -0.3], [0.2, -0.5, 0.7], [0.0, 0.3, 0.1]]);
    let dir = Vec3::new(0.3, -0.5, 0.81).normalized();
    let a = linear_correction_field(Vec3::ZERO, 0.1, &l, dir * 100.0).unwrap().norm() * 1e4;
    let b = linear_correction_field(Vec3::ZERO, 0.1, &l, dir * 1000.0).unwrap().norm() * 1e6;
    assert!((a - b).abs() <= 1e-3 * b, "r^2 |u| should approach a constant: {a} vs {b}");
}

#[test]
fn correction_field_is_divergence_free() {
    let l = Mat3::from_rows([[0.4, 0.1, -0.3], [0.2, -0.5, 0.7], [0.0, 0.3, 0.1]]);
    let x = Vec3::new(0.2, -0.15, 0.1);
    let g = linear_correction_gradient(Vec3::ZERO, 0.1, &l, x).unwrap();
    assert!(g.trace().abs() < 1e-12 * g.max_abs());
}

#[test]
fn analytic_means_match_product_rule_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..25 {
        let r_src = rng.gen_range(0.05..0.5);
        let r_tgt = rng.gen_range(0.05..0.5);
        let sing = SphereSingularity {
            center: random_vec(&mut rng, 1.0),
            radius: r_src,
            monopole: random_vec(&mut rng, 1.0),
            linear_coeff: random_mat(&mut rng),
        };
        let dir = random_vec(&mut rng, 1.0).normalized();
        let target = sing.center + dir * ((r_src + r_tgt) * rng.gen_range(1.5..4.0));
        let exact = sing.analytic_surface_mean(target, r_tgt).unwrap();
        let v = sphere_mean_vec(|x| sing.velocity(x).unwrap(), target, r_tgt);
        let g = sphere_mean_mat(|x| sing.gradient(x).unwrap(), target, r_tgt);
        assert!((exact.velocity - v).norm() <= 1e-10 * v.norm().max(1e-3), "{:?} vs {:?}", exact.velocity, v);
        assert!((exact.gradient - g).max_abs() <= 1e-9 * g.max_abs().max(1e-3));
    }
}

#[test]
fn stokeslet_mean_obeys_faxen_identity() {
    let s = Stokeslet {
        position: Vec3::new(0.1, 0.2, -0.3),
        force: Vec3::new(0.0, 0.5, -1.0),
    };
    let c = Vec3::new(1.0, -0.4, 0.6);
    let rho = 0.3;
    let exact = faxen_surface_average(&s, c, rho).unwrap();
    let oracle = sphere_mean_vec(|x| s.velocity(x).unwrap(), c, rho);
    assert!((exact - oracle).norm() <= 1e-11 * oracle.norm());
}

#[test]
fn lebedev_quadrature_tracks_analytic_means() {
    let sing = SphereSingularity {
        center: Vec3::ZERO,
        radius: 0.1,
        monopole: Vec3::new(0.2, 0.0, -1.0),
        linear_coeff: Mat3::from_rows([[0.1, 0.3, 0.0], [-0.2, 0.0, 0.4], [0.5, 0.1, -0.1]]),
    };
    let c = Vec3::new(0.6, 0.3, -0.5);
    let exact = sing.analytic_surface_mean(c, 0.1).unwrap();
    let q = quadrature_surface_average(&sing, c, 0.1).unwrap();
    let qg = quadrature_surface_gradient(&sing, c, 0.1).unwrap();
    assert!((exact.velocity - q).norm() <= 1e-8 * q.norm());
    assert!((exact.gradient - qg).max_abs() <= 1e-7 * qg.max_abs());
}

#[test]
fn linear_field_means_are_exact() {
    let f = LinearField {
        origin: Vec3::new(0.1, 0.0, 0.0),
        constant: Vec3::new(1.0, 2.0, 3.0),
        matrix: Mat3::from_rows([[0.1, 0.3, 0.0], [-0.2, 0.0, 0.4], [0.5, 0.1, -0.1]]),
    };
    let c = Vec3::new(0.3, -0.2, 0.9);
    let q = quadrature_surface_average(&f, c, 0.7).unwrap();
    assert!((q - faxen_surface_average(&f, c, 0.7).unwrap()).norm() < 1e-14);
    let g = quadrature_surface_gradient(&f, c, 0.7).unwrap();
    assert!((g - f.matrix).max_abs() < 1e-14);
}

#[test]
fn closure_fields_use_quadrature() {
    let field = FnField {
        velocity: |x: Vec3| Vec3::new(x.x * x.x, 0.0, 0.0),
        gradient: |x: Vec3| Mat3::from_rows([[2.0 * x.x, 0.0, 0.0], [0.0; 3], [0.0; 3]]),
    };
    // Mean of x^2 over a sphere of radius r centred at c: c_x^2 + r^2/3.
    let m = faxen_surface_average(&field, Vec3::new(0.5, 0.0, 0.0), 0.3).unwrap();
    assert!((m.x - (0.25 + 0.03)).abs() < 1e-14);
}

#[test]
fn quadrature_reports_failing_nodes() {
    let s = Stokeslet {
        position: Vec3::new(0.0, 0.0, 1.0),
        force: Vec3::new(0.0, 0.0, 1.0),
    };
    // The node (0, 0, 1) of the unit sphere hits the singularity.
    let r = quadrature_surface_average(&s, Vec3::ZERO, 1.0);
    assert!(matches!(r, Err(KernelError::QuadratureFailure { .. })));
}

#[test]
fn singularity_interior_continues_boundary_motion() {
    let sing = SphereSingularity {
        center: Vec3::ZERO,
        radius: 0.2,
        monopole: Vec3::new(0.0, 0.0, -1.0),
        linear_coeff: Mat3::from_rows([[0.1, 0.3, 0.0], [-0.2, 0.0, 0.4], [0.5, 0.1, -0.1]]),
    };
    for d in fibonacci_sphere(50) {
        let inner = sing.velocity(d * (0.2 * (1.0 - 1e-13))).unwrap();
        let outer = sing.velocity(d * (0.2 * (1.0 + 1e-13))).unwrap();
        assert!((inner - outer).norm() < 1e-10);
    }
}

proptest! {
    #[test]
    fn oseen_is_symmetric_and_homogeneous(
        x in prop::array::uniform3(-5.0f64..5.0),
        lambda in 0.1f64..10.0,
    ) {
        let x = Vec3::from_array(x);
        prop_assume!(x.norm() > 1e-3);
        let a = oseen_tensor(x).unwrap();
        prop_assert!(a.is_symmetric(1e-15 * a.max_abs()));
        let b = oseen_tensor(x * lambda).unwrap();
        prop_assert!((b.scale(lambda) - a).max_abs() <= 1e-13 * a.max_abs());
        let c = oseen_tensor(-x).unwrap();
        prop_assert!((c - a).max_abs() <= 1e-15 * a.max_abs());
    }

    #[test]
    fn correction_trace_property(
        l in prop::array::uniform9(-1.0f64..1.0),
        d in prop::array::uniform3(-1.0f64..1.0),
        r in 0.001f64..2.0,
    ) {
        let d = Vec3::from_array(d);
        prop_assume!(d.norm() > 1e-3);
        let l = Mat3::from_rows([[l[0], l[1], l[2]], [l[3], l[4], l[5]], [l[6], l[7], l[8]]]);
        let y = d.normalized() * r;
        let u = linear_correction_field(Vec3::ZERO, r, &l, y).unwrap();
        prop_assert!((u + l.mul_vec(y)).norm() <= 1e-9 * (l.frobenius_norm() * r).max(1e-300));
    }

    #[test]
    fn mean_of_gradient_is_gradient_of_mean(
        dir in prop::array::uniform3(-1.0f64..1.0),
        dist in 0.5f64..3.0,
    ) {
        let dir = Vec3::from_array(dir);
        prop_assume!(dir.norm() > 1e-2);
        let sing = SphereSingularity {
            center: Vec3::ZERO,
            radius: 0.1,
            monopole: Vec3::new(0.3, -0.1, -1.0),
            linear_coeff: Mat3::from_rows([[0.1, 0.3, 0.0], [-0.2, 0.0, 0.4], [0.5, 0.1, -0.1]]),
        };
        let c = dir.normalized() * dist;
        let g = sing.analytic_surface_mean(c, 0.15).unwrap().gradient;
        let h = 1e-5;
        for k in 0..3 {
            let e = Vec3::axis(k) * h;
            let fd = (sing.analytic_surface_mean(c + e, 0.15).unwrap().velocity
                - sing.analytic_surface_mean(c - e, 0.15).unwrap().velocity) / (2.0 * h);
            prop_assert!((fd - g.column(k)).norm() <= 1e-6 * g.max_abs().max(1e-6));
        }
    }
}

fn fd_gradient(f: impl Fn(Vec3) -> Vec3, x: Vec3, h: f64) -> Mat3 {
    let mut g = Mat3::ZERO;
    for k in 0..3 {
        let e = Vec3::axis(k) * h;
        let d = (f(x + e) - f(x - e)) / (2.0 * h);
        g.set_column(k, d);
    }
    g
}

#[test]
fn oseen_matches_definition() {
    let x = Vec3::new(1.0, -2.0, 0.5);
    let m = oseen_tensor(x).unwrap();
    let r = x.norm();
    let f = Vec3::new(0.3, 0.1, -1.0);
    let expect = (f / r + x * (x.dot(f) / (r * r * r))) / (8.0 * PI);
    assert!((m.mul_vec(f) - expect).norm() < 1e-15);
}

#[test]
fn oseen_rejects_coincident_points() {
    assert!(matches!(oseen_tensor(Vec3::ZERO), Err(KernelError::ZeroSeparation { .. })));
}

#[test]
fn translating_sphere_is_continuous_at_surface() {
    let f = Vec3::new(0.2, -0.4, 1.0);
    let c = Vec3::new(0.5, 0.5, 0.5);
    let r = 0.3;
    let inside = f / (6.0 * PI * r);
    for node in lebedev_50() {
        let v = translating_sphere_field(c, r, f, c + node.direction * (r * (1.0 + 1e-12))).unwrap();
        assert!((v - inside).norm() < 1e-10 * inside.norm());
    }
}

#[test]
fn translating_gradient_matches_finite_differences() {
    let f = Vec3::new(0.2, -0.4, 1.0);
    let c = Vec3::new(0.1, 0.0, -0.3);
    let x = Vec3::new(0.9, 0.7, 0.2);
    let g = translating_sphere_gradient(c, 0.25, f, x).unwrap();
    let fd = fd_gradient(|p| translating_sphere_field(c, 0.25, f, p).unwrap(), x, 1e-5);
    assert!((g - fd).max_abs() < 1e-8);
}

#[test]
fn correction_gradient_matches_finite_differences() {
    let l = Mat3::from_rows([[0.3, -1.2, 0.4], [0.7, 0.1, -0.5], [0.2, 0.9, -0.8]]);
    let c = Vec3::new(0.0, 0.2, 0.0);
    let x = Vec3::new(0.4, -0.3, 0.5);
    let g = linear_correction_gradient(c, 0.2, &l, x).unwrap();
    let fd = fd_gradient(|p| linear_correction_field(c, 0.2, &l, p).unwrap(), x, 1e-5);
    assert!((g - fd).max_abs() < 1e-7 * g.max_abs().max(1.0));
}

#[test]
fn correction_rejects_interior_points() {
    let r = linear_correction_field(Vec3::ZERO, 1.0, &Mat3::IDENTITY, Vec3::new(0.5, 0.0, 0.0));
    assert!(matches!(r, Err(KernelError::InsideSphere { .. })));
}

#[test]
fn linear_parts_reassemble() {
    let l = Mat3::from_rows([[0.3, -1.2, 0.4], [0.7, 0.1, -0.5], [0.2, 0.9, -0.8]]);
    let p = LinearParts::from_matrix(&l);
    let y = Vec3::new(0.3, -0.7, 1.1);
    let re = y * p.dilation + p.rotation.cross(y) + p.strain.mul_vec(y);
    assert!((re - l.mul_vec(y)).norm() < 1e-14);
    assert!(p.strain.trace().abs() < 1e-15);
}
