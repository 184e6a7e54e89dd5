#![allow(dead_code)]

use sediment_core::{Mat3, Vec3};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

/// Product rule on the unit sphere: Gauss in cos(theta), trapezoid in phi.
/// Returns unit directions and weights summing to one.
pub fn product_sphere_rule(n_theta: usize, n_phi: usize) -> Vec<(Vec3, f64)> {
    let (x, w) = gauss_legendre(n_theta);
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (ct, wt) in x.iter().zip(&w) {
        let st = (1.0 - ct * ct).sqrt();
        for k in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_phi as f64;
            out.push((Vec3::new(st * phi.cos(), st * phi.sin(), *ct), wt / (2.0 * n_phi as f64)));
        }
    }
    out
}

pub fn sphere_mean_vec(f: impl Fn(Vec3) -> Vec3, c: Vec3, r: f64) -> Vec3 {
    product_sphere_rule(32, 64)
        .into_iter()
        .fold(Vec3::ZERO, |acc, (d, w)| acc + f(c + d * r) * w)
}

pub fn sphere_mean_mat(f: impl Fn(Vec3) -> Mat3, c: Vec3, r: f64) -> Mat3 {
    product_sphere_rule(32, 64)
        .into_iter()
        .fold(Mat3::ZERO, |acc, (d, w)| acc + f(c + d * r).scale(w))
}

/// Fibonacci points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            Vec3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

pub fn rel_err(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm() / b.norm()
}
