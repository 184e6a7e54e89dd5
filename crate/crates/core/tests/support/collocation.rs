//! Dense boundary-collocation solve of the two-sphere mobility problem,
//! used as an independent oracle for the reflection solver.
//!
//! Each sphere is represented by Stokeslets on a concentric interior shell.
//! Unknowns are the Stokeslet strengths plus each sphere's translation and
//! rotation; equations are rigid-motion collocation on the surface, the
//! prescribed net force and zero net torque. The system is solved in the
//! least-squares sense.

use nalgebra::{DMatrix, DVector};
use sediment_core::kernels::oseen_tensor;
use sediment_core::Vec3;

fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
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

pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
    pub force: Vec3,
}

/// Returns the translational velocity of each sphere.
pub fn collocation_velocities(spheres: &[Sphere], n_src: usize, n_col: usize) -> Vec<Vec3> {
    let src_dirs = fibonacci_sphere(n_src);
    let col_dirs = fibonacci_sphere(n_col);
    let ns = spheres.len();
    let n_unknown = ns * (3 * n_src + 6);
    let n_eq = ns * (3 * n_col + 6);
    let mut a = DMatrix::<f64>::zeros(n_eq, n_unknown);
    let mut b = DVector::<f64>::zeros(n_eq);
    let src_col = |s: usize, m: usize| s * 3 * n_src + 3 * m;
    let rigid_col = |s: usize| ns * 3 * n_src + 6 * s;

    let sources: Vec<Vec<Vec3>> = spheres
        .iter()
        .map(|sp| src_dirs.iter().map(|&d| sp.center + d * (0.6 * sp.radius)).collect())
        .collect();

    let mut row = 0;
    for (t, tgt) in spheres.iter().enumerate() {
        for &d in &col_dirs {
            let x = tgt.center + d * tgt.radius;
            for (s, src) in sources.iter().enumerate() {
                for (m, &p) in src.iter().enumerate() {
                    let g = oseen_tensor(x - p).unwrap();
                    for i in 0..3 {
                        for j in 0..3 {
                            a[(row + i, src_col(s, m) + j)] = g.m[i][j];
                        }
                    }
                }
            }
            // -(V + W x y)
            let y = x - tgt.center;
            let rc = rigid_col(t);
            for i in 0..3 {
                a[(row + i, rc + i)] = -1.0;
            }
            // (W x y)_i = eps_ijk W_j y_k
            a[(row, rc + 4)] = -y.z;
            a[(row, rc + 5)] = y.y;
            a[(row + 1, rc + 3)] = y.z;
            a[(row + 1, rc + 5)] = -y.x;
            a[(row + 2, rc + 3)] = -y.y;
            a[(row + 2, rc + 4)] = y.x;
            row += 3;
        }
        // Force and torque rows scaled to the size of the velocity rows.
        let w = 1.0 / tgt.radius;
        for (m, &p) in sources[t].iter().enumerate() {
            for i in 0..3 {
                a[(row + i, src_col(t, m) + i)] = w;
            }
            let y = p - tgt.center;
            // torque (y x f)
            let c = src_col(t, m);
            a[(row + 3, c + 1)] = -y.z * w;
            a[(row + 3, c + 2)] = y.y * w;
            a[(row + 4, c)] = y.z * w;
            a[(row + 4, c + 2)] = -y.x * w;
            a[(row + 5, c)] = -y.y * w;
            a[(row + 5, c + 1)] = y.x * w;
        }
        for i in 0..3 {
            b[row + i] = tgt.force[i] * w;
        }
        row += 6;
    }
    let svd = a.svd(true, true);
    let sol = svd.solve(&b, 1e-13).unwrap();
    (0..ns)
        .map(|s| {
            let c = rigid_col(s);
            Vec3::new(sol[c], sol[c + 1], sol[c + 2])
        })
        .collect()
}

