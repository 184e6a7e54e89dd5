//! The 50-node Lebedev rule on the unit sphere.
//!
//! The rule integrates every polynomial of total degree <= 11 exactly. Nodes
//! are generated in a fixed order from the four orbit types (octahedron
//! vertices, edge midpoints, cube vertices and the 24-point `(l, l, m)` orbit),
//! so surface averages built on it are bit-reproducible.

use crate::linalg::Vec3;

pub const LEBEDEV_50_LEN: usize = 50;

/// Highest total polynomial degree integrated exactly.
pub const LEBEDEV_50_DEGREE: usize = 11;

const W_OCTAHEDRON: f64 = 4.0 / 315.0;
const W_EDGE: f64 = 64.0 / 2835.0;
const W_CUBE: f64 = 27.0 / 1280.0;
const W_LLM: f64 = 14641.0 / 725760.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNode {
    /// Unit direction.
    pub direction: Vec3,
    /// Weight; the weights sum to one, so sums are surface means.
    pub weight: f64,
}

/// Nodes and weights of the 50-point rule, normalised to unit total weight.
pub fn lebedev_50() -> [SphereNode; LEBEDEV_50_LEN] {
    let mut nodes = [SphereNode {
        direction: Vec3::ZERO,
        weight: 0.0,
    }; LEBEDEV_50_LEN];
    let mut n = 0;
    let mut push = |d: Vec3, w: f64| {
        nodes[n] = SphereNode {
            direction: d,
            weight: w,
        };
        n += 1;
    };

    for k in 0..3 {
        for s in [1.0, -1.0] {
            push(Vec3::axis(k) * s, W_OCTAHEDRON);
        }
    }

    let r2 = core::f64::consts::FRAC_1_SQRT_2;
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        for sa in [1.0, -1.0] {
            for sb in [1.0, -1.0] {
                let mut d = Vec3::ZERO;
                d[a] = sa * r2;
                d[b] = sb * r2;
                push(d, W_EDGE);
            }
        }
    }

    let r3 = 1.0 / crate::math::sqrt(3.0);
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                push(Vec3::new(sx * r3, sy * r3, sz * r3), W_CUBE);
            }
        }
    }

    let l = 1.0 / crate::math::sqrt(11.0);
    let m = 3.0 / crate::math::sqrt(11.0);
    for big in 0..3 {
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                for sz in [1.0, -1.0] {
                    let mut d = Vec3::new(sx * l, sy * l, sz * l);
                    d[big] *= m / l;
                    push(d, W_LLM);
                }
            }
        }
    }
    debug_assert_eq!(n, LEBEDEV_50_LEN);
    nodes
}
