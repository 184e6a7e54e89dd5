use alloc::vec;
use alloc::vec::Vec;

use super::ParticleSystem;
use crate::linalg::Vec3;
use crate::math;

/// Minimum pairwise distance; `+inf` for fewer than two points.
pub fn min_distance(positions: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, &a) in positions.iter().enumerate() {
        for &b in &positions[i + 1..] {
            best = best.min((a - b).norm_sq());
        }
    }
    math::sqrt(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStatistics {
    pub d_min: f64,
    /// `sup_j R^3 sum_{i != j} |X_i - X_j|^-3`.
    pub delta: f64,
    /// `sup_j (1/N) sum_{i != j} |X_i - X_j|^-2`.
    pub alpha: f64,
}

/// Direct sums for `d_min`, `delta` and `alpha`.
pub fn pair_statistics(positions: &[Vec3], radius: f64) -> PairStatistics {
    let n = positions.len();
    let mut s2 = vec![0.0; n];
    let mut s3 = vec![0.0; n];
    let mut dmin2 = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let r2 = (positions[i] - positions[j]).norm_sq();
            dmin2 = dmin2.min(r2);
            let inv2 = 1.0 / r2;
            let inv3 = inv2 * math::sqrt(inv2);
            s2[i] += inv2;
            s2[j] += inv2;
            s3[i] += inv3;
            s3[j] += inv3;
        }
    }
    reduce_statistics(&s2, &s3, dmin2, radius)
}

pub(crate) fn reduce_statistics(s2: &[f64], s3: &[f64], dmin2: f64, radius: f64) -> PairStatistics {
    let n = s2.len();
    if n < 2 {
        return PairStatistics {
            d_min: f64::INFINITY,
            delta: 0.0,
            alpha: 0.0,
        };
    }
    let max2 = s2.iter().cloned().fold(0.0, f64::max);
    let max3 = s3.iter().cloned().fold(0.0, f64::max);
    PairStatistics {
        d_min: math::sqrt(dmin2),
        delta: radius * radius * radius * max3,
        alpha: max2 / n as f64,
    }
}

pub fn delta_statistic(sys: &ParticleSystem) -> f64 {
    pair_statistics(&sys.positions, sys.radius).delta
}

pub fn alpha_statistic(sys: &ParticleSystem) -> f64 {
    pair_statistics(&sys.positions, sys.radius).alpha
}

/// `max_{i<j} |X_i(0) - X_j(0)| / |X_i - X_j|`, or 1 for fewer than two points.
pub(crate) fn distance_ratio(initial: &[Vec3], current: &[Vec3]) -> f64 {
    let mut best = 1.0_f64;
    for i in 0..initial.len() {
        for j in i + 1..initial.len() {
            let q = (initial[i] - initial[j]).norm_sq() / (current[i] - current[j]).norm_sq();
            best = best.max(q);
        }
    }
    math::sqrt(best)
}

/// Running supremum of pair-distance ratios against `initial` over the
/// snapshots in order.
pub fn y_series<'a>(initial: &[Vec3], snapshots: impl IntoIterator<Item = &'a [Vec3]>) -> Vec<f64> {
    let mut y = 1.0_f64;
    snapshots
        .into_iter()
        .map(|s| {
            y = y.max(distance_ratio(initial, s));
            y
        })
        .collect()
}
