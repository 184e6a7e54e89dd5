//! Cube-averaged densities, weighted sup norms and the mesoscale velocity.

use alloc::collections::{BTreeMap, BTreeSet};

use crate::density::AnalyticDensity;
use crate::kernels::oseen_tensor;
use crate::linalg::Vec3;
use crate::math::{self, PI};
use crate::micro::{settling_speed_single, ParticleSystem};

pub type CubeIndex = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MesoError {
    #[error("cube edge {delta} does not exceed the particle diameter {diameter}")]
    DegenerateDelta { delta: f64, diameter: f64 },
    #[error("grids with edges {fine} and {coarse} and anchors offset by {anchor_offset} are not nested")]
    IncompatibleGrids { fine: f64, coarse: f64, anchor_offset: f64 },
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Axis-aligned partition into cubes `anchor + delta * ([0,1)^3 + k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeGrid {
    pub delta: f64,
    pub anchor: Vec3,
}

impl CubeGrid {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            anchor: Vec3::ZERO,
        }
    }

    pub fn index_of(&self, x: Vec3) -> CubeIndex {
        let r = (x - self.anchor) / self.delta;
        [
            math::floor(r.x) as i64,
            math::floor(r.y) as i64,
            math::floor(r.z) as i64,
        ]
    }

    pub fn center(&self, k: CubeIndex) -> Vec3 {
        self.anchor
            + Vec3::new(
                (k[0] as f64 + 0.5) * self.delta,
                (k[1] as f64 + 0.5) * self.delta,
                (k[2] as f64 + 0.5) * self.delta,
            )
    }

    pub fn volume(&self) -> f64 {
        self.delta * self.delta * self.delta
    }
}

/// Sparse cube values; cubes without an entry hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: CubeGrid,
    values: BTreeMap<CubeIndex, f64>,
}

impl DensityGrid {
    pub fn empty(grid: CubeGrid) -> Self {
        Self {
            grid,
            values: BTreeMap::new(),
        }
    }

    pub fn from_values(grid: CubeGrid, values: impl IntoIterator<Item = (CubeIndex, f64)>) -> Self {
        let mut g = Self::empty(grid);
        for (k, v) in values {
            *g.values.entry(k).or_insert(0.0) += v;
        }
        g
    }

    pub fn get(&self, k: CubeIndex) -> f64 {
        self.values.get(&k).copied().unwrap_or(0.0)
    }

    pub fn value_at(&self, x: Vec3) -> f64 {
        self.get(self.grid.index_of(x))
    }

    pub fn iter(&self) -> impl Iterator<Item = (CubeIndex, f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Inclusive index bounds of the stored cubes.
    pub fn extents(&self) -> Option<(CubeIndex, CubeIndex)> {
        let mut it = self.values.keys();
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for k in it {
            for a in 0..3 {
                lo[a] = lo[a].min(k[a]);
                hi[a] = hi[a].max(k[a]);
            }
        }
        Some((lo, hi))
    }

    /// `sum value * delta^3`.
    pub fn total_mass(&self) -> f64 {
        self.values.values().sum::<f64>() * self.grid.volume()
    }

    pub fn max_value(&self) -> f64 {
        self.values.values().copied().fold(0.0, f64::max)
    }
}

/// Deposit point masses onto `grid` by the centre rule.
pub fn deposit(grid: CubeGrid, points: &[Vec3], weights: &[f64]) -> DensityGrid {
    let inv_vol = 1.0 / grid.volume();
    let mut g = DensityGrid::empty(grid);
    for (&p, &w) in points.iter().zip(weights) {
        *g.values.entry(grid.index_of(p)).or_insert(0.0) += w * inv_vol;
    }
    g
}

/// Deposit each weight spread uniformly over the axis-aligned cube of edge
/// `cell` centred at its point, split among grid cubes by overlap volume.
/// A translated lattice of such cells tiles space, so a uniform marker
/// lattice deposits without aliasing.
pub fn deposit_cells(grid: CubeGrid, points: &[Vec3], weights: &[f64], cell: f64) -> Result<DensityGrid, MesoError> {
    if !(cell > 0.0) || !cell.is_finite() {
        return Err(MesoError::InvalidParameter { name: "cell", value: cell });
    }
    if cell > grid.delta {
        return Err(MesoError::InvalidParameter { name: "cell", value: cell });
    }
    let inv_vol = 1.0 / grid.volume();
    let mut g = DensityGrid::empty(grid);
    // Overlap fractions of [lo, lo + cell] with the cubes along one axis.
    let split = |lo: f64| -> ([i64; 2], [f64; 2]) {
        let k = math::floor(lo / grid.delta) as i64;
        let edge = (k + 1) as f64 * grid.delta;
        let first = ((edge - lo) / cell).clamp(0.0, 1.0);
        ([k, k + 1], [first, 1.0 - first])
    };
    for (&p, &w) in points.iter().zip(weights) {
        let r = p - grid.anchor - Vec3::splat(0.5 * cell);
        let (kx, fx) = split(r.x);
        let (ky, fy) = split(r.y);
        let (kz, fz) = split(r.z);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let f = fx[a] * fy[b] * fz[c];
                    if f > 0.0 {
                        *g.values.entry([kx[a], ky[b], kz[c]]).or_insert(0.0) += w * f * inv_vol;
                    }
                }
            }
        }
    }
    Ok(g)
}

/// Cube averages of the rescaled particle density on the origin-anchored grid.
pub fn cube_average(sys: &ParticleSystem, delta: f64) -> Result<DensityGrid, MesoError> {
    cube_average_on(sys, CubeGrid::new(delta))
}

/// Each particle contributes `(4 pi / 3) / N` to the cube holding its centre.
pub fn cube_average_on(sys: &ParticleSystem, grid: CubeGrid) -> Result<DensityGrid, MesoError> {
    if !(grid.delta > 2.0 * sys.radius) || !grid.delta.is_finite() {
        return Err(MesoError::DegenerateDelta {
            delta: grid.delta,
            diameter: 2.0 * sys.radius,
        });
    }
    let w = 4.0 * PI / (3.0 * sys.count() as f64);
    let inv_vol = 1.0 / grid.volume();
    let mut g = DensityGrid::empty(grid);
    for &p in &sys.positions {
        *g.values.entry(grid.index_of(p)).or_insert(0.0) += w * inv_vol;
    }
    Ok(g)
}

#[inline]
fn weight(x: Vec3, beta: f64) -> f64 {
    1.0 + math::powf(x.norm(), beta)
}

/// `sup (1 + |x|^beta) |h(x)|` over the cube centres of the grid.
pub fn x_beta_norm(grid: &DensityGrid, beta: f64) -> f64 {
    x_beta_norm_samples(grid.iter().map(|(k, v)| (grid.grid.center(k), v)), beta)
}

/// `sup (1 + |x|^beta) |h(x)|` over the given samples.
pub fn x_beta_norm_samples(samples: impl IntoIterator<Item = (Vec3, f64)>, beta: f64) -> f64 {
    samples.into_iter().map(|(x, v)| weight(x, beta) * v.abs()).fold(0.0, f64::max)
}

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

/// Integer ratio of coarse to fine edge for nested grids.
fn nesting_factor(fine: &CubeGrid, coarse: &CubeGrid) -> Result<i64, MesoError> {
    let ratio = coarse.delta / fine.delta;
    let n = math::round(ratio);
    let offset = (coarse.anchor - fine.anchor).max_abs();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio || offset > 1e-12 * coarse.delta.max(1.0) {
        return Err(MesoError::IncompatibleGrids {
            fine: fine.delta,
            coarse: coarse.delta,
            anchor_offset: offset,
        });
    }
    Ok(n as i64)
}

/// X_beta distance between two nested grids, evaluated at the centres of the
/// finer grid's cubes.
pub fn x_beta_distance(a: &DensityGrid, b: &DensityGrid, beta: f64) -> Result<f64, MesoError> {
    let (fine, coarse) = if a.grid.delta <= b.grid.delta { (a, b) } else { (b, a) };
    let n = nesting_factor(&fine.grid, &coarse.grid)?;
    let parent = |k: CubeIndex| [floor_div(k[0], n), floor_div(k[1], n), floor_div(k[2], n)];
    let mut keys: BTreeSet<CubeIndex> = fine.values.keys().copied().collect();
    for &p in coarse.values.keys() {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    keys.insert([p[0] * n + i, p[1] * n + j, p[2] * n + k]);
                }
            }
        }
    }
    Ok(x_beta_norm_samples(
        keys.into_iter()
            .map(|k| (fine.grid.center(k), fine.get(k) - coarse.get(parent(k)))),
        beta,
    ))
}

/// X_beta distance between a grid and an analytic density evaluated at the
/// cube centres covering both supports.
pub fn x_beta_distance_to(grid: &DensityGrid, reference: &AnalyticDensity, beta: f64) -> f64 {
    let g = grid.grid;
    let mut keys: BTreeSet<CubeIndex> = grid.values.keys().copied().collect();
    let reach = reference.support_radius() + g.delta;
    let lo = g.index_of(reference.center - Vec3::splat(reach));
    let hi = g.index_of(reference.center + Vec3::splat(reach));
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                if reference.density(g.center([i, j, k])) > 0.0 {
                    keys.insert([i, j, k]);
                }
            }
        }
    }
    x_beta_norm_samples(
        keys.into_iter().map(|k| {
            let c = g.center(k);
            (c, grid.get(k) - reference.density(c))
        }),
        beta,
    )
}

/// Block-average `factor^3` children into each parent cube.
pub fn coarsen(grid: &DensityGrid, factor: usize) -> Result<DensityGrid, MesoError> {
    if factor == 0 {
        return Err(MesoError::InvalidParameter {
            name: "factor",
            value: 0.0,
        });
    }
    if factor == 1 {
        return Ok(grid.clone());
    }
    let n = factor as i64;
    let coarse = CubeGrid {
        delta: grid.grid.delta * factor as f64,
        anchor: grid.grid.anchor,
    };
    let scale = 1.0 / (n * n * n) as f64;
    Ok(DensityGrid::from_values(
        coarse,
        grid.iter()
            .map(|(k, v)| ([floor_div(k[0], n), floor_div(k[1], n), floor_div(k[2], n)], v * scale)),
    ))
}

/// `w(x) = sum value delta^3 Phi(x - c) e + (2/9) xi^2 e`. The cube holding
/// `x` is split into 27 sub-cubes; the sub-cube holding `x` is replaced by
/// the equal-volume ball centred at `x`, whose Oseen integral is `a^2/3 I`.
pub fn mesoscale_velocity(grid: &DensityGrid, xi: f64, e: Vec3, x: Vec3) -> Vec3 {
    let g = grid.grid;
    let own = g.index_of(x);
    let vol = g.volume();
    let mut acc = Vec3::ZERO;
    for (k, v) in grid.iter() {
        if k == own {
            acc += self_cube_integral(g, k, x, e) * v;
        } else if let Ok(phi) = oseen_tensor(x - g.center(k)) {
            acc += phi.mul_vec(e) * (v * vol);
        }
    }
    acc + settling_speed_single(xi, e)
}

/// Approximate `int_cube Phi(x - z) e dz` for `x` inside the cube.
fn self_cube_integral(g: CubeGrid, k: CubeIndex, x: Vec3, e: Vec3) -> Vec3 {
    let h = g.delta / 3.0;
    let sub = CubeGrid {
        delta: h,
        anchor: g.center(k) - Vec3::splat(1.5 * h),
    };
    let hit = sub.index_of(x);
    let ball_radius = h * math::cbrt(3.0 / (4.0 * PI));
    let mut acc = Vec3::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                let s = [i, j, l];
                if s == hit {
                    acc += e * (ball_radius * ball_radius / 3.0);
                } else if let Ok(phi) = oseen_tensor(x - sub.center(s)) {
                    acc += phi.mul_vec(e) * (h * h * h);
                }
            }
        }
    }
    acc
}
