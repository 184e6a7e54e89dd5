//! Lagrangian blob solver for the transport-Stokes limit.
//!
//! Markers carry fixed weights and move with
//! `v(x) = sum_j w_j K_eps(x - x_j) e + drift`, where `K_eps` is a regularized
//! Oseen tensor and `drift = (2/9) xi*^2 e + u0`. The drift is integrated
//! analytically: positions are stored in a frame moving with the drift and
//! absolute positions are `rel + elapsed * drift`.

use alloc::vec::Vec;

use crate::density::{AnalyticDensity, DensityShape};
use crate::linalg::Vec3;
use crate::math::{self, PI};
use crate::meso::{deposit, deposit_cells, CubeGrid, DensityGrid};
use crate::micro::TimeScheme;

const INV_8PI: f64 = 1.0 / (8.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MacroError {
    #[error("no lattice point has density above the floor {floor}")]
    EmptyDensity { floor: f64 },
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Regularization of the Oseen tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlobKernel {
    /// `((r^2 + 2 eps^2) I + x x^T) / (8 pi s^3)` with `s^2 = r^2 + eps^2`;
    /// exactly divergence-free, self-term `1 / (4 pi eps)`.
    #[default]
    Regularized,
    /// `|x|` replaced by `s` in both terms of the Oseen tensor; divergence
    /// `O(eps^2)`, self-term `1 / (8 pi eps)`.
    Algebraic,
}

impl BlobKernel {
    /// `K_eps(x) e`.
    #[inline(always)]
    pub fn apply(self, x: Vec3, e: Vec3, eps2: f64) -> Vec3 {
        let r2 = x.norm_sq();
        let s2 = r2 + eps2;
        let inv_s = 1.0 / math::sqrt(s2);
        let inv_s3 = inv_s * inv_s * inv_s;
        let xe = x.dot(e);
        match self {
            BlobKernel::Regularized => (e * (r2 + 2.0 * eps2) + x * xe) * (inv_s3 * INV_8PI),
            BlobKernel::Algebraic => (e * inv_s + x * (xe * inv_s3)) * INV_8PI,
        }
    }

    /// `K_eps(0) e` per unit weight.
    pub fn self_term(self, e: Vec3, eps: f64) -> Vec3 {
        self.apply(Vec3::ZERO, e, eps * eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerOptions {
    /// Blob width as a multiple of the marker spacing.
    pub blob_factor: f64,
    /// Lattice points with density at or below this value get no marker.
    pub mass_floor: f64,
    pub xi_star: f64,
    pub drive: Vec3,
    /// Extra constant drift `u0`.
    pub frame_velocity: Vec3,
    pub kernel: BlobKernel,
}

impl Default for MarkerOptions {
    fn default() -> Self {
        Self {
            blob_factor: 2.0,
            mass_floor: 0.0,
            xi_star: 1.0,
            drive: Vec3::new(0.0, 0.0, -1.0),
            frame_velocity: Vec3::ZERO,
            kernel: BlobKernel::Regularized,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerCloud {
    rel_positions: Vec<Vec3>,
    weights: Vec<f64>,
    pub spacing: f64,
    pub blob_width: f64,
    pub xi_star: f64,
    pub drive: Vec3,
    pub frame_velocity: Vec3,
    pub kernel: BlobKernel,
    elapsed: f64,
}

impl MarkerCloud {
    pub fn new(positions: Vec<Vec3>, weights: Vec<f64>, blob_width: f64, opts: &MarkerOptions) -> Self {
        assert_eq!(positions.len(), weights.len(), "one weight per marker");
        Self {
            rel_positions: positions,
            weights,
            spacing: blob_width / opts.blob_factor,
            blob_width,
            xi_star: opts.xi_star,
            drive: opts.drive,
            frame_velocity: opts.frame_velocity,
            kernel: opts.kernel,
            elapsed: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// `(2/9) xi*^2 e + u0`.
    pub fn drift(&self) -> Vec3 {
        self.drive * (2.0 / 9.0 * self.xi_star * self.xi_star) + self.frame_velocity
    }

    fn offset(&self) -> Vec3 {
        self.drift() * self.elapsed
    }

    /// Positions in the frame moving with the drift.
    pub fn relative_positions(&self) -> &[Vec3] {
        &self.rel_positions
    }

    pub fn positions(&self) -> Vec<Vec3> {
        let o = self.offset();
        self.rel_positions.iter().map(|&p| p + o).collect()
    }

    /// Collective velocity at every marker, self-term included.
    pub fn collective_velocities(&self) -> Vec<Vec3> {
        collective_at_markers(&self.rel_positions, &self.weights, self.kernel, self.drive, self.blob_width)
    }
}

/// Markers at the cell centres `(k + 1/2) h` where the density exceeds the
/// floor, with weight `rho0 h^3`.
pub fn init_markers(rho0: &AnalyticDensity, h: f64, opts: &MarkerOptions) -> Result<MarkerCloud, MacroError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(MacroError::InvalidParameter { name: "h", value: h });
    }
    if !(opts.blob_factor > 0.0) {
        return Err(MacroError::InvalidParameter {
            name: "blob_factor",
            value: opts.blob_factor,
        });
    }
    let reach = rho0.support_radius();
    let lo = |c: f64| math::floor((c - reach) / h) as i64 - 1;
    let hi = |c: f64| math::ceil((c + reach) / h) as i64 + 1;
    let c = rho0.center;
    let vol = h * h * h;
    let mut positions = Vec::new();
    let mut weights = Vec::new();
    for i in lo(c.x)..=hi(c.x) {
        for j in lo(c.y)..=hi(c.y) {
            for k in lo(c.z)..=hi(c.z) {
                let x = Vec3::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h, (k as f64 + 0.5) * h);
                let r = rho0.density(x);
                if r > opts.mass_floor {
                    positions.push(x);
                    weights.push(r * vol);
                }
            }
        }
    }
    if positions.is_empty() {
        return Err(MacroError::EmptyDensity { floor: opts.mass_floor });
    }
    let mut cloud = MarkerCloud::new(positions, weights, opts.blob_factor * h, opts);
    cloud.spacing = h;
    Ok(cloud)
}

/// Velocity at the absolute position `x`.
pub fn blob_velocity(cloud: &MarkerCloud, x: Vec3) -> Vec3 {
    let rel = x - cloud.offset();
    let eps2 = cloud.blob_width * cloud.blob_width;
    let mut acc = Vec3::ZERO;
    for (&p, &w) in cloud.rel_positions.iter().zip(&cloud.weights) {
        acc += cloud.kernel.apply(rel - p, cloud.drive, eps2) * w;
    }
    acc + cloud.drift()
}

/// Pair-symmetric blob sums at the markers; the kernel is even.
fn collective_at_markers(pos: &[Vec3], w: &[f64], kernel: BlobKernel, e: Vec3, eps: f64) -> Vec<Vec3> {
    let n = pos.len();
    let eps2 = eps * eps;
    let own = kernel.self_term(e, eps);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut a = own * w[i];
                for j in 0..n {
                    if j != i {
                        a += kernel.apply(pos[i] - pos[j], e, eps2) * w[j];
                    }
                }
                a
            })
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut acc: Vec<Vec3> = w.iter().map(|&wi| own * wi).collect();
        for i in 0..n {
            let xi = pos[i];
            let wi = w[i];
            let mut ai = Vec3::ZERO;
            for j in i + 1..n {
                let k = kernel.apply(xi - pos[j], e, eps2);
                ai += k * w[j];
                acc[j] += k * wi;
            }
            acc[i] += ai;
        }
        acc
    }
}

/// Advance one step. Only the collective velocity moves the relative
/// positions; the drift enters through the elapsed time.
pub fn step_macro(cloud: &MarkerCloud, dt: f64, scheme: TimeScheme) -> Result<MarkerCloud, MacroError> {
    let mut next = cloud.clone();
    advance(&mut next, dt, scheme)?;
    Ok(next)
}

pub fn advance(cloud: &mut MarkerCloud, dt: f64, scheme: TimeScheme) -> Result<(), MacroError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(MacroError::InvalidParameter { name: "dt", value: dt });
    }
    let v0 = cloud.collective_velocities();
    let new: Vec<Vec3> = match scheme {
        TimeScheme::Euler => cloud.rel_positions.iter().zip(&v0).map(|(&x, &v)| x + v * dt).collect(),
        TimeScheme::Rk2 => {
            let pred: Vec<Vec3> = cloud.rel_positions.iter().zip(&v0).map(|(&x, &v)| x + v * dt).collect();
            let v1 = collective_at_markers(&pred, &cloud.weights, cloud.kernel, cloud.drive, cloud.blob_width);
            cloud
                .rel_positions
                .iter()
                .zip(v0.iter().zip(&v1))
                .map(|(&x, (&a, &b))| x + (a + b) * (0.5 * dt))
                .collect()
        }
    };
    cloud.rel_positions = new;
    cloud.elapsed += dt;
    Ok(())
}

/// Advance to each of the increasing `times`, calling `observe` on arrival.
/// Steps never exceed `dt_max` and land exactly on the requested times.
pub fn evolve(
    cloud: &mut MarkerCloud,
    times: &[f64],
    dt_max: f64,
    scheme: TimeScheme,
    mut observe: impl FnMut(&MarkerCloud),
) -> Result<usize, MacroError> {
    if !(dt_max > 0.0) {
        return Err(MacroError::InvalidParameter {
            name: "dt_max",
            value: dt_max,
        });
    }
    let mut steps = 0;
    for &target in times {
        let span = target - cloud.elapsed;
        if span < -1e-12 * target.abs().max(1.0) {
            return Err(MacroError::InvalidParameter {
                name: "time",
                value: target,
            });
        }
        if span > 0.0 {
            let n = math::ceil(span / dt_max - 1e-9).max(1.0) as usize;
            let start = cloud.elapsed;
            for k in 1..=n {
                let t_k = if k == n { target } else { start + span * k as f64 / n as f64 };
                advance(cloud, t_k - cloud.elapsed, scheme)?;
                cloud.elapsed = t_k;
                steps += 1;
            }
        }
        observe(cloud);
    }
    Ok(steps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroRunConfig {
    pub t_final: f64,
    pub snapshot_interval: f64,
    pub dt_max: f64,
    pub scheme: TimeScheme,
}

impl MacroRunConfig {
    pub fn new(t_final: f64, dt_max: f64) -> Self {
        Self {
            t_final,
            snapshot_interval: t_final / 50.0,
            dt_max,
            scheme: TimeScheme::Rk2,
        }
    }

    /// Snapshot times `0, dt_s, 2 dt_s, ..., t_final`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut times = Vec::new();
        let mut k = 0usize;
        loop {
            let t = k as f64 * self.snapshot_interval;
            if t >= self.t_final * (1.0 - 1e-12) {
                break;
            }
            times.push(t);
            k += 1;
        }
        times.push(self.t_final);
        times
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroSnapshot {
    pub time: f64,
    pub grid: DensityGrid,
    pub marker_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroRun {
    pub snapshots: Vec<MacroSnapshot>,
    pub cloud: MarkerCloud,
    pub steps: usize,
}

/// Evolve and deposit the markers on `grid` by the centre rule at every
/// snapshot time.
pub fn run_macro(cloud: &MarkerCloud, cfg: &MacroRunConfig, grid: CubeGrid) -> Result<MacroRun, MacroError> {
    if !(cfg.t_final > 0.0) || !(cfg.snapshot_interval > 0.0) {
        return Err(MacroError::InvalidParameter {
            name: "t_final",
            value: cfg.t_final,
        });
    }
    let mut cloud = cloud.clone();
    let mut snapshots = Vec::new();
    let steps = evolve(&mut cloud, &cfg.snapshot_times(), cfg.dt_max, cfg.scheme, |c| {
        snapshots.push(MacroSnapshot {
            time: c.elapsed(),
            grid: deposit(grid, &c.positions(), c.weights()),
            marker_mass: c.total_mass(),
        });
    })?;
    Ok(MacroRun { snapshots, cloud, steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropParams {
    pub radius: f64,
    pub amplitude: f64,
    pub h: f64,
    pub blob_factor: f64,
    /// Duration in transit times `a / |v_center|`.
    pub transits: f64,
    pub dt_max: f64,
    pub kernel: BlobKernel,
    /// Edge of the cubes the markers are deposited on.
    pub deposit_delta: f64,
    /// Number of equally spaced deposition snapshots after the start.
    pub snapshots: usize,
}

impl Default for DropParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            amplitude: 1.0,
            h: 0.05,
            blob_factor: 2.0,
            transits: 1.0,
            dt_max: 0.6,
            kernel: BlobKernel::Regularized,
            deposit_delta: 0.5,
            snapshots: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropReport {
    pub markers: usize,
    /// Collective velocity at the initial centre (drift removed).
    pub center_velocity: Vec3,
    /// `amplitude a^2 / 3 |e|`.
    pub center_oracle: f64,
    pub center_rel_error: f64,
    /// Mean collective velocity of all markers over the run.
    pub centroid_velocity: Vec3,
    pub transit_time: f64,
    /// RMS over initial-boundary markers of the change in distance to the
    /// centroid, relative to `a`.
    pub boundary_rms: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// Largest relative change of the deposited grid mass.
    pub grid_mass_drift: f64,
    /// Largest relative change of the deposited grid maximum.
    pub linf_variation: f64,
    pub steps: usize,
}

/// Uniform ball with zero settling drift, evolved over the requested number
/// of transit times.
pub fn uniform_ball_drop_report(p: &DropParams) -> Result<DropReport, MacroError> {
    let rho = AnalyticDensity::with_amplitude(DensityShape::UniformBall { radius: p.radius }, p.amplitude);
    let opts = MarkerOptions {
        blob_factor: p.blob_factor,
        xi_star: 0.0,
        kernel: p.kernel,
        ..MarkerOptions::default()
    };
    let mut cloud = init_markers(&rho, p.h, &opts)?;
    let e = cloud.drive;
    let center_velocity = blob_velocity(&cloud, rho.center) - cloud.drift();
    let center_oracle = p.amplitude * p.radius * p.radius / 3.0 * e.norm();
    let center_rel_error = (center_velocity - e * (center_oracle / e.norm())).norm() / center_oracle;
    let transit_time = p.radius / center_velocity.norm();

    let initial = cloud.positions();
    let c0 = centroid(&initial, cloud.weights());
    let boundary: Vec<usize> = (0..initial.len())
        .filter(|&i| (initial[i] - rho.center).norm() > p.radius - p.h)
        .collect();
    let mass_initial = cloud.total_mass();
    let t_end = p.transits * transit_time;
    let grid = CubeGrid::new(p.deposit_delta);
    let depose = |c: &MarkerCloud| deposit_cells(grid, &c.positions(), c.weights(), p.h);
    let g0 = depose(&cloud).map_err(|_| MacroError::InvalidParameter {
        name: "deposit_delta",
        value: p.deposit_delta,
    })?;
    let (m0, l0) = (g0.total_mass(), g0.max_value());
    let times: Vec<f64> = (1..=p.snapshots.max(1))
        .map(|k| t_end * k as f64 / p.snapshots.max(1) as f64)
        .collect();
    let (mut grid_mass_drift, mut linf_variation) = (0.0f64, 0.0f64);
    let steps = evolve(&mut cloud, &times, p.dt_max, TimeScheme::Rk2, |c| {
        if let Ok(g) = depose(c) {
            grid_mass_drift = grid_mass_drift.max((g.total_mass() - m0).abs() / m0);
            linf_variation = linf_variation.max((g.max_value() - l0).abs() / l0);
        }
    })?;
    let fin = cloud.positions();
    let c1 = centroid(&fin, cloud.weights());
    let mut ss = 0.0;
    for &i in &boundary {
        let d = (fin[i] - c1).norm() - (initial[i] - c0).norm();
        ss += d * d;
    }
    let boundary_rms = math::sqrt(ss / boundary.len() as f64) / p.radius;
    Ok(DropReport {
        markers: cloud.len(),
        center_velocity,
        center_oracle,
        center_rel_error,
        centroid_velocity: (c1 - c0) / t_end,
        transit_time,
        boundary_rms,
        mass_initial,
        mass_final: cloud.total_mass(),
        grid_mass_drift,
        linf_variation,
        steps,
    })
}

pub fn centroid(points: &[Vec3], weights: &[f64]) -> Vec3 {
    let mut acc = Vec3::ZERO;
    let mut m = 0.0;
    for (&p, &w) in points.iter().zip(weights) {
        acc += p * w;
        m += w;
    }
    acc / m
}
