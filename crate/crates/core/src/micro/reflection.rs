//! Method of reflections for the velocities of N spheres under equal forces.
//!
//! Each particle carries a translating-sphere monopole with the fixed force
//! `F` and a linear correction `L_i` cancelling the surface-averaged gradient
//! of the field produced by all other particles. One reflection step updates
//! every `L_i` simultaneously from the previous fields. Velocities are the
//! self-mobility `F / (6 pi R)` plus the surface mean of the ambient field.

use alloc::vec;
use alloc::vec::Vec;

use super::diagnostics::{reduce_statistics, PairStatistics};
use super::{MicroError, ParticleSystem};
use crate::kernels::{correction_mean, correction_mean_pair, monopole_mean, FaxenMoments, LinearParts, SphereSingularity};
use crate::linalg::Vec3;
use crate::math::{self, PI};

/// Order of the O(N^2) ambient sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summation {
    /// Each unordered pair evaluated once, index-ascending. Deterministic.
    #[default]
    Pairwise,
    /// Each particle sums over all others. Parallel over particles when the
    /// `parallel` feature is on; results then differ from `Pairwise` at the
    /// rounding level.
    RowWise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub k_max: usize,
    /// Stopping tolerance relative to `|F| / (6 pi R)`.
    pub tol: f64,
    pub delta_threshold: f64,
    pub summation: Summation,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            k_max: 30,
            tol: 1e-10,
            delta_threshold: 0.2,
            summation: Summation::Pairwise,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionState {
    pub singularities: Vec<SphereSingularity>,
    /// `R max_i |ambient gradient_i - L_i|` (Frobenius norm).
    pub residual: f64,
    pub iteration: usize,
    pub stats: PairStatistics,
    monopole_ambient: Vec<FaxenMoments>,
    ambient: Vec<FaxenMoments>,
}

impl ReflectionState {
    /// Surface moments over each particle of the field of all other particles.
    pub fn ambient(&self) -> &[FaxenMoments] {
        &self.ambient
    }

    /// Particle velocities for the current truncation.
    pub fn velocities(&self) -> Vec<Vec3> {
        self.singularities
            .iter()
            .zip(&self.ambient)
            .map(|(s, a)| s.monopole / (6.0 * PI * s.radius) + a.velocity)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySolution {
    pub velocities: Vec<Vec3>,
    pub iterations_used: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub delta_stat: f64,
    pub alpha_stat: f64,
    pub d_min: f64,
    pub converged: bool,
}

impl VelocitySolution {
    /// Turn a non-converged solve into `MaxIterations`.
    pub fn require_converged(self) -> Result<Self, MicroError> {
        if self.converged {
            Ok(self)
        } else {
            Err(MicroError::MaxIterations {
                iterations: self.iterations_used,
                residual: self.final_residual,
            })
        }
    }
}

pub fn zeroth_field(sys: &ParticleSystem) -> ReflectionState {
    zeroth_field_with(sys, Summation::Pairwise)
}

/// State with monopoles only and zero linear coefficients.
pub fn zeroth_field_with(sys: &ParticleSystem, summation: Summation) -> ReflectionState {
    let force = sys.force();
    let radius = sys.radius;
    let (mono, stats) = monopole_pass(&sys.positions, radius, force, summation);
    let singularities = sys
        .positions
        .iter()
        .map(|&c| SphereSingularity::new(c, radius, force))
        .collect();
    let residual = radius * mono.iter().map(|m| m.gradient.frobenius_norm()).fold(0.0, f64::max);
    ReflectionState {
        singularities,
        residual,
        iteration: 0,
        stats,
        ambient: mono.clone(),
        monopole_ambient: mono,
    }
}

pub fn reflection_step(state: &ReflectionState, sys: &ParticleSystem) -> ReflectionState {
    reflection_step_with(state, sys, Summation::Pairwise)
}

/// Set every `L_i` to the current ambient gradient mean and recompute the
/// ambient field. Monopoles are untouched.
pub fn reflection_step_with(state: &ReflectionState, sys: &ParticleSystem, summation: Summation) -> ReflectionState {
    let radius = sys.radius;
    let mut singularities = state.singularities.clone();
    for (s, a) in singularities.iter_mut().zip(&state.ambient) {
        s.linear_coeff = a.gradient;
    }
    let parts: Vec<LinearParts> = singularities.iter().map(|s| LinearParts::from_matrix(&s.linear_coeff)).collect();
    let corr = correction_pass(&sys.positions, radius, &parts, summation);
    let ambient: Vec<FaxenMoments> = state.monopole_ambient.iter().zip(&corr).map(|(&m, &c)| m + c).collect();
    let residual = radius
        * ambient
            .iter()
            .zip(&singularities)
            .map(|(a, s)| (a.gradient - s.linear_coeff).frobenius_norm())
            .fold(0.0, f64::max);
    ReflectionState {
        singularities,
        residual,
        iteration: state.iteration + 1,
        stats: state.stats,
        monopole_ambient: state.monopole_ambient.clone(),
        ambient,
    }
}

/// Iterate reflections to tolerance. Hitting `k_max` is not an error: the
/// best-effort solution is returned with `converged == false`.
pub fn solve_velocities(sys: &ParticleSystem, params: &SolverParams) -> Result<VelocitySolution, MicroError> {
    if sys.positions.is_empty() || !(sys.radius > 0.0) {
        return Err(MicroError::InvalidParameter {
            name: "radius",
            value: sys.radius,
        });
    }
    let mut state = zeroth_field_with(sys, params.summation);
    if state.stats.delta >= params.delta_threshold {
        return Err(MicroError::ReflectionsDiverged {
            iteration: 0,
            delta: state.stats.delta,
            residual: state.residual,
        });
    }
    let scale = sys.force().norm() / (6.0 * PI * sys.radius);
    let target = params.tol * scale;
    let mut history = vec![state.residual];
    let mut growth = 0;
    while state.residual > target && state.iteration < params.k_max {
        let next = reflection_step_with(&state, sys, params.summation);
        if !(next.residual <= state.residual) {
            growth += 1;
            if growth >= 2 || !next.residual.is_finite() {
                return Err(MicroError::ReflectionsDiverged {
                    iteration: next.iteration,
                    delta: state.stats.delta,
                    residual: next.residual,
                });
            }
        } else {
            growth = 0;
        }
        history.push(next.residual);
        state = next;
    }
    let converged = state.residual <= target;
    Ok(VelocitySolution {
        velocities: state.velocities(),
        iterations_used: state.iteration,
        final_residual: state.residual,
        residual_history: history,
        delta_stat: state.stats.delta,
        alpha_stat: state.stats.alpha,
        d_min: state.stats.d_min,
        converged,
    })
}

/// Ambient monopole moments, fused with the pair statistics.
fn monopole_pass(pos: &[Vec3], radius: f64, force: Vec3, summation: Summation) -> (Vec<FaxenMoments>, PairStatistics) {
    let n = pos.len();
    let a2 = 2.0 * radius * radius;
    match summation {
        Summation::Pairwise => {
            let mut acc = vec![FaxenMoments::ZERO; n];
            let mut s2 = vec![0.0; n];
            let mut s3 = vec![0.0; n];
            let mut dmin2 = f64::INFINITY;
            for i in 0..n {
                let xi = pos[i];
                let mut ai = FaxenMoments::ZERO;
                let (mut s2i, mut s3i) = (0.0, 0.0);
                for j in i + 1..n {
                    let y = xi - pos[j];
                    let r2 = y.norm_sq();
                    dmin2 = dmin2.min(r2);
                    let inv2 = 1.0 / r2;
                    let inv3 = inv2 * math::sqrt(inv2);
                    s2i += inv2;
                    s3i += inv3;
                    s2[j] += inv2;
                    s3[j] += inv3;
                    let m = monopole_mean(y, force, a2);
                    ai += m;
                    acc[j].velocity += m.velocity;
                    acc[j].gradient -= m.gradient;
                }
                acc[i] += ai;
                s2[i] += s2i;
                s3[i] += s3i;
            }
            let stats = reduce_statistics(&s2, &s3, dmin2, radius);
            (acc, stats)
        }
        Summation::RowWise => {
            let row = |i: usize| {
                let xi = pos[i];
                let mut a = FaxenMoments::ZERO;
                let (mut s2, mut s3, mut d2) = (0.0, 0.0, f64::INFINITY);
                for (j, &xj) in pos.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let y = xi - xj;
                    let r2 = y.norm_sq();
                    d2 = f64::min(d2, r2);
                    let inv2 = 1.0 / r2;
                    s2 += inv2;
                    s3 += inv2 * math::sqrt(inv2);
                    a += monopole_mean(y, force, a2);
                }
                (a, s2, s3, d2)
            };
            let rows: Vec<(FaxenMoments, f64, f64, f64)> = map_rows(n, row);
            let mut acc = Vec::with_capacity(n);
            let mut s2 = Vec::with_capacity(n);
            let mut s3 = Vec::with_capacity(n);
            let mut dmin2 = f64::INFINITY;
            for (a, b, c, d) in rows {
                acc.push(a);
                s2.push(b);
                s3.push(c);
                dmin2 = dmin2.min(d);
            }
            (acc, reduce_statistics(&s2, &s3, dmin2, radius))
        }
    }
}

/// Ambient moments of the linear corrections. Velocities of the correction
/// fields are odd in the separation and gradients even.
fn correction_pass(pos: &[Vec3], radius: f64, parts: &[LinearParts], summation: Summation) -> Vec<FaxenMoments> {
    let n = pos.len();
    match summation {
        Summation::Pairwise => {
            let mut acc = vec![FaxenMoments::ZERO; n];
            for i in 0..n {
                let xi = pos[i];
                let pi = &parts[i];
                let mut ai = FaxenMoments::ZERO;
                for j in i + 1..n {
                    let (at_i, at_j) = correction_mean_pair(xi - pos[j], &parts[j], pi, radius);
                    ai += at_i;
                    acc[j] += at_j;
                }
                acc[i] += ai;
            }
            acc
        }
        Summation::RowWise => map_rows(n, |i| {
            let xi = pos[i];
            let mut a = FaxenMoments::ZERO;
            for (j, &xj) in pos.iter().enumerate() {
                if j != i {
                    a += correction_mean(xi - xj, &parts[j], radius, radius);
                }
            }
            a
        }),
    }
}

#[cfg(feature = "parallel")]
fn map_rows<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_rows<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Surface-averaged ambient gradient for particle `i` from explicit
/// singularities, by summation of closed-form means. Reference path used by
/// tests of the pair-symmetric sums.
pub fn ambient_moments_direct(singularities: &[SphereSingularity], i: usize) -> FaxenMoments {
    let target = &singularities[i];
    let mut acc = FaxenMoments::ZERO;
    for (j, s) in singularities.iter().enumerate() {
        if j == i {
            continue;
        }
        let y = target.center - s.center;
        acc += monopole_mean(y, s.monopole, s.radius * s.radius + target.radius * target.radius);
        acc += correction_mean(y, &LinearParts::from_matrix(&s.linear_coeff), s.radius, target.radius);
    }
    acc
}
