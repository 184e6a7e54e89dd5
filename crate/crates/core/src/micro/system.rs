use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::diagnostics::min_distance;
use super::MicroError;
use crate::density::AnalyticDensity;
use crate::linalg::Vec3;
use crate::math::{self, PI};

/// Monodisperse suspension in rescaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    pub positions: Vec<Vec3>,
    pub radius: f64,
    /// Rescaled driving vector `e`.
    pub gravity_dir: Vec3,
    /// Separation constant: `N d_min^3 >= c0` is required.
    pub c0: f64,
    /// Spacing of the lattice the positions were generated from, if any.
    pub lattice_spacing: Option<f64>,
}

impl ParticleSystem {
    pub fn new(positions: Vec<Vec3>, radius: f64, gravity_dir: Vec3, c0: f64) -> Self {
        Self {
            positions,
            radius,
            gravity_dir,
            c0,
            lattice_spacing: None,
        }
    }

    /// System whose radius is set from `xi` through `R = 1 / (N xi^2)`.
    pub fn with_xi(positions: Vec<Vec3>, xi: f64, gravity_dir: Vec3, c0: f64) -> Self {
        let n = positions.len() as f64;
        Self::new(positions, 1.0 / (n * xi * xi), gravity_dir, c0)
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    /// Volume fraction scale `N R^3`.
    pub fn phi(&self) -> f64 {
        self.count() as f64 * self.radius * self.radius * self.radius
    }

    /// Screening parameter `1 / sqrt(N R)`.
    pub fn xi(&self) -> f64 {
        1.0 / math::sqrt(self.count() as f64 * self.radius)
    }

    /// Force on each particle, `4 pi / (3 N) e`.
    pub fn force(&self) -> Vec3 {
        self.gravity_dir * (4.0 * PI / (3.0 * self.count() as f64))
    }

    /// Speed of an isolated particle, `F / (6 pi R)`.
    pub fn single_velocity(&self) -> Vec3 {
        self.force() / (6.0 * PI * self.radius)
    }

    pub fn with_positions(&self, positions: Vec<Vec3>) -> Self {
        Self {
            positions,
            ..self.clone()
        }
    }
}

/// Settling velocity `(2/9) xi^2 e` of one isolated particle.
pub fn settling_speed_single(xi: f64, e: Vec3) -> Vec3 {
    e * (2.0 / 9.0 * xi * xi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Lattice sites nearest the origin filling the unit ball.
    UnitBall,
    /// Lattice thinned with acceptance proportional to the density.
    Density(AnalyticDensity),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigSpec {
    pub n: usize,
    pub c0: f64,
    pub xi: f64,
    pub seed: u64,
    pub domain: Domain,
    pub gravity_dir: Vec3,
    /// Jitter amplitude as a fraction of the lattice spacing.
    pub jitter: f64,
}

impl ConfigSpec {
    pub fn new(n: usize, c0: f64, xi: f64, seed: u64) -> Self {
        Self {
            n,
            c0,
            xi,
            seed,
            domain: Domain::UnitBall,
            gravity_dir: Vec3::new(0.0, 0.0, -1.0),
            jitter: 0.1,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }
}

const MAX_ATTEMPTS: usize = 1000;

// Irrational steps of the additive recurrence used for thinning keys.
const KRONECKER: [f64; 3] = [0.819_172_513_396_164_4, 0.671_043_606_703_789_2, 0.549_700_477_901_970_3];

/// Jittered cell-centred lattice `(k + 1/2) s` filling the requested domain.
pub fn generate_configuration(spec: &ConfigSpec) -> Result<ParticleSystem, MicroError> {
    if spec.n == 0 {
        return Err(MicroError::InvalidParameter { name: "n", value: 0.0 });
    }
    if !(spec.c0 > 0.0) {
        return Err(MicroError::InvalidParameter { name: "c0", value: spec.c0 });
    }
    if !(spec.xi > 0.0) || !spec.xi.is_finite() {
        return Err(MicroError::InvalidParameter { name: "xi", value: spec.xi });
    }
    if !(spec.jitter >= 0.0 && spec.jitter < 0.5) {
        return Err(MicroError::InvalidParameter {
            name: "jitter",
            value: spec.jitter,
        });
    }
    let n = spec.n;
    let radius = 1.0 / (n as f64 * spec.xi * spec.xi);
    if n == 1 {
        let mut sys = ParticleSystem::new(alloc::vec![Vec3::ZERO], radius, spec.gravity_dir, spec.c0);
        sys.lattice_spacing = None;
        return Ok(sys);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase: f64 = rng.gen();
    let (spacing, sites) = match spec.domain {
        Domain::UnitBall => {
            let s = math::cbrt(4.0 * PI / (3.0 * n as f64));
            (s, ball_sites(n, s, phase))
        }
        Domain::Density(rho) => {
            let s = math::cbrt(rho.mass() / (n as f64 * rho.max_density()));
            (s, thinned_sites(n, s, &rho, phase))
        }
    };
    if sites.len() < n {
        return Err(MicroError::InfeasibleConfig {
            reason: "density support holds too few lattice sites",
            value: sites.len() as f64,
        });
    }

    let target = math::cbrt(spec.c0 / n as f64);
    let disjoint = 4.0 * radius;
    // Jitter of amplitude a moves nearest neighbours apart by at most 2 a sqrt(3).
    let reachable = spacing * (1.0 + 2.0 * spec.jitter * math::sqrt(3.0));
    if reachable < target.max(disjoint) {
        return Err(MicroError::InfeasibleConfig {
            reason: "requested separation exceeds the lattice density",
            value: spec.c0,
        });
    }

    for attempt in 0..MAX_ATTEMPTS {
        let amp = spec.jitter * spacing * (1.0 - attempt as f64 / MAX_ATTEMPTS as f64);
        let positions: Vec<Vec3> = sites
            .iter()
            .map(|&p| {
                let d = Vec3::new(
                    rng.gen_range(-1.0..=1.0),
                    rng.gen_range(-1.0..=1.0),
                    rng.gen_range(-1.0..=1.0),
                );
                p + d * amp
            })
            .collect();
        let d = min_distance(&positions);
        if d >= target && d >= disjoint {
            let mut sys = ParticleSystem::new(positions, radius, spec.gravity_dir, spec.c0);
            sys.lattice_spacing = Some(spacing);
            return Ok(sys);
        }
    }
    Err(MicroError::InfeasibleConfig {
        reason: "separation not met within the attempt budget",
        value: spec.c0,
    })
}

fn kronecker_key(k: [i64; 3], phase: f64) -> f64 {
    math::fract(phase + k[0] as f64 * KRONECKER[0] + k[1] as f64 * KRONECKER[1] + k[2] as f64 * KRONECKER[2])
}

fn site(k: [i64; 3], s: f64) -> Vec3 {
    Vec3::new((k[0] as f64 + 0.5) * s, (k[1] as f64 + 0.5) * s, (k[2] as f64 + 0.5) * s)
}

fn lattice_box(rmax: f64, s: f64) -> impl Iterator<Item = [i64; 3]> {
    let kmax = math::ceil(rmax / s) as i64 + 1;
    (-kmax..kmax).flat_map(move |i| (-kmax..kmax).flat_map(move |j| (-kmax..kmax).map(move |k| [i, j, k])))
}

/// The `n` sites closest to the origin; ties within a shell are broken by key.
fn ball_sites(n: usize, s: f64, phase: f64) -> Vec<Vec3> {
    let rmax = 1.0 + 2.0 * s;
    let mut cand: Vec<(i64, f64, [i64; 3])> = lattice_box(rmax, s)
        .map(|k| {
            let m: i64 = k.iter().map(|&c| (2 * c + 1) * (2 * c + 1)).sum();
            (m, kronecker_key(k, phase), k)
        })
        .collect();
    cand.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    cand.truncate(n);
    cand.sort_by(|a, b| a.2.cmp(&b.2));
    cand.into_iter().map(|(_, _, k)| site(k, s)).collect()
}

/// Sites accepted with probability proportional to the density, using
/// low-discrepancy keys: the `n` smallest values of `key / p`.
fn thinned_sites(n: usize, s: f64, rho: &AnalyticDensity, phase: f64) -> Vec<Vec3> {
    let amax = rho.max_density();
    let mut cand: Vec<(f64, [i64; 3])> = lattice_box(rho.support_radius() + rho.center.max_abs(), s)
        .filter_map(|k| {
            let p = rho.density(site(k, s)) / amax;
            (p > 0.0).then(|| (kronecker_key(k, phase) / p, k))
        })
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.truncate(n);
    cand.sort_by(|a, b| a.1.cmp(&b.1));
    cand.into_iter().map(|(_, k)| site(k, s)).collect()
}

/// Diagnostic report on the standing assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    pub n: usize,
    /// Minimum pair distance, `+inf` for a single particle.
    pub d_min: f64,
    /// `N d_min^3`.
    pub separation: f64,
    pub c0: f64,
    pub phi: f64,
    pub phi_log_n: f64,
    pub xi: f64,
    /// `N d_min^3 >= c0`.
    pub separation_ok: bool,
    /// `d_min >= 4 R`.
    pub disjoint_ok: bool,
    /// Radius, positions and derived scales finite and positive.
    pub finite_ok: bool,
}

impl AssumptionReport {
    pub fn passes(&self) -> bool {
        self.separation_ok && self.disjoint_ok && self.finite_ok
    }
}

pub fn validate_assumptions(sys: &ParticleSystem) -> AssumptionReport {
    let n = sys.count();
    let d_min = min_distance(&sys.positions);
    let separation = n as f64 * d_min * d_min * d_min;
    let phi = sys.phi();
    let xi = sys.xi();
    AssumptionReport {
        n,
        d_min,
        separation,
        c0: sys.c0,
        phi,
        phi_log_n: phi * math::ln(n as f64),
        xi,
        separation_ok: separation >= sys.c0,
        disjoint_ok: d_min >= 4.0 * sys.radius,
        finite_ok: sys.radius > 0.0
            && phi.is_finite()
            && phi > 0.0
            && xi.is_finite()
            && xi > 0.0
            && sys.positions.iter().all(|p| p.is_finite()),
    }
}
