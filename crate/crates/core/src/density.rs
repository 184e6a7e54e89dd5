//! Analytic reference densities for initial data.

use crate::linalg::Vec3;
use crate::math::{self, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityShape {
    /// Indicator of the ball `|x| < radius`.
    UniformBall { radius: f64 },
    /// Plateau out to `radius - width`, quintic smoothstep down to zero at
    /// `radius + width`.
    MollifiedBall { radius: f64, width: f64 },
    /// Isotropic Gaussian with standard deviation `sigma`, cut at `cutoff * sigma`.
    Gaussian { sigma: f64, cutoff: f64 },
}

/// A shape scaled to a prescribed total mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticDensity {
    pub shape: DensityShape,
    /// Peak value.
    pub amplitude: f64,
    pub center: Vec3,
}

impl AnalyticDensity {
    /// Scale `shape` so the density integrates to `mass`.
    pub fn with_mass(shape: DensityShape, mass: f64) -> Self {
        let unit = Self::with_amplitude(shape, 1.0);
        Self::with_amplitude(shape, mass / unit.mass())
    }

    pub fn with_amplitude(shape: DensityShape, amplitude: f64) -> Self {
        Self {
            shape,
            amplitude,
            center: Vec3::ZERO,
        }
    }

    pub fn centered_at(mut self, center: Vec3) -> Self {
        self.center = center;
        self
    }

    pub fn uniform_ball(radius: f64, mass: f64) -> Self {
        Self::with_mass(DensityShape::UniformBall { radius }, mass)
    }

    pub fn mollified_ball(radius: f64, width: f64, mass: f64) -> Self {
        Self::with_mass(DensityShape::MollifiedBall { radius, width }, mass)
    }

    pub fn gaussian(sigma: f64, mass: f64) -> Self {
        Self::with_mass(DensityShape::Gaussian { sigma, cutoff: 6.0 }, mass)
    }

    pub fn density(&self, x: Vec3) -> f64 {
        self.amplitude * self.profile((x - self.center).norm())
    }

    /// Unscaled radial profile with maximum one.
    pub fn profile(&self, r: f64) -> f64 {
        match self.shape {
            DensityShape::UniformBall { radius } => {
                if r < radius {
                    1.0
                } else {
                    0.0
                }
            }
            DensityShape::MollifiedBall { radius, width } => {
                let t = ((radius + width - r) / (2.0 * width)).clamp(0.0, 1.0);
                t * t * t * (t * (6.0 * t - 15.0) + 10.0)
            }
            DensityShape::Gaussian { sigma, cutoff } => {
                if r > cutoff * sigma {
                    0.0
                } else {
                    math::exp(-0.5 * r * r / (sigma * sigma))
                }
            }
        }
    }

    pub fn support_radius(&self) -> f64 {
        match self.shape {
            DensityShape::UniformBall { radius } => radius,
            DensityShape::MollifiedBall { radius, width } => radius + width,
            DensityShape::Gaussian { sigma, cutoff } => cutoff * sigma,
        }
    }

    pub fn max_density(&self) -> f64 {
        self.amplitude
    }

    /// Total mass, by composite Gauss-Legendre quadrature of the radial profile.
    pub fn mass(&self) -> f64 {
        if let DensityShape::UniformBall { radius } = self.shape {
            return self.amplitude * 4.0 / 3.0 * PI * radius * radius * radius;
        }
        let rmax = self.support_radius();
        let panels = 400;
        let h = rmax / panels as f64;
        let (gx, gw) = gauss_legendre_5();
        let mut acc = 0.0;
        for p in 0..panels {
            let a = p as f64 * h;
            for (x, w) in gx.iter().zip(gw.iter()) {
                let r = a + 0.5 * h * (x + 1.0);
                acc += 0.5 * h * w * r * r * self.profile(r);
            }
        }
        self.amplitude * 4.0 * PI * acc
    }

    /// Whether the density belongs to the bounded, compactly supported,
    /// Lipschitz class assumed by the mean-field limit.
    pub fn in_regular_class(&self) -> bool {
        !matches!(self.shape, DensityShape::UniformBall { .. })
    }
}

fn gauss_legendre_5() -> ([f64; 5], [f64; 5]) {
    let a = 1.0 / 3.0 * math::sqrt(5.0 - 2.0 * math::sqrt(10.0 / 7.0));
    let b = 1.0 / 3.0 * math::sqrt(5.0 + 2.0 * math::sqrt(10.0 / 7.0));
    let wa = (322.0 + 13.0 * math::sqrt(70.0)) / 900.0;
    let wb = (322.0 - 13.0 * math::sqrt(70.0)) / 900.0;
    ([-b, -a, 0.0, a, b], [wb, wa, 128.0 / 225.0, wa, wb])
}
