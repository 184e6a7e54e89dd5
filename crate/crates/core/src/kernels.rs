//! Closed-form Stokes kernels and sphere surface averages.
//!
//! All fields are solutions of the steady Stokes equations with unit
//! viscosity. Gradients use the convention `g[i][k] = d u_i / d x_k`.
//!
//! Every Stokes velocity field is biharmonic, so its mean over a sphere of
//! radius `rho` centred at `c` equals `u(c) + rho^2/6 * lap u(c)`. The
//! analytic surface means below are built on that identity; the quadrature
//! routines compute the same means numerically.

use crate::linalg::{Mat3, Vec3};
use crate::math::{self, PI};
use crate::quadrature::lebedev_50;

/// Smallest separation accepted by singular kernels.
pub const DEFAULT_SEPARATION_FLOOR: f64 = 1e-14;

/// Relative slack admitting points on the sphere surface up to rounding.
const SURFACE_SLACK: f64 = 1e-12;

const INV_8PI: f64 = 1.0 / (8.0 * PI);
const INV_24PI: f64 = 1.0 / (24.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("separation {distance:e} is below the floor {floor:e}")]
    ZeroSeparation { distance: f64, floor: f64 },
    #[error("point at distance {distance} from the centre lies inside the sphere of radius {radius}")]
    InsideSphere { distance: f64, radius: f64 },
    #[error("field evaluation failed at quadrature node {node}")]
    QuadratureFailure { node: usize },
}

/// Mean velocity and mean velocity gradient over a sphere surface.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FaxenMoments {
    pub velocity: Vec3,
    pub gradient: Mat3,
}

impl FaxenMoments {
    pub const ZERO: FaxenMoments = FaxenMoments {
        velocity: Vec3::ZERO,
        gradient: Mat3::ZERO,
    };
}

impl core::ops::AddAssign for FaxenMoments {
    #[inline(always)]
    fn add_assign(&mut self, o: FaxenMoments) {
        self.velocity += o.velocity;
        self.gradient += o.gradient;
    }
}

impl core::ops::Add for FaxenMoments {
    type Output = FaxenMoments;
    fn add(mut self, o: FaxenMoments) -> FaxenMoments {
        self += o;
        self
    }
}

/// Oseen tensor `(I/r + x x^T/r^3) / (8 pi)`.
pub fn oseen_tensor(x: Vec3) -> Result<Mat3, KernelError> {
    oseen_tensor_with_floor(x, DEFAULT_SEPARATION_FLOOR)
}

pub fn oseen_tensor_with_floor(x: Vec3, floor: f64) -> Result<Mat3, KernelError> {
    let r = x.norm();
    if !(r >= floor) {
        return Err(KernelError::ZeroSeparation { distance: r, floor });
    }
    let inv_r = 1.0 / r;
    let inv_r3 = inv_r * inv_r * inv_r;
    let mut m = Mat3::outer(x, x).scale(inv_r3);
    for i in 0..3 {
        m.m[i][i] += inv_r;
    }
    Ok(m.scale(INV_8PI))
}

// Building blocks, written without the 1/(8 pi) prefactor.

/// Stokeslet `F/r + (y.F) y / r^3`.
#[inline(always)]
fn stokeslet(y: Vec3, f: Vec3, inv_r: f64) -> Vec3 {
    let inv_r3 = inv_r * inv_r * inv_r;
    f * inv_r + y * (y.dot(f) * inv_r3)
}

/// Potential dipole `F/r^3 - 3 (y.F) y / r^5`.
#[inline(always)]
fn potential_dipole(y: Vec3, f: Vec3, inv_r: f64) -> Vec3 {
    let inv_r2 = inv_r * inv_r;
    let inv_r3 = inv_r2 * inv_r;
    f * inv_r3 - y * (3.0 * y.dot(f) * inv_r3 * inv_r2)
}

#[inline(always)]
fn stokeslet_gradient(y: Vec3, f: Vec3, inv_r: f64) -> Mat3 {
    let inv_r2 = inv_r * inv_r;
    let inv_r3 = inv_r2 * inv_r;
    let yf = y.dot(f);
    let mut g = Mat3::ZERO;
    for i in 0..3 {
        for k in 0..3 {
            let d = if i == k { yf } else { 0.0 };
            g.m[i][k] = (-f[i] * y[k] + f[k] * y[i] + d) * inv_r3 - 3.0 * yf * y[i] * y[k] * inv_r3 * inv_r2;
        }
    }
    g
}

#[inline(always)]
fn potential_dipole_gradient(y: Vec3, f: Vec3, inv_r: f64) -> Mat3 {
    let inv_r2 = inv_r * inv_r;
    let inv_r5 = inv_r2 * inv_r2 * inv_r;
    let inv_r7 = inv_r5 * inv_r2;
    let yf = y.dot(f);
    let mut g = Mat3::ZERO;
    for i in 0..3 {
        for k in 0..3 {
            let d = if i == k { yf } else { 0.0 };
            g.m[i][k] = -3.0 * (f[i] * y[k] + f[k] * y[i] + d) * inv_r5 + 15.0 * yf * y[i] * y[k] * inv_r7;
        }
    }
    g
}

/// Mean over a sphere centred at `source + y` of the field of a sphere with
/// force `f` at `source`. `a2` is the sum of the squared source and target radii.
#[inline(always)]
pub(crate) fn monopole_mean(y: Vec3, f: Vec3, a2: f64) -> FaxenMoments {
    let inv_r2 = 1.0 / y.norm_sq();
    let inv_r = math::sqrt(inv_r2);
    let s3 = inv_r * inv_r2 * INV_8PI;
    let c = a2 * INV_24PI;
    let d5 = c * inv_r * inv_r2 * inv_r2;
    let yf = y.dot(f);
    let velocity = f * (inv_r * INV_8PI + c * inv_r * inv_r2) + y * (yf * (s3 - 3.0 * d5));
    // grad = alpha I + beta f y^T + gamma y f^T + eta y y^T
    let alpha = yf * (s3 - 3.0 * d5);
    let beta = -s3 - 3.0 * d5;
    let gamma = s3 - 3.0 * d5;
    let eta = yf * inv_r2 * (-3.0 * s3 + 15.0 * d5);
    let mut g = Mat3::ZERO;
    for i in 0..3 {
        let bf = beta * f[i];
        let gy = gamma * y[i];
        let ey = eta * y[i];
        for k in 0..3 {
            g.m[i][k] = bf * y[k] + gy * f[k] + ey * y[k];
        }
        g.m[i][i] += alpha;
    }
    FaxenMoments { velocity, gradient: g }
}

/// Field of a rigid sphere translating under force `force`:
/// `(1 + R^2/6 lap) Phi F` outside and `F / (6 pi R)` inside.
/// A zero radius gives the bare Stokeslet `Phi F`.
pub fn translating_sphere_field(center: Vec3, radius: f64, force: Vec3, x: Vec3) -> Result<Vec3, KernelError> {
    let y = x - center;
    let r = y.norm();
    if radius > 0.0 && r <= radius {
        return Ok(force / (6.0 * PI * radius));
    }
    if !(r >= DEFAULT_SEPARATION_FLOOR) {
        return Err(KernelError::ZeroSeparation {
            distance: r,
            floor: DEFAULT_SEPARATION_FLOOR,
        });
    }
    let inv_r = 1.0 / r;
    Ok(stokeslet(y, force, inv_r) * INV_8PI + potential_dipole(y, force, inv_r) * (radius * radius * INV_24PI))
}

/// Gradient of [`translating_sphere_field`]; zero inside the sphere.
pub fn translating_sphere_gradient(center: Vec3, radius: f64, force: Vec3, x: Vec3) -> Result<Mat3, KernelError> {
    let y = x - center;
    let r = y.norm();
    if radius > 0.0 && r <= radius {
        return Ok(Mat3::ZERO);
    }
    if !(r >= DEFAULT_SEPARATION_FLOOR) {
        return Err(KernelError::ZeroSeparation {
            distance: r,
            floor: DEFAULT_SEPARATION_FLOOR,
        });
    }
    let inv_r = 1.0 / r;
    Ok(stokeslet_gradient(y, force, inv_r).scale(INV_8PI)
        + potential_dipole_gradient(y, force, inv_r).scale(radius * radius * INV_24PI))
}

/// Split of a matrix `L` into trace, rotation and traceless strain parts:
/// `L = t I + [w]_x + E`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearParts {
    /// `tr L / 3`.
    pub dilation: f64,
    /// Axial vector of the antisymmetric part, `Omega y = w x y`.
    pub rotation: Vec3,
    /// Symmetric traceless part.
    pub strain: Mat3,
}

impl LinearParts {
    pub fn from_matrix(l: &Mat3) -> Self {
        let m = &l.m;
        let t = l.trace() / 3.0;
        let rotation = Vec3::new(
            0.5 * (m[2][1] - m[1][2]),
            0.5 * (m[0][2] - m[2][0]),
            0.5 * (m[1][0] - m[0][1]),
        );
        let mut strain = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                strain.m[i][j] = 0.5 * (m[i][j] + m[j][i]);
            }
            strain.m[i][i] -= t;
        }
        Self {
            dilation: t,
            rotation,
            strain,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.dilation == 0.0 && self.rotation == Vec3::ZERO && self.strain == Mat3::ZERO
    }
}

/// Velocity and gradient of the exterior field with boundary trace `-L y` on
/// a sphere of radius `radius`, averaged over a disjoint target sphere of
/// radius `target_radius` centred at offset `y` from the source centre.
/// A zero target radius gives point values.
#[inline(always)]
pub(crate) fn correction_mean(y: Vec3, parts: &LinearParts, radius: f64, target_radius: f64) -> FaxenMoments {
    let r2s = radius * radius;
    let r3 = r2s * radius;
    let b = r3 * (r2s + (5.0 / 3.0) * target_radius * target_radius);
    correction_moments(y, parts, r3, b, &InversePowers::new(y))
}

/// Means at both ends of a pair of equal spheres separated by `y = x_i - x_j`:
/// the field of `parts_j` over sphere `i`, and of `parts_i` over sphere `j`.
#[inline(always)]
pub(crate) fn correction_mean_pair(
    y: Vec3,
    parts_j: &LinearParts,
    parts_i: &LinearParts,
    radius: f64,
) -> (FaxenMoments, FaxenMoments) {
    let r2s = radius * radius;
    let r3 = r2s * radius;
    let b = r3 * r2s * (8.0 / 3.0);
    let inv = InversePowers::new(y);
    let at_i = correction_moments(y, parts_j, r3, b, &inv);
    // Velocities are odd in the separation and gradients even.
    let mut at_j = correction_moments(y, parts_i, r3, b, &inv);
    at_j.velocity = -at_j.velocity;
    (at_i, at_j)
}

struct InversePowers {
    r3: f64,
    r5: f64,
    r7: f64,
    r9: f64,
}

impl InversePowers {
    #[inline(always)]
    fn new(y: Vec3) -> Self {
        let inv_r2 = 1.0 / y.norm_sq();
        let r3 = math::sqrt(inv_r2) * inv_r2;
        let r5 = r3 * inv_r2;
        let r7 = r5 * inv_r2;
        Self {
            r3,
            r5,
            r7,
            r9: r7 * inv_r2,
        }
    }
}

// u = -t R^3 y/r^3 - R^3 (w x y)/r^3 - 5/2 R^3 y q/r^5 - b/2 (2 E y/r^5 - 5 y q/r^7)
// grad u = A I + B E + C [w]x + D y y^T + P y (Ey)^T + Q (Ey) y^T + S (w x y) y^T
#[inline(always)]
fn correction_moments(y: Vec3, parts: &LinearParts, r3: f64, b: f64, inv: &InversePowers) -> FaxenMoments {
    let t = parts.dilation;
    let w = parts.rotation;
    let e = &parts.strain;
    let ey = e.mul_vec(y);
    let q = y.dot(ey);
    let wy = w.cross(y);

    let cs = -t * r3;
    let cr = -r3;
    let ct = -2.5 * r3;
    let cq = -0.5 * b;

    let velocity = y * (cs * inv.r3 + ct * q * inv.r5 - 5.0 * cq * q * inv.r7) + wy * (cr * inv.r3) + ey * (2.0 * cq * inv.r5);

    let ca = cs * inv.r3 + ct * q * inv.r5 - 5.0 * cq * q * inv.r7;
    let cb = 2.0 * cq * inv.r5;
    let cc = cr * inv.r3;
    let cd = -3.0 * cs * inv.r5 - 5.0 * ct * q * inv.r7 + 35.0 * cq * q * inv.r9;
    let cp = 2.0 * ct * inv.r5 - 10.0 * cq * inv.r7;
    let cqq = -10.0 * cq * inv.r7;
    let cw = -3.0 * cr * inv.r5;
    let wx = [[0.0, -w.z, w.y], [w.z, 0.0, -w.x], [-w.y, w.x, 0.0]];
    let mut g = Mat3::ZERO;
    for i in 0..3 {
        let row_y = cd * y[i];
        let row_p = cp * y[i];
        let row_q = cqq * ey[i] + cw * wy[i];
        for k in 0..3 {
            g.m[i][k] = cb * e.m[i][k] + cc * wx[i][k] + row_y * y[k] + row_p * ey[k] + row_q * y[k];
        }
        g.m[i][i] += ca;
    }
    FaxenMoments { velocity, gradient: g }
}

/// Exterior Stokes field whose trace on the sphere `|x - center| = radius`
/// equals `-L (x - center)` and which decays at infinity.
pub fn linear_correction_field(center: Vec3, radius: f64, l: &Mat3, x: Vec3) -> Result<Vec3, KernelError> {
    let y = x - center;
    let r = y.norm();
    if r < radius * (1.0 - SURFACE_SLACK) {
        return Err(KernelError::InsideSphere { distance: r, radius });
    }
    Ok(correction_mean(y, &LinearParts::from_matrix(l), radius, 0.0).velocity)
}

pub fn linear_correction_gradient(center: Vec3, radius: f64, l: &Mat3, x: Vec3) -> Result<Mat3, KernelError> {
    let y = x - center;
    let r = y.norm();
    if r < radius * (1.0 - SURFACE_SLACK) {
        return Err(KernelError::InsideSphere { distance: r, radius });
    }
    Ok(correction_mean(y, &LinearParts::from_matrix(l), radius, 0.0).gradient)
}

/// One particle's contribution: a translating-sphere monopole plus the
/// linear correction with coefficient `linear_coeff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSingularity {
    pub center: Vec3,
    pub radius: f64,
    pub monopole: Vec3,
    pub linear_coeff: Mat3,
}

impl SphereSingularity {
    pub fn new(center: Vec3, radius: f64, monopole: Vec3) -> Self {
        Self {
            center,
            radius,
            monopole,
            linear_coeff: Mat3::ZERO,
        }
    }
}

/// A velocity field that can be sampled pointwise.
pub trait VelocityField {
    fn velocity(&self, x: Vec3) -> Result<Vec3, KernelError>;
    fn gradient(&self, x: Vec3) -> Result<Mat3, KernelError>;

    /// Closed-form surface moments over the sphere `(center, radius)`, if known.
    fn analytic_surface_mean(&self, _center: Vec3, _radius: f64) -> Option<FaxenMoments> {
        None
    }
}

impl VelocityField for SphereSingularity {
    /// Inside the sphere the field continues as the rigid-plus-linear motion
    /// `F/(6 pi R) - L y`, which matches the exterior trace.
    fn velocity(&self, x: Vec3) -> Result<Vec3, KernelError> {
        let y = x - self.center;
        if y.norm() <= self.radius {
            return Ok(self.monopole / (6.0 * PI * self.radius) - self.linear_coeff.mul_vec(y));
        }
        Ok(translating_sphere_field(self.center, self.radius, self.monopole, x)?
            + linear_correction_field(self.center, self.radius, &self.linear_coeff, x)?)
    }

    fn gradient(&self, x: Vec3) -> Result<Mat3, KernelError> {
        let y = x - self.center;
        if y.norm() <= self.radius {
            return Ok(-self.linear_coeff);
        }
        Ok(translating_sphere_gradient(self.center, self.radius, self.monopole, x)?
            + linear_correction_gradient(self.center, self.radius, &self.linear_coeff, x)?)
    }

    fn analytic_surface_mean(&self, center: Vec3, radius: f64) -> Option<FaxenMoments> {
        let y = center - self.center;
        if !(y.norm() > self.radius + radius) {
            return None;
        }
        let mono = monopole_mean(y, self.monopole, self.radius * self.radius + radius * radius);
        let corr = correction_mean(y, &LinearParts::from_matrix(&self.linear_coeff), self.radius, radius);
        Some(mono + corr)
    }
}

/// Point force `force` at `position` (a translating sphere of zero radius).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stokeslet {
    pub position: Vec3,
    pub force: Vec3,
}

impl VelocityField for Stokeslet {
    fn velocity(&self, x: Vec3) -> Result<Vec3, KernelError> {
        translating_sphere_field(self.position, 0.0, self.force, x)
    }

    fn gradient(&self, x: Vec3) -> Result<Mat3, KernelError> {
        translating_sphere_gradient(self.position, 0.0, self.force, x)
    }

    fn analytic_surface_mean(&self, center: Vec3, radius: f64) -> Option<FaxenMoments> {
        let y = center - self.position;
        if !(y.norm() > radius) {
            return None;
        }
        Some(monopole_mean(y, self.force, radius * radius))
    }
}

/// Affine field `u(x) = constant + matrix (x - origin)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearField {
    pub origin: Vec3,
    pub constant: Vec3,
    pub matrix: Mat3,
}

impl VelocityField for LinearField {
    fn velocity(&self, x: Vec3) -> Result<Vec3, KernelError> {
        Ok(self.constant + self.matrix.mul_vec(x - self.origin))
    }

    fn gradient(&self, _x: Vec3) -> Result<Mat3, KernelError> {
        Ok(self.matrix)
    }

    fn analytic_surface_mean(&self, center: Vec3, _radius: f64) -> Option<FaxenMoments> {
        Some(FaxenMoments {
            velocity: self.constant + self.matrix.mul_vec(center - self.origin),
            gradient: self.matrix,
        })
    }
}

/// Field given by a closure; only quadrature means are available.
pub struct FnField<V, G> {
    pub velocity: V,
    pub gradient: G,
}

impl<V, G> VelocityField for FnField<V, G>
where
    V: Fn(Vec3) -> Vec3,
    G: Fn(Vec3) -> Mat3,
{
    fn velocity(&self, x: Vec3) -> Result<Vec3, KernelError> {
        Ok((self.velocity)(x))
    }

    fn gradient(&self, x: Vec3) -> Result<Mat3, KernelError> {
        Ok((self.gradient)(x))
    }
}

/// Surface mean of `field` over the sphere `(center, radius)`. Uses the
/// closed form when the field provides one and quadrature otherwise.
pub fn faxen_surface_average<F: VelocityField + ?Sized>(field: &F, center: Vec3, radius: f64) -> Result<Vec3, KernelError> {
    match field.analytic_surface_mean(center, radius) {
        Some(m) => Ok(m.velocity),
        None => quadrature_surface_average(field, center, radius),
    }
}

/// Surface mean of the gradient of `field` over the sphere `(center, radius)`.
pub fn faxen_surface_gradient<F: VelocityField + ?Sized>(field: &F, center: Vec3, radius: f64) -> Result<Mat3, KernelError> {
    match field.analytic_surface_mean(center, radius) {
        Some(m) => Ok(m.gradient),
        None => quadrature_surface_gradient(field, center, radius),
    }
}

/// Lebedev-50 surface mean of the velocity.
pub fn quadrature_surface_average<F: VelocityField + ?Sized>(field: &F, center: Vec3, radius: f64) -> Result<Vec3, KernelError> {
    let mut acc = Vec3::ZERO;
    for (k, node) in lebedev_50().iter().enumerate() {
        let v = field
            .velocity(center + node.direction * radius)
            .map_err(|_| KernelError::QuadratureFailure { node: k })?;
        if !v.is_finite() {
            return Err(KernelError::QuadratureFailure { node: k });
        }
        acc += v * node.weight;
    }
    Ok(acc)
}

/// Lebedev-50 surface mean of the velocity gradient.
pub fn quadrature_surface_gradient<F: VelocityField + ?Sized>(field: &F, center: Vec3, radius: f64) -> Result<Mat3, KernelError> {
    let mut acc = Mat3::ZERO;
    for (k, node) in lebedev_50().iter().enumerate() {
        let g = field
            .gradient(center + node.direction * radius)
            .map_err(|_| KernelError::QuadratureFailure { node: k })?;
        if !g.is_finite() {
            return Err(KernelError::QuadratureFailure { node: k });
        }
        acc += g.scale(node.weight);
    }
    Ok(acc)
}

/// Lebedev-50 surface mean of an arbitrary vector-valued closure.
pub fn quadrature_surface_average_fn(f: impl Fn(Vec3) -> Vec3, center: Vec3, radius: f64) -> Result<Vec3, KernelError> {
    let mut acc = Vec3::ZERO;
    for (k, node) in lebedev_50().iter().enumerate() {
        let v = f(center + node.direction * radius);
        if !v.is_finite() {
            return Err(KernelError::QuadratureFailure { node: k });
        }
        acc += v * node.weight;
    }
    Ok(acc)
}
