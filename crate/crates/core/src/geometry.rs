//! Analytic torus geometry: embedding, signed distance, closest-point map and
//! the wavy boundary curves that cut the computational band out of the torus.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Torus with center circle of radius `major` in the xy-plane and tube radius `minor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusParams {
    pub major: f64,
    pub minor: f64,
}

impl Default for TorusParams {
    fn default() -> Self {
        TorusParams { major: 1.0, minor: 0.4 }
    }
}

impl TorusParams {
    pub fn new(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && minor < major) {
            return Err(Error::InvalidArgument(format!(
                "torus radii must satisfy 0 < r < R (got R = {major}, r = {minor})"
            )));
        }
        Ok(TorusParams { major, minor })
    }
}

/// Toroidal coordinates. `theta` runs around the tube and is kept in `[0, 2π)`;
/// `phi` runs around the z-axis and is an unrestricted real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToroidalCoords {
    pub theta: f64,
    pub phi: f64,
}

impl ToroidalCoords {
    pub fn new(theta: f64, phi: f64) -> Self {
        ToroidalCoords { theta: normalize_angle(theta), phi }
    }
}

/// Maps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let t = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

pub fn torus_embed(c: ToroidalCoords, t: &TorusParams) -> Vec3 {
    let w = t.major + t.minor * c.theta.cos();
    Vec3::new(w * c.phi.cos(), w * c.phi.sin(), t.minor * c.theta.sin())
}

/// Unit vectors along the coordinate lines: `(e_theta, e_phi)`.
pub fn coordinate_frame(c: ToroidalCoords) -> (Vec3, Vec3) {
    let (st, ct) = c.theta.sin_cos();
    let (sp, cp) = c.phi.sin_cos();
    (Vec3::new(-st * cp, -st * sp, ct), Vec3::new(-sp, cp, 0.0))
}

pub fn surface_normal(c: ToroidalCoords) -> Vec3 {
    let (st, ct) = c.theta.sin_cos();
    let (sp, cp) = c.phi.sin_cos();
    Vec3::new(ct * cp, ct * sp, st)
}

fn check_off_axis(x: &Vec3, t: &TorusParams) -> Result<(f64, Vec3)> {
    let rxy = x.x.hypot(x.y);
    if rxy <= 1e-14 * t.major {
        return Err(Error::DegenerateInput(format!("point {x:?} lies on the z-axis")));
    }
    let center = Vec3::new(t.major * x.x / rxy, t.major * x.y / rxy, 0.0);
    Ok((rxy, center))
}

pub fn signed_distance(x: &Vec3, t: &TorusParams) -> Result<f64> {
    let (rxy, _) = check_off_axis(x, t)?;
    Ok((rxy - t.major).hypot(x.z) - t.minor)
}

/// Nearest point of the torus: radial projection onto the center circle,
/// then a step of length `r` toward `x` in the meridian plane.
pub fn closest_point(x: &Vec3, t: &TorusParams) -> Result<Vec3> {
    let (_, center) = check_off_axis(x, t)?;
    let d = x - center;
    let dn = d.norm();
    if dn <= 1e-14 * t.minor {
        return Err(Error::DegenerateInput(format!("point {x:?} lies on the center circle")));
    }
    Ok(center + d * (t.minor / dn))
}

/// Derivative of the closest-point map at `x`.
pub fn closest_point_jacobian(x: &Vec3, t: &TorusParams) -> Result<Matrix3<f64>> {
    let (rxy, center) = check_off_axis(x, t)?;
    let er = Vec3::new(x.x / rxy, x.y / rxy, 0.0);
    let pxy = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0));
    let dc = (pxy - er * er.transpose()) * (t.major / rxy);
    let d = x - center;
    let dn = d.norm();
    if dn <= 1e-14 * t.minor {
        return Err(Error::DegenerateInput(format!("point {x:?} lies on the center circle")));
    }
    let dh = d / dn;
    let proj = Matrix3::identity() - dh * dh.transpose();
    Ok(dc + proj * (Matrix3::identity() - dc) * (t.minor / dn))
}

/// Toroidal coordinates of a point near the torus. `phi` is returned in `(-π, π]`.
pub fn toroidal_coords(x: &Vec3, t: &TorusParams) -> Result<ToroidalCoords> {
    let (rxy, _) = check_off_axis(x, t)?;
    let phi = x.y.atan2(x.x);
    let theta = x.z.atan2(rxy - t.major);
    Ok(ToroidalCoords::new(theta, phi))
}

/// Which of the two boundary curves of the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundarySide {
    Lower,
    Upper,
}

/// Boundary curves `phi_lower(θ) = a cos(N1 θ)` and
/// `phi_upper(θ) = a cos(N2 θ) + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub amplitude: f64,
    pub n_lower: u32,
    pub n_upper: u32,
    pub offset: f64,
}

impl BoundarySpec {
    /// Wavy band with `N1 = 4`, `N2 = 3`, amplitude 0.2 and offset `0.6 · 2πR`.
    pub fn wavy(t: &TorusParams) -> Self {
        BoundarySpec { amplitude: 0.2, n_lower: 4, n_upper: 3, offset: 0.6 * TAU * t.major }
    }

    /// Same band with straight (constant-phi) boundaries.
    pub fn straight(t: &TorusParams) -> Self {
        BoundarySpec { n_lower: 0, n_upper: 0, ..Self::wavy(t) }
    }

    pub fn validate(&self) -> Result<()> {
        // phi_upper - phi_lower >= offset - 2a
        if !(self.offset > 2.0 * self.amplitude.abs()) {
            return Err(Error::InvalidArgument(format!(
                "boundary curves intersect: offset {} <= 2 * |amplitude| {}",
                self.offset, self.amplitude
            )));
        }
        if self.offset + 2.0 * self.amplitude.abs() >= TAU {
            return Err(Error::InvalidArgument("band wraps around the torus in phi".into()));
        }
        Ok(())
    }

    pub fn wave_count(&self, side: BoundarySide) -> u32 {
        match side {
            BoundarySide::Lower => self.n_lower,
            BoundarySide::Upper => self.n_upper,
        }
    }

    fn base(&self, side: BoundarySide) -> f64 {
        match side {
            BoundarySide::Lower => 0.0,
            BoundarySide::Upper => self.offset,
        }
    }

    /// `(phi, dphi/dθ, d²phi/dθ²)` of a boundary curve.
    pub fn phi_derivatives(&self, side: BoundarySide, theta: f64) -> (f64, f64, f64) {
        let n = self.wave_count(side) as f64;
        let (s, c) = (n * theta).sin_cos();
        (self.amplitude * c + self.base(side), -self.amplitude * n * s, -self.amplitude * n * n * c)
    }

    /// Mid-line of the band, used to unwrap `atan2` output onto the band.
    pub fn phi_center(&self) -> f64 {
        0.5 * self.offset
    }

    /// Representative of `phi (mod 2π)` within `π` of the band center.
    pub fn unwrap_phi(&self, phi: f64) -> f64 {
        let c = self.phi_center();
        c - PI + (phi - (c - PI)).rem_euclid(TAU)
    }
}

pub fn boundary_phi(side: BoundarySide, theta: f64, b: &BoundarySpec) -> f64 {
    b.phi_derivatives(side, theta).0
}

/// Point of a boundary curve with its first and second θ-derivatives.
pub fn boundary_curve(side: BoundarySide, theta: f64, b: &BoundarySpec, t: &TorusParams) -> (Vec3, Vec3, Vec3) {
    let (phi, dphi, ddphi) = b.phi_derivatives(side, theta);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let w = t.major + t.minor * ct;
    let dw = -t.minor * st;
    let ddw = -t.minor * ct;
    let p = Vec3::new(w * cp, w * sp, t.minor * st);
    let d1 = Vec3::new(dw * cp - w * sp * dphi, dw * sp + w * cp * dphi, t.minor * ct);
    let d2 = Vec3::new(
        ddw * cp - 2.0 * dw * sp * dphi - w * cp * dphi * dphi - w * sp * ddphi,
        ddw * sp + 2.0 * dw * cp * dphi - w * sp * dphi * dphi + w * cp * ddphi,
        -t.minor * st,
    );
    (p, d1, d2)
}

const GOLDEN_TOL: f64 = 1e-12;

/// Parameter `θ` of the point of the boundary curve nearest to `x`.
///
/// Coarse sampling brackets the global minimizer of the squared distance,
/// golden-section search narrows the bracket below `1e-12`, and a few
/// safeguarded Newton steps on the stationarity condition
/// `(c(θ) - x) · c'(θ) = 0` remove the residual error of the comparison-based
/// search.
pub fn boundary_parameter(x: &Vec3, side: BoundarySide, b: &BoundarySpec, t: &TorusParams) -> Result<f64> {
    let dist2 = |th: f64| (boundary_curve(side, th, b, t).0 - x).norm_squared();
    let samples = 64 * b.wave_count(side).max(1) as usize;
    let step = TAU / samples as f64;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..samples {
        let th = i as f64 * step;
        let d = dist2(th);
        if d < best.1 {
            best = (th, d);
        }
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (dist2(c), dist2(d));
    let mut iters = 0;
    while hi - lo > GOLDEN_TOL {
        iters += 1;
        if iters > 200 {
            return Err(Error::ProjectionNonConvergence(format!(
                "golden-section bracket {:e} after {iters} iterations",
                hi - lo
            )));
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = dist2(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = dist2(d);
        }
    }
    let mut theta = 0.5 * (lo + hi);

    for _ in 0..8 {
        let (p, d1, d2) = boundary_curve(side, theta, b, t);
        let g = (p - x).dot(&d1);
        let dg = d1.norm_squared() + (p - x).dot(&d2);
        if dg <= 0.0 {
            break;
        }
        let delta = g / dg;
        if !delta.is_finite() || delta.abs() > 1e-6 {
            break;
        }
        theta -= delta;
        if delta.abs() < 1e-15 {
            break;
        }
    }
    Ok(normalize_angle(theta))
}

/// Euclidean closest point of a boundary curve.
pub fn project_to_boundary(x: &Vec3, side: BoundarySide, b: &BoundarySpec, t: &TorusParams) -> Result<Vec3> {
    let theta = boundary_parameter(x, side, b, t)?;
    Ok(boundary_curve(side, theta, b, t).0)
}
