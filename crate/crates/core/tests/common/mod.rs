//! Independent oracles shared by the oracle tests and the acceptance suite.
#![allow(dead_code)]

use std::f64::consts::TAU;

use surfnitsche::geometry::{torus_embed, ToroidalCoords, TorusParams};
use surfnitsche::problem::ManufacturedProblem;
use surfnitsche::Vec3;

/// Minimizes `f` over a 2-D box by repeated grid sampling around the best sample.
pub fn zoom_minimize_2d(f: impl Fn(f64, f64) -> f64, mut center: (f64, f64), mut half: (f64, f64)) -> (f64, f64) {
    let n = 40;
    for _ in 0..60 {
        let mut best = (center, f64::INFINITY);
        for i in 0..=n {
            for j in 0..=n {
                let a = center.0 - half.0 + 2.0 * half.0 * i as f64 / n as f64;
                let b = center.1 - half.1 + 2.0 * half.1 * j as f64 / n as f64;
                let v = f(a, b);
                if v < best.1 {
                    best = ((a, b), v);
                }
            }
        }
        center = best.0;
        half = (half.0 * 0.25, half.1 * 0.25);
    }
    center
}

/// Nearest torus point by dense parameter sampling followed by zooming.
pub fn sampled_closest_point(x: &Vec3) -> Vec3 {
    let t = TorusParams::default();
    let d2 = |th: f64, ph: f64| (torus_embed(ToroidalCoords::new(th, ph), &t) - x).norm_squared();
    let n = 256;
    let mut best = ((0.0, 0.0), f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            let (th, ph) = (TAU * i as f64 / n as f64, TAU * j as f64 / n as f64);
            let v = d2(th, ph);
            if v < best.1 {
                best = ((th, ph), v);
            }
        }
    }
    let step = TAU / n as f64;
    let rough = zoom_minimize_2d(d2, best.0, (step, step));
    // the squared distance is too flat at its minimum to locate the foot point
    // beyond about 1e-8; finish on the tangential part of x − X, whose
    // minimum is a root
    let embed = |th: f64, ph: f64| torus_embed(ToroidalCoords::new(th, ph), &t);
    // fourth-order differences keep both truncation and cancellation near 1e-13
    let diff = |f: &dyn Fn(f64) -> Vec3| {
        let h = 1e-3;
        (f(-2.0 * h) - f(2.0 * h)) + (f(h) - f(-h)) * 8.0
    };
    let tangential = |th: f64, ph: f64| {
        let d_th = diff(&|e| embed(th + e, ph));
        let d_ph = diff(&|e| embed(th, ph + e));
        let r = x - embed(th, ph);
        (r.dot(&d_th) / d_th.norm()).powi(2) + (r.dot(&d_ph) / d_ph.norm()).powi(2)
    };
    let (th, ph) = zoom_minimize_2d(tangential, rough, (1e-6, 1e-6));
    embed(th, ph)
}

/// Central differences of `Δ_Γ u` in toroidal coordinates, from the metric
/// `ds² = r² dθ² + w² dφ²` with `w = R + r cos θ`, Richardson-extrapolated
/// from steps `2⁻¹⁰` and `2⁻⁹`. Powers of two keep `θ ± h` exact. A plain
/// second-order stencil has truncation error near `1e-5` at step `1e-4` for
/// this solution, and smaller steps drown in the rounding of `5θ + 3φ`.
pub fn fd_metric_laplace_beltrami(p: &ManufacturedProblem, theta: f64, phi: f64) -> f64 {
    let u = |th: f64, ph: f64| p.exact_solution(ToroidalCoords::new(th, ph));
    let (big_r, r) = (p.torus.major, p.torus.minor);
    let w = big_r + r * theta.cos();
    let u0 = u(theta, phi);
    let stencil = |h: f64| {
        let u_tt = (u(theta + h, phi) - 2.0 * u0 + u(theta - h, phi)) / (h * h);
        let u_t = (u(theta + h, phi) - u(theta - h, phi)) / (2.0 * h);
        let u_pp = (u(theta, phi + h) - 2.0 * u0 + u(theta, phi - h)) / (h * h);
        u_tt / (r * r) - theta.sin() / (r * w) * u_t + u_pp / (w * w)
    };
    let h = 2f64.powi(-10);
    (4.0 * stencil(h) - stencil(2.0 * h)) / 3.0
}
