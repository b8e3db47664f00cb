//! Manufactured Dirichlet problems for `-Δ_Γ u = f` on a surface with boundary.
//!
//! Two surfaces are provided: a band cut out of a torus by two boundary curves,
//! and the unit square in the plane `z = 0`. Each problem knows its exact
//! solution, its load `f = -Δ_Γ u`, the closest-point map onto the surface and
//! onto its boundary, and a parameter chart used for structured meshing.

use std::f64::consts::TAU;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::{
    self, boundary_curve, closest_point_jacobian, coordinate_frame, surface_normal, toroidal_coords, BoundarySide,
    BoundarySpec, ToroidalCoords, TorusParams, Vec3,
};

/// Boundary curve a mesh edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Lower,
    Upper,
    Left,
    Right,
}

impl BoundaryTag {
    fn side(self) -> Option<BoundarySide> {
        match self {
            BoundaryTag::Lower => Some(BoundarySide::Lower),
            BoundaryTag::Upper => Some(BoundarySide::Upper),
            _ => None,
        }
    }
}

/// `u = cos(3φ + 5θ) sin(2θ)` on the torus band between the two boundary curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem {
    pub torus: TorusParams,
    pub boundary: BoundarySpec,
}

impl ManufacturedProblem {
    pub fn new(torus: TorusParams, boundary: BoundarySpec) -> Result<Self> {
        boundary.validate()?;
        Ok(ManufacturedProblem { torus, boundary })
    }

    /// R = 1, r = 0.4, N1 = 4, N2 = 3.
    pub fn wavy() -> Self {
        let torus = TorusParams::default();
        ManufacturedProblem { torus, boundary: BoundarySpec::wavy(&torus) }
    }

    /// Same torus band with N1 = N2 = 0.
    pub fn straight() -> Self {
        let torus = TorusParams::default();
        ManufacturedProblem { torus, boundary: BoundarySpec::straight(&torus) }
    }

    pub fn exact_solution(&self, c: ToroidalCoords) -> f64 {
        (3.0 * c.phi + 5.0 * c.theta).cos() * (2.0 * c.theta).sin()
    }

    /// `(u_θ, u_φ, u_θθ, u_φφ)`.
    fn solution_derivatives(&self, c: ToroidalCoords) -> (f64, f64, f64, f64) {
        let (sa, ca) = (3.0 * c.phi + 5.0 * c.theta).sin_cos();
        let (s2, c2) = (2.0 * c.theta).sin_cos();
        let u_t = -5.0 * sa * s2 + 2.0 * ca * c2;
        let u_p = -3.0 * sa * s2;
        let u_tt = -29.0 * ca * s2 - 20.0 * sa * c2;
        let u_pp = -9.0 * ca * s2;
        (u_t, u_p, u_tt, u_pp)
    }

    pub fn exact_surface_gradient(&self, c: ToroidalCoords) -> Vec3 {
        let (u_t, u_p, _, _) = self.solution_derivatives(c);
        let r = self.torus.minor;
        let w = self.torus.major + r * c.theta.cos();
        let (e_t, e_p) = coordinate_frame(c);
        e_t * (u_t / r) + e_p * (u_p / w)
    }

    /// `f = -Δ_Γ u` with the Laplace-Beltrami operator of the metric `r² dθ² + w² dφ²`.
    pub fn load_f(&self, c: ToroidalCoords) -> f64 {
        let (u_t, _, u_tt, u_pp) = self.solution_derivatives(c);
        let r = self.torus.minor;
        let w = self.torus.major + r * c.theta.cos();
        let lap = u_tt / (r * r) - c.theta.sin() / (r * w) * u_t + u_pp / (w * w);
        -lap
    }

    pub fn dirichlet_g(&self, x: &Vec3) -> Result<f64> {
        Ok(self.exact_solution(toroidal_coords(x, &self.torus)?))
    }

    /// Parameter chart of the band: `u ∈ [0, 1]` maps to `θ = 2πu`, `s ∈ [0, 1]`
    /// interpolates linearly between the two boundary curves.
    pub fn chart(&self, u: f64, s: f64) -> Vec3 {
        let theta = TAU * u;
        let lo = geometry::boundary_phi(BoundarySide::Lower, theta, &self.boundary);
        let hi = geometry::boundary_phi(BoundarySide::Upper, theta, &self.boundary);
        geometry::torus_embed(ToroidalCoords { theta, phi: lo + s * (hi - lo) }, &self.torus)
    }

    /// Exterior unit conormal of the exact boundary at a boundary point.
    pub fn exact_conormal(&self, x: &Vec3, side: BoundarySide) -> Result<Vec3> {
        let c = toroidal_coords(x, &self.torus)?;
        let (_, tangent, _) = boundary_curve(side, c.theta, &self.boundary, &self.torus);
        let n = surface_normal(c);
        let mut nu = tangent.cross(&n).normalize();
        let (_, e_phi) = coordinate_frame(c);
        let outward = match side {
            BoundarySide::Lower => -e_phi,
            BoundarySide::Upper => e_phi,
        };
        if nu.dot(&outward) < 0.0 {
            nu = -nu;
        }
        Ok(nu)
    }
}

/// Polynomial in `(x, y)` stored as `(a, b, c)` triples for `c · x^a y^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    pub terms: Vec<(u32, u32, f64)>,
}

impl Poly2 {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|&(a, b, c)| c * x.powi(a as i32) * y.powi(b as i32)).sum()
    }

    pub fn dx(&self) -> Poly2 {
        Poly2 { terms: self.terms.iter().filter(|t| t.0 > 0).map(|&(a, b, c)| (a - 1, b, c * a as f64)).collect() }
    }

    pub fn dy(&self) -> Poly2 {
        Poly2 { terms: self.terms.iter().filter(|t| t.1 > 0).map(|&(a, b, c)| (a, b - 1, c * b as f64)).collect() }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0 + t.1).max().unwrap_or(0)
    }
}

/// Unit square `[0,1]²` embedded in the plane `z = 0` with a polynomial exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatSquareProblem {
    pub solution: Poly2,
}

impl FlatSquareProblem {
    pub fn new(solution: Poly2) -> Self {
        FlatSquareProblem { solution }
    }

    /// Fixed polynomial of total degree `degree` (at most 3).
    pub fn with_degree(degree: u32) -> Self {
        let mut terms = vec![(1, 0, 1.0), (0, 1, 1.0)];
        if degree >= 2 {
            terms.extend([(2, 0, 0.7), (1, 1, -0.4), (0, 2, 0.3)]);
        }
        if degree >= 3 {
            terms.extend([(3, 0, 0.2), (2, 1, -0.5), (1, 2, 0.1), (0, 3, 0.6)]);
        }
        FlatSquareProblem { solution: Poly2 { terms } }
    }

    pub fn load_f(&self, x: f64, y: f64) -> f64 {
        let s = &self.solution;
        -(s.dx().dx().eval(x, y) + s.dy().dy().eval(x, y))
    }
}

/// A surface problem the finite element pipeline can be run on.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Torus(ManufacturedProblem),
    FlatSquare(FlatSquareProblem),
}

impl Problem {
    pub fn torus() -> Self {
        Problem::Torus(ManufacturedProblem::wavy())
    }

    pub fn torus_simple() -> Self {
        Problem::Torus(ManufacturedProblem::straight())
    }

    pub fn flat_square(degree: u32) -> Self {
        Problem::FlatSquare(FlatSquareProblem::with_degree(degree))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Torus(m) if m.boundary.n_lower == 0 && m.boundary.n_upper == 0 => "torus-simple",
            Problem::Torus(_) => "torus",
            Problem::FlatSquare(_) => "flat-square",
        }
    }

    /// Whether the first chart coordinate is periodic.
    pub fn periodic(&self) -> bool {
        matches!(self, Problem::Torus(_))
    }

    /// Number of structured cells `(n_u, n_s)` along the two chart directions.
    ///
    /// The torus band gets three cells around the tube per unit of `n_div` so
    /// that even the coarsest grids sample each boundary wave several times.
    pub fn cells(&self, n_div: usize) -> (usize, usize) {
        match self {
            Problem::Torus(_) => (3 * n_div, 2 * n_div),
            Problem::FlatSquare(_) => (n_div, n_div),
        }
    }

    pub fn chart(&self, u: f64, s: f64) -> Vec3 {
        match self {
            Problem::Torus(m) => m.chart(u, s),
            Problem::FlatSquare(_) => Vec3::new(u, s, 0.0),
        }
    }

    pub fn closest_point(&self, x: &Vec3) -> Result<Vec3> {
        match self {
            Problem::Torus(m) => geometry::closest_point(x, &m.torus),
            Problem::FlatSquare(_) => Ok(Vec3::new(x.x, x.y, 0.0)),
        }
    }

    pub fn closest_point_jacobian(&self, x: &Vec3) -> Result<Matrix3<f64>> {
        match self {
            Problem::Torus(m) => closest_point_jacobian(x, &m.torus),
            Problem::FlatSquare(_) => Ok(Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0))),
        }
    }

    pub fn signed_distance(&self, x: &Vec3) -> Result<f64> {
        match self {
            Problem::Torus(m) => geometry::signed_distance(x, &m.torus),
            Problem::FlatSquare(_) => Ok(x.z),
        }
    }

    /// Exterior unit normal of the exact surface at the closest point of `x`.
    pub fn normal(&self, x: &Vec3) -> Result<Vec3> {
        match self {
            Problem::Torus(m) => Ok(surface_normal(toroidal_coords(x, &m.torus)?)),
            Problem::FlatSquare(_) => Ok(Vec3::z()),
        }
    }

    /// Exact solution at the closest point of `x`.
    pub fn solution(&self, x: &Vec3) -> Result<f64> {
        match self {
            Problem::Torus(m) => Ok(m.exact_solution(toroidal_coords(x, &m.torus)?)),
            Problem::FlatSquare(f) => Ok(f.solution.eval(x.x, x.y)),
        }
    }

    /// Tangential gradient of the exact solution at a surface point.
    pub fn solution_gradient(&self, x: &Vec3) -> Result<Vec3> {
        match self {
            Problem::Torus(m) => Ok(m.exact_surface_gradient(toroidal_coords(x, &m.torus)?)),
            Problem::FlatSquare(f) => {
                Ok(Vec3::new(f.solution.dx().eval(x.x, x.y), f.solution.dy().eval(x.x, x.y), 0.0))
            }
        }
    }

    /// Load at a surface point.
    pub fn load(&self, x: &Vec3) -> Result<f64> {
        match self {
            Problem::Torus(m) => Ok(m.load_f(toroidal_coords(x, &m.torus)?)),
            Problem::FlatSquare(f) => Ok(f.load_f(x.x, x.y)),
        }
    }

    /// Dirichlet data at a point of the exact boundary.
    pub fn dirichlet(&self, x: &Vec3) -> Result<f64> {
        match self {
            Problem::Torus(m) => m.dirichlet_g(x),
            Problem::FlatSquare(f) => Ok(f.solution.eval(x.x, x.y)),
        }
    }

    pub fn project_to_boundary(&self, x: &Vec3, tag: BoundaryTag) -> Result<Vec3> {
        match self {
            Problem::Torus(m) => {
                let side =
                    tag.side().ok_or_else(|| Error::InvalidArgument(format!("torus band has no {tag:?} boundary")))?;
                geometry::project_to_boundary(x, side, &m.boundary, &m.torus)
            }
            Problem::FlatSquare(_) => {
                let (cx, cy) = (x.x.clamp(0.0, 1.0), x.y.clamp(0.0, 1.0));
                Ok(match tag {
                    BoundaryTag::Lower => Vec3::new(cx, 0.0, 0.0),
                    BoundaryTag::Upper => Vec3::new(cx, 1.0, 0.0),
                    BoundaryTag::Left => Vec3::new(0.0, cy, 0.0),
                    BoundaryTag::Right => Vec3::new(1.0, cy, 0.0),
                })
            }
        }
    }

    /// Point of the boundary curve `tag` that a mesh node near it is moved to.
    ///
    /// On the torus this keeps the tube angle `θ` of `x` and sets `φ = φ_i(θ)`;
    /// unlike the Euclidean projection it never slides nodes along a steep
    /// boundary wave.
    pub fn boundary_correction(&self, x: &Vec3, tag: BoundaryTag) -> Result<Vec3> {
        match self {
            Problem::Torus(m) => {
                let side =
                    tag.side().ok_or_else(|| Error::InvalidArgument(format!("torus band has no {tag:?} boundary")))?;
                let theta = toroidal_coords(x, &m.torus)?.theta;
                Ok(boundary_curve(side, theta, &m.boundary, &m.torus).0)
            }
            Problem::FlatSquare(_) => self.project_to_boundary(x, tag),
        }
    }

    /// Exterior unit conormal of the exact boundary at a boundary point.
    pub fn exact_conormal(&self, x: &Vec3, tag: BoundaryTag) -> Result<Vec3> {
        match self {
            Problem::Torus(m) => {
                let side =
                    tag.side().ok_or_else(|| Error::InvalidArgument(format!("torus band has no {tag:?} boundary")))?;
                m.exact_conormal(x, side)
            }
            Problem::FlatSquare(_) => Ok(match tag {
                BoundaryTag::Lower => -Vec3::y(),
                BoundaryTag::Upper => Vec3::y(),
                BoundaryTag::Left => -Vec3::x(),
                BoundaryTag::Right => Vec3::x(),
            }),
        }
    }
}
