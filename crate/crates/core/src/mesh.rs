//! Structured order-k parametric triangulations of the problem surfaces.
//!
//! The chart rectangle `[0,1) × [0,1]` is split into `n_u × n_s` cells, each cut
//! into two triangles. Vertices are placed by the problem chart. Higher-order
//! Lagrange nodes are linearly interpolated over each facet and snapped onto
//! the surface with the closest-point map; nodes on boundary edges are then
//! moved onto the exact boundary curve, and the interior nodes of elements
//! touching the boundary follow that correction through a quadratic blend.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{edge_frame, frame_from_basis, EdgeFrame, ElementFrame};
use crate::geometry::Vec3;
use crate::problem::{BoundaryTag, Problem};
use crate::reference::{ReferenceElement, Tabulation};

/// Meshes whose worst element falls below this scaled Jacobian are rejected.
pub const MIN_SCALED_JACOBIAN: f64 = 0.05;
/// Divisions of the coarsest grid of a refinement family.
pub const BASE_DIVISIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub element: usize,
    pub local_edge: usize,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshOptions {
    /// Move the nodes of boundary edges onto the exact boundary.
    pub correct_boundary: bool,
    /// Carry the boundary correction into the interior nodes of boundary elements.
    pub blend_interior: bool,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions { correct_boundary: true, blend_interior: true }
    }
}

#[derive(Debug, Clone)]
pub struct ParametricMesh {
    pub order: usize,
    pub reference: ReferenceElement,
    pub nodes: Vec<Vec3>,
    /// Global node indices per element in reference-lattice order.
    pub elements: Vec<Vec<usize>>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Boundary curve carrying each node, if any.
    pub node_tags: Vec<Option<BoundaryTag>>,
    /// Mesh size entering the penalty scaling: the longest straight edge of
    /// the vertex triangulation at `BASE_DIVISIONS`, scaled by
    /// `BASE_DIVISIONS / n_div` so that it halves exactly under refinement.
    pub h: f64,
    /// Longest straight edge of this mesh's own vertex triangulation.
    pub h_max: f64,
    pub n_div: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeometricReport {
    /// `max |ρ|` over the triangle quadrature points.
    pub max_rho: f64,
    /// `max |n∘p − n_h|` over the triangle quadrature points.
    pub max_normal_dev: f64,
    /// Largest distance from a boundary-edge quadrature point to the exact boundary.
    pub max_boundary_dist: f64,
    /// `max |ν∘p_∂Γ − ν_h|` over the boundary-edge quadrature points.
    pub max_conormal_dev: f64,
    /// Largest distance from a boundary mesh node to the exact boundary.
    pub max_boundary_node_dist: f64,
    /// Worst per-element ratio of smallest to largest signed area factor.
    pub min_scaled_jacobian: f64,
}

/// Longest straight edge of the vertex triangulation built with `n_div`.
pub fn longest_vertex_edge(n_div: usize, problem: &Problem) -> f64 {
    let (nu, ns) = problem.cells(n_div);
    let at = |i: usize, j: usize| problem.chart(i as f64 / nu as f64, j as f64 / ns as f64);
    let mut longest: f64 = 0.0;
    for i in 0..nu {
        for j in 0..ns {
            let (x00, x10, x11, x01) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            let diagonal = (x00 - x11).norm().min((x10 - x01).norm());
            longest = longest.max((x10 - x00).norm()).max((x01 - x00).norm()).max(diagonal);
            longest = longest.max((x11 - x10).norm()).max((x11 - x01).norm());
        }
    }
    longest
}

/// Order-k mesh with `n_div` cells along the periodic (or first) chart direction.
pub fn build_mesh(n_div: usize, order: usize, problem: &Problem) -> Result<ParametricMesh> {
    build_mesh_with(n_div, order, problem, MeshOptions::default())
}

pub fn build_mesh_with(n_div: usize, order: usize, problem: &Problem, options: MeshOptions) -> Result<ParametricMesh> {
    if n_div < 2 {
        return Err(Error::InvalidArgument(format!("n_div must be at least 2, got {n_div}")));
    }
    let reference = ReferenceElement::new(order)?;
    let k = order;
    let (nu, ns) = problem.cells(n_div);
    let periodic = problem.periodic();
    let fine_u = k * nu;
    let fine_s = k * ns + 1;
    let cols = if periodic { fine_u } else { fine_u + 1 };
    let id = |i: usize, j: usize| (if periodic { i % fine_u } else { i }) * fine_s + j;

    let mut pos: Vec<Option<Vec3>> = vec![None; cols * fine_s];
    for i in (0..cols).step_by(k) {
        for j in (0..fine_s).step_by(k) {
            pos[id(i, j)] = Some(problem.chart(i as f64 / fine_u as f64, j as f64 / (fine_s - 1) as f64));
        }
    }
    let vertex = |p: &[Option<Vec3>], f: [usize; 2]| p[id(f[0], f[1])].expect("vertex placed");

    // orient triangles so that the straight facet normal agrees with the surface normal
    let (a, b, c) = ([0, 0], [k, 0], [k, k]);
    let (xa, xb, xc) = (vertex(&pos, a), vertex(&pos, b), vertex(&pos, c));
    let centroid = (xa + xb + xc) / 3.0;
    let outward = problem.normal(&problem.closest_point(&centroid)?)?;
    let flip = (xb - xa).cross(&(xc - xa)).dot(&outward) < 0.0;

    let mut tris: Vec<[[usize; 2]; 3]> = Vec::with_capacity(2 * nu * ns);
    for ci in 0..nu {
        for cj in 0..ns {
            let v00 = [k * ci, k * cj];
            let v10 = [k * (ci + 1), k * cj];
            let v11 = [k * (ci + 1), k * (cj + 1)];
            let v01 = [k * ci, k * (cj + 1)];
            // split along the shorter diagonal; counterclockwise in the chart
            let main = (vertex(&pos, v00) - vertex(&pos, v11)).norm();
            let anti = (vertex(&pos, v10) - vertex(&pos, v01)).norm();
            let pair =
                if main <= anti { [[v00, v10, v11], [v00, v11, v01]] } else { [[v00, v10, v01], [v10, v11, v01]] };
            for [a, b, c] in pair {
                tris.push(if flip { [a, c, b] } else { [a, b, c] });
            }
        }
    }

    let lin = |p: &[Option<Vec3>], t: &[[usize; 2]; 3], l: [f64; 3]| {
        vertex(p, t[0]) * l[0] + vertex(p, t[1]) * l[1] + vertex(p, t[2]) * l[2]
    };
    let kf = k as f64;
    let mut elements = Vec::with_capacity(tris.len());
    let mut boundary_edges = Vec::new();
    for (e, t) in tris.iter().enumerate() {
        let mut conn = Vec::with_capacity(reference.num_nodes());
        for l in &reference.lattice {
            let fi = (l[0] * t[0][0] + l[1] * t[1][0] + l[2] * t[2][0]) / k;
            let fj = (l[0] * t[0][1] + l[1] * t[1][1] + l[2] * t[2][1]) / k;
            let g = id(fi, fj);
            if pos[g].is_none() {
                let bary = [l[0] as f64 / kf, l[1] as f64 / kf, l[2] as f64 / kf];
                pos[g] = Some(problem.closest_point(&lin(&pos, t, bary))?);
            }
            conn.push(g);
        }
        for le in 0..3 {
            let (p, q) = (t[le], t[(le + 1) % 3]);
            let tag = if p[1] == 0 && q[1] == 0 {
                Some(BoundaryTag::Lower)
            } else if p[1] == fine_s - 1 && q[1] == fine_s - 1 {
                Some(BoundaryTag::Upper)
            } else if !periodic && p[0] == 0 && q[0] == 0 {
                Some(BoundaryTag::Left)
            } else if !periodic && p[0] == fine_u && q[0] == fine_u {
                Some(BoundaryTag::Right)
            } else {
                None
            };
            if let Some(tag) = tag {
                boundary_edges.push(BoundaryEdge { element: e, local_edge: le, tag });
            }
        }
        elements.push(conn);
    }
    let mut nodes: Vec<Vec3> = pos.into_iter().map(|p| p.expect("every lattice node is used")).collect();
    let mut node_tags = vec![None; nodes.len()];

    // vertices are never moved by the corrections below
    let vertex_pos = |nodes: &[Vec3], e: usize| -> [Vec3; 3] { [0, 1, 2].map(|v| nodes[elements[e][v]]) };
    let mut h_max: f64 = 0.0;
    for e in 0..elements.len() {
        let xs = vertex_pos(&nodes, e);
        for v in 0..3 {
            h_max = h_max.max((xs[v] - xs[(v + 1) % 3]).norm());
        }
    }
    let h = if n_div == BASE_DIVISIONS {
        h_max
    } else {
        longest_vertex_edge(BASE_DIVISIONS, problem) * BASE_DIVISIONS as f64 / n_div as f64
    };

    for be in &boundary_edges {
        let local = reference.edge_nodes(be.local_edge);
        for (n, &l) in local.iter().enumerate() {
            let g = elements[be.element][l];
            node_tags[g].get_or_insert(be.tag);
            if options.correct_boundary && n != 0 && n != local.len() - 1 {
                nodes[g] = problem.boundary_correction(&nodes[g], be.tag)?;
            }
        }
    }

    if options.correct_boundary && options.blend_interior && !reference.interior_nodes().is_empty() {
        let mut by_element: HashMap<usize, Vec<&BoundaryEdge>> = HashMap::new();
        for be in &boundary_edges {
            by_element.entry(be.element).or_default().push(be);
        }
        let mut touched: Vec<_> = by_element.into_iter().collect();
        touched.sort_by_key(|(e, _)| *e);
        for (e, edges) in touched {
            let xs = vertex_pos(&nodes, e);
            for l in reference.interior_nodes() {
                let bary = reference.lattice[l].map(|i| i as f64 / kf);
                let mut x = xs[0] * bary[0] + xs[1] * bary[1] + xs[2] * bary[2];
                for be in &edges {
                    let (ia, ib, ic) = (be.local_edge, (be.local_edge + 1) % 3, (be.local_edge + 2) % 3);
                    let d = bary[ic];
                    let t = bary[ib] / (1.0 - d);
                    let chord = problem.closest_point(&(xs[ia] * (1.0 - t) + xs[ib] * t))?;
                    let shift = problem.boundary_correction(&chord, be.tag)? - chord;
                    x += shift * (1.0 - d).powi(2);
                }
                let g = elements[e][l];
                nodes[g] = problem.closest_point(&x)?;
            }
        }
    }

    let mesh = ParametricMesh { order, reference, nodes, elements, boundary_edges, node_tags, h, h_max, n_div };
    let quality = mesh.min_scaled_jacobian(problem)?;
    if !(quality > MIN_SCALED_JACOBIAN) {
        return Err(Error::MeshInvalid(format!(
            "minimum scaled Jacobian {quality:.3e} is below {MIN_SCALED_JACOBIAN} (n_div = {n_div}, k = {order})"
        )));
    }
    Ok(mesh)
}

impl ParametricMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_coords(&self, element: usize) -> Vec<Vec3> {
        self.elements[element].iter().map(|&g| self.nodes[g]).collect()
    }

    /// Quadrature degree used for stiffness, load and boundary integrals.
    pub fn assembly_degree(&self) -> usize {
        2 * self.order + 2
    }

    /// Frame of `element` at reference point `xi`.
    pub fn element_frame(&self, problem: &Problem, element: usize, xi: [f64; 2]) -> Result<ElementFrame> {
        let (v, g) = self.reference.eval(xi);
        self.frame_with(problem, element, &v, &g)
    }

    pub(crate) fn frame_with(
        &self,
        problem: &Problem,
        element: usize,
        values: &[f64],
        grads: &[[f64; 2]],
    ) -> Result<ElementFrame> {
        let coords = self.element_coords(element);
        frame_from_basis(&coords, values, grads, |x| problem.normal(&problem.closest_point(x)?))
            .map_err(|e| Error::DegenerateElement { element, reason: e.to_string() })
    }

    /// Conormal data on boundary edge `edge` at edge parameter `t ∈ [0, 1]`.
    pub fn boundary_conormal(&self, problem: &Problem, edge: usize, t: f64) -> Result<EdgeFrame> {
        let be = self.boundary_edges[edge];
        let xi = ReferenceElement::edge_point(be.local_edge, t);
        let frame = self.element_frame(problem, be.element, xi)?;
        edge_frame(frame, be.local_edge, xi)
            .map_err(|_| Error::DegenerateEdge { element: be.element, edge: be.local_edge })
    }

    /// Worst per-element `min / max` of the signed area factor over quadrature points.
    pub fn min_scaled_jacobian(&self, problem: &Problem) -> Result<f64> {
        let tab = self.reference.tabulate_degree(self.assembly_degree())?;
        let per_element: Vec<f64> = (0..self.num_elements())
            .into_par_iter()
            .map(|e| self.element_quality(problem, e, &tab))
            .collect::<Result<_>>()?;
        Ok(per_element.into_iter().fold(f64::INFINITY, f64::min))
    }

    fn element_quality(&self, problem: &Problem, e: usize, tab: &Tabulation) -> Result<f64> {
        let coords = self.element_coords(e);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (v, g) in tab.values.iter().zip(&tab.grads) {
            let mut x = Vec3::zeros();
            let mut d_xi = Vec3::zeros();
            let mut d_eta = Vec3::zeros();
            for ((c, vi), gi) in coords.iter().zip(v).zip(g) {
                x += c * *vi;
                d_xi += c * gi[0];
                d_eta += c * gi[1];
            }
            let n = problem.normal(&problem.closest_point(&x)?)?;
            let s = d_xi.cross(&d_eta).dot(&n);
            lo = lo.min(s);
            hi = hi.max(s.abs());
        }
        Ok(if hi > 0.0 { lo / hi } else { 0.0 })
    }

    /// Unique vertex pairs mapped to the `(element, local edge)` pairs using them.
    pub fn edge_map(&self) -> HashMap<(usize, usize), Vec<(usize, usize)>> {
        let mut map: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (e, conn) in self.elements.iter().enumerate() {
            for le in 0..3 {
                let (a, b) = (conn[le], conn[(le + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push((e, le));
            }
        }
        map
    }

    /// Checks that interior edges are shared by exactly two elements with the
    /// same node tuple and that the recorded boundary edges are exactly the
    /// edges with a single element.
    pub fn check_conformity(&self) -> Result<()> {
        let map = self.edge_map();
        let mut open = Vec::new();
        for (key, users) in &map {
            match users.as_slice() {
                [(e, le)] => open.push((*e, *le)),
                [(e1, l1), (e2, l2)] => {
                    let n1: Vec<usize> =
                        self.reference.edge_nodes(*l1).iter().map(|&l| self.elements[*e1][l]).collect();
                    let mut n2: Vec<usize> =
                        self.reference.edge_nodes(*l2).iter().map(|&l| self.elements[*e2][l]).collect();
                    n2.reverse();
                    if n1 != n2 {
                        return Err(Error::MeshInvalid(format!("edge {key:?} has mismatched nodes")));
                    }
                }
                _ => return Err(Error::MeshInvalid(format!("edge {key:?} is shared by {} elements", users.len()))),
            }
        }
        let mut recorded: Vec<_> = self.boundary_edges.iter().map(|b| (b.element, b.local_edge)).collect();
        recorded.sort_unstable();
        open.sort_unstable();
        if recorded != open {
            return Err(Error::MeshInvalid("boundary edge list does not match open edges".into()));
        }
        Ok(())
    }

    /// `V − E + F` of the vertex triangulation.
    pub fn euler_characteristic(&self) -> i64 {
        let mut verts: Vec<usize> = self.elements.iter().flat_map(|c| c[..3].iter().copied()).collect();
        verts.sort_unstable();
        verts.dedup();
        verts.len() as i64 - self.edge_map().len() as i64 + self.num_elements() as i64
    }
}

/// Geometric approximation quantities of the mesh against the exact surface.
pub fn geometric_report(mesh: &ParametricMesh, problem: &Problem) -> Result<GeometricReport> {
    let degree = mesh.assembly_degree();
    let tab = mesh.reference.tabulate_degree(degree)?;
    let per_element: Vec<(f64, f64, f64)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut rho: f64 = 0.0;
            let mut ndev: f64 = 0.0;
            for (v, g) in tab.values.iter().zip(&tab.grads) {
                let f = mesh.frame_with(problem, e, v, g)?;
                rho = rho.max(problem.signed_distance(&f.x)?.abs());
                let n = problem.normal(&problem.closest_point(&f.x)?)?;
                ndev = ndev.max((n - f.normal).norm());
            }
            Ok((rho, ndev, mesh.element_quality(problem, e, &tab)?))
        })
        .collect::<Result<_>>()?;

    let edge_tabs = mesh.reference.tabulate_edges(degree)?;
    let per_edge: Vec<(f64, f64)> = mesh
        .boundary_edges
        .par_iter()
        .map(|be| {
            let tab = &edge_tabs[be.local_edge];
            let mut dist: f64 = 0.0;
            let mut codev: f64 = 0.0;
            for ((p, v), g) in tab.rule.points.iter().zip(&tab.values).zip(&tab.grads) {
                let frame = mesh.frame_with(problem, be.element, v, g)?;
                let ef = edge_frame(frame, be.local_edge, *p)?;
                let on_boundary = problem.project_to_boundary(&ef.frame.x, be.tag)?;
                dist = dist.max((on_boundary - ef.frame.x).norm());
                codev = codev.max((problem.exact_conormal(&on_boundary, be.tag)? - ef.conormal).norm());
            }
            Ok((dist, codev))
        })
        .collect::<Result<_>>()?;

    let node_dist: Vec<f64> = mesh
        .node_tags
        .par_iter()
        .enumerate()
        .filter_map(|(g, tag)| tag.map(|t| (g, t)))
        .map(|(g, t)| Ok((problem.project_to_boundary(&mesh.nodes[g], t)? - mesh.nodes[g]).norm()))
        .collect::<Result<_>>()?;

    let mut report = GeometricReport { min_scaled_jacobian: f64::INFINITY, ..Default::default() };
    for (rho, ndev, q) in per_element {
        report.max_rho = report.max_rho.max(rho);
        report.max_normal_dev = report.max_normal_dev.max(ndev);
        report.min_scaled_jacobian = report.min_scaled_jacobian.min(q);
    }
    for (d, c) in per_edge {
        report.max_boundary_dist = report.max_boundary_dist.max(d);
        report.max_conormal_dev = report.max_conormal_dev.max(c);
    }
    report.max_boundary_node_dist = node_dist.into_iter().fold(0.0, f64::max);
    Ok(report)
}

impl GeometricReport {
    /// `key = value` lines.
    pub fn to_key_value(&self) -> String {
        format!(
            "max_rho = {:.6e}\nmax_normal_dev = {:.6e}\nmax_boundary_dist = {:.6e}\nmax_boundary_node_dist = {:.6e}\nmax_conormal_dev = {:.6e}\nmin_scaled_jacobian = {:.6e}\n",
            self.max_rho,
            self.max_normal_dev,
            self.max_boundary_dist,
            self.max_boundary_node_dist,
            self.max_conormal_dev,
            self.min_scaled_jacobian
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_square_counts() {
        let p = Problem::flat_square(1);
        let m = build_mesh(2, 1, &p).unwrap();
        assert_eq!(m.num_elements(), 8);
        assert_eq!(m.num_nodes(), 9);
        assert!(m.nodes.iter().all(|x| x.z == 0.0));
        let r = geometric_report(&m, &p).unwrap();
        assert_eq!(r.max_rho, 0.0);
        assert!(r.max_normal_dev < 1e-15);
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_edges.len(), 8);
        m.check_conformity().unwrap();
    }

    #[test]
    fn torus_band_topology() {
        let p = Problem::torus();
        for k in 1..=3 {
            let m = build_mesh(4, k, &p).unwrap();
            assert_eq!(m.euler_characteristic(), 0);
            m.check_conformity().unwrap();
            // 12 x 8 cells, periodic in the first direction
            assert_eq!(m.num_nodes(), (12 * k) * (8 * k + 1));
            assert_eq!(m.boundary_edges.len(), 24);
        }
    }

    #[test]
    fn boundary_nodes_lie_on_the_boundary() {
        let p = Problem::torus();
        let m = build_mesh(8, 3, &p).unwrap();
        for (x, tag) in m.nodes.iter().zip(&m.node_tags) {
            if let Some(tag) = tag {
                let b = p.project_to_boundary(x, *tag).unwrap();
                assert!((b - x).norm() < 1e-10);
            }
            assert!(p.signed_distance(x).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn elements_are_oriented_with_the_surface() {
        let p = Problem::torus();
        let m = build_mesh(8, 2, &p).unwrap();
        let f = m.element_frame(&p, 5, [0.3, 0.3]).unwrap();
        let n = p.normal(&p.closest_point(&f.x).unwrap()).unwrap();
        assert!(f.signed_area_factor(&n) > 0.0);
    }

    #[test]
    fn n_div_validated() {
        assert!(matches!(build_mesh(1, 1, &Problem::torus()), Err(Error::InvalidArgument(_))));
        assert!(build_mesh(4, 4, &Problem::torus()).is_err());
    }
}
