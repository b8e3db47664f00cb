//! Nodal Lagrange basis of order `k` on the reference triangle with vertices
//! `(0,0)`, `(1,0)`, `(0,1)`.
//!
//! Local nodes follow the VTK Lagrange-triangle ordering: the three vertices,
//! then the interior nodes of edges `0→1`, `1→2`, `2→0` (each listed from its
//! first vertex), then the element-interior nodes.

use crate::error::{Error, Result};
use crate::quadrature::{edge_rule, triangle_rule, TriangleRule};

pub const MAX_ORDER: usize = 3;

/// Reference vertex coordinates.
pub const VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceElement {
    pub order: usize,
    /// Integer barycentric coordinates `(i0, i1, i2)`, `i0 + i1 + i2 = order`.
    pub lattice: Vec<[usize; 3]>,
}

/// Basis values and reference gradients tabulated on a triangle rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub rule: TriangleRule,
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
}

/// Lattice of order `k` in VTK ordering, shifted by `offset` in every barycentric slot.
fn vtk_lattice(k: usize, offset: usize, out: &mut Vec<[usize; 3]>) {
    let total = k + 3 * offset;
    if k == 0 {
        out.push([offset; 3]);
        return;
    }
    out.push([k + offset, offset, offset]);
    out.push([offset, k + offset, offset]);
    out.push([offset, offset, k + offset]);
    for j in 1..k {
        out.push([k - j + offset, j + offset, offset]);
    }
    for j in 1..k {
        out.push([offset, k - j + offset, j + offset]);
    }
    for j in 1..k {
        out.push([j + offset, offset, k - j + offset]);
    }
    if k >= 3 {
        vtk_lattice(k - 3, offset + 1, out);
    }
    debug_assert!(out.iter().all(|l| l.iter().sum::<usize>() == total));
}

impl ReferenceElement {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::InvalidArgument(format!("element order must be in 1..={MAX_ORDER}, got {order}")));
        }
        let mut lattice = Vec::new();
        vtk_lattice(order, 0, &mut lattice);
        Ok(ReferenceElement { order, lattice })
    }

    pub fn num_nodes(&self) -> usize {
        self.lattice.len()
    }

    pub fn node_point(&self, i: usize) -> [f64; 2] {
        let k = self.order as f64;
        let l = self.lattice[i];
        [l[1] as f64 / k, l[2] as f64 / k]
    }

    /// Local node indices on edge `e`, ordered from vertex `e` to vertex `(e + 1) % 3`.
    pub fn edge_nodes(&self, e: usize) -> Vec<usize> {
        let k = self.order;
        let mut nodes = vec![e];
        nodes.extend((0..k - 1).map(|j| 3 + e * (k - 1) + j));
        nodes.push((e + 1) % 3);
        nodes
    }

    /// Local indices of nodes strictly inside the element.
    pub fn interior_nodes(&self) -> std::ops::Range<usize> {
        3 * self.order..self.num_nodes()
    }

    /// Reference point at parameter `t ∈ [0, 1]` along edge `e`.
    pub fn edge_point(e: usize, t: f64) -> [f64; 2] {
        let a = VERTICES[e];
        let b = VERTICES[(e + 1) % 3];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Basis values and reference gradients at `point`.
    pub fn eval(&self, point: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let k = self.order;
        let kf = k as f64;
        let lambda = [1.0 - point[0] - point[1], point[0], point[1]];
        // 1-D factors L_i(λ) = Π_{l<i} (kλ - l)/(i - l) and their derivatives in λ
        let mut fac = [[0.0; MAX_ORDER + 1]; 3];
        let mut dfac = [[0.0; MAX_ORDER + 1]; 3];
        for m in 0..3 {
            for i in 0..=k {
                let mut val = 1.0;
                let mut der = 0.0;
                for l in 0..i {
                    let denom = (i - l) as f64;
                    let f = (kf * lambda[m] - l as f64) / denom;
                    der = der * f + val * kf / denom;
                    val *= f;
                }
                fac[m][i] = val;
                dfac[m][i] = der;
            }
        }
        let mut values = Vec::with_capacity(self.num_nodes());
        let mut grads = Vec::with_capacity(self.num_nodes());
        for l in &self.lattice {
            let f = [fac[0][l[0]], fac[1][l[1]], fac[2][l[2]]];
            let d = [dfac[0][l[0]], dfac[1][l[1]], dfac[2][l[2]]];
            values.push(f[0] * f[1] * f[2]);
            let dl0 = d[0] * f[1] * f[2];
            let dl1 = f[0] * d[1] * f[2];
            let dl2 = f[0] * f[1] * d[2];
            grads.push([dl1 - dl0, dl2 - dl0]);
        }
        (values, grads)
    }

    pub fn tabulate(&self, rule: TriangleRule) -> Tabulation {
        let (values, grads) = rule.points.iter().map(|&p| self.eval(p)).unzip();
        Tabulation { rule, values, grads }
    }

    /// Tabulation on every edge: `tabs[e]` holds the basis on edge `e` at the
    /// points of an edge rule of the given degree, with the 1-D weights.
    pub fn tabulate_edges(&self, degree: usize) -> Result<[Tabulation; 3]> {
        let rule = edge_rule(degree)?;
        let tab = |e: usize| {
            let points: Vec<[f64; 2]> = rule.points.iter().map(|t| Self::edge_point(e, t[0])).collect();
            self.tabulate(TriangleRule { points, weights: rule.weights.clone(), degree })
        };
        Ok([tab(0), tab(1), tab(2)])
    }

    pub fn tabulate_degree(&self, degree: usize) -> Result<Tabulation> {
        Ok(self.tabulate(triangle_rule(degree)?))
    }
}
