//! One-dimensional meshes, the P1 basis, and finite-element functions.

use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::exponent::Domain;
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh needs at least one element")]
    NoElements,
    #[error("nodes must be strictly increasing and span the domain")]
    InvalidNodes,
    #[error("expected {expected} coefficients, got {found}")]
    CoefficientCount { expected: usize, found: usize },
    #[error("dirichlet-zero function must vanish at both endpoints")]
    NonZeroBoundary,
    #[error("functions live on incompatible meshes")]
    MeshMismatch,
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A partition `left = z_0 < z_1 < … < z_m = right` of the closed domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    domain: Domain<T>,
    nodes: Vec<T>,
    level: u32,
}

impl<T: Real> Mesh<T> {
    /// `elements` equal elements at refinement level 0.
    pub fn uniform(domain: Domain<T>, elements: usize) -> Result<Self, MeshError> {
        if elements == 0 {
            return Err(MeshError::NoElements);
        }
        Ok(Self {
            nodes: domain.grid(elements).collect(),
            domain,
            level: 0,
        })
    }

    pub fn from_nodes(domain: Domain<T>, nodes: Vec<T>) -> Result<Self, MeshError> {
        let valid = nodes.len() >= 2
            && nodes[0] == domain.left()
            && nodes[nodes.len() - 1] == domain.right()
            && nodes.windows(2).all(|w| w[0] < w[1]);
        if !valid {
            return Err(MeshError::InvalidNodes);
        }
        Ok(Self { domain, nodes, level: 0 })
    }

    /// The single-element mesh refined `level` times: 2^level elements.
    pub fn dyadic(domain: Domain<T>, level: u32) -> Self {
        let mut mesh = Self {
            nodes: vec![domain.left(), domain.right()],
            domain,
            level: 0,
        };
        for _ in 0..level {
            mesh = mesh.refine();
        }
        mesh
    }

    /// Bisects every element. The old nodes are kept bit-for-bit, so the P1 space is nested.
    pub fn refine(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push((w[0] + w[1]) * T::lit(0.5));
        }
        nodes.push(self.nodes[self.nodes.len() - 1]);
        Self {
            domain: self.domain,
            nodes,
            level: self.level + 1,
        }
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn element(&self, e: usize) -> (T, T) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn width(&self, e: usize) -> T {
        self.nodes[e + 1] - self.nodes[e]
    }

    /// Element containing `z` (clamped into the domain); node points belong to the element on their left,
    /// except the left endpoint.
    pub fn locate(&self, z: T) -> usize {
        let z = self.domain.clamp(z);
        let idx = self.nodes.partition_point(|&n| n < z);
        idx.saturating_sub(1).min(self.element_count() - 1)
    }

    /// If `self` is obtained from `coarse` by `k` bisections, returns the stride 2^k.
    pub fn refinement_stride(&self, coarse: &Mesh<T>) -> Option<usize> {
        if self.domain != coarse.domain || self.level < coarse.level {
            return None;
        }
        let stride = 1usize << (self.level - coarse.level);
        if coarse.element_count() * stride != self.element_count() {
            return None;
        }
        coarse
            .nodes
            .iter()
            .enumerate()
            .all(|(i, &z)| self.nodes[i * stride] == z)
            .then_some(stride)
    }

    /// Every quadrature point of `rule` mapped into every element, in element order.
    pub fn quadrature_points<'a>(&'a self, rule: &'a QuadratureRule<T>) -> impl Iterator<Item = QuadPoint<T>> + 'a {
        (0..self.element_count()).flat_map(move |e| {
            let (a, b) = self.element(e);
            let h = b - a;
            rule.iter().map(move |(t, w)| QuadPoint {
                element: e,
                local: t,
                z: a + h * t,
                weight: w * h,
            })
        })
    }
}

/// A quadrature node in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint<T> {
    pub element: usize,
    /// Position within the element, in [0, 1].
    pub local: T,
    pub z: T,
    /// Physical weight (reference weight times element width).
    pub weight: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Free,
    DirichletZero,
}

/// A continuous piecewise-linear function given by its nodal values.
#[derive(Debug, Clone)]
pub struct MeshedFunction<T> {
    mesh: Arc<Mesh<T>>,
    coefficients: Vec<T>,
    tag: BoundaryTag,
}

impl<T: Real> MeshedFunction<T> {
    pub fn new(mesh: Arc<Mesh<T>>, coefficients: Vec<T>, tag: BoundaryTag) -> Result<Self, MeshError> {
        if coefficients.len() != mesh.node_count() {
            return Err(MeshError::CoefficientCount {
                expected: mesh.node_count(),
                found: coefficients.len(),
            });
        }
        if tag == BoundaryTag::DirichletZero
            && (coefficients[0] != T::zero() || coefficients[coefficients.len() - 1] != T::zero())
        {
            return Err(MeshError::NonZeroBoundary);
        }
        Ok(Self { mesh, coefficients, tag })
    }

    pub fn zeros(mesh: Arc<Mesh<T>>, tag: BoundaryTag) -> Self {
        let coefficients = vec![T::zero(); mesh.node_count()];
        Self { mesh, coefficients, tag }
    }

    /// Nodal interpolant of `f`; `DirichletZero` overwrites both endpoint values with 0.
    pub fn interpolate(mesh: Arc<Mesh<T>>, tag: BoundaryTag, f: impl Fn(T) -> T) -> Self {
        let mut coefficients: Vec<T> = mesh.nodes().iter().map(|&z| f(z)).collect();
        if tag == BoundaryTag::DirichletZero {
            let last = coefficients.len() - 1;
            coefficients[0] = T::zero();
            coefficients[last] = T::zero();
        }
        Self { mesh, coefficients, tag }
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn tag(&self) -> BoundaryTag {
        self.tag
    }

    /// Indices of the nodes carrying unknowns: interior nodes for `DirichletZero`, all nodes otherwise.
    pub fn free_nodes(&self) -> std::ops::Range<usize> {
        free_range(self.mesh.node_count(), self.tag)
    }

    pub fn shares_mesh(&self, other: &MeshedFunction<T>) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    pub fn value_in(&self, element: usize, local: T) -> T {
        let (c0, c1) = (self.coefficients[element], self.coefficients[element + 1]);
        c0 + (c1 - c0) * local
    }

    pub fn slope(&self, element: usize) -> T {
        (self.coefficients[element + 1] - self.coefficients[element]) / self.mesh.width(element)
    }

    pub fn eval(&self, z: T) -> T {
        let e = self.mesh.locate(z);
        let (a, b) = self.mesh.element(e);
        let t = ((self.mesh.domain().clamp(z) - a) / (b - a)).max(T::zero()).min(T::one());
        self.value_in(e, t)
    }

    /// The piecewise-constant broken gradient, one value per element.
    pub fn gradient(&self) -> Vec<T> {
        (0..self.mesh.element_count()).map(|e| self.slope(e)).collect()
    }

    /// Exact representation on a mesh obtained from this one by bisection.
    pub fn prolong(&self, finer: &Arc<Mesh<T>>) -> Result<Self, MeshError> {
        let stride = finer.refinement_stride(&self.mesh).ok_or(MeshError::MeshMismatch)?;
        if stride == 1 {
            return Ok(Self {
                mesh: Arc::clone(finer),
                coefficients: self.coefficients.clone(),
                tag: self.tag,
            });
        }
        let mut coefficients = Vec::with_capacity(finer.node_count());
        for e in 0..self.mesh.element_count() {
            let (z0, z1) = self.mesh.element(e);
            coefficients.push(self.coefficients[e]);
            for k in 1..stride {
                let t = (finer.nodes()[e * stride + k] - z0) / (z1 - z0);
                coefficients.push(self.value_in(e, t));
            }
        }
        coefficients.push(self.coefficients[self.coefficients.len() - 1]);
        Ok(Self {
            mesh: Arc::clone(finer),
            coefficients,
            tag: self.tag,
        })
    }

    /// `self + alpha·other` on a shared mesh. The result is `Free`-tagged unless both are Dirichlet.
    pub fn axpy(&self, alpha: T, other: &MeshedFunction<T>) -> Result<Self, MeshError> {
        if !self.shares_mesh(other) {
            return Err(MeshError::MeshMismatch);
        }
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(&a, &b)| a + alpha * b)
            .collect();
        let tag = if self.tag == BoundaryTag::DirichletZero && other.tag == BoundaryTag::DirichletZero {
            BoundaryTag::DirichletZero
        } else {
            BoundaryTag::Free
        };
        Ok(Self {
            mesh: Arc::clone(&self.mesh),
            coefficients,
            tag,
        })
    }

    pub fn difference(&self, other: &MeshedFunction<T>) -> Result<Self, MeshError> {
        self.axpy(-T::one(), other)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            coefficients: self.coefficients.iter().map(|&c| alpha * c).collect(),
            tag: self.tag,
        }
    }

    /// Values and gradients at each quadrature point of `rule`, in fixed element order.
    pub fn sample(&self, rule: &QuadratureRule<T>) -> Samples<T> {
        let mut samples = Samples::with_capacity(self.mesh.element_count() * rule.len());
        for q in self.mesh.quadrature_points(rule) {
            samples.points.push(q.z);
            samples.weights.push(q.weight);
            samples.values.push(self.value_in(q.element, q.local));
            samples.gradients.push(self.slope(q.element));
        }
        samples
    }

    /// Two-column CSV `z,u` at the nodes.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MeshError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["z", "u"])?;
        for (z, u) in self.mesh.nodes().iter().zip(&self.coefficients) {
            out.write_record([z.to_string(), u.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn free_range(node_count: usize, tag: BoundaryTag) -> std::ops::Range<usize> {
    match tag {
        BoundaryTag::Free => 0..node_count,
        BoundaryTag::DirichletZero => 1..node_count.saturating_sub(1).max(1),
    }
}

/// A function and its derivative tabulated at quadrature points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Samples<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
    pub values: Vec<T>,
    pub gradients: Vec<T>,
}

impl<T: Real> Samples<T> {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            points: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            gradients: Vec::with_capacity(n),
        }
    }

    /// Samples a closed-form function `f` with derivative `df` at the quadrature points of `mesh`.
    pub fn of_function(mesh: &Mesh<T>, rule: &QuadratureRule<T>, f: impl Fn(T) -> T, df: impl Fn(T) -> T) -> Self {
        let mut samples = Self::with_capacity(mesh.element_count() * rule.len());
        for q in mesh.quadrature_points(rule) {
            samples.points.push(q.z);
            samples.weights.push(q.weight);
            samples.values.push(f(q.z));
            samples.gradients.push(df(q.z));
        }
        samples
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Pointwise `self − other`; both must come from the same points.
    pub fn difference(&self, other: &Samples<T>) -> Result<Self, MeshError> {
        if self.points != other.points {
            return Err(MeshError::MeshMismatch);
        }
        let sub = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x - y).collect();
        Ok(Self {
            points: self.points.clone(),
            weights: self.weights.clone(),
            values: sub(&self.values, &other.values),
            gradients: sub(&self.gradients, &other.gradients),
        })
    }
}
