//! Probes of the S+ mechanism along explicit sequences: pairings ⟨A(u_n), u_n − u⟩,
//! the split of ⟨A(u_n) − A(u), u_n − u⟩ into a frozen-s monotone part θ¹ and a
//! frozen-gradient part θ², and windowed integrability profiles of |∇u_n|^{p(z)}.

use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::exponent::ExponentField;
use crate::fem::{BoundaryTag, Mesh, MeshError, MeshedFunction};
use crate::galerkin::{convergence_study, error_measures, GalerkinError, GalerkinProblem};
use crate::operator::{pairing, CaratheodoryKernel};
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;

/// A finite window satisfies the limsup hypothesis when the pairing stays below this
/// over its second half.
pub const LIMSUP_TOLERANCE: f64 = 1e-6;
/// Strong convergence requires a final gradient error within this multiple of the solver tolerance.
pub const STRONG_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum SPlusError {
    #[error("frequency {frequency} aliases on {elements} elements (limit is elements/4)")]
    Aliasing { frequency: u32, elements: usize },
    #[error("sequence is empty")]
    EmptySequence,
    #[error("window size {0} is not inside (0, |Ω|)")]
    InvalidWindow(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Galerkin(#[from] GalerkinError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    Galerkin,
    Oscillation,
    Custom,
}

/// Members u_n on one evaluation mesh, with the candidate limit u.
#[derive(Debug, Clone)]
pub struct SequenceSpec<T> {
    pub kind: SequenceKind,
    /// Label n of each member (frequency, level, or position).
    pub indices: Vec<u32>,
    pub members: Vec<MeshedFunction<T>>,
    pub limit: MeshedFunction<T>,
}

impl<T: Real> SequenceSpec<T> {
    /// u_n(z) = sin(nπt)/(nπ) with t the position rescaled to [0, 1], converging to 0
    /// uniformly while ∇u_n does not converge strongly.
    pub fn oscillation(mesh: Arc<Mesh<T>>, frequencies: &[u32]) -> Result<Self, SPlusError> {
        if frequencies.is_empty() {
            return Err(SPlusError::EmptySequence);
        }
        let elements = mesh.element_count();
        let domain = *mesh.domain();
        let mut members = Vec::with_capacity(frequencies.len());
        for &n in frequencies {
            if n == 0 || n as usize * 4 > elements {
                return Err(SPlusError::Aliasing { frequency: n, elements });
            }
            let k = T::lit(f64::from(n) * std::f64::consts::PI);
            let scale = domain.measure();
            members.push(MeshedFunction::interpolate(Arc::clone(&mesh), BoundaryTag::DirichletZero, |z| {
                (k * (z - domain.left()) / scale).sin() * scale / k
            }));
        }
        Ok(Self {
            kind: SequenceKind::Oscillation,
            indices: frequencies.to_vec(),
            limit: MeshedFunction::zeros(mesh, BoundaryTag::DirichletZero),
            members,
        })
    }

    /// The Galerkin solutions of levels 0..=L prolonged to level L, with the level-L
    /// solution as the limit.
    pub fn galerkin(problem: &GalerkinProblem<T>) -> Result<Self, SPlusError> {
        let mut problem = problem.clone();
        problem.exact = None;
        let report = convergence_study(&problem)?;
        let finest = Arc::clone(report.solutions[report.solutions.len() - 1].mesh());
        let members = report
            .solutions
            .iter()
            .map(|u| u.prolong(&finest))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            kind: SequenceKind::Galerkin,
            indices: report.rows.iter().map(|r| r.level).collect(),
            limit: members[members.len() - 1].clone(),
            members,
        })
    }

    pub fn custom(members: Vec<MeshedFunction<T>>, limit: MeshedFunction<T>) -> Result<Self, SPlusError> {
        if members.is_empty() {
            return Err(SPlusError::EmptySequence);
        }
        if members.iter().any(|m| !m.shares_mesh(&limit)) {
            return Err(MeshError::MeshMismatch.into());
        }
        Ok(Self {
            kind: SequenceKind::Custom,
            indices: (0..members.len() as u32).collect(),
            members,
            limit,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        self.limit.mesh()
    }
}

/// θ¹ = (a(z, u_n, ∇u_n) − a(z, u_n, ∇u))·(∇u_n − ∇u) and
/// θ² = (a(z, u_n, ∇u) − a(z, u, ∇u))·(∇u_n − ∇u), integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDecomposition<T> {
    pub theta1: T,
    pub theta2: T,
    pub theta1_per_element: Vec<T>,
    pub theta2_per_element: Vec<T>,
    /// max over each element's quadrature points of |θ¹ + θ²|.
    pub xi_max_per_element: Vec<T>,
}

pub fn theta_decomposition<T: Real>(
    u_n: &MeshedFunction<T>,
    u: &MeshedFunction<T>,
    kernel: &CaratheodoryKernel<T>,
    rule: &QuadratureRule<T>,
) -> Result<ThetaDecomposition<T>, MeshError> {
    if !u_n.shares_mesh(u) {
        return Err(MeshError::MeshMismatch);
    }
    let mesh = u.mesh();
    let elements = mesh.element_count();
    let mut t1 = vec![T::zero(); elements];
    let mut t2 = vec![T::zero(); elements];
    let mut xi = vec![T::zero(); elements];
    for q in mesh.quadrature_points(rule) {
        let e = q.element;
        let (sn, s) = (u_n.value_in(e, q.local), u.value_in(e, q.local));
        let (gn, g) = (u_n.slope(e), u.slope(e));
        let frozen = kernel.flux_1d(q.z, sn, g);
        let dg = gn - g;
        let a = (kernel.flux_1d(q.z, sn, gn) - frozen) * dg;
        let b = (frozen - kernel.flux_1d(q.z, s, g)) * dg;
        t1[e] += q.weight * a;
        t2[e] += q.weight * b;
        xi[e] = xi[e].max((a + b).abs());
    }
    Ok(ThetaDecomposition {
        theta1: t1.iter().copied().sum(),
        theta2: t2.iter().copied().sum(),
        theta1_per_element: t1,
        theta2_per_element: t2,
        xi_max_per_element: xi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow<T> {
    pub index: u32,
    /// ⟨A(u_n), u_n − u⟩.
    pub pairing: T,
    pub theta1: T,
    pub theta2: T,
    /// ⟨A(u), u_n − u⟩, the part of the pairing not covered by θ¹ + θ².
    pub cross_term: T,
    /// |pairing − (θ¹ + θ² + cross_term)|.
    pub reconstruction_error: T,
    pub lp_error: T,
    pub gradient_error: T,
    pub weak_surrogate: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeVerdict {
    /// limsup hypothesis met and strong convergence observed.
    ConsistentWithSPlus,
    /// limsup hypothesis fails on the window; no strong-convergence claim is made.
    HypothesisViolated,
    /// limsup hypothesis met but strong convergence not observed.
    Inconsistent,
}

pub const PROBE_COLUMNS: [&str; 9] = [
    "index",
    "pairing",
    "theta1",
    "theta2",
    "cross_term",
    "reconstruction_error",
    "lp_error",
    "gradient_error",
    "weak_surrogate",
];

#[derive(Debug, Clone)]
pub struct SPlusProbeReport<T> {
    pub kind: SequenceKind,
    pub rows: Vec<ProbeRow<T>>,
    /// max over the second half of the window of the pairing.
    pub limsup_surrogate: T,
    pub limsup_met: bool,
    pub strong_convergence_observed: bool,
    pub verdict: ProbeVerdict,
    /// max over n of the pointwise |ξ_n| on each element.
    pub xi_envelope: Vec<T>,
}

impl<T: Real> SPlusProbeReport<T> {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MeshError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(PROBE_COLUMNS)?;
        for r in &self.rows {
            out.write_record([
                r.index.to_string(),
                format!("{:e}", r.pairing),
                format!("{:e}", r.theta1),
                format!("{:e}", r.theta2),
                format!("{:e}", r.cross_term),
                format!("{:e}", r.reconstruction_error),
                format!("{:e}", r.lp_error),
                format!("{:e}", r.gradient_error),
                format!("{:e}", r.weak_surrogate),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Evaluates every member against the limit. `solver_tolerance` sets the strong-convergence
/// threshold (ten times it).
pub fn run_probe<T: Real>(
    spec: &SequenceSpec<T>,
    kernel: &CaratheodoryKernel<T>,
    p: &ExponentField<T>,
    rule: &QuadratureRule<T>,
    solver_tolerance: T,
) -> Result<SPlusProbeReport<T>, SPlusError> {
    if spec.members.is_empty() {
        return Err(SPlusError::EmptySequence);
    }
    let limit_samples = spec.limit.sample(rule);
    let mut rows = Vec::with_capacity(spec.members.len());
    let mut xi_envelope = vec![T::zero(); spec.mesh().element_count()];
    for (&index, u_n) in spec.indices.iter().zip(&spec.members) {
        let diff = u_n.difference(&spec.limit)?;
        let errors = error_measures(&u_n.sample(rule), &limit_samples, p, kernel)?;
        let cross_term = pairing(&spec.limit, &diff, kernel, rule)?;
        let theta = theta_decomposition(u_n, &spec.limit, kernel, rule)?;
        for (env, &x) in xi_envelope.iter_mut().zip(&theta.xi_max_per_element) {
            *env = env.max(x);
        }
        rows.push(ProbeRow {
            index,
            pairing: errors.pairing,
            theta1: theta.theta1,
            theta2: theta.theta2,
            cross_term,
            reconstruction_error: (errors.pairing - (theta.theta1 + theta.theta2 + cross_term)).abs(),
            lp_error: errors.lp_error,
            gradient_error: errors.gradient_error,
            weak_surrogate: errors.weak_surrogate,
        });
    }
    let tail = &rows[rows.len() / 2..];
    let limsup_surrogate = tail.iter().map(|r| r.pairing).fold(T::neg_infinity(), T::max);
    let limsup_met = limsup_surrogate <= T::lit(LIMSUP_TOLERANCE);
    let threshold = T::lit(STRONG_FACTOR) * solver_tolerance;
    let strong_convergence_observed = decreasing_to(rows.iter().map(|r| r.gradient_error), threshold);
    let verdict = match (limsup_met, strong_convergence_observed) {
        (false, _) => ProbeVerdict::HypothesisViolated,
        (true, true) => ProbeVerdict::ConsistentWithSPlus,
        (true, false) => ProbeVerdict::Inconsistent,
    };
    Ok(SPlusProbeReport {
        kind: spec.kind,
        rows,
        limsup_surrogate,
        limsup_met,
        strong_convergence_observed,
        verdict,
        xi_envelope,
    })
}

/// Strictly decreasing until the values reach `threshold`, and the last value within it.
fn decreasing_to<T: Real>(values: impl Iterator<Item = T>, threshold: T) -> bool {
    let values: Vec<T> = values.collect();
    let settled = |v: T| v <= threshold;
    values.windows(2).all(|w| w[1] < w[0] || (settled(w[0]) && settled(w[1])))
        && values.last().is_some_and(|&v| settled(v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowProfile<T> {
    pub delta: T,
    /// sup over members and windows E = [c, c + δ] of ∫_E |∇u_n|^{p(z)} dz.
    pub sup: T,
}

/// Windowed integrability profile of the gradients. Window starts are taken at every
/// node z_i and at every z_i − δ, where the piecewise-smooth window integral has its kinks.
pub fn uniform_integrability_profile<T: Real>(
    sequence: &[MeshedFunction<T>],
    p: &ExponentField<T>,
    windows: &[T],
    rule: &QuadratureRule<T>,
) -> Result<Vec<WindowProfile<T>>, SPlusError> {
    let mut profile: Vec<WindowProfile<T>> = Vec::with_capacity(windows.len());
    for &delta in windows {
        let domain = p.domain();
        if !(delta > T::zero() && delta < domain.measure()) {
            return Err(SPlusError::InvalidWindow(delta.to_f64_lossy()));
        }
        profile.push(WindowProfile { delta, sup: T::zero() });
    }
    for u in sequence {
        let cumulative = GradientPowerIntegral::new(u, p, rule);
        let mesh = u.mesh();
        let (a, b) = (mesh.domain().left(), mesh.domain().right());
        for entry in profile.iter_mut() {
            let delta = entry.delta;
            let starts = mesh
                .nodes()
                .iter()
                .flat_map(|&z| [z, z - delta])
                .filter(|&c| c >= a && c + delta <= b);
            for c in starts {
                let mass = cumulative.at(c + delta) - cumulative.at(c);
                entry.sup = entry.sup.max(mass);
            }
        }
    }
    Ok(profile)
}

/// z ↦ ∫_a^z |∇u|^{p(x)} dx for a P1 function.
struct GradientPowerIntegral<'a, T> {
    u: &'a MeshedFunction<T>,
    p: &'a ExponentField<T>,
    rule: &'a QuadratureRule<T>,
    at_nodes: Vec<T>,
}

impl<'a, T: Real> GradientPowerIntegral<'a, T> {
    fn new(u: &'a MeshedFunction<T>, p: &'a ExponentField<T>, rule: &'a QuadratureRule<T>) -> Self {
        let mesh = u.mesh();
        let mut at_nodes = Vec::with_capacity(mesh.node_count());
        let mut total = T::zero();
        at_nodes.push(total);
        for e in 0..mesh.element_count() {
            let (z0, z1) = mesh.element(e);
            total += Self::partial(u, p, rule, e, z0, z1);
            at_nodes.push(total);
        }
        Self { u, p, rule, at_nodes }
    }

    fn partial(u: &MeshedFunction<T>, p: &ExponentField<T>, rule: &QuadratureRule<T>, e: usize, from: T, to: T) -> T {
        let g = u.slope(e).abs();
        if g == T::zero() || to <= from {
            return T::zero();
        }
        rule.integrate(from, to, |z| g.powf(p.eval(z)))
    }

    fn at(&self, z: T) -> T {
        let mesh = self.u.mesh();
        let e = mesh.locate(z);
        let z0 = mesh.nodes()[e];
        self.at_nodes[e] + Self::partial(self.u, self.p, self.rule, e, z0, mesh.domain().clamp(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::Domain;
    use crate::fem::Mesh;
    use crate::operator::builtin;
    use crate::operator::Rhs;
    use approx::assert_abs_diff_eq;

    fn mesh(level: u32) -> Arc<Mesh<f64>> {
        Arc::new(Mesh::dyadic(Domain::unit(), level))
    }

    #[test]
    fn oscillation_rejects_aliasing() {
        assert!(SequenceSpec::oscillation(mesh(6), &[4, 16]).is_ok());
        assert!(matches!(
            SequenceSpec::oscillation(mesh(6), &[4, 17]),
            Err(SPlusError::Aliasing { frequency: 17, elements: 64 })
        ));
        assert!(SequenceSpec::oscillation(mesh(6), &[]).is_err());
    }

    #[test]
    fn constant_sequence_is_consistent() {
        let k = builtin::laplacian(Domain::unit()).unwrap();
        let p = ExponentField::constant(Domain::unit(), 2.0).unwrap();
        let u = MeshedFunction::interpolate(mesh(4), BoundaryTag::DirichletZero, |z| z * (1.0 - z));
        let spec = SequenceSpec::custom(vec![u.clone(), u.clone(), u.clone()], u).unwrap();
        let report = run_probe(&spec, &k, &p, &QuadratureRule::default(), 1e-10).unwrap();
        assert_eq!(report.verdict, ProbeVerdict::ConsistentWithSPlus);
        assert!(report.rows.iter().all(|r| r.pairing == 0.0 && r.gradient_error == 0.0));
    }

    #[test]
    fn theta_vanishes_for_identical_pair() {
        let p = ExponentField::affine(Domain::unit(), 2.0, 1.0).unwrap();
        let k = builtin::perturbed_px_laplacian(&p).unwrap();
        let u = MeshedFunction::interpolate(mesh(4), BoundaryTag::Free, |z| z.sin());
        let t = theta_decomposition(&u, &u, &k, &QuadratureRule::default()).unwrap();
        assert_eq!((t.theta1, t.theta2), (0.0, 0.0));
    }

    #[test]
    fn theta2_vanishes_without_s_dependence() {
        let p = ExponentField::affine(Domain::unit(), 2.0, 1.0).unwrap();
        let k = builtin::px_laplacian(&p).unwrap();
        let u = MeshedFunction::interpolate(mesh(4), BoundaryTag::Free, |z| z.sin());
        let v = MeshedFunction::interpolate(mesh(4), BoundaryTag::Free, |z| z * z - 0.3);
        let t = theta_decomposition(&u, &v, &k, &QuadratureRule::default()).unwrap();
        assert_eq!(t.theta2, 0.0);
        assert!(t.theta2_per_element.iter().all(|&x| x == 0.0));
        assert!(t.theta1 > 0.0);
    }

    #[test]
    fn zero_sequence_profile_is_zero() {
        let p = ExponentField::constant(Domain::unit(), 2.0).unwrap();
        let zero = MeshedFunction::zeros(mesh(5), BoundaryTag::DirichletZero);
        let profile =
            uniform_integrability_profile(&[zero.clone(), zero], &p, &[0.5, 0.1], &QuadratureRule::default()).unwrap();
        assert!(profile.iter().all(|w| w.sup == 0.0));
        assert!(uniform_integrability_profile(&[], &p, &[1.0], &QuadratureRule::default()).is_err());
    }

    #[test]
    fn linear_function_profile_is_exact() {
        // |∇u|² ≡ 4 with p ≡ 2, so every window of width δ carries 4δ.
        let p = ExponentField::constant(Domain::unit(), 2.0).unwrap();
        let u = MeshedFunction::interpolate(mesh(3), BoundaryTag::Free, |z| 2.0 * z);
        let profile = uniform_integrability_profile(&[u], &p, &[0.3, 0.05], &QuadratureRule::default()).unwrap();
        assert_abs_diff_eq!(profile[0].sup, 1.2, epsilon = 1e-13);
        assert_abs_diff_eq!(profile[1].sup, 0.2, epsilon = 1e-13);
    }

    #[test]
    fn galerkin_sequence_for_laplacian_is_consistent() {
        let p = ExponentField::constant(Domain::unit(), 2.0).unwrap();
        let k = builtin::laplacian(Domain::unit()).unwrap();
        let problem = GalerkinProblem::new(p.clone(), k.clone(), Rhs::density(|_| 2.0), 5).unwrap();
        let spec = SequenceSpec::galerkin(&problem).unwrap();
        let report = run_probe(&spec, &k, &p, &QuadratureRule::default(), 1e-10).unwrap();
        assert_eq!(report.verdict, ProbeVerdict::ConsistentWithSPlus, "{:?}", report.rows);
    }
}
