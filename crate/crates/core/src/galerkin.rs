//! Galerkin solutions of A(u) = f in W₀^{1,p(·)} on nested dyadic P1 spaces, and
//! the strong-convergence study over the resulting sequence.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::exponent::{Domain, ExponentError, ExponentField};
use crate::fem::{BoundaryTag, Mesh, MeshError, MeshedFunction, Samples};
use crate::linalg::{SingularPivot, Tridiagonal};
use crate::modular::{sobolev_norm_of_samples, ModularTerms, ScalarSamples};
use crate::operator::{apply, assemble_jacobian_fd, load_vector, pairing_of_samples, CaratheodoryKernel, KernelError, Rhs};
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum GalerkinError {
    #[error("level {level}: Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { level: u32, iterations: usize, residual: f64 },
    #[error("level {level}: singular Jacobian ({source})")]
    SingularJacobian { level: u32, source: SingularPivot },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<T> {
    /// Success when max_i |F_i| ≤ tolerance·(1 + max_i |⟨f, φ_i⟩|).
    pub tolerance: T,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub pivot_tolerance: T,
    /// Finite-difference step; `None` uses 1e−7·(1 + ‖c‖_∞).
    pub fd_step: Option<T>,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            tolerance: T::tol(1e-10),
            max_iterations: 100,
            max_halvings: 30,
            pivot_tolerance: T::lit(1e-14),
            fd_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats<T> {
    /// Newton updates taken.
    pub iterations: usize,
    /// Final max-norm of the residual over free nodes.
    pub residual_norm: T,
    /// Total step halvings across all iterations.
    pub halvings: usize,
    /// Set when the initial guess had a singular Jacobian and the solve restarted
    /// from the solution of the linear problem −u″ = f.
    pub linear_restart: bool,
}

/// Closed-form solution with its derivative.
#[derive(Clone)]
pub struct ExactSolution<T> {
    pub value: Arc<dyn Fn(T) -> T + Send + Sync>,
    pub derivative: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Real> ExactSolution<T> {
    pub fn new(value: impl Fn(T) -> T + Send + Sync + 'static, derivative: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    /// u(z) = (z − a)(b − z) on (a, b).
    pub fn bubble(domain: Domain<T>) -> Self {
        let (a, b) = (domain.left(), domain.right());
        Self::new(move |z| (z - a) * (b - z), move |z| a + b - z - z)
    }
}

impl<T> fmt::Debug for ExactSolution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ExactSolution(..)")
    }
}

/// f = −(|u′|^{p−2}u′)′ for the bubble u = (z − a)(b − z) and constant p: 2(p − 1)|a + b − 2z|^{p−2}.
pub fn manufactured_p_laplacian_rhs<T: Real>(domain: Domain<T>, p: T) -> Rhs<T> {
    let (a, b) = (domain.left(), domain.right());
    let two = T::lit(2.0);
    Rhs::density(move |z| {
        let slope = (a + b - two * z).abs();
        if slope == T::zero() && p < two {
            T::zero()
        } else {
            two * (p - T::one()) * slope.powf(p - two)
        }
    })
}

#[derive(Debug, Clone)]
pub struct GalerkinProblem<T> {
    pub domain: Domain<T>,
    pub exponent: ExponentField<T>,
    pub kernel: CaratheodoryKernel<T>,
    pub rhs: Rhs<T>,
    /// Finest refinement level L; the study solves levels 0..=L.
    pub levels: u32,
    pub settings: SolverSettings<T>,
    pub rule: QuadratureRule<T>,
    pub exact: Option<ExactSolution<T>>,
}

impl<T: Real> GalerkinProblem<T> {
    pub fn new(
        exponent: ExponentField<T>,
        kernel: CaratheodoryKernel<T>,
        rhs: Rhs<T>,
        levels: u32,
    ) -> Result<Self, GalerkinError> {
        exponent.ensure_superlinear()?;
        kernel.register(&exponent, 1)?;
        if matches!(rhs, Rhs::Functional(_)) {
            return Err(GalerkinError::InvalidProblem(
                "a mesh hierarchy needs the right-hand side as a density".into(),
            ));
        }
        if levels < 2 {
            return Err(GalerkinError::InvalidProblem(format!("need at least 2 levels, got {levels}")));
        }
        Ok(Self {
            domain: *exponent.domain(),
            exponent,
            kernel,
            rhs,
            levels,
            settings: SolverSettings::default(),
            rule: QuadratureRule::default(),
            exact: None,
        })
    }

    pub fn with_exact(mut self, exact: ExactSolution<T>) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_settings(mut self, settings: SolverSettings<T>) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_rule(mut self, rule: QuadratureRule<T>) -> Self {
        self.rule = rule;
        self
    }

    pub fn mesh(&self, level: u32) -> Arc<Mesh<T>> {
        Arc::new(Mesh::dyadic(self.domain, level))
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn free_residual<T: Real>(u: &MeshedFunction<T>, problem: &GalerkinProblem<T>, load: &[T]) -> Vec<T> {
    let applied = apply(u, &problem.kernel, &problem.rule);
    u.free_nodes().map(|i| applied[i] - load[i]).collect()
}

fn with_free_values<T: Real>(mesh: &Arc<Mesh<T>>, free: &[T]) -> MeshedFunction<T> {
    let mut c = Vec::with_capacity(free.len() + 2);
    c.push(T::zero());
    c.extend_from_slice(free);
    c.push(T::zero());
    MeshedFunction::new(Arc::clone(mesh), c, BoundaryTag::DirichletZero).expect("boundary values are zero")
}

/// Solution of ∫ u′φ_i′ = ⟨f, φ_i⟩ with the exact P1 stiffness matrix.
fn linear_start<T: Real>(mesh: &Arc<Mesh<T>>, load: &[T], pivot_tol: T) -> Result<MeshedFunction<T>, SingularPivot> {
    let n = mesh.node_count() - 2;
    let mut k = Tridiagonal::zeros(n);
    for i in 0..n {
        let (hl, hr) = (mesh.width(i), mesh.width(i + 1));
        k.set(i, i, hl.recip() + hr.recip());
        if i + 1 < n {
            k.set(i, i + 1, -hr.recip());
            k.set(i + 1, i, -hr.recip());
        }
    }
    let free = k.solve(&load[1..=n], pivot_tol)?;
    Ok(with_free_values(mesh, &free))
}

/// Damped Newton on the Galerkin system of one mesh. With no `initial` guess the zero
/// function is used.
pub fn solve_level<T: Real>(
    problem: &GalerkinProblem<T>,
    mesh: &Arc<Mesh<T>>,
    initial: Option<&MeshedFunction<T>>,
) -> Result<(MeshedFunction<T>, SolveStats<T>), GalerkinError> {
    let level = mesh.level();
    let settings = &problem.settings;
    let mut u = match initial {
        Some(guess) if guess.mesh().as_ref() == mesh.as_ref() => {
            MeshedFunction::new(Arc::clone(mesh), guess.coefficients().to_vec(), BoundaryTag::DirichletZero)?
        }
        Some(_) => return Err(MeshError::MeshMismatch.into()),
        None => MeshedFunction::zeros(Arc::clone(mesh), BoundaryTag::DirichletZero),
    };
    let load = load_vector(mesh, &problem.rhs, &problem.rule)?;
    let tolerance = settings.tolerance * (T::one() + max_abs(&load));
    let mut residual = free_residual(&u, problem, &load);
    let mut norm = max_abs(&residual);
    let mut stats = SolveStats {
        iterations: 0,
        residual_norm: norm,
        halvings: 0,
        linear_restart: false,
    };
    if residual.is_empty() {
        return Ok((u, stats));
    }
    while stats.iterations < settings.max_iterations {
        if norm <= tolerance {
            stats.residual_norm = norm;
            return Ok((u, stats));
        }
        let jac = assemble_jacobian_fd(&u, &problem.kernel, &problem.rule, settings.fd_step);
        let rhs: Vec<T> = residual.iter().map(|&r| -r).collect();
        let delta = match jac.solve(&rhs, settings.pivot_tolerance) {
            Ok(d) => d,
            Err(_) if !stats.linear_restart && stats.iterations == 0 => {
                stats.linear_restart = true;
                u = linear_start(mesh, &load, settings.pivot_tolerance)
                    .map_err(|source| GalerkinError::SingularJacobian { level, source })?;
                residual = free_residual(&u, problem, &load);
                norm = max_abs(&residual);
                continue;
            }
            Err(source) => return Err(GalerkinError::SingularJacobian { level, source }),
        };
        let current = &u.coefficients()[1..u.coefficients().len() - 1];
        let mut step = T::one();
        let mut halvings = 0;
        let (trial, trial_residual, trial_norm) = loop {
            let free: Vec<T> = current.iter().zip(&delta).map(|(&c, &d)| c + step * d).collect();
            let candidate = with_free_values(mesh, &free);
            let r = free_residual(&candidate, problem, &load);
            let n = max_abs(&r);
            if n < norm || halvings == settings.max_halvings {
                break (candidate, r, n);
            }
            step *= T::lit(0.5);
            halvings += 1;
        };
        stats.halvings += halvings;
        stats.iterations += 1;
        u = trial;
        residual = trial_residual;
        norm = trial_norm;
        stats.residual_norm = norm;
    }
    if norm <= tolerance {
        return Ok((u, stats));
    }
    Err(GalerkinError::NonConvergence {
        level,
        iterations: stats.iterations,
        residual: norm.to_f64_lossy(),
    })
}

/// Names of the fixed family of L² test functionals used as a weak-convergence surrogate.
pub const WEAK_FUNCTIONALS: [&str; 8] = ["1", "t", "t^2", "t^3", "sin(pi t)", "cos(pi t)", "sin(2 pi t)", "cos(2 pi t)"];

/// ⟨g_j, v⟩ = ∫ g_j(t(z)) v(z) dz for the functionals in [`WEAK_FUNCTIONALS`], with
/// t = (z − a)/(b − a) the position rescaled to [0, 1].
pub fn weak_pairings<T: Real>(v: &ScalarSamples<T>, domain: &Domain<T>) -> [T; 8] {
    let pi = T::lit(std::f64::consts::PI);
    let mut out = [T::zero(); 8];
    for ((&z, &w), &value) in v.points.iter().zip(&v.weights).zip(&v.values) {
        let t = (z - domain.left()) / domain.measure();
        let g = [
            T::one(),
            t,
            t * t,
            t * t * t,
            (pi * t).sin(),
            (pi * t).cos(),
            (T::lit(2.0) * pi * t).sin(),
            (T::lit(2.0) * pi * t).cos(),
        ];
        for (o, gj) in out.iter_mut().zip(g) {
            *o += w * gj * value;
        }
    }
    out
}

/// Error measures of one sequence member relative to a reference, all on the reference grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMeasures<T> {
    pub sobolev_error: T,
    pub lp_error: T,
    pub gradient_error: T,
    pub gradient_modular_error: T,
    /// ⟨A(u_n), u_n − u⟩.
    pub pairing: T,
    /// max_j |⟨g_j, u_n − u⟩|.
    pub weak_surrogate: T,
}

pub fn error_measures<T: Real>(
    member: &Samples<T>,
    reference: &Samples<T>,
    p: &ExponentField<T>,
    kernel: &CaratheodoryKernel<T>,
) -> Result<ErrorMeasures<T>, MeshError> {
    let diff = member.difference(reference)?;
    let (values, gradients) = (diff.value_field(), diff.gradient_field());
    let gradient_terms = ModularTerms::new(&gradients, p);
    Ok(ErrorMeasures {
        sobolev_error: sobolev_norm_of_samples(&diff, p).value,
        lp_error: ModularTerms::new(&values, p).luxemburg_norm().value,
        gradient_error: gradient_terms.luxemburg_norm().value,
        gradient_modular_error: gradient_terms.at_scale(T::one()),
        pairing: pairing_of_samples(member, &diff, kernel)?,
        weak_surrogate: max_abs(&weak_pairings(&values, p.domain())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Exact,
    FinestLevel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRecord<T> {
    pub level: u32,
    pub elements: usize,
    pub iterations: usize,
    pub residual_norm: T,
    pub linear_restart: bool,
    pub errors: ErrorMeasures<T>,
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "level",
    "elements",
    "iterations",
    "residual_norm",
    "sobolev_error",
    "lp_error",
    "gradient_error",
    "gradient_modular_error",
    "pairing",
    "weak_surrogate",
    "linear_restart",
];

#[derive(Debug, Clone)]
pub struct ConvergenceReport<T> {
    pub reference: ReferenceKind,
    pub rows: Vec<LevelRecord<T>>,
    /// Solutions on their native meshes, coarsest first.
    pub solutions: Vec<MeshedFunction<T>>,
}

impl<T: Real> ConvergenceReport<T> {
    pub fn row(&self, level: u32) -> Option<&LevelRecord<T>> {
        self.rows.iter().find(|r| r.level == level)
    }

    /// Strong W^{1,p(·)} error strictly decreasing across `levels`.
    pub fn sobolev_error_strictly_decreasing(&self, levels: std::ops::RangeInclusive<u32>) -> bool {
        let errors: Vec<T> = self
            .rows
            .iter()
            .filter(|r| levels.contains(&r.level))
            .map(|r| r.errors.sobolev_error)
            .collect();
        errors.len() >= 2 && errors.windows(2).all(|w| w[1] < w[0])
    }

    /// |pairing| non-increasing across `levels`.
    pub fn pairing_decreasing(&self, levels: std::ops::RangeInclusive<u32>) -> bool {
        let pairings: Vec<T> = self
            .rows
            .iter()
            .filter(|r| levels.contains(&r.level))
            .map(|r| r.errors.pairing.abs())
            .collect();
        pairings.windows(2).all(|w| w[1] <= w[0])
    }

    /// Observed rate log2(e_{n−1}/e_n) of the Sobolev error at `level`.
    pub fn observed_rate(&self, level: u32) -> Option<T> {
        let now = self.row(level)?.errors.sobolev_error;
        let before = self.row(level.checked_sub(1)?)?.errors.sobolev_error;
        Some((before / now).log2())
    }

    /// One CSV row per level, columns as in [`REPORT_COLUMNS`].
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MeshError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(REPORT_COLUMNS)?;
        for r in &self.rows {
            let e = &r.errors;
            out.write_record([
                r.level.to_string(),
                r.elements.to_string(),
                r.iterations.to_string(),
                format!("{:e}", r.residual_norm),
                format!("{:e}", e.sobolev_error),
                format!("{:e}", e.lp_error),
                format!("{:e}", e.gradient_error),
                format!("{:e}", e.gradient_modular_error),
                format!("{:e}", e.pairing),
                format!("{:e}", e.weak_surrogate),
                r.linear_restart.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Solves every level 0..=L with warm starts, then measures each solution against the
/// exact solution when one is supplied and against the level-L solution otherwise.
pub fn convergence_study<T: Real>(problem: &GalerkinProblem<T>) -> Result<ConvergenceReport<T>, GalerkinError> {
    let meshes: Vec<_> = (0..=problem.levels).map(|l| problem.mesh(l)).collect();
    let mut solutions: Vec<MeshedFunction<T>> = Vec::with_capacity(meshes.len());
    let mut stats = Vec::with_capacity(meshes.len());
    for mesh in &meshes {
        let guess = match solutions.last() {
            Some(prev) => Some(prev.prolong(mesh)?),
            None => None,
        };
        let (u, s) = solve_level(problem, mesh, guess.as_ref())?;
        solutions.push(u);
        stats.push(s);
    }
    let finest = &meshes[meshes.len() - 1];
    let (reference, reference_kind) = match &problem.exact {
        Some(exact) => (
            Samples::of_function(finest, &problem.rule, |z| (exact.value)(z), |z| (exact.derivative)(z)),
            ReferenceKind::Exact,
        ),
        None => (solutions[solutions.len() - 1].sample(&problem.rule), ReferenceKind::FinestLevel),
    };
    let mut rows = Vec::with_capacity(solutions.len());
    for ((u, s), mesh) in solutions.iter().zip(&stats).zip(&meshes) {
        let member = u.prolong(finest)?.sample(&problem.rule);
        rows.push(LevelRecord {
            level: mesh.level(),
            elements: mesh.element_count(),
            iterations: s.iterations,
            residual_norm: s.residual_norm,
            linear_restart: s.linear_restart,
            errors: error_measures(&member, &reference, &problem.exponent, &problem.kernel)?,
        });
    }
    Ok(ConvergenceReport {
        reference: reference_kind,
        rows,
        solutions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::builtin;
    use crate::operator::assemble_residual;
    use approx::assert_abs_diff_eq;

    fn laplace_problem(levels: u32) -> GalerkinProblem<f64> {
        let p = ExponentField::constant(Domain::unit(), 2.0).unwrap();
        let k = builtin::laplacian(Domain::unit()).unwrap();
        GalerkinProblem::new(p, k, Rhs::density(|_| 2.0), levels).unwrap()
    }

    #[test]
    fn rejects_bad_problems() {
        let p = ExponentField::constant(Domain::unit(), 2.0).unwrap();
        let k = builtin::laplacian(Domain::unit()).unwrap();
        assert!(GalerkinProblem::new(p.clone(), k.clone(), Rhs::zero(), 1).is_err());
        assert!(GalerkinProblem::new(p.clone(), k.clone(), Rhs::Functional(vec![0.0; 3]), 3).is_err());
        let one = ExponentField::constant(Domain::unit(), 1.0).unwrap();
        assert!(GalerkinProblem::new(one, k, Rhs::zero(), 3).is_err());
    }

    #[test]
    fn linear_problem_nodally_exact_in_one_step() {
        let problem = laplace_problem(4);
        for level in 1..=4 {
            let mesh = problem.mesh(level);
            let (u, stats) = solve_level(&problem, &mesh, None).unwrap();
            assert_eq!(stats.iterations, 1);
            for (&z, &c) in mesh.nodes().iter().zip(u.coefficients()) {
                assert_abs_diff_eq!(c, z * (1.0 - z), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let p = ExponentField::affine(Domain::unit(), 2.0, 1.0).unwrap();
        let k = builtin::perturbed_px_laplacian(&p).unwrap();
        let problem = GalerkinProblem::new(p, k, Rhs::zero(), 3).unwrap();
        let report = convergence_study(&problem).unwrap();
        for (row, u) in report.rows.iter().zip(&report.solutions) {
            assert!(u.coefficients().iter().all(|&c| c == 0.0));
            assert_eq!(row.errors.sobolev_error, 0.0);
            assert_eq!(row.iterations, 0);
        }
    }

    #[test]
    fn galerkin_orthogonality_holds() {
        let p = ExponentField::affine(Domain::unit(), 2.0, 1.0).unwrap();
        let k = builtin::perturbed_px_laplacian(&p).unwrap();
        let problem = GalerkinProblem::new(p, k, Rhs::density(|_| 1.0), 4).unwrap();
        let report = convergence_study(&problem).unwrap();
        for u in &report.solutions {
            let r = assemble_residual(u, &problem.kernel, &problem.rhs, &problem.rule).unwrap();
            assert!(r.iter().all(|v: &f64| v.abs() <= 1e-10 * 2.0), "{r:?}");
        }
    }

    #[test]
    fn manufactured_rhs_matches_known_sources() {
        let d = Domain::unit();
        let Rhs::Density(f3) = manufactured_p_laplacian_rhs(d, 3.0) else { unreachable!() };
        let Rhs::Density(f4) = manufactured_p_laplacian_rhs(d, 4.0) else { unreachable!() };
        let Rhs::Density(f2) = manufactured_p_laplacian_rhs(d, 2.0) else { unreachable!() };
        for z in [0.0, 0.1, 0.5, 0.77] {
            assert_abs_diff_eq!(f3(z), 4.0 * (1.0f64 - 2.0 * z).abs(), epsilon = 1e-14);
            assert_abs_diff_eq!(f4(z), 6.0 * (1.0f64 - 2.0 * z).powi(2), epsilon = 1e-14);
            assert_abs_diff_eq!(f2(z), 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn mismatched_initial_guess_rejected() {
        let problem = laplace_problem(3);
        let guess = MeshedFunction::zeros(problem.mesh(2), BoundaryTag::DirichletZero);
        assert!(matches!(
            solve_level(&problem, &problem.mesh(3), Some(&guess)),
            Err(GalerkinError::Mesh(MeshError::MeshMismatch))
        ));
    }

    #[test]
    fn csv_has_header_and_one_row_per_level() {
        let report = convergence_study(&laplace_problem(3)).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], REPORT_COLUMNS.join(","));
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn weak_pairings_of_constant() {
        let mesh = Mesh::<f64>::dyadic(Domain::unit(), 4);
        let rule = QuadratureRule::default();
        let one = Samples::of_function(&mesh, &rule, |_| 1.0, |_| 0.0).value_field();
        let w = weak_pairings(&one, &Domain::unit());
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w[4], 2.0 / std::f64::consts::PI, epsilon = 1e-12);
        assert_abs_diff_eq!(w[6], 0.0, epsilon = 1e-12);
    }
}
