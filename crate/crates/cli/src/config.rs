//! Experiment configuration, read from TOML.

use serde::Deserialize;
use varexp::galerkin::{manufactured_p_laplacian_rhs, ExactSolution};
use varexp::operator::{builtin, Rhs};
use varexp::{CaratheodoryKernel, Domain, ExponentField, SolverSettings};

use anyhow::{anyhow, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Norm,
    CheckKernel,
    Solve,
    Converge,
    SplusProbe,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Norm => "norm",
            Command::CheckKernel => "check-kernel",
            Command::Solve => "solve",
            Command::Converge => "converge",
            Command::SplusProbe => "splus-probe",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub domain: DomainSpec,
    pub exponent: ExponentSpec,
    pub kernel: Option<KernelSpec>,
    pub rhs: Option<ClosedForm>,
    /// Function measured by `norm`.
    pub function: Option<ClosedForm>,
    pub exact: Option<ExactSpec>,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub check: CheckSpec,
    pub probe: Option<ProbeSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub left: f64,
    pub right: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self { left: 0.0, right: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentSpec {
    Constant { value: f64 },
    Affine { intercept: f64, slope: f64 },
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub label: String,
    /// Constant exponent of `p-laplacian`.
    pub p: Option<f64>,
}

/// Closed-form densities, written in the rescaled variable t = (z − a)/(b − a).
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClosedForm {
    /// f ≡ value.
    Constant { value: f64 },
    /// The source whose p-Laplacian solution is the bubble (z − a)(b − z).
    ManufacturedPLaplacian { p: f64 },
    /// scale·|1 − 2t|^power.
    AbsLinear {
        scale: f64,
        #[serde(default = "one")]
        power: f64,
    },
    /// amplitude·sin(frequency·π·t).
    Sine { amplitude: f64, frequency: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExactSpec {
    /// (z − a)(b − z).
    Bubble,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// Finest level; `solve` and `norm` use this level alone.
    pub levels: u32,
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
}

fn default_quadrature() -> usize {
    5
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            levels: 6,
            quadrature: default_quadrature(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub pivot_tolerance: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let s = SolverSettings::<f64>::default();
        Self {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            max_halvings: s.max_halvings,
            pivot_tolerance: s.pivot_tolerance,
        }
    }
}

impl SolverSpec {
    pub fn settings(&self) -> SolverSettings<f64> {
        SolverSettings {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            max_halvings: self.max_halvings,
            pivot_tolerance: self.pivot_tolerance,
            fd_step: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub samples: usize,
}

impl Default for CheckSpec {
    fn default() -> Self {
        Self { samples: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceChoice {
    Oscillation,
    Galerkin,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub sequence: SequenceChoice,
    /// Frequencies of the oscillation sequence.
    #[serde(default)]
    pub frequencies: Vec<u32>,
    /// Window widths of the integrability profile.
    #[serde(default)]
    pub windows: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))
    }

    pub fn domain(&self) -> Result<Domain<f64>> {
        Ok(Domain::new(self.domain.left, self.domain.right)?)
    }

    pub fn exponent(&self) -> Result<ExponentField<f64>> {
        let domain = self.domain()?;
        Ok(match &self.exponent {
            ExponentSpec::Constant { value } => ExponentField::constant(domain, *value)?,
            ExponentSpec::Affine { intercept, slope } => ExponentField::affine(domain, *intercept, *slope)?,
            ExponentSpec::Tabulated { nodes, values } => ExponentField::tabulated(domain, nodes.clone(), values.clone())?,
        })
    }

    pub fn kernel(&self, p: &ExponentField<f64>) -> Result<CaratheodoryKernel<f64>> {
        let spec = self.kernel.as_ref().context("config has no [kernel] section")?;
        Ok(builtin::by_label(&spec.label, p, spec.p)?)
    }

    pub fn rhs(&self) -> Result<Rhs<f64>> {
        let form = self.rhs.clone().context("config has no [rhs] section")?;
        let domain = self.domain()?;
        Ok(match form {
            ClosedForm::ManufacturedPLaplacian { p } => manufactured_p_laplacian_rhs(domain, p),
            other => {
                let f = other.function(domain);
                Rhs::density(f)
            }
        })
    }

    pub fn exact(&self) -> Result<Option<ExactSolution<f64>>> {
        Ok(match self.exact {
            Some(ExactSpec::Bubble) => Some(ExactSolution::bubble(self.domain()?)),
            None => None,
        })
    }
}

impl ClosedForm {
    pub fn function(&self, domain: Domain<f64>) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
        let (a, width) = (domain.left(), domain.measure());
        let form = self.clone();
        move |z| {
            let t = (z - a) / width;
            match form {
                ClosedForm::Constant { value } => value,
                ClosedForm::ManufacturedPLaplacian { p } => {
                    let w = (1.0 - 2.0 * t).abs() * width;
                    if w == 0.0 && p < 2.0 {
                        0.0
                    } else {
                        2.0 * (p - 1.0) * w.powf(p - 2.0)
                    }
                }
                ClosedForm::AbsLinear { scale, power } => scale * (1.0 - 2.0 * t).abs().powf(power),
                ClosedForm::Sine { amplitude, frequency } => amplitude * (frequency * std::f64::consts::PI * t).sin(),
            }
        }
    }
}
