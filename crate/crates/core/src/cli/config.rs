//! TOML experiment configuration. Unknown keys are rejected in every table.

use crate::ansatz::{Cutoff, Problem};
use crate::coeffs::{CoefficientField, FnField, ScalarField};
use crate::error::{check_exponent, Error, Result};
use crate::fullsolve::NewtonOptions;
use crate::ground_state::GroundStateProfile;
use crate::lift::{revolution_scenario, RevolutionScenario};
use crate::manifold::{CurveManifold, FlatTorus, GeneratingCurve, Manifold, RoundSphere, WarpedProduct};
use crate::reduction::{LandscapeOptions, ReductionOptions};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub manifold: ManifoldConfig,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub landscape: LandscapeConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub lift: LiftConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    FlatTorus,
    RoundSphere,
    /// The generating curve of a surface of revolution (n = 1).
    Revolution,
    /// Generating curve times a circle of length 2 pi (n = 2).
    RevolutionProduct,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub kind: ManifoldKind,
    /// Flat torus periods; default 2 pi in every direction.
    pub periods: Option<Vec<f64>>,
    /// Sphere radius.
    pub radius: Option<f64>,
    /// "circle" (rho = center + radius cos t, the default) or "cylinder"
    /// (rho = center, period curve_period).
    pub curve: Option<String>,
    pub curve_center: Option<f64>,
    pub curve_radius: Option<f64>,
    pub curve_period: Option<f64>,
    /// ... or a sampled curve read from CSV (t, y..., rho).
    pub curve_file: Option<PathBuf>,
    /// Fiber dimension k of the surface of revolution.
    #[serde(default = "one")]
    pub fiber_dim: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientConfig {
    pub a: String,
    pub b: String,
    pub c: String,
    /// "warped" sets a = b = c = rho^k on revolution manifolds.
    pub recipe: Option<String>,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self { a: "1".into(), b: "1".into(), c: "1".into(), recipe: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub shooting: f64,
    pub fixed_point: f64,
    pub newton: f64,
    pub projection: f64,
    pub fixed_point_max_iter: usize,
    pub newton_max_iter: usize,
    pub contraction_guard: f64,
    pub eps0: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let r = ReductionOptions::default();
        let n = NewtonOptions::default();
        Self {
            shooting: 1e-10,
            fixed_point: r.tol,
            newton: n.tol,
            projection: r.linear_tol,
            fixed_point_max_iter: r.max_iter,
            newton_max_iter: n.max_iter,
            contraction_guard: r.contraction_guard,
            eps0: r.eps0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub nodes_per_eps: f64,
    pub cutoff_radius: f64,
    /// "smooth" or "bump".
    pub cutoff: String,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { nodes_per_eps: 6.0, cutoff_radius: 2.5, cutoff: "smooth".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub eps: Vec<f64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { eps: vec![0.2, 0.1, 0.05] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub samples: Vec<usize>,
    pub hessian_floor: f64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        let d = LandscapeOptions::default();
        Self { samples: d.samples, hessian_floor: d.hessian_floor }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub xi0: Option<Vec<f64>>,
    /// "ansatz", "zero" or "file".
    pub seed: String,
    /// Solution CSV of a previous run (columns x1..xn, value) for seed = "file".
    pub seed_file: Option<PathBuf>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { xi0: None, seed: "ansatz".into(), seed_file: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftConfig {
    /// "warped", "hopf" or "fiber-projection".
    pub kind: String,
    /// "correct" or "inverse-square" (the 1/f^2 negative control).
    pub dilation: String,
    pub eps: f64,
    /// Curve parameter of the seed peak.
    pub t0: f64,
    pub samples: usize,
    /// Source residual tolerance at the base nodes.
    pub source_tolerance: f64,
    /// Bound on lifted residual / source residual.
    pub bound_factor: f64,
    /// Absolute bound for the morphism checks.
    pub check_bound: f64,
    pub fiber_nodes: usize,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self {
            kind: "warped".into(),
            dilation: "correct".into(),
            eps: 0.1,
            t0: 0.0,
            samples: 1000,
            source_tolerance: 1e-7,
            bound_factor: 3.0,
            check_bound: 1e-6,
            fiber_nodes: 16,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Fault to inject: "gamma-exponent".
    pub fault: Option<String>,
    /// Halve the node spacing of every discretized check.
    pub halve_mesh: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), seed: 1 }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => bad(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.problem.n;
        check_exponent(n, self.problem.p).map_err(|e| bad(e.to_string()))?;
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.shooting", t.shooting),
            ("tolerances.fixed_point", t.fixed_point),
            ("tolerances.newton", t.newton),
            ("tolerances.projection", t.projection),
            ("tolerances.contraction_guard", t.contraction_guard),
            ("tolerances.eps0", t.eps0),
            ("mesh.nodes_per_eps", self.mesh.nodes_per_eps),
            ("mesh.cutoff_radius", self.mesh.cutoff_radius),
        ] {
            if !(v > 0.0) {
                return Err(bad(format!("{name} must be positive, got {v}")));
            }
        }
        let eps = &self.schedule.eps;
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
            return Err(bad("schedule.eps must hold positive values"));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad(format!("schedule.eps must be strictly decreasing, got {eps:?}")));
        }
        if !["smooth", "bump"].contains(&self.mesh.cutoff.as_str()) {
            return Err(bad(format!("mesh.cutoff must be \"smooth\" or \"bump\", got {:?}", self.mesh.cutoff)));
        }
        if !["ansatz", "zero", "file"].contains(&self.solve.seed.as_str()) {
            return Err(bad(format!("solve.seed must be \"ansatz\", \"zero\" or \"file\", got {:?}", self.solve.seed)));
        }
        if self.solve.seed == "file" && self.solve.seed_file.is_none() {
            return Err(bad("solve.seed = \"file\" needs solve.seed_file"));
        }
        if !["warped", "hopf", "fiber-projection"].contains(&self.lift.kind.as_str()) {
            return Err(bad(format!("lift.kind must be \"warped\", \"hopf\" or \"fiber-projection\", got {:?}", self.lift.kind)));
        }
        if !["correct", "inverse-square"].contains(&self.lift.dilation.as_str()) {
            return Err(bad(format!("lift.dilation must be \"correct\" or \"inverse-square\", got {:?}", self.lift.dilation)));
        }
        if let Some(f) = &self.verify.fault {
            if f != "gamma-exponent" {
                return Err(bad(format!("verify.fault must be \"gamma-exponent\", got {f:?}")));
            }
        }
        if let Some(r) = &self.coefficients.recipe {
            if r != "warped" {
                return Err(bad(format!("coefficients.recipe must be \"warped\", got {r:?}")));
            }
        }
        let m = self.manifold()?;
        if m.dim() != n {
            return Err(bad(format!("problem.n = {n} but the manifold has dimension {}", m.dim())));
        }
        if let Some(x) = &self.solve.xi0 {
            if x.len() != n {
                return Err(bad(format!("solve.xi0 needs {n} coordinates")));
            }
        }
        self.coefficients()?;
        Ok(())
    }

    /// Apply --epsilon-override.
    pub fn override_schedule(&mut self, eps: Vec<f64>) -> Result<()> {
        self.schedule.eps = eps;
        self.validate()
    }

    fn curve(&self) -> Result<GeneratingCurve> {
        let m = &self.manifold;
        if let Some(path) = &m.curve_file {
            return GeneratingCurve::from_csv(path).map_err(|e| bad(format!("manifold.curve_file: {e}")));
        }
        let center = m.curve_center.unwrap_or(2.0);
        match m.curve.as_deref().unwrap_or("circle") {
            "circle" => {
                let r = m.curve_radius.unwrap_or(1.0);
                if !(r > 0.0 && r < center) {
                    return Err(bad(format!("manifold: circle needs 0 < curve_radius < curve_center, got {r} and {center}")));
                }
                Ok(GeneratingCurve::circle(center, r))
            }
            "cylinder" => {
                let period = m.curve_period.unwrap_or(std::f64::consts::TAU);
                if !(center > 0.0 && period > 0.0) {
                    return Err(bad("manifold: cylinder needs positive curve_center and curve_period"));
                }
                Ok(GeneratingCurve::cylinder(center, period))
            }
            other => Err(bad(format!("manifold.curve must be \"circle\" or \"cylinder\", got {other:?}"))),
        }
    }

    pub fn is_revolution(&self) -> bool {
        matches!(self.manifold.kind, ManifoldKind::Revolution | ManifoldKind::RevolutionProduct)
    }

    pub fn scenario(&self) -> Result<RevolutionScenario> {
        if !self.is_revolution() {
            return Err(bad("a surface-of-revolution manifold is required"));
        }
        revolution_scenario(self.curve()?, self.manifold.fiber_dim, self.problem.p, self.manifold.kind == ManifoldKind::RevolutionProduct)
    }

    pub fn manifold(&self) -> Result<Arc<dyn Manifold>> {
        let m = &self.manifold;
        let n = self.problem.n;
        Ok(match m.kind {
            ManifoldKind::FlatTorus => {
                let p = m.periods.clone().unwrap_or_else(|| vec![std::f64::consts::TAU; n]);
                Arc::new(FlatTorus::new(p).map_err(|e| bad(format!("manifold.periods: {e}")))?)
            }
            ManifoldKind::RoundSphere => Arc::new(RoundSphere::new(n, m.radius.unwrap_or(1.0)).map_err(|e| bad(format!("manifold: {e}")))?),
            ManifoldKind::Revolution => Arc::new(CurveManifold::new(self.curve()?)),
            ManifoldKind::RevolutionProduct => {
                let circle: Arc<dyn Manifold> = Arc::new(FlatTorus::new(vec![std::f64::consts::TAU])?);
                Arc::new(WarpedProduct::product(Arc::new(CurveManifold::new(self.curve()?)), circle))
            }
        })
    }

    pub fn coefficients(&self) -> Result<CoefficientField> {
        let n = self.problem.n;
        if self.coefficients.recipe.is_some() {
            if !self.is_revolution() {
                return Err(bad("coefficients.recipe = \"warped\" needs a revolution manifold"));
            }
            let curve = self.curve()?;
            let k = self.manifold.fiber_dim as i32;
            let (c1, c2) = (curve.clone(), curve);
            let f: Arc<dyn ScalarField> = Arc::new(
                FnField::new(&format!("rho^{k}"), move |x| c1.rho(x[0]).powi(k)).with_gradient(move |x| {
                    let [r, dr, _] = c2.rho_derivatives(x[0]);
                    let mut g = vec![0.0; n];
                    g[0] = k as f64 * r.powi(k - 1) * dr;
                    g
                }),
            );
            return Ok(CoefficientField::new(f.clone(), f.clone(), f));
        }
        let c = &self.coefficients;
        CoefficientField::from_expressions(&c.a, &c.b, &c.c, n).map_err(|e| bad(format!("coefficients: {e}")))
    }

    pub fn problem(&self, profile: Arc<GroundStateProfile>) -> Result<Problem> {
        let mut pr = Problem::new(self.manifold()?, self.coefficients()?, profile, self.mesh.cutoff_radius)?;
        pr.nodes_per_eps = self.mesh.nodes_per_eps;
        pr.cutoff = if self.mesh.cutoff == "bump" { Cutoff::Bump } else { Cutoff::Smooth };
        Ok(pr)
    }

    pub fn reduction_options(&self) -> ReductionOptions {
        let t = &self.tolerances;
        ReductionOptions {
            tol: t.fixed_point,
            max_iter: t.fixed_point_max_iter,
            contraction_guard: t.contraction_guard,
            eps0: t.eps0,
            linear_tol: t.projection,
            ..ReductionOptions::default()
        }
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions { tol: self.tolerances.newton, max_iter: self.tolerances.newton_max_iter, ..NewtonOptions::default() }
    }

    pub fn landscape_options(&self) -> LandscapeOptions {
        LandscapeOptions {
            samples: self.landscape.samples.clone(),
            hessian_floor: self.landscape.hessian_floor,
            reduction: self.reduction_options(),
        }
    }
}
