//! Coefficient triples (a, b, c) and the derived quantities A, B, gamma.

use crate::error::{Error, Result};
use crate::expr::Expr;
use std::fmt;
use std::sync::Arc;

/// A smooth scalar function of chart coordinates with its gradient.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn describe(&self) -> String;
    /// True when the field is known to be constant.
    fn is_constant(&self) -> bool {
        false
    }
}

impl fmt::Debug for dyn ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn describe(&self) -> String {
        format!("{}", self.0)
    }
    fn is_constant(&self) -> bool {
        true
    }
}

/// Parsed expression over chart coordinates.
#[derive(Debug, Clone)]
pub struct ExprField {
    source: String,
    expr: Expr,
}

impl ExprField {
    pub fn parse(source: &str, dim: usize) -> Result<Self> {
        Ok(Self { source: source.to_string(), expr: Expr::parse(source, dim)? })
    }
}

impl ScalarField for ExprField {
    fn value(&self, x: &[f64]) -> f64 {
        self.expr.eval(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.expr.eval_with_gradient(x).1
    }
    fn describe(&self) -> String {
        self.source.clone()
    }
    fn is_constant(&self) -> bool {
        !self.expr.has_vars()
    }
}

type Func = dyn Fn(&[f64]) -> f64 + Send + Sync;
type Grad = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Closure-backed field; the gradient falls back to 4th-order differences.
#[derive(Clone)]
pub struct FnField {
    name: String,
    f: Arc<Func>,
    grad: Option<Arc<Grad>>,
}

impl FnField {
    pub fn new(name: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.to_string(), f: Arc::new(f), grad: None }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }
}

impl ScalarField for FnField {
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.grad {
            return g(x);
        }
        let h = 1e-3;
        (0..x.len())
            .map(|i| {
                let at = |s: f64| {
                    let mut y = x.to_vec();
                    y[i] += s * h;
                    (self.f)(&y)
                };
                (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
            })
            .collect()
    }
    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Values of a, b, c at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffValues {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CoeffValues {
    pub fn big_a(&self) -> f64 {
        self.a / self.c
    }
    pub fn big_b(&self) -> f64 {
        self.b / self.c
    }
    /// gamma = (a/b)^{1/(p-2)}
    pub fn gamma(&self, p: f64) -> f64 {
        (self.a / self.b).powf(1.0 / (p - 2.0))
    }
}

/// The triple (a, b, c) of positive functions on the manifold.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub a: Arc<dyn ScalarField>,
    pub b: Arc<dyn ScalarField>,
    pub c: Arc<dyn ScalarField>,
}

impl CoefficientField {
    pub fn new(a: Arc<dyn ScalarField>, b: Arc<dyn ScalarField>, c: Arc<dyn ScalarField>) -> Self {
        Self { a, b, c }
    }

    pub fn constant(a: f64, b: f64, c: f64) -> Self {
        Self::new(Arc::new(Constant(a)), Arc::new(Constant(b)), Arc::new(Constant(c)))
    }

    pub fn from_expressions(a: &str, b: &str, c: &str, dim: usize) -> Result<Self> {
        Ok(Self::new(
            Arc::new(ExprField::parse(a, dim)?),
            Arc::new(ExprField::parse(b, dim)?),
            Arc::new(ExprField::parse(c, dim)?),
        ))
    }

    pub fn at(&self, x: &[f64]) -> CoeffValues {
        CoeffValues { a: self.a.value(x), b: self.b.value(x), c: self.c.value(x) }
    }

    /// Values at x, rejecting nonpositive entries.
    pub fn positive_at(&self, x: &[f64]) -> Result<CoeffValues> {
        let v = self.at(x);
        for (name, val) in [("a", v.a), ("b", v.b), ("c", v.c)] {
            if !(val > 0.0) {
                return Err(Error::NonpositiveCoefficient { name, value: val, at: x.to_vec() });
            }
        }
        Ok(v)
    }

    pub fn is_constant(&self) -> bool {
        self.a.is_constant() && self.b.is_constant() && self.c.is_constant()
    }
}

/// Concentration functional c^{n/2} a^{p/(p-2) - n/2} / b^{2/(p-2)}.
pub fn gamma_functional(v: CoeffValues, n: usize, p: f64) -> f64 {
    gamma_with_exponents(v, GammaExponents::new(n, p))
}

/// Exponents of the concentration functional; kept separate so fault
/// injection in the verification suite can perturb them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaExponents {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

impl GammaExponents {
    pub fn new(n: usize, p: f64) -> Self {
        let nh = n as f64 / 2.0;
        Self { c: nh, a: p / (p - 2.0) - nh, b: -2.0 / (p - 2.0) }
    }
}

pub fn gamma_with_exponents(v: CoeffValues, e: GammaExponents) -> f64 {
    v.c.powf(e.c) * v.a.powf(e.a) * v.b.powf(e.b)
}

/// Gradient of the concentration functional from the coefficient gradients.
pub fn gamma_gradient(coeffs: &CoefficientField, x: &[f64], n: usize, p: f64) -> Vec<f64> {
    let v = coeffs.at(x);
    let e = GammaExponents::new(n, p);
    let g = gamma_with_exponents(v, e);
    let (ga, gb, gc) = (coeffs.a.gradient(x), coeffs.b.gradient(x), coeffs.c.gradient(x));
    (0..x.len())
        .map(|i| g * (e.a * ga[i] / v.a + e.b * gb[i] / v.b + e.c * gc[i] / v.c))
        .collect()
}
