//! Arithmetic expressions over chart coordinates.
//!
//! Grammar: numbers, `pi`, variables `x1..xn` (also `x`, `y`, `z` for the
//! first three), `+ - * / ^`, unary minus, parentheses and the functions
//! `cos sin exp pow(a, b) sqrt`. Evaluation is forward-mode differentiated
//! so coefficient gradients are exact.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Cos,
    Sin,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number '{text}' at column {}", start + 1)))?;
            out.push((start, Tok::Num(v)));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else {
            let t = match ch {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(ch),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(Error::Expression(format!(
                        "unexpected character '{ch}' at column {}",
                        i + 1
                    )))
                }
            };
            out.push((i, t));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0 + 1).unwrap_or(0)
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Expression(format!("expected {t:?} at column {}", self.col())))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            // right associative, binds tighter than unary minus on the left
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let a = self.expr()?;
                    let e = match name.as_str() {
                        "pow" => {
                            self.expect(Tok::Comma)?;
                            let b = self.expr()?;
                            Expr::Pow(Box::new(a), Box::new(b))
                        }
                        "cos" => Expr::Call(Func::Cos, Box::new(a)),
                        "sin" => Expr::Call(Func::Sin, Box::new(a)),
                        "exp" => Expr::Call(Func::Exp, Box::new(a)),
                        "sqrt" => Expr::Call(Func::Sqrt, Box::new(a)),
                        _ => {
                            return Err(Error::Expression(format!(
                                "unknown function '{name}' at column {col}"
                            )))
                        }
                    };
                    self.expect(Tok::RParen)?;
                    return Ok(e);
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "x" => self.var(0, col),
                    "y" => self.var(1, col),
                    "z" => self.var(2, col),
                    _ => {
                        let idx = name
                            .strip_prefix('x')
                            .and_then(|s| s.parse::<usize>().ok())
                            .filter(|&i| i >= 1)
                            .ok_or_else(|| {
                                Error::Expression(format!("unknown identifier '{name}' at column {col}"))
                            })?;
                        self.var(idx - 1, col)
                    }
                }
            }
            other => Err(Error::Expression(format!("unexpected {other:?} at column {col}"))),
        }
    }

    fn var(&self, i: usize, col: usize) -> Result<Expr> {
        if i >= self.dim {
            return Err(Error::Expression(format!(
                "variable x{} at column {col} exceeds dimension {}",
                i + 1,
                self.dim
            )));
        }
        Ok(Expr::Var(i))
    }
}

/// Value and gradient pair used for forward-mode evaluation.
#[derive(Debug, Clone)]
struct Dual {
    v: f64,
    d: Vec<f64>,
}

impl Dual {
    fn constant(v: f64, n: usize) -> Self {
        Self { v, d: vec![0.0; n] }
    }

    fn map(self, v: f64, dv: f64) -> Self {
        Self { v, d: self.d.into_iter().map(|x| x * dv).collect() }
    }

    fn combine(self, o: Self, v: f64, da: f64, db: f64) -> Self {
        Self {
            v,
            d: self.d.iter().zip(&o.d).map(|(a, b)| da * a + db * b).collect(),
        }
    }
}

impl Expr {
    pub fn parse(src: &str, dim: usize) -> Result<Expr> {
        let toks = tokenize(src)?;
        if toks.is_empty() {
            return Err(Error::Expression("empty expression".into()));
        }
        let mut p = Parser { toks, pos: 0, dim };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Expression(format!("trailing input at column {}", p.col())));
        }
        Ok(e)
    }

    pub fn has_vars(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(_) => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.has_vars(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.has_vars() || b.has_vars()
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Call(f, a) => {
                let v = a.eval(x);
                match f {
                    Func::Cos => v.cos(),
                    Func::Sin => v.sin(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        }
    }

    /// Value and exact gradient with respect to the coordinates.
    pub fn eval_with_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = self.dual(x);
        (d.v, d.d)
    }

    fn dual(&self, x: &[f64]) -> Dual {
        let n = x.len();
        match self {
            Expr::Num(v) => Dual::constant(*v, n),
            Expr::Var(i) => {
                let mut d = Dual::constant(x[*i], n);
                d.d[*i] = 1.0;
                d
            }
            Expr::Neg(a) => {
                let a = a.dual(x);
                let v = -a.v;
                a.map(v, -1.0)
            }
            Expr::Add(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                let v = a.v + b.v;
                a.combine(b, v, 1.0, 1.0)
            }
            Expr::Sub(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                let v = a.v - b.v;
                a.combine(b, v, 1.0, -1.0)
            }
            Expr::Mul(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                let (av, bv) = (a.v, b.v);
                a.combine(b, av * bv, bv, av)
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                let (av, bv) = (a.v, b.v);
                a.combine(b, av / bv, 1.0 / bv, -av / (bv * bv))
            }
            Expr::Pow(a, b) => {
                let (a, b) = (a.dual(x), b.dual(x));
                let (av, bv) = (a.v, b.v);
                let v = av.powf(bv);
                let da = if av == 0.0 { 0.0 } else { bv * av.powf(bv - 1.0) };
                let db = if av > 0.0 { v * av.ln() } else { 0.0 };
                a.combine(b, v, da, db)
            }
            Expr::Call(f, a) => {
                let a = a.dual(x);
                let av = a.v;
                match f {
                    Func::Cos => a.map(av.cos(), -av.sin()),
                    Func::Sin => a.map(av.sin(), av.cos()),
                    Func::Exp => a.map(av.exp(), av.exp()),
                    Func::Sqrt => a.map(av.sqrt(), 0.5 / av.sqrt()),
                }
            }
        }
    }
}
