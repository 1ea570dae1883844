//! Coordinate expressions with exact second derivatives.
//!
//! Every smooth input (metric components, contact form, Reeb field, the
//! endomorphism φ, immersions, deformation potentials) is a [`ScalarExpr`]
//! parsed from text. Expressions are immutable, cheap to clone, and can be
//! evaluated over any [`Scalar`]: plain `f64`, or a [`Jet`] for value,
//! gradient and Hessian in one forward pass.

mod jet;
mod oracle;
mod parse;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

pub use jet::{Jet, Scalar, MAX_VARS};
pub use oracle::{derivative_oracle, FiniteDifferenceJet};
pub use parse::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Ln,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "ln" => Func::Ln,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Ln => x.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Exponent {
    Int(i32),
    Real(f64),
}

impl Exponent {
    fn classify(c: f64) -> Self {
        if c.fract() == 0.0 && c.abs() < i32::MAX as f64 {
            Exponent::Int(c as i32)
        } else {
            Exponent::Real(c)
        }
    }
}

/// One instruction of the evaluation tape. Operands always refer to earlier
/// entries, so a single forward sweep evaluates the whole expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Node {
    Const(f64),
    Var(usize),
    Neg(usize),
    Func(Func, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, Exponent),
}

impl Node {
    fn shifted(self, by: usize) -> Node {
        match self {
            Node::Const(_) | Node::Var(_) => self,
            Node::Neg(a) => Node::Neg(a + by),
            Node::Func(f, a) => Node::Func(f, a + by),
            Node::Add(a, b) => Node::Add(a + by, b + by),
            Node::Sub(a, b) => Node::Sub(a + by, b + by),
            Node::Mul(a, b) => Node::Mul(a + by, b + by),
            Node::Div(a, b) => Node::Div(a + by, b + by),
            Node::Pow(a, e) => Node::Pow(a + by, e),
        }
    }
}

/// The coordinate names an expression may mention.
///
/// Canonical names are `{prefix}0 … {prefix}{dim-1}` (`x` for chart
/// coordinates, `u` for parameters of an immersion). Aliases map extra names
/// onto canonical indices.
#[derive(Debug, Clone, PartialEq)]
pub struct VarSpace {
    prefix: char,
    dim: usize,
    aliases: Vec<(String, usize)>,
}

impl VarSpace {
    pub fn chart(dim: usize) -> Self {
        Self {
            prefix: 'x',
            dim,
            aliases: Vec::new(),
        }
    }

    pub fn parameters(dim: usize) -> Self {
        Self {
            prefix: 'u',
            dim,
            aliases: Vec::new(),
        }
    }

    /// Adds aliases, in order, for coordinates `0, 1, …`.
    pub fn with_aliases<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        for (i, name) in names.iter().enumerate().take(self.dim) {
            self.aliases.push((name.as_ref().to_string(), i));
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prefix(&self) -> char {
        self.prefix
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        if let Some((_, i)) = self.aliases.iter().find(|(a, _)| a == name) {
            return Some(*i);
        }
        let rest = name.strip_prefix(self.prefix)?;
        if rest.is_empty() || (rest.len() > 1 && rest.starts_with('0')) {
            return None;
        }
        let i: usize = rest.parse().ok()?;
        (i < self.dim).then_some(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalErrorKind {
    DivisionByZero,
    NonPositiveSqrt(f64),
    NonPositiveLn(f64),
    NonPositivePowBase(f64),
    NonFinite,
    WrongArity { expected: usize, found: usize },
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DivisionByZero => write!(f, "division by zero"),
            Self::NonPositiveSqrt(v) => write!(f, "sqrt of non-positive value {v}"),
            Self::NonPositiveLn(v) => write!(f, "ln of non-positive value {v}"),
            Self::NonPositivePowBase(v) => {
                write!(f, "real power of non-positive base {v}")
            }
            Self::NonFinite => write!(f, "non-finite intermediate value"),
            Self::WrongArity { expected, found } => {
                write!(f, "expected a point with {expected} coordinates, got {found}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at point {point:?}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub point: Vec<f64>,
}

/// Value, gradient and Hessian of an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct JetValue {
    pub value: f64,
    pub partials: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

impl From<&Jet> for JetValue {
    fn from(jet: &Jet) -> Self {
        let n = jet.nvars();
        Self {
            value: jet.val(),
            partials: jet.gradient().to_vec(),
            hessian: DMatrix::from_fn(n, n, |i, j| jet.hess(i, j)),
        }
    }
}

/// A parsed expression in the coordinates of a [`VarSpace`].
#[derive(Debug, Clone)]
pub struct ScalarExpr {
    nodes: Arc<[Node]>,
    vars: Arc<VarSpace>,
}

impl ScalarExpr {
    pub fn parse(source: &str, vars: &VarSpace) -> Result<Self, ParseError> {
        parse::parse(source, vars)
    }

    pub fn constant(value: f64, vars: &VarSpace) -> Self {
        Self::from_nodes(vec![Node::Const(value)], vars.clone())
    }

    pub fn coordinate(index: usize, vars: &VarSpace) -> Self {
        assert!(index < vars.dim());
        Self::from_nodes(vec![Node::Var(index)], vars.clone())
    }

    fn from_nodes(nodes: Vec<Node>, vars: VarSpace) -> Self {
        Self {
            nodes: nodes.into(),
            vars: Arc::new(vars),
        }
    }

    pub fn arity(&self) -> usize {
        self.vars.dim()
    }

    pub fn vars(&self) -> &VarSpace {
        &self.vars
    }

    /// `Some(c)` if the expression is the bare constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        match &*self.nodes {
            [Node::Const(c)] => Some(*c),
            _ => None,
        }
    }

    /// Evaluates over any scalar type; `point` supplies one value per coordinate.
    pub fn eval<S: Scalar>(&self, point: &[S]) -> Result<S, EvalError> {
        let fail = |kind| EvalError {
            kind,
            point: point.iter().map(Scalar::value).collect(),
        };
        if point.len() != self.arity() {
            return Err(fail(EvalErrorKind::WrongArity {
                expected: self.arity(),
                found: point.len(),
            }));
        }
        let mut tape: Vec<S> = Vec::with_capacity(self.nodes.len());
        for node in self.nodes.iter() {
            let out = match *node {
                Node::Const(c) => S::from(c),
                Node::Var(i) => point[i],
                Node::Neg(a) => -tape[a],
                Node::Add(a, b) => tape[a] + tape[b],
                Node::Sub(a, b) => tape[a] - tape[b],
                Node::Mul(a, b) => tape[a] * tape[b],
                Node::Div(a, b) => {
                    if tape[b].value() == 0.0 {
                        return Err(fail(EvalErrorKind::DivisionByZero));
                    }
                    tape[a] / tape[b]
                }
                Node::Func(f, a) => {
                    let x = tape[a];
                    match f {
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Exp => x.exp(),
                        Func::Sqrt => {
                            if x.value() <= 0.0 {
                                return Err(fail(EvalErrorKind::NonPositiveSqrt(x.value())));
                            }
                            x.sqrt()
                        }
                        Func::Ln => {
                            if x.value() <= 0.0 {
                                return Err(fail(EvalErrorKind::NonPositiveLn(x.value())));
                            }
                            x.ln()
                        }
                    }
                }
                Node::Pow(a, Exponent::Int(k)) => {
                    let x = tape[a];
                    if k < 0 && x.value() == 0.0 {
                        return Err(fail(EvalErrorKind::DivisionByZero));
                    }
                    x.powi(k)
                }
                Node::Pow(a, Exponent::Real(c)) => {
                    let x = tape[a];
                    if x.value() <= 0.0 {
                        return Err(fail(EvalErrorKind::NonPositivePowBase(x.value())));
                    }
                    x.powf(c)
                }
            };
            if !out.value().is_finite() {
                return Err(fail(EvalErrorKind::NonFinite));
            }
            tape.push(out);
        }
        Ok(*tape.last().expect("expressions are never empty"))
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.eval(point)
    }

    /// Second-order jet at `point` with respect to all coordinates.
    pub fn jet_at(&self, point: &[f64]) -> Result<Jet, EvalError> {
        let n = point.len();
        if n > MAX_VARS {
            return Err(EvalError {
                kind: EvalErrorKind::WrongArity {
                    expected: MAX_VARS,
                    found: n,
                },
                point: point.to_vec(),
            });
        }
        let seeds: Vec<Jet> = point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(v, i, n))
            .collect();
        self.eval(&seeds)
    }

    /// Value and exact first and second partials at `point`.
    pub fn eval_jet2(&self, point: &[f64]) -> Result<JetValue, EvalError> {
        Ok(JetValue::from(&self.jet_at(point)?))
    }

    fn combine(&self, other: &ScalarExpr, op: fn(usize, usize) -> Node) -> ScalarExpr {
        assert_eq!(
            self.arity(),
            other.arity(),
            "combining expressions over different coordinate spaces"
        );
        let offset = self.nodes.len();
        let mut nodes: Vec<Node> = Vec::with_capacity(offset + other.nodes.len() + 1);
        nodes.extend(self.nodes.iter().copied());
        nodes.extend(other.nodes.iter().map(|n| n.shifted(offset)));
        nodes.push(op(offset - 1, nodes.len() - 1));
        Self {
            nodes: nodes.into(),
            vars: self.vars.clone(),
        }
    }

    pub fn scaled(&self, c: f64) -> ScalarExpr {
        if let Some(v) = self.as_constant() {
            return ScalarExpr::constant(v * c, &self.vars);
        }
        self * &ScalarExpr::constant(c, &self.vars)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn write_node(&self, idx: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.nodes[idx] {
            Node::Const(c) => {
                if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(i) => write!(f, "{}{}", self.vars.prefix, i),
            Node::Neg(a) => {
                write!(f, "(-")?;
                self.write_node(a, f)?;
                write!(f, ")")
            }
            Node::Func(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write_node(a, f)?;
                write!(f, ")")
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let op = match self.nodes[idx] {
                    Node::Add(..) => '+',
                    Node::Sub(..) => '-',
                    Node::Mul(..) => '*',
                    _ => '/',
                };
                write!(f, "(")?;
                self.write_node(a, f)?;
                write!(f, " {op} ")?;
                self.write_node(b, f)?;
                write!(f, ")")
            }
            Node::Pow(a, e) => {
                write!(f, "(")?;
                self.write_node(a, f)?;
                match e {
                    Exponent::Int(k) => write!(f, ")^({k})"),
                    Exponent::Real(c) => write!(f, ")^({c:?})"),
                }
            }
        }
    }
}

/// Fully parenthesized canonical form; re-parses to an equivalent tape.
impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_node(self.nodes.len() - 1, f)
    }
}

impl Add for &ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: &ScalarExpr) -> ScalarExpr {
        self.combine(rhs, Node::Add)
    }
}

impl Sub for &ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: &ScalarExpr) -> ScalarExpr {
        self.combine(rhs, Node::Sub)
    }
}

impl Mul for &ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: &ScalarExpr) -> ScalarExpr {
        self.combine(rhs, Node::Mul)
    }
}

impl Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        let mut nodes: Vec<Node> = self.nodes.to_vec();
        nodes.push(Node::Neg(nodes.len() - 1));
        ScalarExpr {
            nodes: nodes.into(),
            vars: self.vars.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn chart(d: usize) -> VarSpace {
        VarSpace::chart(d)
    }

    #[test]
    fn evaluates_simple_products() {
        let e = ScalarExpr::parse("sin(x0)*x1", &chart(2)).unwrap();
        assert_eq!(e.eval_f64(&[PI / 2.0, 3.0]).unwrap(), 3.0);
        let e = ScalarExpr::parse("x0^2 + 1", &chart(1)).unwrap();
        assert_eq!(e.eval_f64(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn exp_is_its_own_derivative() {
        let e = ScalarExpr::parse("exp(x0)", &chart(1)).unwrap();
        let j = e.eval_jet2(&[1.0]).unwrap();
        assert_eq!(j.value, E);
        assert_eq!(j.partials[0], E);
        assert_eq!(j.hessian[(0, 0)], E);
    }

    #[test]
    fn jet_examples() {
        let j = ScalarExpr::parse("x0*x1", &chart(2))
            .unwrap()
            .eval_jet2(&[2.0, 3.0])
            .unwrap();
        assert_eq!((j.value, j.partials.clone()), (6.0, vec![3.0, 2.0]));
        assert_eq!(j.hessian[(0, 1)], 1.0);

        let j = ScalarExpr::parse("cos(x0)", &chart(1))
            .unwrap()
            .eval_jet2(&[0.0])
            .unwrap();
        assert_eq!((j.value, j.partials[0], j.hessian[(0, 0)]), (1.0, 0.0, -1.0));

        let j = ScalarExpr::parse("x0^3", &chart(1))
            .unwrap()
            .eval_jet2(&[2.0])
            .unwrap();
        assert_eq!((j.value, j.partials[0], j.hessian[(0, 0)]), (8.0, 12.0, 12.0));
    }

    #[test]
    fn power_is_right_associative_and_binds_tighter_than_minus() {
        let e = ScalarExpr::parse("2^3^2", &chart(1)).unwrap();
        assert_eq!(e.eval_f64(&[0.0]).unwrap(), 512.0);
        let e = ScalarExpr::parse("-x0^2", &chart(1)).unwrap();
        assert_eq!(e.eval_f64(&[3.0]).unwrap(), -9.0);
        let e = ScalarExpr::parse("x0^-2", &chart(1)).unwrap();
        assert_eq!(e.eval_f64(&[2.0]).unwrap(), 0.25);
    }

    #[test]
    fn integer_powers_accept_negative_bases() {
        let e = ScalarExpr::parse("x0^3", &chart(1)).unwrap();
        assert_eq!(e.eval_f64(&[-2.0]).unwrap(), -8.0);
        let e = ScalarExpr::parse("x0^0.5", &chart(1)).unwrap();
        assert!(e.eval_f64(&[-2.0]).is_err());
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = ScalarExpr::parse("x0 + y", &chart(1)).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnboundIdentifier("y".into()));
        assert_eq!(err.position, 5);

        let err = ScalarExpr::parse("x1", &chart(1)).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnboundIdentifier(_)));

        let err = ScalarExpr::parse("sin(x0, x0)", &chart(1)).unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::Arity {
                expected: 1,
                found: 2,
                ..
            }
        ));

        let err = ScalarExpr::parse("x0 ^ x0", &chart(1)).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonConstantExponent);

        let err = ScalarExpr::parse("(x0 + 1", &chart(1)).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);

        let err = ScalarExpr::parse("x0 $ 1", &chart(1)).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(err.position, 3);

        assert!(ScalarExpr::parse("x0 x0", &chart(1)).is_err());
        assert!(ScalarExpr::parse("", &chart(1)).is_err());
    }

    #[test]
    fn aliases_resolve_to_canonical_coordinates() {
        let vars = VarSpace::chart(3).with_aliases(&["x", "y", "z"]);
        let e = ScalarExpr::parse("z - y*x + x2", &vars).unwrap();
        assert_eq!(e.eval_f64(&[2.0, 3.0, 1.0]).unwrap(), 1.0 - 6.0 + 1.0);
        assert!(e.to_string().contains("x2"));
    }

    #[test]
    fn domain_violations_report_the_point() {
        let e = ScalarExpr::parse("ln(x0)", &chart(1)).unwrap();
        let err = e.eval_f64(&[-1.0]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::NonPositiveLn(-1.0));
        assert_eq!(err.point, vec![-1.0]);
        let e = ScalarExpr::parse("1/(x0 - 1)", &chart(1)).unwrap();
        assert_eq!(
            e.eval_f64(&[1.0]).unwrap_err().kind,
            EvalErrorKind::DivisionByZero
        );
        let e = ScalarExpr::parse("exp(exp(exp(x0)))", &chart(1)).unwrap();
        assert_eq!(
            e.eval_f64(&[10.0]).unwrap_err().kind,
            EvalErrorKind::NonFinite
        );
    }

    #[test]
    fn composition_operators_build_equivalent_trees() {
        let v = chart(2);
        let a = ScalarExpr::parse("x0*x1", &v).unwrap();
        let b = ScalarExpr::parse("sin(x1)", &v).unwrap();
        let c = &(&a + &b) * &(-&a);
        let p = [0.3, -1.2];
        let expect = -(0.3 * -1.2 + (-1.2f64).sin()) * (0.3 * -1.2);
        assert_eq!(c.eval_f64(&p).unwrap(), expect);
        let round = ScalarExpr::parse(&c.to_string(), &v).unwrap();
        assert_eq!(round.eval_f64(&p).unwrap(), expect);
    }

    #[test]
    fn printing_handles_negative_and_tiny_constants() {
        let v = chart(1);
        let e = ScalarExpr::constant(-1.5e-300, &v);
        let back = ScalarExpr::parse(&e.to_string(), &v).unwrap();
        assert_eq!(back.eval_f64(&[0.0]).unwrap(), -1.5e-300);
        let e = ScalarExpr::parse("x0^(-0.5)", &v).unwrap();
        let back = ScalarExpr::parse(&e.to_string(), &v).unwrap();
        assert_eq!(back.eval_f64(&[4.0]).unwrap(), 0.5);
    }
}
