use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::jet::Jet2;
use super::ExprError;

/// Built-in single-argument functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sqrt,
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree node. Subtrees are reference counted so that derivative
/// and substitution results can share structure (the tree is a DAG).
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Coord(usize),
    Param(usize),
    Neg(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Pow(Arc<Node>, Arc<Node>),
    Call(Func, Arc<Node>),
    Atan2(Arc<Node>, Arc<Node>),
}

/// Coordinate and parameter names an expression is written against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub coords: Vec<String>,
    pub params: Vec<String>,
}

impl Vocabulary {
    pub fn new(coords: &[&str], params: &[&str]) -> Self {
        Self {
            coords: coords.iter().map(|s| s.to_string()).collect(),
            params: params.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// A parsed scalar expression over chart coordinates and named parameters.
#[derive(Clone, Debug)]
pub struct Expression {
    root: Arc<Node>,
    vocab: Arc<Vocabulary>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab && self.root == other.root
    }
}

impl Expression {
    pub fn from_node(root: Arc<Node>, vocab: Arc<Vocabulary>) -> Self {
        Self { root, vocab }
    }

    pub fn constant(value: f64, vocab: Arc<Vocabulary>) -> Self {
        Self { root: Arc::new(Node::Num(value)), vocab }
    }

    pub fn coord(index: usize, vocab: Arc<Vocabulary>) -> Self {
        assert!(index < vocab.coords.len());
        Self { root: Arc::new(Node::Coord(index)), vocab }
    }

    pub fn root(&self) -> &Arc<Node> {
        &self.root
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.vocab.coords.len()
    }

    /// Value of the expression if it contains no coordinates or parameters.
    pub fn as_constant(&self) -> Option<f64> {
        const_value(&self.root)
    }

    /// Replace every parameter by its bound value.
    pub fn bind(&self, params: &HashMap<String, f64>) -> Result<Expression, ExprError> {
        let values = resolve_params(&self.vocab, params)?;
        let vocab = Arc::new(Vocabulary { coords: self.vocab.coords.clone(), params: Vec::new() });
        let mut memo = HashMap::new();
        let root = rewrite(&self.root, &mut memo, &mut |n| match n {
            Node::Param(i) => Some(Arc::new(Node::Num(values[*i]))),
            _ => None,
        });
        Ok(Expression { root, vocab })
    }

    /// Evaluate value, gradient and Hessian at `point`.
    pub fn eval_jet2(&self, point: &[f64], params: &HashMap<String, f64>) -> Result<Jet2, ExprError> {
        let values = resolve_params(&self.vocab, params)?;
        self.eval_jet2_with(point, &values)
    }

    /// Like [`Expression::eval_jet2`] with parameter values in declaration order.
    pub fn eval_jet2_with(&self, point: &[f64], params: &[f64]) -> Result<Jet2, ExprError> {
        if point.len() != self.dim() {
            return Err(ExprError::Arity { expected: self.dim(), got: point.len() });
        }
        let mut ev = Evaluator::new(point, params)?;
        ev.vocab = Some(self.vocab.clone());
        ev.eval(&self.root)
    }

    /// Plain value at `point`; parameters must already be bound.
    pub fn eval_value(&self, point: &[f64]) -> Result<f64, ExprError> {
        Ok(self.eval_jet2_with(point, &[])?.value())
    }

    /// Symbolic partial derivative with respect to coordinate `var`.
    pub fn derivative(&self, var: usize) -> Expression {
        let mut memo = HashMap::new();
        let root = diff(&self.root, var, &mut memo);
        Expression { root, vocab: self.vocab.clone() }
    }

    /// Compose with a coordinate change: coordinate `i` is replaced by
    /// `replacements[i]`. The result lives in the replacements' vocabulary.
    pub fn substitute(&self, replacements: &[Expression]) -> Result<Expression, ExprError> {
        if replacements.len() != self.dim() {
            return Err(ExprError::Arity { expected: self.dim(), got: replacements.len() });
        }
        if !self.vocab.params.is_empty() {
            return Err(ExprError::Unbound(self.vocab.params[0].clone()));
        }
        let vocab = replacements
            .first()
            .map(|e| e.vocab.clone())
            .unwrap_or_else(|| self.vocab.clone());
        if replacements.iter().any(|e| e.vocab != vocab) {
            return Err(ExprError::VocabularyMismatch);
        }
        let mut memo = HashMap::new();
        let root = rewrite(&self.root, &mut memo, &mut |n| match n {
            Node::Coord(i) => Some(replacements[*i].root.clone()),
            _ => None,
        });
        Ok(Expression { root, vocab })
    }

    /// Re-express over another vocabulary whose coordinates include all of ours.
    pub fn with_vocabulary(&self, vocab: Arc<Vocabulary>) -> Result<Expression, ExprError> {
        let map: Vec<usize> = self
            .vocab
            .coords
            .iter()
            .map(|c| {
                vocab.coords.iter().position(|d| d == c).ok_or_else(|| ExprError::UnknownIdentifier {
                    name: c.clone(),
                    pos: 0,
                })
            })
            .collect::<Result<_, _>>()?;
        let pmap: Vec<usize> = self
            .vocab
            .params
            .iter()
            .map(|c| {
                vocab.params.iter().position(|d| d == c).ok_or_else(|| ExprError::UnknownIdentifier {
                    name: c.clone(),
                    pos: 0,
                })
            })
            .collect::<Result<_, _>>()?;
        let mut memo = HashMap::new();
        let root = rewrite(&self.root, &mut memo, &mut |n| match n {
            Node::Coord(i) => Some(Arc::new(Node::Coord(map[*i]))),
            Node::Param(i) => Some(Arc::new(Node::Param(pmap[*i]))),
            _ => None,
        });
        Ok(Expression { root, vocab })
    }

    pub fn add(&self, other: &Expression) -> Expression {
        Expression { root: s_add(&self.root, &other.root), vocab: self.vocab.clone() }
    }

    pub fn mul(&self, other: &Expression) -> Expression {
        Expression { root: s_mul(&self.root, &other.root), vocab: self.vocab.clone() }
    }

    pub fn sub(&self, other: &Expression) -> Expression {
        Expression { root: s_sub(&self.root, &other.root), vocab: self.vocab.clone() }
    }

    pub fn div(&self, other: &Expression) -> Expression {
        Expression { root: s_div(&self.root, &other.root), vocab: self.vocab.clone() }
    }

    pub fn neg(&self) -> Expression {
        Expression { root: s_neg(&self.root), vocab: self.vocab.clone() }
    }

    pub fn apply(&self, f: Func) -> Expression {
        Expression { root: Arc::new(Node::Call(f, self.root.clone())), vocab: self.vocab.clone() }
    }

    /// `atan2(self, x)`.
    pub fn atan2(&self, x: &Expression) -> Expression {
        Expression { root: Arc::new(Node::Atan2(self.root.clone(), x.root.clone())), vocab: self.vocab.clone() }
    }

    pub fn scale(&self, c: f64) -> Expression {
        Expression { root: s_mul(&num(c), &self.root), vocab: self.vocab.clone() }
    }

    pub fn is_zero(&self) -> bool {
        is_num(&self.root, 0.0)
    }
}

pub(crate) fn resolve_params(vocab: &Vocabulary, params: &HashMap<String, f64>) -> Result<Vec<f64>, ExprError> {
    vocab
        .params
        .iter()
        .map(|p| params.get(p).copied().ok_or_else(|| ExprError::Unbound(p.clone())))
        .collect()
}

fn const_value(n: &Node) -> Option<f64> {
    Some(match n {
        Node::Num(v) => *v,
        Node::Neg(a) => -const_value(a)?,
        Node::Add(a, b) => const_value(a)? + const_value(b)?,
        Node::Sub(a, b) => const_value(a)? - const_value(b)?,
        Node::Mul(a, b) => const_value(a)? * const_value(b)?,
        Node::Div(a, b) => const_value(a)? / const_value(b)?,
        _ => return None,
    })
}

/// Evaluates a DAG with memoization of shared subtrees.
pub struct Evaluator<'a> {
    point: &'a [f64],
    params: &'a [f64],
    vocab: Option<Arc<Vocabulary>>,
    memo: HashMap<*const Node, Jet2>,
}

impl<'a> Evaluator<'a> {
    pub fn new(point: &'a [f64], params: &'a [f64]) -> Result<Self, ExprError> {
        if point.len() > super::jet::MAX_DIM {
            return Err(ExprError::Arity { expected: super::jet::MAX_DIM, got: point.len() });
        }
        Ok(Self { point, params, vocab: None, memo: HashMap::new() })
    }

    /// Evaluate several expressions sharing one memo table.
    pub fn eval_all(&mut self, exprs: &[Expression]) -> Result<Vec<Jet2>, ExprError> {
        exprs
            .iter()
            .map(|e| {
                if e.dim() != self.point.len() {
                    return Err(ExprError::Arity { expected: e.dim(), got: self.point.len() });
                }
                self.vocab = Some(e.vocab.clone());
                self.eval(&e.root)
            })
            .collect()
    }

    pub fn eval(&mut self, node: &Arc<Node>) -> Result<Jet2, ExprError> {
        let shared = Arc::strong_count(node) > 1;
        let key = Arc::as_ptr(node);
        if shared {
            if let Some(j) = self.memo.get(&key) {
                return Ok(*j);
            }
        }
        let out = self.eval_node(node)?;
        if shared {
            self.memo.insert(key, out);
        }
        Ok(out)
    }

    fn eval_node(&mut self, node: &Arc<Node>) -> Result<Jet2, ExprError> {
        let dim = self.point.len();
        let vocab = self.vocab.clone();
        let domain =
            |msg: &str| ExprError::Domain { message: msg.to_string(), subexpr: print_node(node, vocab.as_deref()) };
        Ok(match node.as_ref() {
            Node::Num(v) => Jet2::constant(dim, *v),
            Node::Coord(i) => Jet2::variable(dim, *i, self.point[*i]),
            Node::Param(i) => Jet2::constant(
                dim,
                *self.params.get(*i).ok_or_else(|| ExprError::Unbound(format!("#{i}")))?,
            ),
            Node::Neg(a) => -self.eval(a)?,
            Node::Add(a, b) => self.eval(a)? + self.eval(b)?,
            Node::Sub(a, b) => self.eval(a)? - self.eval(b)?,
            Node::Mul(a, b) => self.eval(a)? * self.eval(b)?,
            Node::Div(a, b) => {
                let num = self.eval(a)?;
                let den = self.eval(b)?;
                if den.value() == 0.0 {
                    return Err(domain("division by zero"));
                }
                num * den.recip()
            }
            Node::Pow(a, b) => {
                let base = self.eval(a)?;
                if let Some(c) = const_value(b) {
                    if c.fract() == 0.0 && c.abs() <= 64.0 {
                        if base.value() == 0.0 && c < 0.0 {
                            return Err(domain("zero raised to a negative power"));
                        }
                        base.powi(c as i32)
                    } else {
                        if base.value() < 0.0 || (base.value() == 0.0 && c < 2.0) {
                            return Err(domain("non-integer power of a non-positive base"));
                        }
                        base.powf(c)
                    }
                } else {
                    if base.value() <= 0.0 {
                        return Err(domain("variable power of a non-positive base"));
                    }
                    let exponent = self.eval(b)?;
                    (exponent * base.ln()).exp()
                }
            }
            Node::Call(f, a) => {
                let u = self.eval(a)?;
                let x = u.value();
                match f {
                    Func::Sqrt => {
                        if x <= 0.0 {
                            return Err(domain("sqrt of a non-positive argument"));
                        }
                        u.sqrt()
                    }
                    Func::Exp => u.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(domain("log of a non-positive argument"));
                        }
                        u.ln()
                    }
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Tan => {
                        if x.cos() == 0.0 {
                            return Err(domain("tan at a pole"));
                        }
                        u.tan()
                    }
                    Func::Sinh => u.sinh(),
                    Func::Cosh => u.cosh(),
                    Func::Tanh => u.tanh(),
                    Func::Abs => u.abs(),
                }
            }
            Node::Atan2(a, b) => {
                let y = self.eval(a)?;
                let x = self.eval(b)?;
                if x.value() == 0.0 && y.value() == 0.0 {
                    return Err(domain("atan2 at the origin"));
                }
                y.atan2(&x)
            }
        })
    }
}

// --- smart constructors used by differentiation and substitution ---

fn num(v: f64) -> Arc<Node> {
    Arc::new(Node::Num(v))
}

fn is_num(n: &Node, v: f64) -> bool {
    matches!(n, Node::Num(x) if *x == v)
}

fn s_add(a: &Arc<Node>, b: &Arc<Node>) -> Arc<Node> {
    if is_num(a, 0.0) {
        return b.clone();
    }
    if is_num(b, 0.0) {
        return a.clone();
    }
    Arc::new(Node::Add(a.clone(), b.clone()))
}

fn s_sub(a: &Arc<Node>, b: &Arc<Node>) -> Arc<Node> {
    if is_num(b, 0.0) {
        return a.clone();
    }
    if is_num(a, 0.0) {
        return s_neg(b);
    }
    Arc::new(Node::Sub(a.clone(), b.clone()))
}

fn s_neg(a: &Arc<Node>) -> Arc<Node> {
    match a.as_ref() {
        Node::Num(v) => num(-v),
        Node::Neg(inner) => inner.clone(),
        _ => Arc::new(Node::Neg(a.clone())),
    }
}

fn s_mul(a: &Arc<Node>, b: &Arc<Node>) -> Arc<Node> {
    if is_num(a, 0.0) || is_num(b, 0.0) {
        return num(0.0);
    }
    if is_num(a, 1.0) {
        return b.clone();
    }
    if is_num(b, 1.0) {
        return a.clone();
    }
    Arc::new(Node::Mul(a.clone(), b.clone()))
}

fn s_div(a: &Arc<Node>, b: &Arc<Node>) -> Arc<Node> {
    if is_num(a, 0.0) {
        return num(0.0);
    }
    if is_num(b, 1.0) {
        return a.clone();
    }
    Arc::new(Node::Div(a.clone(), b.clone()))
}

fn diff(n: &Arc<Node>, var: usize, memo: &mut HashMap<*const Node, Arc<Node>>) -> Arc<Node> {
    let key = Arc::as_ptr(n);
    if let Some(d) = memo.get(&key) {
        return d.clone();
    }
    let d = match n.as_ref() {
        Node::Num(_) | Node::Param(_) => num(0.0),
        Node::Coord(i) => num(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => s_neg(&diff(a, var, memo)),
        Node::Add(a, b) => s_add(&diff(a, var, memo), &diff(b, var, memo)),
        Node::Sub(a, b) => s_sub(&diff(a, var, memo), &diff(b, var, memo)),
        Node::Mul(a, b) => {
            let (da, db) = (diff(a, var, memo), diff(b, var, memo));
            s_add(&s_mul(&da, b), &s_mul(a, &db))
        }
        Node::Div(a, b) => {
            // (a/b)' = a'/b - (a/b) * b'/b
            let (da, db) = (diff(a, var, memo), diff(b, var, memo));
            s_sub(&s_div(&da, b), &s_mul(n, &s_div(&db, b)))
        }
        Node::Pow(a, b) => {
            let da = diff(a, var, memo);
            if let Some(c) = const_value(b) {
                if c == 0.0 {
                    num(0.0)
                } else {
                    let lowered = if c == 1.0 {
                        num(1.0)
                    } else {
                        Arc::new(Node::Pow(a.clone(), num(c - 1.0)))
                    };
                    s_mul(&s_mul(&num(c), &lowered), &da)
                }
            } else {
                // (a^b)' = a^b * (b' ln a + b a'/a)
                let db = diff(b, var, memo);
                let ln_a = Arc::new(Node::Call(Func::Log, a.clone()));
                let inner = s_add(&s_mul(&db, &ln_a), &s_mul(b, &s_div(&da, a)));
                s_mul(n, &inner)
            }
        }
        Node::Call(f, a) => {
            let da = diff(a, var, memo);
            if is_num(&da, 0.0) {
                num(0.0)
            } else {
                let outer = match f {
                    Func::Sqrt => s_div(&num(0.5), n),
                    Func::Exp => n.clone(),
                    Func::Log => s_div(&num(1.0), a),
                    Func::Sin => Arc::new(Node::Call(Func::Cos, a.clone())),
                    Func::Cos => s_neg(&Arc::new(Node::Call(Func::Sin, a.clone()))),
                    Func::Tan => s_add(&num(1.0), &s_mul(n, n)),
                    Func::Sinh => Arc::new(Node::Call(Func::Cosh, a.clone())),
                    Func::Cosh => Arc::new(Node::Call(Func::Sinh, a.clone())),
                    Func::Tanh => s_sub(&num(1.0), &s_mul(n, n)),
                    Func::Abs => s_div(a, n),
                };
                s_mul(&outer, &da)
            }
        }
        Node::Atan2(y, x) => {
            let (dy, dx) = (diff(y, var, memo), diff(x, var, memo));
            let numer = s_sub(&s_mul(x, &dy), &s_mul(y, &dx));
            if is_num(&numer, 0.0) {
                num(0.0)
            } else {
                let rho = s_add(&s_mul(x, x), &s_mul(y, y));
                s_div(&numer, &rho)
            }
        }
    };
    memo.insert(key, d.clone());
    d
}

/// Bottom-up rewrite preserving sharing; `leaf` may replace any node outright.
fn rewrite(
    n: &Arc<Node>,
    memo: &mut HashMap<*const Node, Arc<Node>>,
    leaf: &mut dyn FnMut(&Node) -> Option<Arc<Node>>,
) -> Arc<Node> {
    let key = Arc::as_ptr(n);
    if let Some(r) = memo.get(&key) {
        return r.clone();
    }
    let out = if let Some(r) = leaf(n) {
        r
    } else {
        match n.as_ref() {
            Node::Num(_) | Node::Coord(_) | Node::Param(_) => n.clone(),
            Node::Neg(a) => Arc::new(Node::Neg(rewrite(a, memo, leaf))),
            Node::Add(a, b) => Arc::new(Node::Add(rewrite(a, memo, leaf), rewrite(b, memo, leaf))),
            Node::Sub(a, b) => Arc::new(Node::Sub(rewrite(a, memo, leaf), rewrite(b, memo, leaf))),
            Node::Mul(a, b) => Arc::new(Node::Mul(rewrite(a, memo, leaf), rewrite(b, memo, leaf))),
            Node::Div(a, b) => Arc::new(Node::Div(rewrite(a, memo, leaf), rewrite(b, memo, leaf))),
            Node::Pow(a, b) => Arc::new(Node::Pow(rewrite(a, memo, leaf), rewrite(b, memo, leaf))),
            Node::Call(f, a) => Arc::new(Node::Call(*f, rewrite(a, memo, leaf))),
            Node::Atan2(a, b) => Arc::new(Node::Atan2(rewrite(a, memo, leaf), rewrite(b, memo, leaf))),
        }
    };
    memo.insert(key, out.clone());
    out
}

// --- printing ---

fn precedence(n: &Node) -> u8 {
    match n {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Num(v) if v.is_sign_negative() => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_node(f: &mut String, n: &Node, vocab: Option<&Vocabulary>, min_prec: u8) {
    let paren = precedence(n) < min_prec;
    if paren {
        f.push('(');
    }
    match n {
        Node::Num(v) => f.push_str(&format!("{v}")),
        Node::Coord(i) => match vocab {
            Some(v) => f.push_str(&v.coords[*i]),
            None => f.push_str(&format!("x{i}")),
        },
        Node::Param(i) => match vocab {
            Some(v) => f.push_str(&v.params[*i]),
            None => f.push_str(&format!("p{i}")),
        },
        Node::Neg(a) => {
            f.push('-');
            write_node(f, a, vocab, 3);
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            write_node(f, a, vocab, 1);
            f.push_str(if matches!(n, Node::Add(..)) { " + " } else { " - " });
            write_node(f, b, vocab, 2);
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            write_node(f, a, vocab, 2);
            f.push_str(if matches!(n, Node::Mul(..)) { "*" } else { "/" });
            write_node(f, b, vocab, 3);
        }
        Node::Pow(a, b) => {
            write_node(f, a, vocab, 5);
            f.push('^');
            write_node(f, b, vocab, 3);
        }
        Node::Call(func, a) => {
            f.push_str(func.name());
            f.push('(');
            write_node(f, a, vocab, 0);
            f.push(')');
        }
        Node::Atan2(a, b) => {
            f.push_str("atan2(");
            write_node(f, a, vocab, 0);
            f.push_str(", ");
            write_node(f, b, vocab, 0);
            f.push(')');
        }
    }
    if paren {
        f.push(')');
    }
}

fn print_node(n: &Node, vocab: Option<&Vocabulary>) -> String {
    let mut s = String::new();
    write_node(&mut s, n, vocab, 0);
    s
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_node(&self.root, Some(&self.vocab)))
    }
}
