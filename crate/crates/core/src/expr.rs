//! Symbolic scalar expressions in `n` real variables.
//!
//! Expressions are parsed from text, evaluated at points, and differentiated
//! exactly (the derivative is another expression tree). Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' '-'? integer)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp'
//! ```
//!
//! Identifiers resolve through a [`VarNames`] table. The standard table for
//! arity `n` accepts `x1..xn`, `u1..un`, the aliases `x y z θ` (also `th`,
//! `theta`) when `n <= 4`, and `t` when `n == 1`. The constant `pi` is built in.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Pow(Arc<Node>, i32),
    Call(Func, Arc<Node>),
}

impl Node {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, k) => a.eval(x).powi(*k),
            Node::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(p), Some(q)) => Some(p.max(q)),
                    (p, q) => p.or(q),
                }
            }
        }
    }
}

fn as_const(n: &Node) -> Option<f64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn konst(c: f64) -> Arc<Node> {
    Arc::new(Node::Const(c))
}

fn neg(a: Arc<Node>) -> Arc<Node> {
    match &*a {
        Node::Const(c) => konst(-c),
        Node::Neg(inner) => inner.clone(),
        _ => Arc::new(Node::Neg(a)),
    }
}

fn add(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(p), Some(q)) => konst(p + q),
        (Some(p), _) if p == 0.0 => b,
        (_, Some(q)) if q == 0.0 => a,
        _ => Arc::new(Node::Add(a, b)),
    }
}

fn sub(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(p), Some(q)) => konst(p - q),
        (Some(p), _) if p == 0.0 => neg(b),
        (_, Some(q)) if q == 0.0 => a,
        _ => Arc::new(Node::Sub(a, b)),
    }
}

fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(p), Some(q)) => konst(p * q),
        (Some(p), _) if p == 0.0 => konst(0.0),
        (_, Some(q)) if q == 0.0 => konst(0.0),
        (Some(p), _) if p == 1.0 => b,
        (_, Some(q)) if q == 1.0 => a,
        (Some(p), _) if p == -1.0 => neg(b),
        (_, Some(q)) if q == -1.0 => neg(a),
        _ => Arc::new(Node::Mul(a, b)),
    }
}

fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(p), _) if p == 0.0 => konst(0.0),
        (_, Some(q)) if q == 1.0 => a,
        _ => Arc::new(Node::Div(a, b)),
    }
}

fn pow(a: Arc<Node>, k: i32) -> Arc<Node> {
    match (k, as_const(&a)) {
        (0, _) => konst(1.0),
        (1, _) => a,
        (_, Some(c)) => konst(c.powi(k)),
        _ => Arc::new(Node::Pow(a, k)),
    }
}

fn call(f: Func, a: Arc<Node>) -> Arc<Node> {
    match as_const(&a) {
        Some(c) => konst(f.apply(c)),
        None => Arc::new(Node::Call(f, a)),
    }
}

fn derive_node(n: &Node, i: usize) -> Arc<Node> {
    match n {
        Node::Const(_) => konst(0.0),
        Node::Var(j) => konst(if *j == i { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(derive_node(a, i)),
        Node::Add(a, b) => add(derive_node(a, i), derive_node(b, i)),
        Node::Sub(a, b) => sub(derive_node(a, i), derive_node(b, i)),
        Node::Mul(a, b) => add(
            mul(derive_node(a, i), b.clone()),
            mul(a.clone(), derive_node(b, i)),
        ),
        Node::Div(a, b) => sub(
            div(derive_node(a, i), b.clone()),
            div(mul(a.clone(), derive_node(b, i)), pow(b.clone(), 2)),
        ),
        Node::Pow(a, k) => mul(
            mul(konst(*k as f64), pow(a.clone(), k - 1)),
            derive_node(a, i),
        ),
        Node::Call(Func::Sin, a) => mul(call(Func::Cos, a.clone()), derive_node(a, i)),
        Node::Call(Func::Cos, a) => neg(mul(call(Func::Sin, a.clone()), derive_node(a, i))),
        Node::Call(Func::Exp, a) => mul(call(Func::Exp, a.clone()), derive_node(a, i)),
    }
}

/// Variable name table used while parsing.
#[derive(Clone, Debug)]
pub struct VarNames {
    arity: usize,
    names: HashMap<String, usize>,
    display: Vec<String>,
}

impl VarNames {
    /// The standard table described in the module docs.
    pub fn standard(arity: usize) -> Self {
        let mut names = HashMap::new();
        for i in 0..arity {
            names.insert(format!("x{}", i + 1), i);
            names.insert(format!("u{}", i + 1), i);
        }
        if arity <= 4 {
            for (i, alias) in ["x", "y", "z"].iter().enumerate().take(arity) {
                names.insert(alias.to_string(), i);
            }
            if arity == 4 {
                for alias in ["θ", "th", "theta"] {
                    names.insert(alias.to_string(), 3);
                }
            }
        }
        if arity == 1 {
            names.insert("t".into(), 0);
        }
        let display = (0..arity).map(|i| format!("x{}", i + 1)).collect();
        VarNames {
            arity,
            names,
            display,
        }
    }

    /// A table with exactly the given names, in order. `x1..xn` stay valid.
    pub fn named<S: AsRef<str>>(list: &[S]) -> Result<Self> {
        let arity = list.len();
        let mut names = HashMap::new();
        for i in 0..arity {
            names.insert(format!("x{}", i + 1), i);
        }
        for (i, s) in list.iter().enumerate() {
            let s = s.as_ref();
            if !is_identifier(s) || s == "pi" || FUNCS.iter().any(|(f, _)| *f == s) {
                return Err(Error::Syntax {
                    pos: 0,
                    msg: format!("invalid variable name `{s}`"),
                });
            }
            names.insert(s.to_string(), i);
        }
        Ok(VarNames {
            arity,
            names,
            display: list.iter().map(|s| s.as_ref().to_string()).collect(),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn names(&self) -> &[String] {
        &self.display
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.names.get(name).copied()
    }
}

const FUNCS: [(&str, Func); 3] = [("sin", Func::Sin), ("cos", Func::Cos), ("exp", Func::Exp)];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_identifier(s: &str) -> bool {
    let mut it = s.chars();
    matches!(it.next(), Some(c) if is_ident_start(c)) && it.all(is_ident_char)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s.parse().map_err(|_| Error::Syntax {
                pos,
                msg: format!("malformed number `{s}`"),
            })?;
            out.push((Tok::Num(v), pos));
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), pos));
            i += 1;
        } else {
            return Err(Error::Syntax {
                pos,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vars: &'a VarNames,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected `{c}`")))
        }
    }

    fn unexpected(&self, what: &str) -> Error {
        let found = match self.peek() {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        };
        Error::Syntax {
            pos: self.pos(),
            msg: format!("{what}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Arc::new(Node::Add(lhs, self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Arc::new(Node::Sub(lhs, self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Arc::new(Node::Mul(lhs, self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Arc::new(Node::Div(lhs, self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Node>> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Arc::new(Node::Neg(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Arc<Node>> {
        let base = self.base()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Op('-') {
            self.bump();
            true
        } else {
            false
        };
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= 1024.0 => {
                let k = v as i32;
                Ok(Arc::new(Node::Pow(base, if negative { -k } else { k })))
            }
            _ => Err(Error::Syntax {
                pos,
                msg: "exponent must be an integer".into(),
            }),
        }
    }

    fn base(&mut self) -> Result<Arc<Node>> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(konst(v))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some((_, f)) = FUNCS.iter().find(|(n, _)| *n == name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Arc::new(Node::Call(*f, arg)));
                }
                if name == "pi" {
                    return Ok(konst(std::f64::consts::PI));
                }
                if let Some(i) = self.vars.lookup(&name) {
                    return Ok(Arc::new(Node::Var(i)));
                }
                if let Some(idx) = indexed_var(&name) {
                    return Err(Error::Arity {
                        expected: self.vars.arity(),
                        found: idx,
                        context: format!("variable `{name}` at position {pos}"),
                    });
                }
                Err(Error::UnknownIdentifier { name, pos })
            }
            _ => Err(self.unexpected("expected a number, variable, function or `(`")),
        }
    }
}

fn indexed_var(name: &str) -> Option<usize> {
    let rest = name.strip_prefix('x').or_else(|| name.strip_prefix('u'))?;
    rest.parse::<usize>().ok().filter(|&i| i > 0)
}

/// An immutable expression tree with a fixed arity.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Arc<Node>,
    arity: usize,
}

impl Expression {
    /// Parse with the standard variable table for `arity`.
    pub fn parse(text: &str, arity: usize) -> Result<Self> {
        Self::parse_with(text, &VarNames::standard(arity))
    }

    pub fn parse_with(text: &str, vars: &VarNames) -> Result<Self> {
        let toks = lex(text)?;
        let mut p = Parser { toks, at: 0, vars };
        let root = p.expr()?;
        if *p.peek() != Tok::End {
            return Err(p.unexpected("expected an operator or end of input"));
        }
        Ok(Expression {
            root,
            arity: vars.arity(),
        })
    }

    pub fn constant(c: f64, arity: usize) -> Self {
        Expression {
            root: konst(c),
            arity,
        }
    }

    pub fn var(i: usize, arity: usize) -> Self {
        assert!(i < arity, "variable index out of range");
        Expression {
            root: Arc::new(Node::Var(i)),
            arity,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Same expression viewed as a function of more variables.
    pub fn widen(&self, arity: usize) -> Self {
        assert!(arity >= self.arity);
        Expression {
            root: self.root.clone(),
            arity,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        as_const(&self.root)
    }

    pub fn is_zero(&self) -> bool {
        self.constant_value() == Some(0.0)
    }

    /// Evaluate at `x`, rejecting wrong lengths and non-finite results.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                found: x.len(),
                context: "evaluation point".into(),
            });
        }
        let v = self.root.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { point: x.to_vec() })
        }
    }

    /// Evaluate without checks. The caller guarantees `x.len() >= arity`.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }

    /// Exact partial derivative with respect to variable `i`.
    pub fn derive(&self, i: usize) -> Self {
        assert!(i < self.arity, "derivative index out of range");
        Expression {
            root: derive_node(&self.root, i),
            arity: self.arity,
        }
    }

    pub fn uses_only_first(&self, k: usize) -> bool {
        self.root.max_var().is_none_or(|m| m < k)
    }

    fn lift(&self, other: &Self) -> usize {
        self.arity.max(other.arity)
    }

    pub fn add(&self, other: &Self) -> Self {
        Expression {
            root: add(self.root.clone(), other.root.clone()),
            arity: self.lift(other),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Expression {
            root: sub(self.root.clone(), other.root.clone()),
            arity: self.lift(other),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Expression {
            root: mul(self.root.clone(), other.root.clone()),
            arity: self.lift(other),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Expression {
            root: mul(konst(c), self.root.clone()),
            arity: self.arity,
        }
    }

    /// Print using the given variable names.
    pub fn to_string_with(&self, names: &[String]) -> String {
        let mut s = String::new();
        write_node(&self.root, names, &mut s);
        s
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.arity).map(|i| format!("x{}", i + 1)).collect();
        f.write_str(&self.to_string_with(&names))
    }
}

fn write_num(c: f64, out: &mut String) {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        out.push_str(&format!("(-{})", -c));
    } else {
        out.push_str(&format!("{c}"));
    }
}

fn write_node(n: &Node, names: &[String], out: &mut String) {
    let bin = |a: &Node, op: &str, b: &Node, out: &mut String| {
        out.push('(');
        write_node(a, names, out);
        out.push_str(op);
        write_node(b, names, out);
        out.push(')');
    };
    match n {
        Node::Const(c) => write_num(*c, out),
        Node::Var(i) => out.push_str(&names[*i]),
        Node::Neg(a) => {
            out.push_str("(-");
            write_node(a, names, out);
            out.push(')');
        }
        Node::Add(a, b) => bin(a, " + ", b, out),
        Node::Sub(a, b) => bin(a, " - ", b, out),
        Node::Mul(a, b) => bin(a, " * ", b, out),
        Node::Div(a, b) => bin(a, " / ", b, out),
        Node::Pow(a, k) => {
            out.push('(');
            write_node(a, names, out);
            out.push_str(&format!(")^{k}"));
        }
        Node::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_node(a, names, out);
            out.push(')');
        }
    }
}
