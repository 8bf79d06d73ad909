//! Small expression language for coefficient, source and initial data.
//!
//! Grammar: `+ - * / ^`, parentheses, numbers, constants `pi` and `e`,
//! variables `x`, `y`, `t`, `alpha`, and the functions
//! `sin cos tan exp ln sqrt abs gamma`. `^` is right-associative and binds
//! tighter than unary minus, so `-x^2` is `-(x^2)`.

use std::fmt;

use statrs::function::gamma::gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.message, self.column)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Gamma,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "gamma" => Func::Gamma,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Gamma => gamma(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Point of evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Env {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0, end: text.chars().count() + 1 };
        let root = p.expr()?;
        if let Some((tok, col)) = p.tokens.get(p.pos) {
            return Err(ParseError { column: *col, message: format!("unexpected {tok}") });
        }
        Ok(Expr { source: text.to_string(), root })
    }

    pub fn constant(v: f64) -> Self {
        Expr { source: format!("{v}"), root: Node::Num(v) }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, env: &Env) -> f64 {
        eval(&self.root, env)
    }

    pub fn uses(&self, var: Var) -> bool {
        uses(&self.root, var)
    }

    /// Substitutes `alpha` and folds every subtree free of x, y and t.
    pub fn bind_alpha(&self, alpha: f64) -> Expr {
        Expr { source: self.source.clone(), root: fold(&self.root, alpha) }
    }
}

fn fold(n: &Node, alpha: f64) -> Node {
    let env = Env { alpha, ..Env::default() };
    let folded = match n {
        Node::Num(_) => return n.clone(),
        Node::Var(Var::Alpha) => return Node::Num(alpha),
        Node::Var(_) => return n.clone(),
        Node::Neg(a) => Node::Neg(fold(a, alpha).into()),
        Node::Call(f, a) => Node::Call(*f, fold(a, alpha).into()),
        Node::Add(a, b) => Node::Add(fold(a, alpha).into(), fold(b, alpha).into()),
        Node::Sub(a, b) => Node::Sub(fold(a, alpha).into(), fold(b, alpha).into()),
        Node::Mul(a, b) => Node::Mul(fold(a, alpha).into(), fold(b, alpha).into()),
        Node::Div(a, b) => Node::Div(fold(a, alpha).into(), fold(b, alpha).into()),
        Node::Pow(a, b) => Node::Pow(fold(a, alpha).into(), fold(b, alpha).into()),
    };
    if [Var::X, Var::Y, Var::T].iter().any(|&v| uses(&folded, v)) {
        folded
    } else {
        Node::Num(eval(&folded, &env))
    }
}

fn eval(n: &Node, env: &Env) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(Var::X) => env.x,
        Node::Var(Var::Y) => env.y,
        Node::Var(Var::T) => env.t,
        Node::Var(Var::Alpha) => env.alpha,
        Node::Neg(a) => -eval(a, env),
        Node::Add(a, b) => eval(a, env) + eval(b, env),
        Node::Sub(a, b) => eval(a, env) - eval(b, env),
        Node::Mul(a, b) => eval(a, env) * eval(b, env),
        Node::Div(a, b) => eval(a, env) / eval(b, env),
        Node::Pow(a, b) => eval(a, env).powf(eval(b, env)),
        Node::Call(f, a) => f.apply(eval(a, env)),
    }
}

fn uses(n: &Node, var: Var) -> bool {
    match n {
        Node::Num(_) => false,
        Node::Var(v) => *v == var,
        Node::Neg(a) | Node::Call(_, a) => uses(a, var),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            uses(a, var) || uses(b, var)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Ident(s) => write!(f, "'{s}'"),
            Token::Op(c) => write!(f, "'{c}'"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| ParseError { column: col, message: format!("malformed number '{s}'") })?;
            out.push((Token::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Token::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^()".contains(c) {
            out.push((Token::Op(c), col));
            i += 1;
        } else {
            return Err(ParseError { column: col, message: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Token::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError { column: self.column(), message: format!("expected '{op}'") })
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Node::Add(lhs.into(), rhs.into()) } else { Node::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Node::Mul(lhs.into(), rhs.into()) } else { Node::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(self.unary()?.into()))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let col = self.column();
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(ParseError { column: col, message: "unexpected end of expression".into() });
        };
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Node::Num(v)),
            Token::Op('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if let Some(f) = Func::lookup(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Call(f, arg.into()));
                }
                match name.as_str() {
                    "x" => Ok(Node::Var(Var::X)),
                    "y" => Ok(Node::Var(Var::Y)),
                    "t" => Ok(Node::Var(Var::T)),
                    "alpha" => Ok(Node::Var(Var::Alpha)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => Err(ParseError { column: col, message: format!("unknown identifier '{name}'") }),
                }
            }
            tok => Err(ParseError { column: col, message: format!("unexpected {tok}") }),
        }
    }
}
