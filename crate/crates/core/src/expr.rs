//! A small expression language for coefficient sequences `φ(k)` and closed
//! forms `F(x)` supplied on the command line.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' power)?
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-k^2`
//! is `-(k^2)`. A minus sign directly after `^` needs parentheses:
//! `2^(-3)`.

use std::fmt;

use thiserror::Error;

use crate::specfun;

/// Longest accepted source text, in bytes.
pub const MAX_SOURCE_LEN: usize = 64 * 1024;

/// Deepest syntax tree the parser will build.
pub const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Gamma,
    /// `fact(x) = Γ(x + 1)`, defined for real `x`.
    Fact,
    Erf,
    Pow,
}

impl Function {
    pub const ALL: [Function; 9] = [
        Function::Exp,
        Function::Ln,
        Function::Sin,
        Function::Cos,
        Function::Sqrt,
        Function::Gamma,
        Function::Fact,
        Function::Erf,
        Function::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Exp => "exp",
            Function::Ln => "ln",
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Sqrt => "sqrt",
            Function::Gamma => "gamma",
            Function::Fact => "fact",
            Function::Erf => "erf",
            Function::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Function::Pow => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Constant(f64),
    Variable(String),
    Neg(Box<ExprNode>),
    Binary {
        op: BinaryOp,
        left: Box<ExprNode>,
        right: Box<ExprNode>,
    },
    Call {
        func: Function,
        args: Vec<ExprNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown function '{name}' at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function '{name}' takes {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("expression nests deeper than {MAX_DEPTH} levels (byte {offset})")]
    TooDeep { offset: usize },
    #[error("expression is {len} bytes, limit is {MAX_SOURCE_LEN}")]
    TooLong { len: usize },
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
}

pub type Result<T> = std::result::Result<T, ExprError>;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(v) => format!("number {v}"),
            Token::Ident(s) => format!("identifier '{s}'"),
            Token::Plus => "'+'".into(),
            Token::Minus => "'-'".into(),
            Token::Star => "'*'".into(),
            Token::Slash => "'/'".into(),
            Token::Caret => "'^'".into(),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::Comma => "','".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            b',' => Some(Token::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            i += 1;
        } else if c.is_ascii_digit() {
            i = scan_number(bytes, i)?;
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                expected: vec!["number"],
                found: format!("'{text}'"),
            })?;
            if !value.is_finite() {
                return Err(ExprError::Syntax {
                    offset: start,
                    expected: vec!["finite number"],
                    found: format!("'{text}'"),
                });
            }
            out.push((Token::Number(value), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Token::Ident(src[start..i].to_string()), start));
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ExprError::Syntax {
                offset: start,
                expected: vec!["number", "identifier", "operator", "'('"],
                found: format!("'{ch}'"),
            });
        }
    }
    out.push((Token::End, bytes.len()));
    Ok(out)
}

fn scan_number(bytes: &[u8], mut i: usize) -> Result<usize> {
    let digits = |mut j: usize| {
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        j
    };
    i = digits(i);
    if i < bytes.len() && bytes[i] == b'.' {
        let after = digits(i + 1);
        if after == i + 1 {
            return Err(ExprError::Syntax {
                offset: i + 1,
                expected: vec!["digit after '.'"],
                found: describe_byte(bytes, i + 1),
            });
        }
        i = after;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = digits(j);
        }
    }
    Ok(i)
}

fn describe_byte(bytes: &[u8], i: usize) -> String {
    match bytes.get(i) {
        Some(b) if b.is_ascii_graphic() => format!("'{}'", *b as char),
        Some(_) => "non-printable byte".into(),
        None => "end of input".into(),
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    nesting: usize,
}

type Parsed = (ExprNode, usize);

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self, expected: &[&'static str]) -> ExprError {
        ExprError::Syntax {
            offset: self.offset(),
            expected: expected.to_vec(),
            found: self.peek().describe(),
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.nesting += 1;
        if self.nesting > MAX_DEPTH {
            return Err(ExprError::TooDeep { offset: self.offset() });
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.nesting -= 1;
    }

    fn node(&self, node: ExprNode, depth: usize) -> Result<Parsed> {
        if depth > MAX_DEPTH {
            return Err(ExprError::TooDeep { offset: self.offset() });
        }
        Ok((node, depth))
    }

    fn binary(&self, op: BinaryOp, (l, dl): Parsed, (r, dr): Parsed) -> Result<Parsed> {
        self.node(
            ExprNode::Binary {
                op,
                left: Box::new(l),
                right: Box::new(r),
            },
            dl.max(dr) + 1,
        )
    }

    fn expr(&mut self) -> Result<Parsed> {
        self.enter()?;
        let mut acc = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            acc = self.binary(op, acc, rhs)?;
        }
        self.leave();
        Ok(acc)
    }

    fn term(&mut self) -> Result<Parsed> {
        let mut acc = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            acc = self.binary(op, acc, rhs)?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Parsed> {
        let mut negations = 0;
        while *self.peek() == Token::Minus {
            self.bump();
            negations += 1;
        }
        let (mut node, mut depth) = self.power()?;
        for _ in 0..negations {
            depth += 1;
            if depth > MAX_DEPTH {
                return Err(ExprError::TooDeep { offset: self.offset() });
            }
            node = ExprNode::Neg(Box::new(node));
        }
        Ok((node, depth))
    }

    fn power(&mut self) -> Result<Parsed> {
        self.enter()?;
        let base = self.primary()?;
        let out = if *self.peek() == Token::Caret {
            self.bump();
            let exponent = self.power()?;
            self.binary(BinaryOp::Pow, base, exponent)?
        } else {
            base
        };
        self.leave();
        Ok(out)
    }

    fn primary(&mut self) -> Result<Parsed> {
        let offset = self.offset();
        match self.peek().clone() {
            Token::Number(v) => {
                self.bump();
                Ok((ExprNode::Constant(v), 1))
            }
            Token::Ident(name) => {
                self.bump();
                if *self.peek() != Token::LParen {
                    return Ok((ExprNode::Variable(name), 1));
                }
                let func = Function::from_name(&name)
                    .ok_or_else(|| ExprError::UnknownFunction { name: name.clone(), offset })?;
                self.bump();
                let mut args = Vec::new();
                let mut depth = 0;
                loop {
                    let (arg, d) = self.expr()?;
                    depth = depth.max(d);
                    args.push(arg);
                    match self.peek() {
                        Token::Comma => {
                            self.bump();
                        }
                        Token::RParen => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.unexpected(&["','", "')'"])),
                    }
                }
                if args.len() != func.arity() {
                    return Err(ExprError::Arity {
                        name,
                        expected: func.arity(),
                        found: args.len(),
                        offset,
                    });
                }
                self.node(ExprNode::Call { func, args }, depth + 1)
            }
            Token::LParen => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Token::RParen {
                    return Err(self.unexpected(&["')'"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.unexpected(&["number", "identifier", "'('"])),
        }
    }
}

/// Parses `source` into a syntax tree.
pub fn parse(source: &str) -> Result<ExprNode> {
    if source.len() > MAX_SOURCE_LEN {
        return Err(ExprError::TooLong { len: source.len() });
    }
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        nesting: 0,
    };
    let (node, _) = parser.expr()?;
    if *parser.peek() != Token::End {
        return Err(parser.unexpected(&["operator", "end of input"]));
    }
    Ok(node)
}

fn check(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ExprError::Domain(format!("{what} is not finite")))
    }
}

fn power(base: f64, exponent: f64) -> Result<f64> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(ExprError::Domain(format!(
            "negative base {base} with non-integer exponent {exponent}"
        )));
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(ExprError::DivisionByZero);
    }
    check(base.powf(exponent), "power")
}

fn gamma_checked(x: f64) -> Result<f64> {
    specfun::gamma(x).map_err(|e| ExprError::Domain(e.to_string()))
}

impl ExprNode {
    /// Evaluates the tree, resolving variables through `lookup`.
    pub fn eval_with<L: Fn(&str) -> Option<f64>>(&self, lookup: &L) -> Result<f64> {
        match self {
            ExprNode::Constant(v) => Ok(*v),
            ExprNode::Variable(name) => {
                lookup(name).ok_or_else(|| ExprError::UnboundVariable(name.clone()))
            }
            ExprNode::Neg(child) => Ok(-child.eval_with(lookup)?),
            ExprNode::Binary { op, left, right } => {
                let l = left.eval_with(lookup)?;
                let r = right.eval_with(lookup)?;
                match op {
                    BinaryOp::Add => check(l + r, "sum"),
                    BinaryOp::Sub => check(l - r, "difference"),
                    BinaryOp::Mul => check(l * r, "product"),
                    BinaryOp::Div => {
                        if r == 0.0 {
                            Err(ExprError::DivisionByZero)
                        } else {
                            check(l / r, "quotient")
                        }
                    }
                    BinaryOp::Pow => power(l, r),
                }
            }
            ExprNode::Call { func, args } => {
                let a = args[0].eval_with(lookup)?;
                match func {
                    Function::Exp => check(a.exp(), "exp"),
                    Function::Ln => {
                        if a <= 0.0 {
                            Err(ExprError::Domain(format!("ln of non-positive {a}")))
                        } else {
                            Ok(a.ln())
                        }
                    }
                    Function::Sin => Ok(a.sin()),
                    Function::Cos => Ok(a.cos()),
                    Function::Sqrt => {
                        if a < 0.0 {
                            Err(ExprError::Domain(format!("sqrt of negative {a}")))
                        } else {
                            Ok(a.sqrt())
                        }
                    }
                    Function::Gamma => gamma_checked(a),
                    Function::Fact => gamma_checked(a + 1.0),
                    Function::Erf => Ok(specfun::erf(a)),
                    Function::Pow => power(a, args[1].eval_with(lookup)?),
                }
            }
        }
    }

    /// Evaluates with variables bound by name.
    pub fn evaluate(&self, env: &[(&str, f64)]) -> Result<f64> {
        self.eval_with(&|name: &str| env.iter().find(|(n, _)| *n == name).map(|(_, v)| *v))
    }

    /// Every variable name referenced by the tree, sorted and deduplicated.
    pub fn variables(&self) -> Vec<String> {
        fn walk(node: &ExprNode, out: &mut Vec<String>) {
            match node {
                ExprNode::Constant(_) => {}
                ExprNode::Variable(n) => out.push(n.clone()),
                ExprNode::Neg(c) => walk(c, out),
                ExprNode::Binary { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
                ExprNode::Call { args, .. } => args.iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            ExprNode::Binary { op: BinaryOp::Add | BinaryOp::Sub, .. } => 1,
            ExprNode::Binary { op: BinaryOp::Mul | BinaryOp::Div, .. } => 2,
            ExprNode::Neg(_) => 3,
            ExprNode::Binary { op: BinaryOp::Pow, .. } => 4,
            _ => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &ExprNode, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Prints with the fewest parentheses that reparse to the same tree.
impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Constant(v) => {
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    write!(f, "{v}")
                } else {
                    write!(f, "{v:?}")
                }
            }
            ExprNode::Variable(name) => f.write_str(name),
            ExprNode::Neg(child) => {
                f.write_str("-")?;
                write_child(f, child, child.precedence() < 3)
            }
            ExprNode::Binary { op, left, right } => {
                let p = self.precedence();
                if *op == BinaryOp::Pow {
                    write_child(f, left, left.precedence() <= p)?;
                    f.write_str("^")?;
                    write_child(f, right, right.precedence() < p)
                } else {
                    write_child(f, left, left.precedence() < p)?;
                    match op {
                        BinaryOp::Add | BinaryOp::Sub => write!(f, " {} ", op.symbol())?,
                        _ => f.write_str(op.symbol())?,
                    }
                    write_child(f, right, right.precedence() <= p)
                }
            }
            ExprNode::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
