//! Kernel description language.
//!
//! A small declarative format for static kernels. Sizes and indices are
//! compile-time integers; values are doubles. Example:
//!
//! ```text
//! kernel KA;
//! size 6;
//! input src0[N];
//! input src1[N];
//! output dest[N];
//! for i in 0..N {
//!     dest[i] = src0[s(i)] + src1[s(i)];
//! }
//! ```
//!
//! Index expressions support `+ - * / % ^`, parentheses, loop variables, `N`
//! (the declared size), `s(x) = (x+2) mod N` and `r(x) = (x xor 0x55555555)
//! mod N`. Value expressions support `+ - * /`, numeric literals, local
//! variables (`let x = 0;`), array elements and the compound assignments
//! `+= -= *= /=`.

use crate::error::KernelError;
use crate::scalar::{ArrayDecl, ArrayRole, Opcode};

/// Parsed kernel, ready to be unrolled by [`crate::scalar::build_graph`].
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDesc {
    pub name: String,
    pub size: usize,
    pub arrays: Vec<ArrayDecl>,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Let {
        name: String,
        value: Expr,
    },
    Assign {
        target: LValue,
        /// `Some(op)` for compound assignments such as `+=`.
        op: Option<Opcode>,
        value: Expr,
    },
    For {
        var: String,
        start: IndexExpr,
        end: IndexExpr,
        body: Vec<Stmt>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum LValue {
    Var(String),
    Elem { array: String, index: IndexExpr },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Elem { array: String, index: IndexExpr },
    Bin(Opcode, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Xor,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IndexExpr {
    Lit(i64),
    Var(String),
    Size,
    Bin(IndexOp, Box<IndexExpr>, Box<IndexExpr>),
    Shift(Box<IndexExpr>),
    Random(Box<IndexExpr>),
}

/// The shift access `s(x) = (x + 2) mod n`.
pub fn shift_index(x: i64, n: usize) -> usize {
    (x + 2).rem_euclid(n as i64) as usize
}

/// The scrambled access `r(x) = (x xor 0x55555555) mod n`.
pub fn random_index(x: i64, n: usize) -> usize {
    (x ^ 0x5555_5555).rem_euclid(n as i64) as usize
}

impl IndexExpr {
    /// Evaluates with the given loop-variable bindings.
    pub fn eval(&self, size: usize, vars: &[(String, i64)]) -> Result<i64, KernelError> {
        Ok(match self {
            IndexExpr::Lit(v) => *v,
            IndexExpr::Size => size as i64,
            IndexExpr::Var(name) => vars
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| KernelError::NonStatic(name.clone()))?,
            IndexExpr::Shift(x) => {
                let x = x.eval(size, vars)?;
                if size == 0 {
                    return Err(KernelError::IndexDivByZero);
                }
                shift_index(x, size) as i64
            }
            IndexExpr::Random(x) => {
                let x = x.eval(size, vars)?;
                if size == 0 {
                    return Err(KernelError::IndexDivByZero);
                }
                random_index(x, size) as i64
            }
            IndexExpr::Bin(op, a, b) => {
                let a = a.eval(size, vars)?;
                let b = b.eval(size, vars)?;
                match op {
                    IndexOp::Add => a + b,
                    IndexOp::Sub => a - b,
                    IndexOp::Mul => a * b,
                    IndexOp::Xor => a ^ b,
                    IndexOp::Div if b == 0 => return Err(KernelError::IndexDivByZero),
                    IndexOp::Rem if b == 0 => return Err(KernelError::IndexDivByZero),
                    IndexOp::Div => a.div_euclid(b),
                    IndexOp::Rem => a.rem_euclid(b),
                }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Sym(&'static str),
}

const SYMBOLS: [&str; 21] = [
    "..", "+=", "-=", "*=", "/=", "[", "]", "(", ")", "{", "}", ";", "=", "+", "-", "*", "/", "%", "^", ",", "&",
];

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, KernelError> {
    let mut out = Vec::new();
    for (lineno, line) in src.lines().enumerate() {
        let line_no = lineno + 1;
        let line = match (line.find('#'), line.find("//")) {
            (Some(a), Some(b)) => &line[..a.min(b)],
            (Some(a), None) | (None, Some(a)) => &line[..a],
            (None, None) => line,
        };
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(line[start..i].to_string()), line_no));
            } else if c.is_ascii_digit() {
                let start = i;
                let mut float = false;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    float = true;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    float = true;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &line[start..i];
                let tok = if float {
                    Tok::Float(text.parse().map_err(|_| KernelError::Parse {
                        line: line_no,
                        message: format!("bad number `{text}`"),
                    })?)
                } else {
                    Tok::Int(text.parse().map_err(|_| KernelError::Parse {
                        line: line_no,
                        message: format!("bad integer `{text}`"),
                    })?)
                };
                out.push((tok, line_no));
            } else if let Some(sym) = SYMBOLS.iter().find(|s| line[i..].starts_with(**s)) {
                out.push((Tok::Sym(sym), line_no));
                i += sym.len();
            } else {
                return Err(KernelError::UnknownOpcode(c.to_string()));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map(|t| t.1).unwrap_or(0)
    }

    fn err(&self, message: impl Into<String>) -> KernelError {
        KernelError::Parse {
            line: self.line(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), KernelError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{sym}`, found {:?}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, KernelError> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(self.err(format!("expected identifier, found {other:?}"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn index_expr(&mut self) -> Result<IndexExpr, KernelError> {
        let mut lhs = self.index_sum()?;
        while self.eat("^") {
            let rhs = self.index_sum()?;
            lhs = IndexExpr::Bin(IndexOp::Xor, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn index_sum(&mut self) -> Result<IndexExpr, KernelError> {
        let mut lhs = self.index_term()?;
        loop {
            let op = if self.eat("+") {
                IndexOp::Add
            } else if self.eat("-") {
                IndexOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.index_term()?;
            lhs = IndexExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn index_term(&mut self) -> Result<IndexExpr, KernelError> {
        let mut lhs = self.index_atom()?;
        loop {
            let op = if self.eat("*") {
                IndexOp::Mul
            } else if self.eat("/") {
                IndexOp::Div
            } else if self.eat("%") {
                IndexOp::Rem
            } else {
                return Ok(lhs);
            };
            let rhs = self.index_atom()?;
            lhs = IndexExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn index_atom(&mut self) -> Result<IndexExpr, KernelError> {
        match self.bump() {
            Some(Tok::Int(v)) => Ok(IndexExpr::Lit(v)),
            Some(Tok::Sym("(")) => {
                let e = self.index_expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Some(Tok::Sym("-")) => {
                let e = self.index_atom()?;
                Ok(IndexExpr::Bin(IndexOp::Sub, Box::new(IndexExpr::Lit(0)), Box::new(e)))
            }
            Some(Tok::Ident(name)) => {
                if self.eat("(") {
                    let arg = self.index_expr()?;
                    self.expect(")")?;
                    match name.as_str() {
                        "s" => Ok(IndexExpr::Shift(Box::new(arg))),
                        "r" => Ok(IndexExpr::Random(Box::new(arg))),
                        _ => Err(KernelError::UnknownOpcode(name)),
                    }
                } else if name == "N" {
                    Ok(IndexExpr::Size)
                } else {
                    Ok(IndexExpr::Var(name))
                }
            }
            Some(Tok::Float(v)) => Err(KernelError::NonStatic(v.to_string())),
            other => Err(self.err(format!("expected index expression, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, KernelError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat("+") {
                Opcode::Add
            } else if self.eat("-") {
                Opcode::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, KernelError> {
        let mut lhs = self.atom()?;
        loop {
            let op = if self.eat("*") {
                Opcode::Mul
            } else if self.eat("/") {
                Opcode::Div
            } else if let Some(Tok::Sym(s @ ("%" | "^" | "&"))) = self.peek() {
                return Err(KernelError::UnknownOpcode(s.to_string()));
            } else {
                return Ok(lhs);
            };
            let rhs = self.atom()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn atom(&mut self) -> Result<Expr, KernelError> {
        match self.bump() {
            Some(Tok::Int(v)) => Ok(Expr::Num(v as f64)),
            Some(Tok::Float(v)) => Ok(Expr::Num(v)),
            Some(Tok::Sym("-")) => match self.bump() {
                Some(Tok::Int(v)) => Ok(Expr::Num(-(v as f64))),
                Some(Tok::Float(v)) => Ok(Expr::Num(-v)),
                _ => Err(self.err("unary minus is only allowed on numeric literals")),
            },
            Some(Tok::Sym("(")) => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.eat("[") {
                    let index = self.index_expr()?;
                    self.expect("]")?;
                    Ok(Expr::Elem { array: name, index })
                } else if matches!(self.peek(), Some(Tok::Sym("("))) {
                    Err(KernelError::UnknownOpcode(name))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            other => Err(self.err(format!("expected expression, found {other:?}"))),
        }
    }

    fn stmt(&mut self) -> Result<Stmt, KernelError> {
        if self.at_keyword("let") {
            self.pos += 1;
            let name = self.ident()?;
            self.expect("=")?;
            let value = self.expr()?;
            self.expect(";")?;
            return Ok(Stmt::Let { name, value });
        }
        if self.at_keyword("for") {
            self.pos += 1;
            let var = self.ident()?;
            if !self.at_keyword("in") {
                return Err(self.err("expected `in`"));
            }
            self.pos += 1;
            let start = self.index_expr()?;
            self.expect("..")?;
            let end = self.index_expr()?;
            self.expect("{")?;
            let mut body = Vec::new();
            while !self.eat("}") {
                if self.peek().is_none() {
                    return Err(self.err("unterminated loop body"));
                }
                body.push(self.stmt()?);
            }
            return Ok(Stmt::For { var, start, end, body });
        }
        let name = self.ident()?;
        let target = if self.eat("[") {
            let index = self.index_expr()?;
            self.expect("]")?;
            LValue::Elem { array: name, index }
        } else {
            LValue::Var(name)
        };
        let op = match self.bump() {
            Some(Tok::Sym("=")) => None,
            Some(Tok::Sym("+=")) => Some(Opcode::Add),
            Some(Tok::Sym("-=")) => Some(Opcode::Sub),
            Some(Tok::Sym("*=")) => Some(Opcode::Mul),
            Some(Tok::Sym("/=")) => Some(Opcode::Div),
            Some(Tok::Sym(s)) => return Err(KernelError::UnknownOpcode(s.to_string())),
            other => return Err(self.err(format!("expected assignment, found {other:?}"))),
        };
        let value = self.expr()?;
        self.expect(";")?;
        Ok(Stmt::Assign { target, op, value })
    }
}

/// Parses a kernel description.
pub fn parse_kernel(src: &str) -> Result<KernelDesc, KernelError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut name = String::from("kernel");
    let mut size: Option<usize> = None;
    let mut arrays: Vec<ArrayDecl> = Vec::new();
    let mut body = Vec::new();
    while p.peek().is_some() {
        if p.at_keyword("kernel") {
            p.pos += 1;
            name = p.ident()?;
            p.expect(";")?;
        } else if p.at_keyword("size") {
            p.pos += 1;
            match p.bump() {
                Some(Tok::Int(v)) if v >= 1 => size = Some(v as usize),
                Some(Tok::Int(v)) => {
                    return Err(p.err(format!("size must be at least 1, got {v}")));
                }
                Some(Tok::Ident(s)) => return Err(KernelError::NonStatic(s)),
                other => return Err(p.err(format!("expected size, found {other:?}"))),
            }
            p.expect(";")?;
        } else if let Some(role) = ["input", "output", "inout"]
            .iter()
            .position(|kw| p.at_keyword(kw))
            .filter(|_| matches!(p.peek_at(2), Some(Tok::Sym("["))))
        {
            p.pos += 1;
            let array = p.ident()?;
            p.expect("[")?;
            let len_expr = p.index_expr()?;
            p.expect("]")?;
            p.expect(";")?;
            let n = size.ok_or(KernelError::MissingSize)?;
            let len = len_expr.eval(n, &[])?;
            if len < 1 {
                return Err(p.err(format!("array `{array}` has non-positive length {len}")));
            }
            if arrays.iter().any(|a| a.name == array) {
                return Err(p.err(format!("array `{array}` declared twice")));
            }
            let role = [ArrayRole::Input, ArrayRole::Output, ArrayRole::Inout][role];
            arrays.push(ArrayDecl {
                name: array,
                role,
                len: len as usize,
            });
        } else {
            body.push(p.stmt()?);
        }
    }
    Ok(KernelDesc {
        name,
        size: size.ok_or(KernelError::MissingSize)?,
        arrays,
        body,
    })
}
