//! Line-oriented parser for the seed language.
//!
//! ```text
//! qubits 2
//! a = 1
//! t q[0]
//! if a {
//!   rx(0.123) q[1]
//!   b = a + 1
//! }
//! ```

use crate::circuit::MAX_QUBITS;
use crate::gate::GateKind;

use super::ast::{BinOp, Expr, GateStmt, Program, Stmt, DEFAULT_PROGRAM_NAME};
use super::LangError;

const KEYWORDS: [&str; 4] = ["qubits", "program", "if", "while"];

/// Names that cannot be used as classical variables.
pub fn is_reserved(name: &str) -> bool {
    KEYWORDS.contains(&name) || name == "q" || name.parse::<GateKind>().is_ok()
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

const SYMBOLS: [&str; 15] = ["==", "!=", "<=", "<", "=", "+", "-", "*", "(", ")", "[", "]", ",", "{", "}"];

fn lex(line: &str, line_no: usize) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
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
            out.push(Token { tok: Tok::Num(chars[start..i].iter().collect()), col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                out.push(Token { tok: Tok::Sym(sym), col });
                i += sym.len();
            }
            None => {
                return Err(LangError::Syntax {
                    line: line_no,
                    col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Token], line: usize, end_col: usize) -> Self {
        Cursor { toks, pos: 0, line, end_col }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn err(&self, message: impl Into<String>) -> LangError {
        LangError::Syntax { line: self.line, col: self.col(), message: message.into() }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, sym: &str) -> bool {
        if self.peek() == Some(&Tok::Sym(sym_static(sym))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), LangError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{sym}`")))
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<(), LangError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing tokens"))
        }
    }

    fn integer(&mut self) -> Result<u64, LangError> {
        let col = self.col();
        match self.next() {
            Some(Tok::Num(s)) => s.parse::<u64>().map_err(|_| LangError::Syntax {
                line: self.line,
                col,
                message: format!("`{s}` is not an integer literal"),
            }),
            _ => Err(LangError::Syntax { line: self.line, col, message: "expected integer".into() }),
        }
    }

    // expr := cmp ; cmp := add (cmpop add)* ; add := mul ((+|-) mul)* ; mul := unary (* unary)*
    fn expr(&mut self) -> Result<Expr, LangError> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, LangError> {
        if min_prec > 3 {
            return self.unary();
        }
        let mut lhs = self.binary(min_prec + 1)?;
        while let Some(op) = self.peek_binop() {
            if op.precedence() != min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(min_prec + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        match self.peek()? {
            Tok::Sym("+") => Some(BinOp::Add),
            Tok::Sym("-") => Some(BinOp::Sub),
            Tok::Sym("*") => Some(BinOp::Mul),
            Tok::Sym("<") => Some(BinOp::Lt),
            Tok::Sym("<=") => Some(BinOp::Le),
            Tok::Sym("==") => Some(BinOp::Eq),
            Tok::Sym("!=") => Some(BinOp::Ne),
            _ => None,
        }
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        if self.eat("-") {
            // `-INT` is a negative literal; anything else is a negation node.
            if let Some(Tok::Num(_)) = self.peek() {
                let col = self.col();
                let Some(Tok::Num(s)) = self.next() else { unreachable!() };
                let mag: i128 = s.parse().map_err(|_| LangError::Syntax {
                    line: self.line,
                    col,
                    message: format!("`{s}` is not an integer literal"),
                })?;
                let v = i64::try_from(-mag).map_err(|_| LangError::Syntax {
                    line: self.line,
                    col,
                    message: "integer literal out of range".into(),
                })?;
                return Ok(Expr::Lit(v));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let col = self.col();
        match self.next() {
            Some(Tok::Num(s)) => s.parse::<i64>().map(Expr::Lit).map_err(|_| LangError::Syntax {
                line: self.line,
                col,
                message: format!("`{s}` is not a 64-bit integer literal"),
            }),
            Some(Tok::Ident(name)) => {
                if is_reserved(&name) {
                    Err(LangError::Syntax {
                        line: self.line,
                        col,
                        message: format!("`{name}` is reserved"),
                    })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::Sym("(")) => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => Err(LangError::Syntax { line: self.line, col, message: "expected expression".into() }),
        }
    }
}

fn sym_static(s: &str) -> &'static str {
    SYMBOLS.iter().copied().find(|x| *x == s).expect("known symbol")
}

enum Line {
    Simple(Stmt),
    Open { is_while: bool, cond: Expr },
    Close,
}

struct Frame {
    opener: Option<(bool, Expr, usize)>,
    body: Vec<Stmt>,
}

/// Parse seed-language source into a validated [`Program`].
pub fn parse(text: &str) -> Result<Program, LangError> {
    let mut name = DEFAULT_PROGRAM_NAME.to_string();
    let mut qubit_count: Option<usize> = None;
    let mut stack = vec![Frame { opener: None, body: Vec::new() }];

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex(raw, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(&toks, line_no, raw.chars().count() + 1);

        let Some(n) = qubit_count else {
            match cur.next() {
                Some(Tok::Ident(kw)) if kw == "program" => {
                    match cur.next() {
                        Some(Tok::Ident(id)) => name = id,
                        _ => return Err(cur.err("expected program name")),
                    }
                    cur.expect_end()?;
                    continue;
                }
                Some(Tok::Ident(kw)) if kw == "qubits" => {
                    let count = cur.integer()? as usize;
                    cur.expect_end()?;
                    if count == 0 || count > MAX_QUBITS {
                        return Err(LangError::QubitCount { line: line_no, count });
                    }
                    qubit_count = Some(count);
                    continue;
                }
                _ => {
                    return Err(LangError::Syntax {
                        line: line_no,
                        col: 1,
                        message: "expected `qubits N` header".into(),
                    })
                }
            }
        };

        match parse_line(&mut cur, n)? {
            Line::Simple(stmt) => stack.last_mut().unwrap().body.push(stmt),
            Line::Open { is_while, cond } => {
                stack.push(Frame { opener: Some((is_while, cond, line_no)), body: Vec::new() })
            }
            Line::Close => {
                if stack.len() == 1 {
                    return Err(LangError::Syntax { line: line_no, col: 1, message: "unmatched `}`".into() });
                }
                let frame = stack.pop().unwrap();
                let (is_while, cond, _) = frame.opener.unwrap();
                let stmt = if is_while {
                    Stmt::While { cond, body: frame.body }
                } else {
                    Stmt::If { cond, body: frame.body }
                };
                stack.last_mut().unwrap().body.push(stmt);
            }
        }
    }

    let Some(qubit_count) = qubit_count else {
        return Err(LangError::Syntax { line: 1, col: 1, message: "missing `qubits N` header".into() });
    };
    if stack.len() > 1 {
        let (_, _, line) = stack.last().unwrap().opener.as_ref().unwrap();
        return Err(LangError::Syntax { line: *line, col: 1, message: "unclosed block".into() });
    }
    let body = stack.pop().unwrap().body;
    Ok(Program { name, qubit_count, body })
}

fn parse_line(cur: &mut Cursor<'_>, n: usize) -> Result<Line, LangError> {
    let line = cur.line;
    let col = cur.col();
    match cur.next() {
        Some(Tok::Sym("}")) => {
            cur.expect_end()?;
            Ok(Line::Close)
        }
        Some(Tok::Ident(kw)) if kw == "if" || kw == "while" => {
            let cond = cur.expr()?;
            cur.expect("{")?;
            cur.expect_end()?;
            Ok(Line::Open { is_while: kw == "while", cond })
        }
        Some(Tok::Ident(id)) => {
            if cur.peek() == Some(&Tok::Sym("=")) {
                if is_reserved(&id) {
                    return Err(LangError::Syntax { line, col, message: format!("`{id}` is reserved") });
                }
                cur.pos += 1;
                let expr = cur.expr()?;
                cur.expect_end()?;
                return Ok(Line::Simple(Stmt::Assign { var: id, expr }));
            }
            let gate: GateKind =
                id.parse().map_err(|_| LangError::UnknownGate { line, name: id.clone() })?;
            parse_gate(cur, gate, n).map(|g| Line::Simple(Stmt::Gate(g)))
        }
        _ => Err(LangError::Syntax { line, col, message: "expected statement".into() }),
    }
}

fn parse_gate(cur: &mut Cursor<'_>, gate: GateKind, n: usize) -> Result<GateStmt, LangError> {
    let line = cur.line;
    let mut angle = None;
    if cur.eat("(") {
        let negative = cur.eat("-");
        let col = cur.col();
        let value = match cur.next() {
            Some(Tok::Num(s)) => s.parse::<f64>().map_err(|_| LangError::Syntax {
                line,
                col,
                message: format!("`{s}` is not an angle literal"),
            })?,
            _ => return Err(LangError::Syntax { line, col, message: "expected angle literal".into() }),
        };
        if !value.is_finite() {
            return Err(LangError::Syntax { line, col, message: "angle must be finite".into() });
        }
        cur.expect(")")?;
        angle = Some(if negative { -value } else { value });
    }
    let mut qubits = Vec::new();
    loop {
        match cur.next() {
            Some(Tok::Ident(q)) if q == "q" => {}
            _ => return Err(cur.err("expected qubit operand `q[N]`")),
        }
        cur.expect("[")?;
        qubits.push(cur.integer()? as usize);
        cur.expect("]")?;
        if !cur.eat(",") {
            break;
        }
    }
    cur.expect_end()?;
    let stmt = GateStmt { gate, angle, qubits };
    super::ast::check_gate(&stmt, n).map_err(|e| LangError::from_circuit(e, line))?;
    Ok(stmt)
}
