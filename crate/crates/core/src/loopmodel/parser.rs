//! Recursive-descent parser for the loop language. See `docs/grammar.md`.

use std::collections::HashSet;

use num_traits::{One, Zero};

use super::ast::{Choice, Dist, Expr, LoopProgram, ParamDecl, Update};
use crate::symcore::{parse_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Assign,
    Semi,
    Comma,
    At,
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", punct_text(other)),
        }
    }
}

fn punct_text(t: &Tok) -> &'static str {
    match t {
        Tok::Assign => ":=",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::At => "@",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Caret => "^",
        _ => "?",
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const RESERVED: &[&str] = &[
    "while", "true", "param", "support", "in", "choose", "bern", "gauss", "uniform", "moments", "n",
];

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| ParseError {
        kind: ErrorKind::Syntax,
        line,
        col,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: l0, col: c0 });
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent only when digits follow
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
            col += i - start;
            push(&mut out, Tok::Number(chars[start..i].iter().collect()));
            continue;
        }
        let tok = match c {
            ':' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                col += 1;
                Tok::Assign
            }
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '@' => Tok::At,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '+' => Tok::Plus,
            '-' | '−' => Tok::Minus,
            '*' | '·' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            other => return Err(err(l0, c0, format!("unexpected character `{other}`"))),
        };
        i += 1;
        col += 1;
        push(&mut out, tok);
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn bump(&mut self) -> Spanned {
        let s = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        s
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            kind: ErrorKind::Syntax,
            line,
            col,
            message: message.into(),
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected `{}`, found {}",
                punct_text(&t),
                self.peek().describe()
            )))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self) -> PResult<(String, usize, usize)> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Ident(s) if RESERVED.contains(&s.as_str()) => {
                Err(self.error(format!("`{s}` is reserved")))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok((s, line, col))
            }
            other => Err(self.error(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn signed_literal(&mut self) -> PResult<Rational> {
        let neg = self.eat(&Tok::Minus);
        let mut q = self.number()?;
        if self.eat(&Tok::Slash) {
            let d = self.number()?;
            if d.is_zero() {
                return Err(self.error("division by zero in literal"));
            }
            q /= d;
        }
        Ok(if neg { -q } else { q })
    }

    fn number(&mut self) -> PResult<Rational> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let q = parse_rational(&s).map_err(|e| self.error(e.to_string()))?;
                self.bump();
                Ok(q)
            }
            other => Err(self.error(format!("expected number, found {}", other.describe()))),
        }
    }

    fn program(&mut self) -> PResult<(LoopProgram, Vec<Located>)> {
        let mut prog = LoopProgram::default();
        let mut locs = Vec::new();
        while !self.is_keyword("while") {
            if *self.peek() == Tok::Eof {
                return Err(self.error("expected `while`, found end of input"));
            }
            if self.is_keyword("param") {
                self.bump();
                let (name, line, col) = self.ident()?;
                let domain = if self.is_keyword("in") {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let lo = self.signed_literal()?;
                    self.expect(Tok::Comma)?;
                    let hi = self.signed_literal()?;
                    self.expect(Tok::RParen)?;
                    Some((lo, hi))
                } else {
                    None
                };
                self.expect(Tok::Semi)?;
                locs.push(Located::Param(line, col));
                prog.params.push(ParamDecl { name, domain });
            } else if self.is_keyword("support") {
                self.bump();
                let (name, line, col) = self.ident()?;
                let m = self.number()?;
                if !m.is_integer() || m < Rational::one() {
                    return Err(self.error("support size must be a positive integer"));
                }
                let m: u32 = m.to_integer().try_into().map_err(|_| self.error("support size too large"))?;
                self.expect(Tok::Semi)?;
                locs.push(Located::Support(line, col));
                prog.supports.push((name, m));
            } else {
                let (name, line, col) = self.ident()?;
                self.expect(Tok::Assign)?;
                let e = self.expr()?;
                self.expect(Tok::Semi)?;
                locs.push(Located::Init(line, col));
                prog.inits.push((name, e));
            }
        }
        self.keyword("while")?;
        self.keyword("true")?;
        self.expect(Tok::LBrace)?;
        while *self.peek() != Tok::RBrace {
            let (target, line, col) = self.ident()?;
            self.expect(Tok::Assign)?;
            let choice = self.choice()?;
            locs.push(Located::Update(line, col));
            prog.updates.push(Update { target, choice });
            if !self.eat(&Tok::Semi) && *self.peek() != Tok::RBrace {
                return Err(self.error(format!("expected `;`, found {}", self.peek().describe())));
            }
        }
        self.expect(Tok::RBrace)?;
        if *self.peek() != Tok::Eof {
            return Err(self.error(format!("unexpected {} after loop body", self.peek().describe())));
        }
        Ok((prog, locs))
    }

    fn choice(&mut self) -> PResult<Choice> {
        if self.is_keyword("choose") {
            self.bump();
            self.expect(Tok::LBrace)?;
            let mut branches = Vec::new();
            while *self.peek() != Tok::RBrace {
                let e = self.expr()?;
                self.expect(Tok::At)?;
                let p = self.expr()?;
                branches.push((e, p));
                if !self.eat(&Tok::Semi) && *self.peek() != Tok::RBrace {
                    return Err(self.error(format!("expected `;`, found {}", self.peek().describe())));
                }
            }
            self.expect(Tok::RBrace)?;
            if branches.is_empty() {
                return Err(self.error("`choose` needs at least one branch"));
            }
            return Ok(Choice::Multi(branches));
        }
        let left = self.expr()?;
        if self.eat(&Tok::LBracket) {
            let prob = self.expr()?;
            self.expect(Tok::RBracket)?;
            let right = self.expr()?;
            Ok(Choice::Binary { left, prob, right })
        } else {
            Ok(Choice::Single(left))
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = Expr::add(acc, self.term()?);
            } else if self.eat(&Tok::Minus) {
                acc = Expr::sub(acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                acc = Expr::mul(acc, self.unary()?);
            } else if self.eat(&Tok::Slash) {
                let rhs = self.unary()?;
                acc = match (acc, rhs) {
                    (Expr::Num(a), Expr::Num(b)) => {
                        if b.is_zero() {
                            return Err(self.error("division by zero"));
                        }
                        Expr::Num(a / b)
                    }
                    (a, b) => Expr::div(a, b),
                };
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(match self.unary()? {
                Expr::Num(q) => Expr::Num(-q),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            let e = self.number()?;
            if !e.is_integer() || e < Rational::zero() {
                return Err(self.error("exponent must be a nonnegative integer"));
            }
            let e: u32 = e.to_integer().try_into().map_err(|_| self.error("exponent too large"))?;
            return Ok(Expr::pow(base, e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Number(_) => Ok(Expr::Num(self.number()?)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) if matches!(name.as_str(), "bern" | "gauss" | "uniform" | "moments") => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut args = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                let arity = |n: usize, p: &Parser| {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(p.error(format!("`{name}` takes {n} argument(s), got {}", args.len())))
                    }
                };
                let d = match name.as_str() {
                    "bern" => {
                        arity(1, self)?;
                        Dist::Bernoulli(args.remove(0))
                    }
                    "gauss" => {
                        arity(2, self)?;
                        let variance = args.pop().unwrap();
                        Dist::Gaussian {
                            mean: args.pop().unwrap(),
                            variance,
                        }
                    }
                    "uniform" => {
                        arity(2, self)?;
                        let hi = args.pop().unwrap();
                        Dist::Uniform {
                            lo: args.pop().unwrap(),
                            hi,
                        }
                    }
                    _ => Dist::Moments(args),
                };
                Ok(Expr::dist(d))
            }
            Tok::Ident(_) => Ok(Expr::Sym(self.ident()?.0)),
            other => Err(self.error(format!("expected expression, found {}", other.describe()))),
        }
    }
}

/// Source positions of declarations, in the order they were parsed.
enum Located {
    Param(usize, usize),
    Support(usize, usize),
    Init(usize, usize),
    Update(usize, usize),
}

/// Parses and checks a program.
pub fn parse_program(text: &str) -> Result<LoopProgram, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let (prog, locs) = p.program()?;
    check(&prog, &locs)?;
    Ok(prog)
}

/// Parses a single expression, such as a probability or coefficient.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {} after expression", p.peek().describe())));
    }
    Ok(e)
}

fn check(prog: &LoopProgram, locs: &[Located]) -> Result<(), ParseError> {
    let mut param_locs = Vec::new();
    let mut support_locs = Vec::new();
    let mut init_locs = Vec::new();
    let mut update_locs = Vec::new();
    for l in locs {
        match *l {
            Located::Param(a, b) => param_locs.push((a, b)),
            Located::Support(a, b) => support_locs.push((a, b)),
            Located::Init(a, b) => init_locs.push((a, b)),
            Located::Update(a, b) => update_locs.push((a, b)),
        }
    }
    let sem = |(line, col): (usize, usize), message: String| ParseError {
        kind: ErrorKind::Semantic,
        line,
        col,
        message,
    };
    let mut params = HashSet::new();
    for (i, d) in prog.params.iter().enumerate() {
        if !params.insert(d.name.as_str()) {
            return Err(sem(param_locs[i], format!("parameter `{}` declared twice", d.name)));
        }
        if let Some((lo, hi)) = &d.domain {
            if lo > hi {
                return Err(sem(param_locs[i], format!("empty domain for `{}`", d.name)));
            }
        }
    }
    let mut vars = HashSet::new();
    for (i, u) in prog.updates.iter().enumerate() {
        if params.contains(u.target.as_str()) {
            return Err(sem(update_locs[i], format!("`{}` is a parameter and cannot be assigned", u.target)));
        }
        if !vars.insert(u.target.as_str()) {
            return Err(sem(update_locs[i], format!("variable `{}` is updated twice", u.target)));
        }
    }
    for (i, (v, m)) in prog.supports.iter().enumerate() {
        if !vars.contains(v.as_str()) {
            return Err(sem(support_locs[i], format!("support declared for unknown variable `{v}`")));
        }
        if *m == 0 {
            return Err(sem(support_locs[i], "support size must be positive".to_string()));
        }
    }
    let mut seen_init = HashSet::new();
    for (i, (v, e)) in prog.inits.iter().enumerate() {
        if !vars.contains(v.as_str()) {
            return Err(sem(init_locs[i], format!("`{v}` is initialized but never updated")));
        }
        if !seen_init.insert(v.as_str()) {
            return Err(sem(init_locs[i], format!("`{v}` is initialized twice")));
        }
        for s in e.symbols() {
            if vars.contains(s.as_str()) {
                return Err(sem(init_locs[i], format!("initializer of `{v}` refers to program variable `{s}`")));
            }
            if !params.contains(s.as_str()) {
                return Err(sem(init_locs[i], format!("unknown identifier `{s}`")));
            }
        }
    }
    for (i, u) in prog.updates.iter().enumerate() {
        let mut exprs: Vec<&Expr> = u.choice.exprs();
        exprs.extend(u.choice.probs());
        for e in exprs {
            for s in e.symbols() {
                if params.contains(s.as_str()) {
                    continue;
                }
                match prog.index_of(&s) {
                    Some(j) if j > i => {
                        return Err(sem(
                            update_locs[i],
                            format!("update of `{}` refers to later variable `{s}`", u.target),
                        ))
                    }
                    Some(_) => {}
                    None => return Err(sem(update_locs[i], format!("unknown identifier `{s}`"))),
                }
            }
        }
        for p in u.choice.probs() {
            if let Expr::Num(q) = p {
                if q < &Rational::zero() || q > &Rational::one() {
                    return Err(sem(
                        update_locs[i],
                        format!("probability {q} for `{}` is outside [0, 1]", u.target),
                    ));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::rat;

    #[test]
    fn standalone_expressions() {
        assert_eq!(parse_expr("0.94").unwrap(), Expr::Num(rat(47, 50)));
        assert_eq!(
            parse_expr("1 - b").unwrap(),
            Expr::sub(Expr::int(1), Expr::sym("b"))
        );
        assert!(parse_expr("1 +").is_err());
        assert!(parse_expr("a b").is_err());
    }

    #[test]
    fn counter_without_trailing_semicolon() {
        let p = parse_program("x := 0; while true { x := x + 1 }").unwrap();
        assert_eq!(p.variables(), vec!["x"]);
        assert_eq!(
            p.updates[0].choice,
            Choice::Single(Expr::add(Expr::sym("x"), Expr::int(1)))
        );
    }

    #[test]
    fn literal_fractions_and_negation_fold() {
        let p = parse_program("x := -3/4; while true { x := x * (1/2) - -2; }").unwrap();
        assert_eq!(p.inits[0].1, Expr::Num(rat(-3, 4)));
        assert_eq!(
            p.updates[0].choice,
            Choice::Single(Expr::sub(
                Expr::mul(Expr::sym("x"), Expr::Num(rat(1, 2))),
                Expr::Num(rat(-2, 1))
            ))
        );
    }

    #[test]
    fn later_variable_reference_is_rejected() {
        let e = parse_program("x := 0; y := 0; while true { x := y + 1; y := 0 }").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Semantic);
        assert!(e.message.contains("later variable `y`"), "{e}");
        assert_eq!((e.line, e.col), (1, 30));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_program("x := 0;\nwhile true {\n  x := x + ;\n}").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Syntax);
        assert_eq!((e.line, e.col), (3, 12));
    }

    #[test]
    fn semantic_errors() {
        for (src, needle) in [
            ("while true { x := 1; x := 2 }", "updated twice"),
            ("while true { x := 1 [3/2] 0 }", "outside [0, 1]"),
            ("while true { x := q }", "unknown identifier `q`"),
            ("y := 1; while true { x := 1 }", "never updated"),
            ("while true { n := 1 }", "reserved"),
        ] {
            let e = parse_program(src).unwrap_err();
            assert!(e.to_string().contains(needle), "{src}: {e}");
        }
    }

    #[test]
    fn distributions_and_choices() {
        let src = "param p in (0, 1);\nsupport c 3;\nr := bern(1/2);\n\
                   while true {\n  r := bern(7/10)·r + bern(3/10)·(1 − r);\n  \
                   c := choose { 0 @ 1/4; 1 @ p; 2 @ 3/4 - p };\n  g := gauss(2*r, 9) [p] uniform(0, r)\n}";
        let p = parse_program(src).unwrap();
        assert_eq!(p.params[0].domain, Some((rat(0, 1), rat(1, 1))));
        assert_eq!(p.support_of("c"), Some(3));
        assert!(matches!(&p.updates[1].choice, Choice::Multi(b) if b.len() == 3));
        assert!(matches!(&p.updates[2].choice, Choice::Binary { .. }));
        assert!(matches!(&p.inits[0].1, Expr::Dist(d) if matches!(**d, Dist::Bernoulli(_))));
    }
}
