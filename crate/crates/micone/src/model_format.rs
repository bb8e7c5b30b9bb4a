//! Prefix-notation model documents.
//!
//! ```text
//! (var x int 0 3)        ; integer with bounds
//! (var y -inf 2.5)       ; continuous, bounds optional
//! (min (add x (mul 2 y)))
//! (le (square (sub x 0.5)) 0.25)
//! (eq (add x y) 1)
//! ```
//!
//! Affine forms: `add`, `sub`, `neg`, `(mul c e)`. Atoms are applied by name;
//! `pow_rational` takes its exponent first: `(pow_rational 1.5 x)`.

use std::fmt::Write as _;

use micone_core::dcp::{AtomKind, Constraint, ConstraintKind, DcpError, DcpModel, Expr, Variable};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{pos}: syntax error: {msg}")]
    SyntaxError { pos: Position, msg: String },
    #[error("{pos}: unknown atom `{name}`")]
    UnknownAtom { pos: Position, name: String },
    #[error("{pos}: `{name}` takes {expected} arguments, got {got}")]
    ArityError {
        pos: Position,
        name: String,
        expected: String,
        got: usize,
    },
    #[error("{pos}: undeclared variable `{name}`")]
    UndeclaredVariable { pos: Position, name: String },
    #[error("{pos}: {msg}")]
    Invalid { pos: Position, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Sym(String),
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, Position),
    List(Vec<Sexp>, Position),
}

fn tokenize(text: &str) -> Vec<(Tok, Position)> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split(';').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let pos = Position {
                line: ln + 1,
                column: i + 1,
            };
            match chars[i] {
                '(' => {
                    out.push((Tok::Open, pos));
                    i += 1;
                }
                ')' => {
                    out.push((Tok::Close, pos));
                    i += 1;
                }
                c if c.is_whitespace() => i += 1,
                _ => {
                    let start = i;
                    while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '(' && chars[i] != ')' {
                        i += 1;
                    }
                    out.push((Tok::Sym(chars[start..i].iter().collect()), pos));
                }
            }
        }
    }
    out
}

fn end_position(text: &str) -> Position {
    let line = text.lines().count().max(1);
    let column = text.lines().last().map_or(0, |l| l.chars().count()) + 1;
    Position { line, column }
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>, ModelError> {
    let toks = tokenize(text);
    let mut stack: Vec<(Vec<Sexp>, Position)> = Vec::new();
    let mut top = Vec::new();
    for (tok, pos) in toks {
        match tok {
            Tok::Open => stack.push((Vec::new(), pos)),
            Tok::Close => {
                let (items, open) = stack.pop().ok_or_else(|| ModelError::SyntaxError {
                    pos: pos.clone(),
                    msg: "unbalanced `)`".into(),
                })?;
                let node = Sexp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(node),
                    None => top.push(node),
                }
            }
            Tok::Sym(s) => {
                let node = Sexp::Atom(s, pos.clone());
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(node),
                    None => {
                        return Err(ModelError::SyntaxError {
                            pos,
                            msg: "expected `(`".into(),
                        })
                    }
                }
            }
        }
    }
    if !stack.is_empty() {
        return Err(ModelError::SyntaxError {
            pos: end_position(text),
            msg: "missing `)`".into(),
        });
    }
    Ok(top)
}

fn parse_number(s: &str) -> Option<f64> {
    let first = s.chars().next()?;
    if first.is_ascii_digit() || matches!(first, '-' | '+' | '.') || s == "inf" {
        s.parse::<f64>().ok().filter(|v| !v.is_nan())
    } else {
        None
    }
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '.' | '[' | ']' | '\''))
        && parse_number(s).is_none()
}

struct Parser {
    names: Vec<String>,
}

fn syntax(pos: Position, msg: &str) -> ModelError {
    ModelError::SyntaxError { pos, msg: msg.into() }
}

fn arity(pos: Position, name: &str, expected: &str, got: usize) -> ModelError {
    ModelError::ArityError {
        pos,
        name: name.into(),
        expected: expected.into(),
        got,
    }
}

impl Parser {
    fn number(&self, s: &Sexp) -> Result<f64, ModelError> {
        match s {
            Sexp::Atom(t, p) => parse_number(t).ok_or_else(|| syntax(p.clone(), "expected a number")),
            Sexp::List(_, p) => Err(syntax(p.clone(), "expected a number")),
        }
    }

    fn expr(&self, s: &Sexp) -> Result<Expr, ModelError> {
        match s {
            Sexp::Atom(t, p) => {
                if let Some(v) = parse_number(t) {
                    return Ok(Expr::Const(v));
                }
                match self.names.iter().position(|n| n == t) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(ModelError::UndeclaredVariable {
                        pos: p.clone(),
                        name: t.clone(),
                    }),
                }
            }
            Sexp::List(items, p) => {
                let Some(Sexp::Atom(head, hp)) = items.first() else {
                    return Err(syntax(p.clone(), "expected an operator"));
                };
                let args = &items[1..];
                match head.as_str() {
                    "add" => {
                        if args.is_empty() {
                            return Err(arity(hp.clone(), head, "one or more", 0));
                        }
                        let mut terms = Vec::new();
                        let mut offset = 0.0;
                        for a in args {
                            match self.expr(a)? {
                                Expr::Const(v) => offset += v,
                                e => terms.push(self.term(a, e)),
                            }
                        }
                        Ok(Expr::Affine { terms, offset })
                    }
                    "sub" => {
                        if args.len() != 2 {
                            return Err(arity(hp.clone(), head, "2", args.len()));
                        }
                        let mut terms = Vec::new();
                        let mut offset = 0.0;
                        for (sign, a) in [(1.0, &args[0]), (-1.0, &args[1])] {
                            match self.expr(a)? {
                                Expr::Const(v) => offset += sign * v,
                                e => terms.push((sign, e)),
                            }
                        }
                        Ok(Expr::Affine { terms, offset })
                    }
                    "neg" => {
                        if args.len() != 1 {
                            return Err(arity(hp.clone(), head, "1", args.len()));
                        }
                        Ok(Expr::Affine {
                            terms: vec![(-1.0, self.expr(&args[0])?)],
                            offset: 0.0,
                        })
                    }
                    "mul" => {
                        if args.len() != 2 {
                            return Err(arity(hp.clone(), head, "2", args.len()));
                        }
                        Ok(Expr::Affine {
                            terms: vec![(self.number(&args[0])?, self.expr(&args[1])?)],
                            offset: 0.0,
                        })
                    }
                    "pow_rational" => {
                        if args.len() != 2 {
                            return Err(arity(hp.clone(), head, "2", args.len()));
                        }
                        let power = self.number(&args[0])?;
                        let kind = AtomKind::PowRational(power);
                        self.atom(kind, vec![self.expr(&args[1])?], hp, head)
                    }
                    name => {
                        let kind = AtomKind::from_name(name).ok_or_else(|| ModelError::UnknownAtom {
                            pos: hp.clone(),
                            name: name.into(),
                        })?;
                        let parsed = args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>, _>>()?;
                        self.atom(kind, parsed, hp, head)
                    }
                }
            }
        }
    }

    /// A summand of `add`: a top-level `(mul c e)` contributes `(c, e)`.
    fn term(&self, s: &Sexp, e: Expr) -> (f64, Expr) {
        if let Sexp::List(items, _) = s {
            if matches!(items.first(), Some(Sexp::Atom(h, _)) if h == "mul") {
                if let Expr::Affine { mut terms, offset } = e {
                    if terms.len() == 1 && offset == 0.0 {
                        return terms.pop().unwrap();
                    }
                    return (1.0, Expr::Affine { terms, offset });
                }
            }
        }
        (1.0, e)
    }

    fn atom(&self, kind: AtomKind, args: Vec<Expr>, pos: &Position, name: &str) -> Result<Expr, ModelError> {
        let got = args.len();
        Expr::atom(kind, args).map_err(|e| match e {
            DcpError::Arity { atom, .. } => arity(pos.clone(), name, &atom.arity().to_string(), got),
            other => ModelError::Invalid {
                pos: pos.clone(),
                msg: other.to_string(),
            },
        })
    }
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<DcpModel, ModelError> {
    let items = read_sexps(text)?;
    let mut parser = Parser { names: Vec::new() };
    let mut vars = Vec::new();
    let mut objective = None;
    let mut constraints = Vec::new();
    for item in &items {
        let Sexp::List(parts, pos) = item else { unreachable!() };
        let Some(Sexp::Atom(head, hp)) = parts.first() else {
            return Err(syntax(pos.clone(), "expected a keyword"));
        };
        let rest = &parts[1..];
        match head.as_str() {
            "var" => {
                let Some(Sexp::Atom(name, np)) = rest.first() else {
                    return Err(syntax(hp.clone(), "expected a variable name"));
                };
                if !valid_name(name) {
                    return Err(syntax(np.clone(), "invalid variable name"));
                }
                if parser.names.contains(name) {
                    return Err(ModelError::Invalid {
                        pos: np.clone(),
                        msg: format!("variable `{name}` declared twice"),
                    });
                }
                let mut rest = &rest[1..];
                let integer = matches!(rest.first(), Some(Sexp::Atom(t, _)) if t == "int");
                if integer {
                    rest = &rest[1..];
                }
                let (lower, upper) = match rest {
                    [] => (f64::NEG_INFINITY, f64::INFINITY),
                    [l, u] => (parser.number(l)?, parser.number(u)?),
                    _ => return Err(syntax(pos.clone(), "expected `(var NAME [int] [LB UB])`")),
                };
                if lower > upper {
                    return Err(ModelError::Invalid {
                        pos: pos.clone(),
                        msg: format!("empty bounds for `{name}`"),
                    });
                }
                parser.names.push(name.clone());
                vars.push(Variable {
                    name: name.clone(),
                    integer,
                    lower,
                    upper,
                });
            }
            "min" => {
                if rest.len() != 1 {
                    return Err(arity(hp.clone(), head, "1", rest.len()));
                }
                if objective.is_some() {
                    return Err(ModelError::Invalid {
                        pos: pos.clone(),
                        msg: "second objective".into(),
                    });
                }
                objective = Some(parser.expr(&rest[0])?);
            }
            "le" | "eq" => {
                if rest.len() != 2 {
                    return Err(arity(hp.clone(), head, "2", rest.len()));
                }
                let lhs = parser.expr(&rest[0])?;
                let rhs = parser.expr(&rest[1])?;
                constraints.push(if head == "le" {
                    Constraint::le(lhs, rhs)
                } else {
                    Constraint::eq(lhs, rhs)
                });
            }
            other => {
                return Err(syntax(hp.clone(), &format!("unknown item `{other}`")));
            }
        }
    }
    Ok(DcpModel {
        vars,
        objective: objective.unwrap_or(Expr::Const(0.0)),
        constraints,
    })
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn print_expr(e: &Expr, names: &[String], out: &mut String) {
    match e {
        Expr::Var(i) => out.push_str(names.get(*i).map_or("?", |s| s.as_str())),
        Expr::Const(v) => out.push_str(&num(*v)),
        Expr::Affine { terms, offset } => {
            if terms.len() == 1 && *offset == 0.0 && terms[0].0 != 1.0 {
                let (c, e) = &terms[0];
                let _ = write!(out, "(mul {} ", num(*c));
                print_expr(e, names, out);
                out.push(')');
                return;
            }
            out.push_str("(add");
            for (c, e) in terms {
                out.push(' ');
                // bare summands must not read back as constants or scaled terms
                let bare = *c == 1.0 && !matches!(e, Expr::Const(_)) && !is_scaled(e);
                if bare {
                    print_expr(e, names, out);
                } else {
                    let _ = write!(out, "(mul {} ", num(*c));
                    print_expr(e, names, out);
                    out.push(')');
                }
            }
            if *offset != 0.0 || terms.is_empty() {
                let _ = write!(out, " {}", num(*offset));
            }
            out.push(')');
        }
        Expr::Atom { atom, args } => {
            out.push('(');
            out.push_str(atom.name());
            if let AtomKind::PowRational(p) = atom {
                let _ = write!(out, " {}", num(*p));
            }
            for a in args {
                out.push(' ');
                print_expr(a, names, out);
            }
            out.push(')');
        }
    }
}

fn is_scaled(e: &Expr) -> bool {
    matches!(e, Expr::Affine { terms, offset } if terms.len() == 1 && *offset == 0.0 && terms[0].0 != 1.0)
}

/// Canonical text of a model; `parse_model(&print_model(m)) == m`.
pub fn print_model(model: &DcpModel) -> String {
    let names: Vec<String> = model.vars.iter().map(|v| v.name.clone()).collect();
    let mut out = String::new();
    for v in &model.vars {
        out.push_str("(var ");
        out.push_str(&v.name);
        if v.integer {
            out.push_str(" int");
        }
        if v.lower != f64::NEG_INFINITY || v.upper != f64::INFINITY {
            let _ = write!(out, " {} {}", num(v.lower), num(v.upper));
        }
        out.push_str(")\n");
    }
    out.push_str("(min ");
    print_expr(&model.objective, &names, &mut out);
    out.push_str(")\n");
    for c in &model.constraints {
        out.push_str(match c.kind {
            ConstraintKind::Le => "(le ",
            ConstraintKind::Eq => "(eq ",
        });
        print_expr(&c.lhs, &names, &mut out);
        out.push(' ');
        print_expr(&c.rhs, &names, &mut out);
        out.push_str(")\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable_model() {
        let m = parse_model("(var x int 0 1) (min x) (le (square (sub x 0.5)) 0.25)").unwrap();
        assert_eq!(m.vars.len(), 1);
        assert!(m.vars[0].integer);
        assert_eq!(m.constraints.len(), 1);
        assert_eq!(m.objective, Expr::Var(0));
    }

    #[test]
    fn unclosed_list_reports_end() {
        let err = parse_model("(le (square x)").unwrap_err();
        assert_eq!(
            err,
            ModelError::SyntaxError {
                pos: Position { line: 1, column: 15 },
                msg: "missing `)`".into()
            }
        );
    }

    #[test]
    fn diagnostics() {
        assert!(matches!(
            parse_model("(var x)\n(min (sqrtt x))"),
            Err(ModelError::UnknownAtom { pos: Position { line: 2, column: 7 }, .. })
        ));
        assert!(matches!(
            parse_model("(var x) (min (exp x x))"),
            Err(ModelError::ArityError { got: 2, .. })
        ));
        assert!(matches!(
            parse_model("(min y)"),
            Err(ModelError::UndeclaredVariable { .. })
        ));
        assert!(matches!(parse_model("(var x) (var x)"), Err(ModelError::Invalid { .. })));
        assert!(matches!(parse_model("(var 3x)"), Err(ModelError::SyntaxError { .. })));
    }

    #[test]
    fn comments_and_infinite_bounds() {
        let m = parse_model("; header\n(var y -inf 2.5) ; trailing\n(min (neg y))").unwrap();
        assert_eq!(m.vars[0].lower, f64::NEG_INFINITY);
        assert_eq!(m.vars[0].upper, 2.5);
    }

    #[test]
    fn printing_round_trips() {
        let text = "(var x int -2 2)\n(var y)\n(var w 0 inf)\n\
            (min (add (mul 3 x) y (mul 1 (mul 2 w)) (mul 1 4) 1.5))\n\
            (le (max (exp (square x)) (mul -2 x)) (add w))\n\
            (le (pow_rational 1.5 (sub y 1)) (add 0))\n\
            (eq (neg (add x y)) 0.1)\n";
        let m = parse_model(text).unwrap();
        let printed = print_model(&m);
        assert_eq!(parse_model(&printed).unwrap(), m);
        assert_eq!(print_model(&parse_model(&printed).unwrap()), printed);
    }
}
