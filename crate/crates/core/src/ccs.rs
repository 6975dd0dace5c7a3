//! A small CCS-like process language and its translation into expressions
//! over `B + (P Id)^A` with a one-point `B`.

use std::collections::BTreeSet;
use std::fmt;

use crate::expr::{check_expression, CheckError, Expr, TypedExpr};
use crate::functor::Functor;
use crate::lexer::{Cursor, ParseError, Pos, Tok};
use crate::signature::Signature;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Proc {
    /// Successful termination.
    Tick,
    Deadlock,
    /// Divergence.
    Omega,
    Prefix(String, Box<Proc>),
    Choice(Box<Proc>, Box<Proc>),
    PVar(String),
    Rec(String, Box<Proc>),
}

impl Proc {
    pub fn prefix(a: impl Into<String>, p: Proc) -> Proc {
        Proc::Prefix(a.into(), Box::new(p))
    }

    pub fn choice(p: Proc, q: Proc) -> Proc {
        Proc::Choice(Box::new(p), Box::new(q))
    }

    pub fn rec(x: impl Into<String>, p: Proc) -> Proc {
        Proc::Rec(x.into(), Box::new(p))
    }
}

pub fn proc_free_vars(p: &Proc) -> BTreeSet<String> {
    fn go(p: &Proc, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match p {
            Proc::Tick | Proc::Deadlock | Proc::Omega => {}
            Proc::PVar(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Proc::Prefix(_, q) => go(q, bound, out),
            Proc::Choice(a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            Proc::Rec(x, q) => {
                bound.push(x.clone());
                go(q, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    go(p, &mut Vec::new(), &mut out);
    out
}

/// Replaces the free occurrences of `x` in `p` by the closed process `q`.
pub fn substitute_proc(p: &Proc, x: &str, q: &Proc) -> Proc {
    match p {
        Proc::PVar(y) if y == x => q.clone(),
        Proc::Tick | Proc::Deadlock | Proc::Omega | Proc::PVar(_) => p.clone(),
        Proc::Prefix(a, r) => Proc::prefix(a.clone(), substitute_proc(r, x, q)),
        Proc::Choice(a, b) => Proc::choice(substitute_proc(a, x, q), substitute_proc(b, x, q)),
        Proc::Rec(y, _) if y == x => p.clone(),
        Proc::Rec(y, r) => Proc::rec(y.clone(), substitute_proc(r, x, q)),
    }
}

fn has_unprefixed_var(p: &Proc) -> bool {
    match p {
        Proc::PVar(_) => true,
        Proc::Choice(a, b) => has_unprefixed_var(a) || has_unprefixed_var(b),
        Proc::Rec(_, q) => has_unprefixed_var(q),
        Proc::Tick | Proc::Deadlock | Proc::Omega | Proc::Prefix(..) => false,
    }
}

/// The first recursion whose body reaches a variable without passing an
/// action prefix.
pub fn first_unguarded_proc(p: &Proc) -> Option<&Proc> {
    match p {
        Proc::Tick | Proc::Deadlock | Proc::Omega | Proc::PVar(_) => None,
        Proc::Prefix(_, q) => first_unguarded_proc(q),
        Proc::Choice(a, b) => first_unguarded_proc(a).or_else(|| first_unguarded_proc(b)),
        Proc::Rec(_, q) => {
            if has_unprefixed_var(q) {
                Some(p)
            } else {
                first_unguarded_proc(q)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CcsError {
    #[error("process is not closed: free {}", .0.iter().cloned().collect::<Vec<_>>().join(", "))]
    NotClosed(BTreeSet<String>),
    #[error("process is not guarded: `{0}`")]
    NotGuarded(Proc),
    #[error("processes translate over `B + (P Id)^A` with a one-element `B`, not {0}")]
    WrongFunctor(Functor),
    #[error("`{0}` is not a letter of the alphabet")]
    UnknownAction(String),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// The functor's semilattice element and alphabet, when the signature has
/// the process shape.
fn process_shape(sig: &Signature) -> Result<(String, &[String]), CcsError> {
    let wrong = || CcsError::WrongFunctor(sig.functor().clone());
    let Functor::Sum(l, r) = sig.functor() else {
        return Err(wrong());
    };
    let (Functor::Constant(b), Functor::Exponent(p, alpha)) = (&**l, &**r) else {
        return Err(wrong());
    };
    if **p != Functor::powerset(Functor::Identity) {
        return Err(wrong());
    }
    let lattice = sig.lattice(b).ok_or_else(wrong)?;
    if lattice.elements().len() != 1 {
        return Err(wrong());
    }
    let alphabet = sig.alphabet(alpha).ok_or_else(wrong)?;
    Ok((lattice.elements()[0].clone(), alphabet.letters()))
}

/// The structural translation: `tick` to `l[1]`, `dead` to `r[phi]`,
/// `omega` to `phi`, `a . P` to `r[a({P})]`, `+` to `(+)`, `mu` to `mu`.
pub fn translate_raw(p: &Proc, one: &str) -> Expr {
    match p {
        Proc::Tick => Expr::left_bracket(Expr::elem(one)),
        Proc::Deadlock => Expr::right_bracket(Expr::Empty),
        Proc::Omega => Expr::Empty,
        Proc::Prefix(a, q) => Expr::right_bracket(Expr::letter(
            a.clone(),
            Expr::singleton(translate_raw(q, one)),
        )),
        Proc::Choice(a, b) => Expr::plus(translate_raw(a, one), translate_raw(b, one)),
        Proc::PVar(x) => Expr::Var(x.clone()),
        Proc::Rec(x, q) => Expr::mu(x.clone(), translate_raw(q, one)),
    }
}

fn actions(p: &Proc, out: &mut Vec<String>) {
    match p {
        Proc::Prefix(a, q) => {
            out.push(a.clone());
            actions(q, out);
        }
        Proc::Choice(a, b) => {
            actions(a, out);
            actions(b, out);
        }
        Proc::Rec(_, q) => actions(q, out),
        _ => {}
    }
}

/// Checks that `p` is closed and guarded, translates it and certifies the
/// result.
pub fn translate(sig: &Signature, p: &Proc) -> Result<TypedExpr, CcsError> {
    let (one, letters) = process_shape(sig)?;
    let fv = proc_free_vars(p);
    if !fv.is_empty() {
        return Err(CcsError::NotClosed(fv));
    }
    if let Some(q) = first_unguarded_proc(p) {
        return Err(CcsError::NotGuarded(q.clone()));
    }
    let mut acts = Vec::new();
    actions(p, &mut acts);
    if let Some(a) = acts.into_iter().find(|a| !letters.contains(a)) {
        return Err(CcsError::UnknownAction(a));
    }
    Ok(check_expression(sig, &translate_raw(p, &one))?)
}

// ---------------------------------------------------------------------------
// Concrete syntax

/// Identifier classes the process parser needs.
pub trait ProcScope {
    fn is_action(&self, name: &str) -> bool;
}

impl ProcScope for Signature {
    fn is_action(&self, name: &str) -> bool {
        self.alphabets().iter().any(|a| a.contains(name))
    }
}

pub fn is_proc_keyword(x: &str) -> bool {
    matches!(x, "tick" | "dead" | "omega" | "mu")
}

pub fn parse_process_str(src: &str, scope: &dyn ProcScope) -> Result<Proc, ParseError> {
    let mut cur = Cursor::from_source(src)?;
    let p = parse_process(&mut cur, scope)?;
    cur.expect_eof()?;
    Ok(p)
}

/// `choice := prefixed ('+' prefixed)*`,
/// `prefixed := 'mu' x '.' choice | ACTION '.' prefixed | atom`.
pub fn parse_process(cur: &mut Cursor, scope: &dyn ProcScope) -> Result<Proc, ParseError> {
    let mut p = parse_prefixed(cur, scope)?;
    while cur.eat(&Tok::Plus) {
        let q = parse_prefixed(cur, scope)?;
        p = Proc::choice(p, q);
    }
    Ok(p)
}

fn check_var(x: &str, pos: Pos, scope: &dyn ProcScope) -> Result<(), ParseError> {
    if is_proc_keyword(x) || scope.is_action(x) {
        Err(ParseError::new(
            pos,
            format!("`{x}` cannot be used as a process variable"),
        ))
    } else {
        Ok(())
    }
}

fn parse_prefixed(cur: &mut Cursor, scope: &dyn ProcScope) -> Result<Proc, ParseError> {
    if cur.eat_ident("mu") {
        let (x, pos) = cur.expect_ident()?;
        check_var(&x, pos, scope)?;
        cur.expect(&Tok::Dot)?;
        return Ok(Proc::rec(x, parse_process(cur, scope)?));
    }
    if cur.eat(&Tok::LParen) {
        let p = parse_process(cur, scope)?;
        cur.expect(&Tok::RParen)?;
        return Ok(p);
    }
    let (name, pos) = cur
        .expect_ident()
        .map_err(|_| cur.unexpected("a process"))?;
    match name.as_str() {
        "tick" => Ok(Proc::Tick),
        "dead" => Ok(Proc::Deadlock),
        "omega" => Ok(Proc::Omega),
        _ if scope.is_action(&name) => {
            cur.expect(&Tok::Dot).map_err(|_| {
                ParseError::new(pos, format!("action `{name}` must be followed by `.`"))
            })?;
            Ok(Proc::prefix(name, parse_prefixed(cur, scope)?))
        }
        _ => {
            check_var(&name, pos, scope)?;
            Ok(Proc::PVar(name))
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    ChoiceLeft,
    Nested,
}

fn write_proc(p: &Proc, f: &mut fmt::Formatter<'_>, ctx: Ctx) -> fmt::Result {
    match p {
        Proc::Tick => f.write_str("tick"),
        Proc::Deadlock => f.write_str("dead"),
        Proc::Omega => f.write_str("omega"),
        Proc::PVar(x) => f.write_str(x),
        Proc::Prefix(a, q) => {
            write!(f, "{a} . ")?;
            write_proc(q, f, Ctx::Nested)
        }
        Proc::Choice(a, b) => {
            let paren = ctx == Ctx::Nested;
            if paren {
                f.write_str("(")?;
            }
            write_proc(a, f, Ctx::ChoiceLeft)?;
            f.write_str(" + ")?;
            write_proc(b, f, Ctx::Nested)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Proc::Rec(x, q) => {
            let paren = ctx != Ctx::Top;
            if paren {
                f.write_str("(")?;
            }
            write!(f, "mu {x} . ")?;
            write_proc(q, f, Ctx::Top)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Proc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_proc(self, f, Ctx::Top)
    }
}
