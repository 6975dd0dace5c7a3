//! Generalized regular expressions: syntax, binding, guardedness and the
//! ingredient-indexed type system.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::functor::{Functor, Ingredient};
use crate::lexer::{Cursor, ParseError, Tok};
use crate::signature::{ExprScope, Signature};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Empty,
    Var(String),
    Plus(Box<Expr>, Box<Expr>),
    Mu(String, Box<Expr>),
    /// A semilattice element `b`.
    Elem(String),
    /// `l<e>`: left component of a product.
    LeftAngle(Box<Expr>),
    /// `r<e>`: right component of a product.
    RightAngle(Box<Expr>),
    /// `l[e]`: left injection of a sum.
    LeftBracket(Box<Expr>),
    /// `r[e]`: right injection of a sum.
    RightBracket(Box<Expr>),
    /// `a(e)`: value at letter `a` of an exponent.
    Letter(String, Box<Expr>),
    /// `{e}`: singleton of a powerset.
    Singleton(Box<Expr>),
}

impl Expr {
    pub fn var(x: impl Into<String>) -> Expr {
        Expr::Var(x.into())
    }

    pub fn elem(b: impl Into<String>) -> Expr {
        Expr::Elem(b.into())
    }

    pub fn plus(l: Expr, r: Expr) -> Expr {
        Expr::Plus(Box::new(l), Box::new(r))
    }

    pub fn mu(x: impl Into<String>, body: Expr) -> Expr {
        Expr::Mu(x.into(), Box::new(body))
    }

    pub fn left_angle(e: Expr) -> Expr {
        Expr::LeftAngle(Box::new(e))
    }

    pub fn right_angle(e: Expr) -> Expr {
        Expr::RightAngle(Box::new(e))
    }

    pub fn left_bracket(e: Expr) -> Expr {
        Expr::LeftBracket(Box::new(e))
    }

    pub fn right_bracket(e: Expr) -> Expr {
        Expr::RightBracket(Box::new(e))
    }

    pub fn letter(a: impl Into<String>, e: Expr) -> Expr {
        Expr::Letter(a.into(), Box::new(e))
    }

    pub fn singleton(e: Expr) -> Expr {
        Expr::Singleton(Box::new(e))
    }

    /// Left-nested sum of `items`; the empty sum is `Empty`.
    pub fn sum_of(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().reduce(Expr::plus).unwrap_or(Expr::Empty)
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::Empty | Expr::Var(_) | Expr::Elem(_) => 1,
            Expr::Plus(l, r) => 1 + l.size() + r.size(),
            Expr::Mu(_, b)
            | Expr::LeftAngle(b)
            | Expr::RightAngle(b)
            | Expr::LeftBracket(b)
            | Expr::RightBracket(b)
            | Expr::Letter(_, b)
            | Expr::Singleton(b) => 1 + b.size(),
        }
    }

    /// The single child of a guard constructor (`l<>`, `r<>`, `l[]`, `r[]`,
    /// `a()`, `{}`).
    fn guarded_child(&self) -> Option<&Expr> {
        match self {
            Expr::LeftAngle(b)
            | Expr::RightAngle(b)
            | Expr::LeftBracket(b)
            | Expr::RightBracket(b)
            | Expr::Letter(_, b)
            | Expr::Singleton(b) => Some(b),
            _ => None,
        }
    }

    fn rebuild_guard(&self, child: Expr) -> Expr {
        match self {
            Expr::LeftAngle(_) => Expr::left_angle(child),
            Expr::RightAngle(_) => Expr::right_angle(child),
            Expr::LeftBracket(_) => Expr::left_bracket(child),
            Expr::RightBracket(_) => Expr::right_bracket(child),
            Expr::Letter(a, _) => Expr::letter(a.clone(), child),
            Expr::Singleton(_) => Expr::singleton(child),
            _ => unreachable!("not a guard constructor"),
        }
    }

    /// Applies `f` to every immediate child, keeping the constructor.
    pub(crate) fn map_children(&self, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
        match self {
            Expr::Empty | Expr::Var(_) | Expr::Elem(_) => self.clone(),
            Expr::Plus(l, r) => Expr::plus(f(l), f(r)),
            Expr::Mu(x, b) => Expr::mu(x.clone(), f(b)),
            other => other.rebuild_guard(f(other.guarded_child().unwrap())),
        }
    }
}

// ---------------------------------------------------------------------------
// Binding

pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    fn go(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match e {
            Expr::Var(x) if !bound.contains(x) => {
                out.insert(x.clone());
            }
            Expr::Var(_) | Expr::Empty | Expr::Elem(_) => {}
            Expr::Plus(l, r) => {
                go(l, bound, out);
                go(r, bound, out);
            }
            Expr::Mu(x, b) => {
                bound.push(x.clone());
                go(b, bound, out);
                bound.pop();
            }
            other => go(other.guarded_child().unwrap(), bound, out),
        }
    }
    let mut out = BTreeSet::new();
    go(e, &mut Vec::new(), &mut out);
    out
}

/// Variables reachable from the root through `(+)` and `mu` nodes only.
fn unguarded_vars(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(x) => {
            out.insert(x.clone());
        }
        Expr::Plus(l, r) => {
            unguarded_vars(l, out);
            unguarded_vars(r, out);
        }
        Expr::Mu(_, b) => unguarded_vars(b, out),
        _ => {}
    }
}

/// The first `mu` subterm (in pre-order) whose body has a variable occurrence
/// not beneath a guard constructor.
pub fn first_unguarded(e: &Expr) -> Option<&Expr> {
    match e {
        Expr::Empty | Expr::Var(_) | Expr::Elem(_) => None,
        Expr::Plus(l, r) => first_unguarded(l).or_else(|| first_unguarded(r)),
        Expr::Mu(_, b) => {
            let mut vs = BTreeSet::new();
            unguarded_vars(b, &mut vs);
            if vs.is_empty() {
                first_unguarded(b)
            } else {
                Some(e)
            }
        }
        other => first_unguarded(other.guarded_child().unwrap()),
    }
}

pub fn is_guarded(e: &Expr) -> bool {
    first_unguarded(e).is_none()
}

pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "x" } else { stem };
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|n| !avoid.contains(n))
        .unwrap()
}

/// Capture-avoiding `e[v/x]`.
pub fn substitute(e: &Expr, x: &str, v: &Expr) -> Expr {
    let fv = free_vars(v);
    subst(e, x, v, &fv)
}

fn subst(e: &Expr, x: &str, v: &Expr, fv_v: &BTreeSet<String>) -> Expr {
    match e {
        Expr::Var(y) if y == x => v.clone(),
        Expr::Var(_) | Expr::Empty | Expr::Elem(_) => e.clone(),
        Expr::Plus(l, r) => Expr::plus(subst(l, x, v, fv_v), subst(r, x, v, fv_v)),
        Expr::Mu(y, _) if y == x => e.clone(),
        Expr::Mu(y, b) => {
            if fv_v.contains(y) && free_vars(b).contains(x) {
                let mut avoid = fv_v.clone();
                avoid.extend(free_vars(b));
                avoid.insert(x.to_string());
                let fresh = fresh_name(y, &avoid);
                let renamed = subst(b, y, &Expr::Var(fresh.clone()), &BTreeSet::new());
                Expr::mu(fresh, subst(&renamed, x, v, fv_v))
            } else {
                Expr::mu(y.clone(), subst(b, x, v, fv_v))
            }
        }
        other => other.rebuild_guard(subst(other.guarded_child().unwrap(), x, v, fv_v)),
    }
}

// ---------------------------------------------------------------------------
// Alpha-equivalence and the canonical order

/// Locally nameless image of an expression: bound variables become binder
/// distances, binder names disappear. Its derived order is the canonical
/// total order on expressions (constructor rank first, then children).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nameless {
    Empty,
    Bound(usize),
    Free(String),
    Plus(Box<Nameless>, Box<Nameless>),
    Mu(Box<Nameless>),
    Elem(String),
    LeftAngle(Box<Nameless>),
    RightAngle(Box<Nameless>),
    LeftBracket(Box<Nameless>),
    RightBracket(Box<Nameless>),
    Letter(String, Box<Nameless>),
    Singleton(Box<Nameless>),
}

/// The nameless key of `e` under the enclosing binders `env` (innermost last).
pub fn nameless_in(e: &Expr, env: &mut Vec<String>) -> Nameless {
    let b = |n: Nameless| Box::new(n);
    match e {
        Expr::Empty => Nameless::Empty,
        Expr::Var(x) => match env.iter().rev().position(|y| y == x) {
            Some(i) => Nameless::Bound(i),
            None => Nameless::Free(x.clone()),
        },
        Expr::Plus(l, r) => Nameless::Plus(b(nameless_in(l, env)), b(nameless_in(r, env))),
        Expr::Mu(x, body) => {
            env.push(x.clone());
            let k = nameless_in(body, env);
            env.pop();
            Nameless::Mu(b(k))
        }
        Expr::Elem(v) => Nameless::Elem(v.clone()),
        Expr::LeftAngle(c) => Nameless::LeftAngle(b(nameless_in(c, env))),
        Expr::RightAngle(c) => Nameless::RightAngle(b(nameless_in(c, env))),
        Expr::LeftBracket(c) => Nameless::LeftBracket(b(nameless_in(c, env))),
        Expr::RightBracket(c) => Nameless::RightBracket(b(nameless_in(c, env))),
        Expr::Letter(a, c) => Nameless::Letter(a.clone(), b(nameless_in(c, env))),
        Expr::Singleton(c) => Nameless::Singleton(b(nameless_in(c, env))),
    }
}

pub fn nameless(e: &Expr) -> Nameless {
    nameless_in(e, &mut Vec::new())
}

pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    a == b || nameless(a) == nameless(b)
}

pub fn canonical_cmp(a: &Expr, b: &Expr) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    nameless(a).cmp(&nameless(b))
}

/// Renames every binder to `x1`, `x2`, ... in depth-first order, skipping
/// names that occur free. Alpha-equivalent inputs give identical outputs.
pub fn canonical_rename(e: &Expr) -> Expr {
    fn go(
        e: &Expr,
        scope: &mut Vec<(String, String)>,
        next: &mut usize,
        avoid: &BTreeSet<String>,
    ) -> Expr {
        match e {
            Expr::Var(x) => match scope.iter().rev().find(|(old, _)| old == x) {
                Some((_, new)) => Expr::Var(new.clone()),
                None => e.clone(),
            },
            Expr::Mu(x, b) => {
                let name = loop {
                    let n = format!("x{next}");
                    *next += 1;
                    if !avoid.contains(&n) {
                        break n;
                    }
                };
                scope.push((x.clone(), name.clone()));
                let body = go(b, scope, next, avoid);
                scope.pop();
                Expr::mu(name, body)
            }
            other => other.map_children(|c| go(c, scope, next, avoid)),
        }
    }
    go(e, &mut Vec::new(), &mut 1, &free_vars(e))
}

// ---------------------------------------------------------------------------
// Typing

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("`{subterm}` cannot have type {expected}")]
pub struct TypeError {
    pub subterm: Expr,
    /// The ingredient part the subterm was checked against.
    pub expected: Functor,
}

/// Checks `⊢ e : part ◁ G` where `G` is the signature's functor.
pub fn typecheck(sig: &Signature, e: &Expr, part: &Functor) -> bool {
    type_diagnostic(sig, e, part).is_ok()
}

/// Like [`typecheck`], reporting the first subterm whose constructor does
/// not fit the ingredient it is checked at.
pub fn type_diagnostic(sig: &Signature, e: &Expr, part: &Functor) -> Result<(), TypeError> {
    let g = sig.functor();
    let fail = || {
        Err(TypeError {
            subterm: e.clone(),
            expected: part.clone(),
        })
    };
    match e {
        Expr::Empty => Ok(()),
        Expr::Plus(l, r) => {
            type_diagnostic(sig, l, part)?;
            type_diagnostic(sig, r, part)
        }
        // Coercion: anything typed at G ◁ G is typed at Id ◁ G.
        _ if *part == Functor::Identity && g != part => type_diagnostic(sig, e, g),
        Expr::Var(_) => {
            if part == g {
                Ok(())
            } else {
                fail()
            }
        }
        Expr::Mu(_, b) => {
            if part == g {
                type_diagnostic(sig, b, g)
            } else {
                fail()
            }
        }
        Expr::Elem(b) => match part {
            Functor::Constant(l) if sig.lattice(l).is_some_and(|l| l.contains(b)) => Ok(()),
            _ => fail(),
        },
        Expr::LeftAngle(c) => match part {
            Functor::Product(f1, _) => type_diagnostic(sig, c, f1),
            _ => fail(),
        },
        Expr::RightAngle(c) => match part {
            Functor::Product(_, f2) => type_diagnostic(sig, c, f2),
            _ => fail(),
        },
        Expr::LeftBracket(c) => match part {
            Functor::Sum(f1, _) => type_diagnostic(sig, c, f1),
            _ => fail(),
        },
        Expr::RightBracket(c) => match part {
            Functor::Sum(_, f2) => type_diagnostic(sig, c, f2),
            _ => fail(),
        },
        Expr::Letter(a, c) => match part {
            Functor::Exponent(f, alpha) if sig.alphabet(alpha).is_some_and(|al| al.contains(a)) => {
                type_diagnostic(sig, c, f)
            }
            _ => fail(),
        },
        Expr::Singleton(c) => match part {
            Functor::Powerset(f) => type_diagnostic(sig, c, f),
            _ => fail(),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("expression is not closed: free {}", fmt_vars(.0))]
    NotClosed(BTreeSet<String>),
    #[error("expression is not guarded: `{0}`")]
    NotGuarded(Expr),
    #[error("expression is ill-typed: {0}")]
    IllTyped(TypeError),
}

fn fmt_vars(vs: &BTreeSet<String>) -> String {
    vs.iter().map(String::as_str).collect::<Vec<_>>().join(", ")
}

/// A closed, guarded expression certified at `G ◁ G`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedExpr {
    expr: Expr,
    at: Ingredient,
}

impl TypedExpr {
    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn ingredient(&self) -> &Ingredient {
        &self.at
    }

    pub fn into_expr(self) -> Expr {
        self.expr
    }
}

pub fn check_expression(sig: &Signature, e: &Expr) -> Result<TypedExpr, CheckError> {
    let fv = free_vars(e);
    if !fv.is_empty() {
        return Err(CheckError::NotClosed(fv));
    }
    if let Some(sub) = first_unguarded(e) {
        return Err(CheckError::NotGuarded(sub.clone()));
    }
    type_diagnostic(sig, e, sig.functor()).map_err(CheckError::IllTyped)?;
    Ok(TypedExpr {
        expr: e.clone(),
        at: Ingredient::top(sig.functor().clone()),
    })
}

// ---------------------------------------------------------------------------
// Concrete syntax

pub fn parse_expr_str(src: &str, scope: &dyn ExprScope) -> Result<Expr, ParseError> {
    let mut cur = Cursor::from_source(src)?;
    let e = parse_expr(&mut cur, scope)?;
    cur.expect_eof()?;
    Ok(e)
}

/// `sum := unary ('(+)' unary)*`, `unary := 'mu' x '.' sum | atom`.
pub fn parse_expr(cur: &mut Cursor, scope: &dyn ExprScope) -> Result<Expr, ParseError> {
    let mut e = parse_unary(cur, scope)?;
    while cur.eat(&Tok::OPlus) {
        let r = parse_unary(cur, scope)?;
        e = Expr::plus(e, r);
    }
    Ok(e)
}

fn parse_unary(cur: &mut Cursor, scope: &dyn ExprScope) -> Result<Expr, ParseError> {
    if cur.eat_ident("mu") {
        let (x, pos) = cur.expect_ident()?;
        check_var_name(&x, pos, scope)?;
        cur.expect(&Tok::Dot)?;
        let body = parse_expr(cur, scope)?;
        return Ok(Expr::mu(x, body));
    }
    parse_atom(cur, scope)
}

fn check_var_name(
    x: &str,
    pos: crate::lexer::Pos,
    scope: &dyn ExprScope,
) -> Result<(), ParseError> {
    if is_expr_keyword(x) || scope.is_element(x) || scope.is_letter(x) {
        Err(ParseError::new(
            pos,
            format!("`{x}` cannot be used as a variable"),
        ))
    } else {
        Ok(())
    }
}

pub fn is_expr_keyword(x: &str) -> bool {
    matches!(x, "mu" | "phi")
}

fn parse_atom(cur: &mut Cursor, scope: &dyn ExprScope) -> Result<Expr, ParseError> {
    let pos = cur.pos();
    match cur.peek().clone() {
        Tok::LParen => {
            cur.bump();
            let e = parse_expr(cur, scope)?;
            cur.expect(&Tok::RParen)?;
            Ok(e)
        }
        Tok::LBrace => {
            cur.bump();
            let e = parse_expr(cur, scope)?;
            cur.expect(&Tok::RBrace)?;
            Ok(Expr::singleton(e))
        }
        Tok::Ident(name) => {
            let next = cur.peek_at(1).clone();
            if (name == "l" || name == "r") && matches!(next, Tok::LAngle | Tok::LBracket) {
                cur.bump();
                cur.bump();
                let e = parse_expr(cur, scope)?;
                let close = if next == Tok::LAngle {
                    Tok::RAngle
                } else {
                    Tok::RBracket
                };
                cur.expect(&close)?;
                return Ok(match (name.as_str(), next) {
                    ("l", Tok::LAngle) => Expr::left_angle(e),
                    ("r", Tok::LAngle) => Expr::right_angle(e),
                    ("l", _) => Expr::left_bracket(e),
                    _ => Expr::right_bracket(e),
                });
            }
            let is_elem = scope.is_element(&name);
            let is_letter = scope.is_letter(&name);
            if is_elem && is_letter {
                return Err(ParseError::new(
                    pos,
                    format!(
                        "ambiguous identifier `{name}`: both a semilattice element and a letter"
                    ),
                ));
            }
            cur.bump();
            if name == "phi" {
                Ok(Expr::Empty)
            } else if is_letter {
                cur.expect(&Tok::LParen).map_err(|_| {
                    ParseError::new(
                        pos,
                        format!("letter `{name}` must be applied: `{name}( ... )`"),
                    )
                })?;
                let e = parse_expr(cur, scope)?;
                cur.expect(&Tok::RParen)?;
                Ok(Expr::letter(name, e))
            } else if is_elem {
                Ok(Expr::Elem(name))
            } else if name == "mu" {
                Err(ParseError::new(pos, "unexpected `mu`"))
            } else {
                Ok(Expr::Var(name))
            }
        }
        _ => Err(cur.unexpected("an expression")),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    PlusLeft,
    PlusRight,
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>, ctx: Ctx) -> fmt::Result {
    match e {
        Expr::Empty => f.write_str("phi"),
        Expr::Var(x) | Expr::Elem(x) => f.write_str(x),
        Expr::Plus(l, r) => {
            let paren = ctx == Ctx::PlusRight;
            if paren {
                f.write_str("(")?;
            }
            write_expr(l, f, Ctx::PlusLeft)?;
            f.write_str(" (+) ")?;
            write_expr(r, f, Ctx::PlusRight)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Expr::Mu(x, b) => {
            let paren = ctx != Ctx::Top;
            if paren {
                f.write_str("(")?;
            }
            write!(f, "mu {x} . ")?;
            write_expr(b, f, Ctx::Top)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Expr::LeftAngle(c) => wrap(f, "l<", c, ">"),
        Expr::RightAngle(c) => wrap(f, "r<", c, ">"),
        Expr::LeftBracket(c) => wrap(f, "l[", c, "]"),
        Expr::RightBracket(c) => wrap(f, "r[", c, "]"),
        Expr::Letter(a, c) => {
            write!(f, "{a}(")?;
            write_expr(c, f, Ctx::Top)?;
            f.write_str(")")
        }
        Expr::Singleton(c) => wrap(f, "{", c, "}"),
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, open: &str, c: &Expr, close: &str) -> fmt::Result {
    f.write_str(open)?;
    write_expr(c, f, Ctx::Top)?;
    f.write_str(close)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f, Ctx::Top)
    }
}
