//! Non-deterministic functors and their ingredient relation.

use std::fmt;

use serde::Serialize;

use crate::lexer::{Cursor, ParseError, Tok};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Functor {
    Identity,
    /// A constant functor, naming a declared semilattice.
    Constant(String),
    Product(Box<Functor>, Box<Functor>),
    /// The sum enriched with bottom and top elements, written `+`.
    Sum(Box<Functor>, Box<Functor>),
    /// Exponent by a declared alphabet.
    Exponent(Box<Functor>, String),
    Powerset(Box<Functor>),
}

impl Functor {
    pub fn product(l: Functor, r: Functor) -> Functor {
        Functor::Product(Box::new(l), Box::new(r))
    }

    pub fn sum(l: Functor, r: Functor) -> Functor {
        Functor::Sum(Box::new(l), Box::new(r))
    }

    pub fn exponent(base: Functor, alphabet: impl Into<String>) -> Functor {
        Functor::Exponent(Box::new(base), alphabet.into())
    }

    pub fn powerset(inner: Functor) -> Functor {
        Functor::Powerset(Box::new(inner))
    }

    pub fn constant(lattice: impl Into<String>) -> Functor {
        Functor::Constant(lattice.into())
    }

    /// Immediate sub-functors.
    pub fn children(&self) -> Vec<&Functor> {
        match self {
            Functor::Identity | Functor::Constant(_) => vec![],
            Functor::Product(l, r) | Functor::Sum(l, r) => vec![l, r],
            Functor::Exponent(b, _) | Functor::Powerset(b) => vec![b],
        }
    }

    pub fn height(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Functor::height)
            .max()
            .unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Functor::size)
            .sum::<usize>()
    }

    fn prec(&self) -> u8 {
        match self {
            Functor::Sum(..) => 0,
            Functor::Product(..) => 1,
            Functor::Exponent(..) => 2,
            Functor::Powerset(..) => 3,
            Functor::Identity | Functor::Constant(_) => 4,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Functor::Identity => f.write_str("Id"),
            Functor::Constant(b) => f.write_str(b),
            Functor::Sum(l, r) => {
                l.fmt_at(f, 0)?;
                f.write_str(" + ")?;
                r.fmt_at(f, 1)
            }
            Functor::Product(l, r) => {
                l.fmt_at(f, 1)?;
                f.write_str(" x ")?;
                r.fmt_at(f, 2)
            }
            Functor::Exponent(b, a) => {
                b.fmt_at(f, 2)?;
                write!(f, "^{a}")
            }
            Functor::Powerset(g) => {
                f.write_str("P ")?;
                g.fmt_at(f, 3)
            }
        }
    }
}

impl fmt::Display for Functor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// A pair `part ◁ whole`. Only constructed when `part` really is an
/// ingredient of `whole`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Ingredient {
    part: Functor,
    whole: Functor,
}

impl Ingredient {
    pub fn new(part: Functor, whole: Functor) -> Option<Ingredient> {
        is_ingredient(&part, &whole).then_some(Ingredient { part, whole })
    }

    /// The top ingredient `G ◁ G`.
    pub fn top(whole: Functor) -> Ingredient {
        Ingredient {
            part: whole.clone(),
            whole,
        }
    }

    pub fn part(&self) -> &Functor {
        &self.part
    }

    pub fn whole(&self) -> &Functor {
        &self.whole
    }
}

impl fmt::Display for Ingredient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <| {}", self.part, self.whole)
    }
}

/// All ingredients of `g`, ordered by height and then by rendering.
pub fn ingredients(g: &Functor) -> Vec<Functor> {
    fn collect(g: &Functor, out: &mut Vec<Functor>) {
        if !out.contains(g) {
            out.push(g.clone());
        }
        for c in g.children() {
            collect(c, out);
        }
    }
    let mut out = Vec::new();
    collect(g, &mut out);
    out.sort_by_cached_key(|f| (f.height(), f.to_string()));
    out
}

pub fn is_ingredient(f: &Functor, g: &Functor) -> bool {
    f == g || g.children().into_iter().any(|c| is_ingredient(f, c))
}

/// Names a functor parser must be able to resolve.
pub trait FunctorScope {
    fn is_lattice(&self, name: &str) -> bool;
    fn is_alphabet(&self, name: &str) -> bool;
}

const RESERVED: [&str; 3] = ["Id", "P", "x"];

/// Parses `sum := prod ('+' prod)*`, `prod := expo ('x' expo)*`,
/// `expo := pre ('^' NAME)*`, `pre := 'P' pre | 'Id' | NAME | '(' sum ')'`.
pub fn parse_functor(cur: &mut Cursor, scope: &dyn FunctorScope) -> Result<Functor, ParseError> {
    let mut f = parse_product(cur, scope)?;
    while cur.eat(&Tok::Plus) {
        let r = parse_product(cur, scope)?;
        f = Functor::sum(f, r);
    }
    Ok(f)
}

fn parse_product(cur: &mut Cursor, scope: &dyn FunctorScope) -> Result<Functor, ParseError> {
    let mut f = parse_exponent(cur, scope)?;
    while cur.eat_ident("x") {
        let r = parse_exponent(cur, scope)?;
        f = Functor::product(f, r);
    }
    Ok(f)
}

fn parse_exponent(cur: &mut Cursor, scope: &dyn FunctorScope) -> Result<Functor, ParseError> {
    let mut f = parse_prefix(cur, scope)?;
    while cur.eat(&Tok::Caret) {
        let (name, pos) = cur.expect_ident()?;
        if !scope.is_alphabet(&name) {
            return Err(ParseError::new(pos, format!("unknown alphabet `{name}`")));
        }
        f = Functor::exponent(f, name);
    }
    Ok(f)
}

fn parse_prefix(cur: &mut Cursor, scope: &dyn FunctorScope) -> Result<Functor, ParseError> {
    if cur.eat(&Tok::LParen) {
        let f = parse_functor(cur, scope)?;
        cur.expect(&Tok::RParen)?;
        return Ok(f);
    }
    let pos = cur.pos();
    let (name, _) = cur
        .expect_ident()
        .map_err(|_| cur.unexpected("a functor"))?;
    match name.as_str() {
        "Id" => Ok(Functor::Identity),
        "P" => Ok(Functor::powerset(parse_prefix(cur, scope)?)),
        "x" => Err(ParseError::new(
            pos,
            "expected a functor, found the product operator `x`",
        )),
        _ if scope.is_lattice(&name) => Ok(Functor::Constant(name)),
        _ => Err(ParseError::new(
            pos,
            format!("unknown semilattice `{name}`"),
        )),
    }
}

/// True for names that cannot be used for semilattices or alphabets because
/// the functor syntax gives them a meaning.
pub fn is_reserved_functor_word(name: &str) -> bool {
    RESERVED.contains(&name)
}
