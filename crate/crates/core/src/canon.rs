//! Canonical terms: expressions modulo alpha-equivalence and the `(+)`
//! axioms in force. Binders are de Bruijn indices and a sum is a sorted list
//! of distinct summands with multiplicities, so states of the synthesized
//! coalgebra stay small even when idempotence is switched off.

use std::collections::BTreeSet;

use num_bigint::BigUint;

use crate::expr::Expr;
use crate::functor::Functor;
use crate::semantics::{NormalizeOptions, SemanticsError, Struct};
use crate::signature::Signature;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Empty,
    Bound(usize),
    Free(String),
    /// At least two summands counted with multiplicity; summands are never
    /// sums themselves and appear in increasing order.
    Sum(Vec<(Term, BigUint)>),
    Mu(Box<Term>),
    Elem(String),
    LeftAngle(Box<Term>),
    RightAngle(Box<Term>),
    LeftBracket(Box<Term>),
    RightBracket(Box<Term>),
    Letter(String, Box<Term>),
    Singleton(Box<Term>),
}

fn one() -> BigUint {
    BigUint::from(1u8)
}

impl Term {
    pub fn from_expr(e: &Expr, opts: NormalizeOptions) -> Term {
        from_expr_in(e, &mut Vec::new(), opts)
    }

    /// Back to a named expression: sums left-nested, binders `x1`, `x2`, ...
    /// in depth-first order avoiding free names.
    pub fn to_expr(&self) -> Expr {
        let mut free = BTreeSet::new();
        self.free_names(&mut free);
        to_expr_in(self, &mut Vec::new(), &mut 1, &free)
    }

    fn free_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Free(x) => {
                out.insert(x.clone());
            }
            Term::Empty | Term::Bound(_) | Term::Elem(_) => {}
            Term::Sum(items) => items.iter().for_each(|(t, _)| t.free_names(out)),
            Term::Mu(b)
            | Term::LeftAngle(b)
            | Term::RightAngle(b)
            | Term::LeftBracket(b)
            | Term::RightBracket(b)
            | Term::Letter(_, b)
            | Term::Singleton(b) => b.free_names(out),
        }
    }

    fn map_guard(&self, f: impl FnOnce(&Term) -> Term) -> Term {
        let b = |t: Term| Box::new(t);
        match self {
            Term::LeftAngle(c) => Term::LeftAngle(b(f(c))),
            Term::RightAngle(c) => Term::RightAngle(b(f(c))),
            Term::LeftBracket(c) => Term::LeftBracket(b(f(c))),
            Term::RightBracket(c) => Term::RightBracket(b(f(c))),
            Term::Letter(a, c) => Term::Letter(a.clone(), b(f(c))),
            Term::Singleton(c) => Term::Singleton(b(f(c))),
            _ => unreachable!("not a guard constructor"),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Empty | Term::Bound(_) | Term::Free(_) | Term::Elem(_) => 1,
            Term::Sum(items) => 1 + items.iter().map(|(t, _)| t.size()).sum::<usize>(),
            Term::Mu(b)
            | Term::LeftAngle(b)
            | Term::RightAngle(b)
            | Term::LeftBracket(b)
            | Term::RightBracket(b)
            | Term::Letter(_, b)
            | Term::Singleton(b) => 1 + b.size(),
        }
    }
}

/// Builds the canonical sum of `items`.
pub fn make_sum(items: Vec<(Term, BigUint)>, opts: NormalizeOptions) -> Term {
    let mut flat: Vec<(Term, BigUint)> = Vec::with_capacity(items.len());
    for (t, k) in items {
        match t {
            Term::Sum(inner) => flat.extend(inner.into_iter().map(|(u, m)| (u, m * &k))),
            other => flat.push((other, k)),
        }
    }
    flat.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(Term, BigUint)> = Vec::with_capacity(flat.len());
    for (t, k) in flat {
        match merged.last_mut() {
            Some((u, m)) if *u == t => *m += k,
            _ => merged.push((t, k)),
        }
    }
    if opts.idempotence {
        merged.iter_mut().for_each(|(_, m)| *m = one());
    }
    if opts.unit {
        if merged.iter().any(|(t, _)| *t != Term::Empty) {
            merged.retain(|(t, _)| *t != Term::Empty);
        } else {
            return Term::Empty;
        }
    }
    match merged.len() {
        0 => Term::Empty,
        1 if merged[0].1 == one() => merged.pop().unwrap().0,
        _ => Term::Sum(merged),
    }
}

fn from_expr_in(e: &Expr, env: &mut Vec<String>, opts: NormalizeOptions) -> Term {
    let b = |t: Term| Box::new(t);
    match e {
        Expr::Empty => Term::Empty,
        Expr::Var(x) => match env.iter().rev().position(|y| y == x) {
            Some(i) => Term::Bound(i),
            None => Term::Free(x.clone()),
        },
        Expr::Plus(l, r) => make_sum(
            vec![
                (from_expr_in(l, env, opts), one()),
                (from_expr_in(r, env, opts), one()),
            ],
            opts,
        ),
        Expr::Mu(x, body) => {
            env.push(x.clone());
            let t = from_expr_in(body, env, opts);
            env.pop();
            Term::Mu(b(t))
        }
        Expr::Elem(v) => Term::Elem(v.clone()),
        Expr::LeftAngle(c) => Term::LeftAngle(b(from_expr_in(c, env, opts))),
        Expr::RightAngle(c) => Term::RightAngle(b(from_expr_in(c, env, opts))),
        Expr::LeftBracket(c) => Term::LeftBracket(b(from_expr_in(c, env, opts))),
        Expr::RightBracket(c) => Term::RightBracket(b(from_expr_in(c, env, opts))),
        Expr::Letter(a, c) => Term::Letter(a.clone(), b(from_expr_in(c, env, opts))),
        Expr::Singleton(c) => Term::Singleton(b(from_expr_in(c, env, opts))),
    }
}

fn to_expr_in(
    t: &Term,
    names: &mut Vec<String>,
    next: &mut usize,
    avoid: &BTreeSet<String>,
) -> Expr {
    match t {
        Term::Empty => Expr::Empty,
        Term::Bound(i) => Expr::Var(names[names.len() - 1 - i].clone()),
        Term::Free(x) => Expr::Var(x.clone()),
        Term::Sum(items) => {
            let mut parts = Vec::new();
            for (u, k) in items {
                let k = usize::try_from(k).expect("summand multiplicity fits in memory");
                for _ in 0..k {
                    parts.push(to_expr_in(u, names, next, avoid));
                }
            }
            Expr::sum_of(parts)
        }
        Term::Mu(b) => {
            let name = loop {
                let n = format!("x{next}");
                *next += 1;
                if !avoid.contains(&n) {
                    break n;
                }
            };
            names.push(name.clone());
            let body = to_expr_in(b, names, next, avoid);
            names.pop();
            Expr::mu(name, body)
        }
        Term::Elem(v) => Expr::Elem(v.clone()),
        Term::LeftAngle(c) => Expr::left_angle(to_expr_in(c, names, next, avoid)),
        Term::RightAngle(c) => Expr::right_angle(to_expr_in(c, names, next, avoid)),
        Term::LeftBracket(c) => Expr::left_bracket(to_expr_in(c, names, next, avoid)),
        Term::RightBracket(c) => Expr::right_bracket(to_expr_in(c, names, next, avoid)),
        Term::Letter(a, c) => Expr::letter(a.clone(), to_expr_in(c, names, next, avoid)),
        Term::Singleton(c) => Expr::singleton(to_expr_in(c, names, next, avoid)),
    }
}

/// `body[v/0]` for a closed `v`, re-normalizing the sums it passes through.
fn instantiate(body: &Term, depth: usize, v: &Term, opts: NormalizeOptions) -> Term {
    match body {
        Term::Bound(i) if *i == depth => v.clone(),
        Term::Empty | Term::Bound(_) | Term::Free(_) | Term::Elem(_) => body.clone(),
        Term::Sum(items) => make_sum(
            items
                .iter()
                .map(|(t, k)| (instantiate(t, depth, v, opts), k.clone()))
                .collect(),
            opts,
        ),
        Term::Mu(b) => Term::Mu(Box::new(instantiate(b, depth + 1, v, opts))),
        guard => guard.map_guard(|c| instantiate(c, depth, v, opts)),
    }
}

pub type StructTerm = Struct<Term>;

pub fn empty_term_struct(sig: &Signature, part: &Functor) -> StructTerm {
    match part {
        Functor::Identity => Struct::Leaf(Term::Empty),
        Functor::Constant(l) => Struct::Val(sig.lattice_of(l).bottom().to_string()),
        Functor::Product(a, b) => {
            Struct::pair(empty_term_struct(sig, a), empty_term_struct(sig, b))
        }
        Functor::Sum(..) => Struct::Bot,
        Functor::Exponent(f, alpha) => {
            let e = empty_term_struct(sig, f);
            Struct::Table(
                sig.alphabet_of(alpha)
                    .letters()
                    .iter()
                    .map(|a| (a.clone(), e.clone()))
                    .collect(),
            )
        }
        Functor::Powerset(_) => Struct::Set(Vec::new()),
    }
}

fn mismatch(part: &Functor, a: &StructTerm, b: &StructTerm) -> SemanticsError {
    let show = |s: &StructTerm| s.map_leaves(&mut |t| t.to_expr()).to_string();
    SemanticsError::IngredientMismatch {
        part: part.clone(),
        left: show(a),
        right: show(b),
    }
}

/// `Plus` on canonical structured terms; sets stay sorted and duplicate-free.
pub fn plus_term_struct(
    sig: &Signature,
    part: &Functor,
    s1: StructTerm,
    s2: StructTerm,
    opts: NormalizeOptions,
) -> Result<StructTerm, SemanticsError> {
    use Struct::*;
    Ok(match (part, s1, s2) {
        (Functor::Identity, Leaf(a), Leaf(b)) => Leaf(make_sum(vec![(a, one()), (b, one())], opts)),
        (Functor::Constant(l), Val(a), Val(b)) => match sig.lattice_of(l).join(&a, &b) {
            Ok(j) => Val(j.to_string()),
            Err(_) => return Err(mismatch(part, &Val(a), &Val(b))),
        },
        (Functor::Product(f1, f2), Pair(a1, b1), Pair(a2, b2)) => Struct::pair(
            plus_term_struct(sig, f1, *a1, *a2, opts)?,
            plus_term_struct(sig, f2, *b1, *b2, opts)?,
        ),
        (Functor::Sum(..), Bot, s) | (Functor::Sum(..), s, Bot) if is_sum_shape(&s) => s,
        (Functor::Sum(..), Top, s) | (Functor::Sum(..), s, Top) if is_sum_shape(&s) => Top,
        (Functor::Sum(f1, _), Inj1(a), Inj1(b)) => {
            Struct::inj1(plus_term_struct(sig, f1, *a, *b, opts)?)
        }
        (Functor::Sum(_, f2), Inj2(a), Inj2(b)) => {
            Struct::inj2(plus_term_struct(sig, f2, *a, *b, opts)?)
        }
        (Functor::Sum(..), Inj1(_), Inj2(_)) | (Functor::Sum(..), Inj2(_), Inj1(_)) => Top,
        (Functor::Exponent(f, _), Table(t1), Table(t2))
            if t1.len() == t2.len() && t1.iter().zip(&t2).all(|((a, _), (b, _))| a == b) =>
        {
            Table(
                t1.into_iter()
                    .zip(t2)
                    .map(|((a, x), (_, y))| Ok((a, plus_term_struct(sig, f, x, y, opts)?)))
                    .collect::<Result<_, SemanticsError>>()?,
            )
        }
        (Functor::Powerset(_), Set(mut xs), Set(ys)) => {
            xs.extend(ys);
            xs.sort();
            xs.dedup();
            Set(xs)
        }
        (part, a, b) => return Err(mismatch(part, &a, &b)),
    })
}

fn is_sum_shape<L>(s: &Struct<L>) -> bool {
    matches!(
        s,
        Struct::Bot | Struct::Top | Struct::Inj1(_) | Struct::Inj2(_)
    )
}

/// `k` copies of `s` added together.
fn scale(s: StructTerm, k: &BigUint, opts: NormalizeOptions) -> StructTerm {
    if *k == one() || opts.idempotence {
        return s;
    }
    match s {
        Struct::Leaf(t) => Struct::Leaf(make_sum(vec![(t, k.clone())], opts)),
        Struct::Pair(a, b) => Struct::pair(scale(*a, k, opts), scale(*b, k, opts)),
        Struct::Inj1(a) => Struct::inj1(scale(*a, k, opts)),
        Struct::Inj2(a) => Struct::inj2(scale(*a, k, opts)),
        Struct::Table(t) => {
            Struct::Table(t.into_iter().map(|(a, x)| (a, scale(x, k, opts))).collect())
        }
        // Joins, sum tags and set unions are idempotent.
        other => other,
    }
}

/// `delta` on a closed canonical term, producing a canonical structure.
pub fn delta_term(
    sig: &Signature,
    part: &Functor,
    t: &Term,
    opts: NormalizeOptions,
) -> Result<StructTerm, SemanticsError> {
    delta_fuel(sig, part, t, t.size(), opts)
}

fn delta_fuel(
    sig: &Signature,
    part: &Functor,
    t: &Term,
    fuel: usize,
    opts: NormalizeOptions,
) -> Result<StructTerm, SemanticsError> {
    let g = sig.functor();
    let ill = || SemanticsError::IllTyped {
        subterm: t.to_expr(),
        part: part.clone(),
    };
    if *part == Functor::Identity && g != part {
        return Ok(Struct::Leaf(t.clone()));
    }
    let rec = |part: &Functor, c: &Term| delta_fuel(sig, part, c, c.size(), opts);
    match t {
        Term::Empty => Ok(empty_term_struct(sig, part)),
        Term::Sum(items) => {
            let mut acc: Option<StructTerm> = None;
            for (u, k) in items {
                let d = scale(delta_fuel(sig, part, u, fuel, opts)?, k, opts);
                acc = Some(match acc {
                    None => d,
                    Some(a) => plus_term_struct(sig, part, a, d, opts)?,
                });
            }
            Ok(acc.unwrap_or_else(|| empty_term_struct(sig, part)))
        }
        Term::Mu(b) => {
            if part != g {
                return Err(ill());
            }
            if fuel == 0 {
                return Err(SemanticsError::UnguardedRecursion(t.to_expr()));
            }
            delta_fuel(sig, part, &instantiate(b, 0, t, opts), fuel - 1, opts)
        }
        Term::Bound(_) | Term::Free(_) => Err(ill()),
        Term::Elem(v) => match part {
            Functor::Constant(l) if sig.lattice_of(l).contains(v) => Ok(Struct::Val(v.clone())),
            _ => Err(ill()),
        },
        Term::LeftAngle(c) => match part {
            Functor::Product(f1, f2) => Ok(Struct::pair(rec(f1, c)?, empty_term_struct(sig, f2))),
            _ => Err(ill()),
        },
        Term::RightAngle(c) => match part {
            Functor::Product(f1, f2) => Ok(Struct::pair(empty_term_struct(sig, f1), rec(f2, c)?)),
            _ => Err(ill()),
        },
        Term::LeftBracket(c) => match part {
            Functor::Sum(f1, _) => Ok(Struct::inj1(rec(f1, c)?)),
            _ => Err(ill()),
        },
        Term::RightBracket(c) => match part {
            Functor::Sum(_, f2) => Ok(Struct::inj2(rec(f2, c)?)),
            _ => Err(ill()),
        },
        Term::Letter(a, c) => match part {
            Functor::Exponent(f, alpha) if sig.alphabet_of(alpha).contains(a) => {
                let hit = rec(f, c)?;
                let rest = empty_term_struct(sig, f);
                Ok(Struct::Table(
                    sig.alphabet_of(alpha)
                        .letters()
                        .iter()
                        .map(|l| (l.clone(), if l == a { hit.clone() } else { rest.clone() }))
                        .collect(),
                ))
            }
            _ => Err(ill()),
        },
        Term::Singleton(c) => match part {
            Functor::Powerset(f) => Ok(Struct::Set(vec![rec(f, c)?])),
            _ => Err(ill()),
        },
    }
}

/// Canonical structure of an arbitrary structured expression.
pub fn struct_to_term(s: &Struct<Expr>, opts: NormalizeOptions) -> StructTerm {
    match s {
        Struct::Set(xs) => {
            let mut ys: Vec<StructTerm> = xs.iter().map(|x| struct_to_term(x, opts)).collect();
            ys.sort();
            ys.dedup();
            Struct::Set(ys)
        }
        Struct::Leaf(e) => Struct::Leaf(Term::from_expr(e, opts)),
        Struct::Val(b) => Struct::Val(b.clone()),
        Struct::Bot => Struct::Bot,
        Struct::Top => Struct::Top,
        Struct::Pair(a, b) => Struct::pair(struct_to_term(a, opts), struct_to_term(b, opts)),
        Struct::Inj1(a) => Struct::inj1(struct_to_term(a, opts)),
        Struct::Inj2(a) => Struct::inj2(struct_to_term(a, opts)),
        Struct::Table(t) => Struct::Table(
            t.iter()
                .map(|(a, x)| (a.clone(), struct_to_term(x, opts)))
                .collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr_str;
    use crate::fixtures::*;
    use crate::semantics::delta;

    const ACI: NormalizeOptions = NormalizeOptions {
        unit: true,
        idempotence: true,
    };
    const AC: NormalizeOptions = NormalizeOptions {
        unit: true,
        idempotence: false,
    };

    #[test]
    fn multiplicities_without_idempotence() {
        let sig = streams();
        let e = parse_expr_str("mu x . r<x (+) x>", &sig).unwrap();
        let t = Term::from_expr(&e, AC);
        let d = delta_term(&sig, sig.functor(), &t, AC).unwrap();
        let Struct::Pair(_, leaf) = d else { panic!() };
        assert_eq!(
            *leaf,
            Struct::Leaf(Term::Sum(vec![(t.clone(), BigUint::from(2u8))]))
        );
        let d = delta_term(
            &sig,
            sig.functor(),
            &Term::Sum(vec![(t.clone(), BigUint::from(2u8))]),
            AC,
        )
        .unwrap();
        let Struct::Pair(_, leaf) = d else { panic!() };
        assert_eq!(
            *leaf,
            Struct::Leaf(Term::Sum(vec![(t, BigUint::from(4u8))]))
        );
    }

    #[test]
    fn agrees_with_expression_delta() {
        let sig = mealy();
        for src in [
            "mu x . a(l<0>) (+) a(r<x>) (+) b(l<1>) (+) b(r<x>)",
            "(mu x . a(r<x>)) (+) b(l<1>) (+) phi",
            "mu x . mu y . a(r<x>) (+) b(r<y>) (+) a(r<y>)",
        ] {
            let e = parse_expr_str(src, &sig).unwrap();
            for opts in [ACI, AC] {
                let want = struct_to_term(&delta(&sig, sig.functor(), &e).unwrap(), opts);
                let got =
                    delta_term(&sig, sig.functor(), &Term::from_expr(&e, opts), opts).unwrap();
                assert_eq!(got, want, "{src}");
            }
        }
    }

    #[test]
    fn round_trip_to_expressions() {
        let sig = streams();
        let e = parse_expr_str("mu q . r<q> (+) l<1> (+) r<q>", &sig).unwrap();
        let t = Term::from_expr(&e, ACI);
        assert_eq!(Term::from_expr(&t.to_expr(), ACI), t);
        assert_eq!(t.to_expr().to_string(), "mu x1 . l<1> (+) r<x1>");
        let t = Term::from_expr(&e, AC);
        assert_eq!(t.to_expr().to_string(), "mu x1 . l<1> (+) r<x1> (+) r<x1>");
    }
}
