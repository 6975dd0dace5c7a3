//! Structured expressions, the coalgebra map `delta` with its `Empty` and
//! `Plus` companions, and canonical forms modulo ACI.

use std::fmt;

use serde::Serialize;

use crate::canon::{struct_to_term, Term};
use crate::expr::{substitute, Expr};
use crate::functor::Functor;
use crate::signature::Signature;

/// An element of `F(X)` for an ingredient `F`, with `X`-leaves of type `L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Struct<L> {
    Val(String),
    Leaf(L),
    Pair(Box<Struct<L>>, Box<Struct<L>>),
    Inj1(Box<Struct<L>>),
    Inj2(Box<Struct<L>>),
    Bot,
    Top,
    /// One entry per letter, in alphabet order.
    Table(Vec<(String, Struct<L>)>),
    Set(Vec<Struct<L>>),
}

/// `F(Exp_G)`.
pub type StructExpr = Struct<Expr>;

/// `F(S)` for a coalgebra with states numbered from 0.
pub type StructValue = Struct<usize>;

impl<L> Struct<L> {
    pub fn pair(a: Struct<L>, b: Struct<L>) -> Struct<L> {
        Struct::Pair(Box::new(a), Box::new(b))
    }

    pub fn inj1(a: Struct<L>) -> Struct<L> {
        Struct::Inj1(Box::new(a))
    }

    pub fn inj2(a: Struct<L>) -> Struct<L> {
        Struct::Inj2(Box::new(a))
    }

    pub fn map_leaves<M>(&self, f: &mut impl FnMut(&L) -> M) -> Struct<M> {
        self.try_map_leaves::<M, std::convert::Infallible>(&mut |l| Ok(f(l)))
            .unwrap_or_else(|e| match e {})
    }

    pub fn try_map_leaves<M, E>(
        &self,
        f: &mut impl FnMut(&L) -> Result<M, E>,
    ) -> Result<Struct<M>, E> {
        Ok(match self {
            Struct::Val(b) => Struct::Val(b.clone()),
            Struct::Leaf(l) => Struct::Leaf(f(l)?),
            Struct::Pair(a, b) => Struct::pair(a.try_map_leaves(f)?, b.try_map_leaves(f)?),
            Struct::Inj1(a) => Struct::inj1(a.try_map_leaves(f)?),
            Struct::Inj2(a) => Struct::inj2(a.try_map_leaves(f)?),
            Struct::Bot => Struct::Bot,
            Struct::Top => Struct::Top,
            Struct::Table(t) => Struct::Table(
                t.iter()
                    .map(|(a, s)| Ok((a.clone(), s.try_map_leaves(f)?)))
                    .collect::<Result<_, E>>()?,
            ),
            Struct::Set(xs) => Struct::Set(
                xs.iter()
                    .map(|s| s.try_map_leaves(f))
                    .collect::<Result<_, E>>()?,
            ),
        })
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&L> {
        fn go<'a, L>(s: &'a Struct<L>, out: &mut Vec<&'a L>) {
            match s {
                Struct::Leaf(l) => out.push(l),
                Struct::Val(_) | Struct::Bot | Struct::Top => {}
                Struct::Pair(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Struct::Inj1(a) | Struct::Inj2(a) => go(a, out),
                Struct::Table(t) => t.iter().for_each(|(_, s)| go(s, out)),
                Struct::Set(xs) => xs.iter().for_each(|s| go(s, out)),
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }
}

impl<L: fmt::Display> fmt::Display for Struct<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Struct::Val(b) => f.write_str(b),
            Struct::Leaf(l) => write!(f, "{l}"),
            Struct::Pair(a, b) => write!(f, "<{a}, {b}>"),
            Struct::Inj1(a) => write!(f, "k1 {a}"),
            Struct::Inj2(a) => write!(f, "k2 {a}"),
            Struct::Bot => f.write_str("bot"),
            Struct::Top => f.write_str("top"),
            Struct::Table(t) => {
                f.write_str("[")?;
                for (i, (a, s)) in t.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{a} -> {s}")?;
                }
                f.write_str("]")
            }
            Struct::Set(xs) => {
                f.write_str("{")?;
                for (i, s) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error("structured values do not match ingredient {part}: {left} vs {right}")]
    IngredientMismatch {
        part: Functor,
        left: String,
        right: String,
    },
    #[error("`{subterm}` is not typed at {part}")]
    IllTyped { subterm: Expr, part: Functor },
    #[error("recursion unfolding did not terminate at `{0}`")]
    UnguardedRecursion(Expr),
}

/// `Empty` at ingredient `part` of the signature's functor.
pub fn empty_struct(sig: &Signature, part: &Functor) -> StructExpr {
    match part {
        Functor::Identity => Struct::Leaf(Expr::Empty),
        Functor::Constant(l) => Struct::Val(sig.lattice_of(l).bottom().to_string()),
        Functor::Product(a, b) => Struct::pair(empty_struct(sig, a), empty_struct(sig, b)),
        Functor::Sum(..) => Struct::Bot,
        Functor::Exponent(f, alpha) => {
            let e = empty_struct(sig, f);
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

/// `Plus` at ingredient `part`.
pub fn plus_struct(
    sig: &Signature,
    part: &Functor,
    s1: StructExpr,
    s2: StructExpr,
) -> Result<StructExpr, SemanticsError> {
    use Struct::*;
    Ok(match (part, s1, s2) {
        (Functor::Identity, Leaf(a), Leaf(b)) => Leaf(Expr::plus(a, b)),
        (Functor::Constant(l), Val(a), Val(b)) => {
            let lat = sig.lattice_of(l);
            match lat.join(&a, &b) {
                Ok(j) => Val(j.to_string()),
                Err(_) => return Err(mismatch(part, &Struct::Val(a), &Struct::Val(b))),
            }
        }
        (Functor::Product(f1, f2), Pair(a1, b1), Pair(a2, b2)) => Struct::pair(
            plus_struct(sig, f1, *a1, *a2)?,
            plus_struct(sig, f2, *b1, *b2)?,
        ),
        (Functor::Sum(..), Bot, s) | (Functor::Sum(..), s, Bot) if is_sum_shape(&s) => s,
        (Functor::Sum(..), Top, s) | (Functor::Sum(..), s, Top) if is_sum_shape(&s) => Top,
        (Functor::Sum(f1, _), Inj1(a), Inj1(b)) => Struct::inj1(plus_struct(sig, f1, *a, *b)?),
        (Functor::Sum(_, f2), Inj2(a), Inj2(b)) => Struct::inj2(plus_struct(sig, f2, *a, *b)?),
        (Functor::Sum(..), Inj1(_), Inj2(_)) | (Functor::Sum(..), Inj2(_), Inj1(_)) => Top,
        (Functor::Exponent(f, _), Table(t1), Table(t2))
            if t1.len() == t2.len() && t1.iter().zip(&t2).all(|((a, _), (b, _))| a == b) =>
        {
            Table(
                t1.into_iter()
                    .zip(t2)
                    .map(|((a, x), (_, y))| Ok((a, plus_struct(sig, f, x, y)?)))
                    .collect::<Result<_, SemanticsError>>()?,
            )
        }
        (Functor::Powerset(_), Set(mut xs), Set(ys)) => {
            for y in ys {
                if !xs.contains(&y) {
                    xs.push(y);
                }
            }
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

fn mismatch(part: &Functor, a: &StructExpr, b: &StructExpr) -> SemanticsError {
    SemanticsError::IngredientMismatch {
        part: part.clone(),
        left: a.to_string(),
        right: b.to_string(),
    }
}

/// `delta` at ingredient `part` of a closed expression typed there.
pub fn delta(sig: &Signature, part: &Functor, e: &Expr) -> Result<StructExpr, SemanticsError> {
    delta_fuel(sig, part, e, e.size())
}

fn delta_fuel(
    sig: &Signature,
    part: &Functor,
    e: &Expr,
    fuel: usize,
) -> Result<StructExpr, SemanticsError> {
    let g = sig.functor();
    let ill = || SemanticsError::IllTyped {
        subterm: e.clone(),
        part: part.clone(),
    };
    if *part == Functor::Identity && g != part {
        return Ok(Struct::Leaf(e.clone()));
    }
    match e {
        Expr::Empty => Ok(empty_struct(sig, part)),
        Expr::Plus(l, r) => {
            let a = delta_fuel(sig, part, l, fuel)?;
            let b = delta_fuel(sig, part, r, fuel)?;
            plus_struct(sig, part, a, b)
        }
        Expr::Mu(x, b) => {
            if part != g {
                return Err(ill());
            }
            if fuel == 0 {
                return Err(SemanticsError::UnguardedRecursion(e.clone()));
            }
            delta_fuel(sig, part, &substitute(b, x, e), fuel - 1)
        }
        Expr::Var(_) => Err(ill()),
        Expr::Elem(b) => match part {
            Functor::Constant(l) if sig.lattice_of(l).contains(b) => Ok(Struct::Val(b.clone())),
            _ => Err(ill()),
        },
        Expr::LeftAngle(c) => match part {
            Functor::Product(f1, f2) => Ok(Struct::pair(delta(sig, f1, c)?, empty_struct(sig, f2))),
            _ => Err(ill()),
        },
        Expr::RightAngle(c) => match part {
            Functor::Product(f1, f2) => Ok(Struct::pair(empty_struct(sig, f1), delta(sig, f2, c)?)),
            _ => Err(ill()),
        },
        Expr::LeftBracket(c) => match part {
            Functor::Sum(f1, _) => Ok(Struct::inj1(delta(sig, f1, c)?)),
            _ => Err(ill()),
        },
        Expr::RightBracket(c) => match part {
            Functor::Sum(_, f2) => Ok(Struct::inj2(delta(sig, f2, c)?)),
            _ => Err(ill()),
        },
        Expr::Letter(a, c) => match part {
            Functor::Exponent(f, alpha) if sig.alphabet_of(alpha).contains(a) => {
                let hit = delta(sig, f, c)?;
                let rest = empty_struct(sig, f);
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
        Expr::Singleton(c) => match part {
            Functor::Powerset(f) => Ok(Struct::Set(vec![delta(sig, f, c)?])),
            _ => Err(ill()),
        },
    }
}

// ---------------------------------------------------------------------------
// Canonical forms

/// Which of the optional `(+)` axioms normalization applies. Associativity
/// and commutativity are always on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// `e (+) phi = e`
    pub unit: bool,
    /// `e (+) e = e`
    pub idempotence: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            unit: true,
            idempotence: true,
        }
    }
}

pub fn aci_normalize(e: &Expr) -> Expr {
    aci_normalize_with(e, NormalizeOptions::default())
}

/// Flattens sums, orders summands canonically, applies the enabled axioms
/// and renames binders to `x1`, `x2`, ... in depth-first order. Sums come
/// out left-nested.
pub fn aci_normalize_with(e: &Expr, opts: NormalizeOptions) -> Expr {
    Term::from_expr(e, opts).to_expr()
}

pub fn struct_normalize(s: &StructExpr) -> StructExpr {
    struct_normalize_with(s, NormalizeOptions::default())
}

/// Normalizes every leaf; set elements are additionally sorted and
/// deduplicated.
pub fn struct_normalize_with(s: &StructExpr, opts: NormalizeOptions) -> StructExpr {
    struct_to_term(s, opts).map_leaves(&mut Term::to_expr)
}

/// Structural type check of a structured value at `part`; `leaf_ok` decides
/// the `Id` positions.
pub fn struct_well_typed<L>(
    sig: &Signature,
    part: &Functor,
    s: &Struct<L>,
    leaf_ok: &dyn Fn(&L) -> bool,
) -> bool {
    match (part, s) {
        (Functor::Identity, Struct::Leaf(l)) => leaf_ok(l),
        (Functor::Constant(b), Struct::Val(v)) => sig.lattice(b).is_some_and(|l| l.contains(v)),
        (Functor::Product(f1, f2), Struct::Pair(a, b)) => {
            struct_well_typed(sig, f1, a, leaf_ok) && struct_well_typed(sig, f2, b, leaf_ok)
        }
        (Functor::Sum(..), Struct::Bot | Struct::Top) => true,
        (Functor::Sum(f1, _), Struct::Inj1(a)) => struct_well_typed(sig, f1, a, leaf_ok),
        (Functor::Sum(_, f2), Struct::Inj2(a)) => struct_well_typed(sig, f2, a, leaf_ok),
        (Functor::Exponent(f, alpha), Struct::Table(t)) => sig.alphabet(alpha).is_some_and(|al| {
            al.letters().len() == t.len()
                && al
                    .letters()
                    .iter()
                    .zip(t)
                    .all(|(l, (a, x))| l == a && struct_well_typed(sig, f, x, leaf_ok))
        }),
        (Functor::Powerset(f), Struct::Set(xs)) => {
            xs.iter().all(|x| struct_well_typed(sig, f, x, leaf_ok))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{alpha_eq, parse_expr_str, typecheck};
    use crate::fixtures::*;

    fn leaf(e: Expr) -> StructExpr {
        Struct::Leaf(e)
    }

    #[test]
    fn empty_at_each_shape() {
        let sig = streams();
        assert_eq!(
            empty_struct(&sig, &Functor::constant("B")),
            Struct::Val("0".into())
        );
        assert_eq!(
            empty_struct(&sig, sig.functor()),
            Struct::pair(Struct::Val("0".into()), leaf(Expr::Empty))
        );
        let l = lts();
        let pid = Functor::powerset(Functor::Identity);
        assert_eq!(empty_struct(&l, &pid), Struct::Set(vec![]));
        // Agrees with delta on r[phi] at the inner position.
        let d = delta(&l, l.functor(), &parse_expr_str("r[phi]", &l).unwrap()).unwrap();
        assert_eq!(
            d,
            Struct::inj2(Struct::Table(vec![
                ("a".into(), Struct::Set(vec![])),
                ("b".into(), Struct::Set(vec![]))
            ]))
        );
    }

    #[test]
    fn plus_on_streams() {
        let sig = streams();
        let g = sig.functor().clone();
        let (e1, e2) = (Expr::var("y"), Expr::Empty);
        let s = plus_struct(
            &sig,
            &g,
            Struct::pair(Struct::Val("0".into()), leaf(e1.clone())),
            Struct::pair(Struct::Val("1".into()), leaf(e2.clone())),
        )
        .unwrap();
        assert_eq!(
            s,
            Struct::pair(Struct::Val("1".into()), leaf(Expr::plus(e1, e2)))
        );
    }

    #[test]
    fn plus_at_sums() {
        let sig = lts();
        let g = sig.functor().clone();
        let one = || Struct::inj1(Struct::Val("1".into()));
        assert_eq!(plus_struct(&sig, &g, Struct::Bot, one()).unwrap(), one());
        assert_eq!(plus_struct(&sig, &g, one(), Struct::Bot).unwrap(), one());
        assert_eq!(
            plus_struct(&sig, &g, Struct::Top, one()).unwrap(),
            Struct::Top
        );
        let r = delta(&sig, &g, &parse_expr_str("r[phi]", &sig).unwrap()).unwrap();
        assert_eq!(plus_struct(&sig, &g, one(), r).unwrap(), Struct::Top);
        let d = delta(&sig, &g, &parse_expr_str("l[1] (+) r[phi]", &sig).unwrap()).unwrap();
        assert_eq!(d, Struct::Top);
        assert!(plus_struct(&sig, &g, one(), Struct::Val("1".into())).is_err());
    }

    #[test]
    fn delta_examples() {
        let sig = streams();
        let g = sig.functor().clone();
        let p = |s: &str| parse_expr_str(s, &sig).unwrap();
        assert_eq!(
            delta(&sig, &g, &p("(mu x . r<x>) (+) l<1>")).unwrap(),
            Struct::pair(Struct::Val("1".into()), leaf(p("(mu x . r<x>) (+) phi")))
        );
        assert_eq!(
            delta(&sig, &g, &Expr::Empty).unwrap(),
            Struct::pair(Struct::Val("0".into()), leaf(Expr::Empty))
        );
        let e = p("mu x . r<x (+) x>");
        assert_eq!(
            delta(&sig, &g, &e).unwrap(),
            Struct::pair(
                Struct::Val("0".into()),
                leaf(Expr::plus(e.clone(), e.clone()))
            )
        );
        assert_eq!(
            delta(&sig, &Functor::constant("B"), &Expr::Empty).unwrap(),
            Struct::Val("0".into())
        );
    }

    #[test]
    fn delta_on_letters() {
        let sig = mealy();
        let g = sig.functor().clone();
        let d = delta(&sig, &g, &parse_expr_str("b(l<1>)", &sig).unwrap()).unwrap();
        let z = Struct::pair(Struct::Val("0".into()), leaf(Expr::Empty));
        assert_eq!(
            d,
            Struct::Table(vec![
                ("a".into(), z.clone()),
                (
                    "b".into(),
                    Struct::pair(Struct::Val("1".into()), leaf(Expr::Empty))
                )
            ])
        );
        assert!(struct_well_typed(&sig, &g, &d, &|e| typecheck(&sig, e, &g)));
    }

    #[test]
    fn normalization_axioms() {
        let sig = streams();
        let p = |s: &str| parse_expr_str(s, &sig).unwrap();
        let e = p("l<1>");
        assert_eq!(aci_normalize(&Expr::plus(e.clone(), e.clone())), e);
        assert_eq!(aci_normalize(&Expr::plus(e.clone(), Expr::Empty)), e);
        assert_eq!(
            aci_normalize(&Expr::plus(Expr::Empty, Expr::Empty)),
            Expr::Empty
        );
        let (a, b) = (p("l<0>"), p("l<1>"));
        let n = aci_normalize(&Expr::plus(Expr::plus(b.clone(), a.clone()), b.clone()));
        assert_eq!(n, aci_normalize(&Expr::plus(a.clone(), b.clone())));
        assert_eq!(n, aci_normalize(&Expr::plus(b, a)));
        let no_unit = NormalizeOptions {
            unit: false,
            idempotence: true,
        };
        assert_eq!(
            aci_normalize_with(&Expr::plus(e.clone(), Expr::Empty), no_unit).size(),
            4
        );
    }

    #[test]
    fn normalization_under_binders() {
        let sig = streams();
        let p = |s: &str| parse_expr_str(s, &sig).unwrap();
        let a = aci_normalize(&p("mu y . r<y> (+) l<1> (+) r<y>"));
        let b = aci_normalize(&p("mu z . l<1> (+) r<z>"));
        assert_eq!(a, b);
        assert_eq!(aci_normalize(&a), a);
        assert!(
            alpha_eq(&a, &p("mu q . r<q> (+) l<1>")) || alpha_eq(&a, &p("mu q . l<1> (+) r<q>"))
        );
    }

    #[test]
    fn struct_normalization() {
        let sig = lts();
        let e = parse_expr_str("r[phi]", &sig).unwrap();
        let s = Struct::Set(vec![
            leaf(Expr::plus(e.clone(), e.clone())),
            leaf(e.clone()),
        ]);
        assert_eq!(struct_normalize(&s), Struct::Set(vec![leaf(e.clone())]));
        let s = Struct::pair(
            Struct::Val("1".into()),
            leaf(Expr::plus(e.clone(), Expr::Empty)),
        );
        assert_eq!(
            struct_normalize(&s),
            Struct::pair(Struct::Val("1".into()), leaf(e))
        );
        assert_eq!(struct_normalize(&Struct::Bot), Struct::Bot);
    }

    #[test]
    fn rendering() {
        let s: Struct<String> = Struct::inj2(Struct::Table(vec![
            (
                "a".into(),
                Struct::Set(vec![Struct::Leaf("s1".into()), Struct::Leaf("s2".into())]),
            ),
            ("b".into(), Struct::Set(vec![])),
        ]));
        assert_eq!(s.to_string(), "k2 [a -> {s1, s2}; b -> {}]");
        let p: Struct<String> = Struct::pair(Struct::Val("1".into()), Struct::Leaf("s0".into()));
        assert_eq!(p.to_string(), "<1, s0>");
    }
}
