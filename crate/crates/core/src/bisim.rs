//! Greatest bisimulation between finite coalgebras, with witnesses for
//! bisimilar states and distinguishing experiments for the others.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::expr::{check_expression, CheckError, Expr};
use crate::functor::Functor;
use crate::semantics::{NormalizeOptions, Struct, StructValue};
use crate::signature::Signature;
use crate::synth::{synthesize, Coalgebra, SynthError, SynthLimit};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BisimError {
    #[error("coalgebras are over different functors: {0} and {1}")]
    FunctorMismatch(Functor, Functor),
    #[error("structured values `{left}` and `{right}` do not both have type {part}")]
    IngredientMismatch {
        part: Functor,
        left: String,
        right: String,
    },
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// A set of state pairs, sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Relation {
    pairs: BTreeSet<(usize, usize)>,
}

impl Relation {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Relation {
        Relation {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn contains(&self, s: usize, t: usize) -> bool {
        self.pairs.contains(&(s, t))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }
}

fn shape_mismatch(part: &Functor, v1: &StructValue, v2: &StructValue) -> BisimError {
    BisimError::IngredientMismatch {
        part: part.clone(),
        left: v1.to_string(),
        right: v2.to_string(),
    }
}

fn lift_with(
    part: &Functor,
    rel: &dyn Fn(usize, usize) -> bool,
    v1: &StructValue,
    v2: &StructValue,
) -> Result<bool, BisimError> {
    use Struct::*;
    Ok(match (part, v1, v2) {
        (Functor::Identity, Leaf(s), Leaf(t)) => rel(*s, *t),
        (Functor::Constant(_), Val(a), Val(b)) => a == b,
        (Functor::Product(f1, f2), Pair(a1, b1), Pair(a2, b2)) => {
            lift_with(f1, rel, a1, a2)? && lift_with(f2, rel, b1, b2)?
        }
        (Functor::Sum(..), Bot, Bot) | (Functor::Sum(..), Top, Top) => true,
        (Functor::Sum(f1, _), Inj1(a), Inj1(b)) => lift_with(f1, rel, a, b)?,
        (Functor::Sum(_, f2), Inj2(a), Inj2(b)) => lift_with(f2, rel, a, b)?,
        (Functor::Sum(..), x, y) if is_sum_shape(x) && is_sum_shape(y) => false,
        (Functor::Exponent(f, _), Table(t1), Table(t2)) if same_letters(t1, t2) => {
            for ((_, a), (_, b)) in t1.iter().zip(t2) {
                if !lift_with(f, rel, a, b)? {
                    return Ok(false);
                }
            }
            true
        }
        (Functor::Powerset(f), Set(xs), Set(ys)) => {
            for x in xs {
                if !any_partner(f, rel, x, ys, false)? {
                    return Ok(false);
                }
            }
            for y in ys {
                if !any_partner(f, rel, y, xs, true)? {
                    return Ok(false);
                }
            }
            true
        }
        _ => return Err(shape_mismatch(part, v1, v2)),
    })
}

/// Whether `x` lifts with some element of `ys`; `flipped` puts `x` on the
/// right.
fn any_partner(
    f: &Functor,
    rel: &dyn Fn(usize, usize) -> bool,
    x: &StructValue,
    ys: &[StructValue],
    flipped: bool,
) -> Result<bool, BisimError> {
    for y in ys {
        let ok = if flipped {
            lift_with(f, rel, y, x)?
        } else {
            lift_with(f, rel, x, y)?
        };
        if ok {
            return Ok(true);
        }
    }
    Ok(false)
}

fn is_sum_shape<L>(s: &Struct<L>) -> bool {
    matches!(
        s,
        Struct::Bot | Struct::Top | Struct::Inj1(_) | Struct::Inj2(_)
    )
}

fn same_letters<L>(t1: &[(String, Struct<L>)], t2: &[(String, Struct<L>)]) -> bool {
    t1.len() == t2.len() && t1.iter().zip(t2).all(|((a, _), (b, _))| a == b)
}

/// Relation lifting of `r` along `part`: whether `(v1, v2)` is in `part(r)`.
pub fn lift_check(
    part: &Functor,
    r: &Relation,
    v1: &StructValue,
    v2: &StructValue,
) -> Result<bool, BisimError> {
    lift_with(part, &|s, t| r.contains(s, t), v1, v2)
}

/// The refinement history of the greatest-fixpoint computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gfp {
    n1: usize,
    n2: usize,
    /// Round (from 1) in which each pair was removed, `None` for survivors.
    removed: Vec<Option<usize>>,
    rounds: usize,
}

impl Gfp {
    pub fn related(&self, s: usize, t: usize) -> bool {
        self.removed[s * self.n2 + t].is_none()
    }

    pub fn removed_at(&self, s: usize, t: usize) -> Option<usize> {
        self.removed[s * self.n2 + t]
    }

    /// Whether the pair is still present after `round` refinement rounds.
    fn alive_after(&self, s: usize, t: usize, round: usize) -> bool {
        self.removed[s * self.n2 + t].is_none_or(|r| r > round)
    }

    /// Number of refinement rounds, counting the final one that removed
    /// nothing.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn relation(&self) -> Relation {
        Relation::new(
            (0..self.n1)
                .flat_map(|s| (0..self.n2).map(move |t| (s, t)))
                .filter(|&(s, t)| self.related(s, t)),
        )
    }
}

/// Decreasing fixpoint from the full relation: every round removes the
/// pairs whose structures do not lift the previous round's relation.
pub fn greatest_bisimulation(c1: &Coalgebra, c2: &Coalgebra) -> Result<Gfp, BisimError> {
    if c1.functor() != c2.functor() {
        return Err(BisimError::FunctorMismatch(
            c1.functor().clone(),
            c2.functor().clone(),
        ));
    }
    let g = c1.functor();
    let (n1, n2) = (c1.len(), c2.len());
    let mut gfp = Gfp {
        n1,
        n2,
        removed: vec![None; n1 * n2],
        rounds: 0,
    };
    loop {
        let round = gfp.rounds + 1;
        let mut dropped = Vec::new();
        for s in 0..n1 {
            for t in 0..n2 {
                if !gfp.related(s, t) {
                    continue;
                }
                let prev = |a: usize, b: usize| gfp.related(a, b);
                if !lift_with(g, &prev, c1.structure(s), c2.structure(t))? {
                    dropped.push(s * n2 + t);
                }
            }
        }
        gfp.rounds = round;
        if dropped.is_empty() {
            return Ok(gfp);
        }
        for i in dropped {
            gfp.removed[i] = Some(round);
        }
    }
}

// ---------------------------------------------------------------------------
// Experiments

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "step", rename_all = "lowercase")]
pub enum Step {
    Letter { letter: String },
    Fst,
    Snd,
    Inj,
    Pick { side: Side, index: usize },
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Letter { letter } => f.write_str(letter),
            Step::Fst => f.write_str("fst"),
            Step::Snd => f.write_str("snd"),
            Step::Inj => f.write_str("inj"),
            Step::Pick { side, index } => write!(f, "pick#{index} {side}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mismatch {
    /// Different semilattice elements.
    Lattice { left: String, right: String },
    /// Different tags at a sum position.
    SumShape { left: String, right: String },
    /// One set is empty and the other is not.
    SetEmptiness { empty: Side },
    /// The picked element is not related to any element of the other set.
    NoPartner,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::Lattice { left, right } => write!(f, "lattice {left} != {right}"),
            Mismatch::SumShape { left, right } => write!(f, "sum {left} != {right}"),
            Mismatch::SetEmptiness { empty } => write!(f, "{empty} set empty"),
            Mismatch::NoPartner => f.write_str("no partner"),
        }
    }
}

/// A path through both structures, passing implicitly from an `Id` position
/// to the structure of the state found there, ending in an observable
/// difference.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Experiment {
    pub steps: Vec<Step>,
    pub mismatch: Mismatch,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            write!(f, "{s} / ")?;
        }
        write!(f, "{}", self.mismatch)
    }
}

fn tag<L>(s: &Struct<L>) -> &'static str {
    match s {
        Struct::Bot => "bot",
        Struct::Top => "top",
        Struct::Inj1(_) => "k1",
        Struct::Inj2(_) => "k2",
        _ => "?",
    }
}

enum Failure {
    Done(Mismatch),
    /// Continue from a successor pair.
    Next(usize, usize),
}

/// Locates why `(v1, v2)` does not lift `rel`, appending navigation steps.
fn find_failure(
    part: &Functor,
    rel: &dyn Fn(usize, usize) -> bool,
    v1: &StructValue,
    v2: &StructValue,
    steps: &mut Vec<Step>,
) -> Result<Failure, BisimError> {
    use Struct::*;
    match (part, v1, v2) {
        (Functor::Identity, Leaf(s), Leaf(t)) => Ok(Failure::Next(*s, *t)),
        (Functor::Constant(_), Val(a), Val(b)) => Ok(Failure::Done(Mismatch::Lattice {
            left: a.clone(),
            right: b.clone(),
        })),
        (Functor::Product(f1, f2), Pair(a1, b1), Pair(a2, b2)) => {
            if !lift_with(f1, rel, a1, a2)? {
                steps.push(Step::Fst);
                find_failure(f1, rel, a1, a2, steps)
            } else {
                steps.push(Step::Snd);
                find_failure(f2, rel, b1, b2, steps)
            }
        }
        (Functor::Sum(f1, _), Inj1(a), Inj1(b)) => {
            steps.push(Step::Inj);
            find_failure(f1, rel, a, b, steps)
        }
        (Functor::Sum(_, f2), Inj2(a), Inj2(b)) => {
            steps.push(Step::Inj);
            find_failure(f2, rel, a, b, steps)
        }
        (Functor::Sum(..), x, y) => Ok(Failure::Done(Mismatch::SumShape {
            left: tag(x).into(),
            right: tag(y).into(),
        })),
        (Functor::Exponent(f, _), Table(t1), Table(t2)) => {
            for ((a, x), (_, y)) in t1.iter().zip(t2) {
                if !lift_with(f, rel, x, y)? {
                    steps.push(Step::Letter { letter: a.clone() });
                    return find_failure(f, rel, x, y, steps);
                }
            }
            Err(shape_mismatch(part, v1, v2))
        }
        (Functor::Powerset(f), Set(xs), Set(ys)) => {
            if xs.is_empty() != ys.is_empty() {
                let empty = if xs.is_empty() {
                    Side::Left
                } else {
                    Side::Right
                };
                return Ok(Failure::Done(Mismatch::SetEmptiness { empty }));
            }
            for (i, x) in xs.iter().enumerate() {
                if !any_partner(f, rel, x, ys, false)? {
                    steps.push(Step::Pick {
                        side: Side::Left,
                        index: i,
                    });
                    return Ok(Failure::Done(Mismatch::NoPartner));
                }
            }
            for (i, y) in ys.iter().enumerate() {
                if !any_partner(f, rel, y, xs, true)? {
                    steps.push(Step::Pick {
                        side: Side::Right,
                        index: i,
                    });
                    return Ok(Failure::Done(Mismatch::NoPartner));
                }
            }
            Err(shape_mismatch(part, v1, v2))
        }
        _ => Err(shape_mismatch(part, v1, v2)),
    }
}

/// Explains the removal of `(s, t)` by descending the failure that removed
/// it, one refinement round at a time.
pub fn extract_experiment(
    c1: &Coalgebra,
    c2: &Coalgebra,
    gfp: &Gfp,
    s: usize,
    t: usize,
) -> Result<Option<Experiment>, BisimError> {
    let g = c1.functor();
    let (mut s, mut t) = (s, t);
    let mut steps = Vec::new();
    loop {
        let Some(round) = gfp.removed_at(s, t) else {
            return Ok(None);
        };
        let prev = |a: usize, b: usize| gfp.alive_after(a, b, round - 1);
        match find_failure(g, &prev, c1.structure(s), c2.structure(t), &mut steps)? {
            Failure::Done(mismatch) => return Ok(Some(Experiment { steps, mismatch })),
            Failure::Next(a, b) => {
                debug_assert!(gfp.removed_at(a, b).is_some_and(|r| r < round));
                (s, t) = (a, b);
            }
        }
    }
}

/// Replays `exp` from `(s, t)` and reports whether it ends in the recorded
/// mismatch. Picks are checked against `rel`: the picked element must not
/// lift with any element of the other set.
pub fn replay(
    c1: &Coalgebra,
    c2: &Coalgebra,
    rel: &Relation,
    s: usize,
    t: usize,
    exp: &Experiment,
) -> Result<bool, BisimError> {
    let mut part = c1.functor().clone();
    let (mut v1, mut v2) = (c1.structure(s).clone(), c2.structure(t).clone());
    let mut steps = exp.steps.iter().peekable();
    loop {
        if let (Struct::Leaf(a), Struct::Leaf(b)) = (&v1, &v2) {
            part = c1.functor().clone();
            (v1, v2) = (c1.structure(*a).clone(), c2.structure(*b).clone());
            continue;
        }
        let Some(step) = steps.next() else { break };
        let next = match (step, &part, &v1, &v2) {
            (Step::Fst, Functor::Product(f, _), Struct::Pair(a, _), Struct::Pair(b, _))
            | (Step::Snd, Functor::Product(_, f), Struct::Pair(_, a), Struct::Pair(_, b))
            | (Step::Inj, Functor::Sum(f, _), Struct::Inj1(a), Struct::Inj1(b))
            | (Step::Inj, Functor::Sum(_, f), Struct::Inj2(a), Struct::Inj2(b)) => {
                Some(((**f).clone(), (**a).clone(), (**b).clone()))
            }
            (
                Step::Letter { letter },
                Functor::Exponent(f, _),
                Struct::Table(t1),
                Struct::Table(t2),
            ) => {
                let a = t1.iter().find(|(l, _)| l == letter);
                let b = t2.iter().find(|(l, _)| l == letter);
                match (a, b) {
                    (Some((_, a)), Some((_, b))) => Some(((**f).clone(), a.clone(), b.clone())),
                    _ => None,
                }
            }
            (
                Step::Pick { side, index },
                Functor::Powerset(f),
                Struct::Set(xs),
                Struct::Set(ys),
            ) => {
                let (mine, other) = if *side == Side::Left {
                    (xs, ys)
                } else {
                    (ys, xs)
                };
                let Some(x) = mine.get(*index) else {
                    return Ok(false);
                };
                let flipped = *side == Side::Right;
                let lonely = !any_partner(f, &|a, b| rel.contains(a, b), x, other, flipped)?;
                return Ok(lonely && steps.next().is_none() && exp.mismatch == Mismatch::NoPartner);
            }
            _ => None,
        };
        let Some((f, a, b)) = next else {
            return Ok(false);
        };
        (part, v1, v2) = (f, a, b);
    }
    Ok(match (&exp.mismatch, &part, &v1, &v2) {
        (
            Mismatch::Lattice { left, right },
            Functor::Constant(_),
            Struct::Val(a),
            Struct::Val(b),
        ) => a == left && b == right && a != b,
        (Mismatch::SumShape { left, right }, Functor::Sum(..), a, b) => {
            tag(a) == left && tag(b) == right && left != right
        }
        (
            Mismatch::SetEmptiness { empty },
            Functor::Powerset(_),
            Struct::Set(xs),
            Struct::Set(ys),
        ) => match empty {
            Side::Left => xs.is_empty() && !ys.is_empty(),
            Side::Right => ys.is_empty() && !xs.is_empty(),
        },
        _ => false,
    })
}

// ---------------------------------------------------------------------------
// Deciding

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Bisimilar(Relation),
    NotBisimilar(Experiment),
}

impl Verdict {
    pub fn is_bisimilar(&self) -> bool {
        matches!(self, Verdict::Bisimilar(_))
    }
}

/// Everything computed while deciding one pair of states.
#[derive(Clone, Debug)]
pub struct Decision {
    pub left: Coalgebra,
    pub right: Coalgebra,
    pub left_state: usize,
    pub right_state: usize,
    pub gfp: Gfp,
    pub verdict: Verdict,
}

/// Pairs related by `gfp` that are reachable from `(s, t)` through the
/// positions where the structures lift each other.
pub fn reachable_witness(
    c1: &Coalgebra,
    c2: &Coalgebra,
    gfp: &Gfp,
    s: usize,
    t: usize,
) -> Result<Relation, BisimError> {
    let g = c1.functor();
    let rel = |a: usize, b: usize| gfp.related(a, b);
    let mut seen = BTreeSet::from([(s, t)]);
    let mut queue = VecDeque::from([(s, t)]);
    while let Some((a, b)) = queue.pop_front() {
        let mut next = Vec::new();
        related_successors(g, &rel, c1.structure(a), c2.structure(b), &mut next)?;
        for p in next {
            if seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    Ok(Relation { pairs: seen })
}

fn related_successors(
    part: &Functor,
    rel: &dyn Fn(usize, usize) -> bool,
    v1: &StructValue,
    v2: &StructValue,
    out: &mut Vec<(usize, usize)>,
) -> Result<(), BisimError> {
    use Struct::*;
    match (part, v1, v2) {
        (Functor::Identity, Leaf(s), Leaf(t)) => out.push((*s, *t)),
        (Functor::Product(f1, f2), Pair(a1, b1), Pair(a2, b2)) => {
            related_successors(f1, rel, a1, a2, out)?;
            related_successors(f2, rel, b1, b2, out)?;
        }
        (Functor::Sum(f1, _), Inj1(a), Inj1(b)) | (Functor::Sum(_, f1), Inj2(a), Inj2(b)) => {
            related_successors(f1, rel, a, b, out)?
        }
        (Functor::Exponent(f, _), Table(t1), Table(t2)) => {
            for ((_, a), (_, b)) in t1.iter().zip(t2) {
                related_successors(f, rel, a, b, out)?;
            }
        }
        (Functor::Powerset(f), Set(xs), Set(ys)) => {
            for x in xs {
                for y in ys {
                    if lift_with(f, rel, x, y)? {
                        related_successors(f, rel, x, y, out)?;
                    }
                }
            }
        }
        _ => {}
    }
    Ok(())
}

/// Decides state `s` of `c1` against state `t` of `c2`.
pub fn decide_states(
    c1: Coalgebra,
    s: usize,
    c2: Coalgebra,
    t: usize,
) -> Result<Decision, BisimError> {
    let gfp = greatest_bisimulation(&c1, &c2)?;
    let verdict = if gfp.related(s, t) {
        Verdict::Bisimilar(reachable_witness(&c1, &c2, &gfp, s, t)?)
    } else {
        let exp =
            extract_experiment(&c1, &c2, &gfp, s, t)?.expect("removed pair has an experiment");
        Verdict::NotBisimilar(exp)
    };
    Ok(Decision {
        left: c1,
        right: c2,
        left_state: s,
        right_state: t,
        gfp,
        verdict,
    })
}

/// Certifies, synthesizes and compares two expressions.
pub fn decide(
    sig: &Signature,
    e1: &Expr,
    e2: &Expr,
    limit: SynthLimit,
    opts: NormalizeOptions,
) -> Result<Decision, BisimError> {
    let t1 = check_expression(sig, e1)?;
    let t2 = check_expression(sig, e2)?;
    let c1 = synthesize(sig, &t1, limit, opts)?;
    let c2 = synthesize(sig, &t2, limit, opts)?;
    decide_states(c1, 0, c2, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr_str;
    use crate::fixtures::*;

    fn run(sig: &Signature, a: &str, b: &str) -> Decision {
        let p = |s: &str| parse_expr_str(s, sig).unwrap();
        decide(
            sig,
            &p(a),
            &p(b),
            SynthLimit::default(),
            NormalizeOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn stream_pair_and_its_witness() {
        let sig = streams();
        let d = run(
            &sig,
            "mu x . r<x> (+) l<0>",
            "r<mu x . r<x> (+) l<0>> (+) l<0>",
        );
        let Verdict::Bisimilar(w) = &d.verdict else {
            panic!("{:?}", d.verdict)
        };
        assert_eq!(w.len(), 2);
        let e1 = &d.left.exprs().unwrap()[0];
        let pairs: Vec<(String, String)> = w
            .iter()
            .map(|(s, t)| (d.left.label(s).to_string(), d.right.label(t).to_string()))
            .collect();
        assert!(pairs.iter().all(|(l, _)| *l == e1.to_string()));
        assert!(pairs.iter().any(|(_, r)| *r == e1.to_string()));
        for (s, t) in w.iter() {
            assert!(lift_check(
                d.left.functor(),
                w,
                d.left.structure(s),
                d.right.structure(t)
            )
            .unwrap());
        }
    }

    #[test]
    fn heads_differ_at_the_root() {
        let sig = streams();
        let d = run(&sig, "l<0>", "l<1>");
        let Verdict::NotBisimilar(exp) = &d.verdict else {
            panic!()
        };
        assert_eq!(exp.steps, vec![Step::Fst]);
        assert_eq!(
            exp.mismatch,
            Mismatch::Lattice {
                left: "0".into(),
                right: "1".into()
            }
        );
        assert_eq!(exp.to_string(), "fst / lattice 0 != 1");
        assert!(replay(&d.left, &d.right, &d.gfp.relation(), 0, 0, exp).unwrap());
    }

    #[test]
    fn mealy_trivia() {
        let sig = mealy();
        assert!(run(&sig, "mu x . a(r<x>)", "phi").verdict.is_bisimilar());
        assert!(run(&sig, "mu x . a(r<x>) (+) b(r<x>)", "mu x . a(r<x>)")
            .verdict
            .is_bisimilar());
    }

    #[test]
    fn mealy_counterexample_is_minimal() {
        let sig = mealy();
        let d = run(
            &sig,
            "mu x . a(l<0>) (+) a(r<a(l<1>) (+) a(r<x>)>)",
            "a(l<0>) (+) a(r<a(r<mu x . a(r<x>) (+) a(l<0>)>) (+) a(l<1>)>)",
        );
        let Verdict::NotBisimilar(exp) = &d.verdict else {
            panic!()
        };
        assert!(replay(&d.left, &d.right, &d.gfp.relation(), 0, 0, exp).unwrap());
        assert_eq!(
            exp.to_string(),
            "a / snd / a / snd / a / snd / a / fst / lattice 1 != 0"
        );
    }

    #[test]
    fn deadlock_versus_action() {
        let sig = lts();
        let d = run(&sig, "r[phi]", "r[a({r[phi]})]");
        let Verdict::NotBisimilar(exp) = &d.verdict else {
            panic!()
        };
        assert_eq!(
            exp.steps,
            vec![Step::Inj, Step::Letter { letter: "a".into() }]
        );
        assert_eq!(exp.mismatch, Mismatch::SetEmptiness { empty: Side::Left });
        assert!(replay(&d.left, &d.right, &d.gfp.relation(), 0, 0, exp).unwrap());
        let d = run(&sig, "l[1]", "r[phi]");
        let Verdict::NotBisimilar(exp) = &d.verdict else {
            panic!()
        };
        assert_eq!(
            exp.mismatch,
            Mismatch::SumShape {
                left: "k1".into(),
                right: "k2".into()
            }
        );
    }

    #[test]
    fn powerset_pick() {
        let sig = lts();
        // a.(tick) + a.(dead) versus a.(tick)
        let d = run(&sig, "r[a({l[1]})] (+) r[a({r[phi]})]", "r[a({l[1]})]");
        let Verdict::NotBisimilar(exp) = &d.verdict else {
            panic!()
        };
        assert!(matches!(exp.steps.last(), Some(Step::Pick { .. })));
        assert_eq!(exp.mismatch, Mismatch::NoPartner);
        assert!(replay(&d.left, &d.right, &d.gfp.relation(), 0, 0, exp).unwrap());
    }

    #[test]
    fn lifting_examples() {
        let b = Functor::constant("B");
        let r = Relation::default();
        let v = |x: &str| Struct::<usize>::Val(x.into());
        assert!(lift_check(&b, &r, &v("1"), &v("1")).unwrap());
        assert!(!lift_check(&b, &r, &v("0"), &v("1")).unwrap());
        let sum = Functor::sum(b.clone(), b.clone());
        assert!(!lift_check(&sum, &r, &Struct::inj1(v("1")), &Struct::inj2(v("1"))).unwrap());
        let p = Functor::powerset(Functor::Identity);
        let rel = Relation::new([(0, 1), (0, 2)]);
        let u = Struct::Set(vec![Struct::Leaf(0)]);
        let w = Struct::Set(vec![Struct::Leaf(1), Struct::Leaf(2)]);
        assert!(lift_check(&p, &rel, &u, &w).unwrap());
        assert!(!lift_check(&p, &Relation::new([(0, 1)]), &u, &w).unwrap());
        assert!(lift_check(&b, &r, &v("1"), &Struct::Bot).is_err());
    }

    #[test]
    fn functor_mismatch() {
        let (s, m) = (streams(), mealy());
        let p = |sig: &Signature, src: &str| {
            let e = check_expression(sig, &parse_expr_str(src, sig).unwrap()).unwrap();
            synthesize(sig, &e, SynthLimit::default(), NormalizeOptions::default()).unwrap()
        };
        let err = greatest_bisimulation(&p(&s, "phi"), &p(&m, "phi")).unwrap_err();
        assert!(matches!(err, BisimError::FunctorMismatch(..)));
    }
}
