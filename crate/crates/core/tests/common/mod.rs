//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use coalg::cli::parse_spec;
use coalg::expr::{check_expression, Expr};
use coalg::functor::Functor;
use coalg::semantics::{Struct, StructValue};
use coalg::signature::Signature;
use coalg::synth::Coalgebra;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const TWO: &str =
    "semilattice B { elements 0 1 ; bottom 0 ; join 0 0 = 0 ; join 0 1 = 1 ; join 1 1 = 1 }\n";
const ONE: &str = "semilattice One { elements 1 ; bottom 1 ; join 1 1 = 1 }\n";
const AB: &str = "alphabet A { a b }\n";

fn signature(src: &str) -> Signature {
    parse_spec(src).expect("fixture signature parses").signature
}

/// `B x Id`
pub fn streams() -> Signature {
    signature(&format!("{TWO}functor R = B x Id"))
}

/// `(B x Id)^A`
pub fn mealy() -> Signature {
    signature(&format!("{TWO}{AB}functor M = (B x Id)^A"))
}

/// `B x Id^A`, deterministic automata.
pub fn automata() -> Signature {
    signature(&format!("{TWO}{AB}functor D = B x Id^A"))
}

/// `One + (P Id)^A`, labelled transition systems.
pub fn lts() -> Signature {
    signature(&format!("{ONE}{AB}functor L = One + (P Id)^A"))
}

pub fn families() -> Vec<(&'static str, Signature)> {
    vec![
        ("B x Id", streams()),
        ("(B x Id)^A", mealy()),
        ("B x Id^A", automata()),
        ("One + (P Id)^A", lts()),
    ]
}

// ---------------------------------------------------------------------------
// Random expressions

/// Generates closed guarded expressions typed at `G`. Variables only occur
/// at `G` positions below at least one constructor.
pub struct ExprGen<'a> {
    sig: &'a Signature,
    fresh: usize,
}

impl<'a> ExprGen<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        ExprGen { sig, fresh: 0 }
    }

    pub fn expr(&mut self, rng: &mut TestRng, depth: usize) -> Expr {
        self.fresh = 0;
        let g = self.sig.functor().clone();
        let e = self.at(rng, &g, depth, &mut Vec::new());
        debug_assert!(check_expression(self.sig, &e).is_ok(), "{e}");
        e
    }

    /// `env` holds variables in scope, with whether they are guarded here.
    fn at(
        &mut self,
        rng: &mut TestRng,
        part: &Functor,
        depth: usize,
        env: &mut Vec<(String, bool)>,
    ) -> Expr {
        let g = self.sig.functor().clone();
        let top = *part == g;
        let guarded: Vec<String> = env
            .iter()
            .filter(|(_, ok)| *ok)
            .map(|(x, _)| x.clone())
            .collect();
        if depth == 0 {
            if top && !guarded.is_empty() && rng.gen_bool(0.7) {
                return Expr::var(guarded.choose(rng).unwrap().clone());
            }
            return self.leaf(rng, part, env);
        }
        let roll = rng.gen_range(0..12);
        match roll {
            0 => Expr::Empty,
            1..=3 => {
                let l = self.at(rng, part, depth - 1, env);
                let r = self.at(rng, part, depth - 1, env);
                Expr::plus(l, r)
            }
            4 | 5 if top => {
                self.fresh += 1;
                let x = format!("v{}", self.fresh);
                // Every variable must be guarded again below the new binder.
                let mut inner: Vec<(String, bool)> =
                    env.iter().map(|(y, _)| (y.clone(), false)).collect();
                inner.push((x.clone(), false));
                Expr::mu(x, self.at(rng, part, depth - 1, &mut inner))
            }
            6 if top && !guarded.is_empty() => Expr::var(guarded.choose(rng).unwrap().clone()),
            _ => self.constructor(rng, part, depth - 1, env),
        }
    }

    /// A small expression without recursion.
    fn leaf(&mut self, rng: &mut TestRng, part: &Functor, env: &[(String, bool)]) -> Expr {
        match part {
            Functor::Constant(b) => {
                let elems = self.sig.lattice(b).unwrap().elements().to_vec();
                Expr::elem(elems.choose(rng).unwrap().clone())
            }
            _ if rng.gen_bool(0.5) => Expr::Empty,
            Functor::Identity => Expr::Empty,
            _ => self.constructor(rng, part, 0, env),
        }
    }

    fn constructor(
        &mut self,
        rng: &mut TestRng,
        part: &Functor,
        depth: usize,
        env: &[(String, bool)],
    ) -> Expr {
        let mut inner: Vec<(String, bool)> = env.iter().map(|(x, _)| (x.clone(), true)).collect();
        let e = match part {
            Functor::Identity => {
                let g = self.sig.functor().clone();
                self.at(rng, &g, depth, &mut inner)
            }
            Functor::Constant(_) => self.leaf(rng, part, &inner),
            Functor::Product(l, r) => {
                if rng.gen_bool(0.5) {
                    Expr::left_angle(self.at(rng, l, depth, &mut inner))
                } else {
                    Expr::right_angle(self.at(rng, r, depth, &mut inner))
                }
            }
            Functor::Sum(l, r) => {
                if rng.gen_bool(0.4) {
                    Expr::left_bracket(self.at(rng, l, depth, &mut inner))
                } else {
                    Expr::right_bracket(self.at(rng, r, depth, &mut inner))
                }
            }
            Functor::Exponent(f, alpha) => {
                let letters = self.sig.alphabet(alpha).unwrap().letters().to_vec();
                let a = letters.choose(rng).unwrap().clone();
                Expr::letter(a, self.at(rng, f, depth, &mut inner))
            }
            Functor::Powerset(f) => Expr::singleton(self.at(rng, f, depth, &mut inner)),
        };
        e
    }
}

/// `count` distinct certified expressions for `sig`.
pub fn corpus(sig: &Signature, seed: u64, count: usize, depth: usize) -> Vec<Expr> {
    let mut rng = rng(seed);
    let mut gen = ExprGen::new(sig);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < count * 50 {
        attempts += 1;
        let e = gen.expr(&mut rng, depth);
        check_expression(sig, &e).unwrap_or_else(|err| panic!("generator produced `{e}`: {err}"));
        if seen.insert(e.to_string()) {
            out.push(e);
        }
    }
    assert_eq!(
        out.len(),
        count,
        "generator could not produce enough distinct expressions"
    );
    out
}

// ---------------------------------------------------------------------------
// Random coalgebras

pub fn random_value(rng: &mut TestRng, sig: &Signature, part: &Functor, n: usize) -> StructValue {
    match part {
        Functor::Identity => Struct::Leaf(rng.gen_range(0..n)),
        Functor::Constant(b) => Struct::Val(
            sig.lattice(b)
                .unwrap()
                .elements()
                .choose(rng)
                .unwrap()
                .clone(),
        ),
        Functor::Product(l, r) => {
            Struct::pair(random_value(rng, sig, l, n), random_value(rng, sig, r, n))
        }
        Functor::Sum(l, r) => match rng.gen_range(0..8) {
            0 => Struct::Bot,
            1 => Struct::Top,
            2 | 3 => Struct::inj1(random_value(rng, sig, l, n)),
            _ => Struct::inj2(random_value(rng, sig, r, n)),
        },
        Functor::Exponent(f, alpha) => Struct::Table(
            sig.alphabet(alpha)
                .unwrap()
                .letters()
                .iter()
                .map(|a| (a.clone(), random_value(rng, sig, f, n)))
                .collect(),
        ),
        Functor::Powerset(f) => {
            let k = rng.gen_range(0..3);
            let mut xs: Vec<StructValue> = (0..k).map(|_| random_value(rng, sig, f, n)).collect();
            xs.sort();
            xs.dedup();
            Struct::Set(xs)
        }
    }
}

pub fn random_coalgebra(rng: &mut TestRng, sig: &Signature, n: usize) -> Coalgebra {
    let structure = (0..n)
        .map(|_| random_value(rng, sig, sig.functor(), n))
        .collect();
    Coalgebra::new(sig, (0..n).map(|i| format!("s{i}")).collect(), structure).unwrap()
}

/// A copy of `c` with states renamed by a random permutation, so that
/// state `p[i]` of the copy behaves like state `i` of `c`.
pub fn permuted(rng: &mut TestRng, sig: &Signature, c: &Coalgebra) -> (Coalgebra, Vec<usize>) {
    let n = c.len();
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    let mut structure = vec![Struct::Bot; n];
    for i in 0..n {
        structure[p[i]] = canonical_sets(c.structure(i).map_leaves(&mut |&s| p[s]));
    }
    let copy = Coalgebra::new(sig, (0..n).map(|i| format!("t{i}")).collect(), structure).unwrap();
    (copy, p)
}

fn canonical_sets(v: StructValue) -> StructValue {
    match v {
        Struct::Set(xs) => {
            let mut xs: Vec<_> = xs.into_iter().map(canonical_sets).collect();
            xs.sort();
            xs.dedup();
            Struct::Set(xs)
        }
        Struct::Pair(a, b) => Struct::pair(canonical_sets(*a), canonical_sets(*b)),
        Struct::Inj1(a) => Struct::inj1(canonical_sets(*a)),
        Struct::Inj2(a) => Struct::inj2(canonical_sets(*a)),
        Struct::Table(t) => {
            Struct::Table(t.into_iter().map(|(a, x)| (a, canonical_sets(x))).collect())
        }
        other => other,
    }
}

// ---------------------------------------------------------------------------
// Relation lifting, written out from its definition

pub fn lifts(rel: &BTreeSet<(usize, usize)>, v1: &StructValue, v2: &StructValue) -> bool {
    use Struct::*;
    match (v1, v2) {
        (Leaf(s), Leaf(t)) => rel.contains(&(*s, *t)),
        (Val(a), Val(b)) => a == b,
        (Pair(a1, b1), Pair(a2, b2)) => lifts(rel, a1, a2) && lifts(rel, b1, b2),
        (Bot, Bot) | (Top, Top) => true,
        (Inj1(a), Inj1(b)) | (Inj2(a), Inj2(b)) => lifts(rel, a, b),
        (Table(t1), Table(t2)) => {
            t1.len() == t2.len()
                && t1
                    .iter()
                    .zip(t2)
                    .all(|((a, x), (b, y))| a == b && lifts(rel, x, y))
        }
        // Egli-Milner: every element on either side has a related partner.
        (Set(xs), Set(ys)) => {
            xs.iter().all(|x| ys.iter().any(|y| lifts(rel, x, y)))
                && ys.iter().all(|y| xs.iter().any(|x| lifts(rel, x, y)))
        }
        _ => false,
    }
}

pub fn is_bisimulation(c1: &Coalgebra, c2: &Coalgebra, rel: &BTreeSet<(usize, usize)>) -> bool {
    rel.iter()
        .all(|&(s, t)| lifts(rel, c1.structure(s), c2.structure(t)))
}

/// The largest bisimulation, as the union of all subsets of `S1 x S2`
/// that are bisimulations.
pub fn exhaustive_greatest(c1: &Coalgebra, c2: &Coalgebra) -> BTreeSet<(usize, usize)> {
    let pairs: Vec<(usize, usize)> = (0..c1.len())
        .flat_map(|s| (0..c2.len()).map(move |t| (s, t)))
        .collect();
    assert!(
        pairs.len() <= 16,
        "exhaustive search is limited to 16 pairs"
    );
    let mut union = BTreeSet::new();
    for mask in 0u32..(1 << pairs.len()) {
        let rel: BTreeSet<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &p)| p)
            .collect();
        if is_bisimulation(c1, c2, &rel) {
            union.extend(rel);
        }
    }
    union
}

// ---------------------------------------------------------------------------
// Word oracles

fn stream_step(c: &Coalgebra, s: usize) -> (String, usize) {
    match c.structure(s) {
        Struct::Pair(o, n) => match (&**o, &**n) {
            (Struct::Val(b), Struct::Leaf(t)) => (b.clone(), *t),
            _ => panic!("not a stream structure"),
        },
        _ => panic!("not a stream structure"),
    }
}

/// The first `len` outputs of a stream state.
pub fn stream_prefix(c: &Coalgebra, mut s: usize, len: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let (b, t) = stream_step(c, s);
        out.push(b);
        s = t;
    }
    out
}

fn mealy_step(c: &Coalgebra, s: usize, letter: &str) -> (String, usize) {
    let Struct::Table(t) = c.structure(s) else {
        panic!("not a Mealy structure")
    };
    let (_, v) = t.iter().find(|(a, _)| a == letter).expect("total table");
    stream_step_value(v)
}

fn stream_step_value(v: &StructValue) -> (String, usize) {
    match v {
        Struct::Pair(o, n) => match (&**o, &**n) {
            (Struct::Val(b), Struct::Leaf(t)) => (b.clone(), *t),
            _ => panic!("not a Mealy entry"),
        },
        _ => panic!("not a Mealy entry"),
    }
}

/// The output of a Mealy state on the last letter of a non-empty word.
pub fn mealy_output(c: &Coalgebra, mut s: usize, word: &[String]) -> String {
    let mut out = String::new();
    for a in word {
        let (b, t) = mealy_step(c, s, a);
        out = b;
        s = t;
    }
    out
}

/// All words over `letters` of length 1 through `max_len`, shortest first.
pub fn words(letters: &[String], max_len: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                letters
                    .iter()
                    .map(move |a| w.iter().cloned().chain([a.clone()]).collect::<Vec<_>>())
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Length of the shortest word on which the two Mealy states give different
/// outputs, enumerating words up to `max_len`.
pub fn shortest_distinguishing_word(
    c1: &Coalgebra,
    s: usize,
    c2: &Coalgebra,
    t: usize,
    letters: &[String],
    max_len: usize,
) -> Option<usize> {
    words(letters, max_len)
        .into_iter()
        .find(|w| mealy_output(c1, s, w) != mealy_output(c2, t, w))
        .map(|w| w.len())
}
