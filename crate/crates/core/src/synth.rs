//! Both directions of Kleene's theorem: the finite coalgebra generated by an
//! expression, and an expression denoting a state of a finite coalgebra.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::canon::{delta_term, Term};
use crate::expr::{check_expression, CheckError, Expr, TypedExpr};
use crate::functor::Functor;
use crate::semantics::{
    empty_struct, struct_well_typed, NormalizeOptions, SemanticsError, Struct, StructValue,
};
use crate::signature::Signature;

pub const DEFAULT_MAX_STATES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthLimit {
    max_states: usize,
}

impl SynthLimit {
    pub fn new(max_states: usize) -> Result<SynthLimit, SynthError> {
        if max_states == 0 {
            return Err(SynthError::InvalidLimit);
        }
        Ok(SynthLimit { max_states })
    }

    pub fn max_states(&self) -> usize {
        self.max_states
    }
}

impl Default for SynthLimit {
    fn default() -> Self {
        SynthLimit {
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("state limit of {0} exceeded during synthesis")]
    StateLimitExceeded(usize),
    #[error("the state limit must be at least 1")]
    InvalidLimit,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("invalid coalgebra: {0}")]
    InvalidCoalgebra(String),
    #[error("no state `{0}`")]
    UnknownState(String),
}

/// A finite coalgebra `(S, g)`. States are numbered from 0; synthesized
/// coalgebras also remember the canonical expression of every state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coalgebra {
    functor: Functor,
    labels: Vec<String>,
    exprs: Option<Vec<Expr>>,
    structure: Vec<StructValue>,
}

impl Coalgebra {
    /// A user-supplied coalgebra; checks totality, references and typing.
    pub fn new(
        sig: &Signature,
        labels: Vec<String>,
        structure: Vec<StructValue>,
    ) -> Result<Coalgebra, SynthError> {
        if labels.len() != structure.len() {
            return Err(SynthError::InvalidCoalgebra(format!(
                "{} states but {} structure entries",
                labels.len(),
                structure.len()
            )));
        }
        if labels.is_empty() {
            return Err(SynthError::InvalidCoalgebra("no states".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(SynthError::InvalidCoalgebra(format!(
                    "state `{l}` declared twice"
                )));
            }
        }
        let n = labels.len();
        for (l, v) in labels.iter().zip(&structure) {
            if !struct_well_typed(sig, sig.functor(), v, &|&s| s < n) {
                return Err(SynthError::InvalidCoalgebra(format!(
                    "structure of `{l}` is not of type {}",
                    sig.functor()
                )));
            }
        }
        Ok(Coalgebra {
            functor: sig.functor().clone(),
            labels,
            exprs: None,
            structure,
        })
    }

    pub fn functor(&self) -> &Functor {
        &self.functor
    }

    pub fn len(&self) -> usize {
        self.structure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structure.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, s: usize) -> &str {
        &self.labels[s]
    }

    /// Canonical expressions of the states of a synthesized coalgebra.
    pub fn exprs(&self) -> Option<&[Expr]> {
        self.exprs.as_deref()
    }

    pub fn structure(&self, s: usize) -> &StructValue {
        &self.structure[s]
    }

    pub fn state(&self, label: &str) -> Result<usize, SynthError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| SynthError::UnknownState(label.to_string()))
    }

    pub fn successors(&self, s: usize) -> Vec<usize> {
        self.structure[s].leaves().into_iter().copied().collect()
    }
}

/// The reachable part of the derivative coalgebra of `e`, states identified
/// modulo the axioms in `opts`. The initial state is 0.
pub fn synthesize(
    sig: &Signature,
    e: &TypedExpr,
    limit: SynthLimit,
    opts: NormalizeOptions,
) -> Result<Coalgebra, SynthError> {
    let g = sig.functor();
    let mut states = vec![Term::from_expr(e.expr(), opts)];
    let mut index: HashMap<Term, usize> = HashMap::from([(states[0].clone(), 0)]);
    let mut structure = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let d = delta_term(sig, g, &states[i], opts)?;
        let v = d.try_map_leaves(&mut |leaf| {
            if let Some(&j) = index.get(leaf) {
                return Ok(j);
            }
            if states.len() >= limit.max_states {
                return Err(SynthError::StateLimitExceeded(limit.max_states));
            }
            states.push(leaf.clone());
            index.insert(leaf.clone(), states.len() - 1);
            Ok(states.len() - 1)
        })?;
        structure.push(v);
        i += 1;
    }
    let exprs: Vec<Expr> = states.iter().map(Term::to_expr).collect();
    Ok(Coalgebra {
        functor: g.clone(),
        labels: exprs.iter().map(Expr::to_string).collect(),
        exprs: Some(exprs),
        structure,
    })
}

/// Reads a structured value back as an expression typed at `part`, with
/// state references resolved by `var_of`.
pub fn struct_value_to_expr(
    sig: &Signature,
    part: &Functor,
    v: &StructValue,
    var_of: &mut dyn FnMut(usize) -> Expr,
) -> Result<Expr, SynthError> {
    let ill = || SynthError::InvalidCoalgebra(format!("`{v}` is not of type {part}"));
    Ok(match (part, v) {
        (Functor::Identity, Struct::Leaf(s)) => var_of(*s),
        (Functor::Constant(_), Struct::Val(b)) => Expr::Elem(b.clone()),
        (Functor::Product(f1, f2), Struct::Pair(a, b)) => Expr::plus(
            Expr::left_angle(struct_value_to_expr(sig, f1, a, var_of)?),
            Expr::right_angle(struct_value_to_expr(sig, f2, b, var_of)?),
        ),
        (Functor::Sum(f1, _), Struct::Inj1(a)) => {
            Expr::left_bracket(struct_value_to_expr(sig, f1, a, var_of)?)
        }
        (Functor::Sum(_, f2), Struct::Inj2(a)) => {
            Expr::right_bracket(struct_value_to_expr(sig, f2, a, var_of)?)
        }
        (Functor::Sum(..), Struct::Bot) => Expr::Empty,
        (Functor::Sum(..), Struct::Top) => Expr::plus(
            Expr::left_bracket(Expr::Empty),
            Expr::right_bracket(Expr::Empty),
        ),
        (Functor::Exponent(f, _), Struct::Table(t)) => {
            let empty = empty_struct(sig, f);
            let mut items = Vec::new();
            for (a, x) in t {
                let is_empty = x.leaves().is_empty() && x.map_leaves(&mut |_| Expr::Empty) == empty;
                if !is_empty {
                    items.push(Expr::letter(
                        a.clone(),
                        struct_value_to_expr(sig, f, x, var_of)?,
                    ));
                }
            }
            Expr::sum_of(items)
        }
        (Functor::Powerset(f), Struct::Set(xs)) => Expr::sum_of(
            xs.iter()
                .map(|x| Ok(Expr::singleton(struct_value_to_expr(sig, f, x, var_of)?)))
                .collect::<Result<Vec<_>, SynthError>>()?,
        ),
        _ => return Err(ill()),
    })
}

fn state_var(s: usize) -> String {
    format!("x{}", s + 1)
}

/// A closed expression bisimilar to state `s`: every state `i` gets the
/// equation `x_i = g(i)`, and definitions are substituted depth-first from
/// `s`, a back-edge to a state on the current path becoming its variable.
pub fn to_expression(sig: &Signature, c: &Coalgebra, s: usize) -> Result<TypedExpr, SynthError> {
    if s >= c.len() {
        return Err(SynthError::UnknownState(s.to_string()));
    }
    if c.functor() != sig.functor() {
        return Err(SynthError::InvalidCoalgebra(format!(
            "coalgebra is over {}, not {}",
            c.functor(),
            sig.functor()
        )));
    }
    let e = build(sig, c, s, &mut Vec::new())?;
    Ok(check_expression(sig, &e)?)
}

fn build(
    sig: &Signature,
    c: &Coalgebra,
    i: usize,
    path: &mut Vec<usize>,
) -> Result<Expr, SynthError> {
    path.push(i);
    let body = if *sig.functor() == Functor::Identity {
        // Over the identity functor every state is bisimilar to every other
        // and a variable body would be unguarded.
        Ok(Expr::Empty)
    } else {
        let mut err = None;
        let body = struct_value_to_expr(sig, sig.functor(), c.structure(i), &mut |j| {
            if path.contains(&j) {
                Expr::Var(state_var(j))
            } else {
                build(sig, c, j, path).unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    Expr::Empty
                })
            }
        });
        match err {
            Some(e) => Err(e),
            None => body,
        }
    };
    path.pop();
    Ok(Expr::mu(state_var(i), body?))
}

// ---------------------------------------------------------------------------
// Emitters

fn render_value(v: &StructValue) -> String {
    v.map_leaves(&mut |s| format!("#{s}")).to_string()
}

#[derive(Serialize)]
struct CoalgebraJson<'a> {
    functor: String,
    initial: usize,
    states: &'a [String],
    structure: Vec<String>,
}

/// JSON rendering: state labels, and structures with leaves written `#i`.
pub fn to_json(c: &Coalgebra) -> String {
    let doc = CoalgebraJson {
        functor: c.functor().to_string(),
        initial: 0,
        states: c.labels(),
        structure: c.structure.iter().map(render_value).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("coalgebra JSON is serializable")
}

enum Observation {
    Edge(usize),
    Note(String),
}

fn observations(v: &StructValue, path: &mut Vec<String>, out: &mut Vec<(String, Observation)>) {
    let here = |path: &Vec<String>| path.join("/");
    match v {
        Struct::Leaf(s) => out.push((here(path), Observation::Edge(*s))),
        Struct::Val(b) => out.push((here(path), Observation::Note(b.clone()))),
        Struct::Bot => out.push((here(path), Observation::Note("bot".into()))),
        Struct::Top => out.push((here(path), Observation::Note("top".into()))),
        Struct::Pair(a, b) => {
            for (tag, x) in [("fst", a), ("snd", b)] {
                path.push(tag.into());
                observations(x, path, out);
                path.pop();
            }
        }
        Struct::Inj1(a) | Struct::Inj2(a) => {
            let tag = if matches!(v, Struct::Inj1(_)) {
                "k1"
            } else {
                "k2"
            };
            out.push((here(path), Observation::Note(tag.into())));
            path.push(tag.into());
            observations(a, path, out);
            path.pop();
        }
        Struct::Table(t) => {
            for (a, x) in t {
                path.push(a.clone());
                observations(x, path, out);
                path.pop();
            }
        }
        Struct::Set(xs) => {
            if xs.is_empty() {
                out.push((here(path), Observation::Note("{}".into())));
            }
            for x in xs {
                observations(x, path, out);
            }
        }
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: `Id` positions become labelled edges, constants and
/// sum tags become annotations on the state.
pub fn to_dot(c: &Coalgebra) -> String {
    let mut out =
        String::from("digraph coalgebra {\n  rankdir=LR;\n  init [shape=point];\n  init -> n0;\n");
    let mut edges = String::new();
    for i in 0..c.len() {
        let mut obs = Vec::new();
        observations(c.structure(i), &mut Vec::new(), &mut obs);
        let mut notes = Vec::new();
        for (path, o) in obs {
            match o {
                Observation::Edge(j) => {
                    let label = if path.is_empty() {
                        String::new()
                    } else {
                        format!(" [label=\"{}\"]", dot_escape(&path))
                    };
                    let _ = writeln!(edges, "  n{i} -> n{j}{label};");
                }
                Observation::Note(n) if path.is_empty() => notes.push(n),
                Observation::Note(n) => notes.push(format!("{path}={n}")),
            }
        }
        let mut label = format!("{i}: {}", c.label(i));
        if !notes.is_empty() {
            label.push_str("\\n");
            label.push_str(&notes.join(", "));
        }
        let _ = writeln!(
            out,
            "  n{i} [shape=box, label=\"{}\"];",
            dot_escape(&label).replace("\\\\n", "\\n")
        );
    }
    out.push_str(&edges);
    out.push_str("}\n");
    out
}
