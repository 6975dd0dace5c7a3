//! The declarative spec file: constants, one functor, named expressions,
//! processes and coalgebras, and an ordered list of goals. Declarations may
//! appear in any order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ccs::{parse_process, proc_free_vars, substitute_proc, translate, Proc};
use crate::expr::{check_expression, free_vars, parse_expr, substitute, Expr};
use crate::functor::{parse_functor, Functor};
use crate::lattice::{Alphabet, LatticeDecl, SemiLattice};
use crate::lexer::{tokenize, Cursor, ParseError, Pos, Tok, Token};
use crate::semantics::{Struct, StructValue};
use crate::signature::{Constants, ExprScope, Signature};
use crate::synth::Coalgebra;

/// The rule a rejected spec file violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Syntax,
    Semilattice,
    Alphabet,
    Functor,
    Expression,
    Process,
    Coalgebra,
    Goal,
    DuplicateName,
    UnresolvedName,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Syntax => "syntax",
            Rule::Semilattice => "semilattice",
            Rule::Alphabet => "alphabet",
            Rule::Functor => "functor",
            Rule::Expression => "expression",
            Rule::Process => "process",
            Rule::Coalgebra => "coalgebra",
            Rule::Goal => "goal",
            Rule::DuplicateName => "duplicate-name",
            Rule::UnresolvedName => "unresolved-name",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: [{rule}] {message}")]
pub struct SpecError {
    pub pos: Pos,
    pub rule: Rule,
    pub message: String,
}

impl SpecError {
    fn new(pos: Pos, rule: Rule, message: impl fmt::Display) -> SpecError {
        SpecError {
            pos,
            rule,
            message: message.to_string(),
        }
    }

    fn parse(rule: Rule, e: ParseError) -> SpecError {
        SpecError {
            pos: e.pos,
            rule,
            message: e.message,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NamedExpr {
    pub name: String,
    pub pos: Pos,
    pub expr: Expr,
}

#[derive(Clone, Debug)]
pub struct NamedProcess {
    pub name: String,
    pub pos: Pos,
    /// The process with every referenced process name inlined.
    pub process: Proc,
    pub translation: Expr,
}

#[derive(Clone, Debug)]
pub struct NamedCoalgebra {
    pub name: String,
    pub pos: Pos,
    pub coalgebra: Coalgebra,
}

#[derive(Clone, Debug)]
pub struct Goal {
    pub label: String,
    pub pos: Pos,
    pub lhs: Expr,
    pub rhs: Expr,
}

#[derive(Clone, Debug)]
pub struct SpecFile {
    pub signature: Signature,
    pub functor_name: String,
    pub exprs: Vec<NamedExpr>,
    pub processes: Vec<NamedProcess>,
    pub coalgebras: Vec<NamedCoalgebra>,
    pub goals: Vec<Goal>,
}

impl SpecFile {
    pub fn expr(&self, name: &str) -> Option<&NamedExpr> {
        self.exprs.iter().find(|e| e.name == name)
    }

    pub fn process(&self, name: &str) -> Option<&NamedProcess> {
        self.processes.iter().find(|p| p.name == name)
    }

    pub fn coalgebra(&self, name: &str) -> Option<&NamedCoalgebra> {
        self.coalgebras.iter().find(|c| c.name == name)
    }
}

const DECL_KEYWORDS: [&str; 7] = [
    "semilattice",
    "alphabet",
    "functor",
    "expr",
    "process",
    "coalgebra",
    "goal",
];

pub fn is_decl_keyword(word: &str) -> bool {
    DECL_KEYWORDS.contains(&word)
}

/// One top-level declaration: its keyword, and a cursor over its tokens
/// after the keyword.
struct Chunk {
    keyword: String,
    pos: Pos,
    cur: Cursor,
}

/// Splits the token stream at declaration keywords outside any bracket,
/// dropping trailing `;`.
fn chunks(toks: Vec<Token>) -> Result<Vec<Chunk>, SpecError> {
    let mut out: Vec<(String, Pos, Vec<Token>)> = Vec::new();
    let mut depth = 0usize;
    for t in toks {
        match &t.tok {
            Tok::Eof => {
                if let Some(last) = out.last_mut() {
                    last.2.push(t.clone());
                }
                break;
            }
            Tok::Ident(w) if depth == 0 && is_decl_keyword(w) => {
                if let Some(last) = out.last_mut() {
                    last.2.push(Token {
                        tok: Tok::Eof,
                        pos: t.pos,
                    });
                }
                out.push((w.clone(), t.pos, Vec::new()));
                continue;
            }
            Tok::LParen | Tok::LBracket | Tok::LBrace => depth += 1,
            Tok::RParen | Tok::RBracket | Tok::RBrace => depth = depth.saturating_sub(1),
            _ => {}
        }
        match out.last_mut() {
            Some(last) => last.2.push(t),
            None => {
                return Err(SpecError::new(
                    t.pos,
                    Rule::Syntax,
                    format!("expected a declaration, found {}", t.tok),
                ))
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|(keyword, pos, mut toks)| {
            let eof = toks.pop().expect("chunk ends with end of input");
            while toks.last().is_some_and(|t| t.tok == Tok::Semi) {
                toks.pop();
            }
            toks.push(eof);
            Chunk {
                keyword,
                pos,
                cur: Cursor::new(toks),
            }
        })
        .collect())
}

fn syntax(e: ParseError) -> SpecError {
    SpecError::parse(Rule::Syntax, e)
}

fn parse_semilattice(cur: &mut Cursor) -> Result<LatticeDecl, ParseError> {
    let (name, _) = cur.expect_ident()?;
    cur.expect(&Tok::LBrace)?;
    let mut decl = LatticeDecl {
        name,
        elements: Vec::new(),
        bottom: String::new(),
        joins: Vec::new(),
    };
    let mut bottom = None;
    while !cur.eat(&Tok::RBrace) {
        if cur.eat(&Tok::Semi) {
            continue;
        }
        if cur.eat_ident("elements") {
            while let Tok::Ident(_) = cur.peek() {
                decl.elements.push(cur.expect_ident()?.0);
                cur.eat(&Tok::Comma);
            }
        } else if cur.eat_ident("bottom") {
            bottom = Some(cur.expect_ident()?.0);
        } else if cur.eat_ident("join") {
            let (a, _) = cur.expect_ident()?;
            let (b, _) = cur.expect_ident()?;
            cur.expect(&Tok::Eq)?;
            let (c, _) = cur.expect_ident()?;
            decl.joins.push((a, b, c));
        } else {
            return Err(cur.unexpected("`elements`, `bottom`, `join` or `}`"));
        }
        if !matches!(cur.peek(), Tok::RBrace) {
            cur.expect(&Tok::Semi)?;
        }
    }
    cur.expect_eof()?;
    decl.bottom = bottom.ok_or_else(|| {
        ParseError::new(
            cur.pos(),
            format!("semilattice `{}` has no bottom", decl.name),
        )
    })?;
    Ok(decl)
}

fn parse_alphabet(cur: &mut Cursor) -> Result<(String, Vec<String>), ParseError> {
    let (name, _) = cur.expect_ident()?;
    cur.expect(&Tok::LBrace)?;
    let mut letters = Vec::new();
    while !cur.eat(&Tok::RBrace) {
        letters.push(cur.expect_ident()?.0);
        if !cur.eat(&Tok::Comma) {
            cur.eat(&Tok::Semi);
        }
    }
    cur.expect_eof()?;
    Ok((name, letters))
}

/// `NAME =`, returning the name and its position.
fn parse_binding_head(cur: &mut Cursor) -> Result<(String, Pos), ParseError> {
    let head = cur.expect_ident()?;
    cur.expect(&Tok::Eq)?;
    Ok(head)
}

/// A structured value before its type is known.
#[derive(Clone, Debug)]
enum RawValue {
    Name(String, Pos),
    Pair(Box<RawValue>, Box<RawValue>, Pos),
    K1(Box<RawValue>, Pos),
    K2(Box<RawValue>, Pos),
    Bot(Pos),
    Top(Pos),
    Set(Vec<RawValue>, Pos),
    Table(Vec<(String, Pos, RawValue)>, Pos),
}

impl RawValue {
    fn pos(&self) -> Pos {
        match self {
            RawValue::Name(_, p)
            | RawValue::Pair(_, _, p)
            | RawValue::K1(_, p)
            | RawValue::K2(_, p)
            | RawValue::Bot(p)
            | RawValue::Top(p)
            | RawValue::Set(_, p)
            | RawValue::Table(_, p) => *p,
        }
    }
}

fn parse_value(cur: &mut Cursor) -> Result<RawValue, ParseError> {
    let pos = cur.pos();
    if cur.eat(&Tok::LAngle) {
        let a = parse_value(cur)?;
        cur.expect(&Tok::Comma)?;
        let b = parse_value(cur)?;
        cur.expect(&Tok::RAngle)?;
        return Ok(RawValue::Pair(Box::new(a), Box::new(b), pos));
    }
    if cur.eat(&Tok::LBrace) {
        let mut xs = Vec::new();
        if !cur.eat(&Tok::RBrace) {
            loop {
                xs.push(parse_value(cur)?);
                if cur.eat(&Tok::RBrace) {
                    break;
                }
                cur.expect(&Tok::Comma)?;
            }
        }
        return Ok(RawValue::Set(xs, pos));
    }
    if cur.eat(&Tok::LBracket) {
        let mut entries = Vec::new();
        loop {
            let (a, apos) = cur.expect_ident()?;
            cur.expect(&Tok::Arrow)?;
            entries.push((a, apos, parse_value(cur)?));
            if cur.eat(&Tok::RBracket) {
                break;
            }
            cur.expect(&Tok::Semi)?;
        }
        return Ok(RawValue::Table(entries, pos));
    }
    if cur.eat(&Tok::LParen) {
        let v = parse_value(cur)?;
        cur.expect(&Tok::RParen)?;
        return Ok(v);
    }
    let (name, _) = cur
        .expect_ident()
        .map_err(|_| cur.unexpected("a structured value"))?;
    Ok(match name.as_str() {
        "bot" => RawValue::Bot(pos),
        "top" => RawValue::Top(pos),
        "k1" => RawValue::K1(Box::new(parse_value(cur)?), pos),
        "k2" => RawValue::K2(Box::new(parse_value(cur)?), pos),
        _ => RawValue::Name(name, pos),
    })
}

/// Resolves a raw value against the ingredient `part`.
fn resolve_value(
    sig: &Signature,
    part: &Functor,
    v: &RawValue,
    states: &[String],
) -> Result<StructValue, SpecError> {
    let bad = |what: &str| {
        SpecError::new(
            v.pos(),
            Rule::Coalgebra,
            format!("expected {what} for type {part}"),
        )
    };
    match (part, v) {
        (Functor::Identity, RawValue::Name(n, pos)) => match states.iter().position(|s| s == n) {
            Some(i) => Ok(Struct::Leaf(i)),
            None => Err(SpecError::new(
                *pos,
                Rule::UnresolvedName,
                format!("no state `{n}`"),
            )),
        },
        (Functor::Identity, _) => Err(bad("a state")),
        (Functor::Constant(b), RawValue::Name(n, pos)) => {
            let lattice = sig.lattice(b).expect("functor constants are declared");
            if lattice.contains(n) {
                Ok(Struct::Val(n.clone()))
            } else {
                Err(SpecError::new(
                    *pos,
                    Rule::Coalgebra,
                    format!("`{n}` is not an element of semilattice `{b}`"),
                ))
            }
        }
        (Functor::Constant(b), _) => Err(bad(&format!("an element of `{b}`"))),
        (Functor::Product(f1, f2), RawValue::Pair(a, b, _)) => Ok(Struct::pair(
            resolve_value(sig, f1, a, states)?,
            resolve_value(sig, f2, b, states)?,
        )),
        (Functor::Product(..), _) => Err(bad("a pair `<u, w>`")),
        (Functor::Sum(..), RawValue::Bot(_)) => Ok(Struct::Bot),
        (Functor::Sum(..), RawValue::Top(_)) => Ok(Struct::Top),
        (Functor::Sum(f1, _), RawValue::K1(a, _)) => {
            Ok(Struct::inj1(resolve_value(sig, f1, a, states)?))
        }
        (Functor::Sum(_, f2), RawValue::K2(a, _)) => {
            Ok(Struct::inj2(resolve_value(sig, f2, a, states)?))
        }
        (Functor::Sum(..), _) => Err(bad("`k1 u`, `k2 u`, `bot` or `top`")),
        (Functor::Exponent(f, alpha), RawValue::Table(entries, pos)) => {
            let alphabet = sig.alphabet(alpha).expect("functor alphabets are declared");
            for (i, (a, apos, _)) in entries.iter().enumerate() {
                if !alphabet.contains(a) {
                    return Err(SpecError::new(
                        *apos,
                        Rule::Coalgebra,
                        format!("`{a}` is not a letter of `{alpha}`"),
                    ));
                }
                if entries[..i].iter().any(|(b, _, _)| b == a) {
                    return Err(SpecError::new(
                        *apos,
                        Rule::Coalgebra,
                        format!("letter `{a}` listed twice"),
                    ));
                }
            }
            let mut table = Vec::new();
            for letter in alphabet.letters() {
                let Some((_, _, x)) = entries.iter().find(|(a, _, _)| a == letter) else {
                    return Err(SpecError::new(
                        *pos,
                        Rule::Coalgebra,
                        format!("table has no entry for letter `{letter}`"),
                    ));
                };
                table.push((letter.clone(), resolve_value(sig, f, x, states)?));
            }
            Ok(Struct::Table(table))
        }
        (Functor::Exponent(..), _) => Err(bad("a table `[a -> u; ...]`")),
        (Functor::Powerset(f), RawValue::Set(xs, _)) => {
            let mut set = xs
                .iter()
                .map(|x| resolve_value(sig, f, x, states))
                .collect::<Result<Vec<_>, _>>()?;
            set.sort();
            set.dedup();
            Ok(Struct::Set(set))
        }
        (Functor::Powerset(_), _) => Err(bad("a set `{u, ...}`")),
    }
}

struct RawCoalgebra {
    name: String,
    pos: Pos,
    over: (String, Pos),
    states: Vec<(String, Pos, RawValue)>,
}

fn parse_coalgebra(cur: &mut Cursor, pos: Pos) -> Result<RawCoalgebra, ParseError> {
    let (name, _) = cur.expect_ident()?;
    cur.expect_keyword("over")?;
    let over = cur.expect_ident()?;
    cur.expect(&Tok::LBrace)?;
    let mut states = Vec::new();
    while !cur.eat(&Tok::RBrace) {
        if cur.eat(&Tok::Semi) {
            continue;
        }
        cur.expect_keyword("state")?;
        let (s, spos) = parse_binding_head(cur)?;
        states.push((s, spos, parse_value(cur)?));
        if !matches!(cur.peek(), Tok::RBrace) {
            cur.expect(&Tok::Semi)?;
        }
    }
    cur.expect_eof()?;
    Ok(RawCoalgebra {
        name,
        pos,
        over,
        states,
    })
}

/// A goal side: an expression, or `NAME!` for a process translation.
enum GoalSide {
    Expr(Expr, Pos),
    Translation(String, Pos),
}

fn parse_goal_side(cur: &mut Cursor, sig: &Signature) -> Result<GoalSide, ParseError> {
    let pos = cur.pos();
    if let (Tok::Ident(name), Tok::Bang) = (cur.peek().clone(), cur.peek_at(1)) {
        cur.bump();
        cur.bump();
        return Ok(GoalSide::Translation(name, pos));
    }
    Ok(GoalSide::Expr(parse_expr(cur, sig)?, pos))
}

/// Inlines declared names in a family of mutually referring definitions,
/// rejecting cycles.
struct Resolver<'a, T> {
    defs: &'a BTreeMap<String, (Pos, T)>,
    done: BTreeMap<String, T>,
    free: fn(&T) -> BTreeSet<String>,
    subst: fn(&T, &str, &T) -> T,
    rule: Rule,
}

impl<T: Clone> Resolver<'_, T> {
    fn resolve(&mut self, name: &str, stack: &mut Vec<String>) -> Result<T, SpecError> {
        if let Some(t) = self.done.get(name) {
            return Ok(t.clone());
        }
        let (pos, raw) = &self.defs[name];
        if stack.iter().any(|s| s == name) {
            stack.push(name.to_string());
            return Err(SpecError::new(
                *pos,
                self.rule,
                format!("cyclic definition: {}", stack.join(" -> ")),
            ));
        }
        stack.push(name.to_string());
        let t = self.inline(raw, stack)?;
        stack.pop();
        self.done.insert(name.to_string(), t.clone());
        Ok(t)
    }

    fn inline(&mut self, raw: &T, stack: &mut Vec<String>) -> Result<T, SpecError> {
        let mut t = raw.clone();
        for x in (self.free)(raw) {
            if self.defs.contains_key(&x) {
                let v = self.resolve(&x, stack)?;
                t = (self.subst)(&t, &x, &v);
            }
        }
        Ok(t)
    }
}

fn unresolved(pos: Pos, what: &str, free: &BTreeSet<String>) -> Option<SpecError> {
    let first = free.iter().next()?;
    Some(SpecError::new(
        pos,
        Rule::UnresolvedName,
        format!("{what} refers to undeclared name `{first}`"),
    ))
}

fn check_unique<'a>(
    items: impl Iterator<Item = (&'a str, Pos)>,
    what: &str,
) -> Result<(), SpecError> {
    let mut seen = BTreeSet::new();
    for (name, pos) in items {
        if !seen.insert(name) {
            return Err(SpecError::new(
                pos,
                Rule::DuplicateName,
                format!("{what} `{name}` is declared twice"),
            ));
        }
    }
    Ok(())
}

/// Parses and validates a whole spec file.
pub fn parse_spec(src: &str) -> Result<SpecFile, SpecError> {
    let toks = tokenize(src).map_err(syntax)?;
    let mut lattice_decls = Vec::new();
    let mut alphabet_decls = Vec::new();
    let mut functor_chunks = Vec::new();
    let mut expr_chunks = Vec::new();
    let mut proc_chunks = Vec::new();
    let mut coalg_chunks = Vec::new();
    let mut goal_chunks = Vec::new();
    for mut c in chunks(toks)? {
        match c.keyword.as_str() {
            "semilattice" => {
                lattice_decls.push((c.pos, parse_semilattice(&mut c.cur).map_err(syntax)?))
            }
            "alphabet" => alphabet_decls.push((c.pos, parse_alphabet(&mut c.cur).map_err(syntax)?)),
            "functor" => functor_chunks.push(c),
            "expr" => expr_chunks.push(c),
            "process" => proc_chunks.push(c),
            "coalgebra" => coalg_chunks.push(c),
            "goal" => goal_chunks.push(c),
            _ => unreachable!("chunks start with a declaration keyword"),
        }
    }

    check_unique(
        lattice_decls.iter().map(|(p, d)| (d.name.as_str(), *p)),
        "semilattice",
    )?;
    check_unique(
        alphabet_decls.iter().map(|(p, (n, _))| (n.as_str(), *p)),
        "alphabet",
    )?;
    let mut lattices = Vec::new();
    for (pos, d) in &lattice_decls {
        lattices.push(
            SemiLattice::validate(d).map_err(|e| SpecError::new(*pos, Rule::Semilattice, e))?,
        );
    }
    let mut alphabets = Vec::new();
    for (pos, (name, letters)) in &alphabet_decls {
        alphabets.push(
            Alphabet::new(name.clone(), letters.clone())
                .map_err(|e| SpecError::new(*pos, Rule::Alphabet, e))?,
        );
    }

    let mut functor_chunks = functor_chunks.into_iter();
    let Some(mut fc) = functor_chunks.next() else {
        return Err(SpecError::new(
            Pos { line: 1, col: 1 },
            Rule::Functor,
            "no `functor G = ...` declaration",
        ));
    };
    if let Some(extra) = functor_chunks.next() {
        return Err(SpecError::new(
            extra.pos,
            Rule::Functor,
            "only one functor may be declared",
        ));
    }
    let (functor_name, _) = parse_binding_head(&mut fc.cur).map_err(syntax)?;
    let scope = Constants {
        lattices: &lattices,
        alphabets: &alphabets,
    };
    let functor = parse_functor(&mut fc.cur, &scope).map_err(syntax)?;
    fc.cur.expect_eof().map_err(syntax)?;
    let signature = Signature::new(lattices, alphabets, functor)
        .map_err(|e| SpecError::new(fc.pos, Rule::Functor, e))?;
    let sig = &signature;

    // Expressions.
    let mut raw_exprs = Vec::new();
    for mut c in expr_chunks {
        let (name, pos) = parse_binding_head(&mut c.cur).map_err(syntax)?;
        check_binding_name(sig, &name, pos)?;
        let e = parse_expr(&mut c.cur, sig).map_err(syntax)?;
        c.cur.expect_eof().map_err(syntax)?;
        raw_exprs.push((name, pos, e));
    }
    check_unique(
        raw_exprs.iter().map(|(n, p, _)| (n.as_str(), *p)),
        "expression",
    )?;
    let expr_defs: BTreeMap<String, (Pos, Expr)> = raw_exprs
        .iter()
        .map(|(n, p, e)| (n.clone(), (*p, e.clone())))
        .collect();
    let mut expr_resolver = Resolver {
        defs: &expr_defs,
        done: BTreeMap::new(),
        free: free_vars,
        subst: substitute,
        rule: Rule::Expression,
    };
    let mut exprs = Vec::new();
    for (name, pos, _) in &raw_exprs {
        let expr = expr_resolver.resolve(name, &mut Vec::new())?;
        if let Some(e) = unresolved(*pos, &format!("expression `{name}`"), &free_vars(&expr)) {
            return Err(e);
        }
        check_expression(sig, &expr)
            .map_err(|e| SpecError::new(*pos, Rule::Expression, format!("`{name}`: {e}")))?;
        exprs.push(NamedExpr {
            name: name.clone(),
            pos: *pos,
            expr,
        });
    }

    // Processes.
    let mut raw_procs = Vec::new();
    for mut c in proc_chunks {
        let (name, pos) = parse_binding_head(&mut c.cur).map_err(syntax)?;
        check_binding_name(sig, &name, pos)?;
        let p = parse_process(&mut c.cur, sig).map_err(syntax)?;
        c.cur.expect_eof().map_err(syntax)?;
        raw_procs.push((name, pos, p));
    }
    check_unique(
        raw_procs.iter().map(|(n, p, _)| (n.as_str(), *p)),
        "process",
    )?;
    let proc_defs: BTreeMap<String, (Pos, Proc)> = raw_procs
        .iter()
        .map(|(n, p, q)| (n.clone(), (*p, q.clone())))
        .collect();
    let mut proc_resolver = Resolver {
        defs: &proc_defs,
        done: BTreeMap::new(),
        free: proc_free_vars,
        subst: substitute_proc,
        rule: Rule::Process,
    };
    let mut processes = Vec::new();
    for (name, pos, _) in &raw_procs {
        let process = proc_resolver.resolve(name, &mut Vec::new())?;
        if let Some(e) = unresolved(
            *pos,
            &format!("process `{name}`"),
            &proc_free_vars(&process),
        ) {
            return Err(e);
        }
        let translation = translate(sig, &process)
            .map_err(|e| SpecError::new(*pos, Rule::Process, format!("`{name}`: {e}")))?
            .into_expr();
        processes.push(NamedProcess {
            name: name.clone(),
            pos: *pos,
            process,
            translation,
        });
    }

    // Coalgebras.
    let mut coalgebras = Vec::new();
    for mut c in coalg_chunks {
        let raw = parse_coalgebra(&mut c.cur, c.pos).map_err(syntax)?;
        if raw.over.0 != functor_name {
            return Err(SpecError::new(
                raw.over.1,
                Rule::Coalgebra,
                format!(
                    "coalgebra `{}` is over `{}`, but the declared functor is `{functor_name}`",
                    raw.name, raw.over.0
                ),
            ));
        }
        check_unique(raw.states.iter().map(|(s, p, _)| (s.as_str(), *p)), "state")?;
        if raw.states.is_empty() {
            return Err(SpecError::new(
                raw.pos,
                Rule::Coalgebra,
                format!("coalgebra `{}` has no states", raw.name),
            ));
        }
        let labels: Vec<String> = raw.states.iter().map(|(s, _, _)| s.clone()).collect();
        let structure = raw
            .states
            .iter()
            .map(|(_, _, v)| resolve_value(sig, sig.functor(), v, &labels))
            .collect::<Result<Vec<_>, _>>()?;
        let coalgebra = Coalgebra::new(sig, labels, structure)
            .map_err(|e| SpecError::new(raw.pos, Rule::Coalgebra, e))?;
        coalgebras.push(NamedCoalgebra {
            name: raw.name,
            pos: raw.pos,
            coalgebra,
        });
    }
    check_unique(
        coalgebras.iter().map(|c| (c.name.as_str(), c.pos)),
        "coalgebra",
    )?;

    // Goals.
    let mut goals = Vec::new();
    for mut c in goal_chunks {
        let label = match c.cur.peek().clone() {
            Tok::Str(s) => {
                c.cur.bump();
                s
            }
            _ => return Err(syntax(c.cur.unexpected("a quoted goal label"))),
        };
        c.cur.expect(&Tok::Colon).map_err(syntax)?;
        let lhs = parse_goal_side(&mut c.cur, sig).map_err(syntax)?;
        c.cur.expect(&Tok::Eq).map_err(syntax)?;
        let rhs = parse_goal_side(&mut c.cur, sig).map_err(syntax)?;
        c.cur.expect_eof().map_err(syntax)?;
        let mut side = |s: GoalSide| -> Result<Expr, SpecError> {
            let (e, pos) = match s {
                GoalSide::Translation(name, pos) => match processes.iter().find(|p| p.name == name)
                {
                    Some(p) => (p.translation.clone(), pos),
                    None => {
                        return Err(SpecError::new(
                            pos,
                            Rule::UnresolvedName,
                            format!("no process `{name}`"),
                        ))
                    }
                },
                GoalSide::Expr(e, pos) => (expr_resolver.inline(&e, &mut Vec::new())?, pos),
            };
            if let Some(err) = unresolved(pos, &format!("goal \"{label}\""), &free_vars(&e)) {
                return Err(err);
            }
            check_expression(sig, &e)
                .map_err(|err| SpecError::new(pos, Rule::Goal, format!("\"{label}\": {err}")))?;
            Ok(e)
        };
        let lhs = side(lhs)?;
        let rhs = side(rhs)?;
        goals.push(Goal {
            label,
            pos: c.pos,
            lhs,
            rhs,
        });
    }

    Ok(SpecFile {
        signature,
        functor_name,
        exprs,
        processes,
        coalgebras,
        goals,
    })
}

/// Expression and process names share the variable namespace, so they may
/// not collide with elements, letters or keywords.
fn check_binding_name(sig: &Signature, name: &str, pos: Pos) -> Result<(), SpecError> {
    if sig.is_element(name)
        || sig.is_letter(name)
        || matches!(name, "mu" | "phi" | "tick" | "dead" | "omega")
    {
        Err(SpecError::new(
            pos,
            Rule::Syntax,
            format!("`{name}` cannot name an expression or process"),
        ))
    } else {
        Ok(())
    }
}
