//! The declared constants together with the functor they feed.

use crate::functor::{is_reserved_functor_word, Functor, FunctorScope};
use crate::lattice::{Alphabet, SemiLattice};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("`{0}` is declared more than once")]
    DuplicateName(String),
    #[error("`{0}` is a reserved word and cannot name a semilattice or alphabet")]
    ReservedName(String),
    #[error("identifier `{0}` is both a semilattice element and a letter")]
    AmbiguousIdentifier(String),
    #[error("functor refers to undeclared semilattice `{0}`")]
    UnknownLattice(String),
    #[error("functor refers to undeclared alphabet `{0}`")]
    UnknownAlphabet(String),
}

/// Which lookups the expression parser needs to classify identifiers.
pub trait ExprScope {
    fn is_element(&self, name: &str) -> bool;
    fn is_letter(&self, name: &str) -> bool;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    lattices: Vec<SemiLattice>,
    alphabets: Vec<Alphabet>,
    functor: Functor,
}

impl Signature {
    pub fn new(
        lattices: Vec<SemiLattice>,
        alphabets: Vec<Alphabet>,
        functor: Functor,
    ) -> Result<Signature, SignatureError> {
        let mut names: Vec<&str> = Vec::new();
        for n in lattices
            .iter()
            .map(SemiLattice::name)
            .chain(alphabets.iter().map(Alphabet::name))
        {
            if is_reserved_functor_word(n) {
                return Err(SignatureError::ReservedName(n.to_string()));
            }
            if names.contains(&n) {
                return Err(SignatureError::DuplicateName(n.to_string()));
            }
            names.push(n);
        }
        for a in &alphabets {
            for l in a.letters() {
                if lattices.iter().any(|b| b.contains(l)) {
                    return Err(SignatureError::AmbiguousIdentifier(l.clone()));
                }
            }
        }
        let sig = Signature {
            lattices,
            alphabets,
            functor,
        };
        sig.check_functor(&sig.functor)?;
        Ok(sig)
    }

    fn check_functor(&self, f: &Functor) -> Result<(), SignatureError> {
        match f {
            Functor::Constant(b) if self.lattice(b).is_none() => {
                Err(SignatureError::UnknownLattice(b.clone()))
            }
            Functor::Exponent(_, a) if self.alphabet(a).is_none() => {
                Err(SignatureError::UnknownAlphabet(a.clone()))
            }
            _ => f
                .children()
                .into_iter()
                .try_for_each(|c| self.check_functor(c)),
        }
    }

    pub fn functor(&self) -> &Functor {
        &self.functor
    }

    pub fn lattices(&self) -> &[SemiLattice] {
        &self.lattices
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn lattice(&self, name: &str) -> Option<&SemiLattice> {
        self.lattices.iter().find(|l| l.name() == name)
    }

    pub fn alphabet(&self, name: &str) -> Option<&Alphabet> {
        self.alphabets.iter().find(|a| a.name() == name)
    }

    /// Lattice of a constant functor. Panics on a name the constructor did
    /// not validate, which cannot happen for sub-functors of `functor()`.
    pub(crate) fn lattice_of(&self, name: &str) -> &SemiLattice {
        self.lattice(name)
            .unwrap_or_else(|| panic!("undeclared semilattice `{name}`"))
    }

    pub(crate) fn alphabet_of(&self, name: &str) -> &Alphabet {
        self.alphabet(name)
            .unwrap_or_else(|| panic!("undeclared alphabet `{name}`"))
    }

    /// Same constants, different functor.
    pub fn with_functor(&self, functor: Functor) -> Result<Signature, SignatureError> {
        Signature::new(self.lattices.clone(), self.alphabets.clone(), functor)
    }
}

impl ExprScope for Signature {
    fn is_element(&self, name: &str) -> bool {
        self.lattices.iter().any(|l| l.contains(name))
    }

    fn is_letter(&self, name: &str) -> bool {
        self.alphabets.iter().any(|a| a.contains(name))
    }
}

impl FunctorScope for Signature {
    fn is_lattice(&self, name: &str) -> bool {
        self.lattice(name).is_some()
    }

    fn is_alphabet(&self, name: &str) -> bool {
        self.alphabet(name).is_some()
    }
}

/// Constants only, for parsing the functor itself.
pub struct Constants<'a> {
    pub lattices: &'a [SemiLattice],
    pub alphabets: &'a [Alphabet],
}

impl FunctorScope for Constants<'_> {
    fn is_lattice(&self, name: &str) -> bool {
        self.lattices.iter().any(|l| l.name() == name)
    }

    fn is_alphabet(&self, name: &str) -> bool {
        self.alphabets.iter().any(|a| a.name() == name)
    }
}
