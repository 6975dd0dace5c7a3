//! Finite bounded join-semilattices and finite alphabets, the two kinds of
//! constants a functor may mention.

use std::fmt;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("semilattice `{lattice}`: no join entry for ({0}, {1})", .pair.0, .pair.1)]
    MissingJoinEntry {
        lattice: String,
        pair: (String, String),
    },
    #[error("semilattice `{lattice}`: join is not idempotent at {element}")]
    NotIdempotent { lattice: String, element: String },
    #[error("semilattice `{lattice}`: join is not associative at ({0}, {1}, {2})", .triple.0, .triple.1, .triple.2)]
    NotAssociative {
        lattice: String,
        triple: (String, String, String),
    },
    #[error("semilattice `{lattice}`: join is not commutative at ({0}, {1})", .pair.0, .pair.1)]
    NotCommutative {
        lattice: String,
        pair: (String, String),
    },
    #[error("semilattice `{lattice}`: bottom {bottom} is not neutral for {element}")]
    BottomNotNeutral {
        lattice: String,
        bottom: String,
        element: String,
    },
    #[error("semilattice `{lattice}`: unknown element `{element}`")]
    UnknownElement { lattice: String, element: String },
    #[error("semilattice `{lattice}`: element `{element}` declared twice")]
    DuplicateElement { lattice: String, element: String },
    #[error("semilattice `{lattice}`: conflicting join entries for ({0}, {1})", .pair.0, .pair.1)]
    ConflictingJoinEntry {
        lattice: String,
        pair: (String, String),
    },
    #[error("semilattice `{lattice}` has no elements")]
    NoElements { lattice: String },
    #[error("alphabet `{alphabet}` has no letters")]
    EmptyAlphabet { alphabet: String },
    #[error("alphabet `{alphabet}`: letter `{letter}` declared twice")]
    DuplicateLetter { alphabet: String, letter: String },
}

/// A semilattice as written in a spec file, before any law is checked.
/// Join entries list each unordered pair once; the symmetric entry is derived.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeDecl {
    pub name: String,
    pub elements: Vec<String>,
    pub bottom: String,
    pub joins: Vec<(String, String, String)>,
}

/// A validated finite bounded join-semilattice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemiLattice {
    name: String,
    elements: Vec<String>,
    bottom: usize,
    /// `table[i][j]` is the index of `elements[i] ∨ elements[j]`.
    table: Vec<Vec<usize>>,
}

impl SemiLattice {
    pub fn validate(decl: &LatticeDecl) -> Result<SemiLattice, LatticeError> {
        let lattice = decl.name.clone();
        if decl.elements.is_empty() {
            return Err(LatticeError::NoElements { lattice });
        }
        let mut elements: Vec<String> = Vec::with_capacity(decl.elements.len());
        for e in &decl.elements {
            if elements.contains(e) {
                return Err(LatticeError::DuplicateElement {
                    lattice,
                    element: e.clone(),
                });
            }
            elements.push(e.clone());
        }
        let index = |name: &str| -> Result<usize, LatticeError> {
            elements
                .iter()
                .position(|e| e == name)
                .ok_or_else(|| LatticeError::UnknownElement {
                    lattice: lattice.clone(),
                    element: name.to_string(),
                })
        };
        let bottom = index(&decl.bottom)?;
        let n = elements.len();

        // Each slot remembers whether it was written directly or derived by
        // symmetry, to tell a repeated entry from a non-commutative one.
        let mut table: Vec<Vec<Option<(usize, bool)>>> = vec![vec![None; n]; n];
        for (a, b, r) in &decl.joins {
            let (i, j, k) = (index(a)?, index(b)?, index(r)?);
            if i == j && k != i {
                return Err(LatticeError::NotIdempotent {
                    lattice,
                    element: a.clone(),
                });
            }
            if let Some((prev, direct)) = table[i][j] {
                if prev != k {
                    let pair = (a.clone(), b.clone());
                    return Err(if direct {
                        LatticeError::ConflictingJoinEntry { lattice, pair }
                    } else {
                        LatticeError::NotCommutative { lattice, pair }
                    });
                }
            }
            table[i][j] = Some((k, true));
            if table[j][i].is_none() {
                table[j][i] = Some((k, false));
            }
        }

        let mut full = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                full[i][j] =
                    table[i][j]
                        .map(|(k, _)| k)
                        .ok_or_else(|| LatticeError::MissingJoinEntry {
                            lattice: lattice.clone(),
                            pair: (elements[i].clone(), elements[j].clone()),
                        })?;
            }
        }

        // The table is symmetric by construction; the remaining laws are
        // checked exhaustively.
        for i in 0..n {
            if full[i][i] != i {
                return Err(LatticeError::NotIdempotent {
                    lattice,
                    element: elements[i].clone(),
                });
            }
            if full[bottom][i] != i {
                return Err(LatticeError::BottomNotNeutral {
                    lattice,
                    bottom: elements[bottom].clone(),
                    element: elements[i].clone(),
                });
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if full[a][full[b][c]] != full[full[a][b]][c] {
                        return Err(LatticeError::NotAssociative {
                            lattice,
                            triple: (
                                elements[a].clone(),
                                elements[b].clone(),
                                elements[c].clone(),
                            ),
                        });
                    }
                }
            }
        }

        Ok(SemiLattice {
            name: decl.name.clone(),
            elements,
            bottom,
            table: full,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn bottom(&self) -> &str {
        &self.elements[self.bottom]
    }

    pub fn contains(&self, element: &str) -> bool {
        self.elements.iter().any(|e| e == element)
    }

    pub fn index_of(&self, element: &str) -> Result<usize, LatticeError> {
        self.elements
            .iter()
            .position(|e| e == element)
            .ok_or_else(|| LatticeError::UnknownElement {
                lattice: self.name.clone(),
                element: element.to_string(),
            })
    }

    pub fn join<'a>(&'a self, b1: &str, b2: &str) -> Result<&'a str, LatticeError> {
        let (i, j) = (self.index_of(b1)?, self.index_of(b2)?);
        Ok(&self.elements[self.table[i][j]])
    }

    pub fn leq(&self, b1: &str, b2: &str) -> Result<bool, LatticeError> {
        Ok(self.join(b1, b2)? == b2)
    }
}

impl fmt::Display for SemiLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "semilattice {} {{ elements", self.name)?;
        for e in &self.elements {
            write!(f, " {e}")?;
        }
        write!(f, " ; bottom {} ;", self.bottom())?;
        for i in 0..self.elements.len() {
            for j in i..self.elements.len() {
                write!(
                    f,
                    " join {} {} = {} ;",
                    self.elements[i], self.elements[j], self.elements[self.table[i][j]]
                )?;
            }
        }
        f.write_str(" }")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    name: String,
    letters: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, letters: Vec<String>) -> Result<Alphabet, LatticeError> {
        let name = name.into();
        if letters.is_empty() {
            return Err(LatticeError::EmptyAlphabet { alphabet: name });
        }
        for (i, l) in letters.iter().enumerate() {
            if letters[..i].contains(l) {
                return Err(LatticeError::DuplicateLetter {
                    alphabet: name,
                    letter: l.clone(),
                });
            }
        }
        Ok(Alphabet { name, letters })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn contains(&self, letter: &str) -> bool {
        self.letters.iter().any(|l| l == letter)
    }
}
