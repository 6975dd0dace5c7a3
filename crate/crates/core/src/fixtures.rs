//! Signatures shared by the unit tests.

use crate::functor::Functor;
use crate::lattice::{Alphabet, LatticeDecl, SemiLattice};
use crate::signature::Signature;

pub fn b01(name: &str) -> SemiLattice {
    let s = |x: &str| x.to_string();
    SemiLattice::validate(&LatticeDecl {
        name: s(name),
        elements: vec![s("0"), s("1")],
        bottom: s("0"),
        joins: vec![
            (s("0"), s("0"), s("0")),
            (s("0"), s("1"), s("1")),
            (s("1"), s("1"), s("1")),
        ],
    })
    .unwrap()
}

pub fn one_point() -> SemiLattice {
    let s = |x: &str| x.to_string();
    SemiLattice::validate(&LatticeDecl {
        name: s("B"),
        elements: vec![s("1")],
        bottom: s("1"),
        joins: vec![(s("1"), s("1"), s("1"))],
    })
    .unwrap()
}

pub fn ab() -> Alphabet {
    Alphabet::new("A", vec!["a".into(), "b".into()]).unwrap()
}

/// `B x Id`
pub fn streams() -> Signature {
    Signature::new(
        vec![b01("B")],
        vec![],
        Functor::product(Functor::constant("B"), Functor::Identity),
    )
    .unwrap()
}

/// `(B x Id)^A`
pub fn mealy() -> Signature {
    Signature::new(
        vec![b01("B")],
        vec![ab()],
        Functor::exponent(
            Functor::product(Functor::constant("B"), Functor::Identity),
            "A",
        ),
    )
    .unwrap()
}

/// `B + (P Id)^A` with the one-point `B`.
pub fn lts() -> Signature {
    Signature::new(
        vec![one_point()],
        vec![ab()],
        Functor::sum(
            Functor::constant("B"),
            Functor::exponent(Functor::powerset(Functor::Identity), "A"),
        ),
    )
    .unwrap()
}
