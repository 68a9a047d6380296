//! Places, ownership qualifiers, loans, and provenances.
//!
//! A place names a borrowable region of abstract memory: a root variable
//! followed by projections, field accesses, and dereferences. Loans record
//! that a reference was created against a place with a given qualifier, and
//! a provenance over-approximates every loan a reference may carry.

use std::collections::BTreeSet;
use std::fmt;

/// Ownership qualifier on references and loans. `Shrd` permits aliasing and
/// forbids unguarded mutation; `Uniq` grants exclusive access. The derived
/// order makes `Shrd < Uniq`, which is the "strength" order used when a
/// qualifier must grant at least the access of another.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OwnQual {
    Shrd,
    Uniq,
}

impl OwnQual {
    pub fn keyword(self) -> &'static str {
        match self {
            OwnQual::Shrd => "shrd",
            OwnQual::Uniq => "uniq",
        }
    }

    /// True when access at `self` suffices for a use at `demand`.
    pub fn grants(self, demand: OwnQual) -> bool {
        self >= demand
    }
}

impl fmt::Display for OwnQual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// One step along a place's path.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathElem {
    /// `.0`, `.1`, ... on tuples and positional structs.
    TupleProj(usize),
    /// `.name` on named structs.
    Field(String),
    /// `*` prefix; following the reference stored at the prefix place.
    Deref,
}

impl fmt::Display for PathElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathElem::TupleProj(i) => write!(f, ".{i}"),
            PathElem::Field(name) => write!(f, ".{name}"),
            PathElem::Deref => f.write_str("*"),
        }
    }
}

/// A root identifier plus a path of projections and dereferences.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Place {
    pub root: String,
    pub path: Vec<PathElem>,
}

impl Place {
    pub fn root(name: impl Into<String>) -> Place {
        Place {
            root: name.into(),
            path: Vec::new(),
        }
    }

    pub fn extend(&self, elem: PathElem) -> Place {
        let mut path = self.path.clone();
        path.push(elem);
        Place {
            root: self.root.clone(),
            path,
        }
    }

    pub fn proj(&self, i: usize) -> Place {
        self.extend(PathElem::TupleProj(i))
    }

    pub fn field(&self, name: impl Into<String>) -> Place {
        self.extend(PathElem::Field(name.into()))
    }

    pub fn deref(&self) -> Place {
        self.extend(PathElem::Deref)
    }

    pub fn is_root(&self) -> bool {
        self.path.is_empty()
    }

    pub fn has_deref(&self) -> bool {
        self.path.contains(&PathElem::Deref)
    }

    /// Append `suffix`'s elements, used when resolving deref-rooted loans.
    pub fn join(&self, suffix: &[PathElem]) -> Place {
        let mut path = self.path.clone();
        path.extend_from_slice(suffix);
        Place {
            root: self.root.clone(),
            path,
        }
    }
}

/// True iff `a`'s root and path are a (possibly equal) prefix of `b`'s.
pub fn prefix_of(a: &Place, b: &Place) -> bool {
    a.root == b.root && b.path.len() >= a.path.len() && a.path == b.path[..a.path.len()]
}

/// Two places overlap when one names a region inside the other: treating the
/// (root, path) pair as a token sequence, one must be a prefix of the other.
pub fn overlaps(a: &Place, b: &Place) -> bool {
    prefix_of(a, b) || prefix_of(b, a)
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Deref prints as a prefix star; a projection applied to a deref
        // needs parentheses, e.g. `(*p).1` but `*p.0` for a deref of `p.0`.
        let mut rendered = self.root.clone();
        let mut ends_in_deref = false;
        for elem in &self.path {
            match elem {
                PathElem::Deref => {
                    rendered = format!("*{rendered}");
                    ends_in_deref = true;
                }
                PathElem::TupleProj(_) | PathElem::Field(_) => {
                    if ends_in_deref {
                        rendered = format!("({rendered})");
                        ends_in_deref = false;
                    }
                    rendered.push_str(&elem.to_string());
                }
            }
        }
        f.write_str(&rendered)
    }
}

/// A record that a reference was created against `place` with access `qual`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loan {
    pub qual: OwnQual,
    pub place: Place,
}

impl Loan {
    pub fn new(qual: OwnQual, place: Place) -> Loan {
        Loan { qual, place }
    }
}

impl fmt::Display for Loan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.qual, self.place)
    }
}

/// Deduplicated, order-insensitive set of loans.
pub type LoanSet = BTreeSet<Loan>;

/// Approximate provenance of a reference: a variable to be solved by
/// subtyping, or a concrete set of loans.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    /// A provenance variable, stored without its leading tick: `'a` is `a`.
    Var(String),
    Concrete(LoanSet),
}

impl Provenance {
    pub fn var(name: impl Into<String>) -> Provenance {
        Provenance::Var(name.into())
    }

    pub fn concrete(loans: impl IntoIterator<Item = Loan>) -> Provenance {
        Provenance::Concrete(loans.into_iter().collect())
    }

    pub fn single(qual: OwnQual, place: Place) -> Provenance {
        Provenance::concrete([Loan::new(qual, place)])
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Var(name) => write!(f, "'{name}"),
            Provenance::Concrete(loans) => {
                f.write_str("{")?;
                for (i, loan) in loans.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{loan}")?;
                }
                f.write_str("}")
            }
        }
    }
}
