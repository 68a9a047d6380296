//! Static μ-safety: it is safe to use a place uniquely when no live loan
//! overlaps it, and sharedly when no live unique loan overlaps it. Loans
//! live inside the types of the place environment; loans rooted at a
//! dereference are resolved through the reference they go through.

use std::collections::BTreeSet;

use crate::ast::{
    overlaps, GlobalEnv, Loan, LoanSet, OwnQual, PathElem, Place, PlaceEnv, Provenance, Type,
};
use crate::diag::Code;

use super::ops::type_loans;
use super::CheckError;

/// A live loan together with the environment entry whose type holds it.
#[derive(Clone, Debug)]
pub struct LoanInfo {
    pub loan: Loan,
    pub holder: Place,
}

/// Every loan reachable from the environment: all entries (including
/// shadowed bindings, whose values are still on the stack), recursing
/// through reference types, aggregate components, and closure captured
/// environments.
pub fn collect_loans(globals: &GlobalEnv, env: &PlaceEnv) -> Vec<LoanInfo> {
    let mut out = Vec::new();
    for (place, ty) in env.entries() {
        // The dereference expansions repeat the loans of their parent
        // reference entries; visiting roots of each chain once is enough,
        // but repeats are harmless, so keep the scan simple and total.
        let mut loans = LoanSet::new();
        type_loans(globals, ty, &mut loans);
        for loan in loans {
            out.push(LoanInfo {
                loan,
                holder: place.clone(),
            });
        }
    }
    out
}

/// A μ-safety failure carries the conflict diagnostics plus the holders of
/// every conflicting loan, which the weakening retry prunes when dead.
#[derive(Clone, Debug)]
pub struct SafetyFailure {
    pub error: CheckError,
    pub holders: BTreeSet<Place>,
}

impl SafetyFailure {
    fn plain(error: CheckError) -> SafetyFailure {
        SafetyFailure {
            error,
            holders: BTreeSet::new(),
        }
    }
}

/// Resolve a place to the set of concrete places it may denote, following
/// concrete provenances through each dereference. Returns the resolved
/// places and the loans granted along the access path whose reference
/// qualifier covers the use (those do not count as conflicts: the access
/// goes through the granting loan).
pub fn resolve_place(env: &PlaceEnv, place: &Place, use_qual: OwnQual) -> (Vec<Place>, LoanSet) {
    let mut resolved = BTreeSet::new();
    let mut exempt = LoanSet::new();
    let mut work = vec![place.clone()];
    let mut fuel = 256usize;
    while let Some(p) = work.pop() {
        if fuel == 0 {
            resolved.insert(p);
            continue;
        }
        fuel -= 1;
        let mut expanded = false;
        for i in 0..p.path.len() {
            if p.path[i] != PathElem::Deref {
                continue;
            }
            let prefix = Place {
                root: p.root.clone(),
                path: p.path[..i].to_vec(),
            };
            if let Some(Type::Ref(Provenance::Concrete(loans), ref_qual, _)) = env.lookup(&prefix)
            {
                if ref_qual.grants(use_qual) {
                    exempt.extend(loans.iter().cloned());
                }
                let rest = &p.path[i + 1..];
                for loan in loans {
                    work.push(loan.place.join(rest));
                }
                expanded = true;
                break;
            }
            // A variable provenance or an unbound prefix cannot be
            // expanded; later dereferences may still resolve since the
            // environment holds entries for the symbolic prefixes.
        }
        if !expanded {
            resolved.insert(p);
        }
    }
    (resolved.into_iter().collect(), exempt)
}

/// Resolve a loan's place without collecting exemptions.
pub fn resolve_loan_place(env: &PlaceEnv, place: &Place) -> Vec<Place> {
    resolve_place(env, place, OwnQual::Shrd).0
}

/// The μ-safety judgment: returns the type of `place` when using it
/// `qual`-ly conflicts with no live loan. For a unique use no loan may
/// overlap the place; for a shared use only unique loans conflict.
pub fn mu_safety(
    globals: &GlobalEnv,
    env: &PlaceEnv,
    qual: OwnQual,
    place: &Place,
) -> Result<Type, SafetyFailure> {
    let ty = env.lookup(place).ok_or_else(|| {
        SafetyFailure::plain(CheckError::new(
            Code::Unbound,
            format!("`{place}` is not bound in the environment"),
        ))
    })?;

    let (use_places, exempt) = resolve_place(env, place, qual);
    let mut conflicts: Vec<LoanInfo> = Vec::new();
    for info in collect_loans(globals, env) {
        if exempt.contains(&info.loan) {
            continue;
        }
        if qual == OwnQual::Shrd && info.loan.qual == OwnQual::Shrd {
            continue; // shared loans pass a shared use through
        }
        let loan_places = resolve_loan_place(env, &info.loan.place);
        let hit = loan_places
            .iter()
            .any(|lp| use_places.iter().any(|up| overlaps(lp, up)));
        if hit {
            conflicts.push(info);
        }
    }

    if let Some(first) = conflicts.first() {
        let verb = match qual {
            OwnQual::Uniq => "uniquely",
            OwnQual::Shrd => "sharedly",
        };
        let error = CheckError::new(
            Code::LoanConflict,
            format!(
                "cannot use `{place}` {verb} while the loan `{}` held by `{}` is live",
                first.loan, first.holder
            ),
        );
        let holders = conflicts.into_iter().map(|c| c.holder).collect();
        return Err(SafetyFailure { error, holders });
    }
    Ok(ty.clone())
}

/// The mutual-compatibility judgment for aggregate components, closure
/// parameters, and call arguments: loans drawn from distinct types in the
/// list must not conflict pairwise, nor against the environment's live
/// loans. A conflict is a unique loan overlapping any other loan's place.
pub fn mutually_safe(
    globals: &GlobalEnv,
    env: &PlaceEnv,
    types: &[Type],
) -> Result<(), CheckError> {
    let loan_sets: Vec<LoanSet> = types
        .iter()
        .map(|t| {
            let mut loans = LoanSet::new();
            type_loans(globals, t, &mut loans);
            loans
        })
        .collect();
    let resolved: Vec<Vec<(Loan, Vec<Place>)>> = loan_sets
        .iter()
        .map(|loans| {
            loans
                .iter()
                .map(|l| (l.clone(), resolve_loan_place(env, &l.place)))
                .collect()
        })
        .collect();

    let conflict = |a: &(Loan, Vec<Place>), b: &(Loan, Vec<Place>)| -> bool {
        if a.0.qual != OwnQual::Uniq && b.0.qual != OwnQual::Uniq {
            return false;
        }
        a.1.iter()
            .any(|pa| b.1.iter().any(|pb| overlaps(pa, pb)))
    };

    for i in 0..resolved.len() {
        for j in i + 1..resolved.len() {
            for a in &resolved[i] {
                for b in &resolved[j] {
                    if conflict(a, b) {
                        return Err(CheckError::new(
                            Code::LoanConflict,
                            format!(
                                "loans `{}` and `{}` in sibling components are not mutually safe",
                                a.0, b.0
                            ),
                        ));
                    }
                }
            }
        }
    }

    // Against the environment's live loans. Copies of shared references
    // legitimately repeat their loans, so only unique overlap conflicts.
    let env_loans: Vec<(Loan, Vec<Place>)> = collect_loans(globals, env)
        .into_iter()
        .map(|info| {
            let places = resolve_loan_place(env, &info.loan.place);
            (info.loan, places)
        })
        .collect();
    for component in &resolved {
        for a in component {
            for b in &env_loans {
                if a.0 == b.0 {
                    continue; // the same loan seen through a copy
                }
                if conflict(a, b) {
                    return Err(CheckError::new(
                        Code::LoanConflict,
                        format!(
                            "loan `{}` conflicts with the live loan `{}`",
                            a.0, b.0
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}
