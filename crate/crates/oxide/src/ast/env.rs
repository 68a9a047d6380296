//! The flow-sensitive place environment and the type-variable environment.

use std::fmt;

use super::place::{prefix_of, Place};
use super::ty::{Kind, Type};

/// One binding's worth of places: the contiguous expansion of a single
/// `let`/parameter (its root place plus every place reachable from it).
/// Keeping bindings grouped realizes shadowing: lookups see only the most
/// recent group for a root, and removing a binding removes one whole group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvGroup {
    pub root: String,
    pub entries: Vec<(Place, Type)>,
}

/// Ordered map from places to types (Γ), threaded through
/// type checking. Values are immutable after construction; all updates
/// build new environments.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PlaceEnv {
    groups: Vec<EnvGroup>,
}

impl PlaceEnv {
    pub fn new() -> PlaceEnv {
        PlaceEnv::default()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.iter().all(|g| g.entries.is_empty())
    }

    pub fn groups(&self) -> &[EnvGroup] {
        &self.groups
    }

    /// Push a fresh binding group rooted at `root`.
    pub fn push_group(&mut self, root: impl Into<String>, entries: Vec<(Place, Type)>) {
        self.groups.push(EnvGroup {
            root: root.into(),
            entries,
        });
    }

    /// Remove the most recent group rooted at `root`, restoring whatever
    /// binding it shadowed. No-op when there is none.
    pub fn pop_group(&mut self, root: &str) -> Option<EnvGroup> {
        let idx = self.groups.iter().rposition(|g| g.root == root)?;
        Some(self.groups.remove(idx))
    }

    /// Most recent binding group for `root`, if any.
    pub fn group_of(&self, root: &str) -> Option<&EnvGroup> {
        self.groups.iter().rev().find(|g| g.root == root)
    }

    /// Look up a place in its most recent group. Shadowed groups are not
    /// consulted: once a root is rebound, the older binding is unreachable
    /// until the shadow pops.
    pub fn lookup(&self, place: &Place) -> Option<&Type> {
        let group = self.group_of(&place.root)?;
        group
            .entries
            .iter()
            .rev()
            .find(|(p, _)| p == place)
            .map(|(_, t)| t)
    }

    pub fn contains(&self, place: &Place) -> bool {
        self.lookup(place).is_some()
    }

    pub fn contains_root(&self, root: &str) -> bool {
        self.group_of(root).is_some()
    }

    /// All entries in insertion order, including shadowed groups. Loans in
    /// shadowed bindings are still live (their values remain on the stack),
    /// so safety scans must see them.
    pub fn entries(&self) -> impl Iterator<Item = (&Place, &Type)> {
        self.groups
            .iter()
            .flat_map(|g| g.entries.iter().map(|(p, t)| (p, t)))
    }

    /// Entries visible to lookup: for each root, only the most recent group.
    pub fn effective_entries(&self) -> Vec<(&Place, &Type)> {
        let mut out = Vec::new();
        for (i, group) in self.groups.iter().enumerate() {
            let shadowed = self.groups[i + 1..].iter().any(|g| g.root == group.root);
            if !shadowed {
                out.extend(group.entries.iter().map(|(p, t)| (p, t)));
            }
        }
        out
    }

    /// Remove, from `place`'s most recent group, the whole chain through
    /// `place`: the place itself, everything it reaches, and the ancestors
    /// that contain it. Siblings stay usable after a partial move.
    pub fn remove_chain(&mut self, place: &Place) {
        if let Some(idx) = self.groups.iter().rposition(|g| g.root == place.root) {
            self.groups[idx]
                .entries
                .retain(|(p, _)| !prefix_of(place, p) && !prefix_of(p, place));
            if self.groups[idx].entries.is_empty() {
                self.groups.remove(idx);
            }
        }
    }

    /// Replace the chain rooted at `place` (the place and its subplaces)
    /// with `new_entries`, splicing at the old position so iteration order
    /// stays deterministic.
    pub fn replace_chain(&mut self, place: &Place, new_entries: Vec<(Place, Type)>) {
        if let Some(idx) = self.groups.iter().rposition(|g| g.root == place.root) {
            let entries = &mut self.groups[idx].entries;
            let start = entries
                .iter()
                .position(|(p, _)| prefix_of(place, p))
                .unwrap_or(entries.len());
            entries.retain(|(p, _)| !prefix_of(place, p));
            for (i, entry) in new_entries.into_iter().enumerate() {
                entries.insert(start + i, entry);
            }
        }
    }

    /// Domain as a deduplicated list of effective places.
    pub fn domain(&self) -> Vec<&Place> {
        self.effective_entries().into_iter().map(|(p, _)| p).collect()
    }
}

impl fmt::Display for PlaceEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (place, ty) in self.entries() {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{place}: {ty}")?;
        }
        if first {
            f.write_str("\u{2022}")?; // • for the empty environment
        }
        Ok(())
    }
}

/// The type-variable environment Δ: in-scope provenance and type variables
/// with their kinds, ordered, with unique names.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TyVarEnv {
    vars: Vec<(String, Kind)>,
}

impl TyVarEnv {
    pub fn new() -> TyVarEnv {
        TyVarEnv::default()
    }

    /// Returns false when the name is already bound (names must be unique).
    pub fn push(&mut self, name: impl Into<String>, kind: Kind) -> bool {
        let name = name.into();
        if self.vars.iter().any(|(n, _)| *n == name) {
            return false;
        }
        self.vars.push((name, kind));
        true
    }

    pub fn kind_of(&self, name: &str) -> Option<Kind> {
        self.vars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }

    pub fn has_prov(&self, name: &str) -> bool {
        self.kind_of(name) == Some(Kind::Prov)
    }

    pub fn has_ty(&self, name: &str) -> bool {
        self.kind_of(name) == Some(Kind::Type)
    }

    pub fn prov_names(&self) -> Vec<String> {
        self.vars
            .iter()
            .filter(|(_, k)| *k == Kind::Prov)
            .map(|(n, _)| n.clone())
            .collect()
    }
}
