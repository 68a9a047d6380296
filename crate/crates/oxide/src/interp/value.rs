//! Runtime values, one-level shapes, and the stack of places.
//!
//! A value is fully materialized. A shape is one level of a value: aggregate
//! components are holes, and the component contents live at their own places
//! in the store. Arrays are the exception — their elements are not places
//! (indexing is not a place), so an array is stored whole as a single shape.

use std::fmt;

use crate::ast::expr::{CtorFields, Expr, ExprKind};
use crate::ast::place::{OwnQual, PathElem, Place};
use crate::ast::ty::Type;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constant {
    Unit,
    U32(u32),
    Bool(bool),
    Str(String),
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Unit => f.write_str("()"),
            Constant::U32(n) => write!(f, "{n}"),
            Constant::Bool(b) => write!(f, "{b}"),
            Constant::Str(s) => write!(f, "\"{}\"", crate::ast::escape_str(s)),
        }
    }
}

/// What a pointer points at. Targets are fully resolved at borrow time:
/// a plain place, one element of an array, or a subrange of an array.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PtrTarget {
    Place(Place),
    Indexed {
        base: Place,
        index: u32,
        /// Projection path within the element, for borrows of a component
        /// of an array element. Deref-free.
        path: Vec<PathElem>,
    },
    Sliced {
        base: Place,
        lo: u32,
        hi: u32,
    },
}

impl PtrTarget {
    /// The place whose ownership the pointer occupies. Indexing and slicing
    /// affect the ownership of the whole array, so conflicts are judged on
    /// the base place.
    pub fn base(&self) -> &Place {
        match self {
            PtrTarget::Place(p) => p,
            PtrTarget::Indexed { base, .. } | PtrTarget::Sliced { base, .. } => base,
        }
    }
}

impl fmt::Display for PtrTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PtrTarget::Place(p) => write!(f, "{p}"),
            PtrTarget::Indexed { base, index, path } => {
                write!(f, "{base}[{index}]")?;
                for elem in path {
                    write!(f, "{elem}")?;
                }
                Ok(())
            }
            PtrTarget::Sliced { base, lo, hi } => write!(f, "{base}[{lo}..{hi}]"),
        }
    }
}

/// A closure packaged with the store entries it captured.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosureData {
    pub captured: Vec<StoreGroup>,
    pub prov_params: Vec<String>,
    pub ty_params: Vec<String>,
    pub params: Vec<(String, Type)>,
    pub body: Expr,
}

impl fmt::Display for ClosureData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<closure")?;
        if !self.captured.is_empty() {
            f.write_str(" [")?;
            for (i, group) in self.captured.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(&group.root)?;
            }
            f.write_str("]")?;
        }
        f.write_str(" |")?;
        for (i, (name, ty)) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}: {ty}")?;
        }
        write!(f, "| {{ {} }}>", self.body)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Prim(Constant),
    Tuple(Vec<Value>),
    Struct {
        name: String,
        /// Fields in declaration order, each with its selector.
        fields: Vec<(PathElem, Value)>,
    },
    Array(Vec<Value>),
    Ptr(OwnQual, PtrTarget),
    Closure(Box<ClosureData>),
}

impl Value {
    pub fn unit() -> Value {
        Value::Prim(Constant::Unit)
    }

    pub fn num(n: u32) -> Value {
        Value::Prim(Constant::U32(n))
    }

    /// Whether a copy of this value is indistinguishable from the original:
    /// nothing inside demands uniqueness. Mirrors the static notion on the
    /// value side; strings move like their static type says.
    pub fn is_copyable(&self) -> bool {
        match self {
            Value::Prim(Constant::Str(_)) => false,
            Value::Prim(_) => true,
            Value::Tuple(vs) | Value::Array(vs) => vs.iter().all(Value::is_copyable),
            Value::Struct { fields, .. } => fields.iter().all(|(_, v)| v.is_copyable()),
            Value::Ptr(q, _) => *q == OwnQual::Shrd,
            Value::Closure(data) => data.captured.is_empty(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Prim(c) => write!(f, "{c}"),
            Value::Tuple(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                if vs.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            Value::Struct { name, fields } => {
                let named = fields
                    .iter()
                    .any(|(sel, _)| matches!(sel, PathElem::Field(_)));
                f.write_str(name)?;
                if named {
                    f.write_str(" { ")?;
                    for (i, (sel, v)) in fields.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        match sel {
                            PathElem::Field(fname) => write!(f, "{fname}: {v}")?,
                            _ => write!(f, "{v}")?,
                        }
                    }
                    f.write_str(" }")
                } else {
                    f.write_str("(")?;
                    for (i, (_, v)) in fields.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    f.write_str(")")
                }
            }
            Value::Array(vs) => {
                f.write_str("[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Ptr(q, tgt) => write!(f, "&{q} {tgt}"),
            Value::Closure(data) => write!(f, "{data}"),
        }
    }
}

/// One level of a value. Components of tuples and structs are holes; the
/// component contents live at their own places.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Prim(Constant),
    /// Tuple of the given arity with a hole at each component.
    Tuple(usize),
    Struct {
        name: String,
        selectors: Vec<PathElem>,
    },
    /// Arrays are one shape: elements are not individually addressable.
    Array(Vec<Value>),
    Ptr(OwnQual, PtrTarget),
    Closure(Box<ClosureData>),
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const HOLE: &str = "\u{25a1}"; // □
        match self {
            Shape::Prim(c) => write!(f, "{c}"),
            Shape::Tuple(n) => {
                f.write_str("(")?;
                for i in 0..*n {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(HOLE)?;
                }
                if *n == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            Shape::Struct { name, selectors } => {
                write!(f, "{name}(")?;
                for (i, _) in selectors.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(HOLE)?;
                }
                f.write_str(")")
            }
            Shape::Array(vs) => {
                f.write_str("[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Shape::Ptr(q, tgt) => write!(f, "&{q} {tgt}"),
            Shape::Closure(data) => write!(f, "{data}"),
        }
    }
}

/// Flatten a value rooted at `root` into place/shape mappings: the root maps
/// to the value's one-level shape, and each aggregate component recursively
/// maps under the extended place.
pub fn places_val(root: &Place, v: &Value) -> Vec<(Place, Shape)> {
    match v {
        Value::Prim(c) => vec![(root.clone(), Shape::Prim(c.clone()))],
        Value::Tuple(vs) => {
            let mut out = vec![(root.clone(), Shape::Tuple(vs.len()))];
            for (i, elem) in vs.iter().enumerate() {
                out.extend(places_val(&root.proj(i), elem));
            }
            out
        }
        Value::Struct { name, fields } => {
            let selectors: Vec<PathElem> = fields.iter().map(|(sel, _)| sel.clone()).collect();
            let mut out = vec![(
                root.clone(),
                Shape::Struct {
                    name: name.clone(),
                    selectors,
                },
            )];
            for (sel, fv) in fields {
                out.extend(places_val(&root.extend(sel.clone()), fv));
            }
            out
        }
        Value::Array(vs) => vec![(root.clone(), Shape::Array(vs.clone()))],
        Value::Ptr(q, tgt) => vec![(root.clone(), Shape::Ptr(*q, tgt.clone()))],
        Value::Closure(data) => vec![(root.clone(), Shape::Closure(data.clone()))],
    }
}

/// The runtime stack σ: places mapped to shapes, grouped per binding so pop
/// removes exactly the most recent collection of places rooted at a name.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Store {
    groups: Vec<StoreGroup>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoreGroup {
    pub root: String,
    pub entries: Vec<(Place, Shape)>,
}

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.entries.len()).sum()
    }

    pub fn groups(&self) -> &[StoreGroup] {
        &self.groups
    }

    pub fn push_group(&mut self, root: impl Into<String>, entries: Vec<(Place, Shape)>) {
        self.groups.push(StoreGroup {
            root: root.into(),
            entries,
        });
    }

    pub fn push_store_group(&mut self, group: StoreGroup) {
        self.groups.push(group);
    }

    pub fn pop_group(&mut self, root: &str) -> Option<StoreGroup> {
        let idx = self.groups.iter().rposition(|g| g.root == root)?;
        Some(self.groups.remove(idx))
    }

    pub fn group_of(&self, root: &str) -> Option<&StoreGroup> {
        self.groups.iter().rev().find(|g| g.root == root)
    }

    pub fn contains_root(&self, root: &str) -> bool {
        self.group_of(root).is_some()
    }

    pub fn lookup(&self, place: &Place) -> Option<&Shape> {
        let group = self.group_of(&place.root)?;
        group
            .entries
            .iter()
            .rev()
            .find(|(p, _)| p == place)
            .map(|(_, s)| s)
    }

    /// Remove the chain through `place` in its most recent group: the place,
    /// its descendants, and the ancestors that contain it.
    pub fn remove_chain(&mut self, place: &Place) {
        use crate::ast::place::prefix_of;
        if let Some(idx) = self.groups.iter().rposition(|g| g.root == place.root) {
            self.groups[idx]
                .entries
                .retain(|(p, _)| !prefix_of(place, p) && !prefix_of(p, place));
            if self.groups[idx].entries.is_empty() {
                self.groups.remove(idx);
            }
        }
    }

    /// Remove only `place` and its descendants, keeping ancestors intact.
    /// This is what a move does: the containing aggregate keeps its hole.
    pub fn remove_subtree(&mut self, place: &Place) {
        use crate::ast::place::prefix_of;
        if let Some(idx) = self.groups.iter().rposition(|g| g.root == place.root) {
            self.groups[idx].entries.retain(|(p, _)| !prefix_of(place, p));
            if self.groups[idx].entries.is_empty() {
                self.groups.remove(idx);
            }
        }
    }

    /// Overwrite the chain rooted at `place` with fresh entries, splicing at
    /// the old position.
    pub fn replace_chain(&mut self, place: &Place, new_entries: Vec<(Place, Shape)>) {
        use crate::ast::place::prefix_of;
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

    /// Overwrite the element at `index` (or the component of it named by
    /// `path`) of the array stored at `base`.
    pub fn update_array(
        &mut self,
        base: &Place,
        index: usize,
        path: &[PathElem],
        v: Value,
    ) -> Result<(), String> {
        let idx = self
            .groups
            .iter()
            .rposition(|g| g.root == base.root)
            .ok_or_else(|| format!("`{base}` is not on the stack"))?;
        let entry = self.groups[idx]
            .entries
            .iter_mut()
            .rev()
            .find(|(p, _)| p == base)
            .ok_or_else(|| format!("`{base}` is not on the stack"))?;
        let Shape::Array(values) = &mut entry.1 else {
            return Err(format!("expected an array at `{base}`"));
        };
        let len = values.len();
        let slot = values
            .get_mut(index)
            .ok_or_else(|| format!("index {index} out of the array at `{base}` (len {len})"))?;
        let mut cur = slot;
        for elem in path {
            cur = match (elem, cur) {
                (PathElem::TupleProj(i), Value::Tuple(vs)) => vs
                    .get_mut(*i)
                    .ok_or_else(|| format!("no component {i} in tuple value"))?,
                (sel, Value::Struct { fields, .. }) => fields
                    .iter_mut()
                    .find(|(s, _)| s == sel)
                    .map(|(_, v)| v)
                    .ok_or_else(|| format!("no field `{sel}` in struct value"))?,
                (elem, _) => return Err(format!("cannot project `{elem}` in array element")),
            };
        }
        *cur = v;
        Ok(())
    }

    /// Reassemble the full value rooted at `place`; inverse of `places_val`
    /// on its image. Fails with the missing place when a component is gone.
    pub fn valuify(&self, place: &Place) -> Result<Value, Place> {
        let shape = self.lookup(place).ok_or_else(|| place.clone())?;
        match shape {
            Shape::Prim(c) => Ok(Value::Prim(c.clone())),
            Shape::Tuple(n) => {
                let mut vs = Vec::with_capacity(*n);
                for i in 0..*n {
                    vs.push(self.valuify(&place.proj(i))?);
                }
                Ok(Value::Tuple(vs))
            }
            Shape::Struct { name, selectors } => {
                let mut fields = Vec::with_capacity(selectors.len());
                for sel in selectors {
                    let v = self.valuify(&place.extend(sel.clone()))?;
                    fields.push((sel.clone(), v));
                }
                Ok(Value::Struct {
                    name: name.clone(),
                    fields,
                })
            }
            Shape::Array(vs) => Ok(Value::Array(vs.clone())),
            Shape::Ptr(q, tgt) => Ok(Value::Ptr(*q, tgt.clone())),
            Shape::Closure(data) => Ok(Value::Closure(data.clone())),
        }
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        let mut first = true;
        for group in &self.groups {
            for (place, shape) in &group.entries {
                if !first {
                    f.write_str(", ")?;
                }
                first = false;
                write!(f, "{place} \u{21a6} {shape}")?; // ↦
            }
        }
        f.write_str("]")
    }
}

/// Embed a value back into expression syntax, as reduction requires.
pub fn value_to_expr(v: Value) -> Expr {
    match v {
        Value::Prim(Constant::Unit) => Expr::synth(ExprKind::Unit),
        Value::Prim(Constant::U32(n)) => Expr::synth(ExprKind::Num(n)),
        Value::Prim(Constant::Bool(b)) => Expr::synth(ExprKind::Bool(b)),
        Value::Prim(Constant::Str(s)) => Expr::synth(ExprKind::Str(s)),
        Value::Tuple(vs) => Expr::synth(ExprKind::Tuple(
            vs.into_iter().map(value_to_expr).collect(),
        )),
        Value::Struct { name, fields } => {
            let named = fields
                .iter()
                .any(|(sel, _)| matches!(sel, PathElem::Field(_)));
            let ctor = if named {
                CtorFields::Named(
                    fields
                        .into_iter()
                        .map(|(sel, v)| match sel {
                            PathElem::Field(f) => (f, value_to_expr(v)),
                            _ => (String::new(), value_to_expr(v)),
                        })
                        .collect(),
                )
            } else {
                CtorFields::Positional(fields.into_iter().map(|(_, v)| value_to_expr(v)).collect())
            };
            Expr::synth(ExprKind::StructCtor {
                name,
                prov_args: Vec::new(),
                ty_args: Vec::new(),
                fields: ctor,
            })
        }
        Value::Array(vs) => Expr::synth(ExprKind::ArrayLit(
            vs.into_iter().map(value_to_expr).collect(),
        )),
        Value::Ptr(q, tgt) => Expr::synth(ExprKind::PtrVal(q, tgt)),
        Value::Closure(data) => Expr::synth(ExprKind::ClosureVal(data)),
    }
}

/// Read a fully evaluated expression back as a value.
pub fn expr_to_value(e: &Expr) -> Option<Value> {
    match &e.kind {
        ExprKind::Unit => Some(Value::Prim(Constant::Unit)),
        ExprKind::Num(n) => Some(Value::Prim(Constant::U32(*n))),
        ExprKind::Bool(b) => Some(Value::Prim(Constant::Bool(*b))),
        ExprKind::Str(s) => Some(Value::Prim(Constant::Str(s.clone()))),
        ExprKind::Tuple(es) => {
            let vs: Option<Vec<Value>> = es.iter().map(expr_to_value).collect();
            Some(Value::Tuple(vs?))
        }
        ExprKind::ArrayLit(es) => {
            let vs: Option<Vec<Value>> = es.iter().map(expr_to_value).collect();
            Some(Value::Array(vs?))
        }
        ExprKind::StructCtor { name, fields, .. } => {
            let pairs: Option<Vec<(PathElem, Value)>> = match fields {
                CtorFields::Positional(es) => es
                    .iter()
                    .enumerate()
                    .map(|(i, e)| Some((PathElem::TupleProj(i), expr_to_value(e)?)))
                    .collect(),
                CtorFields::Named(fs) => fs
                    .iter()
                    .map(|(f, e)| Some((PathElem::Field(f.clone()), expr_to_value(e)?)))
                    .collect(),
            };
            Some(Value::Struct {
                name: name.clone(),
                fields: pairs?,
            })
        }
        ExprKind::PtrVal(q, tgt) => Some(Value::Ptr(*q, tgt.clone())),
        ExprKind::ClosureVal(data) => Some(Value::Closure(data.clone())),
        _ => None,
    }
}
