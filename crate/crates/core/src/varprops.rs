//! Scoped variable properties and quantum alias assignment.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::memory::{LocalMemoryState, QList, RecList, Ref, Value};
use crate::name::Name;
use crate::types::TypeExpr;

/// One block scope: variable references, channel ends, alias subsystems, types.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct VarTuple {
    pub var: BTreeMap<Name, Ref>,
    pub ch: BTreeMap<Name, (Name, Name)>,
    pub qa: BTreeMap<Name, Vec<Name>>,
    pub ty: BTreeMap<Name, TypeExpr>,
}

impl VarTuple {
    pub fn is_empty(&self) -> bool {
        self.var.is_empty() && self.ch.is_empty() && self.qa.is_empty() && self.ty.is_empty()
    }
}

/// A stack of method frames, each a stack of block-scope tuples.
/// The last frame is the running method; the last tuple is the newest scope.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct VarProps {
    frames: Vec<Vec<VarTuple>>,
}

impl VarProps {
    /// The empty stack ■.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Vec<VarTuple>] {
        &self.frames
    }

    pub fn push_frame(&mut self, frame: Vec<VarTuple>) {
        self.frames.push(frame);
    }

    pub fn pop_frame(&mut self) -> Option<Vec<VarTuple>> {
        self.frames.pop()
    }

    /// Opens a block scope (◊) in the running frame.
    pub fn push_scope(&mut self) -> bool {
        match self.frames.last_mut() {
            Some(f) => {
                f.push(VarTuple::default());
                true
            }
            None => false,
        }
    }

    pub fn pop_scope(&mut self) -> Option<VarTuple> {
        self.frames.last_mut()?.pop()
    }

    pub fn scope_depth(&self) -> usize {
        self.frames.last().map_or(0, Vec::len)
    }

    fn lookup<T>(&self, f: impl Fn(&VarTuple) -> Option<&T>) -> Option<&T> {
        self.frames.last()?.iter().rev().find_map(f)
    }

    pub fn var_ref(&self, x: &str) -> Option<&Ref> {
        self.lookup(|t| t.var.get(x))
    }

    pub fn chan_ends(&self, x: &str) -> Option<&(Name, Name)> {
        self.lookup(|t| t.ch.get(x))
    }

    pub fn alias_subsyst(&self, x: &str) -> Option<&Vec<Name>> {
        self.lookup(|t| t.qa.get(x))
    }

    pub fn type_of(&self, x: &str) -> Option<&TypeExpr> {
        self.lookup(|t| t.ty.get(x))
    }

    fn newest(&mut self) -> Option<&mut VarTuple> {
        self.frames.last_mut()?.last_mut()
    }

    fn defining(&mut self, pred: impl Fn(&VarTuple) -> bool) -> Option<&mut VarTuple> {
        self.frames.last_mut()?.iter_mut().rev().find(|t| pred(t))
    }

    /// Replacement `vp[x ↦ r]_var`: rewrites the newest tuple defining `x`.
    pub fn replace_var(&mut self, x: &Name, r: Ref) {
        if let Some(t) = self.defining(|t| t.var.contains_key(x)) {
            t.var.insert(x.clone(), r);
        }
    }

    /// Update `vp[x ↦ r]+_var` on the newest tuple.
    pub fn update_var(&mut self, x: &Name, r: Ref) {
        if let Some(t) = self.newest() {
            t.var.insert(x.clone(), r);
        }
    }

    pub fn update_type(&mut self, x: &Name, ty: TypeExpr) {
        if let Some(t) = self.newest() {
            t.ty.insert(x.clone(), ty);
        }
    }

    pub fn update_ch(&mut self, x: &Name, ends: (Name, Name)) {
        if let Some(t) = self.newest() {
            t.ch.insert(x.clone(), ends);
        }
    }

    pub fn update_qa(&mut self, x: &Name, parts: Vec<Name>) {
        if let Some(t) = self.newest() {
            t.qa.insert(x.clone(), parts);
        }
    }

    /// Names with alias bindings in the running frame.
    pub fn local_aliased_vars(&self) -> BTreeSet<Name> {
        self.frames
            .last()
            .map(|f| f.iter().flat_map(|t| t.qa.keys().cloned()).collect())
            .unwrap_or_default()
    }

    /// Typing context of the running frame; newer scopes win.
    pub fn context(&self) -> BTreeMap<Name, TypeExpr> {
        let mut g = BTreeMap::new();
        if let Some(f) = self.frames.last() {
            for t in f {
                for (k, v) in &t.ty {
                    g.insert(k.clone(), v.clone());
                }
            }
        }
        g
    }
}

pub fn composite_value(lms: &LocalMemoryState, comps: &[QList], whole: &QList) -> Value {
    let dead = comps.iter().any(|c| {
        matches!(lms.q.get(c), None | Some(Value::Bot))
    });
    match whole.linearize_bot() {
        Some(ls) if !dead => Value::GQuantum(ls),
        _ => Value::Bot,
    }
}

/// Assignment of reference `q` to the proper quantum variable `name`,
/// followed by rebinding of every alias that has `name` as a subsystem.
pub fn assign_q_system(lms: &mut LocalMemoryState, vp: &mut VarProps, name: &Name, q: &QList) {
    let key = Ref::Quantum(q.clone());
    let gq = match q.linearize_bot() {
        Some(ls) if lms.get(&key) != Some(Value::Bot) => Value::GQuantum(ls),
        _ => Value::Bot,
    };
    lms.update(&key, gq);
    vp.replace_var(name, key);

    for alias in vp.local_aliased_vars() {
        let parts = match vp.alias_subsyst(&alias) {
            Some(p) => p.clone(),
            None => continue,
        };
        for (index, part) in parts.iter().enumerate() {
            if part != name {
                continue;
            }
            let old = match vp.var_ref(&alias) {
                Some(Ref::Quantum(l)) => l.clone(),
                _ => continue,
            };
            let mut comps = old.components();
            if index >= comps.len() {
                continue;
            }
            comps[index] = q.clone();
            let new = RecList::Nested(comps.clone());
            if let Some(v) = lms.q.get_mut(&old) {
                *v = Value::Bot;
            }
            let gq = composite_value(lms, &comps, &new);
            lms.update(&Ref::Quantum(new.clone()), gq);
            vp.replace_var(&alias, Ref::Quantum(new));
        }
    }
}

/// Splits a composite reference over the subsystems of an alias. Uses the
/// top-level components when their count matches, else chunks the leaves by
/// the number of registers in each subsystem's type.
pub fn split_for_alias(vp: &VarProps, parts: &[Name], q: &QList) -> Vec<QList> {
    let comps = q.components();
    if comps.len() == parts.len() {
        return comps;
    }
    let leaves = q.linearize();
    let mut out = Vec::with_capacity(parts.len());
    let mut at = 0;
    for p in parts {
        let n = vp.type_of(p).and_then(TypeExpr::dims).map_or(1, |d| d.len());
        let end = (at + n).min(leaves.len());
        out.push(RecList::Flat(leaves[at..end].to_vec()));
        at = end;
    }
    out
}

/// Assignment of reference `q` to the alias `name`: component-wise
/// assignment to each subsystem.
pub fn assign_q_alias(lms: &mut LocalMemoryState, vp: &mut VarProps, name: &Name, q: &QList) {
    let parts = match vp.alias_subsyst(name) {
        Some(p) => p.clone(),
        None => return,
    };
    let pieces = split_for_alias(vp, &parts, q);
    for (part, piece) in parts.iter().zip(pieces.iter()) {
        assign_q_system(lms, vp, part, piece);
    }
}
