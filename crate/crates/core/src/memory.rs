//! Recursive reference lists and the per-process memory quadruple.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::name::Name;

/// A recursive list: either a flat list of elements or a list of recursive lists.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RecList<T> {
    Flat(Vec<T>),
    Nested(Vec<RecList<T>>),
}

impl<T: Clone> RecList<T> {
    pub fn single(x: T) -> Self {
        RecList::Flat(vec![x])
    }

    /// Depth-first concatenation of the flat leaves.
    pub fn linearize(&self) -> Vec<T> {
        let mut out = Vec::new();
        self.linearize_into(&mut out);
        out
    }

    fn linearize_into(&self, out: &mut Vec<T>) {
        match self {
            RecList::Flat(xs) => out.extend(xs.iter().cloned()),
            RecList::Nested(ls) => ls.iter().for_each(|l| l.linearize_into(out)),
        }
    }

    pub fn rec_len(&self) -> usize {
        match self {
            RecList::Flat(xs) => xs.len(),
            RecList::Nested(ls) => ls.iter().map(RecList::rec_len).sum(),
        }
    }

    /// Top-level components; a flat list contributes one singleton per element.
    pub fn components(&self) -> Vec<RecList<T>> {
        match self {
            RecList::Flat(xs) => xs.iter().cloned().map(RecList::single).collect(),
            RecList::Nested(ls) => ls.clone(),
        }
    }

    pub fn concat(&self, other: &RecList<T>) -> RecList<T> {
        match (self, other) {
            (RecList::Flat(a), RecList::Flat(b)) => {
                RecList::Flat(a.iter().chain(b.iter()).cloned().collect())
            }
            _ => {
                let mut cs = self.components();
                cs.extend(other.components());
                RecList::Nested(cs)
            }
        }
    }
}

impl<T: Clone + Ord> RecList<T> {
    pub fn rec_set(&self) -> BTreeSet<T> {
        self.linearize().into_iter().collect()
    }
}

/// Recursive lists over naturals extended with ⊥ (`None`).
pub type QList = RecList<Option<usize>>;

impl QList {
    /// `linearize` when no leaf is ⊥, otherwise ⊥.
    pub fn linearize_bot(&self) -> Option<Vec<usize>> {
        self.linearize().into_iter().collect()
    }

    pub fn of(indices: &[usize]) -> QList {
        RecList::Flat(indices.iter().map(|&i| Some(i)).collect())
    }
}

impl<T: fmt::Display> fmt::Display for RecList<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        match self {
            RecList::Flat(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
            }
            RecList::Nested(ls) => {
                for (i, l) in ls.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{l}")?;
                }
            }
        }
        f.write_str("]")
    }
}

/// Leaf printing helper: ⊥ for `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Leaf(pub Option<usize>);

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("⊥"),
        }
    }
}

fn show_qlist(l: &QList) -> String {
    fn go(l: &QList) -> RecList<Leaf> {
        match l {
            RecList::Flat(xs) => RecList::Flat(xs.iter().map(|&x| Leaf(x)).collect()),
            RecList::Nested(ls) => RecList::Nested(ls.iter().map(go).collect()),
        }
    }
    go(l).to_string()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ChanEnd {
    E0,
    E1,
}

impl ChanEnd {
    pub fn index(self) -> usize {
        match self {
            ChanEnd::E0 => 0,
            ChanEnd::E1 => 1,
        }
    }
}

/// Local memory references.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Ref {
    None,
    Classical(usize),
    Quantum(QList),
    Channel(usize),
    ChannelEnd(ChanEnd, usize),
}

impl Ref {
    pub fn is_none(&self) -> bool {
        matches!(self, Ref::None)
    }

    /// References to values that may not be duplicated.
    pub fn is_nonduplicable(&self) -> bool {
        matches!(self, Ref::Quantum(_) | Ref::Channel(_) | Ref::ChannelEnd(..))
    }
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::None => f.write_str("none"),
            Ref::Classical(n) => write!(f, "(Classical,{n})"),
            Ref::Quantum(l) => write!(f, "(Quantum,{})", show_qlist(l)),
            Ref::Channel(n) => write!(f, "(Channel,{n})"),
            Ref::ChannelEnd(e, n) => write!(f, "(ChannelEnd{},{n})", e.index()),
        }
    }
}

/// The value component of an internal value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Value {
    Bot,
    Int(i64),
    Bool(bool),
    Basis(Name),
    GQuantum(Vec<usize>),
    GChannel(usize),
}

impl Value {
    pub fn is_bot(&self) -> bool {
        matches!(self, Value::Bot)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bot => f.write_str("⊥"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Basis(n) => write!(f, "{n}"),
            Value::GQuantum(ls) => {
                let ls: Vec<String> = ls.iter().map(|l| l.to_string()).collect();
                write!(f, "(GQuantum,[{}])", ls.join(","))
            }
            Value::GChannel(n) => write!(f, "(GChannel,{n})"),
        }
    }
}

/// The four partial maps of a process memory. Absent keys are undefined;
/// a present `Value::Bot` is an unmapped (⊥) entry.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct LocalMemoryState {
    pub cl: BTreeMap<usize, Value>,
    pub q: BTreeMap<QList, Value>,
    pub ch: BTreeMap<usize, Value>,
    pub che: BTreeMap<(ChanEnd, usize), Value>,
}

impl LocalMemoryState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Combined lookup; `none` always reads ⊥, undefined keys read `None`.
    pub fn get(&self, r: &Ref) -> Option<Value> {
        match r {
            Ref::None => Some(Value::Bot),
            Ref::Classical(n) => self.cl.get(n).cloned(),
            Ref::Quantum(l) => self.q.get(l).cloned(),
            Ref::Channel(n) => self.ch.get(n).cloned(),
            Ref::ChannelEnd(e, n) => self.che.get(&(*e, *n)).cloned(),
        }
    }

    /// `lms[r ↦ v]+`; a no-op for `none`.
    pub fn update(&mut self, r: &Ref, v: Value) {
        match r {
            Ref::None => {}
            Ref::Classical(n) => {
                self.cl.insert(*n, v);
            }
            Ref::Quantum(l) => {
                self.q.insert(l.clone(), v);
            }
            Ref::Channel(n) => {
                self.ch.insert(*n, v);
            }
            Ref::ChannelEnd(e, n) => {
                self.che.insert((*e, *n), v);
            }
        }
    }

    /// Maps a received or inherited reference. A whole channel also brings
    /// both of its ends into scope.
    pub fn map_transferred(&mut self, r: &Ref, v: Value) {
        self.update(r, v.clone());
        if let Ref::Channel(n) = r {
            self.che.insert((ChanEnd::E0, *n), v.clone());
            self.che.insert((ChanEnd::E1, *n), v);
        }
    }

    /// Smallest classical index with no entry.
    pub fn fresh_classical(&self) -> usize {
        (0..).find(|n| !self.cl.contains_key(n)).expect("unbounded")
    }

    pub fn unmap_nd(&mut self, r: &Ref) {
        match r {
            Ref::Quantum(n) => self.unmap_q(n),
            Ref::Channel(n) => {
                replace(&mut self.ch, n);
                replace(&mut self.che, &(ChanEnd::E0, *n));
                replace(&mut self.che, &(ChanEnd::E1, *n));
            }
            Ref::ChannelEnd(e, n) => {
                replace(&mut self.ch, n);
                replace(&mut self.che, &(*e, *n));
            }
            Ref::None | Ref::Classical(_) => {}
        }
    }

    pub fn unmap_nd_all<'a>(&mut self, rs: impl IntoIterator<Item = &'a Ref>) {
        rs.into_iter().for_each(|r| self.unmap_nd(r));
    }

    fn unmap_q(&mut self, n: &QList) {
        let ns = n.rec_set();
        for (l, v) in self.q.iter_mut() {
            let ls = l.rec_set();
            if ns.intersection(&ls).any(|x| x.is_some()) {
                *v = Value::Bot;
            }
        }
    }
}

fn replace<K: Ord>(m: &mut BTreeMap<K, Value>, k: &K) {
    if let Some(v) = m.get_mut(k) {
        *v = Value::Bot;
    }
}
