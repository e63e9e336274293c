use std::fmt;

use serde::Serialize;

/// Ground and constructed types of the language.
///
/// Tensor types are kept right-nested over basic quantum factors; use
/// [`TypeExpr::tensor`] to build them so that structural equality coincides
/// with equality of the flattened factor lists.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TypeExpr {
    Void,
    Int,
    Bool,
    Qudit(usize),
    Channel(Box<TypeExpr>),
    ChannelEnd(Box<TypeExpr>),
    Tensor(Box<TypeExpr>, Box<TypeExpr>),
    MeasurementBasis,
    Ref,
    RtErr,
}

impl TypeExpr {
    pub fn qbit() -> Self {
        TypeExpr::Qudit(2)
    }

    pub fn channel(t: TypeExpr) -> Self {
        TypeExpr::Channel(Box::new(t))
    }

    pub fn channel_end(t: TypeExpr) -> Self {
        TypeExpr::ChannelEnd(Box::new(t))
    }

    /// Right-nested tensor of the flattened factors of `a` and `b`.
    pub fn tensor(a: TypeExpr, b: TypeExpr) -> Self {
        let mut fs = a.into_factors();
        fs.extend(b.into_factors());
        Self::tensor_of(fs).expect("two factors")
    }

    /// Right-nested tensor of a non-empty factor list.
    pub fn tensor_of(factors: Vec<TypeExpr>) -> Option<Self> {
        let mut flat = Vec::new();
        for f in factors {
            flat.extend(f.into_factors());
        }
        let mut it = flat.into_iter().rev();
        let mut acc = it.next()?;
        for f in it {
            acc = TypeExpr::Tensor(Box::new(f), Box::new(acc));
        }
        Some(acc)
    }

    fn into_factors(self) -> Vec<TypeExpr> {
        match self {
            TypeExpr::Tensor(a, b) => {
                let mut v = a.into_factors();
                v.extend(b.into_factors());
                v
            }
            t => vec![t],
        }
    }

    /// Flattened tensor factors (a single element for non-tensor types).
    pub fn factors(&self) -> Vec<&TypeExpr> {
        match self {
            TypeExpr::Tensor(a, b) => {
                let mut v = a.factors();
                v.extend(b.factors());
                v
            }
            t => vec![t],
        }
    }

    pub fn is_quantum(&self) -> bool {
        match self {
            TypeExpr::Qudit(_) => true,
            TypeExpr::Tensor(a, b) => a.is_quantum() && b.is_quantum(),
            _ => false,
        }
    }

    /// Per-register dimensions of a quantum type.
    pub fn dims(&self) -> Option<Vec<usize>> {
        self.factors()
            .into_iter()
            .map(|f| match f {
                TypeExpr::Qudit(d) => Some(*d),
                _ => None,
            })
            .collect()
    }

    pub fn total_dim(&self) -> Option<usize> {
        self.dims().map(|d| d.iter().product())
    }

    /// Quantum-type congruence: equal flattened dimension lists.
    pub fn congruent(&self, other: &TypeExpr) -> bool {
        match (self.dims(), other.dims()) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    /// Types whose values may not be duplicated: quantum systems, channels and ends.
    pub fn is_nonduplicable(&self) -> bool {
        self.is_quantum() || matches!(self, TypeExpr::Channel(_) | TypeExpr::ChannelEnd(_))
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Void => f.write_str("void"),
            TypeExpr::Int => f.write_str("int"),
            TypeExpr::Bool => f.write_str("bool"),
            TypeExpr::Qudit(2) => f.write_str("qbit"),
            TypeExpr::Qudit(3) => f.write_str("qtrit"),
            TypeExpr::Qudit(d) => write!(f, "q{d}it"),
            TypeExpr::Channel(t) => write!(f, "channel[{t}]"),
            TypeExpr::ChannelEnd(t) => write!(f, "channelEnd[{t}]"),
            TypeExpr::Tensor(a, b) => write!(f, "{a} ⊗ {b}"),
            TypeExpr::MeasurementBasis => f.write_str("MeasurementBasis"),
            TypeExpr::Ref => f.write_str("Ref"),
            TypeExpr::RtErr => f.write_str("RTErr"),
        }
    }
}
