//! Density-matrix global state: allocation, operator application and
//! projective measurement on arbitrary ordered register subsets.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::types::TypeExpr;

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;

/// Absolute tolerance for probabilities, traces and matrix comparisons.
pub const TOL: f64 = 1e-9;

/// Matrices at or above this order use the parallel kernel by default.
pub const PAR_THRESHOLD: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("dimension mismatch: operator acts on {expected:?}, targets have {found:?}")]
    DimensionMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("register {0} does not exist")]
    NoSuchRegister(usize),
    #[error("register {0} targeted twice")]
    DuplicateTarget(usize),
}

/// Kernel execution strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Exec {
    pub fn auto(order: usize) -> Exec {
        if cfg!(feature = "parallel") && order >= PAR_THRESHOLD {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// A quantum operation given by Kraus operators; a unitary has exactly one.
#[derive(Clone, Debug)]
pub struct Operator {
    pub kraus: Vec<Matrix>,
    pub dims: Vec<usize>,
}

impl Operator {
    pub fn unitary(m: Matrix, dims: Vec<usize>) -> Self {
        Operator { kraus: vec![m], dims }
    }

    pub fn order(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Spectral decomposition of a measurement: orthogonal projectors together
/// with the reported outcome of each (the first index of its eigenvalue).
#[derive(Clone, Debug)]
pub struct Observable {
    pub projectors: Vec<Matrix>,
    pub outcomes: Vec<i64>,
}

impl Observable {
    /// Rank-one projectors onto the columns of `vectors`, outcomes 0, 1, ...
    pub fn from_vectors(vectors: &Matrix) -> Self {
        let n = vectors.ncols();
        let projectors = (0..n)
            .map(|i| {
                let v = vectors.column(i).into_owned();
                &v * v.adjoint()
            })
            .collect();
        Observable { projectors, outcomes: (0..n as i64).collect() }
    }

    /// Groups equal eigenvalues of `Σ λ_i |v_i⟩⟨v_i|` into one projector each;
    /// the outcome of a group is the first index of its eigenvalue.
    pub fn from_eigen(eigenvalues: &[f64], vectors: &Matrix) -> Self {
        let mut projectors: Vec<Matrix> = Vec::new();
        let mut outcomes = Vec::new();
        let mut seen: Vec<f64> = Vec::new();
        for (i, &l) in eigenvalues.iter().enumerate() {
            let v = vectors.column(i).into_owned();
            let p = &v * v.adjoint();
            match seen.iter().position(|&s| (s - l).abs() <= TOL) {
                Some(g) => projectors[g] += p,
                None => {
                    seen.push(l);
                    projectors.push(p);
                    outcomes.push(i as i64);
                }
            }
        }
        Observable { projectors, outcomes }
    }

    pub fn order(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }

    pub fn computational(d: usize) -> Self {
        Self::from_vectors(&Matrix::identity(d, d))
    }

    /// Bell basis ordered Φ⁺, Ψ⁺, Φ⁻, Ψ⁻.
    pub fn bell() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = |x: f64| C64::new(x * s, 0.0);
        #[rustfmt::skip]
        let v = Matrix::from_row_slice(4, 4, &[
            r(1.0), r(0.0), r(1.0), r(0.0),
            r(0.0), r(1.0), r(0.0), r(1.0),
            r(0.0), r(1.0), r(0.0), r(-1.0),
            r(1.0), r(0.0), r(-1.0), r(0.0),
        ]);
        Self::from_vectors(&v)
    }
}

/// A named measurement basis; the computational basis adapts to any order.
#[derive(Clone, Debug)]
pub enum Basis {
    Computational,
    Fixed(Observable),
}

impl Basis {
    pub fn observable(&self, order: usize) -> Result<Observable, QuantumError> {
        match self {
            Basis::Computational => Ok(Observable::computational(order)),
            Basis::Fixed(o) if o.order() == order => Ok(o.clone()),
            Basis::Fixed(o) => Err(QuantumError::DimensionMismatch {
                expected: vec![o.order()],
                found: vec![order],
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelRecord {
    pub element: TypeExpr,
}

/// ρ with its register dimension list, plus the channel table.
#[derive(Clone, Debug)]
pub struct GlobalState {
    pub rho: Arc<Matrix>,
    pub dims: Vec<usize>,
    pub channels: Vec<ChannelRecord>,
}

impl Default for GlobalState {
    fn default() -> Self {
        Self::new()
    }
}

/// One measurement outcome.
#[derive(Clone, Debug)]
pub struct MeasureBranch {
    pub probability: f64,
    pub state: GlobalState,
    pub outcome: i64,
}

impl GlobalState {
    /// ρ = (1), no registers, no channels.
    pub fn new() -> Self {
        GlobalState {
            rho: Arc::new(Matrix::from_element(1, 1, C64::new(1.0, 0.0))),
            dims: Vec::new(),
            channels: Vec::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.rho.nrows()
    }

    /// Appends a maximally mixed register of dimension `d`; returns its index.
    pub fn alloc_q(&mut self, d: usize) -> usize {
        let mixed = Matrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        self.rho = Arc::new(self.rho.kronecker(&mixed));
        self.dims.push(d);
        self.dims.len() - 1
    }

    pub fn alloc_channel(&mut self, element: TypeExpr) -> usize {
        self.channels.push(ChannelRecord { element });
        self.channels.len() - 1
    }

    fn check_targets(&self, targets: &[usize]) -> Result<Vec<usize>, QuantumError> {
        let mut seen = vec![false; self.dims.len()];
        let mut found = Vec::with_capacity(targets.len());
        for &t in targets {
            if t >= self.dims.len() {
                return Err(QuantumError::NoSuchRegister(t));
            }
            if seen[t] {
                return Err(QuantumError::DuplicateTarget(t));
            }
            seen[t] = true;
            found.push(self.dims[t]);
        }
        Ok(found)
    }

    pub fn apply_operator(&self, op: &Operator, targets: &[usize]) -> Result<Self, QuantumError> {
        self.apply_operator_with(op, targets, Exec::auto(self.order()))
    }

    pub fn apply_operator_with(
        &self,
        op: &Operator,
        targets: &[usize],
        exec: Exec,
    ) -> Result<Self, QuantumError> {
        let found = self.check_targets(targets)?;
        if found != op.dims {
            return Err(QuantumError::DimensionMismatch { expected: op.dims.clone(), found });
        }
        let sigma = permutation(&self.dims, targets);
        let x = permute(&self.rho, &sigma);
        let dq = op.order();
        let mut acc = Matrix::zeros(x.nrows(), x.ncols());
        for k in &op.kraus {
            acc += conjugate_block(k, &x, dq, exec);
        }
        Ok(GlobalState {
            rho: Arc::new(unpermute(&acc, &sigma)),
            dims: self.dims.clone(),
            channels: self.channels.clone(),
        })
    }

    /// Outcomes with probability above [`TOL`], post-states normalized.
    pub fn measure(&self, basis: &Basis, targets: &[usize]) -> Result<Vec<MeasureBranch>, QuantumError> {
        self.measure_with(basis, targets, Exec::auto(self.order()))
    }

    pub fn measure_with(
        &self,
        basis: &Basis,
        targets: &[usize],
        exec: Exec,
    ) -> Result<Vec<MeasureBranch>, QuantumError> {
        let found = self.check_targets(targets)?;
        let dq: usize = found.iter().product();
        let obs = basis.observable(dq)?;
        let sigma = permutation(&self.dims, targets);
        let x = permute(&self.rho, &sigma);
        let mut out = Vec::new();
        for (p, &outcome) in obs.projectors.iter().zip(&obs.outcomes) {
            let post = conjugate_block(p, &x, dq, exec);
            let prob = post.trace().re;
            if prob > TOL {
                let rho = unpermute(&post, &sigma) / C64::new(prob, 0.0);
                out.push(MeasureBranch {
                    probability: prob,
                    state: GlobalState {
                        rho: Arc::new(rho),
                        dims: self.dims.clone(),
                        channels: self.channels.clone(),
                    },
                    outcome,
                });
            }
        }
        Ok(out)
    }

    /// Reduced density matrix of `keep` (in the given order).
    pub fn reduced(&self, keep: &[usize]) -> Result<Matrix, QuantumError> {
        let found = self.check_targets(keep)?;
        let dq: usize = found.iter().product();
        let sigma = permutation(&self.dims, keep);
        let x = permute(&self.rho, &sigma);
        let dbar = x.nrows() / dq;
        Ok(Matrix::from_fn(dq, dq, |a, b| {
            (0..dbar).map(|r| x[(a * dbar + r, b * dbar + r)]).sum()
        }))
    }

    /// Same registers, channels, and ρ within `tol` (max-abs entrywise).
    pub fn approx_eq(&self, other: &GlobalState, tol: f64) -> bool {
        self.dims == other.dims
            && self.channels == other.channels
            && max_abs_diff(&self.rho, &other.rho) <= tol
    }
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `sigma[i]` is the original basis index placed at position `i` once the
/// registers in `targets` are moved to the front (in order), the rest
/// following in their original order.
pub fn permutation(dims: &[usize], targets: &[usize]) -> Vec<usize> {
    let n = dims.len();
    let mut stride = vec![1usize; n];
    for j in (0..n.saturating_sub(1)).rev() {
        stride[j] = stride[j + 1] * dims[j + 1];
    }
    let mut order: Vec<usize> = targets.to_vec();
    order.extend((0..n).filter(|j| !targets.contains(j)));
    let total: usize = dims.iter().product();
    let mut sigma = vec![0usize; total];
    for (i, s) in sigma.iter_mut().enumerate() {
        let mut rem = i;
        let mut orig = 0;
        for &reg in order.iter().rev() {
            let d = dims[reg];
            orig += (rem % d) * stride[reg];
            rem /= d;
        }
        *s = orig;
    }
    sigma
}

fn permute(rho: &Matrix, sigma: &[usize]) -> Matrix {
    let d = sigma.len();
    Matrix::from_fn(d, d, |i, j| rho[(sigma[i], sigma[j])])
}

fn unpermute(x: &Matrix, sigma: &[usize]) -> Matrix {
    let d = sigma.len();
    let mut out = Matrix::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            out[(sigma[i], sigma[j])] = x[(i, j)];
        }
    }
    out
}

/// `(K ⊗ I) X (K ⊗ I)†` with `K` of order `dq`.
pub fn conjugate_block(k: &Matrix, x: &Matrix, dq: usize, exec: Exec) -> Matrix {
    let y = apply_left(k, x, dq, exec);
    apply_left(k, &y.adjoint(), dq, exec).adjoint()
}

/// `(K ⊗ I) X`, computed column by column.
pub fn apply_left(k: &Matrix, x: &Matrix, dq: usize, exec: Exec) -> Matrix {
    let d = x.nrows();
    let dbar = d / dq;
    let mut out = Matrix::zeros(d, x.ncols());
    let column = |src: &[C64], dst: &mut [C64]| {
        for a in 0..dq {
            for r in 0..dbar {
                let mut s = C64::new(0.0, 0.0);
                for b in 0..dq {
                    s += k[(a, b)] * src[b * dbar + r];
                }
                dst[a * dbar + r] = s;
            }
        }
    };
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            out.as_mut_slice()
                .par_chunks_mut(d)
                .zip(x.as_slice().par_chunks(d))
                .for_each(|(dst, src)| column(src, dst));
        }
        _ => {
            out.as_mut_slice()
                .chunks_mut(d)
                .zip(x.as_slice().chunks(d))
                .for_each(|(dst, src)| column(src, dst));
        }
    }
    out
}

/// Row-major `[re, im]` pairs.
pub fn matrix_json(m: &Matrix) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = (0..m.nrows())
        .map(|i| {
            let row: Vec<[f64; 2]> = (0..m.ncols()).map(|j| [m[(i, j)].re + 0.0, m[(i, j)].im + 0.0]).collect();
            serde_json::json!(row)
        })
        .collect();
    serde_json::Value::Array(rows)
}

/// Fixed single- and two-qubit gates.
pub mod gates {
    use super::{Matrix, C64};

    fn real(n: usize, xs: &[f64]) -> Matrix {
        Matrix::from_row_slice(n, n, &xs.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    pub fn i2() -> Matrix {
        Matrix::identity(2, 2)
    }

    pub fn x() -> Matrix {
        real(2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> Matrix {
        let z = C64::new(0.0, 0.0);
        Matrix::from_row_slice(2, 2, &[z, C64::new(0.0, -1.0), C64::new(0.0, 1.0), z])
    }

    pub fn z() -> Matrix {
        real(2, &[1.0, 0.0, 0.0, -1.0])
    }

    pub fn h() -> Matrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        real(2, &[s, s, s, -s])
    }

    pub fn cnot() -> Matrix {
        #[rustfmt::skip]
        let m = real(4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ]);
        m
    }
}
