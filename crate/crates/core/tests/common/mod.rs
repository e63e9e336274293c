#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use lanq_core::eval::tc::{type_configuration, ProcType};
use lanq_core::eval::{apply_move, Configuration, StepInfo};
use lanq_core::internal::MethodContext;
use lanq_core::program::load;
use lanq_core::quantum::{Matrix, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn read(rel: &str) -> String {
    fs::read_to_string(corpus_dir().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn load_rel(rel: &str) -> MethodContext {
    load(&read(rel)).unwrap_or_else(|e| panic!("{}", e.render(rel)))
}

/// `.lq` files of a corpus subdirectory ("" for the top level), sorted.
pub fn list(sub: &str) -> Vec<String> {
    let dir = corpus_dir().join(sub);
    let mut v: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "lq").then(|| {
                let name = p.file_name().unwrap().to_string_lossy().to_string();
                if sub.is_empty() { name } else { format!("{sub}/{name}") }
            })
        })
        .collect();
    v.sort();
    v
}

pub fn uses_communication(src: &str) -> bool {
    src.contains("send(") || src.contains("recv(")
}

/// Programs for the progress and preservation checks: every corpus file
/// without send/recv, then `generated` seeded programs.
pub fn progress_corpus(generated: u64) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = list("")
        .into_iter()
        .chain(list("progress"))
        .map(|p| {
            let s = read(&p);
            (p, s)
        })
        .filter(|(_, s)| !uses_communication(s))
        .collect();
    for seed in 0..generated {
        out.push((format!("generated#{seed}"), gen_program(seed)));
    }
    out
}

/// Every program in the corpus, with or without communication, except
/// `teleport_prep.lq` which needs the `Prep` builtin.
pub fn full_corpus(generated: u64) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = list("")
        .into_iter()
        .filter(|p| p != "teleport_prep.lq")
        .chain(list("progress"))
        .chain(list("linearity"))
        .map(|p| {
            let s = read(&p);
            (p, s)
        })
        .collect();
    for seed in 0..generated {
        out.push((format!("generated#{seed}"), gen_program(seed)));
    }
    out
}

struct Gen {
    rng: ChaCha8Rng,
    fresh: usize,
    measures: usize,
    out: String,
}

const INTS: [&str; 3] = ["i0", "i1", "i2"];
const QBITS: [&str; 3] = ["q0", "q1", "q2"];

impl Gen {
    fn int_expr(&mut self, depth: u32) -> String {
        match self.rng.gen_range(0..if depth == 0 { 2 } else { 4 }) {
            0 => self.rng.gen_range(0..6).to_string(),
            1 => INTS.choose(&mut self.rng).unwrap().to_string(),
            2 => {
                let op = ["+", "-", "*"].choose(&mut self.rng).unwrap();
                format!("({} {op} {})", self.int_expr(depth - 1), self.int_expr(depth - 1))
            }
            _ => format!("mix({}, {})", self.int_expr(depth - 1), self.int_expr(depth - 1)),
        }
    }

    fn bool_expr(&mut self) -> String {
        match self.rng.gen_range(0..3) {
            0 => "b0".to_string(),
            1 => ["true", "false"].choose(&mut self.rng).unwrap().to_string(),
            _ => {
                let op = ["<", "<=", "==", "!=", ">", ">="].choose(&mut self.rng).unwrap();
                format!("{} {op} {}", self.int_expr(1), self.int_expr(1))
            }
        }
    }

    fn line(&mut self, indent: usize, s: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn stmt(&mut self, indent: usize, depth: u32, in_loop: bool) {
        let q = *QBITS.choose(&mut self.rng).unwrap();
        let choice = self.rng.gen_range(0..if depth == 0 { 7 } else { 9 });
        match choice {
            0 => {
                let x = INTS.choose(&mut self.rng).unwrap();
                let e = self.int_expr(2);
                self.line(indent, &format!("{x} = {e};"));
            }
            1 => {
                let e = self.bool_expr();
                self.line(indent, &format!("b0 = {e};"));
            }
            2 => {
                let g = ["H", "X", "Y", "Z"].choose(&mut self.rng).unwrap();
                self.line(indent, &format!("{g}({q});"));
            }
            3 => {
                let p = *QBITS.choose(&mut self.rng).unwrap();
                self.line(indent, &format!("CNOT({p}, {q});"));
            }
            4 if !in_loop && self.measures < 2 => {
                self.measures += 1;
                let x = INTS.choose(&mut self.rng).unwrap();
                self.line(indent, &format!("{x} = measure(StdBasis, {q});"));
            }
            4 | 5 => {
                self.line(indent, &format!("{q} = new qbit();"));
            }
            6 => {
                let p = *QBITS.choose(&mut self.rng).unwrap();
                self.line(indent, &format!("{p} = {q};"));
            }
            7 => {
                let c = self.bool_expr();
                self.line(indent, &format!("if ({c}) {{"));
                self.stmt(indent + 1, depth - 1, in_loop);
                self.line(indent, "} else {");
                self.stmt(indent + 1, depth - 1, in_loop);
                self.line(indent, "}");
            }
            _ => {
                self.fresh += 1;
                let w = format!("w{}", self.fresh);
                let n = self.rng.gen_range(1..4);
                self.line(indent, "{");
                self.line(indent + 1, &format!("int {w};"));
                self.line(indent + 1, &format!("{w} = 0;"));
                self.line(indent + 1, &format!("while ({w} < {n}) {{"));
                self.stmt(indent + 2, depth - 1, true);
                self.line(indent + 2, &format!("{w} = {w} + 1;"));
                self.line(indent + 1, "}");
                self.line(indent, "}");
            }
        }
    }
}

/// A well-typed program without communication, determined by `seed`.
pub fn gen_program(seed: u64) -> String {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), fresh: 0, measures: 0, out: String::new() };
    g.line(0, "int mix(int a, int b) {");
    g.line(1, "if (a < b) return b - a;");
    g.line(1, "return a + 2 * b;");
    g.line(0, "}");
    g.line(0, "");
    g.line(0, "int main() {");
    g.line(1, "int i0, i1, i2;");
    g.line(1, "bool b0;");
    g.line(1, "qbit q0, q1, q2;");
    g.line(1, "i0 = 1;");
    g.line(1, "i1 = 2;");
    g.line(1, "i2 = 3;");
    g.line(1, "b0 = true;");
    let init = g.rng.gen_range(1..4);
    for q in &QBITS[..init] {
        g.line(1, &format!("{q} = new qbit();"));
    }
    let n = g.rng.gen_range(3..9);
    for _ in 0..n {
        g.stmt(1, 2, false);
    }
    g.line(1, "return i0 + i1 * i2;");
    g.line(0, "}");
    g.out
}

/// Configurations visited by [`walk`].
pub struct WalkStats {
    pub steps: usize,
    pub leaves: usize,
}

/// Explores from the start configuration: every measurement branch, and
/// either the lowest-index move or every enabled move. Calls `on_step`
/// with the source, the step, and each successor. Stops a path after
/// `max_depth` steps and the whole walk after `budget` steps.
pub fn walk(
    ctx: &MethodContext,
    all_moves: bool,
    max_depth: usize,
    budget: usize,
    mut on_step: impl FnMut(&Configuration, &StepInfo, &Configuration) -> Result<(), String>,
) -> Result<WalkStats, String> {
    let start = Configuration::start(ctx).map_err(|e| e.to_string())?;
    let mut stack = vec![(start, 0usize)];
    let mut stats = WalkStats { steps: 0, leaves: 0 };
    while let Some((cfg, depth)) = stack.pop() {
        let moves = cfg.moves();
        if moves.is_empty() || depth >= max_depth {
            stats.leaves += 1;
            continue;
        }
        let chosen = if all_moves { moves } else { vec![moves[0]] };
        for mv in chosen {
            if stats.steps >= budget {
                return Ok(stats);
            }
            let (info, succ) = apply_move(ctx, &cfg, mv, None).map_err(|e| e.to_string())?;
            stats.steps += 1;
            for s in succ.into_iter().rev() {
                on_step(&cfg, &info, &s.config)?;
                stack.push((s.config, depth + 1));
            }
        }
    }
    Ok(stats)
}

/// Preservation for one step: the configuration after the step types, and
/// each process keeps its type (a fork appends one component).
pub fn preserved(ctx: &MethodContext, before: &Configuration, info: &StepInfo, after: &Configuration) -> Result<(), String> {
    let tb = type_configuration(ctx, before).map_err(|e| format!("before {}: {e}", info.rule))?;
    let ta = type_configuration(ctx, after).map_err(|e| format!("after {}: {e}", info.rule))?;
    let grown = ta.len() - tb.len();
    if !(grown == 0 || (grown == 1 && info.rule == "OP-DoFork")) {
        return Err(format!("{}: process count {} -> {}", info.rule, tb.len(), ta.len()));
    }
    for (i, (a, b)) in tb.iter().zip(&ta).enumerate() {
        if !a.compatible(b) {
            return Err(format!("{}: process {i} type {a} -> {b}", info.rule));
        }
    }
    if let Some(ProcType::Any) = ta.get(tb.len()) {
        return Err("forked process has no type".into());
    }
    Ok(())
}

// Brute-force linear algebra used as independent oracles.

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    Matrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Mixed-radix digits of `index`, most significant register first.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut d = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        d[k] = index % dims[k];
        index /= dims[k];
    }
    d
}

pub fn undigits(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x)
}

/// Permutation matrix `P` with `P |x_0 … x_n⟩ = |x_t0 … x_tk, rest⟩`.
pub fn permutation_matrix(dims: &[usize], targets: &[usize]) -> Matrix {
    let total: usize = dims.iter().product();
    let mut order = targets.to_vec();
    order.extend((0..dims.len()).filter(|r| !targets.contains(r)));
    let new_dims: Vec<usize> = order.iter().map(|&r| dims[r]).collect();
    let mut p = Matrix::zeros(total, total);
    for orig in 0..total {
        let d = digits(orig, dims);
        let nd: Vec<usize> = order.iter().map(|&r| d[r]).collect();
        p[(undigits(&nd, &new_dims), orig)] = c(1.0, 0.0);
    }
    p
}

/// `Pᵀ (K ⊗ I) P` acting on the whole system.
pub fn embed(k: &Matrix, dims: &[usize], targets: &[usize]) -> Matrix {
    let total: usize = dims.iter().product();
    let rest = total / k.nrows();
    let p = permutation_matrix(dims, targets);
    p.transpose() * kron(k, &Matrix::identity(rest, rest)) * p
}

pub fn random_unitary(rng: &mut impl Rng, n: usize) -> Matrix {
    let a = Matrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let qr = a.qr();
    qr.q()
}

pub fn random_density(rng: &mut impl Rng, n: usize) -> Matrix {
    let a = Matrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let rho = &a * a.adjoint();
    let t = rho.trace();
    rho / t
}

/// Partial trace keeping the listed registers (in the given order).
pub fn partial_trace(rho: &Matrix, dims: &[usize], keep: &[usize]) -> Matrix {
    let kd: Vec<usize> = keep.iter().map(|&r| dims[r]).collect();
    let n: usize = kd.iter().product();
    let total: usize = dims.iter().product();
    let mut out = Matrix::zeros(n, n);
    for i in 0..total {
        for j in 0..total {
            let di = digits(i, dims);
            let dj = digits(j, dims);
            let traced_equal = (0..dims.len()).filter(|r| !keep.contains(r)).all(|r| di[r] == dj[r]);
            if traced_equal {
                let a: Vec<usize> = keep.iter().map(|&r| di[r]).collect();
                let b: Vec<usize> = keep.iter().map(|&r| dj[r]).collect();
                out[(undigits(&a, &kd), undigits(&b, &kd))] += rho[(i, j)];
            }
        }
    }
    out
}

pub fn max_abs(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Haar-ish random pure qubit state `(α, β)`.
pub fn random_qubit(rng: &mut impl Rng) -> (C64, C64) {
    let a = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let b = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    (a / n, b / n)
}

/// Unitary taking |0⟩ to `α|0⟩ + β|1⟩`.
pub fn prep_unitary((a, b): (C64, C64)) -> Matrix {
    Matrix::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()])
}

/// Teleportation on |ψ⟩ ⊗ Φ⁺ over registers (φ, ats, stto): for each Bell
/// outcome k, the probability and Bert's corrected state.
pub fn teleport_oracle(psi: (C64, C64)) -> Vec<(f64, Matrix)> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = |xs: [f64; 4]| Matrix::from_column_slice(4, 1, &xs.map(|x| c(x * s, 0.0)));
    let bell = [v([1.0, 0.0, 0.0, 1.0]), v([0.0, 1.0, 1.0, 0.0]), v([1.0, 0.0, 0.0, -1.0]), v([0.0, 1.0, -1.0, 0.0])];
    let x = Matrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let z = Matrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let i2 = Matrix::identity(2, 2);
    let fixes = [i2.clone(), x.clone(), z.clone(), &x * &z];
    let psi_v = Matrix::from_column_slice(2, 1, &[psi.0, psi.1]);
    let state = kron(&psi_v, &bell[0]);
    let rho = &state * state.adjoint();
    (0..4)
        .map(|k| {
            let proj = kron(&(&bell[k] * bell[k].adjoint()), &i2);
            let post = &proj * &rho * &proj;
            let p = post.trace().re;
            let fix = kron(&Matrix::identity(4, 4), &fixes[k]);
            let fixed = &fix * post * fix.adjoint() / c(p, 0.0);
            (p, partial_trace(&fixed, &[2, 2, 2], &[2]))
        })
        .collect()
}
