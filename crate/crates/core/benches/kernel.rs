use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lanq_core::quantum::{Exec, GlobalState, Matrix, Operator, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(qubits: usize) -> GlobalState {
    let n = 1 << qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(qubits as u64);
    let a = Matrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    GlobalState { rho: Arc::new(rho / tr), dims: vec![2; qubits], channels: Vec::new() }
}

fn cnot() -> Operator {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let m = Matrix::from_row_slice(4, 4, &[o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z]);
    Operator::unitary(m, vec![2, 2])
}

fn kernel(c: &mut Criterion) {
    let op = cnot();
    let mut g = c.benchmark_group("apply_cnot");
    g.sample_size(20);
    for qubits in [4usize, 6, 8, 9] {
        let gs = random_state(qubits);
        let targets = [qubits - 1, 0];
        for (label, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
            g.bench_with_input(BenchmarkId::new(label, qubits), &gs, |b, gs| {
                b.iter(|| black_box(gs.apply_operator_with(&op, &targets, exec).unwrap()))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, kernel);
criterion_main!(benches);
