mod common;

use std::sync::Arc;

use common::*;
use lanq_core::eval::{run, BranchMode, Policy, RunOptions, SchedulerKind};
use lanq_core::memory::{LocalMemoryState, QList, Ref, Value};
use lanq_core::parser::{parse_source, print_program};
use lanq_core::program::load;
use lanq_core::quantum::{Basis, Exec, GlobalState, Operator};
use lanq_core::varprops::{VarProps, VarTuple};
use lanq_core::{Name, TypeExpr};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(prop_oneof![3 => Just(2usize), 1 => Just(3usize)], 1..=4)
        .prop_filter("at most 16 amplitudes", |d| d.iter().product::<usize>() <= 16)
}

fn dims_and_targets() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    dims_strategy().prop_flat_map(|dims| {
        let n = dims.len();
        (Just(dims), Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 1..=n)
            .prop_map(|(d, order, k)| (d, order[..k].to_vec()))
    })
}

fn state(dims: &[usize], rho: lanq_core::quantum::Matrix) -> GlobalState {
    GlobalState { rho: Arc::new(rho), dims: dims.to_vec(), channels: Vec::new() }
}

fn tuple(seed: u64) -> VarTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = VarTuple::default();
    for i in 0..rng.gen_range(0..4) {
        let x = Name::from(format!("v{i}"));
        t.var.insert(x.clone(), Ref::Classical(rng.gen_range(0..8)));
        t.ty.insert(x, TypeExpr::Int);
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_programs_reparse(seed in any::<u64>()) {
        let src = gen_program(seed);
        let once = print_program(&parse_source(&src).unwrap());
        let again = parse_source(&once).unwrap();
        prop_assert_eq!(print_program(&again), once);
    }

    #[test]
    fn generated_programs_type_check(seed in any::<u64>()) {
        let src = gen_program(seed);
        prop_assert!(load(&src).is_ok(), "{}", src);
    }

    #[test]
    fn scope_push_pop_restores(seeds in prop::collection::vec(any::<u64>(), 1..4), inner in any::<u64>()) {
        let mut vp = VarProps::empty();
        vp.push_frame(seeds.iter().map(|&s| tuple(s)).collect());
        let before = vp.clone();
        prop_assert!(vp.push_scope());
        prop_assert_eq!(vp.scope_depth(), seeds.len() + 1);
        let t = tuple(inner);
        for (x, r) in &t.var {
            vp.update_var(x, r.clone());
            prop_assert_eq!(vp.var_ref(x), Some(r));
        }
        vp.pop_scope();
        prop_assert_eq!(vp, before);
    }

    #[test]
    fn lms_update_then_get(entries in prop::collection::vec((0usize..6, any::<i64>()), 1..12)) {
        let mut lms = LocalMemoryState::new();
        let mut oracle = std::collections::BTreeMap::new();
        for (k, v) in &entries {
            lms.update(&Ref::Classical(*k), Value::Int(*v));
            oracle.insert(*k, *v);
        }
        for (k, v) in &oracle {
            prop_assert_eq!(lms.get(&Ref::Classical(*k)), Some(Value::Int(*v)));
        }
        prop_assert_eq!(lms.get(&Ref::None), Some(Value::Bot));
        prop_assert_eq!(lms.fresh_classical(), (0..).find(|n| !oracle.contains_key(n)).unwrap());
    }

    #[test]
    fn unmap_hits_exactly_overlapping_lists(lists in prop::collection::vec(prop::collection::btree_set(0usize..6, 1..3), 1..6), gone in 0usize..6) {
        let mut lms = LocalMemoryState::new();
        for l in &lists {
            let idx: Vec<usize> = l.iter().copied().collect();
            lms.update(&Ref::Quantum(QList::of(&idx)), Value::GQuantum(idx));
        }
        lms.unmap_nd(&Ref::Quantum(QList::of(&[gone])));
        for l in &lists {
            let idx: Vec<usize> = l.iter().copied().collect();
            let v = lms.get(&Ref::Quantum(QList::of(&idx))).unwrap();
            prop_assert_eq!(v.is_bot(), l.contains(&gone));
        }
    }

    #[test]
    fn kernel_matches_embedded_operator((dims, targets) in dims_and_targets(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: usize = dims.iter().product();
        let tdims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
        let rho = random_density(&mut rng, total);
        let u = random_unitary(&mut rng, tdims.iter().product());
        let full = embed(&u, &dims, &targets);
        let want = &full * &rho * full.adjoint();
        let gs = state(&dims, rho);
        let op = Operator::unitary(u, tdims);
        let seq = gs.apply_operator_with(&op, &targets, Exec::Sequential).unwrap();
        let par = gs.apply_operator_with(&op, &targets, Exec::Parallel).unwrap();
        prop_assert!(max_abs(&seq.rho, &want) <= TOL);
        prop_assert!(max_abs(&par.rho, &seq.rho) <= TOL);
        prop_assert!((seq.rho.trace().re - 1.0).abs() <= TOL);
        prop_assert!(max_abs(&seq.rho, &seq.rho.adjoint()) <= TOL);
    }

    #[test]
    fn reduced_matches_partial_trace((dims, keep) in dims_and_targets(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, dims.iter().product());
        let want = partial_trace(&rho, &dims, &keep);
        let got = state(&dims, rho).reduced(&keep).unwrap();
        prop_assert!(max_abs(&got, &want) <= TOL);
    }

    #[test]
    fn measurement_probabilities_sum_to_one((dims, targets) in dims_and_targets(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gs = state(&dims, random_density(&mut rng, dims.iter().product()));
        let branches = gs.measure_with(&Basis::Computational, &targets, Exec::Sequential).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() <= TOL);
        for b in &branches {
            prop_assert!((b.state.rho.trace().re - 1.0).abs() <= TOL);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn runs_are_deterministic(prog in any::<u64>(), seed in any::<u64>()) {
        let ctx = load(&gen_program(prog)).unwrap();
        let opts = |parallel| RunOptions {
            policy: Policy { scheduler: SchedulerKind::Random, branch: BranchMode::Exhaustive, seed },
            parallel,
            ..RunOptions::default()
        };
        let a = run(&ctx, &opts(true)).unwrap();
        let b = run(&ctx, &opts(false)).unwrap();
        prop_assert_eq!(a.leaves.len(), b.leaves.len());
        let total: f64 = a.leaves.iter().map(|l| l.probability).sum();
        prop_assert!((total - 1.0).abs() <= TOL);
        for (x, y) in a.leaves.iter().zip(&b.leaves) {
            prop_assert!((x.probability - y.probability).abs() <= TOL);
            prop_assert_eq!(format!("{:?}", x.results), format!("{:?}", y.results));
            prop_assert!(max_abs(&x.gs.rho, &y.gs.rho) <= TOL);
        }
    }
}
