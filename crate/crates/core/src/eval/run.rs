//! Drivers: scheduling, probabilistic branching, leaves and traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value as Json;
use thiserror::Error;

use super::step::Stuck;
use super::{apply_move, config_json, Configuration, Move, ProcResult, StartError, Status, Successor};
use crate::internal::MethodContext;
use crate::quantum::{Exec, GlobalState};

/// Leaves whose states differ by less than this are merged.
pub const MERGE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SchedulerKind {
    /// Lowest-index enabled process; lowest-index matching receiver.
    RoundRobin,
    /// Uniform choice among enabled moves from a seeded generator.
    Random,
    /// Every interleaving, up to reordering of process-local steps.
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BranchMode {
    /// Follow every measurement outcome.
    Exhaustive,
    /// Draw one outcome per measurement from the seeded generator.
    Sample,
    /// Take the first outcome with nonzero probability.
    First,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Policy {
    pub scheduler: SchedulerKind,
    pub branch: BranchMode,
    pub seed: u64,
}

impl Default for Policy {
    fn default() -> Self {
        Policy { scheduler: SchedulerKind::RoundRobin, branch: BranchMode::Exhaustive, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceMode {
    Off,
    /// Rule names only.
    Rules,
    /// Rule names plus the configuration after each step.
    Full,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub policy: Policy,
    /// Steps allowed on any single path.
    pub max_steps: usize,
    pub trace: TraceMode,
    /// Kernel strategy; `None` picks one by state size.
    pub exec: Option<Exec>,
    /// Distinct outcome distributions kept by the exhaustive scheduler.
    pub max_alternatives: usize,
    /// Explore measurement branches on the thread pool.
    pub parallel: bool,
    /// Include ρ in full trace records.
    pub trace_rho: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            policy: Policy::default(),
            max_steps: 100_000,
            trace: TraceMode::Off,
            exec: None,
            max_alternatives: 64,
            parallel: cfg!(feature = "parallel"),
            trace_rho: false,
        }
    }
}

/// One terminal (or deadlocked) configuration with its probability mass.
#[derive(Clone, Debug)]
pub struct Leaf {
    pub probability: f64,
    pub results: Vec<ProcResult>,
    pub gs: GlobalState,
    pub steps: usize,
    pub deadlock: bool,
}

impl Leaf {
    pub fn has_error(&self) -> bool {
        self.results.iter().any(|r| matches!(r, ProcResult::Error(_)))
    }

    fn same_outcome(&self, other: &Leaf) -> bool {
        self.results == other.results && self.deadlock == other.deadlock && self.gs.approx_eq(&other.gs, MERGE_TOL)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRecord {
    /// Branch choices leading here, e.g. `0/1`; empty before the first branch.
    pub path: String,
    pub step: usize,
    pub process: usize,
    pub partner: Option<usize>,
    pub rule: String,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<Json>,
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    /// Outcome distribution; for the exhaustive scheduler the one reached
    /// by the first interleaving.
    pub leaves: Vec<Leaf>,
    /// Further distinct distributions reachable under other interleavings.
    pub alternatives: Vec<Vec<Leaf>>,
    /// Rule applications performed in total.
    pub steps: usize,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RunError {
    #[error(transparent)]
    Start(#[from] StartError),
    #[error("step limit of {steps} exceeded on path `{path}`")]
    StepLimitExceeded { path: String, steps: usize },
    #[error("stuck on path `{path}`: process {process}: {message}")]
    Stuck { path: String, process: usize, message: String },
    #[error("more than {0} distinct outcome distributions")]
    ExplorationLimit(usize),
}

fn leaf_of(cfg: &Configuration, probability: f64, steps: usize) -> Leaf {
    let results: Vec<ProcResult> = cfg
        .statuses()
        .into_iter()
        .map(|s| match s {
            Status::Final(r) => r,
            _ => ProcResult::Blocked,
        })
        .collect();
    let deadlock = results.contains(&ProcResult::Blocked);
    Leaf { probability, results, gs: cfg.gs.clone(), steps, deadlock }
}

/// Sums probabilities of leaves with equal results and approximately equal states.
pub fn merge_leaves(leaves: Vec<Leaf>) -> Vec<Leaf> {
    let mut out: Vec<Leaf> = Vec::new();
    for l in leaves {
        match out.iter_mut().find(|o| o.same_outcome(&l)) {
            Some(o) => {
                o.probability += l.probability;
                o.steps = o.steps.max(l.steps);
            }
            None => out.push(l),
        }
    }
    out
}

fn same_distribution(a: &[Leaf], b: &[Leaf]) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| {
            b.iter().any(|y| x.same_outcome(y) && (x.probability - y.probability).abs() < MERGE_TOL)
        })
}

fn join_path(path: &str, k: usize) -> String {
    if path.is_empty() {
        k.to_string()
    } else {
        format!("{path}/{k}")
    }
}

/// Runs `main` from the start configuration.
pub fn run(ctx: &MethodContext, opts: &RunOptions) -> Result<RunReport, RunError> {
    let start = Configuration::start(ctx)?;
    match opts.policy.scheduler {
        SchedulerKind::Exhaustive => {
            let mut ex = Explorer { ctx, opts, steps: 0 };
            let mut dists = ex.distributions(&start, 0)?;
            let leaves = dists.remove(0);
            Ok(RunReport { leaves, alternatives: dists, steps: ex.steps, trace: Vec::new() })
        }
        _ => {
            let rng = ChaCha8Rng::seed_from_u64(opts.policy.seed);
            let walk = Walk { ctx, opts };
            let out = walk.path(start, String::new(), 1.0, 0, rng)?;
            Ok(RunReport { leaves: merge_leaves(out.leaves), alternatives: Vec::new(), steps: out.steps, trace: out.trace })
        }
    }
}

#[derive(Default)]
struct PathOut {
    leaves: Vec<Leaf>,
    trace: Vec<TraceRecord>,
    steps: usize,
}

struct Walk<'a> {
    ctx: &'a MethodContext,
    opts: &'a RunOptions,
}

impl Walk<'_> {
    fn record(&self, out: &mut PathOut, path: &str, step: usize, mv: Move, rule: &str, weight: f64, cfg: Option<&Configuration>) {
        if self.opts.trace == TraceMode::Off {
            return;
        }
        let config = match (self.opts.trace, cfg) {
            (TraceMode::Full, Some(c)) => Some(config_json(c, self.opts.trace_rho)),
            _ => None,
        };
        out.trace.push(TraceRecord {
            path: path.to_string(),
            step,
            process: mv.process(),
            partner: mv.partner(),
            rule: rule.to_string(),
            weight,
            config,
        });
    }

    fn choose_move(&self, moves: &[Move], rng: &mut ChaCha8Rng) -> Move {
        match self.opts.policy.scheduler {
            SchedulerKind::Random => moves[rng.gen_range(0..moves.len())],
            _ => moves[0],
        }
    }

    /// Follows one path until it ends or branches; branches recurse.
    fn path(&self, mut cfg: Configuration, mut path: String, mut prob: f64, mut steps: usize, mut rng: ChaCha8Rng) -> Result<PathOut, RunError> {
        let mut out = PathOut::default();
        loop {
            let moves = cfg.moves();
            if moves.is_empty() {
                out.leaves.push(leaf_of(&cfg, prob, steps));
                return Ok(out);
            }
            if steps >= self.opts.max_steps {
                return Err(RunError::StepLimitExceeded { path, steps });
            }
            let mv = self.choose_move(&moves, &mut rng);
            let (info, mut succ) = apply_move(self.ctx, &cfg, mv, self.opts.exec)
                .map_err(|Stuck { process, reason }| RunError::Stuck { path: path.clone(), process, message: reason })?;
            steps += 1;
            out.steps += 1;
            if succ.len() == 1 {
                let s = succ.pop().expect("one successor");
                prob *= s.probability;
                cfg = s.config;
                self.record(&mut out, &path, steps, mv, info.rule, 1.0, Some(&cfg));
                continue;
            }
            self.record(&mut out, &path, steps, mv, info.rule, 1.0, None);
            let chosen: Vec<(usize, Successor)> = match self.opts.policy.branch {
                BranchMode::Exhaustive => succ.into_iter().enumerate().collect(),
                BranchMode::First => vec![(0, succ.swap_remove(0))],
                BranchMode::Sample => {
                    let u: f64 = rng.gen();
                    let total: f64 = succ.iter().map(|s| s.probability).sum();
                    let mut acc = 0.0;
                    let mut k = succ.len() - 1;
                    for (i, s) in succ.iter().enumerate() {
                        acc += s.probability / total;
                        if u < acc {
                            k = i;
                            break;
                        }
                    }
                    vec![(k, succ.swap_remove(k))]
                }
            };
            if chosen.len() == 1 {
                let (k, s) = chosen.into_iter().next().expect("one branch");
                path = join_path(&path, k);
                prob *= s.probability;
                cfg = s.config;
                self.record(&mut out, &path, steps, mv, "NP-ProbEvol", s.probability, Some(&cfg));
                continue;
            }
            let base: u64 = rng.gen();
            let sub = |(k, s): (usize, Successor)| -> Result<PathOut, RunError> {
                let bpath = join_path(&path, k);
                let mut head = PathOut::default();
                self.record(&mut head, &bpath, steps, mv, "NP-ProbEvol", s.probability, Some(&s.config));
                let r = ChaCha8Rng::seed_from_u64(base.wrapping_add(k as u64));
                let tail = self.path(s.config, bpath, prob * s.probability, steps, r)?;
                head.leaves = tail.leaves;
                head.trace.extend(tail.trace);
                head.steps = tail.steps;
                Ok(head)
            };
            let parts = self.map_branches(chosen, sub)?;
            for p in parts {
                out.leaves.extend(p.leaves);
                out.trace.extend(p.trace);
                out.steps += p.steps;
            }
            return Ok(out);
        }
    }

    fn map_branches<F>(&self, items: Vec<(usize, Successor)>, f: F) -> Result<Vec<PathOut>, RunError>
    where
        F: Fn((usize, Successor)) -> Result<PathOut, RunError> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.opts.parallel {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }
}

/// Exhaustive interleaving explorer. A process whose next step touches
/// neither ρ nor other processes commutes with every other move, so when one
/// exists only its move is explored.
struct Explorer<'a> {
    ctx: &'a MethodContext,
    opts: &'a RunOptions,
    steps: usize,
}

impl Explorer<'_> {
    fn ample(&self, cfg: &Configuration, moves: Vec<Move>) -> Vec<Move> {
        let invisible = moves.iter().find(|m| match m {
            Move::Local(i) => !cfg.procs[*i].next_step_visible(self.ctx),
            Move::Comm { .. } => false,
        });
        match invisible {
            Some(&m) => vec![m],
            None => moves,
        }
    }

    fn distributions(&mut self, cfg: &Configuration, depth: usize) -> Result<Vec<Vec<Leaf>>, RunError> {
        let moves = cfg.moves();
        if moves.is_empty() {
            return Ok(vec![vec![leaf_of(cfg, 1.0, depth)]]);
        }
        if depth >= self.opts.max_steps {
            return Err(RunError::StepLimitExceeded { path: String::new(), steps: depth });
        }
        let mut all: Vec<Vec<Leaf>> = Vec::new();
        for mv in self.ample(cfg, moves) {
            let (_, succ) = apply_move(self.ctx, cfg, mv, self.opts.exec).map_err(|Stuck { process, reason }| {
                RunError::Stuck { path: String::new(), process, message: reason }
            })?;
            self.steps += 1;
            // Cross product over the successors' alternative distributions.
            let mut combos: Vec<Vec<Leaf>> = vec![Vec::new()];
            for s in succ {
                let sub = self.distributions(&s.config, depth + 1)?;
                let mut next = Vec::new();
                for c in &combos {
                    for d in &sub {
                        let mut v = c.clone();
                        v.extend(d.iter().cloned().map(|mut l| {
                            l.probability *= s.probability;
                            l
                        }));
                        next.push(v);
                        if next.len() > self.opts.max_alternatives * self.opts.max_alternatives {
                            return Err(RunError::ExplorationLimit(self.opts.max_alternatives));
                        }
                    }
                }
                combos = next;
            }
            for c in combos {
                let d = merge_leaves(c);
                if !all.iter().any(|a| same_distribution(a, &d)) {
                    all.push(d);
                    if all.len() > self.opts.max_alternatives {
                        return Err(RunError::ExplorationLimit(self.opts.max_alternatives));
                    }
                }
            }
        }
        Ok(all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::internal::lower;
    use crate::parser::parse_source;

    fn ctx(src: &str) -> MethodContext {
        lower(&parse_source(src).unwrap()).unwrap()
    }

    const RNG: &str = "int main(){ qbit q; q = new qbit(); H(q); return measure(StdBasis, q); }";

    #[test]
    fn rng_exhaustive_two_halves() {
        let r = run(&ctx(RNG), &RunOptions::default()).unwrap();
        assert_eq!(r.leaves.len(), 2);
        for l in &r.leaves {
            assert!((l.probability - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_is_seeded() {
        let c = ctx(RNG);
        let mut opts = RunOptions::default();
        opts.policy.branch = BranchMode::Sample;
        let seen: Vec<_> = (0..16)
            .map(|seed| {
                opts.policy.seed = seed;
                let a = run(&c, &opts).unwrap();
                let b = run(&c, &opts).unwrap();
                assert_eq!(a.leaves[0].results, b.leaves[0].results);
                a.leaves[0].results[0].clone()
            })
            .collect();
        assert!(seen.iter().any(|r| *r != seen[0]));
    }

    #[test]
    fn step_limit() {
        let c = ctx("void main() { while (true) ; }");
        let opts = RunOptions { max_steps: 500, ..RunOptions::default() };
        assert!(matches!(run(&c, &opts), Err(RunError::StepLimitExceeded { .. })));
    }

    #[test]
    fn deadlock_is_a_leaf() {
        let c = ctx("void main() { channel[int] ch withends [a, b]; ch = new channel[int](); int x; x = recv(b); }");
        let r = run(&c, &RunOptions::default()).unwrap();
        assert!(r.leaves[0].deadlock);
        assert_eq!(r.leaves[0].results, vec![ProcResult::Blocked]);
    }

    #[test]
    fn trace_has_branch_records() {
        let c = ctx(RNG);
        let opts = RunOptions { trace: TraceMode::Rules, ..RunOptions::default() };
        let r = run(&c, &opts).unwrap();
        let evol: Vec<_> = r.trace.iter().filter(|t| t.rule == "NP-ProbEvol").collect();
        assert_eq!(evol.len(), 2);
        assert_eq!(evol[0].path, "0");
        assert_eq!(evol[1].path, "1");
    }

    #[test]
    fn exhaustive_scheduler_agrees_on_owned_channels() {
        let src = "void w(channelEnd[int] c, int v) { send(c, v); }
                   int main() { channel[int] c1 withends [a1, b1]; channel[int] c2 withends [a2, b2];
                                c1 = new channel[int](); c2 = new channel[int]();
                                fork w(a1, 1); fork w(a2, 2); int x, y; y = recv(b2); x = recv(b1); return x - y; }";
        let c = ctx(src);
        let opts = RunOptions {
            policy: Policy { scheduler: SchedulerKind::Exhaustive, ..Policy::default() },
            ..RunOptions::default()
        };
        let r = run(&c, &opts).unwrap();
        assert!(r.alternatives.is_empty());
        assert_eq!(r.leaves.len(), 1);
        assert_eq!(r.leaves[0].results[0].to_string(), "-1");
        assert_eq!(r.leaves[0].results.len(), 3);
        let rr = run(&c, &RunOptions::default()).unwrap();
        assert_eq!(rr.leaves[0].results, r.leaves[0].results);
    }
}
