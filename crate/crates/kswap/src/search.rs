//! Local search driver: init strategies, the improvement loop, run statistics.

use crate::analysis::potential_phi_num;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::neighborhood::{
    self, apply_move, delta_min, find_improving, DeltaMin, Pivot, PivotRule,
};
use crate::rng;
use crate::schedule::{gamma_partition, LoadTable, Schedule};
use crate::trace::{IterationRecord, MoveType, TraceMeta, TraceSink};
use serde::{Deserialize, Serialize};

/// Ultimate stop: the state space has m^n schedules, capped at 2^40.
pub const HARD_ITERATION_CAP: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy")]
pub enum InitStrategy {
    /// Every job on machine 0.
    AllOnOne,
    /// Job j on machine j mod m.
    RoundRobin,
    /// Longest processing time first, greedily to the least-loaded machine
    /// (ties to the lowest machine index).
    Lpt,
    /// Uniform machine per job from a seeded stream.
    Random { seed: u64 },
    /// Explicit assignment.
    File { assignment: Vec<usize> },
}

impl InitStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::AllOnOne => "all-on-one",
            InitStrategy::RoundRobin => "round-robin",
            InitStrategy::Lpt => "lpt",
            InitStrategy::Random { .. } => "random",
            InitStrategy::File { .. } => "file",
        }
    }
}

pub fn initial_schedule(inst: &Instance, init: &InitStrategy) -> Result<Schedule> {
    let n = inst.n();
    let m = inst.m();
    match init {
        InitStrategy::AllOnOne => Schedule::new(inst, vec![0; n]),
        InitStrategy::RoundRobin => Schedule::new(inst, (0..n).map(|j| j % m).collect()),
        InitStrategy::Lpt => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&j| (std::cmp::Reverse(inst.job_num(j)), j));
            let mut loads = vec![0i128; m];
            let mut assignment = vec![0usize; n];
            for j in order {
                let i = (0..m).min_by_key(|&i| (loads[i], i)).unwrap();
                assignment[j] = i;
                loads[i] += inst.job_num(j);
            }
            Schedule::new(inst, assignment)
        }
        InitStrategy::Random { seed } => {
            let mut rng = rng::seeded(*seed);
            Schedule::new(
                inst,
                (0..n).map(|_| rng::uniform_below(&mut rng, m as u64) as usize).collect(),
            )
        }
        InitStrategy::File { assignment } => Schedule::new(inst, assignment.clone()),
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub k: usize,
    pub init: InitStrategy,
    pub pivot: PivotRule,
    /// Overrides min(m^n, 2^40) when set.
    pub iteration_cap: Option<u64>,
    /// Budget for the run's delta_min computation.
    pub work_budget: u64,
}

impl SearchConfig {
    pub fn new(k: usize, init: InitStrategy, pivot: PivotRule) -> Self {
        SearchConfig {
            k,
            init,
            pivot,
            iteration_cap: None,
            work_budget: neighborhood::DEFAULT_WORK_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunStats {
    /// Number of executed improving iterations T.
    pub iterations: u64,
    pub type1_count: u64,
    pub type2_count: u64,
    pub jump_count: u64,
    pub final_makespan: Dyadic,
    pub final_num_critical: usize,
    pub delta_min: Option<Dyadic>,
    /// Why delta_min is absent, when it is ("zero-delta" or
    /// "delta-min-budget-exceeded").
    pub delta_min_note: Option<String>,
    pub phi_initial: Dyadic,
    pub phi_final: Dyadic,
}

fn default_cap(inst: &Instance) -> u64 {
    let m = inst.m() as u128;
    let mut space = 1u128;
    for _ in 0..inst.n() {
        space = space.saturating_mul(m);
        if space >= HARD_ITERATION_CAP as u128 {
            return HARD_ITERATION_CAP;
        }
    }
    space as u64
}

fn snapshot(
    t: u64,
    mv: Option<crate::neighborhood::Move>,
    move_type: Option<MoveType>,
    loads: &[i128],
    scale: u32,
    dm: Option<&DeltaMin>,
) -> IterationRecord {
    let table = LoadTable::from_loads(loads.to_vec(), scale);
    let gamma_l = match dm {
        Some(dm) => gamma_partition(&table, dm.value, true).expect("delta_min > 0").0,
        None => Vec::new(),
    };
    IterationRecord {
        t,
        mv,
        loads: loads.to_vec(),
        makespan: table.makespan(),
        num_critical: table.critical().len(),
        phi: Dyadic::new(potential_phi_num(loads), scale),
        delta: table.delta(),
        move_type,
        gamma_l,
    }
}

/// Runs k-swap local search to a local optimum, streaming one trace record
/// per improving iteration. Deterministic for a fixed (instance, config).
pub fn run(
    inst: &Instance,
    config: &SearchConfig,
    sink: &mut dyn TraceSink,
) -> Result<(Schedule, RunStats)> {
    if config.k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let scale = inst.scale_log2();
    let mut sched = initial_schedule(inst, &config.init)?;

    // The instance constant delta_min; ties and blown budgets downgrade the
    // run to unclassified moves rather than failing it.
    let (dm, note) = match delta_min(inst, config.k, config.work_budget) {
        Ok(dm) => (Some(dm), None),
        Err(Error::ZeroDelta { .. }) => (None, Some("zero-delta".to_string())),
        Err(Error::BudgetExceeded { .. }) => {
            (None, Some("delta-min-budget-exceeded".to_string()))
        }
        Err(e) => return Err(e),
    };

    let mut loads = vec![0i128; inst.m()];
    for (j, &i) in sched.assignment.iter().enumerate() {
        loads[i] += inst.job_num(j);
    }

    let initial = snapshot(0, None, None, &loads, scale, dm.as_ref());
    let meta = TraceMeta {
        k: config.k,
        scale_log2: scale,
        assignment: sched.assignment.clone(),
        delta_min: dm.as_ref().map(|d| d.value),
        note: note.clone(),
    };
    sink.begin(&meta, &initial)?;
    let phi_initial = initial.phi;

    let cap = config.iteration_cap.unwrap_or_else(|| default_cap(inst));
    let mut pivot = Pivot::new(config.pivot);
    let mut stats = RunStats {
        iterations: 0,
        type1_count: 0,
        type2_count: 0,
        jump_count: 0,
        final_makespan: initial.makespan,
        final_num_critical: initial.num_critical,
        delta_min: dm.as_ref().map(|d| d.value),
        delta_min_note: note,
        phi_initial,
        phi_final: phi_initial,
    };

    let mut last = initial;
    loop {
        let table = LoadTable::from_loads(loads.clone(), scale);
        let Some(mv) = find_improving(inst, &sched, &table, config.k, &mut pivot) else {
            break;
        };
        if stats.iterations >= cap {
            return Err(Error::IterationLimitExceeded { limit: cap });
        }
        let gain = inst.set_sum(&mv.a) - inst.set_sum(&mv.b);
        sched = apply_move(inst, sched, &mv)?;
        loads[mv.i] -= gain;
        loads[mv.ip] += gain;
        debug_assert_eq!(
            loads,
            crate::schedule::load_table(inst, &sched).loads(),
            "incremental loads diverged from recompute"
        );
        stats.iterations += 1;
        if mv.is_jump() {
            stats.jump_count += 1;
        }

        let move_type = match &dm {
            Some(dm) => {
                // Type-1 iff the target lands in gamma_l of the new state.
                let max_after = *loads.iter().max().unwrap();
                let target = Dyadic::new(loads[mv.ip], scale);
                let threshold = Dyadic::new(max_after, scale).sub(&dm.value);
                if target > threshold {
                    MoveType::Type1
                } else {
                    MoveType::Type2
                }
            }
            None => MoveType::Unclassified,
        };
        match move_type {
            MoveType::Type1 => stats.type1_count += 1,
            MoveType::Type2 => stats.type2_count += 1,
            MoveType::Unclassified => {}
        }

        let rec = snapshot(stats.iterations, Some(mv), Some(move_type), &loads, scale, dm.as_ref());
        debug_assert!(
            (rec.makespan, rec.num_critical) < (last.makespan, last.num_critical),
            "objective failed to strictly decrease"
        );
        sink.record(&rec)?;
        last = rec;
    }

    stats.final_makespan = last.makespan;
    stats.final_num_critical = last.num_critical;
    stats.phi_final = last.phi;
    Ok((sched, stats))
}
