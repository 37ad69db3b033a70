//! Worst-case companion for k = 2 runs: phase decomposition by halving load
//! spread, per-phase gamma growth, and the rank potential of non-critical
//! machines. Needs no probabilistic input and works on zero-delta instances.

use super::{replay_tables, CheckResult};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{gamma_partition, LoadTable};
use crate::trace::Trace;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct PhaseSummary {
    /// First and last state index (inclusive) of the phase.
    pub start_state: usize,
    pub end_state: usize,
    /// Load spread at the phase's first state.
    pub delta_h: Dyadic,
    /// |gamma_l| per state under the non-strict delta_h/2 split.
    pub gamma_l_sizes: Vec<usize>,
    pub jump_count: usize,
    pub swap_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    /// State index at which each phase starts; always begins with 0.
    pub boundaries: Vec<usize>,
    pub phases: Vec<PhaseSummary>,
    pub jump_count: usize,
    pub swap_count: usize,
    /// Swaps examined by the rank potential check.
    pub rank_checked_swaps: usize,
    pub checks: Vec<CheckResult>,
}

pub fn phase_checks(report: &PhaseReport) -> Vec<CheckResult> {
    report.checks.clone()
}

fn gamma_sets(table: &LoadTable, gap: Dyadic) -> (Vec<usize>, Vec<usize>) {
    if gap.is_positive() {
        gamma_partition(table, gap, false).expect("positive gap")
    } else {
        // Zero spread: every machine matches the maximum.
        ((0..table.m()).collect(), Vec::new())
    }
}

fn sorted_gamma_s_loads(table: &LoadTable, gap: Dyadic) -> Vec<i128> {
    let (_, gs) = gamma_sets(table, gap);
    let mut loads: Vec<i128> = gs.iter().map(|&i| table.load_num(i)).collect();
    loads.sort_unstable();
    loads
}

/// Ranks jobs by processing time (ties by index), rank 1 = smallest; the
/// potential of a machine is the rank sum of its jobs.
fn job_ranks(inst: &Instance) -> Vec<u64> {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by_key(|&j| (inst.job_num(j), j));
    let mut rank = vec![0u64; inst.n()];
    for (pos, &j) in order.iter().enumerate() {
        rank[j] = pos as u64 + 1;
    }
    rank
}

fn rank_potential(assignment: &[usize], ranks: &[u64], machine: usize) -> u64 {
    assignment
        .iter()
        .zip(ranks)
        .filter(|(&mach, _)| mach == machine)
        .map(|(_, &r)| r)
        .sum()
}

/// Decomposes a k = 2 trace into phases and evaluates the worst-case lemmas.
pub fn phase_report(inst: &Instance, trace: &Trace) -> Result<PhaseReport> {
    if trace.meta.k != 2 {
        return Err(Error::WrongK { expected: 2, got: trace.meta.k });
    }
    let tables = replay_tables(inst, trace)?;
    let num_states = tables.len();

    let mut boundaries = vec![0usize];
    let mut delta_h = vec![tables[0].delta()];
    for (idx, table) in tables.iter().enumerate().skip(1) {
        if table.delta() <= delta_h.last().unwrap().half() {
            boundaries.push(idx);
            delta_h.push(table.delta());
        }
    }

    // Assignment per state, for rank potentials.
    let mut assignments = Vec::with_capacity(num_states);
    assignments.push(trace.meta.assignment.clone());
    for rec in &trace.records {
        let mv = rec.mv.as_ref().expect("iteration has move");
        let mut next = assignments.last().unwrap().clone();
        for &j in &mv.a {
            next[j] = mv.ip;
        }
        for &j in &mv.b {
            next[j] = mv.i;
        }
        assignments.push(next);
    }

    let mut gamma_l_check = CheckResult::pass("phase-gamma-l-nondecreasing");
    let mut gamma_s_check = CheckResult::pass("phase-gamma-s-prefix-nondecreasing");
    let mut phases = Vec::new();
    let mut total_jumps = 0usize;
    let mut total_swaps = 0usize;
    for (h, &start) in boundaries.iter().enumerate() {
        let end = boundaries.get(h + 1).map_or(num_states - 1, |&next| next - 1);
        let gap = delta_h[h].half();
        let sizes: Vec<usize> = (start..=end)
            .map(|idx| gamma_sets(&tables[idx], gap).0.len())
            .collect();
        for w in start..end {
            let local = w - start;
            if gamma_l_check.pass && sizes[local + 1] < sizes[local] {
                gamma_l_check = CheckResult::fail(
                    "phase-gamma-l-nondecreasing",
                    (w + 1) as u64,
                    format!(
                        "|gamma_l| fell {} -> {} within phase {} at t={}",
                        sizes[local],
                        sizes[local + 1],
                        h + 1,
                        w + 1
                    ),
                );
            }
            if gamma_s_check.pass {
                let before = sorted_gamma_s_loads(&tables[w], gap);
                let after = sorted_gamma_s_loads(&tables[w + 1], gap);
                let bad = after.len() > before.len()
                    || after.iter().zip(before.iter()).any(|(&a, &b)| a < b);
                if bad {
                    gamma_s_check = CheckResult::fail(
                        "phase-gamma-s-prefix-nondecreasing",
                        (w + 1) as u64,
                        format!("gamma_s load prefix regressed within phase {} at t={}", h + 1, w + 1),
                    );
                }
            }
        }
        let mut jumps = 0usize;
        let mut swaps = 0usize;
        for idx in start..end.min(num_states.saturating_sub(2)) + 1 {
            // Iteration idx+1 originates at state idx; the last state emits none.
            if idx + 1 >= num_states {
                break;
            }
            let mv = trace.records[idx].mv.as_ref().expect("iteration has move");
            if mv.is_jump() {
                jumps += 1;
            } else {
                swaps += 1;
            }
        }
        total_jumps += jumps;
        total_swaps += swaps;
        phases.push(PhaseSummary {
            start_state: start,
            end_state: end,
            delta_h: delta_h[h],
            gamma_l_sizes: sizes,
            jump_count: jumps,
            swap_count: swaps,
        });
    }

    // Rank potential: while a machine stays non-critical, every swap that
    // sends it jobs strictly increases its rank sum.
    let ranks = job_ranks(inst);
    let mut rank_check = CheckResult::pass("rank-potential-strict-increase");
    let mut rank_checked_swaps = 0usize;
    for (idx, rec) in trace.records.iter().enumerate() {
        let mv = rec.mv.as_ref().expect("iteration has move");
        if mv.is_jump() {
            continue;
        }
        let target = mv.ip;
        if tables[idx].is_critical(target) || tables[idx + 1].is_critical(target) {
            continue;
        }
        rank_checked_swaps += 1;
        let before = rank_potential(&assignments[idx], &ranks, target);
        let after = rank_potential(&assignments[idx + 1], &ranks, target);
        if rank_check.pass && after <= before {
            rank_check = CheckResult::fail(
                "rank-potential-strict-increase",
                rec.t,
                format!("rank potential of machine {target} moved {before} -> {after} at t={}", rec.t),
            );
        }
    }

    Ok(PhaseReport {
        boundaries,
        phases,
        jump_count: total_jumps,
        swap_count: total_swaps,
        rank_checked_swaps,
        checks: vec![gamma_l_check, gamma_s_check, rank_check],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::potential_phi_num;
    use crate::instance::generate_uniform;
    use crate::neighborhood::{Move, PivotRule};
    use crate::search::{run, InitStrategy, SearchConfig};
    use crate::trace::{IterationRecord, MoveType, TraceMeta, VecSink};

    fn traced_run(inst: &Instance, k: usize) -> Trace {
        let config = SearchConfig::new(k, InitStrategy::AllOnOne, PivotRule::First);
        let mut sink = VecSink::new();
        run(inst, &config, &mut sink).unwrap();
        sink.into_trace()
    }

    #[test]
    fn frozen_two_phase_run() {
        // p = (8, 3)/2^4 from all-on-one: (11, 0) -> (8, 3), spread
        // 11/16 -> 5/16 <= 11/32, so the second state opens phase 2.
        let inst = Instance::new(2, 4, vec![8, 3], "t".into()).unwrap();
        let trace = traced_run(&inst, 2);
        assert_eq!(trace.records.len(), 1);
        let report = phase_report(&inst, &trace).unwrap();
        assert_eq!(report.boundaries, vec![0, 1]);
        assert_eq!(report.phases.len(), 2);
        assert_eq!(report.phases[0].delta_h, Dyadic::new(11, 4));
        assert_eq!(report.phases[1].delta_h, Dyadic::new(5, 4));
        assert_eq!(report.phases[0].gamma_l_sizes, vec![1]);
        assert_eq!(report.phases[1].gamma_l_sizes, vec![1]);
        assert_eq!(report.jump_count, 1);
        assert_eq!(report.swap_count, 0);
        assert!(report.checks.iter().all(|c| c.pass));
    }

    #[test]
    fn rejects_wrong_k() {
        let inst = Instance::new(2, 4, vec![8, 3], "t".into()).unwrap();
        for k in [1usize, 3] {
            let trace = traced_run(&inst, k);
            match phase_report(&inst, &trace) {
                Err(Error::WrongK { expected: 2, got }) => assert_eq!(got, k),
                other => panic!("expected WrongK, got {other:?}"),
            }
        }
    }

    #[test]
    fn balanced_instance_is_one_zero_spread_phase() {
        let inst = Instance::new(2, 3, vec![3, 3], "t".into()).unwrap();
        let config = SearchConfig::new(2, InitStrategy::RoundRobin, PivotRule::First);
        let mut sink = VecSink::new();
        run(&inst, &config, &mut sink).unwrap();
        let trace = sink.into_trace();
        assert!(trace.records.is_empty());
        let report = phase_report(&inst, &trace).unwrap();
        assert_eq!(report.boundaries, vec![0]);
        assert!(report.phases[0].delta_h.is_zero());
        // Zero spread puts every machine in gamma_l.
        assert_eq!(report.phases[0].gamma_l_sizes, vec![2]);
        assert!(report.checks.iter().all(|c| c.pass));
    }

    fn synthetic_swap_trace(jobs: Vec<i128>, mv: Move, loads_after: Vec<i128>) -> (Instance, Trace) {
        let scale = 4;
        let inst = Instance::new(2, scale, jobs, "t".into()).unwrap();
        let assignment = vec![0, 0, 1];
        let initial_loads: Vec<i128> = {
            let mut l = vec![0i128; 2];
            for (j, &m) in assignment.iter().enumerate() {
                l[m] += inst.job_num(j);
            }
            l
        };
        let mk = |t: u64, mv: Option<Move>, loads: Vec<i128>| {
            let table = LoadTable::from_loads(loads.clone(), scale);
            IterationRecord {
                t,
                mv,
                loads,
                makespan: table.makespan(),
                num_critical: table.critical().len(),
                phi: Dyadic::new(potential_phi_num(table.loads()), scale),
                delta: table.delta(),
                move_type: if t == 0 { None } else { Some(MoveType::Unclassified) },
                gamma_l: vec![],
            }
        };
        let trace = Trace {
            meta: TraceMeta {
                k: 2,
                scale_log2: scale,
                assignment,
                delta_min: None,
                note: None,
            },
            initial: mk(0, None, initial_loads),
            records: vec![mk(1, Some(mv), loads_after)],
        };
        (inst, trace)
    }

    #[test]
    fn rank_potential_increase_passes_and_decrease_fails() {
        // Swap p=5 against p=2: target rank sum 1 -> 3.
        let (inst, trace) = synthetic_swap_trace(
            vec![5, 4, 2],
            Move { i: 0, ip: 1, a: vec![0], b: vec![2] },
            vec![6, 5],
        );
        let report = phase_report(&inst, &trace).unwrap();
        assert_eq!(report.rank_checked_swaps, 1);
        assert!(report.checks.iter().all(|c| c.pass), "{:?}", report.checks);

        // Swap p=2 against p=4: target rank sum 2 -> 1, must be flagged.
        let (inst, trace) = synthetic_swap_trace(
            vec![2, 5, 4],
            Move { i: 0, ip: 1, a: vec![0], b: vec![2] },
            vec![9, 2],
        );
        let report = phase_report(&inst, &trace).unwrap();
        let rank = report
            .checks
            .iter()
            .find(|c| c.check == "rank-potential-strict-increase")
            .unwrap();
        assert!(!rank.pass);
        assert_eq!(rank.first_violation_t, Some(1));
    }

    #[test]
    fn random_runs_pass_all_phase_checks() {
        for seed in 0..6u64 {
            let inst = generate_uniform(9, 3, 53, 700 + seed).unwrap();
            let trace = traced_run(&inst, 2);
            let report = phase_report(&inst, &trace).unwrap();
            assert!(
                report.checks.iter().all(|c| c.pass),
                "seed {seed}: {:?}",
                report.checks
            );
            assert_eq!(report.jump_count + report.swap_count, trace.records.len());
        }
    }
}
