//! Brute-force oracles kept deliberately separate from the production code
//! paths: local optimality is re-checked per machine pair with bitmask
//! subsets, delta_min is recomputed from per-job ternary assignments, and
//! the global optimum comes from branch and bound. None of these reuse the
//! canonical move enumeration.

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::neighborhood::Move;
use crate::schedule::{load_table, Schedule};

pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

struct WorkMeter {
    used: u64,
    budget: u64,
}

impl WorkMeter {
    fn new(budget: u64) -> Self {
        WorkMeter { used: 0, budget }
    }

    fn spend(&mut self, amount: u64) -> Result<()> {
        self.used = self.used.saturating_add(amount);
        if self.used > self.budget {
            Err(Error::BudgetExceeded { required: self.used as u128, budget: self.budget })
        } else {
            Ok(())
        }
    }
}

/// Checks k-swap local optimality by exhaustive subset masks per machine
/// pair. Ok(None) certifies a local optimum; Ok(Some(mv)) is an improving
/// counterexample.
pub fn verify_local_opt(
    inst: &Instance,
    sched: &Schedule,
    k: usize,
    budget: u64,
) -> Result<Option<Move>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let table = load_table(inst, sched);
    let mut meter = WorkMeter::new(budget);
    let per_machine: Vec<Vec<usize>> = (0..inst.m()).map(|i| sched.jobs_on(i)).collect();
    for jobs in &per_machine {
        if jobs.len() >= 48 {
            return Err(Error::BudgetExceeded { required: 1u128 << jobs.len(), budget });
        }
    }
    for &i in table.critical() {
        let source = &per_machine[i];
        for ip in 0..inst.m() {
            if ip == i {
                continue;
            }
            let target = &per_machine[ip];
            let gap = table.load_num(i) - table.load_num(ip);
            for amask in 1u64..(1u64 << source.len()) {
                meter.spend(1)?;
                let asize = amask.count_ones() as usize;
                if asize > k {
                    continue;
                }
                let asum: i128 = source
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| amask >> pos & 1 == 1)
                    .map(|(_, &j)| inst.job_num(j))
                    .sum();
                for bmask in 0u64..(1u64 << target.len()) {
                    meter.spend(1)?;
                    if asize + bmask.count_ones() as usize > k {
                        continue;
                    }
                    let bsum: i128 = target
                        .iter()
                        .enumerate()
                        .filter(|(pos, _)| bmask >> pos & 1 == 1)
                        .map(|(_, &j)| inst.job_num(j))
                        .sum();
                    let d = asum - bsum;
                    if d > 0 && d < gap {
                        let a: Vec<usize> = source
                            .iter()
                            .enumerate()
                            .filter(|(pos, _)| amask >> pos & 1 == 1)
                            .map(|(_, &j)| j)
                            .collect();
                        let b: Vec<usize> = target
                            .iter()
                            .enumerate()
                            .filter(|(pos, _)| bmask >> pos & 1 == 1)
                            .map(|(_, &j)| j)
                            .collect();
                        return Ok(Some(Move { i, ip, a, b }));
                    }
                }
            }
        }
    }
    Ok(None)
}

fn ceil_div(a: i128, b: i128) -> i128 {
    (a + b - 1) / b
}

/// Optimal makespan by branch and bound over job-to-machine assignments,
/// jobs in descending order, machines deduplicated by current load. Seeded
/// with a greedy longest-processing-time bound.
pub fn global_opt(inst: &Instance, budget: u64) -> Result<Dyadic> {
    let m = inst.m();
    let mut jobs: Vec<i128> = inst.job_nums().to_vec();
    jobs.sort_unstable_by(|a, b| b.cmp(a));
    let total: i128 = jobs.iter().sum();
    let floor_bound = ceil_div(total, m as i128).max(jobs[0]);

    // Greedy seed: largest job onto the least-loaded machine.
    let mut greedy = vec![0i128; m];
    for &p in &jobs {
        let best = (0..m).min_by_key(|&i| greedy[i]).unwrap();
        greedy[best] += p;
    }
    let mut best = *greedy.iter().max().unwrap();

    let mut meter = WorkMeter::new(budget);
    let mut loads = vec![0i128; m];
    fn descend(
        jobs: &[i128],
        idx: usize,
        loads: &mut Vec<i128>,
        current_max: i128,
        best: &mut i128,
        floor_bound: i128,
        meter: &mut WorkMeter,
    ) -> Result<()> {
        meter.spend(1)?;
        if current_max >= *best || *best == floor_bound {
            return Ok(());
        }
        if idx == jobs.len() {
            *best = current_max;
            return Ok(());
        }
        let p = jobs[idx];
        let mut tried: Vec<i128> = Vec::with_capacity(loads.len());
        for i in 0..loads.len() {
            if tried.contains(&loads[i]) {
                continue;
            }
            tried.push(loads[i]);
            loads[i] += p;
            let next_max = current_max.max(loads[i]);
            descend(jobs, idx + 1, loads, next_max, best, floor_bound, meter)?;
            loads[i] -= p;
        }
        Ok(())
    }
    descend(&jobs, 0, &mut loads, 0, &mut best, floor_bound, &mut meter)?;
    Ok(Dyadic::new(best, inst.scale_log2()))
}

/// Reference delta_min: walks per-job ternary choices (skip, put in A, put
/// in B) and minimizes |p(A) - p(B)| over 1 <= |A| + |B| <= k. Returns the
/// plain value; zero means the instance has ties.
pub fn delta_min_reference(inst: &Instance, k: usize, budget: u64) -> Result<Dyadic> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let n = inst.n();
    let mut required = 0u128;
    let mut choose = 1u128;
    for sigma in 0..=k.min(n) {
        if sigma > 0 {
            choose = choose.saturating_mul((n - sigma + 1) as u128) / sigma as u128;
        }
        required = required.saturating_add(choose << sigma);
    }
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let mut best: Option<i128> = None;
    fn walk(
        inst: &Instance,
        j: usize,
        used: usize,
        k: usize,
        sum_a: i128,
        sum_b: i128,
        best: &mut Option<i128>,
    ) {
        if j == inst.n() {
            if used >= 1 {
                let d = (sum_a - sum_b).abs();
                if best.map_or(true, |cur| d < cur) {
                    *best = Some(d);
                }
            }
            return;
        }
        walk(inst, j + 1, used, k, sum_a, sum_b, best);
        if used < k {
            walk(inst, j + 1, used + 1, k, sum_a + inst.job_num(j), sum_b, best);
            walk(inst, j + 1, used + 1, k, sum_a, sum_b + inst.job_num(j), best);
        }
    }
    walk(inst, 0, 0, k.min(n), 0, 0, &mut best);
    Ok(Dyadic::new(best.expect("n >= 1 yields candidates"), inst.scale_log2()))
}
