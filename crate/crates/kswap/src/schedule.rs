//! Schedules (job -> machine assignments) and exact load bookkeeping.

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::instance::Instance;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub assignment: Vec<usize>,
}

impl Schedule {
    pub fn new(inst: &Instance, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != inst.n() {
            return Err(Error::Malformed(format!(
                "assignment has {} entries for {} jobs",
                assignment.len(),
                inst.n()
            )));
        }
        if let Some((j, &i)) = assignment.iter().enumerate().find(|(_, &i)| i >= inst.m()) {
            return Err(Error::Malformed(format!(
                "job {j} assigned to machine {i}, but m = {}",
                inst.m()
            )));
        }
        Ok(Schedule { assignment })
    }

    pub fn machine_of(&self, j: usize) -> usize {
        self.assignment[j]
    }

    /// Jobs on machine i, ascending.
    pub fn jobs_on(&self, i: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &mi)| mi == i)
            .map(|(j, _)| j)
            .collect()
    }
}

pub fn parse_schedule(text: &str, inst: &Instance) -> Result<Schedule> {
    let raw: Schedule =
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("schedule json: {e}")))?;
    Schedule::new(inst, raw.assignment)
}

pub fn write_schedule(sched: &Schedule) -> String {
    let mut out = serde_json::to_string_pretty(sched).expect("schedule serialization");
    out.push('\n');
    out
}

/// Exact machine loads with the derived quantities every check needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadTable {
    loads: Vec<i128>,
    scale_log2: u32,
    max_load: i128,
    min_load: i128,
    critical: Vec<usize>,
}

impl LoadTable {
    pub fn from_loads(loads: Vec<i128>, scale_log2: u32) -> Self {
        debug_assert!(!loads.is_empty());
        let max_load = *loads.iter().max().unwrap();
        let min_load = *loads.iter().min().unwrap();
        let critical = loads
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == max_load)
            .map(|(i, _)| i)
            .collect();
        LoadTable { loads, scale_log2, max_load, min_load, critical }
    }

    pub fn loads(&self) -> &[i128] {
        &self.loads
    }

    pub fn m(&self) -> usize {
        self.loads.len()
    }

    pub fn scale_log2(&self) -> u32 {
        self.scale_log2
    }

    pub fn load_num(&self, i: usize) -> i128 {
        self.loads[i]
    }

    pub fn load(&self, i: usize) -> Dyadic {
        Dyadic::new(self.loads[i], self.scale_log2)
    }

    pub fn makespan_num(&self) -> i128 {
        self.max_load
    }

    pub fn makespan(&self) -> Dyadic {
        Dyadic::new(self.max_load, self.scale_log2)
    }

    pub fn min_load(&self) -> Dyadic {
        Dyadic::new(self.min_load, self.scale_log2)
    }

    /// Delta = L_max - L_min.
    pub fn delta(&self) -> Dyadic {
        Dyadic::new(self.max_load - self.min_load, self.scale_log2)
    }

    /// Machines at maximum load, ascending.
    pub fn critical(&self) -> &[usize] {
        &self.critical
    }

    pub fn is_critical(&self, i: usize) -> bool {
        self.loads[i] == self.max_load
    }

    /// 1-based load rank of machine i (ties broken by machine index).
    pub fn rank_of(&self, i: usize) -> usize {
        1 + self
            .loads
            .iter()
            .enumerate()
            .filter(|&(j, &l)| (l, j) < (self.loads[i], i))
            .count()
    }

    /// Loads sorted ascending (numerators).
    pub fn sorted_loads(&self) -> Vec<i128> {
        let mut v = self.loads.clone();
        v.sort_unstable();
        v
    }
}

pub fn load_table(inst: &Instance, sched: &Schedule) -> LoadTable {
    debug_assert_eq!(sched.assignment.len(), inst.n());
    let mut loads = vec![0i128; inst.m()];
    for (j, &i) in sched.assignment.iter().enumerate() {
        loads[i] += inst.job_num(j);
    }
    LoadTable::from_loads(loads, inst.scale_log2())
}

/// The ell-th smallest load (1-based) and the machine holding it,
/// ties broken by machine index.
pub fn ellmin_load(table: &LoadTable, ell: usize) -> Result<(Dyadic, usize)> {
    if ell == 0 || ell > table.m() {
        return Err(Error::InvalidArgument(format!(
            "ell must be in [1, {}], got {ell}",
            table.m()
        )));
    }
    let mut order: Vec<usize> = (0..table.m()).collect();
    order.sort_by_key(|&i| (table.loads[i], i));
    let i = order[ell - 1];
    Ok((table.load(i), i))
}

/// Splits machines into (gamma_l, gamma_s) around the threshold L_max - gap.
/// Strict: gamma_l = { i : L_i > L_max - gap } (the smoothed split at gap
/// delta_min); non-strict uses >= (the worst-case split at gap Delta_h/2).
pub fn gamma_partition(
    table: &LoadTable,
    gap: Dyadic,
    strict: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !gap.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "threshold gap must be positive, got {gap}"
        )));
    }
    let threshold = table.makespan().sub(&gap);
    let mut gamma_l = Vec::new();
    let mut gamma_s = Vec::new();
    for i in 0..table.m() {
        let li = table.load(i);
        let in_l = if strict { li > threshold } else { li >= threshold };
        if in_l {
            gamma_l.push(i);
        } else {
            gamma_s.push(i);
        }
    }
    Ok((gamma_l, gamma_s))
}

/// Lexicographic objective: makespan first, then number of critical machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Objective {
    pub makespan: Dyadic,
    pub num_critical: usize,
}

pub fn objective(table: &LoadTable) -> Objective {
    Objective {
        makespan: table.makespan(),
        num_critical: table.critical().len(),
    }
}
