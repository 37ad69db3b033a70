//! The k-swap neighborhood: moves, the exact improvement predicate,
//! canonical enumeration, pivot rules, and the instance constant delta_min.

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rng::{self, Rng};
use crate::schedule::{load_table, LoadTable, Schedule};
use serde::{Deserialize, Serialize};
use std::ops::ControlFlow;

pub const DEFAULT_WORK_BUDGET: u64 = 100_000_000;

/// Exchange job sets A (from the critical source i) and B between machines
/// i and ip. |B| = 0 is a jump. Job lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub i: usize,
    pub ip: usize,
    #[serde(rename = "A")]
    pub a: Vec<usize>,
    #[serde(rename = "B")]
    pub b: Vec<usize>,
}

impl Move {
    pub fn is_jump(&self) -> bool {
        self.b.is_empty()
    }

    pub fn size(&self) -> usize {
        self.a.len() + self.b.len()
    }

    /// The exchange run backwards: same sets, source and target swapped.
    pub fn reversed(&self) -> Move {
        Move { i: self.ip, ip: self.i, a: self.a.clone(), b: self.b.clone() }
    }
}

fn sorted_unique(set: &[usize]) -> bool {
    set.windows(2).all(|w| w[0] < w[1])
}

/// Validates a move against a schedule: distinct machines, A on i, B on ip,
/// sorted duplicate-free sets, at least one job moved.
pub fn check_move(inst: &Instance, sched: &Schedule, mv: &Move) -> Result<()> {
    if mv.i >= inst.m() || mv.ip >= inst.m() || mv.i == mv.ip {
        return Err(Error::InvalidMove(format!(
            "machines ({}, {}) invalid for m = {}",
            mv.i,
            mv.ip,
            inst.m()
        )));
    }
    if mv.a.is_empty() && mv.b.is_empty() {
        return Err(Error::InvalidMove("move exchanges no jobs".into()));
    }
    if !sorted_unique(&mv.a) || !sorted_unique(&mv.b) {
        return Err(Error::InvalidMove("job sets must be sorted and duplicate-free".into()));
    }
    for &j in &mv.a {
        if j >= inst.n() || sched.assignment[j] != mv.i {
            return Err(Error::InvalidMove(format!("job {j} is not on machine {}", mv.i)));
        }
    }
    for &j in &mv.b {
        if j >= inst.n() || sched.assignment[j] != mv.ip {
            return Err(Error::InvalidMove(format!("job {j} is not on machine {}", mv.ip)));
        }
    }
    Ok(())
}

/// The exact improvement predicate: i critical and
/// 0 < p(A) - p(B) < L_i - L_ip, with |A| >= 1 and |A| + |B| <= k.
/// Both inequalities are strict; ties never count as improvements.
pub fn is_improving(inst: &Instance, table: &LoadTable, k: usize, mv: &Move) -> bool {
    if mv.a.is_empty() || mv.size() > k || !table.is_critical(mv.i) {
        return false;
    }
    let gain = inst.set_sum(&mv.a) - inst.set_sum(&mv.b);
    0 < gain && gain < table.load_num(mv.i) - table.load_num(mv.ip)
}

/// Applies a move, consuming the schedule. Loads change by exactly
/// +-(p(A) - p(B)); no other machine is touched.
pub fn apply_move(inst: &Instance, mut sched: Schedule, mv: &Move) -> Result<Schedule> {
    check_move(inst, &sched, mv)?;
    for &j in &mv.a {
        sched.assignment[j] = mv.ip;
    }
    for &j in &mv.b {
        sched.assignment[j] = mv.i;
    }
    Ok(sched)
}

/// Canonical enumeration order: ascending (source, target, |A| + |B|,
/// lexicographic A, lexicographic B). Sources are exactly the critical
/// machines. The visitor receives each structurally valid move with its
/// exact gain numerator p(A) - p(B) and may stop the stream early.
pub fn visit_moves<F>(inst: &Instance, sched: &Schedule, table: &LoadTable, k: usize, f: &mut F)
where
    F: FnMut(&Move, i128) -> ControlFlow<()>,
{
    debug_assert!(k >= 1);
    let jobs_by_machine: Vec<Vec<usize>> = (0..inst.m()).map(|i| sched.jobs_on(i)).collect();
    for &i in table.critical() {
        let src = &jobs_by_machine[i];
        if src.is_empty() {
            continue;
        }
        for ip in 0..inst.m() {
            if ip == i {
                continue;
            }
            let tgt = &jobs_by_machine[ip];
            for sigma in 1..=k.min(src.len() + tgt.len()) {
                let mut a = Vec::with_capacity(sigma);
                if let ControlFlow::Break(()) =
                    visit_a(inst, i, ip, src, tgt, sigma, 0, &mut a, 0, f)
                {
                    return;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn visit_a<F>(
    inst: &Instance,
    i: usize,
    ip: usize,
    src: &[usize],
    tgt: &[usize],
    sigma: usize,
    start: usize,
    a: &mut Vec<usize>,
    sum_a: i128,
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&Move, i128) -> ControlFlow<()>,
{
    for idx in start..src.len() {
        let j = src[idx];
        a.push(j);
        let sum_a = sum_a + inst.job_num(j);
        let need = sigma - a.len();
        if need == 0 {
            let mv = Move { i, ip, a: a.clone(), b: Vec::new() };
            if let ControlFlow::Break(()) = f(&mv, sum_a) {
                a.pop();
                return ControlFlow::Break(());
            }
        } else if need <= tgt.len() {
            let mut b = Vec::with_capacity(need);
            if let ControlFlow::Break(()) =
                visit_b(inst, i, ip, a, sum_a, tgt, need, 0, &mut b, 0, f)
            {
                a.pop();
                return ControlFlow::Break(());
            }
        }
        if a.len() < sigma {
            if let ControlFlow::Break(()) = visit_a(inst, i, ip, src, tgt, sigma, idx + 1, a, sum_a, f)
            {
                a.pop();
                return ControlFlow::Break(());
            }
        }
        a.pop();
    }
    ControlFlow::Continue(())
}

#[allow(clippy::too_many_arguments)]
fn visit_b<F>(
    inst: &Instance,
    i: usize,
    ip: usize,
    a: &[usize],
    sum_a: i128,
    tgt: &[usize],
    need: usize,
    start: usize,
    b: &mut Vec<usize>,
    sum_b: i128,
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&Move, i128) -> ControlFlow<()>,
{
    if need == 0 {
        let mv = Move { i, ip, a: a.to_vec(), b: b.clone() };
        return f(&mv, sum_a - sum_b);
    }
    // Keep enough remaining elements to fill B.
    for idx in start..=tgt.len().saturating_sub(need) {
        let j = tgt[idx];
        b.push(j);
        if let ControlFlow::Break(()) = visit_b(
            inst,
            i,
            ip,
            a,
            sum_a,
            tgt,
            need - 1,
            idx + 1,
            b,
            sum_b + inst.job_num(j),
            f,
        ) {
            b.pop();
            return ControlFlow::Break(());
        }
        b.pop();
    }
    ControlFlow::Continue(())
}

/// All structurally valid moves from critical machines, in canonical order.
pub fn enumerate_moves(inst: &Instance, sched: &Schedule, k: usize) -> Result<Vec<Move>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let table = load_table(inst, sched);
    let mut out = Vec::new();
    visit_moves(inst, sched, &table, k, &mut |mv, _| {
        out.push(mv.clone());
        ControlFlow::Continue(())
    });
    Ok(out)
}

/// How the next improving move is picked from the canonical stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum PivotRule {
    /// Canonically first improving move.
    First,
    /// Largest gain p(A) - p(B); ties go to the canonically first.
    Best,
    /// Uniform over all improving moves, from a seeded stream.
    Random { seed: u64 },
}

impl PivotRule {
    pub fn name(&self) -> &'static str {
        match self {
            PivotRule::First => "first",
            PivotRule::Best => "best",
            PivotRule::Random { .. } => "random",
        }
    }
}

/// Per-run pivot state (the random rule owns its RNG stream).
pub enum Pivot {
    First,
    Best,
    Random(Box<Rng>),
}

impl Pivot {
    pub fn new(rule: PivotRule) -> Self {
        match rule {
            PivotRule::First => Pivot::First,
            PivotRule::Best => Pivot::Best,
            PivotRule::Random { seed } => Pivot::Random(Box::new(rng::seeded(seed))),
        }
    }
}

/// Selects an improving move under the pivot rule, or None at a local optimum.
pub fn find_improving(
    inst: &Instance,
    sched: &Schedule,
    table: &LoadTable,
    k: usize,
    pivot: &mut Pivot,
) -> Option<Move> {
    match pivot {
        Pivot::First => {
            let mut found = None;
            visit_moves(inst, sched, table, k, &mut |mv, gain| {
                if gain > 0 && gain < table.load_num(mv.i) - table.load_num(mv.ip) {
                    found = Some(mv.clone());
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            found
        }
        Pivot::Best => {
            let mut best: Option<(i128, Move)> = None;
            visit_moves(inst, sched, table, k, &mut |mv, gain| {
                if gain > 0 && gain < table.load_num(mv.i) - table.load_num(mv.ip) {
                    match &best {
                        Some((g, _)) if *g >= gain => {}
                        _ => best = Some((gain, mv.clone())),
                    }
                }
                ControlFlow::Continue(())
            });
            best.map(|(_, mv)| mv)
        }
        Pivot::Random(rng) => {
            let mut improving = Vec::new();
            visit_moves(inst, sched, table, k, &mut |mv, gain| {
                if gain > 0 && gain < table.load_num(mv.i) - table.load_num(mv.ip) {
                    improving.push(mv.clone());
                }
                ControlFlow::Continue(())
            });
            if improving.is_empty() {
                None
            } else {
                let idx = rng::uniform_below(rng, improving.len() as u64) as usize;
                Some(improving.swap_remove(idx))
            }
        }
    }
}

/// delta_min with its minimizing witness pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaMin {
    pub value: Dyadic,
    pub witness_a: Vec<usize>,
    pub witness_b: Vec<usize>,
}

/// Minimum of |p(A) - p(B)| over disjoint job sets with 1 <= |A| + |B| <= k.
/// Exhaustive enumeration, O((2n)^k) pairs; the unordered pair {A, B} is
/// visited once, oriented so A holds the smallest index. A zero minimum
/// (ties) is reported as the distinct zero-delta error since the smoothed
/// bounds divide by delta_min.
pub fn delta_min(inst: &Instance, k: usize, budget: u64) -> Result<DeltaMin> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let n = inst.n() as u128;
    let required = (2 * n).checked_pow(k as u32).unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let mut best: Option<DeltaMin> = None;
    let all: Vec<usize> = (0..inst.n()).collect();
    for sigma in 1..=k.min(inst.n()) {
        let mut a = Vec::with_capacity(sigma);
        if let Some(zero) = dm_visit_a(inst, &all, sigma, 0, &mut a, 0, &mut best)? {
            return Err(Error::ZeroDelta { a: zero.0, b: zero.1 });
        }
    }
    best.ok_or_else(|| Error::EmptyInput("no candidate pairs".into()))
}

type ZeroWitness = (Vec<usize>, Vec<usize>);

fn dm_visit_a(
    inst: &Instance,
    all: &[usize],
    sigma: usize,
    start: usize,
    a: &mut Vec<usize>,
    sum_a: i128,
    best: &mut Option<DeltaMin>,
) -> Result<Option<ZeroWitness>> {
    for idx in start..all.len() {
        let j = all[idx];
        a.push(j);
        let sum_a = sum_a + inst.job_num(j);
        let need = sigma - a.len();
        if need == 0 {
            consider(inst, a, &[], sum_a, 0, best);
        } else {
            // B of exact size `need`, drawn from indices above min(A) and
            // disjoint from A; min(A) = a[0] keeps each unordered pair unique.
            let mut b = Vec::with_capacity(need);
            if let Some(z) = dm_visit_b(inst, all, a, sum_a, need, a[0] + 1, &mut b, 0, best) {
                a.pop();
                return Ok(Some(z));
            }
        }
        if a.len() < sigma {
            if let Some(z) = dm_visit_a(inst, all, sigma, idx + 1, a, sum_a, best)? {
                a.pop();
                return Ok(Some(z));
            }
        }
        a.pop();
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn dm_visit_b(
    inst: &Instance,
    all: &[usize],
    a: &[usize],
    sum_a: i128,
    need: usize,
    start: usize,
    b: &mut Vec<usize>,
    sum_b: i128,
    best: &mut Option<DeltaMin>,
) -> Option<ZeroWitness> {
    if need == 0 {
        if sum_a == sum_b {
            return Some((a.to_vec(), b.clone()));
        }
        consider(inst, a, b, sum_a, sum_b, best);
        return None;
    }
    for idx in start..all.len() {
        let j = all[idx];
        if a.binary_search(&j).is_ok() {
            continue;
        }
        b.push(j);
        if let Some(z) = dm_visit_b(inst, all, a, sum_a, need - 1, idx + 1, b, sum_b + inst.job_num(j), best)
        {
            b.pop();
            return Some(z);
        }
        b.pop();
    }
    None
}

fn consider(
    inst: &Instance,
    a: &[usize],
    b: &[usize],
    sum_a: i128,
    sum_b: i128,
    best: &mut Option<DeltaMin>,
) {
    let d = (sum_a - sum_b).abs();
    let better = match best {
        Some(cur) => d < cur.value.numerator(),
        None => true,
    };
    if better {
        *best = Some(DeltaMin {
            value: inst.dyadic(d),
            witness_a: a.to_vec(),
            witness_b: b.to_vec(),
        });
    }
}
