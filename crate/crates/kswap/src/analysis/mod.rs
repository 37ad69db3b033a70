//! Post-hoc validation: exact potentials, the swap inequality, move
//! classification, and the per-iteration lemma checks over a replayed trace.

pub mod phase;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::neighborhood::{self, check_move, DeltaMin};
use crate::schedule::{gamma_partition, load_table, LoadTable, Schedule};
use crate::trace::{MoveType, Trace};
use serde::Serialize;
use std::collections::HashSet;

/// Potential numerator: sum of |L_i - L_ip| over ordered machine pairs.
pub fn potential_phi_num(loads: &[i128]) -> i128 {
    let mut phi = 0i128;
    for (x, &a) in loads.iter().enumerate() {
        for &b in &loads[x + 1..] {
            phi += 2 * (a - b).abs();
        }
    }
    phi
}

pub fn potential_phi(table: &LoadTable) -> Dyadic {
    Dyadic::new(potential_phi_num(table.loads()), table.scale_log2())
}

/// Proof cases of the inequality |a-c| + |b+c| <= |a| + |b| for 0 < c < a-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InequalityCase {
    /// a > b >= 0: always equality.
    Case1,
    /// b < a < 0: always equality.
    Case2,
    /// a >= 0 > b, split on c >= a and on the sign of b + c.
    Case3 { c_ge_a: bool, bc_negative: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InequalityWitness {
    pub lhs: Dyadic,
    pub rhs: Dyadic,
    pub case: InequalityCase,
    pub holds: bool,
}

/// Evaluates both sides exactly and labels the case. Errors unless 0 < c < a - b.
pub fn abs_swap_inequality(a: Dyadic, b: Dyadic, c: Dyadic) -> Result<InequalityWitness> {
    let zero = Dyadic::zero(c.scale_log2());
    if !(c > zero && c < a.sub(&b)) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < c < a - b, got a={a}, b={b}, c={c}"
        )));
    }
    let lhs = a.sub(&c).abs().add(&b.add(&c).abs());
    let rhs = a.abs().add(&b.abs());
    let zero_a = Dyadic::zero(a.scale_log2());
    let zero_b = Dyadic::zero(b.scale_log2());
    let case = if b >= zero_b {
        InequalityCase::Case1
    } else if a < zero_a {
        InequalityCase::Case2
    } else {
        InequalityCase::Case3 {
            c_ge_a: c >= a,
            bc_negative: b.add(&c) < zero,
        }
    };
    Ok(InequalityWitness { lhs, rhs, case, holds: lhs <= rhs })
}

/// Type of an applied move, judged at the resulting state: type-1 iff the
/// target machine lies in gamma_l(t+1) under the strict delta_min split.
pub fn classify_move(after: &LoadTable, target: usize, delta_min: Dyadic) -> Result<MoveType> {
    if !delta_min.is_positive() {
        return Err(Error::InvalidArgument("delta_min must be positive".into()));
    }
    let threshold = after.makespan().sub(&delta_min);
    if after.load(target) > threshold {
        Ok(MoveType::Type1)
    } else {
        Ok(MoveType::Type2)
    }
}

/// A trace replayed from scratch against its instance.
pub struct Replay {
    /// Load tables for states S_0 .. S_T.
    pub tables: Vec<LoadTable>,
    /// Recomputed delta_min (None on ties or blown budget).
    pub delta_min: Option<DeltaMin>,
    pub zero_delta: bool,
    pub dm_budget_exceeded: bool,
    /// Recomputed classification per iteration (Unclassified without delta_min).
    pub move_types: Vec<MoveType>,
}

/// Structural replay: rebuilds every state's load table from the header
/// assignment, validating each move against the instance as it goes.
pub fn replay_tables(inst: &Instance, trace: &Trace) -> Result<Vec<LoadTable>> {
    if trace.meta.scale_log2 != inst.scale_log2() {
        return Err(Error::InconsistentScale(format!(
            "trace scale 2^{} vs instance scale 2^{}",
            trace.meta.scale_log2,
            inst.scale_log2()
        )));
    }
    let mut sched = Schedule::new(inst, trace.meta.assignment.clone())?;
    let mut tables = vec![load_table(inst, &sched)];
    for rec in &trace.records {
        let mv = rec.mv.as_ref().ok_or_else(|| {
            Error::Malformed(format!("record t={} has no move", rec.t))
        })?;
        check_move(inst, &sched, mv)?;
        sched = neighborhood::apply_move(inst, sched, mv)?;
        tables.push(load_table(inst, &sched));
    }
    Ok(tables)
}

/// Replays a trace and recomputes delta_min plus every move's classification.
pub fn replay(inst: &Instance, trace: &Trace, budget: u64) -> Result<Replay> {
    let tables = replay_tables(inst, trace)?;
    let (delta_min, zero_delta, dm_budget_exceeded) =
        match neighborhood::delta_min(inst, trace.meta.k, budget) {
            Ok(dm) => (Some(dm), false, false),
            Err(Error::ZeroDelta { .. }) => (None, true, false),
            Err(Error::BudgetExceeded { .. }) => (None, false, true),
            Err(e) => return Err(e),
        };
    let mut move_types = Vec::with_capacity(trace.records.len());
    for (idx, rec) in trace.records.iter().enumerate() {
        let mv = rec.mv.as_ref().expect("validated by replay_tables");
        let mt = match &delta_min {
            Some(dm) => classify_move(&tables[idx + 1], mv.ip, dm.value)?,
            None => MoveType::Unclassified,
        };
        move_types.push(mt);
    }
    Ok(Replay { tables, delta_min, zero_delta, dm_budget_exceeded, move_types })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub pass: bool,
    pub skipped: bool,
    pub first_violation_t: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn pass(name: &str) -> Self {
        CheckResult {
            check: name.into(),
            pass: true,
            skipped: false,
            first_violation_t: None,
            detail: None,
        }
    }

    fn fail(name: &str, t: u64, detail: String) -> Self {
        CheckResult {
            check: name.into(),
            pass: false,
            skipped: false,
            first_violation_t: Some(t),
            detail: Some(detail),
        }
    }

    fn skip(name: &str, why: &str) -> Self {
        CheckResult {
            check: name.into(),
            pass: true,
            skipped: true,
            first_violation_t: None,
            detail: Some(why.into()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    /// Quantities reported but deliberately not asserted.
    pub notes: Vec<String>,
}

impl ValidationReport {
    fn from_checks(checks: Vec<CheckResult>, notes: Vec<String>) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        ValidationReport { passed, checks, notes }
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

/// Lemma PhiLowerBound: every type-2 iteration drops phi by >= 4 delta_min.
pub fn check_type2_phi_drop(trace: &Trace, replay: &Replay) -> CheckResult {
    let name = "type2-phi-drop";
    let Some(dm) = &replay.delta_min else {
        return CheckResult::skip(name, "delta_min unavailable");
    };
    let bound = dm.value.numerator() * 4;
    for (idx, mt) in replay.move_types.iter().enumerate() {
        if *mt != MoveType::Type2 {
            continue;
        }
        let before = potential_phi_num(replay.tables[idx].loads());
        let after = potential_phi_num(replay.tables[idx + 1].loads());
        if before - after < bound {
            let t = trace.records[idx].t;
            return CheckResult::fail(
                name,
                t,
                format!("phi drop {} < 4*delta_min {bound} at t={t}", before - after),
            );
        }
    }
    CheckResult::pass(name)
}

fn gamma_s_sorted_loads(table: &LoadTable, gap: Dyadic) -> Vec<i128> {
    let (_, gs) = gamma_partition(table, gap, true).expect("positive gap");
    let mut loads: Vec<i128> = gs.iter().map(|&i| table.load_num(i)).collect();
    loads.sort_unstable();
    loads
}

/// Lemma llminMonotone: on type-1 iterations the sorted gamma_s loads are
/// pointwise non-decreasing (and |gamma_s| does not grow).
pub fn check_llmin_monotone(trace: &Trace, replay: &Replay) -> CheckResult {
    let name = "llmin-monotone";
    let Some(dm) = &replay.delta_min else {
        return CheckResult::skip(name, "delta_min unavailable");
    };
    for (idx, mt) in replay.move_types.iter().enumerate() {
        if *mt != MoveType::Type1 {
            continue;
        }
        let t = trace.records[idx].t;
        let before = gamma_s_sorted_loads(&replay.tables[idx], dm.value);
        let after = gamma_s_sorted_loads(&replay.tables[idx + 1], dm.value);
        if after.len() > before.len() {
            return CheckResult::fail(
                name,
                t,
                format!("|gamma_s| grew {} -> {} at t={t}", before.len(), after.len()),
            );
        }
        for (ell, (&la, &lb)) in after.iter().zip(before.iter()).enumerate() {
            if la < lb {
                return CheckResult::fail(
                    name,
                    t,
                    format!("rank {} gamma_s load decreased {lb} -> {la} at t={t}", ell + 1),
                );
            }
        }
    }
    CheckResult::pass(name)
}

/// Corollary type1and2 via Lemma fixTwojobs2: within one maximal block of
/// consecutive type-1 iterations no (A, B, ell) triple repeats, where ell is
/// the target's load rank before the move.
pub fn check_type1_no_repeat(trace: &Trace, replay: &Replay) -> CheckResult {
    let name = "type1-no-repeat";
    if replay.delta_min.is_none() {
        return CheckResult::skip(name, "delta_min unavailable");
    }
    let mut seen: HashSet<(Vec<usize>, Vec<usize>, usize)> = HashSet::new();
    for (idx, mt) in replay.move_types.iter().enumerate() {
        if *mt != MoveType::Type1 {
            seen.clear();
            continue;
        }
        let mv = trace.records[idx].mv.as_ref().expect("iteration has move");
        let ell = replay.tables[idx].rank_of(mv.ip);
        if !seen.insert((mv.a.clone(), mv.b.clone(), ell)) {
            let t = trace.records[idx].t;
            return CheckResult::fail(
                name,
                t,
                format!("triple (A={:?}, B={:?}, ell={ell}) repeated at t={t}", mv.a, mv.b),
            );
        }
    }
    CheckResult::pass(name)
}

/// Observation phiUpperBound and the type-2 counting bound
/// type2_count <= phi(1) / (4 delta_min); the T envelope is reported only.
pub fn check_bounds(
    inst: &Instance,
    trace: &Trace,
    replay: &Replay,
) -> (CheckResult, CheckResult, Vec<String>) {
    let scale = inst.scale_log2();
    let phi1 = potential_phi_num(replay.tables[0].loads());
    let cap = 2 * inst.m() as i128 * inst.n() as i128 * (1i128 << scale);
    let phi_check = if phi1 <= cap {
        CheckResult::pass("phi-initial-upper-bound")
    } else {
        CheckResult::fail(
            "phi-initial-upper-bound",
            0,
            format!("phi(1) = {phi1} exceeds 2mn = {cap} (scaled)"),
        )
    };

    let mut notes = Vec::new();
    let type2_count = replay.move_types.iter().filter(|&&m| m == MoveType::Type2).count() as i128;
    let t_total = trace.records.len();
    let bound_check = match &replay.delta_min {
        Some(dm) => {
            let four_delta = dm.value.numerator().checked_mul(4).expect("4*delta overflow");
            let limit = phi1 / four_delta;
            notes.push(format!(
                "type2_count {type2_count} vs floor(phi(1)/(4 delta_min)) = {limit}"
            ));
            let envelope = (inst.m() as f64).powi(2)
                * (inst.n() as f64).powi(trace.meta.k as i32 + 1)
                / dm.value.to_f64();
            notes.push(format!(
                "T envelope (reported, not asserted): T = {t_total}, m^2 n^(k+1) / delta_min = {envelope:.3}, ratio = {:.6}",
                t_total as f64 / envelope
            ));
            if type2_count.checked_mul(four_delta).expect("bound overflow") <= phi1 {
                CheckResult::pass("type2-count-bound")
            } else {
                CheckResult::fail(
                    "type2-count-bound",
                    t_total as u64,
                    format!("type2_count {type2_count} exceeds phi(1)/(4 delta_min) = {limit}"),
                )
            }
        }
        None => CheckResult::skip("type2-count-bound", "delta_min unavailable"),
    };
    (phi_check, bound_check, notes)
}

fn check_replay_consistency(trace: &Trace, replay: &Replay) -> CheckResult {
    let name = "replay-consistency";
    let states: Vec<_> = trace.states().collect();
    for (idx, rec) in states.iter().enumerate() {
        let table = &replay.tables[idx];
        let scale = trace.meta.scale_log2;
        if rec.loads != table.loads() {
            return CheckResult::fail(
                name,
                rec.t,
                format!("recorded loads {:?} != replayed {:?}", rec.loads, table.loads()),
            );
        }
        let phi = Dyadic::new(potential_phi_num(table.loads()), scale);
        let mut mismatch = Vec::new();
        if rec.makespan != table.makespan() {
            mismatch.push("makespan");
        }
        if rec.num_critical != table.critical().len() {
            mismatch.push("num_critical");
        }
        if rec.phi != phi {
            mismatch.push("phi");
        }
        if rec.delta != table.delta() {
            mismatch.push("delta");
        }
        // Recorded gamma_l and move_type reflect the run's own delta_min.
        let expected_gamma = match trace.meta.delta_min {
            Some(dm) if dm.is_positive() => gamma_partition(table, dm, true).expect("gap > 0").0,
            _ => Vec::new(),
        };
        if rec.gamma_l != expected_gamma {
            mismatch.push("gamma_l");
        }
        if idx > 0 {
            let expected_type = match trace.meta.delta_min {
                Some(dm) if dm.is_positive() => {
                    let mv = rec.mv.as_ref().expect("iteration has move");
                    Some(classify_move(table, mv.ip, dm).expect("positive delta_min"))
                }
                _ => Some(MoveType::Unclassified),
            };
            if rec.move_type != expected_type {
                mismatch.push("move_type");
            }
        }
        if !mismatch.is_empty() {
            return CheckResult::fail(
                name,
                rec.t,
                format!("recorded fields diverge from replay: {}", mismatch.join(", ")),
            );
        }
    }
    CheckResult::pass(name)
}

fn check_delta_min_consistency(trace: &Trace, replay: &Replay) -> CheckResult {
    let name = "delta-min-consistency";
    if replay.dm_budget_exceeded {
        return CheckResult::skip(name, "delta_min budget exceeded during validation");
    }
    let expected = replay.delta_min.as_ref().map(|d| d.value);
    let ok = match (trace.meta.delta_min, expected) {
        (Some(rec), Some(exp)) => rec == exp,
        (None, None) => true,
        // A trace written under a blown budget records None; accept it.
        (None, Some(_)) => trace.meta.note.as_deref() == Some("delta-min-budget-exceeded"),
        (Some(_), None) => false,
    };
    if ok {
        CheckResult::pass(name)
    } else {
        CheckResult::fail(
            name,
            0,
            format!(
                "recorded delta_min {:?} vs recomputed {:?}",
                trace.meta.delta_min.map(|d| d.exact_string()),
                expected.map(|d| d.exact_string())
            ),
        )
    }
}

fn check_iterations(inst: &Instance, trace: &Trace, replay: &Replay) -> Vec<CheckResult> {
    let k = trace.meta.k;
    let mut improving = CheckResult::pass("moves-improving");
    let mut descent = CheckResult::pass("strict-descent");
    let mut lmax = CheckResult::pass("lmax-nonincreasing");
    let mut lmin = CheckResult::pass("lmin-nondecreasing");
    let mut ddec = CheckResult::pass("delta-nonincreasing");
    let mut phidec = CheckResult::pass("phi-nonincreasing");
    let mut membership = if replay.delta_min.is_some() {
        CheckResult::pass("source-gamma-l-target-gamma-s")
    } else {
        CheckResult::skip("source-gamma-l-target-gamma-s", "delta_min unavailable")
    };
    let mut gain_bound = if replay.delta_min.is_some() {
        CheckResult::pass("gain-at-least-delta-min")
    } else {
        CheckResult::skip("gain-at-least-delta-min", "delta_min unavailable")
    };

    for (idx, rec) in trace.records.iter().enumerate() {
        let t = rec.t;
        let before = &replay.tables[idx];
        let after = &replay.tables[idx + 1];
        let mv = rec.mv.as_ref().expect("iteration has move");
        let gain = inst.set_sum(&mv.a) - inst.set_sum(&mv.b);

        if improving.pass {
            let ok = !mv.a.is_empty()
                && mv.size() <= k
                && before.is_critical(mv.i)
                && gain > 0
                && gain < before.load_num(mv.i) - before.load_num(mv.ip);
            if !ok {
                improving = CheckResult::fail(
                    "moves-improving",
                    t,
                    format!("move at t={t} is not improving (gain {gain})"),
                );
            }
        }
        if descent.pass {
            let b = (before.makespan(), before.critical().len());
            let a = (after.makespan(), after.critical().len());
            if a >= b {
                descent = CheckResult::fail(
                    "strict-descent",
                    t,
                    format!("objective did not strictly decrease at t={t}"),
                );
            }
        }
        if lmax.pass && after.makespan_num() > before.makespan_num() {
            lmax = CheckResult::fail("lmax-nonincreasing", t, format!("L_max rose at t={t}"));
        }
        if lmin.pass && after.min_load() < before.min_load() {
            lmin = CheckResult::fail("lmin-nondecreasing", t, format!("L_min fell at t={t}"));
        }
        if ddec.pass && after.delta() > before.delta() {
            ddec = CheckResult::fail("delta-nonincreasing", t, format!("Delta rose at t={t}"));
        }
        if phidec.pass
            && potential_phi_num(after.loads()) > potential_phi_num(before.loads())
        {
            phidec = CheckResult::fail("phi-nonincreasing", t, format!("phi rose at t={t}"));
        }
        if let Some(dm) = &replay.delta_min {
            if membership.pass {
                let (gl, gs) = gamma_partition(before, dm.value, true).expect("gap > 0");
                if !gl.contains(&mv.i) || !gs.contains(&mv.ip) {
                    membership = CheckResult::fail(
                        "source-gamma-l-target-gamma-s",
                        t,
                        format!("source/target gamma membership violated at t={t}"),
                    );
                }
            }
            if gain_bound.pass && gain < dm.value.numerator() {
                gain_bound = CheckResult::fail(
                    "gain-at-least-delta-min",
                    t,
                    format!("gain {gain} below delta_min at t={t}"),
                );
            }
        }
    }
    vec![improving, descent, lmax, lmin, ddec, phidec, membership, gain_bound]
}

fn check_terminal_local_optimum(inst: &Instance, trace: &Trace, replay: &Replay) -> CheckResult {
    let name = "terminal-local-optimum";
    let final_table = replay.tables.last().expect("at least the initial state");
    let mut sched = Schedule::new(inst, trace.meta.assignment.clone()).expect("validated");
    for rec in &trace.records {
        sched = neighborhood::apply_move(inst, sched, rec.mv.as_ref().unwrap()).expect("replayed");
    }
    let mut pivot = neighborhood::Pivot::First;
    match neighborhood::find_improving(inst, &sched, final_table, trace.meta.k, &mut pivot) {
        None => CheckResult::pass(name),
        Some(mv) => CheckResult::fail(
            name,
            trace.records.len() as u64,
            format!("terminal state still admits improving move {mv:?}"),
        ),
    }
}

/// Runs every validator over a trace. Checks that need delta_min are skipped
/// (marked, still passing) when it is unavailable; a k = 2 trace also gets
/// the worst-case companion checks.
pub fn validate(inst: &Instance, trace: &Trace, budget: u64) -> Result<ValidationReport> {
    let replay = replay(inst, trace, budget)?;
    let mut checks = Vec::new();
    checks.push(check_replay_consistency(trace, &replay));
    checks.push(check_delta_min_consistency(trace, &replay));
    checks.extend(check_iterations(inst, trace, &replay));
    checks.push(check_type2_phi_drop(trace, &replay));
    checks.push(check_llmin_monotone(trace, &replay));
    checks.push(check_type1_no_repeat(trace, &replay));
    let (phi_check, bound_check, mut notes) = check_bounds(inst, trace, &replay);
    checks.push(phi_check);
    checks.push(bound_check);
    checks.push(check_terminal_local_optimum(inst, trace, &replay));
    if trace.meta.k == 2 {
        let report = phase::phase_report(inst, trace)?;
        checks.extend(phase::phase_checks(&report));
        notes.push(format!(
            "phases: {}, jumps: {} (reported)",
            report.phases.len(),
            report.jump_count
        ));
    }
    Ok(ValidationReport::from_checks(checks, notes))
}
