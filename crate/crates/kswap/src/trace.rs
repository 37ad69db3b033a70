//! Run traces: one record per improving iteration, JSON Lines on the wire.
//!
//! The first line is a t = 0 header carrying the initial state plus the
//! fields a post-hoc validator needs to replay the run from scratch (k, the
//! initial assignment, delta_min or a note explaining its absence). Every
//! later line is the state after one applied move. Exact values are
//! serialized as "numerator/2^scale_log2" strings.

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::neighborhood::Move;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveType {
    /// Target ends in gamma_l(t+1).
    Type1,
    /// Target stays in gamma_s(t+1).
    Type2,
    /// delta_min unavailable (zero-delta ties or budget).
    Unclassified,
}

impl MoveType {
    fn as_str(&self) -> &'static str {
        match self {
            MoveType::Type1 => "type1",
            MoveType::Type2 => "type2",
            MoveType::Unclassified => "unclassified",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "type1" => Ok(MoveType::Type1),
            "type2" => Ok(MoveType::Type2),
            "unclassified" => Ok(MoveType::Unclassified),
            _ => Err(Error::Malformed(format!("unknown move_type {s:?}"))),
        }
    }
}

/// State snapshot after iteration t (t = 0 is the initial state, mv = None).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    pub t: u64,
    pub mv: Option<Move>,
    pub loads: Vec<i128>,
    pub makespan: Dyadic,
    pub num_critical: usize,
    pub phi: Dyadic,
    pub delta: Dyadic,
    pub move_type: Option<MoveType>,
    pub gamma_l: Vec<usize>,
}

/// Run-level facts recorded once, on the header line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMeta {
    pub k: usize,
    pub scale_log2: u32,
    pub assignment: Vec<usize>,
    pub delta_min: Option<Dyadic>,
    /// Set when delta_min is unavailable: "zero-delta" or
    /// "delta-min-budget-exceeded".
    pub note: Option<String>,
}

/// A complete in-memory trace, as produced by a run or parsed from JSONL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub initial: IterationRecord,
    pub records: Vec<IterationRecord>,
}

impl Trace {
    pub fn k(&self) -> usize {
        self.meta.k
    }

    /// States S_0 .. S_T in order.
    pub fn states(&self) -> impl Iterator<Item = &IterationRecord> {
        std::iter::once(&self.initial).chain(self.records.iter())
    }
}

/// Receives trace records as the search produces them.
pub trait TraceSink {
    fn begin(&mut self, meta: &TraceMeta, initial: &IterationRecord) -> Result<()>;
    fn record(&mut self, rec: &IterationRecord) -> Result<()>;
}

/// Discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn begin(&mut self, _: &TraceMeta, _: &IterationRecord) -> Result<()> {
        Ok(())
    }

    fn record(&mut self, _: &IterationRecord) -> Result<()> {
        Ok(())
    }
}

/// Collects the full trace in memory.
#[derive(Default)]
pub struct VecSink {
    meta: Option<TraceMeta>,
    initial: Option<IterationRecord>,
    records: Vec<IterationRecord>,
}

impl VecSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_trace(self) -> Trace {
        Trace {
            meta: self.meta.expect("sink never started"),
            initial: self.initial.expect("sink never started"),
            records: self.records,
        }
    }
}

impl TraceSink for VecSink {
    fn begin(&mut self, meta: &TraceMeta, initial: &IterationRecord) -> Result<()> {
        self.meta = Some(meta.clone());
        self.initial = Some(initial.clone());
        Ok(())
    }

    fn record(&mut self, rec: &IterationRecord) -> Result<()> {
        self.records.push(rec.clone());
        Ok(())
    }
}

/// Streams JSON Lines to a writer; constant memory in the run length.
pub struct JsonlSink<W: Write> {
    w: W,
    scale_log2: u32,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(w: W) -> Self {
        JsonlSink { w, scale_log2: 0 }
    }

    pub fn into_inner(self) -> W {
        self.w
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderDoc {
    t: u64,
    #[serde(rename = "move")]
    mv: Option<Move>,
    makespan: String,
    num_critical: usize,
    phi: String,
    delta: String,
    move_type: Option<String>,
    gamma_l: Vec<usize>,
    loads: Vec<String>,
    k: usize,
    assignment: Vec<usize>,
    delta_min: Option<String>,
    note: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct IterDoc {
    t: u64,
    #[serde(rename = "move")]
    mv: Move,
    makespan: String,
    num_critical: usize,
    phi: String,
    delta: String,
    move_type: String,
    gamma_l: Vec<usize>,
    loads: Vec<String>,
}

fn load_strings(loads: &[i128], scale: u32) -> Vec<String> {
    loads.iter().map(|&l| Dyadic::new(l, scale).exact_string()).collect()
}

impl<W: Write> TraceSink for JsonlSink<W> {
    fn begin(&mut self, meta: &TraceMeta, initial: &IterationRecord) -> Result<()> {
        self.scale_log2 = meta.scale_log2;
        let doc = HeaderDoc {
            t: 0,
            mv: None,
            makespan: initial.makespan.exact_string(),
            num_critical: initial.num_critical,
            phi: initial.phi.exact_string(),
            delta: initial.delta.exact_string(),
            move_type: None,
            gamma_l: initial.gamma_l.clone(),
            loads: load_strings(&initial.loads, meta.scale_log2),
            k: meta.k,
            assignment: meta.assignment.clone(),
            delta_min: meta.delta_min.map(|d| d.exact_string()),
            note: meta.note.clone(),
        };
        serde_json::to_writer(&mut self.w, &doc)?;
        self.w.write_all(b"\n")?;
        Ok(())
    }

    fn record(&mut self, rec: &IterationRecord) -> Result<()> {
        let doc = IterDoc {
            t: rec.t,
            mv: rec.mv.clone().expect("iteration record without move"),
            makespan: rec.makespan.exact_string(),
            num_critical: rec.num_critical,
            phi: rec.phi.exact_string(),
            delta: rec.delta.exact_string(),
            move_type: rec.move_type.expect("iteration record without type").as_str().into(),
            gamma_l: rec.gamma_l.clone(),
            loads: load_strings(&rec.loads, self.scale_log2),
        };
        serde_json::to_writer(&mut self.w, &doc)?;
        self.w.write_all(b"\n")?;
        Ok(())
    }
}

fn parse_load(s: &str, scale: u32, t: u64) -> Result<i128> {
    let d = Dyadic::parse(s)?;
    if d.scale_log2() != scale {
        return Err(Error::InconsistentScale(format!(
            "record t={t}: load scale 2^{} differs from trace scale 2^{scale}",
            d.scale_log2()
        )));
    }
    Ok(d.numerator())
}

/// Parses a JSONL trace. The first line must be the t = 0 header.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Trace> {
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::EmptyInput("trace has no records".into()))??;
    let h: HeaderDoc = serde_json::from_str(&first)
        .map_err(|e| Error::Malformed(format!("trace header: {e}")))?;
    if h.t != 0 || h.mv.is_some() {
        return Err(Error::Malformed("first trace record must be the t=0 header".into()));
    }
    let makespan = Dyadic::parse(&h.makespan)?;
    let scale = makespan.scale_log2();
    let meta = TraceMeta {
        k: h.k,
        scale_log2: scale,
        assignment: h.assignment,
        delta_min: h.delta_min.as_deref().map(Dyadic::parse).transpose()?,
        note: h.note,
    };
    let initial = IterationRecord {
        t: 0,
        mv: None,
        loads: h.loads.iter().map(|s| parse_load(s, scale, 0)).collect::<Result<_>>()?,
        makespan,
        num_critical: h.num_critical,
        phi: Dyadic::parse(&h.phi)?,
        delta: Dyadic::parse(&h.delta)?,
        move_type: None,
        gamma_l: h.gamma_l,
    };
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let d: IterDoc = serde_json::from_str(&line)
            .map_err(|e| Error::Malformed(format!("trace line {}: {e}", lineno + 2)))?;
        let expected_t = records.len() as u64 + 1;
        if d.t != expected_t {
            return Err(Error::Malformed(format!(
                "trace line {}: expected t={expected_t}, got t={}",
                lineno + 2,
                d.t
            )));
        }
        records.push(IterationRecord {
            t: d.t,
            mv: Some(d.mv),
            loads: d.loads.iter().map(|s| parse_load(s, scale, d.t)).collect::<Result<_>>()?,
            makespan: Dyadic::parse(&d.makespan)?,
            num_critical: d.num_critical,
            phi: Dyadic::parse(&d.phi)?,
            delta: Dyadic::parse(&d.delta)?,
            move_type: Some(MoveType::parse(&d.move_type)?),
            gamma_l: d.gamma_l,
        });
    }
    Ok(Trace { meta, initial, records })
}

/// Serializes a trace back to JSONL (byte-identical to what the run streamed).
pub fn write_trace(trace: &Trace) -> Result<String> {
    let mut sink = JsonlSink::new(Vec::new());
    sink.begin(&trace.meta, &trace.initial)?;
    for rec in &trace.records {
        sink.record(rec)?;
    }
    Ok(String::from_utf8(sink.into_inner()).expect("jsonl is utf8"))
}
