//! Problem instances: jobs with exact dyadic processing times on m identical machines.
//!
//! Processing times live on the grid {1, ..., 2^s} / 2^s for a shared scale
//! s = scale_log2, so every value is in (0, 1] and all downstream arithmetic
//! is exact. The smoothed generator draws each job uniformly from the grid
//! points of (b_j, b_j + 1/phi], the maximum-entropy density of the one-step
//! model; the uniform generator is the special case phi = 1, b_j = 0.

use crate::dyadic::{Dyadic, MAX_SCALE_LOG2};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SCALE_LOG2: u32 = 53;

/// Guard rails that keep all i128 arithmetic exact (see dyadic module).
const MAX_JOBS: usize = 1 << 20;
const MAX_MACHINES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    m: usize,
    scale_log2: u32,
    jobs: Vec<i128>,
    label: String,
}

impl Instance {
    pub fn new(m: usize, scale_log2: u32, jobs: Vec<i128>, label: String) -> Result<Self> {
        if jobs.is_empty() {
            return Err(Error::EmptyInput("instance has no jobs".into()));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("m must be >= 1".into()));
        }
        if m > MAX_MACHINES || jobs.len() > MAX_JOBS {
            return Err(Error::InvalidArgument(format!(
                "instance too large (max {MAX_JOBS} jobs, {MAX_MACHINES} machines)"
            )));
        }
        if scale_log2 == 0 || scale_log2 > MAX_SCALE_LOG2 {
            return Err(Error::InconsistentScale(format!(
                "scale_log2 must be in [1, {MAX_SCALE_LOG2}], got {scale_log2}"
            )));
        }
        let unit = 1i128 << scale_log2;
        for (j, &p) in jobs.iter().enumerate() {
            if p <= 0 {
                return Err(Error::NonPositiveProcessingTime { job: j });
            }
            if p > unit {
                return Err(Error::Malformed(format!(
                    "job {j} numerator {p} exceeds 2^{scale_log2} (processing times lie in (0, 1])"
                )));
            }
        }
        Ok(Instance { m, scale_log2, jobs, label })
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn scale_log2(&self) -> u32 {
        self.scale_log2
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Numerator of job j's processing time.
    pub fn job_num(&self, j: usize) -> i128 {
        self.jobs[j]
    }

    pub fn job(&self, j: usize) -> Dyadic {
        Dyadic::new(self.jobs[j], self.scale_log2)
    }

    pub fn job_nums(&self) -> &[i128] {
        &self.jobs
    }

    pub fn dyadic(&self, num: i128) -> Dyadic {
        Dyadic::new(num, self.scale_log2)
    }

    /// Sum of numerators over a set of job indices.
    pub fn set_sum(&self, set: &[usize]) -> i128 {
        set.iter().map(|&j| self.jobs[j]).sum()
    }
}

/// Draws `bits` uniform random bits (low 64 first for bits > 64).
fn draw_bits(rng: &mut Rng, bits: u32) -> u128 {
    debug_assert!(bits >= 1 && bits <= 96);
    if bits <= 64 {
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        (rng.next_u64() & mask) as u128
    } else {
        let lo = rng.next_u64() as u128;
        let hi = (rng.next_u64() as u128) & ((1u128 << (bits - 64)) - 1);
        lo | (hi << 64)
    }
}

/// Uniform instance: each numerator uniform on {1, ..., 2^scale_log2}.
pub fn generate_uniform(n: usize, m: usize, scale_log2: u32, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::EmptyInput("n must be >= 1".into()));
    }
    if scale_log2 == 0 || scale_log2 > MAX_SCALE_LOG2 {
        return Err(Error::InconsistentScale(format!(
            "scale_log2 must be in [1, {MAX_SCALE_LOG2}], got {scale_log2}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let jobs: Vec<i128> = (0..n)
        .map(|_| draw_bits(&mut rng, scale_log2) as i128 + 1)
        .collect();
    let label = format!("uniform(n={n},m={m},scale={scale_log2},seed={seed})");
    Instance::new(m, scale_log2, jobs, label)
}

/// Smoothed instance: job j uniform on the scale grid points of (b_j, b_j + 1/phi].
pub fn generate_smoothed(
    n: usize,
    m: usize,
    scale_log2: u32,
    phi: &BigRational,
    bases: &[BigRational],
    seed: u64,
) -> Result<Instance> {
    if n == 0 {
        return Err(Error::EmptyInput("n must be >= 1".into()));
    }
    if scale_log2 == 0 || scale_log2 > MAX_SCALE_LOG2 {
        return Err(Error::InconsistentScale(format!(
            "scale_log2 must be in [1, {MAX_SCALE_LOG2}], got {scale_log2}"
        )));
    }
    if phi < &BigRational::one() {
        return Err(Error::InvalidArgument(format!("phi must be >= 1, got {phi}")));
    }
    if bases.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {n} bases, got {}",
            bases.len()
        )));
    }
    let width = phi.recip();
    let max_base = BigRational::one() - &width;
    let unit = BigInt::from(1u8) << scale_log2;
    let mut rng = rng::seeded(seed);
    let mut jobs = Vec::with_capacity(n);
    for (j, b) in bases.iter().enumerate() {
        if b.is_negative() || b > &max_base {
            return Err(Error::BaseOutOfRange { job: j, base: b.to_string() });
        }
        // Grid points t/2^s in (b, b + 1/phi]: t in [floor(b*2^s) + 1, floor((b + 1/phi)*2^s)].
        let t_min = floor_times_pow2(b, &unit) + 1;
        let t_max = floor_times_pow2(&(b + &width), &unit);
        if t_max < t_min {
            return Err(Error::InvalidArgument(format!(
                "support (b, b + 1/phi] for job {j} contains no grid point at scale {scale_log2} (phi too large)"
            )));
        }
        jobs.push(rng::uniform_in_range(&mut rng, t_min, t_max));
    }
    let label = format!("smoothed(n={n},m={m},scale={scale_log2},phi={phi},seed={seed})");
    Instance::new(m, scale_log2, jobs, label)
}

/// floor(r * unit) for r >= 0; result fits i128 for r <= 1, unit <= 2^96.
fn floor_times_pow2(r: &BigRational, unit: &BigInt) -> i128 {
    let q = (r.numer() * unit) / r.denom();
    q.to_i128().expect("grid index out of i128 range")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenKind {
    Uniform,
    Smoothed { phi: BigRational, bases: Vec<BigRational> },
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub n: usize,
    pub m: usize,
    pub scale_log2: u32,
    pub seed: u64,
    pub kind: GenKind,
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Instance> {
    match &cfg.kind {
        GenKind::Uniform => generate_uniform(cfg.n, cfg.m, cfg.scale_log2, cfg.seed),
        GenKind::Smoothed { phi, bases } => {
            generate_smoothed(cfg.n, cfg.m, cfg.scale_log2, phi, bases, cfg.seed)
        }
    }
}

/// Adversarial base patterns used by the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasePattern {
    /// All bases 0 (support (0, 1/phi]).
    Zero,
    /// All bases at min(1/2, 1 - 1/phi).
    Clustered,
    /// Bases evenly spaced across [0, 1 - 1/phi].
    Spread,
}

impl BasePattern {
    pub fn bases(&self, n: usize, phi: &BigRational) -> Vec<BigRational> {
        let max_base = BigRational::one() - phi.recip();
        match self {
            BasePattern::Zero => vec![BigRational::zero(); n],
            BasePattern::Clustered => {
                let half = BigRational::new(BigInt::from(1), BigInt::from(2));
                vec![half.min(max_base); n]
            }
            BasePattern::Spread => (0..n)
                .map(|j| {
                    if n == 1 {
                        BigRational::zero()
                    } else {
                        &max_base * BigRational::new(BigInt::from(j), BigInt::from(n - 1))
                    }
                })
                .collect(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(BasePattern::Zero),
            "clustered" => Ok(BasePattern::Clustered),
            "spread" => Ok(BasePattern::Spread),
            _ => Err(Error::InvalidArgument(format!(
                "unknown base pattern {s:?} (zero|clustered|spread)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BasePattern::Zero => "zero",
            BasePattern::Clustered => "clustered",
            BasePattern::Spread => "spread",
        }
    }
}

/// Parses a non-negative rational given as "a/b", a decimal like "0.25", or an integer.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Malformed(format!("cannot parse rational from {s:?}"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let numer: BigInt = a.trim().parse().map_err(|_| bad())?;
        let denom: BigInt = b.trim().parse().map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(numer, denom));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int_part: BigInt = if int.is_empty() { BigInt::zero() } else { int.parse().map_err(|_| bad())? };
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let denom = BigInt::from(10u8).pow(frac.len() as u32);
        let numer = int_part * &denom + frac_part;
        return Ok(BigRational::new(numer, denom));
    }
    let numer: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(numer))
}

/// JSON document shapes. Canonical form carries exact numerators; numbers
/// above 2^53 are written as decimal strings so lossy readers cannot corrupt
/// them. The float form is accepted on input only.
#[derive(Deserialize)]
struct RawInstance {
    m: usize,
    #[serde(default)]
    scale_log2: Option<u32>,
    #[serde(default)]
    jobs: Option<Vec<RawJob>>,
    #[serde(default)]
    jobs_float: Option<Vec<f64>>,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawJob {
    Int(u64),
    Big(String),
}

const SAFE_INT: i128 = 1 << 53;

#[derive(Serialize)]
#[serde(untagged)]
enum JobOut {
    Int(u64),
    Big(String),
}

#[derive(Serialize)]
struct InstanceDoc<'a> {
    m: usize,
    scale_log2: u32,
    jobs: Vec<JobOut>,
    label: &'a str,
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let raw: RawInstance =
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("instance json: {e}")))?;
    let label = raw.label.unwrap_or_default();
    match (raw.jobs, raw.jobs_float) {
        (Some(jobs), None) => {
            let scale = raw.scale_log2.ok_or_else(|| {
                Error::Malformed("instance with \"jobs\" requires \"scale_log2\"".into())
            })?;
            let mut nums = Vec::with_capacity(jobs.len());
            for (j, job) in jobs.iter().enumerate() {
                let num: i128 = match job {
                    RawJob::Int(v) => *v as i128,
                    RawJob::Big(s) => s.trim().parse().map_err(|_| {
                        Error::Malformed(format!("job {j}: bad numerator string {s:?}"))
                    })?,
                };
                nums.push(num);
            }
            Instance::new(raw.m, scale, nums, label)
        }
        (None, Some(floats)) => instance_from_floats(raw.m, raw.scale_log2, &floats, label),
        (Some(_), Some(_)) => Err(Error::Malformed(
            "instance has both \"jobs\" and \"jobs_float\"".into(),
        )),
        (None, None) => Err(Error::Malformed(
            "instance needs \"jobs\" or \"jobs_float\"".into(),
        )),
    }
}

/// Exact float conversion: each binary64 value in (0, 1] is mant * 2^-e in
/// lowest terms; the instance scale is max(53, largest e) unless pinned.
fn instance_from_floats(
    m: usize,
    scale_log2: Option<u32>,
    floats: &[f64],
    label: String,
) -> Result<Instance> {
    let mut parts = Vec::with_capacity(floats.len());
    let mut needed_max = 0u32;
    for (j, &f) in floats.iter().enumerate() {
        if !f.is_finite() || f <= 0.0 {
            return Err(Error::NonPositiveProcessingTime { job: j });
        }
        if f > 1.0 {
            return Err(Error::Malformed(format!(
                "job {j}: value {f} exceeds 1 (processing times lie in (0, 1])"
            )));
        }
        let bits = f.to_bits();
        let exp_field = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mut mant, mut exp) = if exp_field == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1u64 << 52), exp_field - 1075)
        };
        let tz = mant.trailing_zeros().min((-exp) as u32);
        mant >>= tz;
        exp += tz as i64;
        let needed = (-exp) as u32;
        needed_max = needed_max.max(needed);
        parts.push((mant, needed));
    }
    let scale = match scale_log2 {
        Some(s) => {
            if needed_max > s {
                return Err(Error::InconsistentScale(format!(
                    "a float value needs scale_log2 {needed_max}, document pins {s}"
                )));
            }
            s
        }
        None => {
            let s = DEFAULT_SCALE_LOG2.max(needed_max);
            if s > MAX_SCALE_LOG2 {
                return Err(Error::InconsistentScale(format!(
                    "float values need scale_log2 {s} > maximum {MAX_SCALE_LOG2}"
                )));
            }
            s
        }
    };
    let nums = parts
        .into_iter()
        .map(|(mant, needed)| (mant as i128) << (scale - needed))
        .collect();
    Instance::new(m, scale, nums, label)
}

/// Canonical JSON form; `parse_instance(write_instance(i)) == i`.
pub fn write_instance(inst: &Instance) -> String {
    let jobs = inst
        .jobs
        .iter()
        .map(|&p| {
            if p <= SAFE_INT {
                JobOut::Int(p as u64)
            } else {
                JobOut::Big(p.to_string())
            }
        })
        .collect();
    let doc = InstanceDoc {
        m: inst.m,
        scale_log2: inst.scale_log2,
        jobs,
        label: &inst.label,
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("instance serialization");
    out.push('\n');
    out
}
