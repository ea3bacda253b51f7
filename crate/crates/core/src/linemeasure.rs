//! Measuring `|ℓ ∩ A|` on segments and lines, and searching for long chords.
//!
//! Exact measurement uses a set's intersector; otherwise segments are
//! measured by stratified sampling with one uniform point per cell.
//! [`sup_line_search`] returns a lower bound on `sup_ℓ |ℓ ∩ A|`.

use crate::error::{invalid, Result};
use crate::geom::{clip_intervals, norm2, total_length, Interval, Line, Segment};
use crate::samplers::{replicate, RandomStream, StreamRng};
use crate::sets::MembershipSet;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// How a length was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Grid,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineMeasureResult {
    /// Euclidean length of the intersection.
    pub length: f64,
    /// `length` over the segment length.
    pub fraction: f64,
    pub method: Method,
    /// Cell size in length units; 0 for exact results.
    pub resolution: f64,
}

/// `|seg ∩ A|`, exactly when the set has an intersector, else stratified with
/// cells of length at most `step`.
pub fn measure_segment(
    set: &dyn MembershipSet,
    seg: &Segment,
    step: f64,
    stream: &RandomStream,
) -> Result<LineMeasureResult> {
    if !(step > 0.0) {
        return Err(invalid("step must be positive"));
    }
    let len = seg.length();
    if !(len > 0.0) {
        return Err(invalid("zero-length segment"));
    }
    let line = seg.line();
    if let Some(ivs) = set.intersect(&line) {
        let inside = total_length(&clip_intervals(&ivs, 0.0, seg.t_max)) / seg.t_max;
        return Ok(LineMeasureResult {
            length: inside * len,
            fraction: inside,
            method: Method::Exact,
            resolution: 0.0,
        });
    }
    let cells = (len / step).ceil().max(1.0) as usize;
    let mut rng = stream.rng();
    let mut buf = vec![0.0; line.dim()];
    let mut hits = 0usize;
    for i in 0..cells {
        let u = (i as f64 + rng.gen::<f64>()) / cells as f64;
        line.point_into(u * seg.t_max, &mut buf);
        hits += set.contains(&buf) as usize;
    }
    let fraction = hits as f64 / cells as f64;
    Ok(LineMeasureResult {
        length: fraction * len,
        fraction,
        method: Method::Mc,
        resolution: len / cells as f64,
    })
}

/// `|seg ∩ A|` on the deterministic midpoint grid of `cells` cells.
pub fn measure_grid(set: &dyn MembershipSet, seg: &Segment, cells: usize) -> Result<LineMeasureResult> {
    if cells == 0 {
        return Err(invalid("need at least one cell"));
    }
    let line = seg.line();
    let mut buf = vec![0.0; line.dim()];
    let hits = (0..cells)
        .filter(|&i| {
            line.point_into((i as f64 + 0.5) / cells as f64 * seg.t_max, &mut buf);
            set.contains(&buf)
        })
        .count();
    let fraction = hits as f64 / cells as f64;
    Ok(LineMeasureResult {
        length: fraction * seg.length(),
        fraction,
        method: Method::Grid,
        resolution: seg.length() / cells as f64,
    })
}

/// Parameter window `|t|·speed ≤ WINDOW` for sets that are unbounded along a line.
const WINDOW: f64 = 1e6;

/// Cells used when a line has no exact intersector.
const FALLBACK_CELLS: usize = 4096;

/// Tuning of [`sup_line_search`].
#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    /// Hill-climbing rounds applied to each new record.
    pub rounds: usize,
    /// Consecutive failed candidates that end a round.
    pub candidates: usize,
    /// Initial relative step; halved every round.
    pub initial_step: f64,
    /// Externally supplied segments (e.g. finder certificates) scored first.
    pub seeds: Vec<Segment>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            rounds: 20,
            candidates: 32,
            initial_step: 0.1,
            seeds: Vec::new(),
        }
    }
}

/// Best chord found by [`sup_line_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Segment from the first to the last intersection point on the best line.
    pub segment: Segment,
    pub measure: LineMeasureResult,
    /// Best length after each proposal, including seeds.
    pub trace: Vec<f64>,
}

/// Scored line: `ℓ ∩ A` restricted to its hull `[lo, hi]`.
#[derive(Clone, Debug)]
struct Scored {
    line: Line,
    length: f64,
    hull: (f64, f64),
    method: Method,
}

fn score(set: &dyn MembershipSet, line: Line, window: Option<(f64, f64)>) -> Option<Scored> {
    let speed = line.speed();
    if !(speed > 0.0) || !speed.is_finite() {
        return None;
    }
    if let Some(ivs) = set.intersect(&line) {
        let w = WINDOW / speed;
        let ivs = clip_intervals(&ivs, -w, w);
        let (first, last) = (ivs.first()?, ivs.last()?);
        return Some(Scored {
            length: total_length(&ivs) * speed,
            hull: (first.lo, last.hi),
            line,
            method: Method::Exact,
        });
    }
    let (lo, hi) = window?;
    let mut buf = vec![0.0; line.dim()];
    let h = (hi - lo) / FALLBACK_CELLS as f64;
    let mut hits = 0usize;
    let (mut first, mut last) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..FALLBACK_CELLS {
        let t = lo + (i as f64 + 0.5) * h;
        line.point_into(t, &mut buf);
        if set.contains(&buf) {
            hits += 1;
            first = first.min(t - 0.5 * h);
            last = last.max(t + 0.5 * h);
        }
    }
    (hits > 0).then(|| Scored {
        length: hits as f64 * h * speed,
        hull: (first, last),
        line,
        method: Method::Grid,
    })
}

fn member(set: &dyn MembershipSet, rng: &mut StreamRng) -> Option<Vec<f64>> {
    let amb = set.ambient()?;
    (0..64).map(|_| amb.sample(rng)).find(|x| set.contains(x))
}

/// Proposal `k`: alternately a set-specific line and a line through two
/// ambient members.
fn propose(set: &dyn MembershipSet, k: usize, rng: &mut StreamRng) -> Option<Scored> {
    if k % 2 == 0 {
        if let Some(line) = set.propose_line(rng) {
            let w = 4.0 / line.speed().max(f64::MIN_POSITIVE);
            return score(set, line, Some((-w, w)));
        }
    }
    let a = member(set, rng)?;
    let b = member(set, rng)?;
    if a == b {
        return None;
    }
    score(set, Line::through(&a, &b), Some((-1.0, 2.0)))
}

/// Coordinate-wise endpoint hill climbing. Each round runs at a fixed step
/// until `candidates` consecutive trials fail (or `MAX_EVALS` trials), then
/// halves the step.
fn refine(set: &dyn MembershipSet, start: Scored, opts: &SearchOptions, rng: &mut StreamRng) -> Scored {
    const MAX_EVALS: usize = 400;
    let mut best = start;
    let n = best.line.dim();
    let mut step = opts.initial_step;
    for _ in 0..opts.rounds {
        let mut fails = 0;
        for _ in 0..MAX_EVALS {
            if fails >= opts.candidates {
                break;
            }
            let (t0, t1) = best.hull;
            let a = best.line.point(t0);
            let b = best.line.point(t1);
            let span = norm2(&best.line.direction) * (t1 - t0);
            let m = rng.gen_range(1..=(n / 8).max(1));
            let scale = step * span / (m as f64).sqrt();
            let idx = sample_indices(rng, n, m);
            let mode = rng.gen_range(0..3);
            let (mut a2, mut b2) = (a, b);
            for i in idx.iter() {
                let z: f64 = StandardNormal.sample(rng);
                let dz = scale * z;
                match mode {
                    0 => a2[i] += dz,
                    1 => b2[i] += dz,
                    _ => {
                        a2[i] += dz;
                        b2[i] += dz;
                    }
                }
            }
            match score(set, Line::through(&a2, &b2), Some((-0.5, 1.5))) {
                Some(c) if c.length > best.length => {
                    best = c;
                    fails = 0;
                }
                _ => fails += 1,
            }
        }
        step *= 0.5;
    }
    best
}

/// Lower bound on `sup_ℓ |ℓ ∩ A|`.
///
/// Proposals are scored independently; a sequential pass then refines every
/// proposal that beats the running record. The result after `trials`
/// proposals is a prefix of the run with more trials, so the best length is
/// nondecreasing in `trials` for a fixed stream.
pub fn sup_line_search(
    set: &dyn MembershipSet,
    trials: usize,
    stream: &RandomStream,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    let proposals = stream.child("proposals");
    let refinements = stream.child("refine");
    let mut candidates: Vec<Option<Scored>> = opts
        .seeds
        .iter()
        .map(|s| score(set, s.line(), Some((-0.5 * s.t_max, 1.5 * s.t_max))))
        .collect();
    candidates.extend(replicate(trials, &proposals, |rng, k| propose(set, k, rng)));
    let mut best: Option<Scored> = None;
    let mut trace = Vec::with_capacity(candidates.len());
    for (k, c) in candidates.into_iter().enumerate() {
        if let Some(c) = c {
            if best.as_ref().map_or(true, |b| c.length > b.length) {
                let mut rng = refinements.substream(k as u64).rng();
                let r = refine(set, c, opts, &mut rng);
                best = Some(r);
            }
        }
        trace.push(best.as_ref().map_or(0.0, |b| b.length));
    }
    let best = best.ok_or_else(|| {
        crate::error::Error::Calibration("no proposal line met the set".into())
    })?;
    let (t0, t1) = best.hull;
    let speed = best.line.speed();
    let origin = best.line.point(t0);
    let segment = Segment::new(origin, best.line.direction.clone(), (t1 - t0).max(f64::MIN_POSITIVE))?;
    let seg_len = segment.length();
    Ok(SearchResult {
        measure: LineMeasureResult {
            length: best.length,
            fraction: (best.length / seg_len).min(1.0),
            method: best.method,
            resolution: if best.method == Method::Exact {
                0.0
            } else {
                (t1 - t0) * speed / FALLBACK_CELLS as f64
            },
        },
        segment,
        trace,
    })
}

/// Exact total length of `line ∩ A` in Euclidean units, if available.
pub fn exact_line_length(set: &dyn MembershipSet, line: &Line) -> Option<f64> {
    let ivs: Vec<Interval> = set.intersect(line)?;
    Some(total_length(&ivs) * line.speed())
}
