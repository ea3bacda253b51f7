use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// A finite, nonempty real vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RealVec(Vec<f64>);

impl RealVec {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("vector must have dimension >= 1"));
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("coordinate {i} is not finite")));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for RealVec {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for RealVec {
    type Error = crate::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RealVec> for Vec<f64> {
    fn from(v: RealVec) -> Self {
        v.0
    }
}

/// The line `origin + t·direction`, `t ∈ ℝ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
}

impl Line {
    pub fn new(origin: Vec<f64>, direction: Vec<f64>) -> Self {
        assert_eq!(origin.len(), direction.len(), "dimension mismatch");
        Self { origin, direction }
    }

    /// Line through `a` and `b`, parametrized so that `t = 0` is `a` and `t = 1` is `b`.
    pub fn through(a: &[f64], b: &[f64]) -> Self {
        let d = b.iter().zip(a).map(|(x, y)| x - y).collect();
        Self::new(a.to_vec(), d)
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.direction)
            .map(|(x, d)| x + t * d)
            .collect()
    }

    pub fn point_into(&self, t: f64, out: &mut [f64]) {
        for ((o, x), d) in out.iter_mut().zip(&self.origin).zip(&self.direction) {
            *o = x + t * d;
        }
    }

    pub fn speed(&self) -> f64 {
        super::norm2(&self.direction)
    }
}

/// Points `origin + t·direction` for `t ∈ [0, t_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub origin: RealVec,
    pub direction: RealVec,
    pub t_max: f64,
}

impl Segment {
    pub fn new(origin: Vec<f64>, direction: Vec<f64>, t_max: f64) -> Result<Self> {
        let origin = RealVec::new(origin)?;
        let direction = RealVec::new(direction)?;
        if origin.dim() != direction.dim() {
            return Err(invalid("origin and direction dimensions differ"));
        }
        if direction.iter().all(|v| *v == 0.0) {
            return Err(invalid("segment direction is zero"));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(invalid(format!("t_max must be positive, got {t_max}")));
        }
        Ok(Self {
            origin,
            direction,
            t_max,
        })
    }

    pub fn between(a: &[f64], b: &[f64]) -> Result<Self> {
        let d = b.iter().zip(a).map(|(x, y)| x - y).collect();
        Self::new(a.to_vec(), d, 1.0)
    }

    pub fn length(&self) -> f64 {
        self.t_max * super::norm2(&self.direction)
    }

    pub fn line(&self) -> Line {
        Line::new(self.origin.to_vec(), self.direction.to_vec())
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        self.origin
            .iter()
            .zip(self.direction.iter())
            .map(|(x, d)| x + t * d)
            .collect()
    }
}

/// A closed parameter interval `[lo, hi]` on a line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    pub fn intersect(&self, o: &Interval) -> Option<Interval> {
        let iv = Interval::new(self.lo.max(o.lo), self.hi.min(o.hi));
        (!iv.is_empty()).then_some(iv)
    }
}

/// Sum of interval lengths.
pub fn total_length(ivs: &[Interval]) -> f64 {
    ivs.iter().map(Interval::len).sum()
}

/// Intersection of two sorted disjoint interval lists.
pub fn intersect_interval_lists(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        if let Some(iv) = a[i].intersect(&b[j]) {
            out.push(iv);
        }
        if a[i].hi < b[j].hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Restricts a sorted list to `[lo, hi]`.
pub fn clip_intervals(ivs: &[Interval], lo: f64, hi: f64) -> Vec<Interval> {
    intersect_interval_lists(ivs, &[Interval::new(lo, hi)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realvec_rejects_bad_input() {
        assert!(RealVec::new(vec![]).is_err());
        assert!(RealVec::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(RealVec::new(vec![1.0, 2.0]).unwrap().dim(), 2);
    }

    #[test]
    fn segment_length_and_validation() {
        let s = Segment::new(vec![0.0, 0.0], vec![3.0, 4.0], 2.0).unwrap();
        assert_eq!(s.length(), 10.0);
        assert!(Segment::new(vec![0.0], vec![0.0], 1.0).is_err());
        assert!(Segment::new(vec![0.0], vec![1.0], 0.0).is_err());
    }

    #[test]
    fn interval_list_intersection() {
        let a = [Interval::new(0.0, 2.0), Interval::new(3.0, 5.0)];
        let b = [Interval::new(1.0, 4.0)];
        let c = intersect_interval_lists(&a, &b);
        assert_eq!(c, vec![Interval::new(1.0, 2.0), Interval::new(3.0, 4.0)]);
        assert_eq!(total_length(&c), 2.0);
        assert_eq!(clip_intervals(&a, 4.5, 9.0), vec![Interval::new(4.5, 5.0)]);
    }
}
