use super::{Ambient, MembershipSet, SetDescriptor};
use crate::geom::{box_chord, Interval, Line};

/// All of `ℝⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct WholeSpace {
    pub n: usize,
    pub ambient: Option<Ambient>,
}

impl WholeSpace {
    pub fn new(n: usize, ambient: Option<Ambient>) -> Self {
        Self { n, ambient }
    }
}

impl MembershipSet for WholeSpace {
    fn dim(&self) -> usize {
        self.n
    }

    fn contains(&self, _x: &[f64]) -> bool {
        true
    }

    fn intersect(&self, _line: &Line) -> Option<Vec<Interval>> {
        Some(vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY)])
    }

    fn ambient(&self) -> Option<&Ambient> {
        self.ambient.as_ref()
    }

    fn descriptor(&self) -> SetDescriptor {
        SetDescriptor::new("whole_space", self.n)
    }
}

/// The box `[lo, hi]^n`, with the uniform measure on it as ambient.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    ambient: Ambient,
}

impl BoxSet {
    pub fn new(n: usize, lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty box");
        Self {
            n,
            lo,
            hi,
            ambient: Ambient::Box { n, lo, hi },
        }
    }
}

impl MembershipSet for BoxSet {
    fn dim(&self) -> usize {
        self.n
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| (self.lo..=self.hi).contains(v))
    }

    fn intersect(&self, line: &Line) -> Option<Vec<Interval>> {
        Some(
            box_chord(line, self.lo, self.hi)
                .map(|(a, b)| vec![Interval::new(a, b)])
                .unwrap_or_default(),
        )
    }

    fn ambient(&self) -> Option<&Ambient> {
        Some(&self.ambient)
    }

    fn descriptor(&self) -> SetDescriptor {
        SetDescriptor::new("box", self.n)
            .with("lo", self.lo)
            .with("hi", self.hi)
    }
}
