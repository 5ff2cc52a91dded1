//! Discrete time points and saturating interval arithmetic.

/// A discrete time step.
pub type Time = u32;

/// Open upper bound of an interval, and "unreached" cost marker.
pub const INF: Time = Time::MAX;

/// `t - 1`, keeping `INF` fixed and saturating at zero.
#[inline]
pub fn dec(t: Time) -> Time {
    if t == INF {
        INF
    } else {
        t.saturating_sub(1)
    }
}

/// `t + k`, keeping `INF` fixed and never overflowing into it.
#[inline]
pub fn add(t: Time, k: Time) -> Time {
    if t == INF || k == INF {
        INF
    } else {
        t.saturating_add(k).min(INF - 1)
    }
}

/// Closed time interval `[lo, hi]`; `hi == INF` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Time,
    pub hi: Time,
}

impl Interval {
    pub fn new(lo: Time, hi: Time) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    #[inline]
    pub fn contains(&self, t: Time) -> bool {
        self.lo <= t && t <= self.hi
    }

    #[inline]
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.hi == INF {
            write!(f, "[{},inf]", self.lo)
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturating_ops() {
        assert_eq!(dec(INF), INF);
        assert_eq!(dec(0), 0);
        assert_eq!(dec(5), 4);
        assert_eq!(add(INF, 1), INF);
        assert_eq!(add(3, 4), 7);
        assert!(add(INF - 1, 5) < INF);
    }

    #[test]
    fn interval_ops() {
        let a = Interval::new(2, 8);
        let b = Interval::new(4, INF);
        assert!(a.overlaps(&b));
        assert_eq!(a.intersect(&b), Some(Interval::new(4, 8)));
        assert_eq!(Interval::new(0, 1).intersect(&Interval::new(2, 3)), None);
        assert_eq!(b.to_string(), "[4,inf]");
    }
}
