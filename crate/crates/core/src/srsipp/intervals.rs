use crate::graph::VertexId;
use crate::model::ConstraintIndex;
use crate::time::{dec, Interval, Time, INF};

/// Maximal intervals over `[t_start, inf)` at `v` that avoid every vertex
/// constraint on `v`, ascending.
pub fn build_safe_intervals(v: VertexId, cons: &ConstraintIndex, t_start: Time) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut lo = t_start;
    for &t in cons.vertex_times(v) {
        if t < lo {
            continue;
        }
        if t > lo {
            out.push(Interval::new(lo, t - 1));
        }
        lo = t + 1;
    }
    out.push(Interval::new(lo, INF));
    out
}

/// One-action backward predecessor interval of `[t_l, t_r]`:
/// `[max(t_start, t_l - 1), t_r - 1]`, or `None` when empty.
pub fn dummy_son(state: Interval, t_start: Time) -> Option<Interval> {
    if state.hi == 0 {
        return None;
    }
    let lo = if state.lo == 0 { t_start } else { t_start.max(state.lo - 1) };
    let hi = dec(state.hi);
    (lo <= hi).then(|| Interval::new(lo, hi))
}

/// Pieces of `dummy` whose move `from -> to` does not arrive at a
/// forbidden time (`edge_times` sorted ascending).
pub fn filter_edge_times(dummy: Interval, edge_times: &[Time], out: &mut Vec<Interval>) {
    out.clear();
    let mut lo = dummy.lo;
    for &arrive in edge_times {
        let Some(depart) = arrive.checked_sub(1) else { continue };
        if depart < lo {
            continue;
        }
        if depart > dummy.hi {
            break;
        }
        if depart > lo {
            out.push(Interval::new(lo, depart - 1));
        }
        if depart == INF - 1 {
            return;
        }
        lo = depart + 1;
    }
    if lo <= dummy.hi {
        out.push(Interval::new(lo, dummy.hi));
    }
}

/// `max(max(t_l - now, 0), h_v)`.
#[inline]
pub fn h_tis(interval: Interval, now: Time, h_v: u32) -> u32 {
    debug_assert!(interval.hi != 0 || interval.lo == 0);
    interval.lo.saturating_sub(now).max(h_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, ConstraintSet};

    fn iv(lo: Time, hi: Time) -> Interval {
        Interval::new(lo, hi)
    }

    fn index(cs: &[Constraint]) -> ConstraintIndex {
        ConstraintIndex::new(&cs.iter().copied().collect::<ConstraintSet>())
    }

    #[test]
    fn safe_intervals_subtract_constraints() {
        let v = VertexId(2);
        let cons = index(&[
            Constraint::Vertex { time: 3, vertex: v },
            Constraint::Vertex { time: 5, vertex: v },
        ]);
        assert_eq!(
            build_safe_intervals(v, &cons, 0),
            vec![iv(0, 2), iv(4, 4), iv(6, INF)]
        );
        assert_eq!(build_safe_intervals(VertexId(1), &cons, 7), vec![iv(7, INF)]);
        // constraints before t_start are ignored, one at t_start shifts it
        assert_eq!(build_safe_intervals(v, &cons, 5), vec![iv(6, INF)]);
        assert_eq!(build_safe_intervals(v, &cons, 4), vec![iv(4, 4), iv(6, INF)]);
    }

    #[test]
    fn dummy_son_examples() {
        assert_eq!(dummy_son(iv(4, 10), 0), Some(iv(3, 9)));
        assert_eq!(dummy_son(iv(5, 10), 5), Some(iv(5, 9)));
        assert_eq!(dummy_son(iv(3, 3), 4), None);
        assert_eq!(dummy_son(iv(0, 0), 0), None);
        assert_eq!(dummy_son(iv(0, INF), 0), Some(iv(0, INF)));
        assert_eq!(dummy_son(iv(6, INF), 2), Some(iv(5, INF)));
    }

    #[test]
    fn edge_filter_splits() {
        let mut out = Vec::new();
        filter_edge_times(iv(2, 9), &[1, 5, 11, 20], &mut out);
        assert_eq!(out, vec![iv(2, 3), iv(5, 9)]);
        filter_edge_times(iv(2, INF), &[3], &mut out);
        assert_eq!(out, vec![iv(3, INF)]);
        filter_edge_times(iv(4, 4), &[5], &mut out);
        assert!(out.is_empty());
        filter_edge_times(iv(0, 3), &[0], &mut out);
        assert_eq!(out, vec![iv(0, 3)]);
    }

    #[test]
    fn h_tis_examples() {
        assert_eq!(h_tis(iv(5, 9), 2, 4), 4);
        assert_eq!(h_tis(iv(5, 9), 0, 3), 5);
        assert_eq!(h_tis(iv(7, INF), 7, 0), 0);
    }
}
