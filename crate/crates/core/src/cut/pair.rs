use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticePoint, RealPoint};
use crate::walk::LatticePath;

/// Scaled separation of a non-intersecting pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationQuality {
    pub delta: f64,
    pub m: f64,
}

impl SeparationQuality {
    pub fn is_well_separated(&self, threshold: f64) -> bool {
        self.delta >= threshold
    }
}

/// Traces meet only at the shared start, and neither walk returns to it.
pub fn nonintersection_occurred<const D: usize>(p1: &LatticePath<D>, p2: &LatticePath<D>) -> Result<bool> {
    let start = p1.start();
    if p2.start() != start {
        return Err(invalid("p2", "paths must share their starting site"));
    }
    let (small, big) = if p1.len() <= p2.len() { (p1, p2) } else { (p2, p1) };
    let mut set: FxHashSet<LatticePoint<D>> = FxHashSet::default();
    for p in &small.sites()[1..] {
        if *p == start {
            return Ok(false);
        }
        set.insert(*p);
    }
    Ok(big.sites()[1..].iter().all(|p| *p != start && !set.contains(p)))
}

fn dist2_point_segment<const D: usize>(x: &RealPoint<D>, a: &LatticePoint<D>, b: &LatticePoint<D>) -> f64 {
    let mut ab2 = 0.0;
    let mut dot = 0.0;
    for k in 0..D {
        let ab = (b.0[k] - a.0[k]) as f64;
        ab2 += ab * ab;
        dot += (x[k] - a.0[k] as f64) * ab;
    }
    let s = if ab2 > 0.0 { (dot / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut d2 = 0.0;
    for k in 0..D {
        let p = a.0[k] as f64 + s * (b.0[k] - a.0[k]) as f64;
        d2 += (x[k] - p) * (x[k] - p);
    }
    d2
}

/// Euclidean distance from `x` to the interpolated trace of `path`.
pub fn distance_to_trace<const D: usize>(x: &RealPoint<D>, path: &LatticePath<D>) -> f64 {
    let sites = path.sites();
    let mut best = sites[0].dist2_to(x);
    for w in sites.windows(2) {
        // a unit segment is within 1 of its first endpoint
        let s = w[0].dist2_to(x).sqrt();
        if s - 1.0 >= best.sqrt() {
            continue;
        }
        best = best.min(dist2_point_segment(x, &w[0], &w[1]));
    }
    best.sqrt()
}

pub fn separation_quality<const D: usize>(p1: &LatticePath<D>, p2: &LatticePath<D>, m: f64) -> Result<SeparationQuality> {
    if !nonintersection_occurred(p1, p2)? {
        return Err(Error::Precondition("separation needs a non-intersecting pair".into()));
    }
    let d1 = distance_to_trace(&p1.end().to_real(), p2);
    let d2 = distance_to_trace(&p2.end().to_real(), p1);
    Ok(SeparationQuality { delta: (-m).exp() * d1.min(d2), m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BallSpec;
    use crate::rng::RngStream;
    use crate::walk::sample_srw_until_exit;
    use std::collections::HashSet;

    fn axis_ray(dir: i64, len: i64) -> LatticePath<2> {
        LatticePath::from_sites((0..=len).map(|x| LatticePoint::new([dir * x, 0])).collect()).unwrap()
    }

    #[test]
    fn opposite_rays() {
        let (e, w) = (axis_ray(1, 20), axis_ray(-1, 20));
        assert!(nonintersection_occurred(&e, &w).unwrap());
        assert!(!nonintersection_occurred(&e, &e).unwrap());
        let q = separation_quality(&e, &w, 20f64.ln()).unwrap();
        assert!((q.delta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjacent_endpoint() {
        let e = axis_ray(1, 20);
        let mut s: Vec<_> = (0..=5).map(|y| LatticePoint::new([0, -y])).collect();
        for x in 1..=10 {
            s.push(LatticePoint::new([x, -5]));
        }
        for y in (1..=4).rev() {
            s.push(LatticePoint::new([10, -y]));
        }
        let p2 = LatticePath::from_sites(s).unwrap();
        let m: f64 = 3.0;
        let q = separation_quality(&e, &p2, m).unwrap();
        assert!((q.delta - (-m).exp()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let e = axis_ray(1, 5);
        let shifted = LatticePath::from_sites((1..=5).map(|x| LatticePoint::new([x, 1])).collect()).unwrap();
        assert!(nonintersection_occurred(&e, &shifted).is_err());
        assert!(separation_quality(&e, &e, 1.0).is_err());
    }

    #[test]
    fn return_to_start_fails() {
        let e = axis_ray(1, 5);
        let back = LatticePath::from_sites(vec![
            LatticePoint::new([0, 0]),
            LatticePoint::new([0, 1]),
            LatticePoint::new([0, 0]),
            LatticePoint::new([0, -1]),
        ])
        .unwrap();
        assert!(!nonintersection_occurred(&e, &back).unwrap());
        assert!(!nonintersection_occurred(&back, &e).unwrap());
    }

    #[test]
    fn scaling_leaves_delta_unchanged() {
        let e = axis_ray(1, 7);
        let mut s = vec![LatticePoint::new([0, 0])];
        for (dx, dy) in [(0, 1), (0, 1), (-1, 0), (-1, 0), (-1, 0), (0, 1)] {
            let l = *s.last().unwrap();
            s.push(LatticePoint::new([l.0[0] + dx, l.0[1] + dy]));
        }
        let p2 = LatticePath::from_sites(s).unwrap();
        let fine = |p: &LatticePath<2>, k: i64| {
            let mut out = vec![p.start()];
            for w in p.sites().windows(2) {
                let step = [w[1].0[0] - w[0].0[0], w[1].0[1] - w[0].0[1]];
                for _ in 0..k {
                    let l = *out.last().unwrap();
                    out.push(LatticePoint::new([l.0[0] + step[0], l.0[1] + step[1]]));
                }
            }
            LatticePath::from_sites(out).unwrap()
        };
        let q1 = separation_quality(&e, &p2, 1.5).unwrap();
        let q3 = separation_quality(&fine(&e, 3), &fine(&p2, 3), 1.5 + 3f64.ln()).unwrap();
        assert!((q1.delta - q3.delta).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_set_oracle_and_is_symmetric() {
        let ball = BallSpec::<2>::centered(2.5).unwrap();
        for t in 0..400u64 {
            let a = sample_srw_until_exit(LatticePoint::origin(), &ball, RngStream::new(3, 2 * t)).unwrap();
            let b = sample_srw_until_exit(LatticePoint::origin(), &ball, RngStream::new(3, 2 * t + 1)).unwrap();
            let sa: HashSet<_> = a.sites().iter().collect();
            let sb: HashSet<_> = b.sites().iter().collect();
            let o = LatticePoint::origin();
            let oracle = sa.intersection(&sb).count() == 1
                && a.sites().iter().filter(|p| **p == o).count() == 1
                && b.sites().iter().filter(|p| **p == o).count() == 1;
            assert_eq!(nonintersection_occurred(&a, &b).unwrap(), oracle);
            assert_eq!(nonintersection_occurred(&b, &a).unwrap(), oracle);
        }
    }
}
