//! Uniform spatial hash over polyline segments, for proximity queries.

use rustc_hash::FxHashMap;

use crate::lattice::RealPoint;

/// Squared distance between segments `p0p1` and `q0q1`.
pub fn segment_distance2<const D: usize>(p0: &RealPoint<D>, p1: &RealPoint<D>, q0: &RealPoint<D>, q1: &RealPoint<D>) -> f64 {
    let mut d1 = [0.0; D];
    let mut d2 = [0.0; D];
    let mut r = [0.0; D];
    for k in 0..D {
        d1[k] = p1[k] - p0[k];
        d2[k] = q1[k] - q0[k];
        r[k] = p0[k] - q0[k];
    }
    let dot = |a: &[f64; D], b: &[f64; D]| (0..D).map(|k| a[k] * b[k]).sum::<f64>();
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let eps = 1e-300;
    let (s, t);
    if a <= eps && e <= eps {
        return dot(&r, &r);
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > eps { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let mut out = 0.0;
    for k in 0..D {
        let v = p0[k] + d1[k] * s - (q0[k] + d2[k] * t);
        out += v * v;
    }
    out
}

/// Segments of one polyline bucketed into cubic cells.
pub struct SegmentGrid<'a, const D: usize> {
    pts: &'a [RealPoint<D>],
    cell: f64,
    buckets: FxHashMap<[i64; D], Vec<u32>>,
}

impl<'a, const D: usize> SegmentGrid<'a, D> {
    pub fn new(pts: &'a [RealPoint<D>], cell: f64) -> Self {
        assert!(cell > 0.0);
        let mut grid = Self { pts, cell, buckets: FxHashMap::default() };
        if pts.len() == 1 {
            let c = grid.cell_of(&pts[0]);
            grid.buckets.entry(c).or_default().push(0);
        }
        for i in 0..pts.len().saturating_sub(1) {
            let (lo, hi) = grid.cell_range(&pts[i], &pts[i + 1], 0.0);
            for_each_cell(&lo, &hi, |c| grid.buckets.entry(c).or_default().push(i as u32));
        }
        grid
    }

    fn cell_of(&self, p: &RealPoint<D>) -> [i64; D] {
        let mut c = [0; D];
        for k in 0..D {
            c[k] = (p[k] / self.cell).floor() as i64;
        }
        c
    }

    fn cell_range(&self, a: &RealPoint<D>, b: &RealPoint<D>, pad: f64) -> ([i64; D], [i64; D]) {
        let mut lo = [0; D];
        let mut hi = [0; D];
        for k in 0..D {
            lo[k] = ((a[k].min(b[k]) - pad) / self.cell).floor() as i64;
            hi[k] = ((a[k].max(b[k]) + pad) / self.cell).floor() as i64;
        }
        (lo, hi)
    }

    /// Segment (or point) within distance `margin` of some stored segment.
    pub fn any_within(&self, a: &RealPoint<D>, b: &RealPoint<D>, margin: f64) -> bool {
        let (lo, hi) = self.cell_range(a, b, margin);
        let m2 = margin * margin;
        let single = self.pts.len() == 1;
        let mut found = false;
        for_each_cell(&lo, &hi, |c| {
            if found {
                return;
            }
            if let Some(ids) = self.buckets.get(&c) {
                for &i in ids {
                    let i = i as usize;
                    let (p0, p1) = if single { (&self.pts[0], &self.pts[0]) } else { (&self.pts[i], &self.pts[i + 1]) };
                    if segment_distance2(p0, p1, a, b) <= m2 {
                        found = true;
                        return;
                    }
                }
            }
        });
        found
    }
}

fn for_each_cell<const D: usize>(lo: &[i64; D], hi: &[i64; D], mut f: impl FnMut([i64; D])) {
    let mut c = *lo;
    loop {
        f(c);
        let mut k = 0;
        loop {
            if k == D {
                return;
            }
            if c[k] < hi[k] {
                c[k] += 1;
                break;
            }
            c[k] = lo[k];
            k += 1;
        }
    }
}

/// Whether two polylines come within `margin` of each other.
pub fn polylines_within<const D: usize>(a: &[RealPoint<D>], b: &[RealPoint<D>], margin: f64) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let grid = SegmentGrid::new(small, margin);
    if big.len() == 1 {
        return grid.any_within(&big[0], &big[0], margin);
    }
    big.windows(2).any(|w| grid.any_within(&w[0], &w[1], margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute<const D: usize>(a: &[RealPoint<D>], b: &[RealPoint<D>], margin: f64) -> bool {
        let seg = |p: &[RealPoint<D>], i: usize| if p.len() == 1 { (p[0], p[0]) } else { (p[i], p[i + 1]) };
        let na = a.len().saturating_sub(1).max(1);
        let nb = b.len().saturating_sub(1).max(1);
        (0..na).any(|i| {
            (0..nb).any(|j| {
                let (p0, p1) = seg(a, i);
                let (q0, q1) = seg(b, j);
                segment_distance2(&p0, &p1, &q0, &q1) <= margin * margin
            })
        })
    }

    #[test]
    fn segment_distance_cases() {
        assert_eq!(segment_distance2(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]), 1.0);
        assert_eq!(segment_distance2(&[0.0, 0.0], &[2.0, 0.0], &[1.0, -1.0], &[1.0, 1.0]), 0.0);
        assert!((segment_distance2(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 1.0], &[3.0, 1.0]) - 2.0).abs() < 1e-12);
        let d = segment_distance2(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.5, 0.5, 1.0], &[0.5, -0.5, 1.0]);
        assert!((d - 1.0).abs() < 1e-12);
        // degenerate segments
        assert_eq!(segment_distance2(&[0.0, 0.0], &[0.0, 0.0], &[3.0, 4.0], &[3.0, 4.0]), 25.0);
    }

    #[test]
    fn hash_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let walk = |rng: &mut rand_chacha::ChaCha8Rng, n: usize, x0: f64| {
                let mut p = [x0, 0.0];
                let mut out = vec![p];
                for _ in 0..n {
                    p[0] += rng.random_range(-0.3..0.3);
                    p[1] += rng.random_range(-0.3..0.3);
                    out.push(p);
                }
                out
            };
            let a = walk(&mut rng, 40, 0.0);
            let b = walk(&mut rng, 55, 2.0);
            for margin in [0.05, 0.3, 1.0] {
                assert_eq!(polylines_within(&a, &b, margin), brute(&a, &b, margin));
            }
        }
    }
}
