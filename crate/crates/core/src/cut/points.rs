use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::lattice::LatticePoint;
use crate::walk::LatticePath;

use super::visit::CutScan;

/// Cut times of one path, sorted by time, endpoints excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CutPointSet<const D: usize> {
    pub entries: Vec<(usize, LatticePoint<D>)>,
    pub source_id: Option<u64>,
}

impl<const D: usize> CutPointSet<D> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn with_source(mut self, id: u64) -> Self {
        self.source_id = Some(id);
        self
    }

    /// `t_index,x,y[,z]` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_index");
        for name in ["x", "y", "z"].iter().take(D) {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (t, p) in &self.entries {
            out.push_str(&t.to_string());
            for c in p.0 {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn check_len<const D: usize>(path: &LatticePath<D>) -> Result<()> {
    if path.len() < 2 {
        return Err(invalid("path", "cut points need at least 2 edges"));
    }
    Ok(())
}

/// Quadratic reference: for every interior time, test single visit and
/// disjointness of the strict past and strict future traces.
pub fn cut_points_naive<const D: usize>(path: &LatticePath<D>) -> Result<CutPointSet<D>> {
    check_len(path)?;
    let sites = path.sites();
    let mut count: HashMap<LatticePoint<D>, usize> = HashMap::new();
    for p in sites {
        *count.entry(*p).or_default() += 1;
    }
    let mut past: HashSet<LatticePoint<D>> = HashSet::new();
    let mut entries = Vec::new();
    for t in 1..sites.len() - 1 {
        past.insert(sites[t - 1]);
        if count[&sites[t]] != 1 {
            continue;
        }
        if sites[t + 1..].iter().all(|p| !past.contains(p)) {
            entries.push((t, sites[t]));
        }
    }
    Ok(CutPointSet { entries, source_id: None })
}

/// Linear-time sweep over the running maximum of last-visit times.
pub fn cut_points_fast<const D: usize>(path: &LatticePath<D>) -> Result<CutPointSet<D>> {
    check_len(path)?;
    let scan = CutScan::new(path);
    let sites = path.sites();
    let entries = scan.cut_times().map(|t| (t, sites[t])).collect();
    Ok(CutPointSet { entries, source_id: None })
}

/// Number of cut points without materializing the set.
pub fn count_cut_points<const D: usize>(path: &LatticePath<D>) -> usize {
    if path.len() < 2 {
        return 0;
    }
    CutScan::new(path).cut_times().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::walk::sample_srw_fixed_steps;
    use proptest::prelude::*;

    fn path2(pts: &[[i64; 2]]) -> LatticePath<2> {
        LatticePath::from_sites(pts.iter().map(|&p| LatticePoint::new(p)).collect()).unwrap()
    }

    #[test]
    fn straight_segment() {
        let p = path2(&[[0, 0], [1, 0], [2, 0]]);
        let want = vec![(1, LatticePoint::new([1, 0]))];
        assert_eq!(cut_points_naive(&p).unwrap().entries, want);
        assert_eq!(cut_points_fast(&p).unwrap().entries, want);
    }

    #[test]
    fn closed_loop_has_none() {
        let p = path2(&[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]);
        assert!(cut_points_naive(&p).unwrap().is_empty());
        assert!(cut_points_fast(&p).unwrap().is_empty());
    }

    #[test]
    fn backtrack_is_straddled() {
        // x -> y -> x -> z
        let p = path2(&[[0, 0], [1, 0], [0, 0], [0, 1]]);
        assert!(cut_points_fast(&p).unwrap().is_empty());
        assert!(cut_points_naive(&p).unwrap().is_empty());
    }

    #[test]
    fn staircase_all_interior() {
        let mut pts = vec![[0i64, 0]];
        for i in 0..40 {
            let [x, y] = *pts.last().unwrap();
            pts.push(if i % 2 == 0 { [x + 1, y] } else { [x, y + 1] });
        }
        let p = path2(&pts);
        let fast = cut_points_fast(&p).unwrap();
        assert_eq!(fast.times().collect::<Vec<_>>(), (1..40).collect::<Vec<_>>());
    }

    #[test]
    fn too_short_rejected() {
        let p = path2(&[[0, 0], [1, 0]]);
        assert!(cut_points_fast(&p).is_err());
        assert!(cut_points_naive(&p).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = path2(&[[0, 0], [1, 0], [2, 0]]);
        assert_eq!(cut_points_fast(&p).unwrap().to_csv(), "t_index,x,y\n1,1,0\n");
    }

    #[test]
    fn reported_cuts_not_straddled() {
        let path = sample_srw_fixed_steps(LatticePoint::<2>::origin(), 4000, RngStream::new(77, 1)).unwrap();
        let cuts = cut_points_fast(&path).unwrap();
        let sites = path.sites();
        for t in cuts.times() {
            let before: HashSet<_> = sites[..t].iter().collect();
            assert!(sites[t + 1..].iter().all(|p| !before.contains(p)));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn fast_matches_naive_2d(seed in any::<u64>(), steps in 2usize..600) {
            let path = sample_srw_fixed_steps(LatticePoint::<2>::origin(), steps, RngStream::new(seed, 0)).unwrap();
            prop_assert_eq!(cut_points_fast(&path).unwrap(), cut_points_naive(&path).unwrap());
        }

        #[test]
        fn fast_matches_naive_3d(seed in any::<u64>(), steps in 2usize..600) {
            let path = sample_srw_fixed_steps(LatticePoint::<3>::origin(), steps, RngStream::new(seed, 1)).unwrap();
            prop_assert_eq!(cut_points_fast(&path).unwrap(), cut_points_naive(&path).unwrap());
        }
    }
}
