use std::sync::OnceLock;

use rustc_hash::FxHashMap;

use crate::lattice::{LatticePoint, RealPoint};
use crate::walk::LatticePath;

/// Bounding boxes up to this many cells get a dense site table.
const DENSE_LIMIT: u128 = 1 << 23;

enum SiteTable<const D: usize> {
    Dense {
        min: [i64; D],
        extent: [usize; D],
        ids: Vec<u32>,
    },
    Hashed(FxHashMap<LatticePoint<D>, u32>),
}

impl<const D: usize> SiteTable<D> {
    fn for_path(sites: &[LatticePoint<D>]) -> Self {
        let mut min = sites[0].0;
        let mut max = sites[0].0;
        for p in sites {
            for k in 0..D {
                min[k] = min[k].min(p.0[k]);
                max[k] = max[k].max(p.0[k]);
            }
        }
        let mut extent = [0usize; D];
        let mut cells: u128 = 1;
        for k in 0..D {
            extent[k] = (max[k] - min[k] + 1) as usize;
            cells *= extent[k] as u128;
        }
        if cells <= DENSE_LIMIT {
            SiteTable::Dense {
                min,
                extent,
                ids: vec![u32::MAX; cells as usize],
            }
        } else {
            SiteTable::Hashed(FxHashMap::with_capacity_and_hasher(sites.len() / 2, Default::default()))
        }
    }

    #[inline]
    fn slot(min: &[i64; D], extent: &[usize; D], p: &LatticePoint<D>) -> Option<usize> {
        let mut idx = 0usize;
        for k in (0..D).rev() {
            let off = p.0[k] - min[k];
            if off < 0 || off as usize >= extent[k] {
                return None;
            }
            idx = idx * extent[k] + off as usize;
        }
        Some(idx)
    }

    #[inline]
    fn get_or_insert(&mut self, p: &LatticePoint<D>, next: u32) -> u32 {
        match self {
            SiteTable::Dense { min, extent, ids } => {
                let mut s = 0usize;
                for k in (0..D).rev() {
                    s = s * extent[k] + (p.0[k] - min[k]) as usize;
                }
                let e = &mut ids[s];
                if *e == u32::MAX {
                    *e = next;
                }
                *e
            }
            SiteTable::Hashed(map) => *map.entry(*p).or_insert(next),
        }
    }

    #[inline]
    fn get(&self, p: &LatticePoint<D>) -> Option<u32> {
        match self {
            SiteTable::Dense { min, extent, ids } => {
                let s = Self::slot(min, extent, p)?;
                (ids[s] != u32::MAX).then_some(ids[s])
            }
            SiteTable::Hashed(map) => map.get(p).copied(),
        }
    }
}

/// Per-site first/last visit and visit count of one path; the full sorted
/// visit lists are built on first use.
///
/// Site ids are assigned in order of first visit.
pub struct VisitIndex<const D: usize> {
    site_of_time: Vec<u32>,
    sites: Vec<LatticePoint<D>>,
    /// First visit of each site.
    first: Vec<u32>,
    last: Vec<u32>,
    table: SiteTable<D>,
    /// CSR offsets and times.
    lists: OnceLock<(Vec<u32>, Vec<u32>)>,
}

impl<const D: usize> VisitIndex<D> {
    pub fn build(path: &LatticePath<D>) -> Self {
        let sites_in = path.sites();
        assert!(sites_in.len() < u32::MAX as usize, "path too long for 32-bit indices");
        let mut table = SiteTable::for_path(sites_in);
        let mut sites = Vec::new();
        let mut first = Vec::new();
        let mut last: Vec<u32> = Vec::new();
        let site_of_time = sites_in
            .iter()
            .enumerate()
            .map(|(t, p)| {
                let t = t as u32;
                let id = table.get_or_insert(p, sites.len() as u32);
                if id as usize == sites.len() {
                    sites.push(*p);
                    first.push(t);
                    last.push(t);
                } else {
                    last[id as usize] = t;
                }
                id
            })
            .collect();
        Self {
            site_of_time,
            sites,
            first,
            last,
            table,
            lists: OnceLock::new(),
        }
    }

    fn lists(&self) -> &(Vec<u32>, Vec<u32>) {
        self.lists.get_or_init(|| {
            let mut offsets = vec![0u32; self.sites.len() + 1];
            for &id in &self.site_of_time {
                offsets[id as usize + 1] += 1;
            }
            for i in 0..self.sites.len() {
                offsets[i + 1] += offsets[i];
            }
            let mut fill = offsets.clone();
            let mut times = vec![0u32; self.site_of_time.len()];
            for (t, &id) in self.site_of_time.iter().enumerate() {
                let slot = &mut fill[id as usize];
                times[*slot as usize] = t as u32;
                *slot += 1;
            }
            (offsets, times)
        })
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn path_len(&self) -> usize {
        self.site_of_time.len() - 1
    }

    pub fn site_id(&self, p: &LatticePoint<D>) -> Option<u32> {
        self.table.get(p)
    }

    #[inline]
    pub fn id_at(&self, t: usize) -> u32 {
        self.site_of_time[t]
    }

    pub fn site(&self, id: u32) -> LatticePoint<D> {
        self.sites[id as usize]
    }

    /// Sorted visit times of site `id`.
    pub fn visits_of(&self, id: u32) -> &[u32] {
        let (offsets, times) = self.lists();
        let i = id as usize;
        &times[offsets[i] as usize..offsets[i + 1] as usize]
    }

    pub fn visits(&self, p: &LatticePoint<D>) -> Option<&[u32]> {
        self.site_id(p).map(|id| self.visits_of(id))
    }

    #[inline]
    pub fn first_visit(&self, id: u32) -> u32 {
        self.first[id as usize]
    }

    #[inline]
    pub fn last_visit(&self, id: u32) -> u32 {
        self.last[id as usize]
    }

    pub fn visit_count(&self, id: u32) -> u32 {
        self.visits_of(id).len() as u32
    }

    /// Whether site `id` is visited exactly once.
    #[inline]
    pub fn visited_once(&self, id: u32) -> bool {
        self.first[id as usize] == self.last[id as usize]
    }
}

/// A [`VisitIndex`] plus the running maximum of last-visit times, which
/// answers cut-time and leg-disjointness queries in O(1).
pub struct CutScan<'a, const D: usize> {
    path: &'a LatticePath<D>,
    index: VisitIndex<D>,
    /// `reach[t] = max_{s <= t} last_visit(site(s))`
    reach: Vec<u32>,
}

impl<'a, const D: usize> CutScan<'a, D> {
    pub fn new(path: &'a LatticePath<D>) -> Self {
        let index = VisitIndex::build(path);
        let mut m = 0u32;
        let reach = index
            .site_of_time
            .iter()
            .map(|&id| {
                m = m.max(index.last[id as usize]);
                m
            })
            .collect();
        Self { path, index, reach }
    }

    pub fn path(&self) -> &LatticePath<D> {
        self.path
    }

    pub fn index(&self) -> &VisitIndex<D> {
        &self.index
    }

    /// Interior time `t` whose site is visited once and is not straddled by
    /// any other site's first/last visits.
    #[inline]
    pub fn is_cut_time(&self, t: usize) -> bool {
        let len = self.index.path_len();
        if t == 0 || t >= len {
            return false;
        }
        let id = self.index.id_at(t);
        self.index.visited_once(id) && (self.reach[t - 1] as usize) < t
    }

    pub fn cut_times(&self) -> impl Iterator<Item = usize> + '_ {
        (1..self.index.path_len()).filter(move |&t| self.is_cut_time(t))
    }

    /// Time at which `p` is a cut point, if it is one.
    pub fn cut_time_of(&self, p: &LatticePoint<D>) -> Option<usize> {
        let id = self.index.site_id(p)?;
        let t = self.index.first_visit(id) as usize;
        self.is_cut_time(t).then_some(t)
    }

    /// Whether the sites visited in `[0, a1]` meet those visited in `[a2, len]`.
    #[inline]
    pub fn legs_intersect(&self, a1: usize, a2: usize) -> bool {
        self.reach[a1] as usize >= a2
    }

    /// First index at which the path is in the closed ball `|x - c| <= r`.
    pub fn first_entry(&self, c: &RealPoint<D>, r: f64) -> Option<usize> {
        first_entry(self.path.sites(), c, r)
    }

    /// Last index at which the path is in the closed ball `|x - c| <= r`.
    pub fn last_exit(&self, c: &RealPoint<D>, r: f64) -> Option<usize> {
        last_exit(self.path.sites(), c, r)
    }
}

/// Forward scan for the closed ball, skipping steps that cannot reach it
/// (a unit step moves the Euclidean distance to `c` by at most 1).
pub fn first_entry<const D: usize>(sites: &[LatticePoint<D>], c: &RealPoint<D>, r: f64) -> Option<usize> {
    let mut t = 0usize;
    while t < sites.len() {
        let d = sites[t].dist2_to(c).sqrt();
        if d <= r {
            return Some(t);
        }
        t += ((d - r).ceil() as usize).max(1);
    }
    None
}

pub fn last_exit<const D: usize>(sites: &[LatticePoint<D>], c: &RealPoint<D>, r: f64) -> Option<usize> {
    let mut t = sites.len() as isize - 1;
    while t >= 0 {
        let d = sites[t as usize].dist2_to(c).sqrt();
        if d <= r {
            return Some(t as usize);
        }
        t -= ((d - r).ceil() as isize).max(1);
    }
    None
}

/// Whether every site in `sites[from..=to]` lies in the open ball `|x - c| < r`.
pub fn stays_inside<const D: usize>(sites: &[LatticePoint<D>], from: usize, to: usize, c: &RealPoint<D>, r: f64) -> bool {
    let mut t = from;
    while t <= to {
        let d = sites[t].dist2_to(c).sqrt();
        if d >= r {
            return false;
        }
        t += ((r - d).ceil() as usize).max(1);
    }
    true
}
