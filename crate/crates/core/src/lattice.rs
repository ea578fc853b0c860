//! Points, balls and lattice symmetries in `Z^d` / `R^d`, `d ∈ {2, 3}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A real point in `R^D`.
pub type RealPoint<const D: usize> = [f64; D];

pub(crate) const fn assert_dim<const D: usize>() {
    assert!(D == 2 || D == 3, "only d = 2 and d = 3 are supported");
}

/// A site of `Z^D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint<const D: usize>(#[serde(with = "crate::serde_array")] pub [i64; D]);

impl<const D: usize> LatticePoint<D> {
    pub const fn new(coords: [i64; D]) -> Self {
        const { assert_dim::<D>() };
        Self(coords)
    }

    pub const fn origin() -> Self {
        Self::new([0; D])
    }

    /// `⌊L x⌋` coordinate-wise.
    pub fn floor_scaled(x: &RealPoint<D>, scale: f64) -> Self {
        let mut c = [0i64; D];
        for (ci, xi) in c.iter_mut().zip(x) {
            *ci = (xi * scale).floor() as i64;
        }
        Self::new(c)
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|&c| (c as f64) * (c as f64)).sum()
    }

    pub fn to_real(&self) -> RealPoint<D> {
        let mut x = [0.0; D];
        for (xi, &c) in x.iter_mut().zip(&self.0) {
            *xi = c as f64;
        }
        x
    }

    pub fn dist2_to(&self, x: &RealPoint<D>) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&c, &xi)| {
                let d = c as f64 - xi;
                d * d
            })
            .sum()
    }

    /// L1 distance between lattice points.
    pub fn l1(&self, other: &Self) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Neighbor along direction code `dir ∈ 0..2D`: axis `dir / 2`, positive
    /// when `dir` is even.
    #[inline]
    pub fn step(&self, dir: u8) -> Self {
        let mut c = self.0;
        let axis = (dir >> 1) as usize;
        c[axis] += if dir & 1 == 0 { 1 } else { -1 };
        Self(c)
    }

    /// Direction code of the unit step `self -> next`, if they are neighbors.
    pub fn direction_to(&self, next: &Self) -> Option<u8> {
        let mut found = None;
        for axis in 0..D {
            match next.0[axis] - self.0[axis] {
                0 => {}
                1 if found.is_none() => found = Some((2 * axis) as u8),
                -1 if found.is_none() => found = Some((2 * axis + 1) as u8),
                _ => return None,
            }
        }
        found
    }

    /// `self + other`.
    pub fn offset(&self, other: &Self) -> Self {
        let mut c = self.0;
        for (ci, o) in c.iter_mut().zip(&other.0) {
            *ci += o;
        }
        Self(c)
    }
}

pub fn dist2<const D: usize>(a: &RealPoint<D>, b: &RealPoint<D>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm<const D: usize>(a: &RealPoint<D>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn scale<const D: usize>(a: &RealPoint<D>, s: f64) -> RealPoint<D> {
    let mut out = *a;
    for v in &mut out {
        *v *= s;
    }
    out
}

/// A Euclidean ball `{x : |x - center| < e^{log_radius}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec<const D: usize> {
    #[serde(with = "crate::serde_array")]
    pub center: RealPoint<D>,
    pub log_radius: f64,
}

impl<const D: usize> BallSpec<D> {
    pub fn new(center: RealPoint<D>, log_radius: f64) -> Result<Self> {
        const { assert_dim::<D>() };
        if !log_radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("ball", "non-finite center or radius"));
        }
        Ok(Self { center, log_radius })
    }

    /// Ball centred at the origin.
    pub fn centered(log_radius: f64) -> Result<Self> {
        Self::new([0.0; D], log_radius)
    }

    /// Ball with a given radius instead of a log-radius.
    pub fn with_radius(center: RealPoint<D>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(invalid("radius", format!("{radius} is not positive")));
        }
        Self::new(center, radius.ln())
    }

    pub fn radius(&self) -> f64 {
        self.log_radius.exp()
    }

    /// Strict (open ball) membership.
    #[inline]
    pub fn contains(&self, p: &LatticePoint<D>) -> bool {
        let r = self.radius();
        p.dist2_to(&self.center) < r * r
    }

    #[inline]
    pub fn contains_real(&self, x: &RealPoint<D>) -> bool {
        let r = self.radius();
        dist2(x, &self.center) < r * r
    }
}

/// Signed coordinate permutation `x -> (signs[k] * x[perm[k]])_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symmetry<const D: usize> {
    pub perm: [usize; D],
    pub signs: [i64; D],
}

impl<const D: usize> Symmetry<D> {
    pub fn apply(&self, p: &LatticePoint<D>) -> LatticePoint<D> {
        LatticePoint(std::array::from_fn(|k| self.signs[k] * p.0[self.perm[k]]))
    }

    pub fn apply_real(&self, x: &RealPoint<D>) -> RealPoint<D> {
        std::array::from_fn(|k| self.signs[k] as f64 * x[self.perm[k]])
    }

    pub fn inverse(&self) -> Self {
        let mut perm = [0; D];
        let mut signs = [1; D];
        for k in 0..D {
            perm[self.perm[k]] = k;
            signs[self.perm[k]] = self.signs[k];
        }
        Self { perm, signs }
    }
}

/// The hyperoctahedral group of `Z^D` (signed permutations of coordinates):
/// 8 elements for `D = 2`, 48 for `D = 3`. They fix the origin and every ball
/// centred there, so they preserve the law of a simple random walk from 0.
pub fn lattice_symmetries<const D: usize>() -> Vec<Symmetry<D>> {
    let mut perms: Vec<[usize; D]> = Vec::new();
    let mut current = [0usize; D];
    fn rec<const D: usize>(k: usize, used: &mut [bool; D], cur: &mut [usize; D], out: &mut Vec<[usize; D]>) {
        if k == D {
            out.push(*cur);
            return;
        }
        for i in 0..D {
            if !used[i] {
                used[i] = true;
                cur[k] = i;
                rec(k + 1, used, cur, out);
                used[i] = false;
            }
        }
    }
    rec::<D>(0, &mut [false; D], &mut current, &mut perms);
    let mut out = Vec::new();
    for p in perms {
        for mask in 0..(1u32 << D) {
            let mut signs = [1i64; D];
            for (k, s) in signs.iter_mut().enumerate() {
                if mask & (1 << k) != 0 {
                    *s = -1;
                }
            }
            out.push(Symmetry { perm: p, signs });
        }
    }
    out
}

/// Distinct images of a lattice point under [`lattice_symmetries`], sorted.
pub fn orbit<const D: usize>(p: &LatticePoint<D>) -> Vec<LatticePoint<D>> {
    let mut pts: Vec<LatticePoint<D>> = lattice_symmetries::<D>()
        .into_iter()
        .map(|g| g.apply(p))
        .collect();
    pts.sort();
    pts.dedup();
    pts
}
