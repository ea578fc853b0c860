use serde::ser::{Serialize, SerializeMap, SerializeStruct, Serializer};

use crate::boxes::NiceBox;
use crate::cut::CutScan;
use crate::error::{invalid, Result};
use crate::exponents::Exponents;
use crate::lattice::{LatticePoint, RealPoint};
use crate::walk::LatticePath;

use super::TestFunction;

/// Point masses at the cut points of a walk, on the mesh `e^{-n} Z^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure<const D: usize> {
    pub n: f64,
    pub normalization: f64,
    pub xi: f64,
    /// Cut sites in time order with their mass.
    pub atoms: Vec<(LatticePoint<D>, f64)>,
}

/// Mass `normalization * e^{-n(2 - xi)}` of one cut point.
pub fn atom_mass(n: f64, normalization: f64, exps: &Exponents) -> f64 {
    normalization * (-n * exps.count_growth()).exp()
}

/// Cut-point occupation measure of a walk stopped at radius `e^n`.
pub fn occupation_measure<const D: usize>(path: &LatticePath<D>, n: f64, normalization: f64, exps: &Exponents) -> Result<AtomicMeasure<D>> {
    if exps.d != D {
        return Err(invalid("exps", format!("exponents are for d = {}, path has d = {D}", exps.d)));
    }
    if !(normalization > 0.0) || !normalization.is_finite() {
        return Err(invalid("normalization", format!("{normalization} is not positive")));
    }
    let mass = atom_mass(n, normalization, exps);
    let atoms = if path.len() < 2 {
        Vec::new()
    } else {
        let scan = CutScan::new(path);
        scan.cut_times().map(|t| (path.sites()[t], mass)).collect()
    };
    Ok(AtomicMeasure { n, normalization, xi: exps.xi, atoms })
}

impl<const D: usize> AtomicMeasure<D> {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Atom position in unit-ball coordinates.
    pub fn position(&self, p: &LatticePoint<D>) -> RealPoint<D> {
        let l = (-self.n).exp();
        std::array::from_fn(|k| p.0[k] as f64 * l)
    }

    /// Number of atoms whose site rescales into the box.
    pub fn count_in(&self, bx: &NiceBox<D>) -> usize {
        let r = bx.lattice_ranges(self.n);
        self.atoms.iter().filter(|a| NiceBox::contains_site(&r, &a.0)).count()
    }

    /// Mass of the atoms whose site rescales into the box.
    pub fn mass_in(&self, bx: &NiceBox<D>) -> f64 {
        let r = bx.lattice_ranges(self.n);
        self.atoms.iter().filter(|a| NiceBox::contains_site(&r, &a.0)).map(|a| a.1).sum()
    }

    pub fn integrate(&self, g: &TestFunction<D>) -> f64 {
        self.atoms.iter().map(|(p, m)| g.eval(&self.position(p)) * m).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }
}

struct Atom<'a, const D: usize>(&'a LatticePoint<D>, f64);

impl<const D: usize> Serialize for Atom<'_, D> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(D + 1))?;
        for (k, name) in ["x", "y", "z"][..D].iter().enumerate() {
            m.serialize_entry(name, &self.0 .0[k])?;
        }
        m.serialize_entry("mass", &self.1)?;
        m.end()
    }
}

impl<const D: usize> Serialize for AtomicMeasure<D> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let atoms: Vec<Atom<'_, D>> = self.atoms.iter().map(|(p, m)| Atom(p, *m)).collect();
        let mut st = s.serialize_struct("AtomicMeasure", 4)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("normalization", &self.normalization)?;
        st.serialize_field("xi", &self.xi)?;
        st.serialize_field("atoms", &atoms)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn staircase(len: usize) -> LatticePath<2> {
        let dirs: Vec<u8> = (0..len).map(|i| if i % 2 == 0 { 0 } else { 2 }).collect();
        LatticePath::from_directions(LatticePoint::origin(), &dirs).unwrap()
    }

    #[test]
    fn staircase_mass() {
        let e = Exponents::for_dim(2).unwrap();
        let n = 3.0;
        let m = occupation_measure(&staircase(10), n, 2.0, &e).unwrap();
        assert_eq!(m.atoms.len(), 9);
        let expect = 2.0 * (-0.75 * n).exp() * 9.0;
        assert!((m.total_mass() - expect).abs() < 1e-12);
        let m1 = occupation_measure(&staircase(10), n, 1.0, &e).unwrap();
        for (a, b) in m.atoms.iter().zip(&m1.atoms) {
            assert_eq!(a.1, 2.0 * b.1);
        }
        let one = TestFunction::constant(1.0);
        assert_eq!(m.integrate(&one), m.total_mass());
        assert_eq!(m.integrate(&TestFunction::constant(0.0)), 0.0);
    }

    #[test]
    fn no_cut_points_is_empty() {
        let e = Exponents::for_dim(2).unwrap();
        let p = LatticePath::<2>::from_directions(LatticePoint::origin(), &[0, 1, 0, 1]).unwrap();
        let m = occupation_measure(&p, 2.0, 1.0, &e).unwrap();
        assert!(m.atoms.is_empty());
        assert_eq!(m.total_mass(), 0.0);
        assert!(occupation_measure(&p, 2.0, 0.0, &e).is_err());
    }

    #[test]
    fn box_additivity_and_json() {
        let e = Exponents::for_dim(2).unwrap();
        let n: f64 = 4.2;
        let l = n.exp();
        let sites: Vec<LatticePoint<2>> = (0..=(0.7 * l) as i64).map(|x| LatticePoint::new([x, 1])).collect();
        let mut all = vec![LatticePoint::new([0, 0])];
        all.extend(sites);
        let m = occupation_measure(&LatticePath::from_sites(all).unwrap(), n, 1.0, &e).unwrap();
        let a = NiceBox::<2>::new([6, 0], 4).unwrap();
        let b = NiceBox::<2>::new([7, 0], 4).unwrap();
        let ab = NiceBox::<2>::new([3, 0], 3).unwrap();
        assert!(m.mass_in(&a) > 0.0);
        assert_eq!(m.count_in(&a) + m.count_in(&b), m.count_in(&ab));
        assert!((m.mass_in(&a) + m.mass_in(&b) - m.mass_in(&ab)).abs() < 1e-14);
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["atoms"][0]["y"], 1);
        assert!(v["atoms"][0].get("mass").is_some());
        assert_eq!(v["xi"], 1.25);
    }
}
