//! Composite Hilbert space of two seven-level atoms and two truncated
//! bosonic cavity modes.
//!
//! Basis states are labeled `(atom_a, atom_b, n_left, n_right)` and mapped
//! to contiguous indices in lexicographic order over exactly that tuple,
//! with atom levels ordered as in [`AtomLevel::ALL`]. Both atoms carry the
//! full seven-level alphabet even though each stage only uses part of it:
//! one uniform space makes the stage hand-off a pure Hamiltonian switch
//! instead of a re-indexing step.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::{Result, SimError};

/// One of the seven internal levels: four ground states and three excited
/// states.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum AtomLevel {
    /// Ground, couples to the left circular mode.
    GL,
    /// Ground, the second atom starts here.
    G0,
    /// Ground, couples to the right circular mode.
    GR,
    /// Ground, the first atom starts here (drive-coupled).
    GA,
    /// Excited partner of `GL`.
    EL,
    /// Excited partner of `G0`/`GA`.
    E0,
    /// Excited partner of `GR`.
    ER,
}

impl AtomLevel {
    /// All levels in index order (grounds first, then excited).
    pub const ALL: [AtomLevel; 7] = [
        AtomLevel::GL,
        AtomLevel::G0,
        AtomLevel::GR,
        AtomLevel::GA,
        AtomLevel::EL,
        AtomLevel::E0,
        AtomLevel::ER,
    ];

    /// Number of levels per atom.
    pub const COUNT: usize = 7;

    /// Position of this level in [`Self::ALL`].
    pub fn index(self) -> usize {
        match self {
            AtomLevel::GL => 0,
            AtomLevel::G0 => 1,
            AtomLevel::GR => 2,
            AtomLevel::GA => 3,
            AtomLevel::EL => 4,
            AtomLevel::E0 => 5,
            AtomLevel::ER => 6,
        }
    }

    pub fn from_index(i: usize) -> Option<AtomLevel> {
        Self::ALL.get(i).copied()
    }

    pub fn is_excited(self) -> bool {
        matches!(self, AtomLevel::EL | AtomLevel::E0 | AtomLevel::ER)
    }
}

impl std::fmt::Display for AtomLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AtomLevel::GL => "gL",
            AtomLevel::G0 => "g0",
            AtomLevel::GR => "gR",
            AtomLevel::GA => "ga",
            AtomLevel::EL => "eL",
            AtomLevel::E0 => "e0",
            AtomLevel::ER => "eR",
        };
        write!(f, "{s}")
    }
}

/// Cavity mode polarization.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Polarization {
    Left,
    Right,
}

/// Label of one product basis state.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub atom_a: AtomLevel,
    pub atom_b: AtomLevel,
    pub n_left: usize,
    pub n_right: usize,
}

impl BasisLabel {
    pub fn new(atom_a: AtomLevel, atom_b: AtomLevel, n_left: usize, n_right: usize) -> Self {
        Self { atom_a, atom_b, n_left, n_right }
    }

    /// Total photon number in both modes.
    pub fn photons(&self) -> usize {
        self.n_left + self.n_right
    }

    /// True if either atom is in an excited level.
    pub fn any_excited(&self) -> bool {
        self.atom_a.is_excited() || self.atom_b.is_excited()
    }
}

impl std::fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "|{},{},{}L,{}R>",
            self.atom_a, self.atom_b, self.n_left, self.n_right
        )
    }
}

/// The composite space: dimension `7 * 7 * (n_max+1)^2` with a bijective
/// label <-> index map. Cheap to copy; immutable after construction.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    n_max: usize,
    dim: usize,
}

/// Construct the composite space for a given photon truncation.
///
/// `n_max = 1` is provably sufficient for the protocol (the stage
/// Hamiltonians conserve an excitation number that caps the photon count at
/// one); `n_max = 2` is the default elsewhere so that truncation errors are
/// observable rather than structurally hidden.
pub fn build_space(n_max: usize) -> Result<HilbertSpace> {
    if n_max == 0 {
        return Err(SimError::TruncationTooSmall);
    }
    let m = n_max + 1;
    Ok(HilbertSpace {
        n_max,
        dim: AtomLevel::COUNT * AtomLevel::COUNT * m * m,
    })
}

impl HilbertSpace {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Contiguous index of a label; lexicographic in
    /// `(atom_a, atom_b, n_left, n_right)`.
    pub fn index(&self, label: &BasisLabel) -> Result<usize> {
        let m = self.n_max + 1;
        for n in [label.n_left, label.n_right] {
            if n > self.n_max {
                return Err(SimError::OccupationOutOfRange {
                    occupation: n,
                    n_max: self.n_max,
                });
            }
        }
        let a = label.atom_a.index();
        let b = label.atom_b.index();
        Ok(((a * AtomLevel::COUNT + b) * m + label.n_left) * m + label.n_right)
    }

    /// Inverse of [`Self::index`].
    pub fn label(&self, index: usize) -> Result<BasisLabel> {
        if index >= self.dim {
            return Err(SimError::IndexOutOfRange { index, dim: self.dim });
        }
        let m = self.n_max + 1;
        let n_right = index % m;
        let rest = index / m;
        let n_left = rest % m;
        let rest = rest / m;
        let b = rest % AtomLevel::COUNT;
        let a = rest / AtomLevel::COUNT;
        Ok(BasisLabel {
            atom_a: AtomLevel::from_index(a).unwrap(),
            atom_b: AtomLevel::from_index(b).unwrap(),
            n_left,
            n_right,
        })
    }

    /// Iterate every basis label in index order.
    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dim).map(|i| self.label(i).unwrap())
    }

    /// Unit vector on a single basis state.
    pub fn basis_state(&self, label: &BasisLabel) -> Result<StateVector> {
        let idx = self.index(label)?;
        let mut amps = Array1::zeros(self.dim);
        amps[idx] = C64::new(1.0, 0.0);
        Ok(StateVector { space: *self, amps })
    }

    /// Zero vector, for accumulating superpositions.
    pub fn zero_state(&self) -> StateVector {
        StateVector {
            space: *self,
            amps: Array1::zeros(self.dim),
        }
    }
}

/// Complex amplitude vector over a [`HilbertSpace`]. May be sub-normalized
/// when evolved under a decaying (non-Hermitian) Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amps: Array1<C64>,
}

impl StateVector {
    /// Wrap an amplitude vector; its length must match the space dimension.
    pub fn from_amplitudes(space: HilbertSpace, amps: Array1<C64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(SimError::DimensionMismatch {
                got: amps.len(),
                expected: space.dim(),
            });
        }
        Ok(Self { space, amps })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut Array1<C64> {
        &mut self.amps
    }

    /// Amplitude on one basis state.
    pub fn amplitude(&self, label: &BasisLabel) -> Result<C64> {
        Ok(self.amps[self.space.index(label)?])
    }

    /// Inner product, conjugate-linear in `self`.
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(SimError::SpaceMismatch(
                self.space.n_max(),
                other.space.n_max(),
            ));
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Squared norm. Equals 1 for protocol states without decay; decays
    /// monotonically under the conditional Hamiltonian.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Population (|amplitude|^2) of one basis state.
    pub fn population(&self, label: &BasisLabel) -> Result<f64> {
        Ok(self.amplitude(label)?.norm_sqr())
    }

    /// Copy rescaled to unit norm. A zero vector is returned unchanged.
    pub fn normalized(&self) -> StateVector {
        let n = self.norm_sq().sqrt();
        if n == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.amps.mapv_inplace(|a| a / n);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dimensions_match_truncation() {
        assert_eq!(build_space(1).unwrap().dim(), 196);
        assert_eq!(build_space(2).unwrap().dim(), 441);
    }

    #[test]
    fn zero_truncation_rejected() {
        assert!(matches!(build_space(0), Err(SimError::TruncationTooSmall)));
    }

    #[test]
    fn index_label_roundtrip_exhaustive() {
        for n_max in [1, 2] {
            let space = build_space(n_max).unwrap();
            for i in 0..space.dim() {
                let label = space.label(i).unwrap();
                assert_eq!(space.index(&label).unwrap(), i);
            }
        }
    }

    #[test]
    fn label_ordering_is_lexicographic() {
        let space = build_space(1).unwrap();
        // first label: all components at their minimum
        assert_eq!(
            space.label(0).unwrap(),
            BasisLabel::new(AtomLevel::GL, AtomLevel::GL, 0, 0)
        );
        // n_right is the fastest-varying component
        assert_eq!(
            space.label(1).unwrap(),
            BasisLabel::new(AtomLevel::GL, AtomLevel::GL, 0, 1)
        );
        // last label: everything at maximum
        assert_eq!(
            space.label(space.dim() - 1).unwrap(),
            BasisLabel::new(AtomLevel::ER, AtomLevel::ER, 1, 1)
        );
    }

    #[test]
    fn basis_state_is_unit_and_occupation_checked() {
        let space = build_space(1).unwrap();
        let ok = space
            .basis_state(&BasisLabel::new(AtomLevel::GA, AtomLevel::G0, 0, 0))
            .unwrap();
        assert_abs_diff_eq!(ok.norm_sq(), 1.0, epsilon = 1e-15);
        let ok = space
            .basis_state(&BasisLabel::new(AtomLevel::GL, AtomLevel::G0, 1, 0))
            .unwrap();
        assert_abs_diff_eq!(ok.norm_sq(), 1.0, epsilon = 1e-15);
        let err = space.basis_state(&BasisLabel::new(AtomLevel::GL, AtomLevel::G0, 2, 0));
        assert!(matches!(
            err,
            Err(SimError::OccupationOutOfRange { occupation: 2, n_max: 1 })
        ));
    }

    #[test]
    fn basis_states_are_orthonormal() {
        let space = build_space(1).unwrap();
        // deterministic sample of index pairs
        let picks = [0usize, 1, 7, 50, 100, 195];
        for &i in &picks {
            for &j in &picks {
                let ei = space.basis_state(&space.label(i).unwrap()).unwrap();
                let ej = space.basis_state(&space.label(j).unwrap()).unwrap();
                let ov = ei.overlap(&ej).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ov.re, expect, epsilon = 1e-15);
                assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn overlap_is_conjugate_linear_in_first_argument() {
        let space = build_space(1).unwrap();
        let e1 = space.basis_state(&space.label(3).unwrap()).unwrap();
        let e2 = space.basis_state(&space.label(4).unwrap()).unwrap();
        let mut sup = space.zero_state();
        let w = 1.0 / 2.0_f64.sqrt();
        sup.amplitudes_mut()[3] = C64::new(0.0, w); // i/sqrt(2)
        sup.amplitudes_mut()[4] = C64::new(w, 0.0);
        // <sup|e1> = conj(i w) * 1 = -i w
        let ov = sup.overlap(&e1).unwrap();
        assert_abs_diff_eq!(ov.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ov.im, -w, epsilon = 1e-15);
        let ov = sup.overlap(&e2).unwrap();
        assert_abs_diff_eq!(ov.re, w, epsilon = 1e-15);
        // <a|a> = norm^2
        let aa = sup.overlap(&sup).unwrap();
        assert_abs_diff_eq!(aa.re, sup.norm_sq(), epsilon = 1e-15);
    }

    #[test]
    fn mismatched_spaces_error() {
        let s1 = build_space(1).unwrap();
        let s2 = build_space(2).unwrap();
        let a = s1.basis_state(&s1.label(0).unwrap()).unwrap();
        let b = s2.basis_state(&s2.label(0).unwrap()).unwrap();
        assert!(matches!(a.overlap(&b), Err(SimError::SpaceMismatch(1, 2))));
    }

    #[test]
    fn excited_flags() {
        let excited: Vec<_> = AtomLevel::ALL.iter().filter(|l| l.is_excited()).collect();
        assert_eq!(excited.len(), 3);
        assert!(AtomLevel::E0.is_excited());
        assert!(!AtomLevel::GA.is_excited());
    }
}
