//! The four stage Hamiltonians and the non-Hermitian decay extension.
//!
//! Stage A drives the first atom (`ga <-> e0`) while both circular cavity
//! modes couple `e0` to `gL`/`gR`; stage B drives `gL/gR <-> eL/eR` of the
//! second atom while the modes couple `g0` to the excited levels crosswise
//! (a left photon excites `eR`, a right photon `eL`). Each stage exists in
//! two forms: the full interaction-picture Hamiltonian carrying explicit
//! `e^{-i delta t}` factors, and the time-independent effective Hamiltonian
//! obtained by adiabatic elimination of the excited levels.
//!
//! Full Hamiltonians are exposed as a constant coupling-structure matrix
//! plus a scalar phase rule ([`RotatingHamiltonian`]), so evaluation or
//! application at time `t` costs one phase pass over the structure.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::space::{AtomLevel, BasisLabel, HilbertSpace, Polarization};
use crate::{Result, SimError};

/// Couplings, drives, detuning and decay rates, all in units of `g_A`
/// (so `g_a = 1` by convention, though other values are accepted).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Stage-A atom-cavity coupling.
    pub g_a: f64,
    /// Stage-B atom-cavity coupling.
    pub g_b: f64,
    /// Stage-A classical Rabi frequency.
    pub omega_a: f64,
    /// Stage-B classical Rabi frequency.
    pub omega_b: f64,
    /// Atom-cavity detuning.
    pub delta: f64,
    /// Cavity field decay rate per mode.
    pub kappa: f64,
    /// Excited-state decay rate (default 0; the large detuning suppresses
    /// spontaneous emission, and the effective model never populates the
    /// excited levels).
    pub gamma: f64,
}

impl Default for PhysicalParams {
    /// The two-qubit operating point: `omega_a = sqrt(2) g_a`,
    /// `omega_b = g_b`, `delta = 10 g_a`, no decay.
    fn default() -> Self {
        Self {
            g_a: 1.0,
            g_b: 1.0,
            omega_a: std::f64::consts::SQRT_2,
            omega_b: 1.0,
            delta: 10.0,
            kappa: 0.0,
            gamma: 0.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.g_a > 0.0) {
            problems.push(format!("g_a must be > 0 (got {})", self.g_a));
        }
        if !(self.g_b > 0.0) {
            problems.push(format!("g_b must be > 0 (got {})", self.g_b));
        }
        if !(self.delta > 0.0) {
            problems.push(format!("delta must be > 0 (got {})", self.delta));
        }
        if self.kappa < 0.0 {
            problems.push(format!("kappa must be >= 0 (got {})", self.kappa));
        }
        if self.gamma < 0.0 {
            problems.push(format!("gamma must be >= 0 (got {})", self.gamma));
        }
        for (name, v) in [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                problems.push(format!("{name} must be finite (got {v})"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidParams(problems.join("; ")))
        }
    }

    /// Advisory check of the large-detuning premise behind the effective
    /// model: `delta >= 5 * max(g_a, g_b, omega_a, omega_b)`. Diagnostic
    /// only; nothing is blocked when it fails.
    pub fn large_detuning_ok(&self) -> bool {
        let scale = self
            .g_a
            .max(self.g_b)
            .max(self.omega_a.abs())
            .max(self.omega_b.abs());
        self.delta >= 5.0 * scale
    }
}

/// One named contribution to a Hamiltonian.
pub struct HamiltonianTerm {
    pub description: String,
    pub matrix: Array2<C64>,
}

fn zeros(space: HilbertSpace) -> Array2<C64> {
    Array2::zeros((space.dim(), space.dim()))
}

/// Truncated bosonic lowering operator on one mode: `a|n> = sqrt(n)|n-1>`,
/// identity on the atoms and the other mode.
pub fn mode_annihilator(space: HilbertSpace, polarization: Polarization) -> Array2<C64> {
    let mut op = zeros(space);
    for label in space.labels() {
        let n = match polarization {
            Polarization::Left => label.n_left,
            Polarization::Right => label.n_right,
        };
        if n == 0 {
            continue;
        }
        let mut to = label;
        match polarization {
            Polarization::Left => to.n_left -= 1,
            Polarization::Right => to.n_right -= 1,
        }
        let i = space.index(&to).unwrap();
        let j = space.index(&label).unwrap();
        op[[i, j]] = C64::new((n as f64).sqrt(), 0.0);
    }
    op
}

/// Which atom a single-atom operator acts on.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Slot {
    A,
    B,
}

impl Slot {
    fn level(self, label: &BasisLabel) -> AtomLevel {
        match self {
            Slot::A => label.atom_a,
            Slot::B => label.atom_b,
        }
    }

    fn with_level(self, label: &BasisLabel, level: AtomLevel) -> BasisLabel {
        let mut out = *label;
        match self {
            Slot::A => out.atom_a = level,
            Slot::B => out.atom_b = level,
        }
        out
    }
}

/// Photon-number change accompanying an atomic transition.
#[derive(Copy, Clone, Debug)]
enum Ladder {
    None,
    Lower(Polarization),
    Raise(Polarization),
}

/// Add `amp * (ladder op) * |to><from|` acting on the chosen atom to `h`.
/// The bosonic matrix element (`sqrt(n)` or `sqrt(n+1)`) is included; raises
/// beyond the truncation are dropped, consistent with the truncated ladder
/// operators.
fn add_transition(
    h: &mut Array2<C64>,
    space: HilbertSpace,
    slot: Slot,
    from: AtomLevel,
    to: AtomLevel,
    ladder: Ladder,
    amp: f64,
) {
    for label in space.labels() {
        if slot.level(&label) != from {
            continue;
        }
        let target = slot.with_level(&label, to);
        let (target, weight) = match ladder {
            Ladder::None => (target, 1.0),
            Ladder::Lower(pol) => {
                let n = match pol {
                    Polarization::Left => target.n_left,
                    Polarization::Right => target.n_right,
                };
                if n == 0 {
                    continue;
                }
                let mut t = target;
                match pol {
                    Polarization::Left => t.n_left -= 1,
                    Polarization::Right => t.n_right -= 1,
                }
                (t, (n as f64).sqrt())
            }
            Ladder::Raise(pol) => {
                let n = match pol {
                    Polarization::Left => target.n_left,
                    Polarization::Right => target.n_right,
                };
                if n + 1 > space.n_max() {
                    continue;
                }
                let mut t = target;
                match pol {
                    Polarization::Left => t.n_left += 1,
                    Polarization::Right => t.n_right += 1,
                }
                (t, ((n + 1) as f64).sqrt())
            }
        };
        let i = space.index(&target).unwrap();
        let j = space.index(&label).unwrap();
        h[[i, j]] += C64::new(amp * weight, 0.0);
    }
}

fn conjugate_transpose(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// A Hamiltonian of the form
/// `H(t) = S + R e^{-i delta (t + t0)} + R^dag e^{+i delta (t + t0)}`
/// with constant matrices `S` (any time-independent part, e.g. decay) and
/// `R` (the directed coupling structure).
///
/// `t0` is a stage-local clock offset: the protocol restarts the phase at
/// the beginning of each stage (the interaction-picture state is frozen
/// during the field-free delay, so this is a drive-phase convention that
/// leaves populations and the effective dynamics unchanged); a nonzero
/// offset is available for sensitivity studies.
#[derive(Clone, Debug)]
pub struct RotatingHamiltonian {
    static_part: Array2<C64>,
    rotating: Array2<C64>,
    delta: f64,
    clock_offset: f64,
    // nonzero entries cached so application costs one phase pass
    nz_static: Vec<(usize, usize, C64)>,
    nz_rotating: Vec<(usize, usize, C64)>,
    dim: usize,
}

fn nonzeros(m: &Array2<C64>) -> Vec<(usize, usize, C64)> {
    m.indexed_iter()
        .filter(|(_, v)| v.norm_sqr() != 0.0)
        .map(|((i, j), v)| (i, j, *v))
        .collect()
}

impl RotatingHamiltonian {
    pub fn new(static_part: Array2<C64>, rotating: Array2<C64>, delta: f64) -> Result<Self> {
        let dim = rotating.nrows();
        if rotating.ncols() != dim || static_part.nrows() != dim || static_part.ncols() != dim {
            return Err(SimError::DimensionMismatch {
                got: static_part.nrows(),
                expected: dim,
            });
        }
        let nz_static = nonzeros(&static_part);
        let nz_rotating = nonzeros(&rotating);
        Ok(Self {
            static_part,
            rotating,
            delta,
            clock_offset: 0.0,
            nz_static,
            nz_rotating,
            dim,
        })
    }

    /// A constant Hamiltonian wrapped as a (trivial) rule.
    pub fn constant(h: Array2<C64>) -> Result<Self> {
        let dim = h.nrows();
        Self::new(h, Array2::zeros((dim, dim)), 0.0)
    }

    pub fn with_clock_offset(mut self, t0: f64) -> Self {
        self.clock_offset = t0;
        self
    }

    /// Replace the time-independent part (e.g. to attach conditional decay).
    pub fn with_static_part(mut self, static_part: Array2<C64>) -> Result<Self> {
        if static_part.nrows() != self.dim || static_part.ncols() != self.dim {
            return Err(SimError::DimensionMismatch {
                got: static_part.nrows(),
                expected: self.dim,
            });
        }
        self.nz_static = nonzeros(&static_part);
        self.static_part = static_part;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn static_part(&self) -> &Array2<C64> {
        &self.static_part
    }

    pub fn rotating(&self) -> &Array2<C64> {
        &self.rotating
    }

    /// Dense matrix at time `t`.
    pub fn evaluate(&self, t: f64) -> Array2<C64> {
        let ph = C64::from_polar(1.0, -self.delta * (t + self.clock_offset));
        let mut h = self.static_part.clone();
        h += &self.rotating.mapv(|z| z * ph);
        h += &conjugate_transpose(&self.rotating).mapv(|z| z * ph.conj());
        h
    }

    /// `out = H(t) * psi` without materializing the dense matrix.
    pub fn apply(&self, t: f64, psi: &Array1<C64>, out: &mut Array1<C64>) {
        out.fill(C64::new(0.0, 0.0));
        for &(i, j, v) in &self.nz_static {
            out[i] += v * psi[j];
        }
        let ph = C64::from_polar(1.0, -self.delta * (t + self.clock_offset));
        for &(i, j, v) in &self.nz_rotating {
            let w = ph * v;
            out[i] += w * psi[j];
            out[j] += w.conj() * psi[i];
        }
    }
}

/// Directed coupling structure of stage A (drive on atom A plus both cavity
/// modes); the full Hamiltonian is `R e^{-i delta t} + h.c.`.
pub fn stage_a_rotating(space: HilbertSpace, params: &PhysicalParams) -> Result<RotatingHamiltonian> {
    params.validate()?;
    let mut r = zeros(space);
    add_transition(&mut r, space, Slot::A, AtomLevel::GA, AtomLevel::E0, Ladder::None, params.omega_a);
    add_transition(&mut r, space, Slot::A, AtomLevel::GR, AtomLevel::E0, Ladder::Lower(Polarization::Right), params.g_a);
    add_transition(&mut r, space, Slot::A, AtomLevel::GL, AtomLevel::E0, Ladder::Lower(Polarization::Left), params.g_a);
    RotatingHamiltonian::new(zeros(space), r, params.delta)
}

/// Directed coupling structure of stage B (drive on atom B plus crosswise
/// cavity couplings).
pub fn stage_b_rotating(space: HilbertSpace, params: &PhysicalParams) -> Result<RotatingHamiltonian> {
    params.validate()?;
    let mut r = zeros(space);
    add_transition(&mut r, space, Slot::B, AtomLevel::GL, AtomLevel::EL, Ladder::None, params.omega_b);
    add_transition(&mut r, space, Slot::B, AtomLevel::GR, AtomLevel::ER, Ladder::None, params.omega_b);
    add_transition(&mut r, space, Slot::B, AtomLevel::G0, AtomLevel::ER, Ladder::Lower(Polarization::Left), params.g_b);
    add_transition(&mut r, space, Slot::B, AtomLevel::G0, AtomLevel::EL, Ladder::Lower(Polarization::Right), params.g_b);
    RotatingHamiltonian::new(zeros(space), r, params.delta)
}

/// Full stage-A interaction-picture Hamiltonian evaluated at time `t`.
/// Hermitian for every `t`; identity on atom B.
pub fn stage_a_full(space: HilbertSpace, params: &PhysicalParams, t: f64) -> Result<Array2<C64>> {
    Ok(stage_a_rotating(space, params)?.evaluate(t))
}

/// Full stage-B interaction-picture Hamiltonian at stage-local time `t`.
pub fn stage_b_full(space: HilbertSpace, params: &PhysicalParams, t: f64) -> Result<Array2<C64>> {
    Ok(stage_b_rotating(space, params)?.evaluate(t))
}

/// Named contributions to the effective stage-A Hamiltonian: the drive
/// Stark shift on `ga`, the photon-number and cross-mode Raman terms among
/// `gL`/`gR`, and the drive-cavity Raman flips out of `ga`.
pub fn stage_a_effective_terms(
    space: HilbertSpace,
    params: &PhysicalParams,
) -> Result<Vec<HamiltonianTerm>> {
    params.validate()?;
    let d = params.delta;
    let stark = {
        let mut m = zeros(space);
        add_transition(&mut m, space, Slot::A, AtomLevel::GA, AtomLevel::GA, Ladder::None, params.omega_a * params.omega_a / d);
        HamiltonianTerm { description: "drive Stark shift on ga".into(), matrix: m }
    };
    let photon = {
        let mut m = zeros(space);
        // a_L^dag a_L |gL><gL| and a_R^dag a_R |gR><gR|: diagonal photon terms
        for label in space.labels() {
            let n = match label.atom_a {
                AtomLevel::GL => label.n_left,
                AtomLevel::GR => label.n_right,
                _ => continue,
            };
            let i = space.index(&label).unwrap();
            m[[i, i]] += C64::new(params.g_a * params.g_a / d * n as f64, 0.0);
        }
        // cross-mode Raman: a_L^dag a_R |gL><gR| + a_R^dag a_L |gR><gL|
        for label in space.labels() {
            let (to_level, n_absorb, n_emit) = match label.atom_a {
                AtomLevel::GR => (AtomLevel::GL, label.n_right, label.n_left),
                AtomLevel::GL => (AtomLevel::GR, label.n_left, label.n_right),
                _ => continue,
            };
            if n_absorb == 0 || n_emit + 1 > space.n_max() {
                continue;
            }
            let mut target = label;
            target.atom_a = to_level;
            match label.atom_a {
                AtomLevel::GR => {
                    target.n_right -= 1;
                    target.n_left += 1;
                }
                _ => {
                    target.n_left -= 1;
                    target.n_right += 1;
                }
            }
            let w = (n_absorb as f64).sqrt() * ((n_emit + 1) as f64).sqrt();
            let i = space.index(&target).unwrap();
            let j = space.index(&label).unwrap();
            m[[i, j]] += C64::new(params.g_a * params.g_a / d * w, 0.0);
        }
        HamiltonianTerm { description: "cavity photon and cross-mode Raman terms".into(), matrix: m }
    };
    let flips = {
        let mut m = zeros(space);
        let amp = params.omega_a * params.g_a / d;
        add_transition(&mut m, space, Slot::A, AtomLevel::GA, AtomLevel::GR, Ladder::Raise(Polarization::Right), amp);
        add_transition(&mut m, space, Slot::A, AtomLevel::GA, AtomLevel::GL, Ladder::Raise(Polarization::Left), amp);
        let hc = conjugate_transpose(&m);
        HamiltonianTerm { description: "drive-cavity Raman flips ga <-> gL/gR".into(), matrix: m + hc }
    };
    Ok(vec![stark, photon, flips])
}

/// Time-independent effective stage-A Hamiltonian (adiabatic elimination of
/// `e0`). Hermitian; identity on atom B.
pub fn stage_a_effective(space: HilbertSpace, params: &PhysicalParams) -> Result<Array2<C64>> {
    let mut h = zeros(space);
    for term in stage_a_effective_terms(space, params)? {
        h += &term.matrix;
    }
    Ok(h)
}

/// Named contributions to the effective stage-B Hamiltonian.
pub fn stage_b_effective_terms(
    space: HilbertSpace,
    params: &PhysicalParams,
) -> Result<Vec<HamiltonianTerm>> {
    params.validate()?;
    let d = params.delta;
    let stark = {
        let mut m = zeros(space);
        let amp = params.omega_b * params.omega_b / d;
        add_transition(&mut m, space, Slot::B, AtomLevel::GL, AtomLevel::GL, Ladder::None, amp);
        add_transition(&mut m, space, Slot::B, AtomLevel::GR, AtomLevel::GR, Ladder::None, amp);
        HamiltonianTerm { description: "drive Stark shifts on gL/gR".into(), matrix: m }
    };
    let photon = {
        let mut m = zeros(space);
        for label in space.labels() {
            if label.atom_b != AtomLevel::G0 {
                continue;
            }
            let i = space.index(&label).unwrap();
            let n = label.photons() as f64;
            m[[i, i]] += C64::new(params.g_b * params.g_b / d * n, 0.0);
        }
        HamiltonianTerm { description: "cavity photon terms on g0".into(), matrix: m }
    };
    let flips = {
        let mut m = zeros(space);
        let amp = params.omega_b * params.g_b / d;
        // a_R |gL><g0| and a_L |gR><g0|: absorbing a photon flips g0 crosswise
        add_transition(&mut m, space, Slot::B, AtomLevel::G0, AtomLevel::GL, Ladder::Lower(Polarization::Right), amp);
        add_transition(&mut m, space, Slot::B, AtomLevel::G0, AtomLevel::GR, Ladder::Lower(Polarization::Left), amp);
        let hc = conjugate_transpose(&m);
        HamiltonianTerm { description: "cavity-drive Raman flips g0 <-> gL/gR".into(), matrix: m + hc }
    };
    Ok(vec![stark, photon, flips])
}

/// Time-independent effective stage-B Hamiltonian. Hermitian; identity on
/// atom A.
pub fn stage_b_effective(space: HilbertSpace, params: &PhysicalParams) -> Result<Array2<C64>> {
    let mut h = zeros(space);
    for term in stage_b_effective_terms(space, params)? {
        h += &term.matrix;
    }
    Ok(h)
}

/// Total photon number operator `a_L^dag a_L + a_R^dag a_R` (diagonal).
pub fn photon_number(space: HilbertSpace) -> Array2<C64> {
    let mut m = zeros(space);
    for label in space.labels() {
        let i = space.index(&label).unwrap();
        m[[i, i]] = C64::new(label.photons() as f64, 0.0);
    }
    m
}

/// Anti-Hermitian decay generator `-i kappa (n_L + n_R) - i (gamma/2) P_e`,
/// where `P_e` projects onto excited levels of either atom. With the
/// default `gamma = 0` only cavity decay remains.
pub fn conditional_decay_term(space: HilbertSpace, params: &PhysicalParams) -> Array2<C64> {
    let mut m = zeros(space);
    for label in space.labels() {
        let i = space.index(&label).unwrap();
        let mut rate = params.kappa * label.photons() as f64;
        if params.gamma > 0.0 {
            let excited = label.atom_a.is_excited() as usize + label.atom_b.is_excited() as usize;
            rate += 0.5 * params.gamma * excited as f64;
        }
        m[[i, i]] = C64::new(0.0, -rate);
    }
    m
}

/// Decay-only Hamiltonian for the field-free delay between stages:
/// `-i kappa (n_L + n_R)`. The interaction-picture state is otherwise
/// frozen while neither atom couples to the cavity, but photons still leak.
pub fn delay_hamiltonian(space: HilbertSpace, params: &PhysicalParams) -> Array2<C64> {
    let mut m = zeros(space);
    for label in space.labels() {
        let i = space.index(&label).unwrap();
        m[[i, i]] = C64::new(0.0, -params.kappa * label.photons() as f64);
    }
    m
}

/// `H - i kappa (n_L + n_R) - i (gamma/2) P_e`: the conditional (no-jump)
/// Hamiltonian. With `kappa = gamma = 0` the input is returned unchanged.
pub fn add_conditional_decay(
    h: &Array2<C64>,
    space: HilbertSpace,
    params: &PhysicalParams,
) -> Result<Array2<C64>> {
    if h.nrows() != space.dim() || h.ncols() != space.dim() {
        return Err(SimError::DimensionMismatch {
            got: h.nrows(),
            expected: space.dim(),
        });
    }
    Ok(h + &conditional_decay_term(space, params))
}

/// Stage-A conserved charge `n_L + n_R + [atom A in {ga, e0}]` (diagonal).
/// Commutes with the full and effective stage-A Hamiltonians; starting from
/// the protocol initial state it confines the dynamics to the
/// single-excitation sector, which is why `n_max = 1` already suffices.
pub fn charge_stage_a(space: HilbertSpace) -> Array2<C64> {
    let mut m = zeros(space);
    for label in space.labels() {
        let i = space.index(&label).unwrap();
        let flag = matches!(label.atom_a, AtomLevel::GA | AtomLevel::E0) as usize;
        m[[i, i]] = C64::new((label.photons() + flag) as f64, 0.0);
    }
    m
}

/// Stage-B conserved charge `n_L + n_R + [atom B not in {g0, ga}]`.
pub fn charge_stage_b(space: HilbertSpace) -> Array2<C64> {
    let mut m = zeros(space);
    for label in space.labels() {
        let i = space.index(&label).unwrap();
        let flag = !matches!(label.atom_b, AtomLevel::G0 | AtomLevel::GA) as usize;
        m[[i, i]] = C64::new((label.photons() + flag) as f64, 0.0);
    }
    m
}
