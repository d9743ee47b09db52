//! Time evolution of state vectors under constant (possibly non-Hermitian)
//! Hamiltonians and under the explicitly time-dependent full models.
//!
//! Constant generators are exponentiated by scaling-and-squaring with Padé
//! approximants (degree chosen from the 1-norm, after Higham 2005), which
//! stays valid for the non-Hermitian conditional Hamiltonians. Single
//! applications `exp(-iHt)|psi>` use a scaled Taylor action on the vector
//! instead of forming the dense exponential. Time-dependent Hamiltonians
//! are integrated with an adaptive embedded Dormand-Prince 5(4) stepper;
//! the fast interaction-picture phase `e^{-i delta t}` is what forces the
//! adaptivity — fixed large steps are unsafe at `delta = 10..100 g_a`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::hamiltonian::RotatingHamiltonian;
use crate::space::{BasisLabel, HilbertSpace, StateVector};
use crate::{Result, SimError};

/// Default local error bound for adaptive stepping.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Default number of trajectory samples per stage (renders the population
/// curves smoothly).
pub const DEFAULT_SAMPLE_COUNT: usize = 400;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

// ---------------------------------------------------------------------------
// dense helpers
// ---------------------------------------------------------------------------

fn mat_mul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b)
}

/// `y = m x` with a cache-friendly row loop.
fn mat_vec(m: &Array2<C64>, x: &[C64], y: &mut [C64]) {
    let n = m.ncols();
    let data = m.as_slice().expect("matrix must be contiguous");
    for (i, yi) in y.iter_mut().enumerate() {
        let row = &data[i * n..(i + 1) * n];
        let mut acc = ZERO;
        for (mij, xj) in row.iter().zip(x.iter()) {
            acc += mij * xj;
        }
        *yi = acc;
    }
}

/// Maximum column sum of absolute values.
fn norm_1(a: &Array2<C64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        worst = worst.max(s);
    }
    worst
}

/// Solve `A X = B` by Gaussian elimination with partial pivoting on the
/// augmented rows.
fn solve_linear(a: Array2<C64>, b: Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let m = b.ncols();
    let mut rows: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            let mut row = Vec::with_capacity(n + m);
            row.extend(a.row(i).iter().copied());
            row.extend(b.row(i).iter().copied());
            row
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| {
                rows[p][col]
                    .norm_sqr()
                    .total_cmp(&rows[q][col].norm_sqr())
            })
            .unwrap();
        if rows[pivot_row][col].norm() < 1e-300 {
            return Err(SimError::InvalidRequest(
                "singular denominator in Pade solve".into(),
            ));
        }
        rows.swap(col, pivot_row);
        let (upper, lower) = rows.split_at_mut(col + 1);
        let pivot_vals = &upper[col];
        let pivot = pivot_vals[col];
        for row in lower.iter_mut() {
            let factor = row[col] / pivot;
            if factor == ZERO {
                continue;
            }
            for (r, p) in row[col..].iter_mut().zip(pivot_vals[col..].iter()) {
                *r -= factor * p;
            }
        }
    }
    let mut x = Array2::zeros((n, m));
    for col in (0..n).rev() {
        let pivot = rows[col][col];
        for j in 0..m {
            let mut sum = rows[col][n + j];
            for k in col + 1..n {
                sum -= rows[col][k] * x[[k, j]];
            }
            x[[col, j]] = sum / pivot;
        }
    }
    Ok(x)
}

/// Truncated Taylor sum for very small 1-norms; degree picked so the
/// remainder bound stays below working precision.
fn expm_taylor(a: &Array2<C64>, degree: usize) -> Array2<C64> {
    let n = a.nrows();
    let mut sum = eye(n) + a;
    let mut term = a.clone();
    for k in 2..=degree {
        term = mat_mul(&term, a).mapv(|z| z / k as f64);
        sum += &term;
    }
    sum
}

/// Smallest Taylor degree whose remainder bound `norm^{d+1}/(d+1)!` drops
/// below 1e-17, when that happens within degree 7.
fn taylor_degree(norm: f64) -> Option<usize> {
    let mut bound = norm;
    for d in 1..=7usize {
        bound *= norm / (d + 1) as f64;
        if bound < 1e-17 {
            return Some(d + 1);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// matrix exponential
// ---------------------------------------------------------------------------

// Pade numerator coefficients and 1-norm thresholds from Higham (2005).
const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

/// Evaluate the degree-(m,m) Pade approximant of `exp(a)` for m <= 9.
fn pade_small(a: &Array2<C64>, b: &[f64]) -> Result<Array2<C64>> {
    let n = a.nrows();
    let a2 = mat_mul(a, a);
    let mut powers = vec![eye(n), a2.clone()]; // A^0, A^2, A^4, ...
    let degree = b.len() - 1;
    for _ in 2..=(degree / 2) {
        let next = mat_mul(powers.last().unwrap(), &a2);
        powers.push(next);
    }
    let mut u_poly: Array2<C64> = Array2::zeros((n, n));
    let mut v: Array2<C64> = Array2::zeros((n, n));
    for (k, pw) in powers.iter().enumerate() {
        u_poly += &pw.mapv(|z| z * b[2 * k + 1]);
        v += &pw.mapv(|z| z * b[2 * k]);
    }
    let u = mat_mul(a, &u_poly);
    solve_linear(&v - &u, &v + &u)
}

fn pade_13(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let b = &PADE_13;
    let a2 = mat_mul(a, a);
    let a4 = mat_mul(&a2, &a2);
    let a6 = mat_mul(&a4, &a2);
    let id = eye(n);
    let w1 = a6.mapv(|z| z * b[13]) + a4.mapv(|z| z * b[11]) + a2.mapv(|z| z * b[9]);
    let w2 = mat_mul(&w1, &a6)
        + a6.mapv(|z| z * b[7])
        + a4.mapv(|z| z * b[5])
        + a2.mapv(|z| z * b[3])
        + id.mapv(|z| z * b[1]);
    let u = mat_mul(a, &w2);
    let v1 = a6.mapv(|z| z * b[12]) + a4.mapv(|z| z * b[10]) + a2.mapv(|z| z * b[8]);
    let v = mat_mul(&v1, &a6)
        + a6.mapv(|z| z * b[6])
        + a4.mapv(|z| z * b[4])
        + a2.mapv(|z| z * b[2])
        + id.mapv(|z| z * b[0]);
    solve_linear(&v - &u, &v + &u)
}

/// Matrix exponential by scaling-and-squaring. Valid for arbitrary complex
/// square matrices, Hermitian or not.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(SimError::DimensionMismatch {
            got: a.ncols(),
            expected: n,
        });
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let norm = norm_1(a);
    // tiny norms (the per-sample step propagators) converge within a few
    // Taylor terms; skip the Pade solve entirely
    if let Some(degree) = taylor_degree(norm) {
        return Ok(expm_taylor(a, degree));
    }
    if norm <= THETA_3 {
        return pade_small(a, &PADE_3);
    }
    if norm <= THETA_5 {
        return pade_small(a, &PADE_5);
    }
    if norm <= THETA_7 {
        return pade_small(a, &PADE_7);
    }
    if norm <= THETA_9 {
        return pade_small(a, &PADE_9);
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / (2.0f64.powi(s as i32)));
    let mut result = pade_13(&scaled)?;
    for _ in 0..s {
        result = mat_mul(&result, &result);
    }
    Ok(result)
}

/// `exp(a) v` without forming the dense exponential: the generator is
/// scaled until its 1-norm is at most 1 and a convergent Taylor sum is
/// applied repeatedly.
pub fn expm_action(a: &Array2<C64>, v: &Array1<C64>) -> Result<Array1<C64>> {
    let n = a.nrows();
    if a.ncols() != n || v.len() != n {
        return Err(SimError::DimensionMismatch {
            got: v.len(),
            expected: n,
        });
    }
    let norm = norm_1(a);
    let segments = norm.ceil().max(1.0) as usize;
    let scaled = a.mapv(|z| z / segments as f64);
    let mut state: Vec<C64> = v.to_vec();
    let mut term = vec![ZERO; n];
    let mut next = vec![ZERO; n];
    let scaled_view = &scaled;
    for _ in 0..segments {
        term.copy_from_slice(&state);
        let mut acc = state.clone();
        for k in 1..=96u32 {
            mat_vec(scaled_view, &term, &mut next);
            let inv_k = 1.0 / k as f64;
            for (t, s) in term.iter_mut().zip(next.iter()) {
                *t = s * inv_k;
            }
            let mut term_mag = 0.0f64;
            let mut acc_mag = 0.0f64;
            for (a_i, t_i) in acc.iter_mut().zip(term.iter()) {
                *a_i += t_i;
                term_mag = term_mag.max(t_i.norm());
                acc_mag = acc_mag.max(a_i.norm());
            }
            if term_mag <= 1e-17 * acc_mag.max(1e-300) {
                break;
            }
        }
        state = acc;
    }
    Ok(Array1::from_vec(state))
}

// ---------------------------------------------------------------------------
// trajectories
// ---------------------------------------------------------------------------

/// Sampled time evolution: states at strictly increasing times together
/// with their squared norms.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
    norms: Vec<f64>,
}

impl Trajectory {
    fn new(times: Vec<f64>, states: Vec<StateVector>) -> Self {
        let norms = states.iter().map(StateVector::norm_sq).collect();
        Self { times, states, norms }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    /// Squared norms per sample; the no-jump success probability when the
    /// generator carries conditional decay.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least two samples")
    }
}

/// Population readout targets: a single basis state or a named subspace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selector {
    /// One basis state.
    State(BasisLabel),
    /// Every basis state with at least one photon (either mode).
    Photon,
    /// Every basis state with two or more photons in total; populated only
    /// through truncation or bookkeeping bugs, never by the protocol.
    MultiPhoton,
    /// Any excited atomic level on either atom.
    Excited,
}

impl Selector {
    fn indices(&self, space: HilbertSpace) -> Result<Vec<usize>> {
        match self {
            Selector::State(label) => Ok(vec![space.index(label)?]),
            Selector::Photon => Ok(space
                .labels()
                .filter(|l| l.photons() >= 1)
                .map(|l| space.index(&l).unwrap())
                .collect()),
            Selector::MultiPhoton => Ok(space
                .labels()
                .filter(|l| l.photons() >= 2)
                .map(|l| space.index(&l).unwrap())
                .collect()),
            Selector::Excited => Ok(space
                .labels()
                .filter(|l| l.any_excited())
                .map(|l| space.index(&l).unwrap())
                .collect()),
        }
    }
}

/// Time series of |amplitude|^2 summed over each selector: one row per
/// selector, one column per trajectory sample.
pub fn populations(traj: &Trajectory, selectors: &[Selector]) -> Result<Vec<Vec<f64>>> {
    if traj.is_empty() {
        return Ok(vec![Vec::new(); selectors.len()]);
    }
    let space = traj.states[0].space();
    let index_sets: Vec<Vec<usize>> = selectors
        .iter()
        .map(|s| s.indices(space))
        .collect::<Result<_>>()?;
    Ok(index_sets
        .iter()
        .map(|set| {
            traj.states
                .iter()
                .map(|st| set.iter().map(|&i| st.amplitudes()[i].norm_sqr()).sum())
                .collect()
        })
        .collect())
}

// ---------------------------------------------------------------------------
// constant-Hamiltonian evolution
// ---------------------------------------------------------------------------

fn check_dims(h: &Array2<C64>, psi: &StateVector) -> Result<()> {
    if h.nrows() != psi.space().dim() || h.ncols() != psi.space().dim() {
        return Err(SimError::DimensionMismatch {
            got: h.nrows(),
            expected: psi.space().dim(),
        });
    }
    Ok(())
}

/// `exp(-i H t) |psi0>` for a constant, possibly non-Hermitian `H`.
pub fn evolve_constant(h: &Array2<C64>, psi0: &StateVector, t: f64) -> Result<StateVector> {
    check_dims(h, psi0)?;
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let generator = h.mapv(|z| z * C64::new(0.0, -t));
    let amps = expm_action(&generator, psi0.amplitudes())?;
    StateVector::from_amplitudes(psi0.space(), amps)
}

/// Evolve under a constant `H`, sampling `sample_count` uniformly spaced
/// states over `[0, duration]`. A single step propagator `exp(-iH dt)` is
/// built once and applied repeatedly.
pub fn sample_constant(
    h: &Array2<C64>,
    psi0: &StateVector,
    duration: f64,
    sample_count: usize,
) -> Result<Trajectory> {
    check_dims(h, psi0)?;
    if sample_count < 2 {
        return Err(SimError::InvalidRequest(format!(
            "sample_count must be at least 2 (got {sample_count})"
        )));
    }
    if !(duration > 0.0) {
        return Err(SimError::InvalidRequest(format!(
            "duration must be positive (got {duration})"
        )));
    }
    let dt = duration / (sample_count - 1) as f64;
    let u = expm(&h.mapv(|z| z * C64::new(0.0, -dt)))?;
    let mut times = Vec::with_capacity(sample_count);
    let mut states = Vec::with_capacity(sample_count);
    times.push(0.0);
    states.push(psi0.clone());
    let mut current = psi0.amplitudes().to_vec();
    let mut next = vec![ZERO; current.len()];
    for k in 1..sample_count {
        mat_vec(&u, &current, &mut next);
        std::mem::swap(&mut current, &mut next);
        times.push(k as f64 * dt);
        states.push(StateVector::from_amplitudes(
            psi0.space(),
            Array1::from_vec(current.clone()),
        )?);
    }
    Ok(Trajectory::new(times, states))
}

// ---------------------------------------------------------------------------
// time-dependent evolution (Dormand-Prince 5(4))
// ---------------------------------------------------------------------------

// Butcher tableau of the Dormand-Prince 5(4) pair (FSAL).
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights equal the last A row (FSAL); these are the error
// weights b5 - b4.
const DP_ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<'a> {
    rule: &'a RotatingHamiltonian,
    k: Vec<Array1<C64>>,
    work: Array1<C64>,
    scratch: Array1<C64>,
}

impl<'a> Stepper<'a> {
    fn new(rule: &'a RotatingHamiltonian) -> Self {
        let dim = rule.dim();
        Stepper {
            rule,
            k: (0..7).map(|_| Array1::zeros(dim)).collect(),
            work: Array1::zeros(dim),
            scratch: Array1::zeros(dim),
        }
    }

    /// dpsi/dt = -i H(t) psi
    fn rhs(&mut self, t: f64, psi: &Array1<C64>, slot: usize) {
        self.rule.apply(t, psi, &mut self.scratch);
        let k = &mut self.k[slot];
        for (out, v) in k.iter_mut().zip(self.scratch.iter()) {
            *out = C64::new(v.im, -v.re); // -i * v
        }
    }

    /// One embedded step from `(t, psi)` with size `h`. `k[0]` must already
    /// hold the RHS at `t` (FSAL). Returns the error estimate and fills
    /// `work` with the 5th-order result and `k[6]` with the RHS at `t + h`.
    fn step(&mut self, t: f64, psi: &Array1<C64>, h: f64) -> f64 {
        for stage in 1..=6 {
            self.work.assign(psi);
            for (j, aj) in DP_A[stage - 1].iter().enumerate() {
                if *aj == 0.0 {
                    continue;
                }
                let coeff = C64::new(h * aj, 0.0);
                let kj = &self.k[j];
                for (w, kv) in self.work.iter_mut().zip(kj.iter()) {
                    *w += coeff * kv;
                }
            }
            if stage < 6 {
                let arg = self.work.clone();
                self.rhs(t + DP_C[stage] * h, &arg, stage);
            } else {
                // stage 6 argument is the 5th-order solution itself
                let arg = self.work.clone();
                self.rhs(t + h, &arg, 6);
            }
        }
        let mut err = 0.0f64;
        let dim = self.work.len();
        for i in 0..dim {
            let mut e = ZERO;
            for (j, w) in DP_ERR.iter().enumerate() {
                if *w != 0.0 {
                    e += C64::new(h * w, 0.0) * self.k[j][i];
                }
            }
            err = err.max(e.norm());
        }
        err
    }
}

/// Integrate `i dpsi/dt = H(t) psi` adaptively, sampling at `sample_count`
/// uniformly spaced times over `[0, duration]`. The per-step local error
/// estimate is kept below `tolerance` (max-amplitude norm).
pub fn evolve_timedep(
    rule: &RotatingHamiltonian,
    psi0: &StateVector,
    duration: f64,
    sample_count: usize,
    tolerance: f64,
) -> Result<Trajectory> {
    if rule.dim() != psi0.space().dim() {
        return Err(SimError::DimensionMismatch {
            got: rule.dim(),
            expected: psi0.space().dim(),
        });
    }
    if sample_count < 2 {
        return Err(SimError::InvalidRequest(format!(
            "sample_count must be at least 2 (got {sample_count})"
        )));
    }
    if !(tolerance > 0.0) {
        return Err(SimError::InvalidRequest(format!(
            "tolerance must be positive (got {tolerance})"
        )));
    }
    if !(duration > 0.0) {
        return Err(SimError::InvalidRequest(format!(
            "duration must be positive (got {duration})"
        )));
    }

    let mut stepper = Stepper::new(rule);
    let mut psi = psi0.amplitudes().clone();
    let mut t = 0.0f64;
    // initial step: resolve the rotating phase from the start
    let phase_scale = if rule.delta() > 0.0 { rule.delta() } else { 1.0 };
    let mut h = (0.1 / phase_scale).min(duration / 8.0);
    let h_floor = duration * 1e-14;

    let mut times = Vec::with_capacity(sample_count);
    let mut states = Vec::with_capacity(sample_count);
    times.push(0.0);
    states.push(psi0.clone());

    stepper.rhs(0.0, &psi, 0);
    for sample in 1..sample_count {
        let t_target = duration * sample as f64 / (sample_count - 1) as f64;
        while t < t_target {
            let clipped = h.min(t_target - t);
            let err = stepper.step(t, &psi, clipped);
            if err <= tolerance {
                t += clipped;
                psi.assign(&stepper.work);
                let (head, tail) = stepper.k.split_at_mut(6);
                head[0].assign(&tail[0]); // FSAL: k7 becomes k1
                if err > 0.0 {
                    let grow = 0.9 * (tolerance / err).powf(0.2);
                    h = (clipped * grow.clamp(0.2, 5.0)).min(duration);
                } else {
                    h = (clipped * 5.0).min(duration);
                }
            } else {
                let shrink = 0.9 * (tolerance / err).powf(0.2);
                h = clipped * shrink.clamp(0.1, 0.9);
                if h < h_floor {
                    return Err(SimError::StepUnderflow {
                        t_reached: t,
                        step: h,
                        cause: format!(
                            "local error {err:.3e} will not fall below tolerance {tolerance:.3e}"
                        ),
                    });
                }
            }
        }
        times.push(t_target);
        states.push(StateVector::from_amplitudes(psi0.space(), psi.clone())?);
    }
    Ok(Trajectory::new(times, states))
}

// ---------------------------------------------------------------------------
// unified request interface
// ---------------------------------------------------------------------------

/// Hamiltonian input for [`propagate`]: a constant matrix or a
/// time-dependent rule.
pub enum HamiltonianRule<'a> {
    Constant(&'a Array2<C64>),
    Rotating(&'a RotatingHamiltonian),
}

/// A single propagation job.
pub struct PropagationRequest<'a> {
    pub hamiltonian: HamiltonianRule<'a>,
    pub initial: &'a StateVector,
    pub duration: f64,
    pub sample_count: usize,
    pub tolerance: f64,
}

/// Run a propagation request, choosing the stepper appropriate for the
/// Hamiltonian form.
pub fn propagate(req: &PropagationRequest) -> Result<Trajectory> {
    match req.hamiltonian {
        HamiltonianRule::Constant(h) => {
            sample_constant(h, req.initial, req.duration, req.sample_count)
        }
        HamiltonianRule::Rotating(rule) => evolve_timedep(
            rule,
            req.initial,
            req.duration,
            req.sample_count,
            req.tolerance,
        ),
    }
}
