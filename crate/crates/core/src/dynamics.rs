//! Small-system Ising dynamics and ground states.
//!
//! States live in the z basis: bit q of a basis index is spin q, with 0 = ↑
//! (σ_z = +1) and 1 = ↓. σ_x flips a bit. Classical configurations used by
//! [`ising_energy`] and [`ground_state`] are abstract ±1 assignments along
//! the interaction axis.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

pub const MAX_STATE_SPINS: usize = 14;
pub const MAX_ENUMERATION_SPINS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// H_k = Σ_{i<j} J_{i,j} σ_a^{(i)} σ_a^{(j)} for one axis a.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTerm {
    pub axis: Axis,
    pub j: CouplingMatrix,
}

impl InteractionTerm {
    pub fn new(axis: Axis, j: CouplingMatrix) -> Self {
        Self { axis, j }
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.j.n();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |k| (i, k, self.j.get(i, k))))
            .filter(|p| p.2 != 0.0)
    }

    /// Σ_{i<j} |J_{i,j}|, an upper bound on ‖H_k‖.
    fn norm_bound(&self) -> f64 {
        self.pairs().map(|p| p.2.abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    n: usize,
    amps: Vec<Complex64>,
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_STATE_SPINS {
        return Err(Error::TooLarge { n, limit: MAX_STATE_SPINS });
    }
    Ok(())
}

#[inline]
fn spin(bits: usize, q: usize) -> f64 {
    if bits >> q & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SpinState {
    /// z-basis product state; bit q of `bits` set means spin q is ↓.
    pub fn basis(n: usize, bits: usize) -> Result<Self> {
        check_size(n)?;
        let dim = 1usize << n;
        if bits >= dim {
            return Err(Error::InvalidConfig(format!("basis index {bits} out of range for {n} spins")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[bits] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_size(n)?;
        if amps.len() != 1 << n {
            return Err(Error::Shape(format!("{} amplitudes for {n} spins", amps.len())));
        }
        let s = Self { n, amps };
        if (s.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidConfig(format!("state norm {} is not 1", s.norm())));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖ψ − φ‖.
    pub fn distance(&self, other: &SpinState) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// ⟨ψ| Π_q σ_{a_q}^{(q)} |ψ⟩ for distinct qubits q.
    pub fn expect_pauli(&self, ops: &[(usize, Axis)]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut flip = 0usize;
        for &(q, a) in ops {
            if a != Axis::Z {
                flip |= 1 << q;
            }
        }
        for (b, amp) in self.amps.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let mut phase = Complex64::new(1.0, 0.0);
            for &(q, a) in ops {
                let s = spin(b, q);
                phase *= match a {
                    Axis::X => Complex64::new(1.0, 0.0),
                    Axis::Y => Complex64::new(0.0, s),
                    Axis::Z => Complex64::new(s, 0.0),
                };
            }
            acc += self.amps[b ^ flip].conj() * phase * amp;
        }
        acc.re
    }

    /// Matrix of ⟨σ_a^{(i)} σ_a^{(j)}⟩; the diagonal is 1.
    pub fn correlations(&self, axis: Axis) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            if i == j {
                1.0
            } else {
                self.expect_pauli(&[(i, axis), (j, axis)])
            }
        })
    }
}

fn check_terms(terms: &[InteractionTerm], state: &SpinState) -> Result<()> {
    check_size(state.n)?;
    for t in terms {
        if t.j.n() != state.n {
            return Err(Error::Shape(format!(
                "interaction term on {} spins, state has {}",
                t.j.n(),
                state.n
            )));
        }
    }
    Ok(())
}

/// out += H v.
fn apply_hamiltonian(terms: &[InteractionTerm], v: &[Complex64], out: &mut [Complex64]) {
    for term in terms {
        for (i, k, jik) in term.pairs() {
            let mask = (1usize << i) | (1usize << k);
            for (b, o) in out.iter_mut().enumerate() {
                let src = b ^ mask;
                let coeff = match term.axis {
                    Axis::X => jik,
                    // σ_y σ_y |c⟩ = −(−1)^{c_i + c_k} |c ⊕ mask⟩, parity is preserved.
                    Axis::Y => -jik * spin(b, i) * spin(b, k),
                    Axis::Z => {
                        *o += v[b] * (jik * spin(b, i) * spin(b, k));
                        continue;
                    }
                };
                *o += v[src] * coeff;
            }
        }
    }
}

/// exp(−i H t)|ψ⟩ for H = Σ terms, by a Taylor series on sub-steps with
/// ‖H‖Δt ≤ 1/2, summed until terms fall below machine precision. Exact to
/// round-off for commuting and noncommuting terms alike.
pub fn evolve_taylor(terms: &[InteractionTerm], state: &SpinState, t: f64) -> Result<SpinState> {
    check_terms(terms, state)?;
    let bound: f64 = terms.iter().map(|x| x.norm_bound()).sum();
    let total = bound * t.abs();
    if total == 0.0 {
        return Ok(state.clone());
    }
    let steps = (total / 0.5).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let dim = state.amps.len();
    let mut v = state.amps.clone();
    let mut term = vec![Complex64::new(0.0, 0.0); dim];
    let mut next = vec![Complex64::new(0.0, 0.0); dim];
    for _ in 0..steps {
        term.copy_from_slice(&v);
        let mut acc = v.clone();
        for k in 1..200 {
            next.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            apply_hamiltonian(terms, &term, &mut next);
            let factor = Complex64::new(0.0, -dt / k as f64);
            let mut size = 0.0;
            for (tk, nx) in term.iter_mut().zip(&next) {
                *tk = nx * factor;
                size += tk.norm_sqr();
            }
            for (a, tk) in acc.iter_mut().zip(&term) {
                *a += tk;
            }
            if size.sqrt() < 1e-17 {
                break;
            }
        }
        v = acc;
    }
    Ok(SpinState { n: state.n, amps: v })
}

/// exp(−i H_k t) for one single-axis term, applied in place by rotating the
/// axis onto z, multiplying diagonal phases and rotating back.
fn apply_term_exponential(term: &InteractionTerm, amps: &mut [Complex64], t: f64) {
    let n = term.j.n();
    let energies = diagonal_energies(&term.j, n);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    // Columns are the ±1 eigenvectors of σ_a.
    let w: Option<[[Complex64; 2]; 2]> = match term.axis {
        Axis::Z => None,
        Axis::X => Some([[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]]),
        Axis::Y => Some([[c(r, 0.0), c(r, 0.0)], [c(0.0, r), c(0.0, -r)]]),
    };
    if let Some(w) = w {
        let w_dag = [[w[0][0].conj(), w[1][0].conj()], [w[0][1].conj(), w[1][1].conj()]];
        apply_local_all(amps, n, &w_dag);
        for (a, e) in amps.iter_mut().zip(&energies) {
            *a *= Complex64::from_polar(1.0, -e * t);
        }
        apply_local_all(amps, n, &w);
    } else {
        for (a, e) in amps.iter_mut().zip(&energies) {
            *a *= Complex64::from_polar(1.0, -e * t);
        }
    }
}

/// Applies the same 2×2 matrix to every qubit.
fn apply_local_all(amps: &mut [Complex64], n: usize, u: &[[Complex64; 2]; 2]) {
    for q in 0..n {
        let bit = 1usize << q;
        for b in 0..amps.len() {
            if b & bit == 0 {
                let (a0, a1) = (amps[b], amps[b | bit]);
                amps[b] = u[0][0] * a0 + u[0][1] * a1;
                amps[b | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }
}

/// E(b) = Σ_{i<j} J_{i,j} s_i s_j for every z-basis index b.
fn diagonal_energies(j: &CouplingMatrix, n: usize) -> Vec<f64> {
    (0..1usize << n)
        .map(|b| {
            let mut e = 0.0;
            for i in 0..n {
                for k in (i + 1)..n {
                    e += j.get(i, k) * spin(b, i) * spin(b, k);
                }
            }
            e
        })
        .collect()
}

/// Exact evolution under H = Σ terms. A single shared axis is handled by
/// diagonalization in that axis' basis; mixed axes use [`evolve_taylor`].
pub fn evolve_exact(terms: &[InteractionTerm], state: &SpinState, t: f64) -> Result<SpinState> {
    check_terms(terms, state)?;
    if t == 0.0 {
        return Ok(state.clone());
    }
    match terms.first() {
        None => Ok(state.clone()),
        Some(first) if terms.iter().all(|x| x.axis == first.axis) => {
            let n = state.n;
            let mut sum = first.j.as_matrix().clone();
            for x in &terms[1..] {
                sum += x.j.as_matrix();
            }
            let merged = InteractionTerm::new(first.axis, CouplingMatrix::from_matrix(sum)?);
            let mut amps = state.amps.clone();
            apply_term_exponential(&merged, &mut amps, t);
            Ok(SpinState { n, amps })
        }
        Some(_) => evolve_taylor(terms, state, t),
    }
}

/// First-order Trotter product (Π_k exp(−i H_k t/n))ⁿ in the given term order.
pub fn trotter_evolve(
    terms: &[InteractionTerm],
    state: &SpinState,
    t: f64,
    n_steps: usize,
) -> Result<SpinState> {
    check_terms(terms, state)?;
    if n_steps == 0 {
        return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
    }
    let dt = t / n_steps as f64;
    let mut amps = state.amps.clone();
    for _ in 0..n_steps {
        for term in terms {
            apply_term_exponential(term, &mut amps, dt);
        }
    }
    Ok(SpinState { n: state.n, amps })
}

/// Σ_{i<j} J_{i,j} s_i s_j for s ∈ {±1}ᴺ.
pub fn ising_energy(j: &CouplingMatrix, config: &[i8]) -> Result<f64> {
    let n = j.n();
    if config.len() != n {
        return Err(Error::Shape(format!("{} spins for a {n}-spin coupling matrix", config.len())));
    }
    if let Some(s) = config.iter().find(|s| **s != 1 && **s != -1) {
        return Err(Error::InvalidConfig(format!("spin value {s} is not ±1")));
    }
    let mut e = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            e += j.get(a, b) * f64::from(config[a]) * f64::from(config[b]);
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    /// Every minimizing configuration, including global flips, in descending
    /// lexicographic order (+1 before −1).
    pub configurations: Vec<Vec<i8>>,
}

fn mask_to_config(mask: u64, n: usize) -> Vec<i8> {
    (0..n).map(|q| if mask >> q & 1 == 0 { 1 } else { -1 }).collect()
}

/// Exhaustive search over the 2^{N−1} configurations with the last spin
/// fixed to +1, using Gray-code single-flip updates.
pub fn ground_state(j: &CouplingMatrix) -> Result<GroundState> {
    let n = j.n();
    if n > MAX_ENUMERATION_SPINS {
        return Err(Error::TooLarge { n, limit: MAX_ENUMERATION_SPINS });
    }
    if n == 0 {
        return Ok(GroundState { energy: 0.0, configurations: vec![vec![]] });
    }
    let scale: f64 = j.as_matrix().iter().map(|x| x.abs()).sum::<f64>() * 0.5;
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let free = n - 1;
    let prefix_bits = free.min(6);
    let low_bits = free - prefix_bits;
    let jm = j.as_matrix();

    let energy_of = |mask: u64| -> f64 {
        let mut e = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                e += jm[(a, b)] * spin(mask as usize, a) * spin(mask as usize, b);
            }
        }
        e
    };

    let chunks: Vec<(f64, Vec<u64>)> = (0..1u64 << prefix_bits)
        .into_par_iter()
        .map(|prefix| {
            let mut mask = prefix << low_bits;
            let mut s: Vec<f64> = (0..n).map(|q| spin(mask as usize, q)).collect();
            let mut field: Vec<f64> = (0..n)
                .map(|a| (0..n).filter(|&b| b != a).map(|b| jm[(a, b)] * s[b]).sum())
                .collect();
            let mut e = energy_of(mask);
            let mut best = e;
            let mut cands = vec![(e, mask)];
            for g in 1u64..(1u64 << low_bits) {
                let k = g.trailing_zeros() as usize;
                e -= 2.0 * s[k] * field[k];
                for (a, f) in field.iter_mut().enumerate() {
                    if a != k {
                        *f -= 2.0 * s[k] * jm[(a, k)];
                    }
                }
                s[k] = -s[k];
                mask ^= 1 << k;
                if g % 4096 == 0 {
                    e = energy_of(mask);
                }
                if e < best - tol {
                    best = e;
                    cands.retain(|c| c.0 <= best + tol);
                }
                if e <= best + tol {
                    cands.push((e, mask));
                }
            }
            // Re-score candidates exactly.
            let exact: Vec<(f64, u64)> = cands.iter().map(|&(_, m)| (energy_of(m), m)).collect();
            let lo = exact.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
            (lo, exact.into_iter().filter(|c| c.0 <= lo + tol).map(|c| c.1).collect())
        })
        .collect();

    let energy = chunks.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let full = (1u64 << n) - 1;
    let mut masks: Vec<u64> = chunks
        .iter()
        .filter(|c| c.0 <= energy + tol)
        .flat_map(|c| c.1.iter().copied())
        .filter(|&m| energy_of(m) <= energy + tol)
        .flat_map(|m| [m, m ^ full])
        .collect();
    masks.sort_unstable();
    masks.dedup();
    let mut configurations: Vec<Vec<i8>> = masks.into_iter().map(|m| mask_to_config(m, n)).collect();
    configurations.sort_by(|a, b| b.cmp(a));
    Ok(GroundState { energy, configurations })
}
