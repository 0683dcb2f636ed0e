//! Forward map from spectral Rabi amplitudes to Ising couplings.
//!
//! Each ion i sees N beatnote tones with signed amplitudes Ω_{i,n}. Tone n is
//! placed just blue of mode n, and the resulting coupling is
//!
//! ```text
//! J_{i,j} = Σ_n Ω_{i,n} Ω_{j,n} F_{i,j,n}
//! F_{i,j,n} = Σ_m η_{i,m} η_{j,m} ω_m / (μ_n² − ω_m²)
//! ```

use std::fmt;

use nalgebra::DMatrix;

use crate::crystal::ModeSpectrum;
use crate::error::{Error, Result};

/// Guard band around unpaired modes, as a fraction of ω₁.
pub const GUARD_BAND: f64 = 1e-6;

/// Beatnote detunings μ_n, paired with modes in descending-frequency order.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningSchedule {
    pub detunings: Vec<f64>,
    pub f_s: f64,
    /// ω₁ − ω₂ (rad/s); zero for a single ion.
    pub reference_gap: f64,
}

impl DetuningSchedule {
    pub fn n(&self) -> usize {
        self.detunings.len()
    }
}

/// μ_n = ω_n + f_s (ω₁ − ω₂). A single ion gets μ₁ = ω₁ (1 + 0.01 f_s).
pub fn detuning_schedule(modes: &ModeSpectrum, f_s: f64) -> Result<DetuningSchedule> {
    if !(f_s > 0.0 && f_s < 1.0) {
        return Err(Error::InvalidConfig(format!("f_s must lie in (0, 1), got {f_s}")));
    }
    let w = modes.frequencies();
    let gap = modes.com_tilt_gap();
    let detunings: Vec<f64> = if w.len() == 1 {
        vec![w[0] * (1.0 + 0.01 * f_s)]
    } else {
        w.iter().map(|wn| wn + f_s * gap).collect()
    };

    let guard = GUARD_BAND * w[0];
    for (n, mu) in detunings.iter().enumerate() {
        for (m, wm) in w.iter().enumerate() {
            let d = (mu - wm).abs();
            if (m != n && d < guard) || d == 0.0 {
                return Err(Error::ScheduleCollision { tone: n, mode: m, gap: d });
            }
        }
    }
    Ok(DetuningSchedule { detunings, f_s, reference_gap: gap })
}

/// Signed N×N spectral amplitude matrix Ω_{i,n} (rad/s); row = ion,
/// column = tone.
#[derive(Debug, Clone, PartialEq)]
pub struct RabiMatrix(DMatrix<f64>);

impl RabiMatrix {
    pub fn new(omega: DMatrix<f64>) -> Result<Self> {
        if omega.nrows() != omega.ncols() {
            return Err(Error::Shape(format!(
                "Rabi matrix must be square, got {}x{}",
                omega.nrows(),
                omega.ncols()
            )));
        }
        if omega.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("Rabi matrix has non-finite entries".into()));
        }
        Ok(Self(omega))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Σ_{i,n} |Ω_{i,n}|.
    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    /// Column-sign gauge fix: the first nonzero entry of each column is made
    /// positive. J is unchanged.
    pub fn canonicalized(&self) -> Self {
        let mut m = self.0.clone();
        for mut col in m.column_iter_mut() {
            if let Some(first) = col.iter().find(|x| **x != 0.0) {
                if *first < 0.0 {
                    col.neg_mut();
                }
            }
        }
        Self(m)
    }
}

/// Symmetric coupling matrix J_{i,j} (rad/s) with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix(DMatrix<f64>);

impl CouplingMatrix {
    /// Accepts a square matrix, symmetrizing it and zeroing the diagonal.
    pub fn from_matrix(j: DMatrix<f64>) -> Result<Self> {
        if j.nrows() != j.ncols() {
            return Err(Error::Shape(format!(
                "coupling matrix must be square, got {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        let mut s = (&j + j.transpose()) * 0.5;
        s.fill_diagonal(0.0);
        Ok(Self(s))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    /// Largest |J_{i,j}| over i ≠ j.
    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

/// F_{i,j,n} stored with n fastest, so `pair(i, j)` is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTensor {
    n: usize,
    data: Vec<f64>,
}

impl ResponseTensor {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, n: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + n]
    }

    #[inline]
    pub fn pair(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.n;
        &self.data[start..start + self.n]
    }

    /// Largest |F_{i,j,n}| over i ≠ j.
    pub fn max_offdiag_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m = self.pair(i, j).iter().fold(m, |a, x| a.max(x.abs()));
                }
            }
        }
        m
    }
}

/// ω_m / (μ² − ω_m²), with the difference of squares factored for accuracy
/// near resonance.
#[inline]
fn mode_kernel(mu: f64, w: f64) -> f64 {
    w / ((mu - w) * (mu + w))
}

pub fn response_tensor(modes: &ModeSpectrum, sched: &DetuningSchedule) -> Result<ResponseTensor> {
    let n = modes.n();
    if sched.n() != n {
        return Err(Error::Shape(format!(
            "schedule has {} tones for {n} modes",
            sched.n()
        )));
    }
    let w = modes.frequencies();
    let eta = modes.lamb_dicke();

    // kernel[tone][mode]
    let mut kernel = vec![0.0; n * n];
    for (t, &mu) in sched.detunings.iter().enumerate() {
        for (m, &wm) in w.iter().enumerate() {
            if mu == wm {
                return Err(Error::Resonance { tone: t, mode: m });
            }
            kernel[t * n + m] = mode_kernel(mu, wm);
        }
    }

    let mut data = vec![0.0; n * n * n];
    let mut eta_pair = vec![0.0; n];
    for i in 0..n {
        for j in i..n {
            for (m, e) in eta_pair.iter_mut().enumerate() {
                *e = eta[(i, m)] * eta[(j, m)];
            }
            for t in 0..n {
                let k = &kernel[t * n..(t + 1) * n];
                let v: f64 = eta_pair.iter().zip(k).map(|(a, b)| a * b).sum();
                data[(i * n + j) * n + t] = v;
                data[(j * n + i) * n + t] = v;
            }
        }
    }
    Ok(ResponseTensor { n, data })
}

/// J_{i,j} = Σ_n Ω_{i,n} Ω_{j,n} F_{i,j,n}, diagonal zero.
pub fn forward_coupling(omega: &RabiMatrix, f: &ResponseTensor) -> Result<CouplingMatrix> {
    let n = omega.n();
    if f.n() != n {
        return Err(Error::Shape(format!(
            "Rabi matrix is {n}x{n}, response tensor has dimension {}",
            f.n()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| omega.as_matrix().row(i).iter().copied().collect())
        .collect();
    let mut j = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let v: f64 = rows[a]
                .iter()
                .zip(&rows[b])
                .zip(f.pair(a, b))
                .map(|((x, y), z)| x * y * z)
                .sum();
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    Ok(CouplingMatrix(j))
}

/// Single global tone μ with per-ion amplitudes Ω_i.
pub fn single_tone_coupling(
    omega_vec: &[f64],
    mu: f64,
    modes: &ModeSpectrum,
) -> Result<CouplingMatrix> {
    let n = modes.n();
    if omega_vec.len() != n {
        return Err(Error::Shape(format!(
            "{} amplitudes for {n} ions",
            omega_vec.len()
        )));
    }
    let w = modes.frequencies();
    if let Some(m) = w.iter().position(|&wm| wm == mu) {
        return Err(Error::Resonance { tone: 0, mode: m });
    }
    let kernel: Vec<f64> = w.iter().map(|&wm| mode_kernel(mu, wm)).collect();
    let eta = modes.lamb_dicke();
    let mut j = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let s: f64 = (0..n).map(|m| eta[(a, m)] * eta[(b, m)] * kernel[m]).sum();
            let v = omega_vec[a] * omega_vec[b] * s;
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    Ok(CouplingMatrix(j))
}

/// One (ion, mode, tone) triple whose adiabaticity ratio exceeds the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub ion: usize,
    pub mode: usize,
    pub tone: usize,
    pub ratio: f64,
}

/// Result of [`validity_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub threshold: f64,
    pub max_ratio: f64,
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "threshold = {:.16e}", self.threshold)?;
        writeln!(f, "max_ratio = {:.16e}", self.max_ratio)?;
        writeln!(f, "violations = {}", self.violations.len())?;
        writeln!(f, "ion,mode,tone,ratio")?;
        for v in &self.violations {
            writeln!(f, "{},{},{},{:.16e}", v.ion, v.mode, v.tone, v.ratio)?;
        }
        Ok(())
    }
}

pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.1;

/// Scans r = η_{i,m} |Ω_{i,n}| / |ω_m − μ_n| over all (i, m, n).
pub fn validity_check(
    omega: &RabiMatrix,
    sched: &DetuningSchedule,
    modes: &ModeSpectrum,
    threshold: f64,
) -> Result<ValidityReport> {
    let n = modes.n();
    if omega.n() != n || sched.n() != n {
        return Err(Error::Shape("validity check inputs disagree in size".into()));
    }
    let eta = modes.lamb_dicke();
    let w = modes.frequencies();
    let mut max_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    for i in 0..n {
        for m in 0..n {
            for t in 0..n {
                let ratio =
                    eta[(i, m)].abs() * omega.as_matrix()[(i, t)].abs() / (w[m] - sched.detunings[t]).abs();
                max_ratio = max_ratio.max(ratio);
                if ratio > threshold {
                    violations.push(Violation { ion: i, mode: m, tone: t, ratio });
                }
            }
        }
    }
    Ok(ValidityReport { threshold, max_ratio, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::{solve_trap, AxialPotential, TrapConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn two_ion_modes() -> ModeSpectrum {
        let cfg = TrapConfig::yb171(2, TAU * 5e6, AxialPotential::Harmonic { omega_z: TAU * 1e6 });
        solve_trap(&cfg).unwrap().1
    }

    fn chain_modes(n: usize) -> ModeSpectrum {
        let cfg = TrapConfig::with_default_anisotropy(n, TAU * 5e6).unwrap();
        solve_trap(&cfg).unwrap().1
    }

    fn random_rabi(n: usize, seed: u64) -> RabiMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RabiMatrix::new(DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0) * 1e5)).unwrap()
    }

    #[test]
    fn two_ion_schedule() {
        let modes = two_ion_modes();
        let s = detuning_schedule(&modes, 0.1).unwrap();
        let gap = 5.0 - 24.0_f64.sqrt();
        assert_relative_eq!(s.detunings[0] / TAU / 1e6, 5.0 + 0.1 * gap, max_relative = 1e-12);
        assert_relative_eq!(
            s.detunings[1] / TAU / 1e6,
            24.0_f64.sqrt() + 0.1 * gap,
            max_relative = 1e-12
        );
        assert_relative_eq!(s.detunings[0] / TAU / 1e6, 5.0101021, max_relative = 1e-7);
        assert_relative_eq!(s.detunings[1] / TAU / 1e6, 4.90908, max_relative = 1e-6);
    }

    #[test]
    fn schedule_rejects_bad_fraction() {
        let modes = two_ion_modes();
        assert!(detuning_schedule(&modes, 0.0).is_err());
        assert!(detuning_schedule(&modes, 1.5).is_err());
    }

    #[test]
    fn schedule_collision_is_reported() {
        // Two modes 1 rad/s apart, well inside the guard band.
        let w = vec![TAU * 5e6, TAU * 5e6 - 1.0];
        let b = DMatrix::identity(2, 2);
        let modes = ModeSpectrum::new(w, b, 1e-25, 1e7).unwrap();
        let err = detuning_schedule(&modes, 0.999_999).unwrap_err();
        assert!(matches!(err, Error::ScheduleCollision { .. }));
    }

    #[test]
    fn single_ion_schedule() {
        let b = DMatrix::from_element(1, 1, 1.0);
        let modes = ModeSpectrum::new(vec![TAU * 5e6], b, 1e-25, 1e7).unwrap();
        let s = detuning_schedule(&modes, 0.5).unwrap();
        assert_relative_eq!(s.detunings[0], TAU * 5e6 * 1.005, max_relative = 1e-15);
        let f = response_tensor(&modes, &s).unwrap();
        let eta = modes.lamb_dicke()[(0, 0)];
        let (w, mu) = (TAU * 5e6, s.detunings[0]);
        assert_relative_eq!(f.get(0, 0, 0), eta * eta * w / (mu * mu - w * w), max_relative = 1e-9);
    }

    #[test]
    fn two_ion_tensor_by_hand() {
        let modes = two_ion_modes();
        let s = detuning_schedule(&modes, 0.1).unwrap();
        let f = response_tensor(&modes, &s).unwrap();
        let eta = modes.lamb_dicke();
        let w = modes.frequencies();
        for i in 0..2 {
            for j in 0..2 {
                for t in 0..2 {
                    let mu = s.detunings[t];
                    let expected = eta[(i, 0)] * eta[(j, 0)] * w[0] / (mu * mu - w[0] * w[0])
                        + eta[(i, 1)] * eta[(j, 1)] * w[1] / (mu * mu - w[1] * w[1]);
                    assert_relative_eq!(f.get(i, j, t), expected, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn resonance_is_an_error() {
        let modes = two_ion_modes();
        let sched = DetuningSchedule {
            detunings: vec![modes.frequencies()[0], modes.frequencies()[0] * 0.9],
            f_s: 0.1,
            reference_gap: modes.com_tilt_gap(),
        };
        assert!(matches!(
            response_tensor(&modes, &sched),
            Err(Error::Resonance { tone: 0, mode: 0 })
        ));
    }

    #[test]
    fn zero_rabi_gives_zero_coupling() {
        let modes = chain_modes(4);
        let f = response_tensor(&modes, &detuning_schedule(&modes, 0.1).unwrap()).unwrap();
        let j = forward_coupling(&RabiMatrix::zeros(4), &f).unwrap();
        assert_eq!(j.max_abs(), 0.0);
    }

    #[test]
    fn quadratic_scaling() {
        let modes = chain_modes(6);
        let f = response_tensor(&modes, &detuning_schedule(&modes, 0.1).unwrap()).unwrap();
        let om = random_rabi(6, 3);
        let j1 = forward_coupling(&om, &f).unwrap();
        let j3 = forward_coupling(&om.scaled(3.0), &f).unwrap();
        let diff = (j3.as_matrix() - j1.as_matrix() * 9.0).amax();
        assert!(diff <= 1e-12 * j3.max_abs());
    }

    #[test]
    fn single_tone_matches_one_column() {
        let modes = chain_modes(5);
        let sched = detuning_schedule(&modes, 0.2).unwrap();
        let f = response_tensor(&modes, &sched).unwrap();
        let amps = [1e5, -2e5, 3e5, 0.5e5, -1e5];
        for tone in [0, 3] {
            let mut m = DMatrix::zeros(5, 5);
            for (i, a) in amps.iter().enumerate() {
                m[(i, tone)] = *a;
            }
            let jf = forward_coupling(&RabiMatrix::new(m).unwrap(), &f).unwrap();
            let js = single_tone_coupling(&amps, sched.detunings[tone], &modes).unwrap();
            let diff = (jf.as_matrix() - js.as_matrix()).amax();
            assert!(diff <= 1e-12 * js.max_abs(), "tone {tone}: {diff}");
        }
    }

    #[test]
    fn two_ion_single_tone_by_hand() {
        let modes = two_ion_modes();
        let mu = modes.frequencies()[0] + TAU * 10e3;
        let j = single_tone_coupling(&[2e5, 3e5], mu, &modes).unwrap();
        let eta = modes.lamb_dicke();
        let w = modes.frequencies();
        let s0 = eta[(0, 0)] * eta[(1, 0)] * w[0] / (mu * mu - w[0] * w[0]);
        let s1 = eta[(0, 1)] * eta[(1, 1)] * w[1] / (mu * mu - w[1] * w[1]);
        assert_relative_eq!(j.get(0, 1), 6e10 * (s0 + s1), max_relative = 1e-12);
        assert_eq!(j.get(0, 0), 0.0);
    }

    #[test]
    fn uniform_tone_near_com_is_single_signed() {
        let modes = chain_modes(8);
        let w1 = modes.frequencies()[0];
        let mu = w1 + 0.01 * modes.com_tilt_gap();
        let j = single_tone_coupling(&[1e5; 8], mu, &modes).unwrap();
        let sign = (w1 / (mu * mu - w1 * w1)).signum();
        for a in 0..8 {
            for b in 0..8 {
                if a != b {
                    assert_eq!(j.get(a, b).signum(), sign);
                }
            }
        }
    }

    #[test]
    fn validity_scan() {
        let modes = chain_modes(3);
        let sched = detuning_schedule(&modes, 0.1).unwrap();
        let r = validity_check(&RabiMatrix::zeros(3), &sched, &modes, 0.1).unwrap();
        assert!(r.is_valid());
        assert_eq!(r.max_ratio, 0.0);

        let w1 = modes.frequencies()[0];
        let mut near = sched.clone();
        near.detunings[0] = w1 * (1.0 + 1e-6);
        let om = RabiMatrix::new(DMatrix::from_element(3, 3, TAU * 1e5)).unwrap();
        let r = validity_check(&om, &near, &modes, 0.1).unwrap();
        assert!(!r.is_valid());
        assert!(r.violations.iter().any(|v| v.mode == 0 && v.tone == 0));
        assert!(r.to_string().contains("ion,mode,tone,ratio"));
    }

    #[test]
    fn canonical_form_fixes_column_signs() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -2.0, 3.0]);
        let c = RabiMatrix::new(m).unwrap().canonicalized();
        assert_eq!(c.as_matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, -3.0]));
    }
}
