//! Inverse design: find Ω with J(Ω) = J_target while minimizing Σ|Ω|.
//!
//! The constraint set is the N(N−1)/2 bilinear equations
//! `c_k(Ω) = Σ_n Ω_{i,n} Ω_{j,n} F_{i,j,n} − J_{i,j} = 0` for pairs k = (i < j).
//! Each multistart run
//!
//! 1. draws a random signed Ω and projects it onto the constraint set with
//!    minimum-norm Gauss–Newton steps,
//! 2. descends the smoothed objective Σ sqrt(Ω² + ε²) by iteratively
//!    reweighted least squares: every step solves the weighted minimum-norm
//!    problem for the linearized constraints, `Ω⁺ = D Aᵀ (A D Aᵀ)⁻¹ (A Ω − c)`
//!    with `D = diag(sqrt(Ω² + ε²))`, while ε is annealed toward 10⁻⁶ of the
//!    starting scale,
//! 3. polishes feasibility with plain Gauss–Newton projection.
//!
//! The problem is solved in normalized units (max|F| = max|J| = 1) and mapped
//! back, exploiting J(cΩ) = c² J(Ω).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::coupling::{forward_coupling, CouplingMatrix, RabiMatrix, ResponseTensor};
use crate::error::{Error, Result};
use crate::graphs::TargetGraph;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    /// Reproduce the target exactly.
    ExactTarget,
    /// Solve the unit-weight pattern and rescale so Σ|Ω| equals `budget` (rad/s).
    FixedBudget { budget: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Relative Frobenius tolerance on J(Ω) − J_target.
    pub residual_tol: f64,
    /// Reweighting iterations per start.
    pub max_iter: usize,
    pub n_starts: usize,
    pub rng_seed: u64,
    pub mode: SolveMode,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            max_iter: 400,
            n_starts: 8,
            rng_seed: 0,
            mode: SolveMode::ExactTarget,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.residual_tol.is_nan() || self.residual_tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "residual_tol must be positive, got {}",
                self.residual_tol
            )));
        }
        if self.n_starts == 0 {
            return Err(Error::InvalidConfig("n_starts must be at least 1".into()));
        }
        if let SolveMode::FixedBudget { budget } = self.mode {
            if !(budget.is_finite() && budget > 0.0) {
                return Err(Error::InvalidConfig(format!("budget must be positive, got {budget}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub omega: RabiMatrix,
    /// J(Ω) recomputed with [`forward_coupling`].
    pub attained: CouplingMatrix,
    /// The coupling matrix the solve aimed at: the target itself, or the
    /// unit pattern times `attained_scale` in fixed-budget mode.
    pub reference: CouplingMatrix,
    pub relative_residual: f64,
    /// Σ|Ω| in rad/s.
    pub objective: f64,
    /// Fixed-budget mode: c such that J = c · (unit pattern), rad/s.
    pub attained_scale: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub best_start: usize,
    /// Σ|Ω| (normalized units) of each start, `None` where the start failed
    /// to reach the tolerance.
    pub start_objectives: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

/// Relative Frobenius distance; absolute when the reference is zero.
pub fn relative_residual(attained: &CouplingMatrix, reference: &CouplingMatrix) -> f64 {
    let diff = (attained.as_matrix() - reference.as_matrix()).norm();
    let scale = reference.frobenius();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Constraint system in normalized units.
struct Problem {
    n: usize,
    /// Normalized F with n fastest; only i < j blocks are used.
    f: Vec<f64>,
    /// (i, j) for each constraint.
    pairs: Vec<(usize, usize)>,
    /// Normalized targets per pair.
    target: Vec<f64>,
    /// pair_index[i * n + j] for i ≠ j.
    pair_index: Vec<usize>,
}

impl Problem {
    fn new(f: &ResponseTensor, target: &CouplingMatrix, f_scale: f64, t_scale: f64) -> Self {
        let n = f.n();
        let mut pairs = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        let mut pair_index = vec![usize::MAX; n * n];
        let mut data = vec![0.0; n * n * n];
        let mut tgt = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                pair_index[i * n + j] = pairs.len();
                pair_index[j * n + i] = pairs.len();
                pairs.push((i, j));
                tgt.push(target.get(i, j) / t_scale);
            }
            for j in 0..n {
                for (t, v) in f.pair(i, j).iter().enumerate() {
                    data[(i * n + j) * n + t] = v / f_scale;
                }
            }
        }
        Self { n, f: data, pairs, target: tgt, pair_index }
    }

    #[inline]
    fn fp(&self, i: usize, j: usize) -> &[f64] {
        let s = (i * self.n + j) * self.n;
        &self.f[s..s + self.n]
    }

    #[inline]
    fn row<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[i * self.n..(i + 1) * self.n]
    }

    /// q_k(x) = Σ_n x_{i,n} x_{j,n} F_{i,j,n}.
    fn quadratic(&self, x: &[f64]) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|&(i, j)| {
                let (xi, xj, f) = (self.row(x, i), self.row(x, j), self.fp(i, j));
                (0..self.n).map(|t| xi[t] * xj[t] * f[t]).sum()
            })
            .collect()
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.quadratic(x).iter().zip(&self.target).map(|(q, t)| q - t).collect()
    }

    /// Aᵀ y, where A = ∂c/∂x.
    fn jac_t(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let f = self.fp(i, j);
            for t in 0..n {
                let w = y[k] * f[t];
                out[i * n + t] += w * x[j * n + t];
                out[j * n + t] += w * x[i * n + t];
            }
        }
        out
    }

    /// A D Aᵀ for a diagonal D (one weight per entry of x).
    fn gram(&self, x: &[f64], d: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let m = self.pairs.len();
        let mut g = DMatrix::zeros(m, m);
        // Row a of A restricted to pairs containing ion a: g_b[t] = x_{b,t} F_{a,b,t}.
        let mut blocks = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if b == a {
                    continue;
                }
                let f = self.fp(a, b);
                for t in 0..n {
                    blocks[b * n + t] = x[b * n + t] * f[t] * d[a * n + t].sqrt();
                }
            }
            for b1 in 0..n {
                if b1 == a {
                    continue;
                }
                let k1 = self.pair_index[a * n + b1];
                let v1 = &blocks[b1 * n..(b1 + 1) * n];
                for b2 in b1..n {
                    if b2 == a {
                        continue;
                    }
                    let k2 = self.pair_index[a * n + b2];
                    let v2 = &blocks[b2 * n..(b2 + 1) * n];
                    let s: f64 = v1.iter().zip(v2).map(|(p, q)| p * q).sum();
                    g[(k1, k2)] += s;
                    if k1 != k2 {
                        g[(k2, k1)] += s;
                    }
                }
            }
        }
        g
    }

    /// Solves (A D Aᵀ) y = rhs, adding a ridge if the Gram matrix is singular.
    fn solve_gram(&self, x: &[f64], d: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
        let g = self.gram(x, d);
        let m = g.nrows();
        let trace = g.trace().max(f64::MIN_POSITIVE);
        let b = DVector::from_column_slice(rhs);
        let mut ridge = 0.0;
        for _ in 0..12 {
            let mut gr = g.clone();
            for i in 0..m {
                gr[(i, i)] += ridge;
            }
            if let Some(ch) = gr.cholesky() {
                let y = ch.solve(&b);
                if y.iter().all(|v| v.is_finite()) {
                    return Some(y.as_slice().to_vec());
                }
            }
            ridge = if ridge == 0.0 { 1e-14 * trace / m as f64 } else { ridge * 100.0 };
        }
        None
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimum-norm Gauss–Newton projection onto c(x) = 0 with backtracking.
fn project(p: &Problem, mut x: Vec<f64>, tol: f64, max_iter: usize) -> (Vec<f64>, f64, usize) {
    let ones = vec![1.0; x.len()];
    let mut c = p.constraints(&x);
    let mut cn = norm2(&c);
    let mut it = 0;
    while max_abs(&c) > tol && it < max_iter {
        it += 1;
        let Some(y) = p.solve_gram(&x, &ones, &c) else { break };
        let step = p.jac_t(&x, &y);
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - alpha * s).collect();
            let ct = p.constraints(&trial);
            let ctn = norm2(&ct);
            if ctn < cn {
                x = trial;
                c = ct;
                cn = ctn;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, max_abs(&c), it)
}

/// Iteratively reweighted descent of Σ sqrt(x² + ε²) on the constraint set.
fn reweighted_descent(p: &Problem, mut x: Vec<f64>, max_iter: usize) -> (Vec<f64>, usize) {
    let scale = max_abs(&x).max(f64::MIN_POSITIVE);
    let eps_min = 1e-6 * scale;
    let mut eps = 0.3 * scale;
    let mut last_obj = f64::INFINITY;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let d: Vec<f64> = x.iter().map(|v| (v * v + eps * eps).sqrt()).collect();
        // A x − c = 2q − (q − T) = q + T for the homogeneous quadratic q.
        let rhs: Vec<f64> = p.quadratic(&x).iter().zip(&p.target).map(|(q, t)| q + t).collect();
        let Some(y) = p.solve_gram(&x, &d, &rhs) else { break };
        let at_y = p.jac_t(&x, &y);
        let next: Vec<f64> = at_y.iter().zip(&d).map(|(a, w)| a * w).collect();
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        x = next;
        if it % 10 == 0 {
            eps = (0.5 * eps).max(eps_min);
        }
        let obj = l1(&x);
        if eps == eps_min && (last_obj - obj).abs() <= 1e-12 * obj {
            break;
        }
        last_obj = obj;
    }
    (x, it)
}

struct StartOutcome {
    x: Vec<f64>,
    objective: f64,
    residual: f64,
    iterations: usize,
}

fn run_start(p: &Problem, cfg: &SolveConfig, start: usize) -> StartOutcome {
    let n = p.n;
    let mut rng = seed::rng(cfg.rng_seed, "solve.start", start as u64);
    let x0: Vec<f64> = (0..n * n)
        .map(|_| {
            let mag = rng.gen_range(0.5..=1.0);
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let (x, _, it0) = project(p, x0, 1e-13, 100);
    let (x, it1) = reweighted_descent(p, x, cfg.max_iter);
    let (x, _, it2) = project(p, x, 1e-15, 100);
    let c = p.constraints(&x);
    let residual = norm2(&c) / norm2(&p.target).max(f64::MIN_POSITIVE);
    StartOutcome { objective: l1(&x), x, residual, iterations: it0 + it1 + it2 }
}

/// Multistart minimum-Σ|Ω| solve.
pub fn solve_rabi(target: &TargetGraph, f: &ResponseTensor, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let n = f.n();
    if target.n() != n {
        return Err(Error::Shape(format!(
            "target has {} ions, response tensor has dimension {n}",
            target.n()
        )));
    }

    let (goal, budget) = match cfg.mode {
        SolveMode::ExactTarget => (target.j_target.clone(), None),
        SolveMode::FixedBudget { budget } => (target.unit_pattern().j_target, Some(budget)),
    };
    let t_scale = goal.max_abs();
    let f_scale = f.max_offdiag_abs();

    if t_scale == 0.0 || n < 2 {
        let omega = RabiMatrix::zeros(n);
        let attained = forward_coupling(&omega, f)?;
        return Ok(SolveResult {
            relative_residual: relative_residual(&attained, &goal),
            omega,
            attained,
            reference: goal,
            objective: 0.0,
            attained_scale: budget.map(|_| 0.0),
            iterations: 0,
            converged: true,
            best_start: 0,
            start_objectives: vec![Some(0.0); cfg.n_starts],
            warnings: Vec::new(),
        });
    }
    if f_scale == 0.0 {
        return Err(Error::InvalidConfig("response tensor vanishes between ions".into()));
    }

    let problem = Problem::new(f, &goal, f_scale, t_scale);
    let outcomes: Vec<StartOutcome> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|s| run_start(&problem, cfg, s))
        .collect();

    // Converged starts by lowest objective; ties go to the lowest index.
    let start_objectives: Vec<Option<f64>> = outcomes
        .iter()
        .map(|o| (o.residual <= cfg.residual_tol).then_some(o.objective))
        .collect();
    let best_converged = start_objectives
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.map(|v| (i, v)))
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((i, v)),
        });
    let best_residual = outcomes.iter().map(|o| o.residual).fold(f64::INFINITY, f64::min);
    let Some((best_start, _)) = best_converged else {
        return Err(Error::NoConvergence { best_residual });
    };
    let best = &outcomes[best_start];

    let unit = (t_scale / f_scale).sqrt();
    let mut omega = RabiMatrix::new(DMatrix::from_row_slice(n, n, &best.x).scale(unit))?;
    let mut reference = goal;
    let mut attained_scale = None;
    if let Some(b) = budget {
        let c = b / omega.l1_norm();
        omega = omega.scaled(c);
        attained_scale = Some(c * c * t_scale);
        reference = reference.scaled(c * c);
    }
    let attained = forward_coupling(&omega, f)?;
    let rel = relative_residual(&attained, &reference);

    let mut warnings = Vec::new();
    let failed = start_objectives.iter().filter(|o| o.is_none()).count();
    if failed > 0 {
        warnings.push(format!("{failed} of {} starts missed the tolerance", cfg.n_starts));
    }
    Ok(SolveResult {
        objective: omega.l1_norm(),
        omega,
        attained,
        reference,
        relative_residual: rel,
        attained_scale,
        iterations: best.iterations,
        converged: rel <= cfg.residual_tol,
        best_start,
        start_objectives,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport {
    /// max_{i≠j} |J_attained − J_reference|, rad/s.
    pub max_deviation: f64,
    pub relative_residual: f64,
    pub canonical_omega: RabiMatrix,
}

/// Recomputes J(Ω) with a plain triple loop and compares it with the target
/// (scaled by `attained_scale` for fixed-budget results).
pub fn verify_roundtrip(result: &SolveResult, target: &TargetGraph, f: &ResponseTensor) -> Result<RoundtripReport> {
    let n = f.n();
    if result.omega.n() != n || target.n() != n {
        return Err(Error::Shape("round-trip inputs disagree in size".into()));
    }
    let reference = match result.attained_scale {
        Some(c) => target.unit_pattern().j_target.scaled(c),
        None => target.j_target.clone(),
    };
    let om = result.omega.as_matrix();
    let mut j = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mut s = 0.0;
            for t in 0..n {
                s += om[(a, t)] * om[(b, t)] * f.get(a, b, t);
            }
            j[(a, b)] = s;
        }
    }
    let attained = CouplingMatrix::from_matrix(j)?;
    let max_deviation = (attained.as_matrix() - reference.as_matrix()).amax();
    Ok(RoundtripReport {
        max_deviation,
        relative_residual: relative_residual(&attained, &reference),
        canonical_omega: result.omega.canonicalized(),
    })
}
