//! Step-function discretization of graphons on an `n x n` grid, used as an
//! independent entropy maximizer and as a host for structural diagnostics.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipodal::{BipodalGraphon, OddCycle};
use crate::error::{Error, Result};
use crate::scalar::{h, mass_distance};

/// Entries are kept in `[GAMMA, 1 - GAMMA]` during optimization.
pub const GAMMA: f64 = 1e-9;
/// Random starts stay this far from 0 and 1, where the metric `W(1-W)`
/// would freeze entries.
const START_MARGIN: f64 = 0.01;
const MAGIC: &[u8; 4] = b"GRPH";
const JSON_MAX_N: usize = 64;

/// Symmetric `n x n` matrix of probabilities, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridGraphon {
    n: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    n: usize,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawGrid> for GridGraphon {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        if raw.values.len() != raw.n || raw.values.iter().any(|r| r.len() != raw.n) {
            return Err(Error::Format(format!("expected {0}x{0} values", raw.n)));
        }
        GridGraphon::from_values(raw.n, raw.values.concat())
    }
}

impl GridGraphon {
    /// Validates shape, range and exact symmetry.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("grid size must be at least 2, got {n}")));
        }
        if values.len() != n * n {
            return Err(Error::Format(format!("expected {} values, got {}", n * n, values.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::domain(format!("entry ({i},{j}) = {v} is not in [0,1]")));
                }
                if v != values[j * n + i] {
                    return Err(Error::domain(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(GridGraphon { n, values })
    }

    pub fn constant(n: usize, p: f64) -> Result<Self> {
        GridGraphon::from_values(n, vec![p; n * n])
    }

    /// `e` plus independent uniform noise of half-width `spread`, clamped to
    /// `[GAMMA, 1 - GAMMA]`. Deterministic in `seed`.
    pub fn random(n: usize, e: f64, spread: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("grid size must be at least 2, got {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = (e + spread * (2.0 * rng.random::<f64>() - 1.0)).clamp(GAMMA, 1.0 - GAMMA);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(GridGraphon { n, values })
    }

    /// Random starting point for a target `(e, t)`: a rank-one deformation
    /// `e -/+ amp u_i u_j` along a random unit-RMS, mean-zero vector `u`, with
    /// `amp = |e^k - t|^(1/k)` and the sign of `t - e^k`, plus entrywise noise
    /// of half-width `spread`, kept inside `[0.01, 0.99]`. A pure-noise start near the constant grid is a
    /// stationary point of the penalized merit, so it cannot reach `t < e^k`.
    pub fn random_start(n: usize, e: f64, t: f64, k: OddCycle, spread: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("grid size must be at least 2, got {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let mean = u.iter().sum::<f64>() / n as f64;
        u.iter_mut().for_each(|x| *x -= mean);
        let scale = (u.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
        if scale > 0.0 {
            u.iter_mut().for_each(|x| *x /= scale);
        }
        let gap = t - e.powi(k.get() as i32);
        let amp = gap.abs().powf(1.0 / k.get() as f64).copysign(gap);
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let noise = spread * (2.0 * rng.random::<f64>() - 1.0);
                let v = (e + amp * u[i] * u[j] + noise).clamp(START_MARGIN, 1.0 - START_MARGIN);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(GridGraphon { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n)
    }

    /// Row means `d_i = n^-1 sum_j W_ij`.
    pub fn degrees(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.rows().map(|r| r.iter().sum::<f64>() / n).collect()
    }

    /// Step-function value at `(x, y)` in `[0,1]^2`.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let cell = |t: f64| ((t * self.n as f64) as usize).min(self.n - 1);
        self.get(cell(x), cell(y))
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n = u32::try_from(self.n).map_err(|_| Error::Format("grid too large".into()))?;
        w.write_all(MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&[0u8; 8])?;
        for i in 0..self.n {
            for j in 0..=i {
                w.write_all(&self.get(i, j).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let n = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
        if n < 2 {
            return Err(Error::Format(format!("grid size {n} in header")));
        }
        let mut values = vec![0.0; n * n];
        let mut buf = [0u8; 8];
        for i in 0..n {
            for j in 0..=i {
                r.read_exact(&mut buf)?;
                let v = f64::from_le_bytes(buf);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        GridGraphon::from_values(n, values)
    }

    /// JSON object `{"n": .., "values": [[..], ..]}`; only for `n <= 64`.
    pub fn to_json(&self) -> Result<String> {
        if self.n > JSON_MAX_N {
            return Err(Error::domain(format!("JSON output is limited to n <= {JSON_MAX_N}")));
        }
        let rows: Vec<&[f64]> = self.rows().collect();
        serde_json::to_string(&serde_json::json!({ "n": self.n, "values": rows }))
            .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }
}

/// `C = A B` for square row-major matrices. Each output row is summed in a
/// fixed order, so results do not depend on the thread count.
fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (l, &ail) in a[i * n..(i + 1) * n].iter().enumerate() {
            for (o, &blj) in row.iter_mut().zip(&b[l * n..(l + 1) * n]) {
                *o += ail * blj;
            }
        }
    });
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `W^(k-1)` by repeated multiplication.
fn power_km1(values: &[f64], n: usize, k: OddCycle) -> Vec<f64> {
    let mut p = values.to_vec();
    for _ in 0..k.get() - 2 {
        p = matmul(&p, values, n);
    }
    p
}

/// `(n^-2 sum W_ij, n^-k trace W^k)`.
pub fn grid_densities(w: &GridGraphon, k: OddCycle) -> (f64, f64) {
    let n = w.n;
    let nf = n as f64;
    let eps = w.values.iter().sum::<f64>() / (nf * nf);
    let p = power_km1(&w.values, n, k);
    (eps, dot(&p, &w.values) / nf.powi(k.get() as i32))
}

/// `n^-2 sum H(W_ij)`.
pub fn grid_entropy(w: &GridGraphon) -> f64 {
    let nf = w.n as f64;
    w.values.iter().map(|&v| h(v)).sum::<f64>() / (nf * nf)
}

/// A bipodal graphon on the grid, with the pode size actually realized.
#[derive(Debug, Clone, PartialEq)]
pub struct BipodalGrid {
    pub grid: GridGraphon,
    /// Number of leading rows in the `a` pode.
    pub rows: usize,
    /// `rows / n`.
    pub c_realized: f64,
}

/// The first `round(c n)` rows form the `a` pode.
pub fn from_bipodal(g: &BipodalGraphon, n: usize) -> Result<BipodalGrid> {
    if n < 4 {
        return Err(Error::domain(format!("from_bipodal needs n >= 4, got {n}")));
    }
    let rows = (g.c() * n as f64).round() as usize;
    if rows == 0 {
        return Err(Error::DegeneratePode { c: g.c(), n });
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = match (i < rows, j < rows) {
                (true, true) => g.a(),
                (false, false) => g.b(),
                _ => g.d(),
            };
        }
    }
    Ok(BipodalGrid { grid: GridGraphon { n, values }, rows, c_realized: rows as f64 / n as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleOptions {
    /// Initial step length in per-entry units.
    pub step: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Initial quadratic penalty weight. Values much below `1e4` let the
    /// entropy flatten a structured start before the constraints bind.
    pub penalty: f64,
    pub penalty_growth: f64,
    pub tol_constraint: f64,
    /// Inner loop stops once the RMS projected metric-gradient step falls
    /// below this, or when no representable ascent remains.
    pub tol_inner: f64,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            step: 1.0,
            outer_iters: 40,
            inner_iters: 5000,
            penalty: 1e5,
            penalty_growth: 10.0,
            tol_constraint: 1e-8,
            tol_inner: 1e-10,
            seed: 0,
        }
    }
}

impl OracleOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::domain("step must be positive"));
        }
        if !(self.penalty_growth > 1.0) {
            return Err(Error::domain("penalty_growth must exceed 1"));
        }
        if !(self.penalty > 0.0 && self.tol_constraint > 0.0 && self.tol_inner >= 0.0) {
            return Err(Error::domain("penalty and tolerances must be positive"));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::domain("iteration limits must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub grid: GridGraphon,
    pub entropy: f64,
    pub eps: f64,
    pub tau: f64,
    /// `max(|eps - e|, |tau - t|)`.
    pub residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

struct Problem {
    n: usize,
    e: f64,
    t: f64,
    k: OddCycle,
}

struct Eval {
    merit: f64,
    /// `n^2` times the gradient of the merit, symmetric.
    grad: Vec<f64>,
    eps: f64,
    tau: f64,
}

impl Problem {
    fn residuals(&self, eps: f64, tau: f64) -> (f64, f64) {
        (eps - self.e, tau - self.t)
    }

    /// Merit `S - l.r - (rho/2)|r|^2` and its scaled gradient. Sums run over
    /// the upper triangle with off-diagonal entries counted twice.
    fn eval(&self, w: &[f64], lam: (f64, f64), rho: f64) -> Eval {
        let n = self.n;
        let nf = n as f64;
        let km = self.k.get() as i32;
        let p = power_km1(w, n, self.k);
        let mut grad = vec![0.0; n * n];
        let (mut s, mut sum, mut tr) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i..n {
                let weight = if i == j { 1.0 } else { 2.0 };
                let v = w[i * n + j];
                let (lv, lq) = (v.ln(), (-v).ln_1p());
                let pij = 0.5 * (p[i * n + j] + p[j * n + i]);
                s -= weight * (v * lv + (1.0 - v) * lq);
                sum += weight * v;
                tr += weight * v * pij;
                grad[i * n + j] = lq - lv;
            }
        }
        let eps = sum / (nf * nf);
        let tau = tr / nf.powi(km);
        let (re, rt) = self.residuals(eps, tau);
        let merit = s / (nf * nf) - lam.0 * re - lam.1 * rt - 0.5 * rho * (re * re + rt * rt);
        let me = lam.0 + rho * re;
        let mt = (lam.1 + rho * rt) * km as f64 / nf.powi(km - 2);
        for i in 0..n {
            for j in i..n {
                let pij = 0.5 * (p[i * n + j] + p[j * n + i]);
                let g = grad[i * n + j] - me - mt * pij;
                grad[i * n + j] = g;
                grad[j * n + i] = g;
            }
        }
        Eval { merit, grad, eps, tau }
    }
}

impl Problem {
    /// Least-squares multipliers for `H'(W) = l_e + l_t k W^(k-1) / n^(k-2)`
    /// in the metric `W(1-W)`.
    fn multiplier_estimate(&self, w: &[f64]) -> (f64, f64) {
        let n = self.n;
        let km = self.k.get() as i32;
        let p = power_km1(w, n, self.k);
        let scale = km as f64 / (n as f64).powi(km - 2);
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let v = w[i * n + j];
                let m = v * (1.0 - v);
                let g = scale * p[i * n + j];
                let hp = (-v).ln_1p() - v.ln();
                a11 += m;
                a12 += m * g;
                a22 += m * g * g;
                b1 += m * hp;
                b2 += m * hp * g;
            }
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() <= 1e-12 * a11 * a22 {
            return (b1 / a11, 0.0);
        }
        ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
    }
}

const MEMORY: usize = 10;

/// Limited-memory BFGS pairs for the minimization of `-merit`; `y` holds
/// differences of the negated gradient.
#[derive(Default)]
struct Memory {
    pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl Memory {
    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if self.pairs.len() == MEMORY {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
    }

    /// Two-loop recursion with initial matrix `gamma * diag(metric)`.
    fn direction(&self, grad: &[f64], metric: &[f64]) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, r) in self.pairs.iter().rev() {
            let a = r * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = match self.pairs.back() {
            Some((s, y, _)) => {
                let ypy: f64 = y.iter().zip(metric).map(|(yi, m)| yi * yi * m).sum();
                dot(s, y) / ypy
            }
            None => 1.0,
        };
        q.iter_mut().zip(metric).for_each(|(qi, m)| *qi *= gamma * m);
        for ((s, y, r), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = r * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q
    }
}

/// Diagonal metric `W(1-W)`, the inverse curvature of the entropy term.
fn metric(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&x| x * (1.0 - x)).collect()
}

fn project_step(w: &[f64], dir: &[f64], alpha: f64) -> Vec<f64> {
    w.iter().zip(dir).map(|(&x, &d)| (x + alpha * d).clamp(GAMMA, 1.0 - GAMMA)).collect()
}

/// RMS of the projected preconditioned gradient step.
fn stationarity(w: &[f64], dir: &[f64]) -> f64 {
    let s: f64 = w.iter().zip(dir).map(|(&x, &d)| ((x + d).clamp(GAMMA, 1.0 - GAMMA) - x).powi(2)).sum();
    (s / w.len() as f64).sqrt()
}

/// Maximizes grid entropy subject to `eps = e`, `tau_k = t`.
///
/// Outer loop: augmented Lagrangian, multipliers initialized by least squares
/// and updated to first order; the penalty grows by `penalty_growth` whenever
/// the residual fails to shrink by a factor 4. Inner loop: projected ascent
/// in the metric `W(1-W)` along limited-memory quasi-Newton directions
/// (falling back to the metric gradient) with Armijo backtracking, so the
/// merit never decreases across inner iterations. Returns once the residual
/// meets `tol_constraint` at an inner stationary point.
pub fn maximize_entropy(init: &GridGraphon, e: f64, t: f64, k: OddCycle, opts: &OracleOptions) -> Result<OracleResult> {
    maximize_entropy_observed(init, e, t, k, opts, |_, _| {})
}

/// [`maximize_entropy`] reporting `(outer iteration, merit)` after every
/// accepted inner step.
pub fn maximize_entropy_observed<F: FnMut(usize, f64)>(
    init: &GridGraphon,
    e: f64,
    t: f64,
    k: OddCycle,
    opts: &OracleOptions,
    mut observe: F,
) -> Result<OracleResult> {
    opts.validate()?;
    if !(e > 0.0 && e < 1.0) || !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("infeasible target (e={e}, t={t})")));
    }
    let n = init.n;
    let len = n * n;
    let nf2 = len as f64;
    let prob = Problem { n, e, t, k };
    let mut w: Vec<f64> = init.values.iter().map(|v| v.clamp(GAMMA, 1.0 - GAMMA)).collect();
    let mut lam = prob.multiplier_estimate(&w);
    let mut rho = opts.penalty;
    let mut inner_total = 0;
    let mut prev_residual = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for outer in 1..=opts.outer_iters {
        let mut cur = prob.eval(&w, lam, rho);
        let mut memory = Memory::default();
        let mut first = true;
        let mut stationary = false;
        for _ in 0..opts.inner_iters {
            let pm = metric(&w);
            let steepest: Vec<f64> = pm.iter().zip(&cur.grad).map(|(m, g)| m * g).collect();
            let st = stationarity(&w, &steepest);
            log::trace!("inner: stat={st:e} merit={}", cur.merit);
            if st <= opts.tol_inner {
                stationary = true;
                break;
            }
            inner_total += 1;
            let mut dir = memory.direction(&cur.grad, &pm);
            if dot(&dir, &cur.grad) <= 0.0 {
                memory.clear();
                dir = steepest;
            }
            let mut trial = if first { opts.step } else { 1.0 };
            first = false;
            let accepted = loop {
                let cand = project_step(&w, &dir, trial);
                let ascent: f64 = cand.iter().zip(&w).zip(&cur.grad).map(|((c, x), g)| (c - x) * g).sum::<f64>() / nf2;
                let next = prob.eval(&cand, lam, rho);
                if next.merit >= cur.merit + 1e-4 * ascent && next.merit >= cur.merit && ascent > 0.0 {
                    break Some((cand, next));
                }
                trial *= 0.25;
                if trial < 1e-12 {
                    break None;
                }
            };
            let Some((cand, next)) = accepted else {
                if memory.is_empty() {
                    // no representable ascent along the steepest direction
                    stationary = true;
                    break;
                }
                memory.clear();
                continue;
            };
            let sv: Vec<f64> = cand.iter().zip(&w).map(|(c, x)| c - x).collect();
            let yv: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| b - a).collect();
            memory.push(sv, yv);
            w = cand;
            cur = next;
            observe(outer, cur.merit);
        }
        let (re, rt) = prob.residuals(cur.eps, cur.tau);
        residual = re.abs().max(rt.abs());
        log::debug!(
            "oracle outer {outer}: rho={rho:e} inner={inner_total} r=({re:e},{rt:e}) residual={residual:e} merit={} lambda=({:e}, {:e})",
            cur.merit,
            lam.0,
            lam.1
        );
        if residual <= opts.tol_constraint && stationary {
            let grid = GridGraphon { n, values: w };
            let (eps, tau) = grid_densities(&grid, k);
            return Ok(OracleResult {
                entropy: grid_entropy(&grid),
                grid,
                eps,
                tau,
                residual: (eps - e).abs().max((tau - t).abs()),
                outer_iterations: outer,
                inner_iterations: inner_total,
            });
        }
        lam = (lam.0 + rho * re, lam.1 + rho * rt);
        if residual > 0.25 * prev_residual {
            rho *= opts.penalty_growth;
        }
        prev_residual = residual;
    }
    Err(Error::ConstraintInfeasible { outer: opts.outer_iters, residual, tol: opts.tol_constraint })
}

/// Runs [`maximize_entropy`] from `GridGraphon::random_start(n, e, t, k, spread, seed)`
/// for each seed in parallel and returns every outcome in seed order.
pub fn multistart(
    n: usize,
    e: f64,
    t: f64,
    k: OddCycle,
    spread: f64,
    seeds: &[u64],
    opts: &OracleOptions,
) -> Vec<Result<OracleResult>> {
    seeds
        .par_iter()
        .map(|&s| {
            let init = GridGraphon::random_start(n, e, t, k, spread, s)?;
            maximize_entropy(&init, e, t, k, &OracleOptions { seed: s, ..opts.clone() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `n^-1 sum (d_i - e)^2`.
    pub degree_variance: f64,
    /// `n^-2 sum V_{1-2e}(W_ij - e)`.
    pub ideal_value_mass: f64,
    /// `||W - e||^2 - lambda_1^2`.
    pub rank1_residual: f64,
    /// Fraction of vertices in the small pode.
    pub pode_fraction: f64,
    /// RMS distance from `W` to its block averages over the two podes.
    pub bipodality_residual: f64,
    /// `||W - e||^2` (squared Hilbert-Schmidt norm of the operator).
    pub dg_norm_sq: f64,
}

/// Largest `lambda^2` of the operator with kernel `m / n` by power iteration
/// on its square, started from the normalized all-ones vector. Returns the
/// eigenvalue and the final iterate.
fn dominant_sq(m: &[f64], n: usize, tol: f64) -> (f64, Vec<f64>) {
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v) / n as f64).collect()
    };
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lam = 0.0;
    for _ in 0..100_000 {
        let u = apply(&apply(&v));
        let norm = dot(&u, &u).sqrt();
        if norm == 0.0 {
            return (0.0, v);
        }
        let next = dot(&v, &u);
        v = u.iter().map(|x| x / norm).collect();
        if (next - lam).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            return (next, v);
        }
        lam = next;
    }
    (lam, v)
}

/// Two-pode split by the row-distance rule: `x` joins the small pode when,
/// measured on the small pode, its row is at least as close to `1 - e` as to
/// `e`. Starts from the dominant eigenvector and iterates to a fixed point.
fn extract_podes(w: &GridGraphon, e: f64, eigvec: &[f64]) -> Vec<bool> {
    let n = w.n;
    let mut small: Vec<bool> = eigvec.iter().map(|&x| x > 0.0).collect();
    if small.iter().filter(|&&s| s).count() * 2 > n {
        small.iter_mut().for_each(|s| *s = !*s);
    }
    for _ in 0..100 {
        if !small.iter().any(|&s| s) {
            break;
        }
        let next: Vec<bool> = (0..n)
            .map(|i| {
                let score: f64 = (0..n)
                    .filter(|&j| small[j])
                    .map(|j| {
                        let x = w.get(i, j);
                        (x - (1.0 - e)).powi(2) - (x - e).powi(2)
                    })
                    .sum();
                score <= 0.0
            })
            .collect();
        if next == small {
            break;
        }
        small = next;
    }
    small
}

pub fn diagnostics(w: &GridGraphon, e: f64) -> Result<Diagnostics> {
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::domain(format!("diagnostics need 0 < e < 1, got {e}")));
    }
    let n = w.n;
    let nf = n as f64;
    let degree_variance = w.degrees().iter().map(|d| (d - e).powi(2)).sum::<f64>() / nf;
    let dg: Vec<f64> = w.values.iter().map(|v| v - e).collect();
    let ideal_value_mass = dg.iter().map(|&x| mass_distance(x, 1.0 - 2.0 * e)).sum::<f64>() / (nf * nf);
    let dg_norm_sq = dot(&dg, &dg) / (nf * nf);
    let (l1sq, eigvec) = dominant_sq(&dg, n, 1e-10);
    let rank1_residual = (dg_norm_sq - l1sq).max(0.0);

    let small = extract_podes(w, e, &eigvec);
    let m = small.iter().filter(|&&s| s).count();
    let pode_fraction = m as f64 / nf;
    let mut sums = [[0.0; 2]; 2];
    let mut counts = [[0usize; 2]; 2];
    for i in 0..n {
        for j in 0..n {
            let (p, q) = (small[i] as usize, small[j] as usize);
            sums[p][q] += w.get(i, j);
            counts[p][q] += 1;
        }
    }
    let mut sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (p, q) = (small[i] as usize, small[j] as usize);
            let avg = sums[p][q] / counts[p][q] as f64;
            sq += (w.get(i, j) - avg).powi(2);
        }
    }
    Ok(Diagnostics {
        degree_variance,
        ideal_value_mass,
        rank1_residual,
        pode_fraction,
        bipodality_residual: (sq / (nf * nf)).sqrt(),
        dg_norm_sq,
    })
}
