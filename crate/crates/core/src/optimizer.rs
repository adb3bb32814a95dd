//! Entropy maximization over bipodal graphons at fixed edge and cycle density.
//!
//! The constraints are eliminated exactly by [`crate::bipodal`], which leaves
//! a smooth function of two free coordinates. It is maximized by the damped
//! fixed-matrix iteration `x <- x - damping * M0^-1 grad S(x)`, with `M0` the
//! closed-form model Hessian and the gradient taken by central differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipodal::{
    perturb_above, perturb_below, AboveCoords, BelowCoords, BipodalGraphon, OddCycle, Perturbation, ValidityRegion,
};
use crate::error::{Error, Result};
use crate::scalar::{h, h1, h2, nu, solve_a0, Probability};

/// `|t - e^k|` below which the target is treated as lying on the curve.
pub const BOUNDARY_TOL: f64 = 1e-14;

/// Smallest damping tried before a step is declared impossible.
const MIN_DAMPING: f64 = 1.0 / 1024.0 / 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Below,
    Above,
    Boundary,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Below => "below",
            Regime::Above => "above",
            Regime::Boundary => "boundary",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coords {
    Below(BelowCoords),
    Above(AboveCoords),
    Boundary { e: f64 },
}

impl Coords {
    pub fn regime(&self) -> Regime {
        match self {
            Coords::Below(_) => Regime::Below,
            Coords::Above(_) => Regime::Above,
            Coords::Boundary { .. } => Regime::Boundary,
        }
    }

    pub fn e(&self) -> f64 {
        match *self {
            Coords::Below(c) => c.e,
            Coords::Above(c) => c.e,
            Coords::Boundary { e } => e,
        }
    }

    /// `delta` below the curve, `dtau` above, zero on it.
    pub fn scale(&self) -> f64 {
        match *self {
            Coords::Below(c) => c.delta,
            Coords::Above(c) => c.dtau,
            Coords::Boundary { .. } => 0.0,
        }
    }

    /// The two free coordinates: `(a, mu)` below, `(a, d)` above.
    pub fn free(&self) -> [f64; 2] {
        match *self {
            Coords::Below(c) => [c.a, c.mu],
            Coords::Above(c) => [c.a, c.d],
            Coords::Boundary { e } => [e, e],
        }
    }

    pub fn with_free(&self, x: [f64; 2]) -> Coords {
        match *self {
            Coords::Below(c) => Coords::Below(BelowCoords { a: x[0], mu: x[1], ..c }),
            Coords::Above(c) => Coords::Above(AboveCoords { a: x[0], d: x[1], ..c }),
            b @ Coords::Boundary { .. } => b,
        }
    }

    /// Target cycle density.
    pub fn target(&self, k: OddCycle) -> f64 {
        let ek = self.e().powi(k.get() as i32);
        match *self {
            Coords::Below(c) => ek - c.delta.powi(k.get() as i32),
            Coords::Above(c) => ek + c.dtau,
            Coords::Boundary { .. } => ek,
        }
    }

    /// Exact assembly in deviation form.
    pub fn perturbation(&self, k: OddCycle) -> Result<Perturbation> {
        match self {
            Coords::Below(c) => perturb_below(c, k),
            Coords::Above(c) => perturb_above(c, k),
            Coords::Boundary { e } => Ok(Perturbation { e: *e, c: 0.5, da: 0.0, db: 0.0, dd: 0.0, exact_edge: true }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Gradient-norm tolerance.
    pub tol_grad: f64,
    /// Tolerance on the scaled Newton step; both tolerances must be met.
    pub tol_step: f64,
    pub max_iter: usize,
    /// Relative finite-difference step.
    pub fd_step_rel: f64,
    /// Initial step multiplier in (0, 1], halved while the entropy decreases.
    pub damping: f64,
    pub region: ValidityRegion,
    /// Replace the fixed matrix by a finite-difference Hessian after this many
    /// iterations without convergence (and again every as many); 0 keeps the
    /// closed-form model throughout.
    pub refresh_every: usize,
    /// Return an unconverged report instead of an error when `max_iter` runs out.
    pub allow_unconverged: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_grad: 1e-10,
            tol_step: 1e-10,
            max_iter: 200,
            fd_step_rel: 1e-5,
            damping: 1.0,
            region: ValidityRegion::default(),
            refresh_every: 25,
            allow_unconverged: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_grad > 0.0) || !(self.tol_step > 0.0) {
            return Err(Error::domain("tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be at least 1"));
        }
        if !(self.fd_step_rel > 0.0 && self.fd_step_rel < 0.1) {
            return Err(Error::domain("fd_step_rel must lie in (0, 0.1)"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::domain("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub e: f64,
    pub tau: f64,
    pub k: OddCycle,
    pub regime: Regime,
    pub graphon: BipodalGraphon,
    pub coords: Coords,
    pub mu: f64,
    pub entropy: f64,
    /// `entropy - H(e)`, carried separately at full relative precision.
    pub entropy_excess: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_eps: f64,
    pub residual_tau: f64,
}

/// Model Hessian in the free coordinates. Above the curve `h_am` and `h_mm`
/// stand for the `(a, d)` and `(d, d)` entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelHessian {
    pub h_aa: f64,
    pub h_am: f64,
    pub h_mm: f64,
}

impl ModelHessian {
    pub fn det(&self) -> f64 {
        self.h_aa * self.h_mm - self.h_am * self.h_am
    }

    pub fn is_negative_definite(&self) -> bool {
        self.h_aa < 0.0 && self.det() > 0.0
    }

    fn checked(self) -> Result<Self> {
        if self.is_negative_definite() {
            Ok(self)
        } else {
            Err(Error::NotNegativeDefinite { h_aa: self.h_aa, h_am: self.h_am, h_mm: self.h_mm })
        }
    }

    /// `M^-1 g`.
    pub fn solve(&self, g: [f64; 2]) -> [f64; 2] {
        let det = self.det();
        [(self.h_mm * g[0] - self.h_am * g[1]) / det, (self.h_aa * g[1] - self.h_am * g[0]) / det]
    }
}

fn check_below_e(e: f64) -> Result<f64> {
    if !(e > 0.5 && e < 1.0) {
        return Err(Error::domain(format!("below the curve e must lie in (1/2, 1), got {e}")));
    }
    Ok(e)
}

fn check_above_e(e: f64) -> Result<f64> {
    let e = Probability::new(e)?.value();
    if e <= 0.0 || e >= 1.0 || e == 0.5 {
        return Err(Error::domain(format!("above the curve e must lie in (0, 1) minus 1/2, got {e}")));
    }
    Ok(e)
}

fn check_scale(name: &str, s: f64) -> Result<f64> {
    if s > 0.0 && s.is_finite() {
        Ok(s)
    } else {
        Err(Error::domain(format!("{name} must be positive, got {s}")))
    }
}

/// Series starting point below the curve.
pub fn initialize_below(e: f64, delta: f64, k: OddCycle) -> Result<BelowCoords> {
    let e = check_below_e(e)?;
    let delta = check_scale("delta", delta)?;
    let km = k.get() as i32;
    let mu = nu(e) * delta.powi(km - 1) / (e.powi(km - 2) * h1(e));
    Ok(BelowCoords { e, delta, a: 1.0 - e - delta, mu })
}

/// Series starting point above the curve, `(a0(e), 1 - e)`.
pub fn initialize_above(e: f64, dtau: f64, _k: OddCycle) -> Result<AboveCoords> {
    let e = check_above_e(e)?;
    let dtau = check_scale("dtau", dtau)?;
    let a = solve_a0(Probability::new(e)?)?;
    Ok(AboveCoords { e, dtau, a, d: 1.0 - e })
}

/// Closed-form model of the reduced Hessian at the optimum.
pub fn model_hessian(regime: Regime, e: f64, scale: f64, k: OddCycle) -> Result<ModelHessian> {
    let km = k.get() as i32;
    let m = match regime {
        Regime::Below => {
            check_below_e(e)?;
            let g = 2.0 * e - 1.0;
            let h_aa = scale * scale / (g * g) * (h2(e) - 2.0 * h1(e) / g);
            let h_mm = 4.0 * e.powi(km - 2) * h1(e) * scale.powi(3 - km) / (g * g);
            ModelHessian { h_aa, h_am: 0.0, h_mm }
        }
        Regime::Above => {
            check_above_e(e)?;
            let g = 1.0 - 2.0 * e;
            let c = scale / (k.get() as f64 * e.powi(km - 2) * g * g);
            let a0 = solve_a0(Probability::new(e)?)?;
            ModelHessian {
                h_aa: c * c * h2(a0),
                h_am: 4.0 * c * c * (1.0 - e) * h1(e) / (e * g),
                h_mm: 2.0 * c * (h2(e) + 2.0 * h1(e) / g),
            }
        }
        Regime::Boundary => return Err(Error::domain("no model Hessian on the curve")),
    };
    m.checked()
}

fn region_check(co: &Coords, p: &Perturbation, k: OddCycle, region: &ValidityRegion) -> Result<()> {
    match co {
        Coords::Below(b) => region.check_below(p, b.delta, k),
        Coords::Above(_) => region.check_above(p),
        Coords::Boundary { .. } => Ok(()),
    }
}

/// Natural scale of each free coordinate. Below the curve the `mu` direction
/// turns nonlinear at `|mu| ~ delta^((k-1)/2)`.
fn coord_scales(co: &Coords, k: OddCycle) -> [f64; 2] {
    match *co {
        Coords::Below(b) => [b.delta, b.delta.powf(0.5 * (k.get() - 1) as f64)],
        _ => [co.scale(); 2],
    }
}

fn fd_steps(co: &Coords, k: OddCycle, rel: f64) -> [f64; 2] {
    let s = coord_scales(co, k);
    let x = co.free();
    [rel * x[0].abs().max(s[0]), rel * x[1].abs().max(s[1])]
}

fn excess_at(co: &Coords, x: [f64; 2], k: OddCycle) -> Result<f64> {
    Ok(co.with_free(x).perturbation(k)?.entropy_excess())
}

/// Central-difference gradient of the entropy excess.
fn gradient(co: &Coords, k: OddCycle, rel: f64) -> Result<[f64; 2]> {
    let x = co.free();
    let hs = fd_steps(co, k, rel);
    let mut g = [0.0; 2];
    for i in 0..2 {
        let (mut xp, mut xm) = (x, x);
        xp[i] += hs[i];
        xm[i] -= hs[i];
        g[i] = (excess_at(co, xp, k)? - excess_at(co, xm, k)?) / (xp[i] - xm[i]);
    }
    Ok(g)
}

/// Entropy and its gradient in the free coordinates, through exact assembly.
pub fn reduced_entropy_and_grad(co: &Coords, k: OddCycle, opts: &SolveOptions) -> Result<(f64, [f64; 2])> {
    let p = co.perturbation(k)?;
    let g = gradient(co, k, opts.fd_step_rel)?;
    Ok((h(co.e()) + p.entropy_excess(), g))
}

/// Finite-difference Hessian of the entropy in the free coordinates, using
/// steps `rel * max(|x_i|, scale)`.
pub fn fd_hessian(co: &Coords, k: OddCycle, rel: f64) -> Result<ModelHessian> {
    let x = co.free();
    let hs = fd_steps(co, k, rel);
    let f = |dx: [f64; 2]| excess_at(co, [x[0] + dx[0], x[1] + dx[1]], k);
    let f0 = f([0.0, 0.0])?;
    let second = |i: usize| -> Result<f64> {
        let mut d = [0.0; 2];
        d[i] = hs[i];
        let fp = f(d)?;
        d[i] = -hs[i];
        let fm = f(d)?;
        Ok((fp - 2.0 * f0 + fm) / (hs[i] * hs[i]))
    };
    let h_aa = second(0)?;
    let h_mm = second(1)?;
    let (a, b) = (hs[0], hs[1]);
    let h_am = (f([a, b])? - f([a, -b])? - f([-a, b])? + f([-a, -b])?) / (4.0 * a * b);
    Ok(ModelHessian { h_aa, h_am, h_mm })
}

fn step_size(co: &Coords, k: OddCycle, step: [f64; 2]) -> f64 {
    let x = co.free();
    let s = coord_scales(co, k);
    (step[0] / x[0].abs().max(s[0])).hypot(step[1] / x[1].abs().max(s[1]))
}

/// Finite-difference resolution of the gradient: central differences of a
/// value known to a few ulps.
fn gradient_floor(co: &Coords, k: OddCycle, s: f64, rel: f64) -> [f64; 2] {
    let hs = fd_steps(co, k, rel);
    [4.0 * f64::EPSILON * s.abs() / hs[0], 4.0 * f64::EPSILON * s.abs() / hs[1]]
}

fn norm(g: [f64; 2]) -> f64 {
    g[0].hypot(g[1])
}

fn report(co: Coords, k: OddCycle, p: &Perturbation, grad_norm: f64, iterations: usize, converged: bool) -> Result<SolverReport> {
    let e = co.e();
    let tau = co.target(k);
    let graphon = p.graphon()?;
    let excess = p.entropy_excess();
    Ok(SolverReport {
        e,
        tau,
        k,
        regime: co.regime(),
        graphon,
        coords: co,
        mu: match co {
            Coords::Below(b) => b.mu,
            _ => p.mu(),
        },
        entropy: h(e) + excess,
        entropy_excess: excess,
        grad_norm,
        iterations,
        converged,
        residual_eps: (graphon.edge_density() - e).abs(),
        residual_tau: (graphon.cycle_density(k) - tau).abs(),
    })
}

fn boundary_report(e: f64, k: OddCycle) -> Result<SolverReport> {
    let co = Coords::Boundary { e };
    let p = co.perturbation(k)?;
    report(co, k, &p, 0.0, 0, true)
}

/// Runs the fixed-matrix iteration from an explicit starting point.
pub fn solve_from(start: Coords, k: OddCycle, opts: &SolveOptions) -> Result<SolverReport> {
    opts.validate()?;
    let mut m0 = match start {
        Coords::Below(b) => model_hessian(Regime::Below, b.e, b.delta, k)?,
        Coords::Above(a) => model_hessian(Regime::Above, a.e, a.dtau, k)?,
        Coords::Boundary { e } => return boundary_report(e, k),
    };
    let mut co = start;
    let mut p = co.perturbation(k)?;
    region_check(&co, &p, k, &opts.region)?;
    let mut s = p.entropy_excess();
    let mut g = gradient(&co, k, opts.fd_step_rel)?;
    for it in 0..=opts.max_iter {
        let newton = m0.solve(g);
        let step = [-newton[0], -newton[1]];
        let gn = norm(g);
        let scaled = step_size(&co, k, step);
        let floor = gradient_floor(&co, k, s, opts.fd_step_rel);
        let noise = step_size(&co, k, [floor[0] / m0.h_aa.abs(), floor[1] / m0.h_mm.abs()]);
        log::debug!("iter {it}: S-H(e)={s:.17e} |grad|={gn:.3e} step={scaled:.3e} noise={noise:.3e}");
        if gn <= opts.tol_grad.max(norm(floor)) && scaled <= opts.tol_step.max(noise) {
            return report(co, k, &p, gn, it, true);
        }
        if it == opts.max_iter {
            break;
        }
        if opts.refresh_every > 0 && it > 0 && it % opts.refresh_every == 0 {
            match fd_hessian(&co, k, 1e-3) {
                Ok(m) if m.is_negative_definite() => {
                    log::info!("iter {it}: refreshing fixed matrix {m0:?} -> {m:?}");
                    m0 = m;
                    continue;
                }
                _ => log::info!("iter {it}: finite-difference Hessian unusable, keeping {m0:?}"),
            }
        }
        let x = co.free();
        let slack = 1e-13 * s.abs();
        let mut lam = opts.damping;
        let mut last_err = None;
        loop {
            let trial = co.with_free([x[0] + lam * step[0], x[1] + lam * step[1]]);
            let attempt = trial.perturbation(k).and_then(|tp| {
                region_check(&trial, &tp, k, &opts.region)?;
                Ok(tp)
            });
            match attempt {
                Ok(tp) if tp.entropy_excess() >= s - slack => {
                    co = trial;
                    p = tp;
                    s = tp.entropy_excess();
                    break;
                }
                Ok(_) => {}
                Err(err) => last_err = Some(err),
            }
            lam *= 0.5;
            if lam < MIN_DAMPING {
                return Err(last_err.unwrap_or(Error::MaxIterExceeded { iterations: it, grad_norm: gn }));
            }
        }
        g = gradient(&co, k, opts.fd_step_rel)?;
    }
    let gn = norm(g);
    if opts.allow_unconverged {
        report(co, k, &p, gn, opts.max_iter, false)
    } else {
        Err(Error::MaxIterExceeded { iterations: opts.max_iter, grad_norm: gn })
    }
}

/// Maximizes entropy below the curve at `tau = e^k - delta^k`.
pub fn solve_below(e: f64, delta: f64, k: OddCycle, opts: &SolveOptions) -> Result<SolverReport> {
    solve_from(Coords::Below(initialize_below(e, delta, k)?), k, opts)
}

/// Maximizes entropy above the curve at `tau = e^k + dtau`.
pub fn solve_above(e: f64, dtau: f64, k: OddCycle, opts: &SolveOptions) -> Result<SolverReport> {
    solve_from(Coords::Above(initialize_above(e, dtau, k)?), k, opts)
}

/// Maximizes entropy at `(e, t)`, choosing the regime from the sign of `t - e^k`.
pub fn solve(e: f64, t: f64, k: OddCycle, opts: &SolveOptions) -> Result<SolverReport> {
    let e = Probability::new(e)?.value();
    if !t.is_finite() {
        return Err(Error::domain(format!("target density t={t} is not finite")));
    }
    let diff = t - e.powi(k.get() as i32);
    if diff.abs() < BOUNDARY_TOL {
        return boundary_report(e, k);
    }
    if diff < 0.0 {
        solve_below(e, (-diff).powf(1.0 / k.get() as f64), k, opts)
    } else {
        solve_above(e, diff, k, opts)
    }
}

/// Solves every target in parallel; results keep the input order.
pub fn sweep(e: f64, t_values: &[f64], k: OddCycle, opts: &SolveOptions) -> Vec<Result<SolverReport>> {
    t_values.par_iter().map(|&t| solve(e, t, k, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(n: u32) -> OddCycle {
        OddCycle::new(n).unwrap()
    }

    #[test]
    fn below_initialization() {
        let co = initialize_below(0.75, 0.01, k(3)).unwrap();
        assert!((co.a - 0.24).abs() < 1e-15);
        assert!((co.mu + 2.8487e-5).abs() < 1e-9, "mu={}", co.mu);
        let co = initialize_below(0.75, 0.1, k(5)).unwrap();
        let expected = nu(0.75) * 1e-4 / (0.75f64.powi(3) * h1(0.75));
        assert!((co.mu - expected).abs() < 1e-18);
        assert!((co.mu + 5.0644e-5).abs() < 1e-8);
        assert!(initialize_below(0.5, 0.01, k(3)).is_err());
        assert!(initialize_below(0.4, 0.01, k(3)).is_err());
    }

    #[test]
    fn above_initialization() {
        let co = initialize_above(0.6, 1e-3, k(3)).unwrap();
        assert!((co.a - 0.27967279043988031).abs() < 1e-12);
        assert!((co.d - 0.4).abs() < 1e-15);
        assert!(initialize_above(0.5, 1e-3, k(3)).is_err());
        assert!(initialize_above(0.5 + 1e-9, 1e-3, k(3)).is_ok());
        let co = initialize_above(0.75, 1e-3, k(3)).unwrap();
        assert!((h1(co.a) - (1.0 - 8.0 / 3.0) * h1(0.75)).abs() < 1e-12);
    }

    #[test]
    fn model_hessians() {
        let m = model_hessian(Regime::Below, 0.75, 0.01, k(3)).unwrap();
        assert!((m.h_aa + 3.7555e-4).abs() < 1e-8);
        assert!((m.h_mm + 13.1833).abs() < 1e-3, "h_mm={}", m.h_mm);
        assert_eq!(m.h_am, 0.0);
        let m5 = model_hessian(Regime::Below, 0.75, 0.01, k(5)).unwrap();
        assert_eq!(m5.h_aa, m.h_aa);
        assert!((m5.h_mm / m.h_mm - 0.75f64.powi(2) * 1e4).abs() < 1e-6);
        let m = model_hessian(Regime::Above, 0.75, 1e-3, k(3)).unwrap();
        assert!((m.h_mm + 3.3383e-3).abs() < 1e-7, "h_dd={}", m.h_mm);
        assert!(model_hessian(Regime::Above, 0.5, 1e-3, k(3)).is_err());
    }

    #[test]
    fn boundary_target_returns_constant_graphon() {
        let r = solve(0.75, 0.421875, k(3), &SolveOptions::default()).unwrap();
        assert_eq!(r.regime, Regime::Boundary);
        assert!((r.entropy - h(0.75)).abs() < 1e-16);
        assert_eq!(r.graphon.a(), 0.75);
    }

    #[test]
    fn solves_below_the_curve() {
        let r = solve_below(0.75, 0.01, k(3), &SolveOptions::default()).unwrap();
        assert!(r.converged);
        // 40-digit reference optimum
        assert!((r.graphon.a() - 0.24027210564306429479).abs() < 1e-9, "a={}", r.graphon.a());
        assert!((r.graphon.c() - 0.019243169116817883898).abs() < 1e-11);
        assert!((r.mu + 2.9042619599857582674e-5).abs() < 1e-11);
        assert!((r.entropy - 0.56211352952504426143).abs() < 1e-15);
        assert!(r.residual_eps <= 1e-12 && r.residual_tau <= 1e-12);
    }

    #[test]
    fn solves_above_the_curve() {
        let r = solve_above(0.75, 1e-3, k(3), &SolveOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.entropy - 0.5603812887356214).abs() < 1e-13, "S={}", r.entropy);
        assert!(r.residual_eps <= 1e-12 && r.residual_tau <= 1e-12);
    }

    #[test]
    fn gradient_sign_breaks_mu_symmetry() {
        let opts = SolveOptions::default();
        let plus = Coords::Below(BelowCoords { e: 0.75, delta: 0.01, a: 0.24, mu: 2.9e-5 });
        let minus = Coords::Below(BelowCoords { e: 0.75, delta: 0.01, a: 0.24, mu: -2.9e-5 });
        let (sp, _) = reduced_entropy_and_grad(&plus, k(3), &opts).unwrap();
        let (sm, _) = reduced_entropy_and_grad(&minus, k(3), &opts).unwrap();
        assert!(sm > sp);
    }

    #[test]
    fn gradient_matches_fourth_order_stencil() {
        let co = Coords::Below(BelowCoords { e: 0.75, delta: 0.02, a: 0.23, mu: -1e-4 });
        let (_, g) = reduced_entropy_and_grad(&co, k(3), &SolveOptions::default()).unwrap();
        let x = co.free();
        for i in 0..2 {
            let hstep = 1e-3 * x[i].abs().max(0.02);
            let f = |t: f64| {
                let mut y = x;
                y[i] += t;
                excess_at(&co, y, k(3)).unwrap()
            };
            let g4 = (-f(2.0 * hstep) + 8.0 * f(hstep) - 8.0 * f(-hstep) + f(-2.0 * hstep)) / (12.0 * hstep);
            assert!((g[i] - g4).abs() <= 1e-6 * g4.abs(), "i={i} fd={} g4={g4}", g[i]);
        }
    }

    #[test]
    fn sweep_keeps_order_and_reports_failures_inline() {
        let ts = [0.42, 0.421875, 0.4225, 0.9];
        let out = sweep(0.75, &ts, k(3), &SolveOptions::default());
        assert_eq!(out.len(), 4);
        assert_eq!(out[0].as_ref().unwrap().regime, Regime::Below);
        assert_eq!(out[1].as_ref().unwrap().regime, Regime::Boundary);
        assert_eq!(out[2].as_ref().unwrap().regime, Regime::Above);
        assert!(out[3].is_err());
    }
}
