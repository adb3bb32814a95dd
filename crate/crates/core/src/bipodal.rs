//! Bipodal step graphons, their densities and entropy, and exact constraint
//! elimination in the two local coordinate systems.
//!
//! Near the constant graphon every quantity of interest is a small difference
//! of O(1) numbers. The [`Perturbation`] type therefore stores deviations from
//! the constant value `e` and evaluates edge, cycle and entropy excesses
//! directly, which keeps relative precision all the way down to tiny scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;
use crate::scalar::{h, h_shift};

/// Smallest and largest pode size searched when solving for `c`.
pub const C_FLOOR: f64 = 1e-14;
pub const C_CEIL: f64 = 0.49;

/// Odd cycle length `k >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct OddCycle(u32);

impl OddCycle {
    pub const TRIANGLE: OddCycle = OddCycle(3);

    pub fn new(k: u32) -> Result<Self> {
        if k >= 3 && k % 2 == 1 {
            Ok(OddCycle(k))
        } else {
            Err(Error::InvalidCycleLength(k))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub(crate) fn exp(self) -> i32 {
        self.0 as i32
    }
}

impl TryFrom<u32> for OddCycle {
    type Error = Error;
    fn try_from(k: u32) -> Result<Self> {
        OddCycle::new(k)
    }
}

impl From<OddCycle> for u32 {
    fn from(k: OddCycle) -> u32 {
        k.0
    }
}

impl std::fmt::Display for OddCycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Two-pode step graphon: value `a` on C1 x C1, `b` on C2 x C2, `d` across,
/// with |C1| = c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraphon")]
pub struct BipodalGraphon {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

#[derive(Deserialize)]
struct RawGraphon {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl TryFrom<RawGraphon> for BipodalGraphon {
    type Error = Error;
    fn try_from(r: RawGraphon) -> Result<Self> {
        BipodalGraphon::new(r.a, r.b, r.c, r.d)
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(format!("{name}={v} not in [0,1]")))
    }
}

impl BipodalGraphon {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        unit("a", a)?;
        unit("b", b)?;
        unit("d", d)?;
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::domain(format!("pode size c={c} not in (0,1)")));
        }
        Ok(BipodalGraphon { a, b, c, d })
    }

    /// The constant graphon `p`, written with two equal podes.
    pub fn constant(p: f64) -> Result<Self> {
        BipodalGraphon::new(p, p, 0.5, p)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Relabels the podes so that `c <= 1/2`.
    pub fn canonical(self) -> Self {
        if self.c > 0.5 {
            BipodalGraphon { a: self.b, b: self.a, c: 1.0 - self.c, d: self.d }
        } else {
            self
        }
    }

    /// Value of the graphon at `(x, y)`.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        match (x < self.c, y < self.c) {
            (true, true) => self.a,
            (false, false) => self.b,
            _ => self.d,
        }
    }

    pub fn edge_density(&self) -> f64 {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        c * c * a + 2.0 * c * (1.0 - c) * d + (1.0 - c) * (1.0 - c) * b
    }

    /// Homomorphism density of the k-cycle, `lambda1^k + lambda2^k`.
    pub fn cycle_density(&self, k: OddCycle) -> f64 {
        let s = self.spectrum();
        s.lambda1.powi(k.exp()) + s.lambda2.powi(k.exp())
    }

    /// Triangle density from the block polynomial.
    pub fn triangle_density_direct(&self) -> f64 {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let c1 = 1.0 - c;
        c.powi(3) * a.powi(3) + 3.0 * c * c * c1 * a * d * d + 3.0 * c * c1 * c1 * b * d * d + c1.powi(3) * b.powi(3)
    }

    /// Eigenvalues of the reduced 2x2 operator.
    pub fn spectrum(&self) -> SpectralPair {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let m11 = a * c;
        let m22 = b * (1.0 - c);
        let m12 = d * (c * (1.0 - c)).sqrt();
        SpectralPair::of_symmetric(m11, m12, m22)
    }

    pub fn entropy(&self) -> f64 {
        let c = self.c;
        c * c * h(self.a) + 2.0 * c * (1.0 - c) * h(self.d) + (1.0 - c) * (1.0 - c) * h(self.b)
    }

    /// The two values `(d1, d2)` of the degree function.
    pub fn degree_split(&self) -> (f64, f64) {
        let c = self.c;
        (c * self.a + (1.0 - c) * self.d, c * self.d + (1.0 - c) * self.b)
    }

    /// `int (deg(x) - e)^2 dx`.
    pub fn degree_variance(&self) -> f64 {
        let e = self.edge_density();
        let (d1, d2) = self.degree_split();
        self.c * (d1 - e).powi(2) + (1.0 - self.c) * (d2 - e).powi(2)
    }
}

/// Eigenvalues of a symmetric 2x2 operator, `lambda1 >= lambda2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl SpectralPair {
    fn of_symmetric(m11: f64, m12: f64, m22: f64) -> Self {
        let mid = 0.5 * (m11 + m22);
        let rad = (0.5 * (m11 - m22)).hypot(m12);
        let det = m11 * m22 - m12 * m12;
        // The root of larger magnitude is computed directly, the other via det.
        if mid >= 0.0 {
            let l1 = mid + rad;
            let l2 = if l1 != 0.0 { det / l1 } else { 0.0 };
            SpectralPair { lambda1: l1, lambda2: l2 }
        } else {
            let l2 = mid - rad;
            let l1 = det / l2;
            SpectralPair { lambda1: l1, lambda2: l2 }
        }
    }
}

/// Below-curve coordinates: `tau = e^k - delta^k`, free `(a, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BelowCoords {
    pub e: f64,
    pub delta: f64,
    pub a: f64,
    pub mu: f64,
}

/// Above-curve coordinates: `tau = e^k + dtau`, free `(a, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AboveCoords {
    pub e: f64,
    pub dtau: f64,
    pub a: f64,
    pub d: f64,
}

/// A bipodal graphon stored as deviations from the constant value `e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub e: f64,
    pub c: f64,
    pub da: f64,
    pub db: f64,
    pub dd: f64,
    /// Set when `db` was eliminated from the edge constraint, so the edge
    /// excess is exactly zero and need not be recomputed by cancellation.
    pub exact_edge: bool,
}

impl Perturbation {
    pub fn from_graphon(g: &BipodalGraphon, e: f64) -> Self {
        Perturbation { e, c: g.c, da: g.a - e, db: g.b - e, dd: g.d - e, exact_edge: false }
    }

    /// Below-curve family: `dd` and `db` follow from `(c, da, mu)` so that the
    /// edge density is exactly `e`.
    pub fn below(e: f64, c: f64, da: f64, mu: f64) -> Self {
        let x = c * da / (1.0 - c);
        Perturbation { e, c, da, dd: mu - x, db: c / (1.0 - c) * (x - 2.0 * mu), exact_edge: true }
    }

    /// Above-curve family: `db` follows from `(c, da, dd)`.
    pub fn above(e: f64, c: f64, da: f64, dd: f64) -> Self {
        let r = c / (1.0 - c);
        Perturbation { e, c, da, dd, db: -r * r * da - 2.0 * r * dd, exact_edge: true }
    }

    pub fn graphon(&self) -> Result<BipodalGraphon> {
        BipodalGraphon::new(self.e + self.da, self.e + self.db, self.c, self.e + self.dd)
    }

    fn check_unit(&self) -> Result<()> {
        unit("a", self.e + self.da)?;
        unit("b", self.e + self.db)?;
        unit("d", self.e + self.dd)
    }

    /// Operator entries in the basis `u = (sqrt c, sqrt(1-c))`,
    /// `w = (sqrt(1-c), -sqrt c)`: returns `(E, q, r)` with the operator equal
    /// to `[[e + E, r], [r, q]]`.
    fn rotated(&self) -> (f64, f64, f64) {
        let c = self.c;
        let c1 = 1.0 - c;
        if self.exact_edge {
            let x = c * self.da / c1;
            let q = c * (self.da * (1.0 - 2.0 * c) / c1 - 2.0 * self.dd);
            return (0.0, q, (c * c1).sqrt() * (x + self.dd));
        }
        let big_e = c * c * self.da + 2.0 * c * c1 * self.dd + c1 * c1 * self.db;
        let q = c * c1 * (self.da + self.db - 2.0 * self.dd);
        let r = (c * c1).sqrt() * (c * self.da + (1.0 - 2.0 * c) * self.dd - c1 * self.db);
        (big_e, q, r)
    }

    pub fn edge_excess(&self) -> f64 {
        self.rotated().0
    }

    /// `lambda1 - e` and `lambda2`.
    pub fn shifted_spectrum(&self) -> (f64, f64) {
        let (big_e, q, r) = self.rotated();
        let p = self.e + big_e;
        let half = 0.5 * (p - q);
        if half > 0.0 {
            let s = r * r / (half + half.hypot(r));
            (big_e + s, q - s)
        } else {
            let mid = 0.5 * (p + q);
            let rad = half.hypot(r);
            (mid + rad - self.e, mid - rad)
        }
    }

    /// `tau_k - e^k`, evaluated without cancellation.
    pub fn cycle_excess(&self, k: OddCycle) -> f64 {
        let (l1e, l2) = self.shifted_spectrum();
        let kf = k.get() as f64;
        let ek = self.e.powi(k.exp());
        ek * (kf * (l1e / self.e).ln_1p()).exp_m1() + l2.powi(k.exp())
    }

    /// `S - H(e)`, evaluated without cancellation.
    pub fn entropy_excess(&self) -> f64 {
        let c = self.c;
        let c1 = 1.0 - c;
        c * c * h_shift(self.e, self.da) + 2.0 * c * c1 * h_shift(self.e, self.dd) + c1 * c1 * h_shift(self.e, self.db)
    }

    /// Degree deviations `(d1 - e, d2 - e)`.
    pub fn degree_excess(&self) -> (f64, f64) {
        let c = self.c;
        (c * self.da + (1.0 - c) * self.dd, c * self.dd + (1.0 - c) * self.db)
    }

    /// `c dA/(1-c) + dD`.
    pub fn mu(&self) -> f64 {
        self.c * self.da / (1.0 - self.c) + self.dd
    }
}

/// Series seed for the pode size below the curve.
pub fn seed_c_below(co: &BelowCoords, k: OddCycle) -> f64 {
    let da = co.a - co.e;
    let (delta, mu) = (co.delta, co.mu);
    let km = k.exp();
    let num = delta + (co.e.powi(km - 2) * mu * mu * delta.powi(2 - km) - 2.0 * mu * delta) / (-da);
    let s = num / (delta - da);
    if s.is_finite() && s > 0.0 {
        s
    } else {
        delta / (delta - da)
    }
}

/// Series seed for the pode size above the curve.
pub fn seed_c_above(co: &AboveCoords, k: OddCycle) -> f64 {
    let dd = co.d - co.e;
    co.dtau / (k.get() as f64 * co.e.powi(k.exp() - 2) * dd * dd)
}

fn check_e(e: f64) -> Result<()> {
    if e > 0.0 && e < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("edge density e={e} not in (0,1)")))
    }
}

/// Deviation form of [`assemble_below`].
pub fn perturb_below(co: &BelowCoords, k: OddCycle) -> Result<Perturbation> {
    check_e(co.e)?;
    if !(co.delta > 0.0 && co.delta.is_finite()) {
        return Err(Error::domain(format!("delta={} must be positive", co.delta)));
    }
    let da = co.a - co.e;
    if !(da < 0.0) {
        return Err(Error::domain(format!("below the curve a={} must be less than e={}", co.a, co.e)));
    }
    unit("a", co.a)?;
    let target = co.delta.powi(k.exp());
    let f = |c: f64| Perturbation::below(co.e, c, da, co.mu).cycle_excess(k) + target;
    let c = roots::root_near(f, seed_c_below(co, k), C_FLOOR, C_CEIL)?;
    let p = Perturbation::below(co.e, c, da, co.mu);
    p.check_unit()?;
    Ok(p)
}

/// Bipodal graphon with edge density `e` and k-cycle density `e^k - delta^k`.
pub fn assemble_below(co: &BelowCoords, k: OddCycle) -> Result<BipodalGraphon> {
    perturb_below(co, k)?.graphon()
}

/// Deviation form of [`assemble_above`].
pub fn perturb_above(co: &AboveCoords, k: OddCycle) -> Result<Perturbation> {
    check_e(co.e)?;
    if !(co.dtau > 0.0 && co.dtau.is_finite()) {
        return Err(Error::domain(format!("dtau={} must be positive", co.dtau)));
    }
    unit("a", co.a)?;
    unit("d", co.d)?;
    let (da, dd) = (co.a - co.e, co.d - co.e);
    if dd == 0.0 {
        return Err(Error::domain("above the curve d must differ from e"));
    }
    let f = |c: f64| Perturbation::above(co.e, c, da, dd).cycle_excess(k) - co.dtau;
    let c = roots::root_near(f, seed_c_above(co, k), C_FLOOR, C_CEIL)?;
    let p = Perturbation::above(co.e, c, da, dd);
    p.check_unit()?;
    Ok(p)
}

/// Bipodal graphon with edge density `e` and k-cycle density `e^k + dtau`.
pub fn assemble_above(co: &AboveCoords, k: OddCycle) -> Result<BipodalGraphon> {
    perturb_above(co, k)?.graphon()
}

/// Box around the expected optimum inside which solver iterates must stay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityRegion {
    /// Scale for `|b - e| < eta sqrt(delta)` (below) and `|b - e| < eta` (above).
    pub eta: f64,
    /// Upper bound on the pode size.
    pub c_max: f64,
    /// Upper bound on `|d - e|` below the curve.
    pub d_dev_max: f64,
    /// Below the curve, `|mu| <= mu_factor * delta^(k/2)`.
    pub mu_factor: f64,
}

impl Default for ValidityRegion {
    fn default() -> Self {
        ValidityRegion { eta: 0.1, c_max: 0.45, d_dev_max: 0.5, mu_factor: 1.0 }
    }
}

impl ValidityRegion {
    pub fn with_eta(eta: f64) -> Self {
        ValidityRegion { eta, ..Default::default() }
    }

    pub fn check_below(&self, p: &Perturbation, delta: f64, k: OddCycle) -> Result<()> {
        let fail = |m: String| Err(Error::RegionViolation(m));
        let gap = 2.0 * p.e - 1.0;
        if p.c > self.c_max {
            return fail(format!("c={} exceeds {}", p.c, self.c_max));
        }
        if p.da > -0.5 * gap {
            return fail(format!("a-e={} not below -(2e-1)/2", p.da));
        }
        if p.db.abs() >= self.eta * delta.sqrt() {
            return fail(format!("|b-e|={} not below eta*sqrt(delta)", p.db.abs()));
        }
        if p.dd.abs() >= self.d_dev_max {
            return fail(format!("|d-e|={} exceeds {}", p.dd.abs(), self.d_dev_max));
        }
        let mu = p.mu();
        let mu_max = self.mu_factor * delta.powf(k.get() as f64 / 2.0);
        if mu.abs() > mu_max {
            return fail(format!("|mu|={} exceeds {mu_max}", mu.abs()));
        }
        Ok(())
    }

    pub fn check_above(&self, p: &Perturbation) -> Result<()> {
        let fail = |m: String| Err(Error::RegionViolation(m));
        let gap = (1.0 - 2.0 * p.e).abs();
        if p.c > self.c_max {
            return fail(format!("c={} exceeds {}", p.c, self.c_max));
        }
        if p.dd.abs() < 0.5 * gap || p.dd.signum() == (2.0 * p.e - 1.0).signum() {
            return fail(format!("d-e={} not near 1-2e", p.dd));
        }
        if p.db.abs() >= self.eta {
            return fail(format!("|b-e|={} exceeds eta", p.db.abs()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k3() -> OddCycle {
        OddCycle::TRIANGLE
    }

    #[test]
    fn cycle_lengths() {
        assert!(OddCycle::new(3).is_ok());
        assert!(OddCycle::new(7).is_ok());
        assert_eq!(OddCycle::new(4), Err(Error::InvalidCycleLength(4)));
        assert_eq!(OddCycle::new(1), Err(Error::InvalidCycleLength(1)));
    }

    #[test]
    fn edge_density_examples() {
        let g = BipodalGraphon::new(1.0, 0.0, 0.5, 0.0).unwrap();
        assert_eq!(g.edge_density(), 0.25);
        let g = BipodalGraphon::new(0.0, 0.0, 0.5, 1.0).unwrap();
        assert_eq!(g.edge_density(), 0.5);
        let g = BipodalGraphon::new(0.3, 0.3, 0.17, 0.3).unwrap();
        assert!((g.edge_density() - 0.3).abs() < 1e-16);
    }

    #[test]
    fn bipartite_has_no_odd_cycles() {
        let g = BipodalGraphon::new(0.0, 0.0, 0.5, 1.0).unwrap();
        let s = g.spectrum();
        assert!((s.lambda1 - 0.5).abs() < 1e-15 && (s.lambda2 + 0.5).abs() < 1e-15);
        assert!(g.cycle_density(k3()).abs() < 1e-16);
    }

    #[test]
    fn constant_graphon() {
        let g = BipodalGraphon::constant(0.7).unwrap();
        let s = g.spectrum();
        assert!((s.lambda1 - 0.7).abs() < 1e-15 && s.lambda2.abs() < 1e-15);
        assert!((g.cycle_density(k3()) - 0.343).abs() < 1e-15);
        assert!((g.entropy() - 0.610864302054893463).abs() < 1e-15);
        assert_eq!(g.degree_split(), (0.7, 0.7));
        assert!(g.degree_variance() < 1e-30);
        assert_eq!(BipodalGraphon::new(0.0, 0.0, 0.3, 0.0).unwrap().entropy(), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(BipodalGraphon::new(1.1, 0.5, 0.5, 0.5), Err(Error::OutOfDomain(_))));
        assert!(matches!(BipodalGraphon::new(0.5, 0.5, 0.0, 0.5), Err(Error::Domain(_))));
        assert!(serde_json::from_str::<BipodalGraphon>(r#"{"a":0.5,"b":0.5,"c":1.5,"d":0.5}"#).is_err());
    }

    #[test]
    fn json_shape() {
        let g = BipodalGraphon::new(0.25, 0.75, 0.125, 0.5).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"a":0.25,"b":0.75,"c":0.125,"d":0.5}"#);
        assert_eq!(serde_json::from_str::<BipodalGraphon>(&s).unwrap(), g);
    }

    #[test]
    fn canonical_orientation() {
        let g = BipodalGraphon::new(0.1, 0.9, 0.8, 0.4).unwrap().canonical();
        assert_eq!((g.a(), g.b(), g.d()), (0.9, 0.1, 0.4));
        assert!((g.c() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn five_cycle_with_known_eigenvalues() {
        // mu = 0 makes the spectrum exactly (e, c dA/(1-c)).
        let co = BelowCoords { e: 0.75, delta: 0.1, a: 0.24, mu: 0.0 };
        let k5 = OddCycle::new(5).unwrap();
        let g = assemble_below(&co, k5).unwrap();
        let s = g.spectrum();
        assert!((s.lambda1 - 0.75).abs() < 1e-14);
        assert!((s.lambda2 + 0.1).abs() < 1e-14);
        assert!((g.cycle_density(k5) - (0.75f64.powi(5) - 1e-5)).abs() < 1e-14);
        assert!((g.cycle_density(k5) - 0.2372946875).abs() < 1e-12);
    }

    #[test]
    fn zero_mu_gives_exact_eigenvalue() {
        let co = BelowCoords { e: 0.75, delta: 0.01, a: 0.24, mu: 0.0 };
        let p = perturb_below(&co, k3()).unwrap();
        let x = p.c * p.da / (1.0 - p.c);
        assert!((x + 0.01).abs() < 1e-16);
    }

    #[test]
    fn below_assembly_matches_series_pode_size() {
        let co = BelowCoords { e: 0.75, delta: 0.01, a: 0.24, mu: -2.849e-5 };
        let g = assemble_below(&co, k3()).unwrap();
        // delta/(2e-1) - 2 delta^2/(2e-1)^2
        assert!((g.c() - 0.0192).abs() < 1e-4, "c={}", g.c());
        assert!((g.edge_density() - 0.75).abs() < 1e-12);
        assert!((g.cycle_density(k3()) - (0.421875 - 1e-6)).abs() < 1e-12);
    }

    #[test]
    fn above_assembly_matches_series_pode_size() {
        let a0 = crate::scalar::a0_closed_form(0.75);
        let co = AboveCoords { e: 0.75, dtau: 1e-3, a: a0, d: 0.25 };
        let g = assemble_above(&co, k3()).unwrap();
        let c1 = 1e-3 / (3.0 * 0.75 * 0.25);
        assert!((g.c() - c1).abs() < 1e-5, "c={}", g.c());
        assert!((g.edge_density() - 0.75).abs() < 1e-12);
        assert!((g.cycle_density(k3()) - (0.421875 + 1e-3)).abs() < 1e-12);
    }

    #[test]
    fn above_pode_vanishes_with_dtau() {
        let a0 = crate::scalar::a0_closed_form(0.75);
        let mut prev = 1.0;
        for dtau in [1e-3, 1e-5, 1e-7, 1e-9] {
            let g = assemble_above(&AboveCoords { e: 0.75, dtau, a: a0, d: 0.25 }, k3()).unwrap();
            assert!(g.c() < prev);
            prev = g.c();
        }
        assert!(prev < 1e-8);
    }

    #[test]
    fn degree_split_from_mu() {
        let co = BelowCoords { e: 0.7, delta: 0.02, a: 0.27, mu: -1e-4 };
        let p = perturb_below(&co, k3()).unwrap();
        let (d1, d2) = p.degree_excess();
        assert!((d1 - (1.0 - p.c) * co.mu).abs() < 1e-13);
        assert!((d2 + p.c * co.mu).abs() < 1e-13);
        let g = p.graphon().unwrap();
        let (g1, g2) = g.degree_split();
        assert!((g1 - 0.7 - (1.0 - p.c) * co.mu).abs() < 1e-13);
        assert!((g2 - 0.7 + p.c * co.mu).abs() < 1e-13);
        let var = p.c * (1.0 - p.c) * co.mu * co.mu;
        assert!((g.degree_variance() - var).abs() < 1e-15);
    }

    #[test]
    fn excess_forms_agree_with_direct_evaluation() {
        let co = BelowCoords { e: 0.8, delta: 0.05, a: 0.15, mu: 3e-4 };
        let p = perturb_below(&co, k3()).unwrap();
        let g = p.graphon().unwrap();
        let s = crate::scalar::h(0.8) + p.entropy_excess();
        assert!((g.entropy() - s).abs() < 1e-15);
        assert!((g.cycle_density(k3()) - 0.512 - p.cycle_excess(k3())).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_side() {
        let co = BelowCoords { e: 0.75, delta: 0.01, a: 0.8, mu: 0.0 };
        assert!(matches!(perturb_below(&co, k3()), Err(Error::Domain(_))));
    }

    #[test]
    fn region_checks() {
        let region = ValidityRegion::default();
        let co = BelowCoords { e: 0.75, delta: 0.01, a: 0.24, mu: -2.9e-5 };
        let p = perturb_below(&co, k3()).unwrap();
        assert!(region.check_below(&p, 0.01, k3()).is_ok());
        let co = BelowCoords { mu: 5e-3, ..co };
        let p = perturb_below(&co, k3()).unwrap();
        assert!(matches!(region.check_below(&p, 0.01, k3()), Err(Error::RegionViolation(_))));
    }

    fn graphon() -> impl Strategy<Value = BipodalGraphon> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.001..0.999f64, 0.0..=1.0f64)
            .prop_map(|(a, b, c, d)| BipodalGraphon::new(a, b, c, d).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn spectral_triangle_density_matches_polynomial(g in graphon()) {
            prop_assert!((g.cycle_density(k3()) - g.triangle_density_direct()).abs() < 1e-13);
        }

        #[test]
        fn spectrum_trace_and_hilbert_schmidt(g in graphon()) {
            let s = g.spectrum();
            let (a, b, c, d) = (g.a(), g.b(), g.c(), g.d());
            let tr = c * a + (1.0 - c) * b;
            let hs = c * c * a * a + 2.0 * c * (1.0 - c) * d * d + (1.0 - c).powi(2) * b * b;
            prop_assert!(s.lambda1 >= s.lambda2);
            prop_assert!(s.lambda1.abs() <= 1.0 + 1e-15 && s.lambda2.abs() <= 1.0 + 1e-15);
            prop_assert!((s.lambda1 + s.lambda2 - tr).abs() < 1e-13);
            prop_assert!((s.lambda1.powi(2) + s.lambda2.powi(2) - hs).abs() < 1e-13);
        }

        #[test]
        fn entropy_bounded_by_constant_graphon(g in graphon()) {
            prop_assert!(g.entropy() <= h(g.edge_density()) + 1e-15);
        }

        #[test]
        fn below_assembly_is_exact(
            e in 0.6..0.9f64,
            frac in 0.01..0.2f64,
            ashift in -0.3..0.3f64,
            mfrac in -0.5..0.5f64,
            kk in prop::sample::select(vec![3u32, 5, 7]),
        ) {
            let k = OddCycle::new(kk).unwrap();
            let delta = frac * (1.0 - e).min(2.0 * e - 1.0);
            let a = 1.0 - e - delta * (1.0 + ashift);
            let mu = mfrac * delta.powi(2);
            let co = BelowCoords { e, delta, a, mu };
            let p = perturb_below(&co, k).unwrap();
            let g = p.graphon().unwrap();
            prop_assert!((g.edge_density() - e).abs() <= 1e-12);
            prop_assert!((g.cycle_density(k) - (e.powi(kk as i32) - delta.powi(kk as i32))).abs() <= 1e-12);
            let (d1, d2) = g.degree_split();
            prop_assert!((d1 - e - (1.0 - p.c) * mu).abs() < 1e-13);
            prop_assert!((d2 - e + p.c * mu).abs() < 1e-13);
        }

        #[test]
        fn above_assembly_is_exact(
            e in prop_oneof![0.2..0.42f64, 0.58..0.9f64],
            cfrac in 0.001..0.02f64,
            kk in prop::sample::select(vec![3u32, 5, 7]),
        ) {
            let k = OddCycle::new(kk).unwrap();
            let a = crate::scalar::a0_closed_form(e);
            let gap = 2.0 * e - 1.0;
            let dtau = cfrac * kk as f64 * e.powi(kk as i32 - 2) * gap * gap;
            let co = AboveCoords { e, dtau, a, d: 1.0 - e };
            let g = assemble_above(&co, k).unwrap();
            prop_assert!((g.edge_density() - e).abs() <= 1e-12);
            prop_assert!((g.cycle_density(k) - (e.powi(kk as i32) + dtau)).abs() <= 1e-12);
        }
    }
}
