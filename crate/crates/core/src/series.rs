//! Truncated asymptotic expansions of the optimal parameters and entropy,
//! and empirical convergence orders measured against the optimizer.

use serde::{Deserialize, Serialize};

use crate::bipodal::OddCycle;
use crate::error::{Error, Result};
use crate::optimizer::{solve_above, solve_below, Regime, SolveOptions, SolverReport};
use crate::scalar::{a0_closed_form, h, h1, h2, h3, nu};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    A,
    B,
    C,
    D,
    Mu,
    Entropy,
}

impl Field {
    pub const ALL: [Field; 6] = [Field::A, Field::B, Field::C, Field::D, Field::Mu, Field::Entropy];

    pub fn name(self) -> &'static str {
        match self {
            Field::A => "a",
            Field::B => "b",
            Field::C => "c",
            Field::D => "d",
            Field::Mu => "mu",
            Field::Entropy => "entropy",
        }
    }
}

impl std::str::FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown field {s:?}")))
    }
}

/// Error exponent of each truncated series: `a: 2` means `O(scale^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatedOrders {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub mu: u32,
    pub entropy: u32,
}

impl StatedOrders {
    pub fn get(&self, f: Field) -> u32 {
        match f {
            Field::A => self.a,
            Field::B => self.b,
            Field::C => self.c,
            Field::D => self.d,
            Field::Mu => self.mu,
            Field::Entropy => self.entropy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPrediction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub mu: f64,
    pub entropy: f64,
    /// `entropy - H(e)` summed term by term.
    pub entropy_excess: f64,
    pub stated_orders: StatedOrders,
}

impl SeriesPrediction {
    pub fn get(&self, f: Field) -> f64 {
        match f {
            Field::A => self.a,
            Field::B => self.b,
            Field::C => self.c,
            Field::D => self.d,
            Field::Mu => self.mu,
            Field::Entropy => self.entropy,
        }
    }
}

fn below_e(e: f64) -> Result<()> {
    if e > 0.5 && e < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("below-curve series need e in (1/2, 1), got {e}")))
    }
}

fn above_e(e: f64) -> Result<()> {
    if e > 0.0 && e < 1.0 && e != 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("above-curve series need e in (0, 1) minus 1/2, got {e}")))
    }
}

fn nonneg(name: &str, s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be nonnegative, got {s}")))
    }
}

fn entropy_below_excess(e: f64, delta: f64, k: OddCycle) -> f64 {
    let g = 2.0 * e - 1.0;
    let n = nu(e);
    let mut quartic = h3(e) / (3.0 * g) + 4.0 * n / g.powi(3);
    if k.get() == 3 {
        quartic -= 2.0 * n * n / (e * h1(e) * g * g);
    }
    delta * delta / g * h1(e) - 2.0 * delta.powi(3) * n / (g * g) + delta.powi(4) * quartic
}

fn entropy_above_excess(e: f64, dtau: f64, k: OddCycle) -> f64 {
    let km = k.get() as i32;
    let g = 1.0 - 2.0 * e;
    let linear = -2.0 * dtau / (k.get() as f64 * e.powi(km - 2) * g) * h1(e);
    if k.get() > 3 {
        return linear;
    }
    let a0 = a0_closed_form(e);
    let bracket = h(a0) - h(e) + h1(e) * (3.0 * (a0 - e) + 2.0 * g / e * (a0 + 3.0 * e - 2.0));
    linear + dtau * dtau / (9.0 * e * e * g.powi(4)) * bracket + 2.0 * dtau * dtau * h2(e) / (9.0 * e * e * g * g)
}

/// Truncated series below the curve, `tau = e^k - delta^k`.
pub fn params_below(e: f64, delta: f64, k: OddCycle) -> Result<SeriesPrediction> {
    below_e(e)?;
    nonneg("delta", delta)?;
    let km = k.get() as i32;
    let g = 2.0 * e - 1.0;
    let n = nu(e);
    let triangle = k.get() == 3;
    let d = if triangle { e + delta + delta * delta * n / (e * h1(e)) } else { e + delta };
    let mu = n * delta.powi(km - 1) / (e.powi(km - 2) * h1(e));
    let excess = entropy_below_excess(e, delta, k);
    Ok(SeriesPrediction {
        a: 1.0 - e - delta,
        b: e - delta * delta / g,
        c: delta / g - 2.0 * delta * delta / g,
        d,
        mu,
        entropy: h(e) + excess,
        entropy_excess: excess,
        stated_orders: StatedOrders {
            a: 2,
            b: 3,
            c: 3,
            d: if triangle { 3 } else { k.get() - 1 },
            mu: if triangle { 3 } else { k.get() },
            entropy: 5,
        },
    })
}

/// Truncated series above the curve, `tau = e^k + dtau`.
pub fn params_above(e: f64, dtau: f64, k: OddCycle) -> Result<SeriesPrediction> {
    above_e(e)?;
    nonneg("dtau", dtau)?;
    let km = k.get() as i32;
    let g = 2.0 * e - 1.0;
    let ke = k.get() as f64 * e.powi(km - 2);
    let excess = entropy_above_excess(e, dtau, k);
    Ok(SeriesPrediction {
        a: a0_closed_form(e),
        b: e - 2.0 * dtau / (ke * g),
        c: dtau / (ke * g * g),
        d: 1.0 - e,
        mu: 1.0 - 2.0 * e,
        entropy: h(e) + excess,
        entropy_excess: excess,
        stated_orders: StatedOrders { a: 1, b: 2, c: 2, d: 1, mu: 1, entropy: if k.get() == 3 { 3 } else { 2 } },
    })
}

pub fn entropy_below(e: f64, delta: f64, k: OddCycle) -> Result<f64> {
    below_e(e)?;
    nonneg("delta", delta)?;
    Ok(h(e) + entropy_below_excess(e, delta, k))
}

pub fn entropy_above(e: f64, dtau: f64, k: OddCycle) -> Result<f64> {
    above_e(e)?;
    nonneg("dtau", dtau)?;
    Ok(h(e) + entropy_above_excess(e, dtau, k))
}

/// `|solver - series|` for one field. Entropy is compared through its excess
/// over `H(e)` so that differences far below `H(e) * eps` stay visible.
pub fn field_error(field: Field, report: &SolverReport, series: &SeriesPrediction) -> f64 {
    let g = &report.graphon;
    let solved = match field {
        Field::A => g.a(),
        Field::B => g.b(),
        Field::C => g.c(),
        Field::D => g.d(),
        Field::Mu => report.mu,
        Field::Entropy => return (report.entropy_excess - series.entropy_excess).abs(),
    };
    (solved - series.get(field)).abs()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub field: Field,
    pub regime: Regime,
    pub scales: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub stated: u32,
}

/// Solves at each scale, compares with the series and fits the log-log slope
/// of the error. Scales are `delta` below the curve and `dtau` above.
pub fn convergence_order(
    field: Field,
    regime: Regime,
    e: f64,
    k: OddCycle,
    scales: &[f64],
    opts: &SolveOptions,
) -> Result<OrderFit> {
    if scales.len() < 3 {
        return Err(Error::domain("convergence_order needs at least 3 scales"));
    }
    let mut errors = Vec::with_capacity(scales.len());
    let mut stated = 0;
    for &s in scales {
        let (report, series) = match regime {
            Regime::Below => (solve_below(e, s, k, opts)?, params_below(e, s, k)?),
            Regime::Above => (solve_above(e, s, k, opts)?, params_above(e, s, k)?),
            Regime::Boundary => return Err(Error::domain("no convergence order on the curve")),
        };
        stated = series.stated_orders.get(field);
        let err = field_error(field, &report, &series);
        log::debug!("{} {regime} scale={s:e} error={err:e}", field.name());
        errors.push(err);
    }
    let slope = log_log_slope(scales, &errors);
    Ok(OrderFit { field, regime, scales: scales.to_vec(), errors, slope, stated })
}
