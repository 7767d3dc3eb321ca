//! Ideal Raoult's-law vapor/liquid equilibrium.
//!
//! Pure-component vapor pressures come from an extended Antoine correlation,
//! `log10(Psat[kPa]) = A - B / (T[K] + C)`, with coefficients shipped in a
//! versioned data file. Mixture behavior is ideal: `K_i = Psat_i(T) / P`.
//! Liquid-phase activity and vapor-phase non-ideality are out of scope by
//! design, as is any liquid-liquid split.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Universal gas constant in J/(kmol K).
pub const R_UNIVERSAL: f64 = 8314.462618;

const LN10: f64 = std::f64::consts::LN_10;

/// Volatility grouping used by the sharp-split initialization of the train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoilingClass {
    /// Leaves over the top of the light-ends column.
    Low,
    /// Leaves at the bottom of the product column.
    Mid,
    /// Leaves at the bottom of the first column.
    High,
}

/// One pure component as shipped in the data file.
#[derive(Debug, Clone, Deserialize)]
pub struct ComponentRecord {
    pub name: String,
    /// kg/kmol
    pub molar_mass: f64,
    /// (A, B, C) for log10(P[kPa]) = A - B/(T[K] + C)
    pub antoine: (f64, f64, f64),
    /// Declared validity range in K; evaluation outside it is an error.
    pub antoine_range: (f64, f64),
    /// Enthalpy of vaporization in kJ/kmol, taken constant.
    pub dh_vap: f64,
    /// kg/m3 near ambient, informational.
    pub liquid_density: f64,
    #[serde(default)]
    pub is_product: bool,
    pub boiling_class: BoilingClass,
}

#[derive(Debug, Deserialize)]
struct ComponentsFile {
    schema_version: u32,
    #[allow(dead_code)]
    #[serde(default)]
    revision: String,
    components: Vec<ComponentRecord>,
}

/// Validated, ordered set of components. The order fixes the composition
/// vector layout used everywhere else in the crate.
#[derive(Debug, Clone)]
pub struct ComponentSet {
    components: Vec<ComponentRecord>,
    product: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThermoError {
    /// Temperature outside the declared Antoine validity range.
    TemperatureOutOfRange {
        component: String,
        temperature: f64,
        range: (f64, f64),
    },
    InvalidPressure(f64),
    /// Composition vector has the wrong length, negative entries, or does not
    /// sum to one within 1e-6.
    BadComposition(String),
    /// Scalar solve exhausted its iteration budget.
    NoConvergence { what: String, residual: f64 },
    BadData(String),
    Io(String),
}

impl fmt::Display for ThermoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThermoError::TemperatureOutOfRange {
                component,
                temperature,
                range,
            } => write!(
                f,
                "temperature {temperature:.2} K outside validity range [{:.1}, {:.1}] K for {component}",
                range.0, range.1
            ),
            ThermoError::InvalidPressure(p) => write!(f, "pressure must be positive, got {p} kPa"),
            ThermoError::BadComposition(msg) => write!(f, "bad composition: {msg}"),
            ThermoError::NoConvergence { what, residual } => {
                write!(f, "{what} did not converge, residual {residual:.3e}")
            }
            ThermoError::BadData(msg) => write!(f, "component data: {msg}"),
            ThermoError::Io(msg) => write!(f, "component data i/o: {msg}"),
        }
    }
}

impl std::error::Error for ThermoError {}

impl ComponentSet {
    /// Builds a set from records, enforcing the invariants the solvers rely
    /// on: at least two components, positive molar masses and B coefficients,
    /// T + C > 0 over the declared range (monotone Antoine), and exactly one
    /// product component.
    pub fn new(components: Vec<ComponentRecord>) -> Result<Self, ThermoError> {
        if components.len() < 2 {
            return Err(ThermoError::BadData(
                "need at least two components".to_string(),
            ));
        }
        let mut product = None;
        for c in &components {
            if c.molar_mass <= 0.0 {
                return Err(ThermoError::BadData(format!(
                    "{}: molar mass must be positive",
                    c.name
                )));
            }
            let (_, b, cc) = c.antoine;
            if b <= 0.0 {
                return Err(ThermoError::BadData(format!(
                    "{}: Antoine B must be positive",
                    c.name
                )));
            }
            let (lo, hi) = c.antoine_range;
            if !(lo < hi) || lo + cc <= 0.0 {
                return Err(ThermoError::BadData(format!(
                    "{}: Antoine range invalid or T+C not positive at range floor",
                    c.name
                )));
            }
            if c.dh_vap <= 0.0 {
                return Err(ThermoError::BadData(format!(
                    "{}: dh_vap must be positive",
                    c.name
                )));
            }
            if c.is_product {
                if product.is_some() {
                    return Err(ThermoError::BadData(
                        "more than one component flagged as product".to_string(),
                    ));
                }
                product = Some(());
            }
        }
        let product = components
            .iter()
            .position(|c| c.is_product)
            .ok_or_else(|| ThermoError::BadData("no component flagged as product".to_string()))?;
        Ok(ComponentSet {
            components,
            product,
        })
    }

    /// Loads the shipped TOML data file. The SHA-256 of the raw bytes is
    /// logged so a run can be tied to the exact data revision it used.
    pub fn load(path: &Path) -> Result<Self, ThermoError> {
        let raw = std::fs::read(path).map_err(|e| ThermoError::Io(e.to_string()))?;
        let digest: String = Sha256::digest(&raw)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        log::info!("component data {} sha256 {digest}", path.display());
        let parsed: ComponentsFile = toml::from_str(
            std::str::from_utf8(&raw).map_err(|e| ThermoError::BadData(e.to_string()))?,
        )
        .map_err(|e| ThermoError::BadData(e.to_string()))?;
        if parsed.schema_version != 1 {
            return Err(ThermoError::BadData(format!(
                "unsupported schema_version {}",
                parsed.schema_version
            )));
        }
        ComponentSet::new(parsed.components)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Index of the product component.
    pub fn product_index(&self) -> usize {
        self.product
    }

    pub fn component(&self, i: usize) -> &ComponentRecord {
        &self.components[i]
    }

    pub fn components(&self) -> &[ComponentRecord] {
        &self.components
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    /// Pure-component vapor pressure in kPa. Errors outside the declared
    /// validity range rather than extrapolating silently.
    pub fn psat(&self, i: usize, t: f64) -> Result<f64, ThermoError> {
        let c = &self.components[i];
        let (lo, hi) = c.antoine_range;
        if !(t >= lo && t <= hi) {
            return Err(ThermoError::TemperatureOutOfRange {
                component: c.name.clone(),
                temperature: t,
                range: (lo, hi),
            });
        }
        Ok(self.psat_unchecked(i, t))
    }

    #[inline]
    fn psat_unchecked(&self, i: usize, t: f64) -> f64 {
        let (a, b, c) = self.components[i].antoine;
        // 10^x = exp(x ln 10); exp is measurably faster than powf here and
        // this sits in the innermost solver loop.
        ((a - b / (t + c)) * LN10).exp()
    }

    /// Equilibrium ratio K_i = Psat_i(T)/P.
    pub fn k_value(&self, i: usize, t: f64, p: f64) -> Result<f64, ThermoError> {
        if !(p > 0.0) {
            return Err(ThermoError::InvalidPressure(p));
        }
        Ok(self.psat(i, t)? / p)
    }

    /// Fills `k` with K-values for all components; range-checked once.
    pub fn k_values(&self, t: f64, p: f64, k: &mut [f64]) -> Result<(), ThermoError> {
        if !(p > 0.0) {
            return Err(ThermoError::InvalidPressure(p));
        }
        self.check_range(t)?;
        for (i, ki) in k.iter_mut().enumerate() {
            *ki = self.psat_unchecked(i, t) / p;
        }
        Ok(())
    }

    fn check_range(&self, t: f64) -> Result<(), ThermoError> {
        for c in &self.components {
            let (lo, hi) = c.antoine_range;
            if !(t >= lo && t <= hi) {
                return Err(ThermoError::TemperatureOutOfRange {
                    component: c.name.clone(),
                    temperature: t,
                    range: (lo, hi),
                });
            }
        }
        Ok(())
    }

    /// Analytic boiling point of pure component `i` at pressure `p`.
    pub fn pure_boiling_point(&self, i: usize, p: f64) -> Result<f64, ThermoError> {
        if !(p > 0.0) {
            return Err(ThermoError::InvalidPressure(p));
        }
        let (a, b, c) = self.components[i].antoine;
        let t = b / (a - p.log10()) - c;
        self.components[i].check_t(t)?;
        Ok(t)
    }

    /// Bubble-point temperature and incipient vapor composition of liquid `x`
    /// at pressure `p`. Solves sum(K_i x_i) = 1 with a bisection bracket
    /// spanning the pure-component boiling points (widened by 20 K) and a
    /// secant polish; 200 iteration budget.
    pub fn bubble_point(&self, x: &[f64], p: f64) -> Result<(f64, Vec<f64>), ThermoError> {
        self.bubble_point_hinted(x, p, None)
    }

    /// Same as [`bubble_point`](Self::bubble_point) with an optional starting
    /// temperature, used by the column solver to warm-start stage updates.
    pub fn bubble_point_hinted(
        &self,
        x: &[f64],
        p: f64,
        hint: Option<f64>,
    ) -> Result<(f64, Vec<f64>), ThermoError> {
        self.validate_composition(x)?;
        if !(p > 0.0) {
            return Err(ThermoError::InvalidPressure(p));
        }
        let t = self.bubble_t(x, p, hint, 1e-10)?;
        let mut y = vec![0.0; x.len()];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.psat_unchecked(i, t) / p * x[i];
        }
        Ok((t, y))
    }

    /// Core scalar solve shared by the public bubble point and the column
    /// sweep. `tol` applies to |sum(K_i x_i) - 1|.
    pub(crate) fn bubble_t(
        &self,
        x: &[f64],
        p: f64,
        hint: Option<f64>,
        tol: f64,
    ) -> Result<f64, ThermoError> {
        let f = |t: f64| -> f64 {
            let mut s = 0.0;
            for i in 0..x.len() {
                if x[i] > 0.0 {
                    s += x[i] * self.psat_unchecked(i, t);
                }
            }
            s / p - 1.0
        };

        // Bracket from pure-component boiling points of the present species.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..x.len() {
            if x[i] > 0.0 {
                let (a, b, c) = self.components[i].antoine;
                let tb = b / (a - p.log10()) - c;
                lo = lo.min(tb);
                hi = hi.max(tb);
            }
        }
        if !lo.is_finite() {
            return Err(ThermoError::BadComposition("all fractions zero".to_string()));
        }
        let (range_lo, range_hi) = self.common_range();
        lo = (lo - 20.0).max(range_lo);
        hi = (hi + 20.0).min(range_hi);
        if lo >= hi {
            return Err(ThermoError::NoConvergence {
                what: "bubble point bracket".to_string(),
                residual: f64::NAN,
            });
        }

        let mut budget = 200usize;

        // Secant from the hint first; it almost always lands in 2-4 steps
        // when the hint comes from the previous sweep of the same stage.
        if let Some(t0) = hint {
            if t0 > lo && t0 < hi {
                let mut t_a = t0;
                let mut f_a = f(t_a);
                let mut t_b = (t0 + 0.5).min(hi);
                let mut f_b = f(t_b);
                budget -= 2;
                for _ in 0..20 {
                    if budget == 0 {
                        break;
                    }
                    if f_b.abs() <= tol {
                        return Ok(t_b);
                    }
                    let df = f_b - f_a;
                    if df == 0.0 {
                        break;
                    }
                    let t_n = t_b - f_b * (t_b - t_a) / df;
                    if !t_n.is_finite() || t_n <= lo || t_n >= hi {
                        break;
                    }
                    t_a = t_b;
                    f_a = f_b;
                    t_b = t_n;
                    f_b = f(t_b);
                    budget -= 1;
                }
            }
        }

        // Bisection to a narrow interval, then a secant polish.
        let mut f_lo = f(lo);
        let f_hi = f(hi);
        budget = budget.saturating_sub(2);
        if f_lo.abs() <= tol {
            return Ok(lo);
        }
        if f_hi.abs() <= tol {
            return Ok(hi);
        }
        if f_lo * f_hi > 0.0 {
            return Err(ThermoError::NoConvergence {
                what: "bubble point bracket".to_string(),
                residual: f_lo.min(f_hi),
            });
        }
        let mut a = lo;
        let mut b = hi;
        while b - a > 1e-3 && budget > 0 {
            let m = 0.5 * (a + b);
            let fm = f(m);
            budget -= 1;
            if fm.abs() <= tol {
                return Ok(m);
            }
            if f_lo * fm < 0.0 {
                b = m;
            } else {
                a = m;
                f_lo = fm;
            }
        }
        let mut t_a = a;
        let mut f_a = f(t_a);
        let mut t_b = b;
        let mut f_b = f(t_b);
        budget = budget.saturating_sub(2);
        let mut best = if f_a.abs() < f_b.abs() { (t_a, f_a) } else { (t_b, f_b) };
        while budget > 0 {
            if best.1.abs() <= tol {
                return Ok(best.0);
            }
            let df = f_b - f_a;
            if df == 0.0 {
                break;
            }
            let t_n = (t_b - f_b * (t_b - t_a) / df).clamp(lo, hi);
            let f_n = f(t_n);
            budget -= 1;
            t_a = t_b;
            f_a = f_b;
            t_b = t_n;
            f_b = f_n;
            if f_n.abs() < best.1.abs() {
                best = (t_n, f_n);
            }
        }
        if best.1.abs() <= 1e-8 {
            // Meets the public contract even if the tighter internal tol
            // requested by the caller was not reached.
            return Ok(best.0);
        }
        Err(ThermoError::NoConvergence {
            what: "bubble point".to_string(),
            residual: best.1,
        })
    }

    /// Dew-point temperature and incipient liquid composition of vapor `y`
    /// at pressure `p`: solves sum(y_i / K_i) = 1 by bisection over the same
    /// pure-component bracket as the bubble point.
    pub fn dew_point(&self, y: &[f64], p: f64) -> Result<(f64, Vec<f64>), ThermoError> {
        self.validate_composition(y)?;
        if !(p > 0.0) {
            return Err(ThermoError::InvalidPressure(p));
        }
        // sum(y p / psat) - 1 decreases monotonically in temperature.
        let f = |t: f64| -> f64 {
            let mut s = 0.0;
            for i in 0..y.len() {
                if y[i] > 0.0 {
                    s += y[i] * p / self.psat_unchecked(i, t);
                }
            }
            s - 1.0
        };

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..y.len() {
            if y[i] > 0.0 {
                let (a, b, c) = self.components[i].antoine;
                let tb = b / (a - p.log10()) - c;
                lo = lo.min(tb);
                hi = hi.max(tb);
            }
        }
        if !lo.is_finite() {
            return Err(ThermoError::BadComposition("all fractions zero".to_string()));
        }
        let (range_lo, range_hi) = self.common_range();
        lo = (lo - 20.0).max(range_lo);
        hi = (hi + 20.0).min(range_hi);
        let f_lo = f(lo);
        let f_hi = f(hi);
        if f_lo < 0.0 || f_hi > 0.0 {
            return Err(ThermoError::NoConvergence {
                what: "dew point bracket".to_string(),
                residual: if f_lo < 0.0 { f_lo } else { f_hi },
            });
        }
        let mut a = lo;
        let mut b = hi;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm.abs() <= 1e-10 || b - a < 1e-9 {
                a = m;
                b = m;
                break;
            }
            if fm > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let t = 0.5 * (a + b);
        let mut x = vec![0.0; y.len()];
        let mut s = 0.0;
        for i in 0..y.len() {
            x[i] = y[i] * p / self.psat_unchecked(i, t);
            s += x[i];
        }
        if s > 0.0 {
            x.iter_mut().for_each(|v| *v /= s);
        }
        Ok((t, x))
    }

    /// Isothermal flash of feed `z` at `(t, p)`: Rachford-Rice on the vapor
    /// fraction. Subcooled and superheated feeds return the degenerate
    /// all-liquid / all-vapor split rather than erroring.
    pub fn flash_tp(&self, z: &[f64], t: f64, p: f64) -> Result<FlashResult, ThermoError> {
        self.validate_composition(z)?;
        if !(p > 0.0) {
            return Err(ThermoError::InvalidPressure(p));
        }
        self.check_range(t)?;
        let n = z.len();
        let mut k = vec![0.0; n];
        for i in 0..n {
            k[i] = self.psat_unchecked(i, t) / p;
        }
        let f0: f64 = (0..n).map(|i| z[i] * (k[i] - 1.0)).sum();
        if f0 <= 0.0 {
            // At or below the bubble point: all liquid.
            let mut y = vec![0.0; n];
            let mut s = 0.0;
            for i in 0..n {
                y[i] = k[i] * z[i];
                s += y[i];
            }
            if s > 0.0 {
                for yi in &mut y {
                    *yi /= s;
                }
            }
            return Ok(FlashResult {
                vapor_fraction: 0.0,
                liquid: z.to_vec(),
                vapor: y,
            });
        }
        let f1: f64 = (0..n)
            .map(|i| if k[i] > 0.0 { z[i] * (k[i] - 1.0) / k[i] } else { 0.0 })
            .sum();
        if f1 >= 0.0 {
            // At or above the dew point: all vapor.
            let mut x = vec![0.0; n];
            let mut s = 0.0;
            for i in 0..n {
                x[i] = z[i] / k[i].max(1e-300);
                s += x[i];
            }
            if s > 0.0 {
                for xi in &mut x {
                    *xi /= s;
                }
            }
            return Ok(FlashResult {
                vapor_fraction: 1.0,
                liquid: x,
                vapor: z.to_vec(),
            });
        }

        // Two-phase: bisection with Newton acceleration on psi in (0, 1).
        let rr = |psi: f64| -> (f64, f64) {
            let mut f = 0.0;
            let mut df = 0.0;
            for i in 0..n {
                let km1 = k[i] - 1.0;
                let d = 1.0 + psi * km1;
                f += z[i] * km1 / d;
                df -= z[i] * km1 * km1 / (d * d);
            }
            (f, df)
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut psi = 0.5;
        let mut converged = false;
        for _ in 0..100 {
            let (f, df) = rr(psi);
            if f.abs() <= 1e-12 {
                converged = true;
                break;
            }
            if f > 0.0 {
                lo = psi;
            } else {
                hi = psi;
            }
            let newton = psi - f / df;
            psi = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        if !converged && rr(psi).0.abs() > 1e-9 {
            return Err(ThermoError::NoConvergence {
                what: "rachford-rice".to_string(),
                residual: rr(psi).0,
            });
        }
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in 0..n {
            x[i] = z[i] / (1.0 + psi * (k[i] - 1.0));
            y[i] = k[i] * x[i];
        }
        // Normalize away the last bit of RR residual.
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        for i in 0..n {
            x[i] /= sx;
            y[i] /= sy;
        }
        Ok(FlashResult {
            vapor_fraction: psi,
            liquid: x,
            vapor: y,
        })
    }

    /// Converts mass fractions to mole fractions (x_i proportional to w_i/M_i).
    pub fn mole_from_mass(&self, w: &[f64]) -> Result<Vec<f64>, ThermoError> {
        if w.len() != self.len() {
            return Err(ThermoError::BadComposition(format!(
                "length {} != {}",
                w.len(),
                self.len()
            )));
        }
        let mut x: Vec<f64> = w
            .iter()
            .zip(&self.components)
            .map(|(wi, c)| wi / c.molar_mass)
            .collect();
        let s: f64 = x.iter().sum();
        if !(s > 0.0) {
            return Err(ThermoError::BadComposition("zero total".to_string()));
        }
        for xi in &mut x {
            *xi /= s;
        }
        Ok(x)
    }

    /// Converts mole fractions to mass fractions.
    pub fn mass_from_mole(&self, x: &[f64]) -> Result<Vec<f64>, ThermoError> {
        if x.len() != self.len() {
            return Err(ThermoError::BadComposition(format!(
                "length {} != {}",
                x.len(),
                self.len()
            )));
        }
        let mut w: Vec<f64> = x
            .iter()
            .zip(&self.components)
            .map(|(xi, c)| xi * c.molar_mass)
            .collect();
        let s: f64 = w.iter().sum();
        if !(s > 0.0) {
            return Err(ThermoError::BadComposition("zero total".to_string()));
        }
        for wi in &mut w {
            *wi /= s;
        }
        Ok(w)
    }

    /// Mean molar mass of a mole-fraction composition, kg/kmol.
    pub fn mixture_molar_mass(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.components)
            .map(|(xi, c)| xi * c.molar_mass)
            .sum()
    }

    /// Intersection of all declared Antoine ranges.
    pub fn common_range(&self) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for c in &self.components {
            lo = lo.max(c.antoine_range.0);
            hi = hi.min(c.antoine_range.1);
        }
        (lo, hi)
    }

    fn validate_composition(&self, x: &[f64]) -> Result<(), ThermoError> {
        if x.len() != self.len() {
            return Err(ThermoError::BadComposition(format!(
                "length {} != {}",
                x.len(),
                self.len()
            )));
        }
        let mut s = 0.0;
        for &xi in x {
            if !(xi >= 0.0) {
                return Err(ThermoError::BadComposition(format!(
                    "negative or NaN fraction {xi}"
                )));
            }
            s += xi;
        }
        if (s - 1.0).abs() > 1e-6 {
            return Err(ThermoError::BadComposition(format!(
                "fractions sum to {s}, expected 1"
            )));
        }
        Ok(())
    }
}

impl ComponentRecord {
    fn check_t(&self, t: f64) -> Result<(), ThermoError> {
        let (lo, hi) = self.antoine_range;
        if t >= lo && t <= hi {
            Ok(())
        } else {
            Err(ThermoError::TemperatureOutOfRange {
                component: self.name.clone(),
                temperature: t,
                range: (lo, hi),
            })
        }
    }
}

/// Result of an isothermal flash.
#[derive(Debug, Clone)]
pub struct FlashResult {
    pub vapor_fraction: f64,
    pub liquid: Vec<f64>,
    pub vapor: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::test_support::component_set;

    fn idx(cs: &ComponentSet, name: &str) -> usize {
        cs.index_of(name).unwrap()
    }

    #[test]
    fn water_steam_point() {
        let cs = component_set();
        let p = cs.psat(idx(&cs, "water"), 373.15).unwrap();
        assert!(
            (p - 101.3).abs() <= 1.0,
            "psat(water, 373.15 K) = {p} kPa, expected 101.3 +/- 1"
        );
    }

    #[test]
    fn dew_point_brackets_the_bubble_point() {
        let cs = component_set();
        let mut y = vec![0.0; cs.len()];
        y[idx(&cs, "acetone")] = 0.5;
        y[idx(&cs, "aniline")] = 0.5;
        let (t_bub, _) = cs.bubble_point(&y, 101.325).unwrap();
        let (t_dew, x) = cs.dew_point(&y, 101.325).unwrap();
        assert!(
            t_dew > t_bub + 1.0,
            "wide-boiling pair must have dew {t_dew} well above bubble {t_bub}"
        );
        // The incipient liquid is enriched in the heavy component.
        assert!(x[idx(&cs, "aniline")] > 0.5);

        // For a pure component both collapse onto the boiling point.
        let mut pure = vec![0.0; cs.len()];
        pure[idx(&cs, "aniline")] = 1.0;
        let (tb, _) = cs.bubble_point(&pure, 101.325).unwrap();
        let (td, _) = cs.dew_point(&pure, 101.325).unwrap();
        assert!((tb - td).abs() < 1e-3, "pure dew {td} vs bubble {tb}");
    }

    #[test]
    fn aniline_normal_boiling_point_self_consistent() {
        // Tabulated normal boiling point from the same data source as the
        // shipped coefficients.
        let cs = component_set();
        let p = cs.psat(idx(&cs, "aniline"), 457.25).unwrap();
        assert!(
            (p - 101.3).abs() <= 1.0,
            "psat(aniline, 457.25 K) = {p} kPa, expected 101.3 +/- 1"
        );
    }

    #[test]
    fn every_component_reproduces_its_boiling_point() {
        // nbp values tabulated alongside the coefficient sources.
        let nbp = [
            ("acetone", 329.20),
            ("water", 373.15),
            ("propanol", 370.35),
            ("styrene", 418.35),
            ("aniline", 457.25),
            ("o-toluidine", 473.45),
            ("p-toluidine", 473.55),
            ("indole", 526.75),
            ("tripropylene-glycol", 538.25),
            ("mda", 671.15),
        ];
        let cs = component_set();
        for (name, tb) in nbp {
            let p = cs.psat(idx(&cs, name), tb).unwrap();
            assert!(
                (p - 101.325).abs() <= 1.0,
                "{name}: psat({tb}) = {p} kPa"
            );
        }
    }

    #[test]
    fn psat_monotone_on_declared_range() {
        let cs = component_set();
        for i in 0..cs.len() {
            let (lo, hi) = cs.component(i).antoine_range;
            let mut prev = 0.0;
            let mut t = lo;
            while t <= hi {
                let p = cs.psat(i, t).unwrap();
                assert!(p > prev, "{} not monotone at {t} K", cs.component(i).name);
                prev = p;
                t += 1.0;
            }
        }
    }

    #[test]
    fn psat_out_of_range_is_error() {
        let cs = component_set();
        let (lo, hi) = cs.component(0).antoine_range;
        assert!(matches!(
            cs.psat(0, lo - 1.0),
            Err(ThermoError::TemperatureOutOfRange { .. })
        ));
        assert!(matches!(
            cs.psat(0, hi + 1.0),
            Err(ThermoError::TemperatureOutOfRange { .. })
        ));
    }

    #[test]
    fn k_value_volatility_ordering() {
        let cs = component_set();
        let t = 400.0;
        let p = 50.0;
        let k_acetone = cs.k_value(idx(&cs, "acetone"), t, p).unwrap();
        let k_aniline = cs.k_value(idx(&cs, "aniline"), t, p).unwrap();
        let k_mda = cs.k_value(idx(&cs, "mda"), t, p).unwrap();
        assert!(
            k_acetone > k_aniline && k_aniline > k_mda,
            "volatility ordering violated: {k_acetone} / {k_aniline} / {k_mda}"
        );
    }

    #[test]
    fn k_value_scales_inversely_with_pressure() {
        let cs = component_set();
        let k1 = cs.k_value(0, 360.0, 40.0).unwrap();
        let k2 = cs.k_value(0, 360.0, 80.0).unwrap();
        assert!((k1 / k2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bubble_point_pure_component_is_boiling_point() {
        let cs = component_set();
        for (i, p) in [(idx(&cs, "water"), 101.325), (idx(&cs, "aniline"), 30.0)] {
            let mut x = vec![0.0; cs.len()];
            x[i] = 1.0;
            let (t, y) = cs.bubble_point(&x, p).unwrap();
            let tb = cs.pure_boiling_point(i, p).unwrap();
            assert!((t - tb).abs() < 1e-6, "bubble {t} vs pure bp {tb}");
            assert!((y[i] - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn bubble_point_satisfies_closure() {
        let cs = component_set();
        // Equimolar light/heavy binary in the full component vector.
        let mut x = vec![0.0; cs.len()];
        x[idx(&cs, "acetone")] = 0.5;
        x[idx(&cs, "aniline")] = 0.5;
        let (t, y) = cs.bubble_point(&x, 101.325).unwrap();
        let mut s = 0.0;
        for i in 0..cs.len() {
            s += cs.k_value(i, t, 101.325).unwrap() * x[i];
        }
        assert!((s - 1.0).abs() <= 1e-8, "sum Kx = {s}");
        let sy: f64 = y.iter().sum();
        assert!((sy - 1.0).abs() <= 1e-7, "sum y = {sy}");
        // Must sit between the two pure boiling points.
        let t_lo = cs.pure_boiling_point(idx(&cs, "acetone"), 101.325).unwrap();
        let t_hi = cs.pure_boiling_point(idx(&cs, "aniline"), 101.325).unwrap();
        assert!(t > t_lo && t < t_hi);
    }

    #[test]
    fn bubble_point_random_mixtures_close() {
        use rand::prelude::*;
        let cs = component_set();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let mut x: Vec<f64> = (0..cs.len()).map(|_| rng.random::<f64>()).collect();
            let s: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= s);
            let p = 5.0 + 95.0 * rng.random::<f64>();
            let (t, y) = cs.bubble_point(&x, p).unwrap();
            let sum_kx: f64 = (0..cs.len())
                .map(|i| cs.k_value(i, t, p).unwrap() * x[i])
                .sum();
            assert!((sum_kx - 1.0).abs() <= 1e-8);
            let sy: f64 = y.iter().sum();
            assert!((sy - 1.0).abs() <= 1e-7);
        }
    }

    #[test]
    fn bubble_point_hint_agrees_with_cold_solve() {
        let cs = component_set();
        let mut x = vec![0.1; 10];
        x[9] = 0.09999999999999995;
        let (t_cold, _) = cs.bubble_point(&x, 20.0).unwrap();
        let (t_warm, _) = cs.bubble_point_hinted(&x, 20.0, Some(t_cold + 3.0)).unwrap();
        assert!((t_cold - t_warm).abs() < 1e-5);
    }

    #[test]
    fn flash_reduces_to_bubble_and_dew_limits() {
        let cs = component_set();
        let mut z = vec![0.0; cs.len()];
        z[idx(&cs, "acetone")] = 0.4;
        z[idx(&cs, "aniline")] = 0.6;
        let (t_bub, _) = cs.bubble_point(&z, 50.0).unwrap();
        let below = cs.flash_tp(&z, t_bub - 5.0, 50.0).unwrap();
        assert_eq!(below.vapor_fraction, 0.0);
        assert_eq!(below.liquid, z);
        let two_phase = cs.flash_tp(&z, t_bub + 15.0, 50.0).unwrap();
        assert!(two_phase.vapor_fraction > 0.0 && two_phase.vapor_fraction < 1.0);
        // Lever rule: z = psi*y + (1-psi)*x componentwise.
        for i in 0..cs.len() {
            let recon = two_phase.vapor_fraction * two_phase.vapor[i]
                + (1.0 - two_phase.vapor_fraction) * two_phase.liquid[i];
            assert!((recon - z[i]).abs() < 1e-9, "lever rule off at {i}");
        }
    }

    #[test]
    fn mass_mole_round_trip() {
        let cs = component_set();
        let w: Vec<f64> = {
            let mut v = vec![0.02, 0.01, 0.03, 0.079, 0.069, 0.049, 0.148, 0.296, 0.247, 0.049];
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v
        };
        let x = cs.mole_from_mass(&w).unwrap();
        let w2 = cs.mass_from_mole(&x).unwrap();
        for (a, b) in w.iter().zip(&w2) {
            assert!((a - b).abs() < 1e-12);
        }
        // Product is lighter than the mixture mean, so its mole fraction
        // exceeds its mass fraction.
        let pi = cs.product_index();
        assert!(x[pi] > w[pi]);
    }

    #[test]
    fn exactly_one_product_enforced() {
        let cs = component_set();
        let mut recs = cs.components().to_vec();
        recs[0].is_product = true;
        assert!(matches!(
            ComponentSet::new(recs.clone()),
            Err(ThermoError::BadData(_))
        ));
        for r in &mut recs {
            r.is_product = false;
        }
        assert!(matches!(
            ComponentSet::new(recs),
            Err(ThermoError::BadData(_))
        ));
    }
}
