//! Three-column separation train: wiring, specification strategy, staged
//! initialization and spec checking.
//!
//! The train splits the pyrolysis oil into four outlets. Column 1 drops the
//! high boilers out the bottom as heavy waste. Column 2 takes the low
//! boilers overhead as light waste. Column 3 recovers the product overhead
//! at its purity spec; its bottoms carry the mid boilers. There is no
//! recycle, so the columns are solved in sequence and the composition of
//! each downstream feed is exact once its column converged.
//!
//! Degrees of freedom: the first two columns run partial condensers at a
//! fixed coolant temperature, the third a total condenser. Column 1 is
//! closed by its reflux ratio plus a distillate rate pinned to the non-heavy
//! feed fraction; column 2 by reflux and boilup ratios; column 3 by its
//! reflux ratio plus the product purity equality. That leaves exactly the
//! four continuous operating variables of [`OperatingPoint`] free for the
//! per-scenario search. Hydraulic load (F-factor band) and the column 1
//! reboiler temperature ceiling are inequality specs checked afterwards,
//! not equality closures.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::column::{
    solve_column, ColumnDesign, ColumnOperating, ColumnOptions, ColumnSolution, Condenser,
    DutySpec, Stream, WarmStart,
};
use crate::thermo::{BoilingClass, ComponentSet, ThermoError};

/// Complete discrete design of the train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainDesign {
    pub columns: [ColumnDesign; 3],
    /// kPa per column; configuration, not a decision variable.
    pub pressures: [f64; 3],
}

/// The four continuous operating variables adapted per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub reflux_ratio_c1: f64,
    pub reflux_ratio_c2: f64,
    pub boilup_ratio_c2: f64,
    pub reflux_ratio_c3: f64,
}

impl OperatingPoint {
    /// Fixed coordinate order used by the box bounds and the local search.
    pub fn to_array(self) -> [f64; 4] {
        [
            self.reflux_ratio_c1,
            self.reflux_ratio_c2,
            self.boilup_ratio_c2,
            self.reflux_ratio_c3,
        ]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        OperatingPoint {
            reflux_ratio_c1: a[0],
            reflux_ratio_c2: a[1],
            boilup_ratio_c2: a[2],
            reflux_ratio_c3: a[3],
        }
    }
}

/// Box bounds on [`OperatingPoint`], in its `to_array` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingBounds {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl OperatingBounds {
    pub fn contains(&self, op: &OperatingPoint) -> bool {
        let a = op.to_array();
        (0..4).all(|j| a[j] >= self.lower[j] && a[j] <= self.upper[j])
    }

    pub fn clamp(&self, op: &OperatingPoint) -> OperatingPoint {
        let a = op.to_array();
        let mut out = [0.0; 4];
        for j in 0..4 {
            out[j] = a[j].clamp(self.lower[j], self.upper[j]);
        }
        OperatingPoint::from_array(out)
    }

    pub fn validate(&self) -> Result<(), String> {
        for j in 0..4 {
            if !(self.lower[j].is_finite() && self.upper[j].is_finite()) {
                return Err(format!("operating bound {j} not finite"));
            }
            if !(self.lower[j] < self.upper[j]) {
                return Err(format!(
                    "operating bound {j}: lower {} not below upper {}",
                    self.lower[j], self.upper[j]
                ));
            }
        }
        Ok(())
    }
}

/// Flowsheet-level configuration: pressures, fixed temperatures, specs and
/// the operating box. Defaults are the shipped configuration; everything is
/// overridable from the run config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowsheetConfig {
    /// kPa per column. Deep vacuum on column 1 keeps its reboiler under the
    /// product degradation ceiling; the later columns run at milder vacuum.
    pub pressures: [f64; 3],
    /// K; coolant level of the partial condensers on columns 1 and 2.
    pub condenser_temperature: f64,
    /// Product mass-fraction spec on the column 3 distillate.
    pub purity_spec: f64,
    /// K; ceiling on the column 1 reboiler temperature.
    pub t_degradation: f64,
    /// Pa^0.5; admissible hydraulic band for every column.
    pub f_factor_band: (f64, f64),
    pub bounds: OperatingBounds,
    /// Reference operating point used to seed initialization.
    pub initial_operating: OperatingPoint,
    pub max_sweeps: usize,
    pub tolerance: f64,
}

impl Default for FlowsheetConfig {
    fn default() -> Self {
        FlowsheetConfig {
            pressures: [5.0, 30.0, 20.0],
            condenser_temperature: 318.15,
            purity_spec: 0.995,
            t_degradation: 473.15,
            f_factor_band: (0.5, 2.5),
            bounds: OperatingBounds {
                lower: [0.05, 0.05, 0.1, 0.5],
                upper: [8.0, 8.0, 12.0, 20.0],
            },
            initial_operating: OperatingPoint {
                reflux_ratio_c1: 1.0,
                reflux_ratio_c2: 2.0,
                boilup_ratio_c2: 2.4,
                reflux_ratio_c3: 5.0,
            },
            max_sweeps: 2000,
            tolerance: 1e-6,
        }
    }
}

impl FlowsheetConfig {
    pub fn column_options(&self) -> ColumnOptions {
        ColumnOptions {
            max_sweeps: self.max_sweeps,
            tolerance: self.tolerance,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (i, p) in self.pressures.iter().enumerate() {
            if !(*p > 0.0 && *p <= 101.33) {
                return Err(format!("column {} pressure {} kPa outside (0, 101.33]", i + 1, p));
            }
        }
        if !(self.purity_spec > 0.0 && self.purity_spec < 1.0) {
            return Err(format!("purity spec {} outside (0, 1)", self.purity_spec));
        }
        if !(self.f_factor_band.0 >= 0.0 && self.f_factor_band.0 < self.f_factor_band.1) {
            return Err("f-factor band empty or negative".to_string());
        }
        if !(self.t_degradation > 0.0) {
            return Err("degradation temperature must be positive".to_string());
        }
        self.bounds.validate()?;
        if !self.bounds.contains(&self.bounds.clamp(&self.initial_operating)) {
            return Err("initial operating point cannot be clamped into bounds".to_string());
        }
        Ok(())
    }
}

/// Per-column warm starts threaded between evaluations.
#[derive(Debug, Clone, Default)]
pub struct TrainWarmStart {
    pub columns: [Option<WarmStart>; 3],
}

#[derive(Debug, Clone)]
pub struct TrainSolution {
    /// Converged column solutions in train order; shorter than 3 when a
    /// downstream column failed.
    pub columns: Vec<ColumnSolution>,
    /// Column 3 distillate.
    pub product: Stream,
    /// Column 1 bottoms.
    pub waste_heavy: Stream,
    /// Column 2 distillate.
    pub waste_light: Stream,
    /// Column 3 bottoms; carries the mid boilers, neither revenue nor waste.
    pub midboiler_out: Stream,
    /// kW
    pub total_reboiler_duty: f64,
    /// kW
    pub total_condenser_duty: f64,
    /// Product mass fraction in the product stream.
    pub aniline_purity: f64,
    /// Pa^0.5 per column.
    pub max_f_factors: [f64; 3],
    pub feasible: bool,
    /// Index of the column that failed, when infeasible.
    pub failed_column: Option<usize>,
    pub diagnostics: Option<String>,
}

impl TrainSolution {
    pub fn warm_starts(&self) -> TrainWarmStart {
        let mut w = TrainWarmStart::default();
        for (i, col) in self.columns.iter().enumerate().take(3) {
            w.columns[i] = Some(col.warm_start());
        }
        w
    }

    fn infeasible(
        columns: Vec<ColumnSolution>,
        failed_column: usize,
        diagnostics: String,
        nc: usize,
    ) -> Self {
        let empty = Stream {
            flow: 0.0,
            composition: vec![1.0 / nc as f64; nc],
            temperature: 298.15,
            pressure: 101.325,
            vapor_fraction: 0.0,
        };
        TrainSolution {
            columns,
            product: empty.clone(),
            waste_heavy: empty.clone(),
            waste_light: empty.clone(),
            midboiler_out: empty,
            total_reboiler_duty: 0.0,
            total_condenser_duty: 0.0,
            aniline_purity: 0.0,
            max_f_factors: [0.0; 3],
            feasible: false,
            failed_column: Some(failed_column),
            diagnostics: Some(diagnostics),
        }
    }
}

/// One quantified spec violation; `magnitude` is the exceedance in the
/// spec's own units.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecViolation {
    Purity { achieved: f64, required: f64 },
    ReboilerTemperature { column: usize, value: f64, limit: f64 },
    FFactorHigh { column: usize, value: f64, limit: f64 },
    FFactorLow { column: usize, value: f64, limit: f64 },
}

impl SpecViolation {
    pub fn magnitude(&self) -> f64 {
        match self {
            SpecViolation::Purity { achieved, required } => required - achieved,
            SpecViolation::ReboilerTemperature { value, limit, .. } => value - limit,
            SpecViolation::FFactorHigh { value, limit, .. } => value - limit,
            SpecViolation::FFactorLow { value, limit, .. } => limit - value,
        }
    }
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecViolation::Purity { achieved, required } => {
                write!(f, "purity {achieved:.5} below spec {required:.5}")
            }
            SpecViolation::ReboilerTemperature { column, value, limit } => {
                write!(
                    f,
                    "column {} reboiler {value:.1} K above ceiling {limit:.1} K",
                    column + 1
                )
            }
            SpecViolation::FFactorHigh { column, value, limit } => {
                write!(
                    f,
                    "column {} F-factor {value:.3} above band limit {limit:.3}",
                    column + 1
                )
            }
            SpecViolation::FFactorLow { column, value, limit } => {
                write!(
                    f,
                    "column {} F-factor {value:.3} below band limit {limit:.3}",
                    column + 1
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowsheetError {
    InvalidInput(String),
    /// Staged initialization could not converge the named column.
    InitializationFailed { column: usize, reason: String },
    Thermo(String),
}

impl fmt::Display for FlowsheetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowsheetError::InvalidInput(m) => write!(f, "invalid flowsheet input: {m}"),
            FlowsheetError::InitializationFailed { column, reason } => {
                write!(f, "initialization failed at column {}: {reason}", column + 1)
            }
            FlowsheetError::Thermo(m) => write!(f, "thermo failure: {m}"),
        }
    }
}

impl std::error::Error for FlowsheetError {}

impl From<ThermoError> for FlowsheetError {
    fn from(e: ThermoError) -> Self {
        FlowsheetError::Thermo(e.to_string())
    }
}

/// Simulates the train at a fixed design and operating point.
///
/// Convergence failures do not raise: the returned solution carries
/// `feasible = false`, the failing column index and a diagnostic string.
/// Only structurally invalid input errors out.
pub fn simulate_train(
    design: &TrainDesign,
    op: &OperatingPoint,
    feed: &Stream,
    cs: &ComponentSet,
    cfg: &FlowsheetConfig,
    warm: Option<&TrainWarmStart>,
) -> Result<TrainSolution, FlowsheetError> {
    if !(feed.flow > 0.0) {
        return Err(FlowsheetError::InvalidInput(
            "feed flow must be positive".to_string(),
        ));
    }
    if feed.composition.len() != cs.len() {
        return Err(FlowsheetError::InvalidInput(
            "feed composition length mismatch".to_string(),
        ));
    }
    let nc = cs.len();
    let opts = cfg.column_options();
    let none = TrainWarmStart::default();
    let warm = warm.unwrap_or(&none);

    // Column 1 feed: saturated liquid at column 1 pressure.
    let feed1 = match saturate_liquid(feed, cfg.pressures[0], cs) {
        Ok(s) => s,
        Err(e) => {
            return Ok(TrainSolution::infeasible(
                Vec::new(),
                0,
                format!("feed conditioning: {e}"),
                nc,
            ))
        }
    };

    let d1 = non_heavy_flow(&feed1, cs);
    if !(d1 > 0.0 && d1 < feed1.flow) {
        return Ok(TrainSolution::infeasible(
            Vec::new(),
            0,
            format!("sharp-split distillate {d1:.4} kmol/h outside (0, F)"),
            nc,
        ));
    }
    let op1 = ColumnOperating {
        pressure: cfg.pressures[0],
        condenser: Condenser::Partial {
            temperature: cfg.condenser_temperature,
        },
        duty: DutySpec::RefluxAndDistillate {
            reflux: op.reflux_ratio_c1,
            distillate: d1,
        },
    };
    let sol1 = match solve_column(&design.columns[0], &op1, &feed1, cs, warm.columns[0].as_ref(), &opts) {
        Ok(s) => s,
        Err(e) => return Ok(TrainSolution::infeasible(Vec::new(), 0, e.to_string(), nc)),
    };

    // Column 2 feed: column 1 distillate re-flashed at column 2 pressure.
    let feed2 = match recondition(&sol1.distillate, cfg.pressures[1], cs) {
        Ok(s) => s,
        Err(e) => {
            return Ok(TrainSolution::infeasible(
                vec![sol1],
                1,
                format!("column 2 feed conditioning: {e}"),
                nc,
            ))
        }
    };
    let op2 = ColumnOperating {
        pressure: cfg.pressures[1],
        condenser: Condenser::Partial {
            temperature: cfg.condenser_temperature,
        },
        duty: DutySpec::Ratios {
            reflux: op.reflux_ratio_c2,
            boilup: op.boilup_ratio_c2,
        },
    };
    let sol2 = match solve_column(&design.columns[1], &op2, &feed2, cs, warm.columns[1].as_ref(), &opts) {
        Ok(s) => s,
        Err(e) => return Ok(TrainSolution::infeasible(vec![sol1], 1, e.to_string(), nc)),
    };

    // Column 3 feed: column 2 bottoms re-flashed at column 3 pressure.
    let feed3 = match recondition(&sol2.bottoms, cfg.pressures[2], cs) {
        Ok(s) => s,
        Err(e) => {
            return Ok(TrainSolution::infeasible(
                vec![sol1, sol2],
                2,
                format!("column 3 feed conditioning: {e}"),
                nc,
            ))
        }
    };
    let op3 = ColumnOperating {
        pressure: cfg.pressures[2],
        condenser: Condenser::Total,
        duty: DutySpec::RefluxAndPurity {
            reflux: op.reflux_ratio_c3,
            component: cs.product_index(),
            mass_fraction: cfg.purity_spec,
        },
    };
    let sol3 = match solve_column(&design.columns[2], &op3, &feed3, cs, warm.columns[2].as_ref(), &opts) {
        Ok(s) => s,
        Err(e) => return Ok(TrainSolution::infeasible(vec![sol1, sol2], 2, e.to_string(), nc)),
    };

    let purity = sol3
        .distillate
        .mass_fractions(cs)
        .map(|w| w[cs.product_index()])
        .unwrap_or(0.0);

    Ok(TrainSolution {
        product: sol3.distillate.clone(),
        waste_heavy: sol1.bottoms.clone(),
        waste_light: sol2.distillate.clone(),
        midboiler_out: sol3.bottoms.clone(),
        total_reboiler_duty: sol1.reboiler_duty + sol2.reboiler_duty + sol3.reboiler_duty,
        total_condenser_duty: sol1.condenser_duty + sol2.condenser_duty + sol3.condenser_duty,
        aniline_purity: purity,
        max_f_factors: [sol1.max_f_factor, sol2.max_f_factor, sol3.max_f_factor],
        feasible: true,
        failed_column: None,
        diagnostics: None,
        columns: vec![sol1, sol2, sol3],
    })
}

/// Total molar flow of everything not classed as a high boiler; pins the
/// column 1 distillate rate so the heavies (and only they) go down.
fn non_heavy_flow(feed: &Stream, cs: &ComponentSet) -> f64 {
    let total: f64 = feed.composition.iter().sum();
    let mut f = 0.0;
    for i in 0..cs.len() {
        if cs.component(i).boiling_class != BoilingClass::High {
            f += feed.composition[i] / total;
        }
    }
    f * feed.flow
}

/// Feed preconditioning: saturated liquid at the target pressure.
fn saturate_liquid(s: &Stream, p: f64, cs: &ComponentSet) -> Result<Stream, ThermoError> {
    let (t, _) = cs.bubble_point(&s.composition, p)?;
    Ok(Stream {
        flow: s.flow,
        composition: s.composition.clone(),
        temperature: t,
        pressure: p,
        vapor_fraction: 0.0,
    })
}

/// Inter-column conditioning: adiabatic-in-spirit re-flash of the stream at
/// its own temperature and the downstream column pressure, to give the next
/// column its thermal condition q.
fn recondition(s: &Stream, p: f64, cs: &ComponentSet) -> Result<Stream, ThermoError> {
    let flash = cs.flash_tp(&s.composition, s.temperature, p)?;
    Ok(Stream {
        flow: s.flow,
        composition: s.composition.clone(),
        temperature: s.temperature,
        pressure: p,
        vapor_fraction: flash.vapor_fraction,
    })
}

/// Staged initialization: sharp-split warm profiles by boiling class, then
/// one full pass of the train at the reference operating point. Where the
/// purity closure cannot be met at the reference point, the column 3 reflux
/// (and then the column 2 boilup) is stepped up before giving up, so the
/// returned operating point is feasible by construction.
pub fn initialize_train(
    design: &TrainDesign,
    feed: &Stream,
    cs: &ComponentSet,
    cfg: &FlowsheetConfig,
) -> Result<(OperatingPoint, TrainWarmStart), FlowsheetError> {
    if !(feed.flow > 0.0) {
        return Err(FlowsheetError::InvalidInput(
            "feed flow must be positive".to_string(),
        ));
    }
    let warm = sharp_split_warm(design, feed, cs, cfg)?;

    let base = cfg.bounds.clamp(&cfg.initial_operating);
    let mut attempts = Vec::with_capacity(3);
    attempts.push(base);
    let mut bumped = base;
    bumped.reflux_ratio_c3 = (bumped.reflux_ratio_c3 * 2.0).min(cfg.bounds.upper[3]);
    attempts.push(bumped);
    let mut bumped2 = bumped;
    bumped2.reflux_ratio_c3 = (bumped2.reflux_ratio_c3 * 2.0).min(cfg.bounds.upper[3]);
    bumped2.boilup_ratio_c2 = (bumped2.boilup_ratio_c2 * 1.5).min(cfg.bounds.upper[2]);
    attempts.push(bumped2);

    let mut last_failure = (0usize, "no attempt made".to_string());
    for op in attempts {
        let sol = simulate_train(design, &op, feed, cs, cfg, Some(&warm))?;
        if sol.feasible {
            return Ok((op, sol.warm_starts()));
        }
        last_failure = (
            sol.failed_column.unwrap_or(0),
            sol.diagnostics.unwrap_or_else(|| "unknown".to_string()),
        );
    }
    Err(FlowsheetError::InitializationFailed {
        column: last_failure.0,
        reason: last_failure.1,
    })
}

/// Constant-composition warm profiles from a sharp split by boiling class:
/// heavies down in column 1, lights up in column 2, product up in column 3.
fn sharp_split_warm(
    design: &TrainDesign,
    feed: &Stream,
    cs: &ComponentSet,
    cfg: &FlowsheetConfig,
) -> Result<TrainWarmStart, FlowsheetError> {
    let nc = cs.len();
    let total: f64 = feed.composition.iter().sum();
    let z: Vec<f64> = feed.composition.iter().map(|v| v / total).collect();

    let by_class = |z: &[f64], keep: &dyn Fn(usize) -> bool| -> Option<Vec<f64>> {
        let mut out = vec![0.0; nc];
        let mut s = 0.0;
        for i in 0..nc {
            if keep(i) {
                out[i] = z[i];
                s += z[i];
            }
        }
        if s > 1e-12 {
            out.iter_mut().for_each(|v| *v /= s);
            Some(out)
        } else {
            None
        }
    };
    let class = |i: usize| cs.component(i).boiling_class;

    // Column 1: heavies down.
    let top1 = by_class(&z, &|i| class(i) != BoilingClass::High).unwrap_or_else(|| z.clone());
    let bot1 = by_class(&z, &|i| class(i) == BoilingClass::High).unwrap_or_else(|| z.clone());
    // Column 2: lights up, rest down.
    let top2 = by_class(&top1, &|i| class(i) == BoilingClass::Low).unwrap_or_else(|| top1.clone());
    let bot2 = by_class(&top1, &|i| class(i) != BoilingClass::Low).unwrap_or_else(|| top1.clone());
    // Column 3: product up.
    let prod = cs.product_index();
    let top3 = by_class(&bot2, &|i| i == prod).unwrap_or_else(|| bot2.clone());
    let bot3 = by_class(&bot2, &|i| i != prod).unwrap_or_else(|| bot2.clone());

    let mut out = TrainWarmStart::default();
    let pairs = [(top1, bot1), (top2, bot2), (top3, bot3)];
    for (c, (top, bot)) in pairs.iter().enumerate() {
        let p = cfg.pressures[c];
        // The top stage sits near the dew point of the overhead product, not
        // its bubble point; the two differ by tens of kelvin when a column
        // takes most of its feed overhead.
        let t_top = cs
            .dew_point(top, p)
            .map_err(|e| FlowsheetError::InitializationFailed {
                column: c,
                reason: format!("sharp-split top estimate: {e}"),
            })?
            .0;
        let t_bot = cs
            .bubble_point(bot, p)
            .map_err(|e| FlowsheetError::InitializationFailed {
                column: c,
                reason: format!("sharp-split bottom estimate: {e}"),
            })?
            .0;
        let rows = design.columns[c].n_stages + 1;
        let mut temps = Vec::with_capacity(rows);
        let mut liq = Vec::with_capacity(rows);
        for m in 0..rows {
            let frac = if rows > 1 { m as f64 / (rows - 1) as f64 } else { 0.0 };
            temps.push(t_top * (1.0 - frac) + t_bot * frac);
            let mut row = vec![0.0; nc];
            let mut s = 0.0;
            for i in 0..nc {
                row[i] = top[i] * (1.0 - frac) + bot[i] * frac;
                s += row[i];
            }
            row.iter_mut().for_each(|v| *v /= s);
            liq.push(row);
        }
        out.columns[c] = Some(WarmStart {
            temperature: temps,
            liquid: liq,
            distillate_hint: None,
        });
    }
    Ok(out)
}

/// Quantifies every violated inequality spec; an empty list means the
/// solution is spec-feasible.
pub fn check_specs(sol: &TrainSolution, cfg: &FlowsheetConfig) -> Vec<SpecViolation> {
    let mut v = Vec::new();
    if sol.aniline_purity < cfg.purity_spec {
        v.push(SpecViolation::Purity {
            achieved: sol.aniline_purity,
            required: cfg.purity_spec,
        });
    }
    if let Some(col1) = sol.columns.first() {
        let t_reb = *col1.stages.temperature.last().unwrap();
        if t_reb > cfg.t_degradation {
            v.push(SpecViolation::ReboilerTemperature {
                column: 0,
                value: t_reb,
                limit: cfg.t_degradation,
            });
        }
    }
    let (f_lo, f_hi) = cfg.f_factor_band;
    for (c, ff) in sol.max_f_factors.iter().enumerate() {
        if *ff > f_hi {
            v.push(SpecViolation::FFactorHigh {
                column: c,
                value: *ff,
                limit: f_hi,
            });
        } else if *ff < f_lo {
            v.push(SpecViolation::FFactorLow {
                column: c,
                value: *ff,
                limit: f_lo,
            });
        }
    }
    v
}
