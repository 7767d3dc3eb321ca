//! Annual-profit objective: product revenue minus waste disposal, utilities
//! and depreciated investment.
//!
//! The paper-style objective charges the two waste outlets (heavy bottoms of
//! column 1, light overheads of column 2) a disposal fee, prices utilities
//! per kWh of reboiler steam and condenser cooling, and depreciates the
//! Lang-factored equipment cost linearly. The mid-boiler outlet of column 3
//! carries neither revenue nor cost. All prices and correlation coefficients
//! are configuration with documented defaults; none are baked into logic.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::flowsheet::{TrainDesign, TrainSolution};
use crate::thermo::ComponentSet;

/// Prices, tariffs and cost-correlation coefficients.
///
/// Defaults are literature-style magnitudes for a small vacuum train in EUR:
/// aniline at 1.40 EUR/kg, hazardous-waste disposal at 0.85 EUR/kg,
/// low-pressure steam at 0.030 EUR/kWh, cooling water at 0.006 EUR/kWh,
/// 8000 operating hours, Lang factor 4.74 for a fluid-processing plant, and
/// a vessel power law anchored at 30 kEUR for a 1 m by 10 m column shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EconParams {
    /// EUR/kg product (C1).
    pub price_product: f64,
    /// EUR/kg waste disposal (C2).
    pub cost_waste: f64,
    /// EUR/kWh reboiler steam.
    pub steam_tariff: f64,
    /// EUR/kWh condenser cooling.
    pub cooling_tariff: f64,
    pub lang_factor: f64,
    pub depreciation_years: f64,
    /// h/y on stream.
    pub operating_hours: f64,
    /// m of packed height per equilibrium stage.
    pub stage_height: f64,
    /// EUR for a shell at the reference diameter and height.
    pub shell_base_cost: f64,
    pub shell_diameter_exponent: f64,
    pub shell_height_exponent: f64,
    /// m
    pub reference_diameter: f64,
    /// m
    pub reference_height: f64,
    /// EUR/m3 of packed volume.
    pub packing_cost: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        EconParams {
            price_product: 1.40,
            cost_waste: 0.85,
            steam_tariff: 0.030,
            cooling_tariff: 0.006,
            lang_factor: 4.74,
            depreciation_years: 10.0,
            operating_hours: 8000.0,
            stage_height: 0.5,
            shell_base_cost: 30_000.0,
            shell_diameter_exponent: 1.066,
            shell_height_exponent: 0.802,
            reference_diameter: 1.0,
            reference_height: 10.0,
            packing_cost: 1200.0,
        }
    }
}

impl EconParams {
    pub fn validate(&self) -> Result<(), String> {
        let nonneg = [
            ("price_product", self.price_product),
            ("cost_waste", self.cost_waste),
            ("steam_tariff", self.steam_tariff),
            ("cooling_tariff", self.cooling_tariff),
            ("shell_base_cost", self.shell_base_cost),
            ("packing_cost", self.packing_cost),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.depreciation_years > 0.0) {
            return Err("depreciation_years must be positive".to_string());
        }
        if !(self.operating_hours > 0.0 && self.operating_hours <= 8784.0) {
            return Err(format!(
                "operating_hours {} outside (0, 8784]",
                self.operating_hours
            ));
        }
        if !(self.lang_factor > 0.0
            && self.stage_height > 0.0
            && self.reference_diameter > 0.0
            && self.reference_height > 0.0)
        {
            return Err("lang_factor, stage_height and reference sizes must be positive".to_string());
        }
        if !(self.shell_diameter_exponent > 0.0 && self.shell_height_exponent > 0.0) {
            return Err("shell cost exponents must be positive".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EconError {
    /// Profit requested for a solution that did not converge.
    InfeasibleSolution,
}

impl fmt::Display for EconError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EconError::InfeasibleSolution => {
                write!(f, "annual profit undefined for an infeasible solution")
            }
        }
    }
}

impl std::error::Error for EconError {}

/// Fixed capital for the train: per column, a shell power law in diameter
/// and height plus packing by volume, totalled and Lang-factored. Height is
/// stage count times the configured stage height. Depends only on the
/// design, never on a scenario.
pub fn investment_cost(design: &TrainDesign, econ: &EconParams) -> f64 {
    let mut equipment = 0.0;
    for col in &design.columns {
        let height = col.n_stages as f64 * econ.stage_height;
        let shell = econ.shell_base_cost
            * (col.diameter / econ.reference_diameter).powf(econ.shell_diameter_exponent)
            * (height / econ.reference_height).powf(econ.shell_height_exponent);
        let packing = econ.packing_cost * FRAC_PI_4 * col.diameter * col.diameter * height;
        equipment += shell + packing;
    }
    equipment * econ.lang_factor
}

/// EUR/y for steam and cooling at the solution's duties.
pub fn utility_cost(sol: &TrainSolution, econ: &EconParams) -> f64 {
    (econ.steam_tariff * sol.total_reboiler_duty
        + econ.cooling_tariff * sol.total_condenser_duty)
        * econ.operating_hours
}

/// EUR/y annual profit of one converged solve.
pub fn annual_profit(
    sol: &TrainSolution,
    design: &TrainDesign,
    econ: &EconParams,
    cs: &ComponentSet,
) -> Result<f64, EconError> {
    if !sol.feasible {
        return Err(EconError::InfeasibleSolution);
    }
    let product_kg_h = sol.product.mass_flow(cs);
    let waste_kg_h = sol.waste_heavy.mass_flow(cs) + sol.waste_light.mass_flow(cs);
    let revenue = econ.price_product * product_kg_h * econ.operating_hours;
    let disposal = econ.cost_waste * waste_kg_h * econ.operating_hours;
    let utilities = utility_cost(sol, econ);
    let depreciation = investment_cost(design, econ) / econ.depreciation_years;
    Ok(revenue - disposal - utilities - depreciation)
}
