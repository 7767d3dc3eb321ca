//! Per-scenario continuous optimization of the operating point.
//!
//! A bounded derivative-free pattern search (compass poll with step halving)
//! maximizes annual profit over the four operating variables, with spec
//! violations handled through an exact penalty. The simulator exposes no
//! derivatives, the box has only four coordinates, and the search must be
//! bit-reproducible, which rules out stochastic methods; the compass poll
//! uses a fixed direction order and no randomness at all.
//!
//! Failed simulations score negative infinity so any converged point beats
//! them; if nothing converges the result says so instead of inventing a
//! number.

use serde::{Deserialize, Serialize};

use crate::column::Stream;
use crate::economics::{annual_profit, EconParams};
use crate::flowsheet::{
    check_specs, simulate_train, FlowsheetConfig, OperatingBounds, OperatingPoint, SpecViolation,
    TrainDesign, TrainWarmStart,
};
use crate::thermo::ComponentSet;

/// Search budget, termination tolerances and penalty transcription weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Simulator evaluations allowed per scenario.
    pub max_evaluations: usize,
    /// Initial poll step as a fraction of each coordinate's range.
    pub initial_step: f64,
    /// Terminate when the step fraction falls below this.
    pub min_step: f64,
    /// Score improvements smaller than this (EUR/y) count as no progress.
    pub objective_tolerance: f64,
    /// Feasibility tolerance on the purity spec (mass fraction).
    pub purity_tolerance: f64,
    /// Feasibility tolerance on the F-factor band (Pa^0.5).
    pub f_factor_tolerance: f64,
    /// Feasibility tolerance on the reboiler ceiling (K).
    pub temperature_tolerance: f64,
    /// EUR per unit purity shortfall.
    pub penalty_purity: f64,
    /// EUR per Pa^0.5 outside the band.
    pub penalty_f_factor: f64,
    /// EUR per K above the ceiling.
    pub penalty_temperature: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_evaluations: 200,
            initial_step: 0.25,
            min_step: 1e-3,
            objective_tolerance: 50.0,
            purity_tolerance: 1e-6,
            f_factor_tolerance: 1e-6,
            temperature_tolerance: 1e-6,
            penalty_purity: 1e11,
            penalty_f_factor: 1e7,
            penalty_temperature: 1e6,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_evaluations == 0 {
            return Err("max_evaluations must be positive".to_string());
        }
        if !(self.initial_step > 0.0 && self.initial_step <= 1.0) {
            return Err(format!("initial_step {} outside (0, 1]", self.initial_step));
        }
        if !(self.min_step > 0.0 && self.min_step < self.initial_step) {
            return Err("min_step must be positive and below initial_step".to_string());
        }
        let pos = [
            ("purity_tolerance", self.purity_tolerance),
            ("f_factor_tolerance", self.f_factor_tolerance),
            ("temperature_tolerance", self.temperature_tolerance),
        ];
        for (name, v) in pos {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        if !(self.objective_tolerance >= 0.0) {
            return Err("objective_tolerance must be non-negative".to_string());
        }
        if !(self.penalty_purity >= 0.0
            && self.penalty_f_factor >= 0.0
            && self.penalty_temperature >= 0.0)
        {
            return Err("penalty weights must be non-negative".to_string());
        }
        Ok(())
    }

    /// Penalized score: profit minus weighted violation magnitudes.
    pub fn score(&self, profit: f64, violations: &[SpecViolation]) -> f64 {
        let mut s = profit;
        for v in violations {
            let m = v.magnitude().max(0.0);
            s -= m * match v {
                SpecViolation::Purity { .. } => self.penalty_purity,
                SpecViolation::ReboilerTemperature { .. } => self.penalty_temperature,
                SpecViolation::FFactorHigh { .. } | SpecViolation::FFactorLow { .. } => {
                    self.penalty_f_factor
                }
            };
        }
        s
    }

    /// Spec feasibility under the configured tolerances.
    pub fn within_tolerance(&self, violations: &[SpecViolation]) -> bool {
        violations.iter().all(|v| {
            let tol = match v {
                SpecViolation::Purity { .. } => self.purity_tolerance,
                SpecViolation::ReboilerTemperature { .. } => self.temperature_tolerance,
                SpecViolation::FFactorHigh { .. } | SpecViolation::FFactorLow { .. } => {
                    self.f_factor_tolerance
                }
            };
            v.magnitude() <= tol
        })
    }
}

/// One objective evaluation. `profit` is absent when the simulation failed;
/// `score` is the penalized value the search ranks by.
#[derive(Debug, Clone)]
pub struct ObjectiveValue {
    pub score: f64,
    pub profit: Option<f64>,
    pub violations: Vec<SpecViolation>,
}

/// Anything the pattern search can optimize. Implementations must be
/// deterministic: the search replays evaluation order exactly.
pub trait OperatingObjective {
    fn evaluate(&mut self, op: &OperatingPoint) -> ObjectiveValue;
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_point: OperatingPoint,
    /// EUR/y at the best point; absent when no evaluation converged.
    pub best_profit: Option<f64>,
    /// Penalized score at the best point.
    pub best_score: f64,
    /// All constraints within tolerance and the simulation converged.
    pub feasible: bool,
    pub evaluations_used: usize,
    /// Violations at the best point, raw magnitudes.
    pub violations: Vec<SpecViolation>,
}

/// Compass pattern search maximizing the objective inside the box.
///
/// Full poll in a fixed coordinate order, best improvement wins, step halves
/// on polls that gain less than the objective tolerance; terminates on the
/// step floor or the evaluation budget. Never evaluates outside the box.
pub fn optimize_point(
    objective: &mut dyn OperatingObjective,
    x0: &OperatingPoint,
    bounds: &OperatingBounds,
    cfg: &SearchConfig,
) -> SearchResult {
    let start = bounds.clamp(x0);
    assert!(bounds.contains(&start), "clamped start left the box");

    let range: [f64; 4] = {
        let mut r = [0.0; 4];
        for j in 0..4 {
            r[j] = bounds.upper[j] - bounds.lower[j];
        }
        r
    };

    let mut evals = 0usize;
    let mut eval = |op: &OperatingPoint, n: &mut usize| -> ObjectiveValue {
        assert!(bounds.contains(op), "objective called outside the box");
        *n += 1;
        objective.evaluate(op)
    };

    let first = eval(&start, &mut evals);
    let mut best_x = start.to_array();
    let mut best = first;

    let mut step = cfg.initial_step;
    while step >= cfg.min_step && evals < cfg.max_evaluations {
        let mut poll_best: Option<([f64; 4], ObjectiveValue)> = None;
        'poll: for j in 0..4 {
            for dir in [1.0, -1.0] {
                if evals >= cfg.max_evaluations {
                    break 'poll;
                }
                let mut cand = best_x;
                cand[j] = (cand[j] + dir * step * range[j])
                    .clamp(bounds.lower[j], bounds.upper[j]);
                if cand[j] == best_x[j] {
                    continue; // pinned at the bound, nothing new
                }
                let op = OperatingPoint::from_array(cand);
                let v = eval(&op, &mut evals);
                let gain_over = poll_best
                    .as_ref()
                    .map(|(_, pv)| pv.score)
                    .unwrap_or(best.score);
                if v.score > gain_over {
                    poll_best = Some((cand, v));
                }
            }
        }
        match poll_best {
            Some((cand, v)) if v.score > best.score + cfg.objective_tolerance => {
                best_x = cand;
                best = v;
            }
            Some((cand, v)) => {
                // Accept marginal gains but treat the poll as stalled.
                if v.score > best.score {
                    best_x = cand;
                    best = v;
                }
                step *= 0.5;
            }
            None => step *= 0.5,
        }
    }

    let feasible = best.profit.is_some() && cfg.within_tolerance(&best.violations);
    SearchResult {
        best_point: OperatingPoint::from_array(best_x),
        best_profit: best.profit,
        best_score: best.score,
        feasible,
        evaluations_used: evals,
        violations: best.violations,
    }
}

/// The real objective: simulate the train, score profit with penalties.
/// Warm starts are threaded from the last converged evaluation, and the best
/// point's warm start is kept for chaining into the next scenario.
pub struct TrainObjective<'a> {
    pub design: &'a TrainDesign,
    pub feed: &'a Stream,
    pub cs: &'a ComponentSet,
    pub flowsheet: &'a FlowsheetConfig,
    pub econ: &'a EconParams,
    pub search: &'a SearchConfig,
    warm: Option<TrainWarmStart>,
    best_warm: Option<TrainWarmStart>,
    best_score: f64,
}

impl<'a> TrainObjective<'a> {
    pub fn new(
        design: &'a TrainDesign,
        feed: &'a Stream,
        cs: &'a ComponentSet,
        flowsheet: &'a FlowsheetConfig,
        econ: &'a EconParams,
        search: &'a SearchConfig,
        warm: Option<TrainWarmStart>,
    ) -> Self {
        TrainObjective {
            design,
            feed,
            cs,
            flowsheet,
            econ,
            search,
            warm,
            best_warm: None,
            best_score: f64::NEG_INFINITY,
        }
    }

    /// Warm start of the best point seen, for the next scenario in the chain.
    pub fn into_best_warm(self) -> Option<TrainWarmStart> {
        self.best_warm
    }
}

impl OperatingObjective for TrainObjective<'_> {
    fn evaluate(&mut self, op: &OperatingPoint) -> ObjectiveValue {
        let sol = match simulate_train(
            self.design,
            op,
            self.feed,
            self.cs,
            self.flowsheet,
            self.warm.as_ref(),
        ) {
            Ok(s) => s,
            Err(_) => {
                return ObjectiveValue {
                    score: f64::NEG_INFINITY,
                    profit: None,
                    violations: Vec::new(),
                }
            }
        };
        if !sol.feasible {
            return ObjectiveValue {
                score: f64::NEG_INFINITY,
                profit: None,
                violations: Vec::new(),
            };
        }
        let profit = match annual_profit(&sol, self.design, self.econ, self.cs) {
            Ok(p) => p,
            Err(_) => {
                return ObjectiveValue {
                    score: f64::NEG_INFINITY,
                    profit: None,
                    violations: Vec::new(),
                }
            }
        };
        let violations = check_specs(&sol, self.flowsheet);
        let score = self.search.score(profit, &violations);
        let warm = sol.warm_starts();
        if score > self.best_score {
            self.best_score = score;
            self.best_warm = Some(warm.clone());
        }
        self.warm = Some(warm);
        ObjectiveValue {
            score,
            profit: Some(profit),
            violations,
        }
    }
}

/// Optimizes the operating point of one (design, scenario feed) pair.
/// Returns the search result together with the best point's warm start for
/// scenario chaining.
#[allow(clippy::too_many_arguments)]
pub fn optimize_operating(
    design: &TrainDesign,
    feed: &Stream,
    cs: &ComponentSet,
    flowsheet: &FlowsheetConfig,
    econ: &EconParams,
    search: &SearchConfig,
    x0: &OperatingPoint,
    warm: Option<TrainWarmStart>,
) -> (SearchResult, Option<TrainWarmStart>) {
    let mut objective = TrainObjective::new(design, feed, cs, flowsheet, econ, search, warm);
    let result = optimize_point(&mut objective, x0, &flowsheet.bounds, search);
    (result, objective.into_best_warm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::test_support::{component_set, robust_design, scenario_set, test_config};

    /// Concave separable quadratic with maximum at `c`; counts calls and
    /// asserts the box discipline itself.
    struct Quadratic {
        c: [f64; 4],
        bounds: OperatingBounds,
        calls: usize,
    }

    impl OperatingObjective for Quadratic {
        fn evaluate(&mut self, op: &OperatingPoint) -> ObjectiveValue {
            assert!(self.bounds.contains(op), "stub evaluated outside the box");
            self.calls += 1;
            let a = op.to_array();
            let score: f64 = -(0..4).map(|j| (a[j] - self.c[j]).powi(2)).sum::<f64>();
            ObjectiveValue {
                score,
                profit: Some(score),
                violations: Vec::new(),
            }
        }
    }

    fn unit_bounds() -> OperatingBounds {
        OperatingBounds {
            lower: [0.0; 4],
            upper: [1.0; 4],
        }
    }

    fn tight_cfg() -> SearchConfig {
        SearchConfig {
            max_evaluations: 20_000,
            initial_step: 0.25,
            min_step: 1e-6,
            objective_tolerance: 0.0,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn quadratic_optimum_inside_the_box_is_found() {
        let bounds = unit_bounds();
        let c = [0.31, 0.62, 0.18, 0.84];
        let mut obj = Quadratic { c, bounds, calls: 0 };
        let x0 = OperatingPoint::from_array([0.9, 0.1, 0.9, 0.1]);
        let r = optimize_point(&mut obj, &x0, &bounds, &tight_cfg());
        let a = r.best_point.to_array();
        for j in 0..4 {
            assert!(
                (a[j] - c[j]).abs() < 1e-4,
                "coordinate {j}: {} vs {}",
                a[j],
                c[j]
            );
        }
        assert!(r.feasible);
    }

    #[test]
    fn quadratic_optimum_outside_clamps_to_the_projection() {
        let bounds = unit_bounds();
        // Projection of c onto the box: (1, 0.4, 0, 1).
        let c = [1.7, 0.4, -0.3, 2.0];
        let mut obj = Quadratic { c, bounds, calls: 0 };
        let x0 = OperatingPoint::from_array([0.5, 0.5, 0.5, 0.5]);
        let r = optimize_point(&mut obj, &x0, &bounds, &tight_cfg());
        let a = r.best_point.to_array();
        let expect = [1.0, 0.4, 0.0, 1.0];
        for j in 0..4 {
            assert!(
                (a[j] - expect[j]).abs() < 1e-4,
                "coordinate {j}: {} vs {}",
                a[j],
                expect[j]
            );
        }
    }

    #[test]
    fn search_improves_monotonically_and_respects_budget() {
        let bounds = unit_bounds();
        let c = [0.2, 0.8, 0.5, 0.5];
        let mut obj = Quadratic { c, bounds, calls: 0 };
        let x0 = OperatingPoint::from_array([0.95, 0.05, 0.05, 0.95]);
        let initial = obj.evaluate(&x0).score;
        let cfg = SearchConfig {
            max_evaluations: 60,
            ..tight_cfg()
        };
        let mut obj = Quadratic { c, bounds, calls: 0 };
        let r = optimize_point(&mut obj, &x0, &bounds, &cfg);
        assert!(r.best_score >= initial, "search went backwards");
        assert!(r.evaluations_used <= 60);
        assert_eq!(r.evaluations_used, obj.calls);
    }

    #[test]
    fn search_is_deterministic() {
        let bounds = unit_bounds();
        let c = [0.31, 0.62, 0.18, 0.84];
        let x0 = OperatingPoint::from_array([0.9, 0.1, 0.9, 0.1]);
        let run = || {
            let mut obj = Quadratic { c, bounds, calls: 0 };
            optimize_point(&mut obj, &x0, &bounds, &tight_cfg())
        };
        let a = run();
        let b = run();
        assert_eq!(a.best_point, b.best_point);
        assert_eq!(a.best_score.to_bits(), b.best_score.to_bits());
        assert_eq!(a.evaluations_used, b.evaluations_used);
    }

    #[test]
    fn start_outside_the_box_is_clamped_not_rejected() {
        let bounds = unit_bounds();
        let c = [0.5; 4];
        let mut obj = Quadratic { c, bounds, calls: 0 };
        let x0 = OperatingPoint::from_array([3.0, -2.0, 0.5, 7.0]);
        let r = optimize_point(&mut obj, &x0, &bounds, &tight_cfg());
        let a = r.best_point.to_array();
        for j in 0..4 {
            assert!((a[j] - 0.5).abs() < 1e-4);
        }
    }

    #[test]
    fn train_objective_smoke_run_improves_or_holds() {
        // Short budget against the real simulator: the result must come
        // back usable, within bounds, and no worse than the start.
        let cs = component_set();
        let fs = test_config();
        let econ = EconParams::default();
        let design = robust_design(&fs);
        let set = scenario_set(&cs);
        let feed = set.to_feed_stream(0, &cs);
        let search = SearchConfig {
            max_evaluations: 25,
            ..SearchConfig::default()
        };
        let (init_op, warm) =
            crate::flowsheet::initialize_train(&design, &feed, &cs, &fs).expect("init");
        let mut probe =
            TrainObjective::new(&design, &feed, &cs, &fs, &econ, &search, Some(warm.clone()));
        let start_score = probe.evaluate(&init_op).score;
        let (r, chained) =
            optimize_operating(&design, &feed, &cs, &fs, &econ, &search, &init_op, Some(warm));
        assert!(r.evaluations_used <= 25);
        assert!(fs.bounds.contains(&r.best_point));
        assert!(r.best_score >= start_score, "search lost ground");
        assert!(r.best_profit.is_some());
        assert!(chained.is_some());
    }
}
