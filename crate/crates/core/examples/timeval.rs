use std::time::Instant;

use trainopt_core::config::test_support::{component_set, robust_design, scenario_set, test_config};
use trainopt_core::evolution::evaluate_design;

fn main() {
    let cs = component_set();
    let scenarios = scenario_set();
    let cfg = test_config();
    let design = robust_design();

    let t0 = Instant::now();
    let rec = evaluate_design(
        &design,
        &cs,
        &scenarios,
        &cfg.flowsheet,
        &cfg.economics,
        &cfg.search,
        -1.0e8,
    );
    let dt = t0.elapsed().as_secs_f64();
    println!("fitness {:.1} in {:.2} s", rec.fitness, dt);
    for (i, s) in rec.per_scenario.iter().enumerate() {
        println!("  scenario {i}: profit {:.2} feasible {}", s.profit, s.feasible);
    }
}
