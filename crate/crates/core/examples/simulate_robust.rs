//! Simulates the robust reference design on the base scenario and prints the
//! train summary. Run with RUST_LOG=trace to watch the column sweeps.

use trainopt_core::config::test_support::{component_set, robust_design, scenario_set, test_config};
use trainopt_core::flowsheet::{initialize_train, simulate_train};

fn main() {
    env_logger::init();
    let cs = component_set();
    let cfg = test_config();
    let scen = scenario_set(&cs);
    let design = robust_design(&cfg);
    let feed = scen.to_feed_stream(0, &cs);

    match initialize_train(&design, &feed, &cs, &cfg) {
        Ok((op, warm)) => {
            println!("initialized at {op:?}");
            let sol = simulate_train(&design, &op, &feed, &cs, &cfg, Some(&warm)).unwrap();
            println!(
                "feasible {} purity {:.5} product {:.3} kmol/h",
                sol.feasible, sol.aniline_purity, sol.product.flow
            );
            println!(
                "duties: reboilers {:.1} kW condensers {:.1} kW; F-factors {:?}",
                sol.total_reboiler_duty, sol.total_condenser_duty, sol.max_f_factors
            );
        }
        Err(e) => {
            println!("initialization failed: {e}");
        }
    }
}
