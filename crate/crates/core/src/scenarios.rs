//! Feed-composition scenarios and their probability weights.
//!
//! The feed to the train is uncertain: a handful of plant operating points
//! are tabulated as weight-percent compositions, each with a relative weight.
//! This module loads that table, reconciles it against the component data
//! (the two files may list components in different orders), converts to mole
//! fractions, and provides the expected-value aggregation used as the
//! optimization fitness.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::column::Stream;
use crate::thermo::{ComponentSet, ThermoError};

/// One feed realization. Compositions are stored in the component-set order,
/// not the order of the scenario file.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    /// Normalized probability weight; the set sums to one.
    pub weight: f64,
    pub mass_fractions: Vec<f64>,
    pub mole_fractions: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
    /// kg/h, common to all scenarios.
    feed_mass_flow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    Io(String),
    Parse(String),
    /// Component named in the scenario file but absent from the data set,
    /// or vice versa.
    ComponentMismatch(String),
    BadValue(String),
    Thermo(String),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Io(m) => write!(f, "scenario file unreadable: {m}"),
            ScenarioError::Parse(m) => write!(f, "scenario file malformed: {m}"),
            ScenarioError::ComponentMismatch(m) => write!(f, "component mismatch: {m}"),
            ScenarioError::BadValue(m) => write!(f, "bad scenario value: {m}"),
            ScenarioError::Thermo(m) => write!(f, "thermo failure: {m}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

impl From<ThermoError> for ScenarioError {
    fn from(e: ThermoError) -> Self {
        ScenarioError::Thermo(e.to_string())
    }
}

#[derive(Deserialize)]
struct ScenariosFile {
    schema_version: u32,
    feed_mass_flow: f64,
    component_order: Vec<String>,
    scenarios: Vec<ScenarioRow>,
}

#[derive(Deserialize)]
struct ScenarioRow {
    name: String,
    weight: f64,
    wt_percent: Vec<f64>,
}

impl ScenarioSet {
    /// Loads and validates a scenario file against a component set.
    ///
    /// Weight-percent rows may be off unit sum by up to one percentage point
    /// (tabulated values carry rounding); they are rescaled exactly. Larger
    /// deviations are rejected as data errors.
    pub fn load(path: &Path, cs: &ComponentSet) -> Result<Self, ScenarioError> {
        let raw = std::fs::read(path).map_err(|e| ScenarioError::Io(e.to_string()))?;
        let digest: String = Sha256::digest(&raw)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        log::info!("scenario data {} sha256 {digest}", path.display());
        let parsed: ScenariosFile = toml::from_str(
            std::str::from_utf8(&raw).map_err(|e| ScenarioError::Parse(e.to_string()))?,
        )
        .map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Self::from_parsed(parsed, cs)
    }

    fn from_parsed(file: ScenariosFile, cs: &ComponentSet) -> Result<Self, ScenarioError> {
        if file.schema_version != 1 {
            return Err(ScenarioError::Parse(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        if !(file.feed_mass_flow > 0.0) {
            return Err(ScenarioError::BadValue(format!(
                "feed_mass_flow {} must be positive",
                file.feed_mass_flow
            )));
        }
        if file.scenarios.is_empty() {
            return Err(ScenarioError::BadValue("no scenarios defined".to_string()));
        }

        // The scenario file keeps the source table's column order; map each
        // column to its index in the component set and insist on a bijection.
        if file.component_order.len() != cs.len() {
            return Err(ScenarioError::ComponentMismatch(format!(
                "scenario file lists {} components, data set has {}",
                file.component_order.len(),
                cs.len()
            )));
        }
        let mut perm = Vec::with_capacity(cs.len());
        for name in &file.component_order {
            match cs.index_of(name) {
                Some(i) => {
                    if perm.contains(&i) {
                        return Err(ScenarioError::ComponentMismatch(format!(
                            "component {name} listed twice"
                        )));
                    }
                    perm.push(i);
                }
                None => {
                    return Err(ScenarioError::ComponentMismatch(format!(
                        "component {name} not in the data set"
                    )))
                }
            }
        }

        let weight_sum: f64 = file.scenarios.iter().map(|s| s.weight).sum();
        if !(weight_sum > 0.0) || file.scenarios.iter().any(|s| !(s.weight >= 0.0)) {
            return Err(ScenarioError::BadValue(
                "scenario weights must be non-negative with a positive sum".to_string(),
            ));
        }

        let mut scenarios = Vec::with_capacity(file.scenarios.len());
        for row in &file.scenarios {
            if row.wt_percent.len() != cs.len() {
                return Err(ScenarioError::BadValue(format!(
                    "scenario {} has {} entries, expected {}",
                    row.name,
                    row.wt_percent.len(),
                    cs.len()
                )));
            }
            if row.wt_percent.iter().any(|v| !(*v >= 0.0)) {
                return Err(ScenarioError::BadValue(format!(
                    "scenario {} has a negative entry",
                    row.name
                )));
            }
            let sum: f64 = row.wt_percent.iter().sum();
            if (sum - 100.0).abs() > 1.0 {
                return Err(ScenarioError::BadValue(format!(
                    "scenario {} weight percents sum to {sum:.2}, outside 100 +/- 1",
                    row.name
                )));
            }
            let mut mass = vec![0.0; cs.len()];
            for (col, v) in row.wt_percent.iter().enumerate() {
                mass[perm[col]] = v / sum;
            }
            let mole = cs.mole_from_mass(&mass)?;
            scenarios.push(Scenario {
                name: row.name.clone(),
                weight: row.weight / weight_sum,
                mass_fractions: mass,
                mole_fractions: mole,
            });
        }

        Ok(ScenarioSet {
            scenarios,
            feed_mass_flow: file.feed_mass_flow,
        })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn scenario(&self, i: usize) -> &Scenario {
        &self.scenarios[i]
    }

    /// kg/h
    pub fn feed_mass_flow(&self) -> f64 {
        self.feed_mass_flow
    }

    /// The fresh feed of scenario `i` as a liquid stream at ambient
    /// conditions. The flowsheet re-conditions it to the first column's
    /// pressure and thermal state.
    pub fn to_feed_stream(&self, i: usize, cs: &ComponentSet) -> Stream {
        let sc = &self.scenarios[i];
        let molar_mass = cs.mixture_molar_mass(&sc.mole_fractions);
        Stream {
            flow: self.feed_mass_flow / molar_mass,
            composition: sc.mole_fractions.clone(),
            temperature: 298.15,
            pressure: 101.325,
            vapor_fraction: 0.0,
        }
    }

    /// Probability-weighted expectation of a per-scenario quantity, the
    /// aggregation used for the stochastic fitness.
    pub fn weighted_fitness(&self, per_scenario: &[f64]) -> f64 {
        assert_eq!(
            per_scenario.len(),
            self.scenarios.len(),
            "one value per scenario required"
        );
        self.scenarios
            .iter()
            .zip(per_scenario)
            .map(|(s, v)| s.weight * v)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::test_support::{component_set, scenario_set};
    use std::io::Write as _;

    #[test]
    fn shipped_file_loads_with_uniform_weights() {
        let cs = component_set();
        let set = scenario_set(&cs);
        assert_eq!(set.len(), 7);
        for sc in set.scenarios() {
            assert!((sc.weight - 1.0 / 7.0).abs() < 1e-12);
            let sm: f64 = sc.mass_fractions.iter().sum();
            let sx: f64 = sc.mole_fractions.iter().sum();
            assert!((sm - 1.0).abs() < 1e-12);
            assert!((sx - 1.0).abs() < 1e-12);
        }
        assert_eq!(set.scenario(0).name, "base");
    }

    #[test]
    fn base_scenario_round_trips_the_tabulated_percents() {
        // The base row sums to 99.7; each stored mass fraction must be the
        // tabulated percent divided by that sum, reindexed by name.
        let cs = component_set();
        let set = scenario_set(&cs);
        let base = set.scenario(0);
        let tab = [
            ("acetone", 2.0),
            ("water", 1.0),
            ("styrene", 3.0),
            ("indole", 7.9),
            ("propanol", 6.9),
            ("o-toluidine", 4.9),
            ("p-toluidine", 14.8),
            ("aniline", 29.6),
            ("tripropylene-glycol", 24.7),
            ("mda", 4.9),
        ];
        let sum: f64 = tab.iter().map(|(_, v)| v).sum();
        assert!((sum - 99.7).abs() < 1e-12);
        for (name, pct) in tab {
            let i = cs.index_of(name).unwrap();
            assert!(
                (base.mass_fractions[i] - pct / sum).abs() < 1e-12,
                "{name} mass fraction off"
            );
        }
    }

    #[test]
    fn scenarios_two_and_three_are_identical() {
        // The source table repeats one operating point; the loader must not
        // "fix" that.
        let cs = component_set();
        let set = scenario_set(&cs);
        let a = set.scenario(2);
        let b = set.scenario(3);
        assert_eq!(a.mass_fractions, b.mass_fractions);
        assert_ne!(a.name, b.name);
    }

    #[test]
    fn feed_stream_carries_the_specified_mass_flow() {
        let cs = component_set();
        let set = scenario_set(&cs);
        for i in 0..set.len() {
            let feed = set.to_feed_stream(i, &cs);
            assert!((feed.mass_flow(&cs) - set.feed_mass_flow()).abs() < 1e-9);
            assert_eq!(feed.vapor_fraction, 0.0);
        }
    }

    #[test]
    fn mole_fractions_are_consistent_with_mass_fractions() {
        let cs = component_set();
        let set = scenario_set(&cs);
        for sc in set.scenarios() {
            let back = cs.mass_from_mole(&sc.mole_fractions).unwrap();
            for i in 0..cs.len() {
                assert!((back[i] - sc.mass_fractions[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weighted_fitness_is_the_probability_mean() {
        let cs = component_set();
        let set = scenario_set(&cs);
        let vals = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        assert!((set.weighted_fitness(&vals) - 4.0).abs() < 1e-12);
        let ones = [1.0; 7];
        assert!((set.weighted_fitness(&ones) - 1.0).abs() < 1e-12);
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn rejects_rows_far_from_unit_sum() {
        let cs = component_set();
        let names: Vec<String> = cs
            .components()
            .iter()
            .map(|c| format!("\"{}\"", c.name))
            .collect();
        let body = format!(
            "schema_version = 1\nfeed_mass_flow = 1000.0\ncomponent_order = [{}]\n\n\
             [[scenarios]]\nname = \"bad\"\nweight = 1.0\n\
             wt_percent = [10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 5.0]\n",
            names.join(", ")
        );
        let f = write_temp(&body);
        match ScenarioSet::load(f.path(), &cs) {
            Err(ScenarioError::BadValue(m)) => assert!(m.contains("sum")),
            other => panic!("expected BadValue, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_and_missing_components() {
        let cs = component_set();
        let body = "schema_version = 1\nfeed_mass_flow = 1000.0\n\
                    component_order = [\"mystery\"]\n\n\
                    [[scenarios]]\nname = \"x\"\nweight = 1.0\nwt_percent = [100.0]\n";
        let f = write_temp(body);
        assert!(matches!(
            ScenarioSet::load(f.path(), &cs),
            Err(ScenarioError::ComponentMismatch(_))
        ));
    }

    #[test]
    fn rejects_bad_weights_and_schema() {
        let cs = component_set();
        let names: Vec<String> = cs
            .components()
            .iter()
            .map(|c| format!("\"{}\"", c.name))
            .collect();
        let order = names.join(", ");
        let row = "wt_percent = [2.0, 1.0, 6.9, 3.0, 7.9, 29.6, 4.9, 14.8, 24.7, 4.9]";
        let neg = format!(
            "schema_version = 1\nfeed_mass_flow = 1000.0\ncomponent_order = [{order}]\n\n\
             [[scenarios]]\nname = \"x\"\nweight = -1.0\n{row}\n"
        );
        let f = write_temp(&neg);
        assert!(matches!(
            ScenarioSet::load(f.path(), &cs),
            Err(ScenarioError::BadValue(_))
        ));
        let wrong_schema = format!(
            "schema_version = 2\nfeed_mass_flow = 1000.0\ncomponent_order = [{order}]\n\n\
             [[scenarios]]\nname = \"x\"\nweight = 1.0\n{row}\n"
        );
        let f = write_temp(&wrong_schema);
        assert!(matches!(
            ScenarioSet::load(f.path(), &cs),
            Err(ScenarioError::Parse(_))
        ));
    }
}
