//! Outer (mu+lambda) evolution strategy over the discrete design vector.
//!
//! Nine integer genes (stages, feed position, diameter grid index for each
//! of the three columns) evolve under self-adaptive per-gene mutation
//! strengths. Offspring are built by column-block crossover from two
//! uniformly drawn parents, log-normally adapted sigmas, rounded normal
//! integer steps, and a repair projection onto the admissible lattice.
//! Selection keeps the best mu from the offspring plus the elite parents.
//!
//! Randomness is organized for scheduling independence: every individual
//! ever created draws from its own counter-derived ChaCha stream, so the
//! same seed gives bit-identical runs no matter how evaluations are
//! distributed over workers, and a checkpoint only needs the counter to
//! resume exactly.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::economics::EconParams;
use crate::flowsheet::{initialize_train, FlowsheetConfig, OperatingPoint, TrainDesign};
use crate::localsearch::{optimize_operating, SearchConfig};
use crate::scenarios::ScenarioSet;
use crate::thermo::ComponentSet;
use crate::column::ColumnDesign;

pub const GENES: usize = 9;

/// Admissible integer ranges per column: stage count, feed position and
/// diameter grid index (0.5 m plus 0.1 m per step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnGeneBounds {
    pub stages: (i64, i64),
    pub feed: (i64, i64),
    pub diameter_index: (i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignBounds {
    pub columns: [ColumnGeneBounds; 3],
}

impl Default for DesignBounds {
    fn default() -> Self {
        let wide = ColumnGeneBounds {
            stages: (5, 40),
            feed: (3, 38),
            diameter_index: (0, 25),
        };
        let tall = ColumnGeneBounds {
            stages: (10, 60),
            feed: (5, 58),
            diameter_index: (0, 25),
        };
        DesignBounds {
            columns: [wide, wide, tall],
        }
    }
}

impl DesignBounds {
    /// Bounds of gene `j` in the flat layout [stages, feed, diam] x 3.
    pub fn gene(&self, j: usize) -> (i64, i64) {
        let c = &self.columns[j / 3];
        match j % 3 {
            0 => c.stages,
            1 => c.feed,
            _ => c.diameter_index,
        }
    }

    pub fn gene_range(&self, j: usize) -> f64 {
        let (lo, hi) = self.gene(j);
        (hi - lo) as f64
    }

    pub fn validate(&self) -> Result<(), String> {
        for (c, col) in self.columns.iter().enumerate() {
            for (name, (lo, hi)) in [
                ("stages", col.stages),
                ("feed", col.feed),
                ("diameter_index", col.diameter_index),
            ] {
                if lo > hi {
                    return Err(format!("column {} {name} bounds empty", c + 1));
                }
            }
            if col.stages.0 < 1 {
                return Err(format!("column {} needs at least one stage", c + 1));
            }
            if col.diameter_index.0 < 0 {
                return Err(format!("column {} diameter index negative", c + 1));
            }
            // The repair rule feed <= stages - 2 must be satisfiable at the
            // smallest stage count.
            if col.feed.0 > col.stages.0 - 2 {
                return Err(format!(
                    "column {}: feed lower bound {} incompatible with {} stages",
                    c + 1,
                    col.feed.0,
                    col.stages.0
                ));
            }
        }
        Ok(())
    }
}

/// Diameter grid: index 0 is 0.5 m, each step adds 0.1 m.
pub fn diameter_from_index(idx: i64) -> f64 {
    0.5 + 0.1 * idx as f64
}

pub fn index_from_diameter(d: f64) -> i64 {
    ((d - 0.5) / 0.1).round() as i64
}

/// Decodes a repaired design vector into a simulatable train.
pub fn decode(z: &[i64; GENES], pressures: [f64; 3]) -> TrainDesign {
    let col = |c: usize| ColumnDesign {
        n_stages: z[3 * c] as usize,
        feed_stage: z[3 * c + 1] as usize,
        diameter: diameter_from_index(z[3 * c + 2]),
    };
    TrainDesign {
        columns: [col(0), col(1), col(2)],
        pressures,
    }
}

pub fn encode(design: &TrainDesign) -> [i64; GENES] {
    let mut z = [0i64; GENES];
    for c in 0..3 {
        z[3 * c] = design.columns[c].n_stages as i64;
        z[3 * c + 1] = design.columns[c].feed_stage as i64;
        z[3 * c + 2] = index_from_diameter(design.columns[c].diameter);
    }
    z
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub values: [i64; GENES],
    pub sigma: [f64; GENES],
}

/// Per-scenario outcome kept with an evaluated individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario: String,
    /// EUR/y when the scenario search ended feasible.
    pub profit: Option<f64>,
    pub feasible: bool,
    pub operating: OperatingPoint,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Genome,
    pub fitness: Option<f64>,
    pub per_scenario: Vec<ScenarioRecord>,
    pub birth_generation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ESConfig {
    pub mu: usize,
    pub lambda: usize,
    pub elite_count: usize,
    pub generations: usize,
    pub seed: u64,
    /// Fitness assigned to scenarios (or whole genomes) that cannot be
    /// operated; far below any physical profit.
    pub penalty_profit: f64,
    /// Global self-adaptation rate; default 1/sqrt(2n).
    pub tau_prime: Option<f64>,
    /// Per-gene self-adaptation rate; default 1/sqrt(2 sqrt(n)).
    pub tau: Option<f64>,
    pub sigma_min: f64,
    /// Upper sigma clamp as a fraction of each gene's range.
    pub sigma_max_fraction: f64,
    /// Initial sigma as a fraction of each gene's range.
    pub sigma_init_fraction: f64,
    /// Strict plus-selection pools all mu parents instead of the elite.
    pub strict_plus: bool,
}

impl Default for ESConfig {
    fn default() -> Self {
        ESConfig {
            mu: 10,
            lambda: 40,
            elite_count: 3,
            generations: 30,
            seed: 1,
            penalty_profit: -1e8,
            tau_prime: None,
            tau: None,
            sigma_min: 0.3,
            sigma_max_fraction: 0.5,
            sigma_init_fraction: 0.1,
            strict_plus: false,
        }
    }
}

impl ESConfig {
    pub fn tau(&self) -> f64 {
        self.tau
            .unwrap_or_else(|| 1.0 / (2.0 * (GENES as f64).sqrt()).sqrt())
    }

    pub fn tau_prime(&self) -> f64 {
        self.tau_prime
            .unwrap_or_else(|| 1.0 / (2.0 * GENES as f64).sqrt())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.mu == 0 || self.lambda == 0 || self.elite_count == 0 {
            return Err("mu, lambda and elite_count must be positive".to_string());
        }
        if self.elite_count > self.mu {
            return Err(format!(
                "elite_count {} exceeds mu {}",
                self.elite_count, self.mu
            ));
        }
        if self.lambda + self.elite_count < self.mu {
            return Err("selection pool smaller than mu".to_string());
        }
        if self.mu < 2 {
            return Err("recombination needs at least two parents".to_string());
        }
        if !(self.sigma_min > 0.0) {
            return Err("sigma_min must be positive".to_string());
        }
        if !(self.sigma_max_fraction > 0.0 && self.sigma_max_fraction <= 1.0) {
            return Err("sigma_max_fraction outside (0, 1]".to_string());
        }
        if !(self.sigma_init_fraction > 0.0 && self.sigma_init_fraction <= 1.0) {
            return Err("sigma_init_fraction outside (0, 1]".to_string());
        }
        if !(self.penalty_profit < 0.0) {
            return Err("penalty_profit must be negative".to_string());
        }
        Ok(())
    }

    fn sigma_max(&self, bounds: &DesignBounds, j: usize) -> f64 {
        (self.sigma_max_fraction * bounds.gene_range(j)).max(self.sigma_min)
    }
}

/// Everything evolve reports per generation; row 0 describes the initial
/// population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_genome: [i64; GENES],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub fingerprint: String,
    pub master_seed: u64,
    /// Generations completed (0 = only the initial population exists).
    pub generation: usize,
    /// Next unused RNG stream id.
    pub next_stream: u64,
    pub population: Vec<Individual>,
    pub rows: Vec<GenerationRow>,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub rows: Vec<GenerationRow>,
    pub best: Individual,
    pub final_population: Vec<Individual>,
    /// Simulator evaluations actually spent (cache hits excluded).
    pub simulator_calls: usize,
    pub cache_hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvolveError {
    Config(String),
    /// Selection pool smaller than mu.
    PoolTooSmall { pool: usize, mu: usize },
    /// Checkpoint does not belong to this configuration.
    ResumeMismatch(String),
    /// Observer (checkpoint/trace writer) failed; fatal by contract.
    Observer(String),
}

impl fmt::Display for EvolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvolveError::Config(m) => write!(f, "bad ES configuration: {m}"),
            EvolveError::PoolTooSmall { pool, mu } => {
                write!(f, "selection pool {pool} smaller than mu {mu}")
            }
            EvolveError::ResumeMismatch(m) => write!(f, "checkpoint mismatch: {m}"),
            EvolveError::Observer(m) => write!(f, "observer failure: {m}"),
        }
    }
}

impl std::error::Error for EvolveError {}

/// Fitness provider. Implementations must be pure functions of the design
/// vector; the driver memoizes on it and parallelizes over distinct designs.
pub trait GenomeEvaluator: Sync {
    fn evaluate(&self, design: &[i64; GENES]) -> EvaluationRecord;
}

#[derive(Debug, Clone)]
pub struct EvaluationRecord {
    pub fitness: f64,
    pub scenarios: Vec<ScenarioRecord>,
    pub simulator_calls: usize,
}

/// Deterministic per-individual RNG stream.
fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Projects a genome onto the admissible lattice: clamp every gene, then
/// pull the feed position at least two stages above the bottom. Idempotent.
pub fn repair(mut g: Genome, bounds: &DesignBounds, cfg: &ESConfig) -> Genome {
    for j in 0..GENES {
        let (lo, hi) = bounds.gene(j);
        g.values[j] = g.values[j].clamp(lo, hi);
        g.sigma[j] = g.sigma[j].clamp(cfg.sigma_min, cfg.sigma_max(bounds, j));
    }
    for c in 0..3 {
        let stages = g.values[3 * c];
        let feed = &mut g.values[3 * c + 1];
        *feed = (*feed).min(stages - 2);
        *feed = (*feed).max(bounds.columns[c].feed.0);
    }
    g
}

/// Column-block crossover: each column's three genes and their sigmas come
/// wholesale from one uniformly chosen parent.
pub fn recombine(p1: &Genome, p2: &Genome, rng: &mut ChaCha12Rng) -> Genome {
    let mut child = p1.clone();
    for c in 0..3 {
        let donor = if rng.random_range(0..2u8) == 0 { p1 } else { p2 };
        for j in 3 * c..3 * c + 3 {
            child.values[j] = donor.values[j];
            child.sigma[j] = donor.sigma[j];
        }
    }
    child
}

/// Log-normal sigma self-adaptation followed by rounded normal integer
/// steps; the result is repaired before use.
pub fn mutate(g: &Genome, bounds: &DesignBounds, cfg: &ESConfig, rng: &mut ChaCha12Rng) -> Genome {
    let tau = cfg.tau();
    let tau_prime = cfg.tau_prime();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let global: f64 = normal.sample(rng);
    let mut out = g.clone();
    for j in 0..GENES {
        let local: f64 = normal.sample(rng);
        let sigma = (g.sigma[j] * (tau_prime * global + tau * local).exp())
            .clamp(cfg.sigma_min, cfg.sigma_max(bounds, j));
        out.sigma[j] = sigma;
        let step_draw: f64 = normal.sample(rng);
        out.values[j] += (sigma * step_draw).round() as i64;
    }
    repair(out, bounds, cfg)
}

/// Uniform genome on the bounded lattice with fractional initial sigmas.
pub fn sample_genome(bounds: &DesignBounds, cfg: &ESConfig, rng: &mut ChaCha12Rng) -> Genome {
    let mut values = [0i64; GENES];
    let mut sigma = [0.0; GENES];
    for j in 0..GENES {
        let (lo, hi) = bounds.gene(j);
        values[j] = rng.random_range(lo..=hi);
        sigma[j] = (cfg.sigma_init_fraction * bounds.gene_range(j))
            .clamp(cfg.sigma_min, cfg.sigma_max(bounds, j));
    }
    repair(Genome { values, sigma }, bounds, cfg)
}

/// Initial parent population on streams 0..mu.
pub fn init_population(cfg: &ESConfig, bounds: &DesignBounds) -> Vec<Individual> {
    (0..cfg.mu)
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            Individual {
                genome: sample_genome(bounds, cfg, &mut rng),
                fitness: None,
                per_scenario: Vec::new(),
                birth_generation: 0,
            }
        })
        .collect()
}

fn fitness_of(ind: &Individual) -> f64 {
    ind.fitness.expect("individual entered selection unevaluated")
}

/// Ranks candidates best-first with the deterministic tie-break: fitness,
/// then younger birth generation, then lexicographic genome order.
fn rank(candidates: &mut [Individual]) {
    candidates.sort_by(|a, b| {
        fitness_of(b)
            .total_cmp(&fitness_of(a))
            .then(b.birth_generation.cmp(&a.birth_generation))
            .then(a.genome.values.cmp(&b.genome.values))
    });
}

/// Plus-selection over offspring and the elite parents (all parents in
/// strict mode).
pub fn select(
    parents: &[Individual],
    offspring: Vec<Individual>,
    cfg: &ESConfig,
) -> Result<Vec<Individual>, EvolveError> {
    let mut elites = parents.to_vec();
    rank(&mut elites);
    let keep = if cfg.strict_plus {
        elites.len()
    } else {
        cfg.elite_count.min(elites.len())
    };
    let mut pool = offspring;
    pool.extend(elites.into_iter().take(keep));
    if pool.len() < cfg.mu {
        return Err(EvolveError::PoolTooSmall {
            pool: pool.len(),
            mu: cfg.mu,
        });
    }
    rank(&mut pool);
    pool.truncate(cfg.mu);
    Ok(pool)
}

/// Evaluation driver: deduplicates by design vector, evaluates distinct
/// designs in parallel, and serves repeats from the memo.
struct EvalCache {
    map: HashMap<[i64; GENES], EvaluationRecord>,
    simulator_calls: usize,
    cache_hits: usize,
}

impl EvalCache {
    fn new() -> Self {
        EvalCache {
            map: HashMap::new(),
            simulator_calls: 0,
            cache_hits: 0,
        }
    }

    fn evaluate_all(&mut self, population: &mut [Individual], evaluator: &dyn GenomeEvaluator) {
        let mut fresh: Vec<[i64; GENES]> = Vec::new();
        let mut pending = 0usize;
        for ind in population.iter() {
            if ind.fitness.is_some() {
                continue;
            }
            pending += 1;
            let key = ind.genome.values;
            if !self.map.contains_key(&key) && !fresh.contains(&key) {
                fresh.push(key);
            }
        }
        let records: Vec<([i64; GENES], EvaluationRecord)> = fresh
            .par_iter()
            .map(|key| (*key, evaluator.evaluate(key)))
            .collect();
        self.cache_hits += pending - records.len();
        for (key, rec) in records {
            self.simulator_calls += rec.simulator_calls;
            self.map.insert(key, rec);
        }
        for ind in population.iter_mut() {
            if ind.fitness.is_some() {
                continue;
            }
            let rec = &self.map[&ind.genome.values];
            ind.fitness = Some(rec.fitness);
            ind.per_scenario = rec.scenarios.clone();
        }
    }
}

/// Configuration identity, embedded in checkpoints so a resume against a
/// different setup is refused instead of silently diverging. The generation
/// budget is deliberately left out: it is a stopping rule, not part of the
/// stochastic process, and extending a finished run is a legitimate resume.
pub fn config_fingerprint(cfg: &ESConfig, bounds: &DesignBounds) -> String {
    let mut h = Sha256::new();
    h.update(
        format!(
            "{}|{}|{}|{}|{}|{}|{:?}|{:?}|{}|{}|{}|{:?}",
            cfg.mu,
            cfg.lambda,
            cfg.elite_count,
            cfg.seed,
            cfg.penalty_profit,
            cfg.strict_plus,
            cfg.tau,
            cfg.tau_prime,
            cfg.sigma_min,
            cfg.sigma_max_fraction,
            cfg.sigma_init_fraction,
            bounds
        )
        .as_bytes(),
    );
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the strategy to its generation budget, reporting a row per
/// generation to the observer together with a resumable checkpoint.
pub fn evolve(
    cfg: &ESConfig,
    bounds: &DesignBounds,
    evaluator: &dyn GenomeEvaluator,
    mut observer: Option<&mut dyn FnMut(&GenerationRow, &Checkpoint) -> Result<(), String>>,
    resume: Option<Checkpoint>,
) -> Result<RunTrace, EvolveError> {
    cfg.validate().map_err(EvolveError::Config)?;
    bounds.validate().map_err(EvolveError::Config)?;
    let fingerprint = config_fingerprint(cfg, bounds);

    let mut cache = EvalCache::new();
    let (mut population, mut rows, start_generation, mut next_stream) = match resume {
        Some(cp) => {
            if cp.fingerprint != fingerprint {
                return Err(EvolveError::ResumeMismatch(
                    "checkpoint was produced under a different configuration".to_string(),
                ));
            }
            if cp.schema_version != 1 {
                return Err(EvolveError::ResumeMismatch(format!(
                    "unsupported checkpoint schema {}",
                    cp.schema_version
                )));
            }
            if cp.population.len() != cfg.mu || cp.rows.len() != cp.generation + 1 {
                return Err(EvolveError::ResumeMismatch(
                    "checkpoint population or trace length inconsistent".to_string(),
                ));
            }
            (cp.population, cp.rows, cp.generation, cp.next_stream)
        }
        None => {
            let mut pop = init_population(cfg, bounds);
            cache.evaluate_all(&mut pop, evaluator);
            rank(&mut pop);
            let rows = vec![row_for(0, &pop)];
            (pop, rows, 0, cfg.mu as u64)
        }
    };

    if start_generation == 0 {
        if let Some(obs) = observer.as_deref_mut() {
            let cp = checkpoint_snapshot(&fingerprint, cfg, 0, next_stream, &population, &rows);
            obs(&rows[0], &cp).map_err(EvolveError::Observer)?;
        }
    }

    for generation in start_generation..cfg.generations {
        let born = generation + 1;
        let mut offspring = Vec::with_capacity(cfg.lambda);
        for k in 0..cfg.lambda {
            let mut rng = stream_rng(cfg.seed, next_stream + k as u64);
            let i = rng.random_range(0..cfg.mu);
            let mut j = rng.random_range(0..cfg.mu - 1);
            if j >= i {
                j += 1;
            }
            let child = recombine(&population[i].genome, &population[j].genome, &mut rng);
            let child = mutate(&child, bounds, cfg, &mut rng);
            offspring.push(Individual {
                genome: child,
                fitness: None,
                per_scenario: Vec::new(),
                birth_generation: born,
            });
        }
        next_stream += cfg.lambda as u64;
        cache.evaluate_all(&mut offspring, evaluator);
        population = select(&population, offspring, cfg)?;
        rows.push(row_for(born, &population));
        if let Some(obs) = observer.as_deref_mut() {
            let cp =
                checkpoint_snapshot(&fingerprint, cfg, born, next_stream, &population, &rows);
            obs(rows.last().unwrap(), &cp).map_err(EvolveError::Observer)?;
        }
    }

    let best = population
        .first()
        .cloned()
        .expect("population cannot be empty");
    Ok(RunTrace {
        rows,
        best,
        final_population: population,
        simulator_calls: cache.simulator_calls,
        cache_hits: cache.cache_hits,
    })
}

fn row_for(generation: usize, ranked_population: &[Individual]) -> GenerationRow {
    let best = &ranked_population[0];
    let mean = ranked_population
        .iter()
        .map(fitness_of)
        .sum::<f64>()
        / ranked_population.len() as f64;
    GenerationRow {
        generation,
        best_fitness: fitness_of(best),
        mean_fitness: mean,
        best_genome: best.genome.values,
    }
}

fn checkpoint_snapshot(
    fingerprint: &str,
    _cfg: &ESConfig,
    generation: usize,
    next_stream: u64,
    population: &[Individual],
    rows: &[GenerationRow],
) -> Checkpoint {
    Checkpoint {
        schema_version: 1,
        fingerprint: fingerprint.to_string(),
        master_seed: _cfg.seed,
        generation,
        next_stream,
        population: population.to_vec(),
        rows: rows.to_vec(),
    }
}

/// The production evaluator: decode, initialize on the base scenario, then
/// chain the per-scenario searches, aggregating the weighted profits with
/// the penalty for scenarios that cannot be operated.
pub struct TrainEvaluator<'a> {
    pub cs: &'a ComponentSet,
    pub scenarios: &'a ScenarioSet,
    pub flowsheet: &'a FlowsheetConfig,
    pub econ: &'a EconParams,
    pub search: &'a SearchConfig,
    pub penalty_profit: f64,
}

impl GenomeEvaluator for TrainEvaluator<'_> {
    fn evaluate(&self, design_ints: &[i64; GENES]) -> EvaluationRecord {
        let design = decode(design_ints, self.flowsheet.pressures);
        evaluate_design(
            &design,
            self.cs,
            self.scenarios,
            self.flowsheet,
            self.econ,
            self.search,
            self.penalty_profit,
        )
    }
}

/// Scores one fixed design over all scenarios: initialize on the base feed,
/// chain the per-scenario operating searches, and aggregate the weighted
/// profits with the penalty standing in for scenarios that cannot be
/// operated. Also the workhorse behind evaluating reference designs.
pub fn evaluate_design(
    design: &TrainDesign,
    cs: &ComponentSet,
    scenarios: &ScenarioSet,
    flowsheet: &FlowsheetConfig,
    econ: &EconParams,
    search: &SearchConfig,
    penalty_profit: f64,
) -> EvaluationRecord {
    let names: Vec<&str> = scenarios
        .scenarios()
        .iter()
        .map(|s| s.name.as_str())
        .collect();
    let base_feed = scenarios.to_feed_stream(0, cs);

    let init = initialize_train(design, &base_feed, cs, flowsheet);
    let (mut x0, mut warm) = match init {
        Ok((op, w)) => (op, Some(w)),
        Err(e) => {
            log::debug!("design {design:?} initialization failed: {e}");
            let records = names
                .iter()
                .map(|n| ScenarioRecord {
                    scenario: n.to_string(),
                    profit: None,
                    feasible: false,
                    operating: flowsheet.initial_operating,
                    evaluations: 0,
                })
                .collect();
            return EvaluationRecord {
                fitness: penalty_profit,
                scenarios: records,
                simulator_calls: 3,
            };
        }
    };

    let mut contributions = Vec::with_capacity(scenarios.len());
    let mut records = Vec::with_capacity(scenarios.len());
    let mut calls = 3usize; // initialization attempts, upper bound
    for i in 0..scenarios.len() {
        let feed = scenarios.to_feed_stream(i, cs);
        let (result, chained) = optimize_operating(
            design,
            &feed,
            cs,
            flowsheet,
            econ,
            search,
            &x0,
            warm.clone(),
        );
        calls += result.evaluations_used;
        let contribution = match (result.feasible, result.best_profit) {
            (true, Some(p)) => p,
            _ => penalty_profit,
        };
        contributions.push(contribution);
        records.push(ScenarioRecord {
            scenario: names[i].to_string(),
            profit: result.best_profit,
            feasible: result.feasible,
            operating: result.best_point,
            evaluations: result.evaluations_used,
        });
        if result.feasible {
            x0 = result.best_point;
            if let Some(w) = chained {
                warm = Some(w);
            }
        }
    }

    EvaluationRecord {
        fitness: scenarios.weighted_fitness(&contributions),
        scenarios: records,
        simulator_calls: calls,
    }
}

/// Known-optimum surrogate used by the algorithm-level tests: negative
/// squared distance to a fixed admissible design, no simulator involved.
pub struct SurrogateEvaluator {
    pub target: [i64; GENES],
}

impl GenomeEvaluator for SurrogateEvaluator {
    fn evaluate(&self, design: &[i64; GENES]) -> EvaluationRecord {
        let d2: i64 = design
            .iter()
            .zip(&self.target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        EvaluationRecord {
            fitness: -(d2 as f64),
            scenarios: Vec::new(),
            simulator_calls: 0,
        }
    }
}
