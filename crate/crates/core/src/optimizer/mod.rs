//! Genetic search for the RP count and placement whose modeled channel
//! statistics best match a set of measured targets.
//!
//! Each individual carries `q_max` slots; inactive slots let one population
//! mix different RP counts. With the path-loss weight set to
//! [`PlWeight::Hard`], every individual is rescaled onto the exact
//! path-loss target before it is evaluated, so the search only trades off
//! delay and angular spread.
//!
//! Fitness uses common random numbers for the whole run: realization `r`
//! of every evaluation draws from the same substream. Fitness is then a
//! deterministic function of the genome, and with elitism the per-generation
//! best is nonincreasing.

mod fitness;
mod genome;
mod operators;

pub use fitness::{evaluate_placement, fitness, fitness_of_stats, mean_stats, Evaluation};
pub use genome::{pl_repair, Individual};
pub use operators::{crossover, init_population, mutate, select_parents, single_point_crossover};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbsm::ScenarioConfig;
use crate::placement::{ConstraintSet, RpPlacement};
use crate::rng::RandomStream;
use crate::stats::ChannelStats;
use crate::targets::MeasuredTargets;
use genome::RepairSpec;

/// Weight of the path-loss term: a finite penalty or an exact constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlWeightRepr", into = "PlWeightRepr")]
pub enum PlWeight {
    Hard,
    Finite(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PlWeightRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<PlWeightRepr> for PlWeight {
    type Error = String;

    fn try_from(r: PlWeightRepr) -> std::result::Result<Self, String> {
        match r {
            PlWeightRepr::Number(w) => Ok(PlWeight::Finite(w)),
            PlWeightRepr::Text(s) if s.eq_ignore_ascii_case("hard") => Ok(PlWeight::Hard),
            PlWeightRepr::Text(s) => Err(format!("w_pl must be a number or \"hard\", got {s:?}")),
        }
    }
}

impl From<PlWeight> for PlWeightRepr {
    fn from(w: PlWeight) -> Self {
        match w {
            PlWeight::Hard => PlWeightRepr::Text("hard".into()),
            PlWeight::Finite(w) => PlWeightRepr::Number(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    /// Maximum number of generations after the initial one (E).
    pub max_iterations: usize,
    /// Improvement of the best fitness at or below which a generation counts
    /// as stalled (epsilon).
    pub convergence_eps: f64,
    /// Consecutive stalled generations that stop the run. 1 is the plain
    /// "improvement <= epsilon" rule.
    pub stall_generations: usize,
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub w_pl: PlWeight,
    /// Per second of DS error.
    pub w_ds: f64,
    /// Per degree of azimuth AS error.
    pub w_as_az: f64,
    /// Per degree of zenith AS error.
    pub w_as_zen: f64,
    /// Set from the run configuration, not the `[ga]` table.
    #[serde(skip)]
    pub constraints: ConstraintSet,
    /// Monte Carlo realizations averaged per fitness evaluation (R).
    pub fitness_realizations: usize,
    #[serde(skip)]
    pub include_sf: bool,
    pub pin_first_aod: bool,
    pub repair_attempts: usize,
    /// Fraction of the best distinct evaluated individuals kept in the result.
    pub top_fraction: f64,
    #[serde(skip)]
    pub root_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            convergence_eps: 1e-6,
            stall_generations: 1,
            population_size: 40,
            crossover_rate: 1.0,
            mutation_rate: 0.2,
            w_pl: PlWeight::Hard,
            w_ds: 1e8,
            w_as_az: 1.0,
            w_as_zen: 0.0,
            constraints: ConstraintSet::default(),
            fitness_realizations: 30,
            include_sf: false,
            pin_first_aod: true,
            repair_attempts: 100,
            top_fraction: 0.05,
            root_seed: 1,
        }
    }
}

impl GaConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("ga: {msg}")));
        self.constraints.check()?;
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.fitness_realizations == 0 {
            return bad("fitness_realizations must be at least 1");
        }
        if self.stall_generations == 0 {
            return bad("stall_generations must be at least 1");
        }
        for (name, r) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
            ("top_fraction", self.top_fraction),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        let weights = [self.w_ds, self.w_as_az, self.w_as_zen, self.convergence_eps];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("weights and convergence_eps must be finite and nonnegative");
        }
        if let PlWeight::Finite(w) = self.w_pl {
            if !w.is_finite() || w < 0.0 {
                return bad("w_pl must be finite and nonnegative, or \"hard\"");
            }
        }
        if self.pin_first_aod {
            let c = &self.constraints;
            if c.aod_min_deg > 0.0 || c.aod_max_deg < 360.0 {
                return bad("pin_first_aod needs the AoD bounds to cover [0, 360]");
            }
        }
        Ok(())
    }

    pub(crate) fn repair_spec<'a>(
        &'a self,
        targets: &MeasuredTargets,
        fc_ghz: f64,
    ) -> RepairSpec<'a> {
        RepairSpec {
            constraints: &self.constraints,
            pl_target_db: matches!(self.w_pl, PlWeight::Hard).then_some(targets.pl_db),
            fc_ghz,
            pin_first_aod: self.pin_first_aod,
            max_attempts: self.repair_attempts,
        }
    }
}

/// An evaluated placement kept in the result's top list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPlacement {
    pub fitness: f64,
    pub placement: RpPlacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Best fitness did not improve by more than epsilon.
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_placement: RpPlacement,
    pub best_fitness: f64,
    /// Mean statistics of the best placement under the run's fitness draws.
    pub best_stats: ChannelStats,
    /// Best fitness of the initial population, then of each generation.
    pub fitness_trace: Vec<f64>,
    pub generations: usize,
    pub stop_reason: StopReason,
    pub evaluations: usize,
    /// Best distinct individuals ever evaluated, ascending fitness.
    pub top_individuals: Vec<RankedPlacement>,
}

impl OptimizationResult {
    pub fn q_star(&self) -> usize {
        self.best_placement.len()
    }
}

// Top-level substream branches of a run.
const FITNESS_BRANCH: u64 = 0;
const INIT_BRANCH: u64 = 1;
const GENERATION_BRANCH: u64 = 2;
const VALIDATION_BRANCH: u64 = 3;

/// Common-random-number substream used for every fitness evaluation of a
/// run seeded with `root_seed`.
pub fn fitness_stream(root_seed: u64) -> RandomStream {
    RandomStream::new(root_seed).child(FITNESS_BRANCH)
}

/// Substream for re-simulating a result on draws the run never saw.
pub fn validation_stream(root_seed: u64) -> RandomStream {
    RandomStream::new(root_seed).child(VALIDATION_BRANCH)
}

struct Evaluator<'a> {
    targets: &'a MeasuredTargets,
    sc: &'a ScenarioConfig,
    cfg: &'a GaConfig,
    stream: RandomStream,
    seen: HashMap<Vec<u64>, (f64, Option<ChannelStats>)>,
    evaluations: usize,
}

impl Evaluator<'_> {
    fn eval(&mut self, ind: &Individual) -> f64 {
        self.evaluations += 1;
        let key = ind.key();
        if let Some(&(f, _)) = self.seen.get(&key) {
            return f;
        }
        let outcome = if ind.is_valid(&self.cfg.constraints) {
            ind.placement()
                .and_then(|p| evaluate_placement(&p, self.targets, self.sc, self.cfg, &self.stream))
                .ok()
        } else {
            None
        };
        let entry = match outcome {
            Some(e) => (e.fitness, Some(e.mean_stats)),
            None => (f64::INFINITY, None),
        };
        self.seen.insert(key, entry);
        entry.0
    }

    fn stats_of(&self, ind: &Individual) -> Option<ChannelStats> {
        self.seen.get(&ind.key()).and_then(|e| e.1)
    }

    fn top(&self, fraction: f64) -> Vec<RankedPlacement> {
        let mut all: Vec<(f64, Individual)> = self
            .seen
            .iter()
            .filter(|(_, (f, _))| f.is_finite())
            .map(|(k, (f, _))| {
                let genes: Vec<f64> = k.iter().map(|&b| f64::from_bits(b)).collect();
                (*f, Individual::from_genes(&genes))
            })
            .collect();
        // Ties broken on the genome bits so the order is reproducible.
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.key().cmp(&b.1.key())));
        let keep = ((all.len() as f64 * fraction).ceil() as usize).min(all.len());
        all.into_iter()
            .take(keep)
            .filter_map(|(fitness, ind)| {
                ind.placement()
                    .ok()
                    .map(|placement| RankedPlacement { fitness, placement })
            })
            .collect()
    }
}

fn argmin(f: &[f64]) -> usize {
    (0..f.len()).min_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap()
}

/// Runs the search: initial population, then up to `max_iterations`
/// generations of selection, crossover, mutation and evaluation with the
/// best individual carried over unchanged.
pub fn run_ga(
    cfg: &GaConfig,
    targets: &MeasuredTargets,
    sc: &ScenarioConfig,
) -> Result<OptimizationResult> {
    cfg.check()?;
    targets.check()?;
    sc.check()?;
    let fc = sc.fc_ghz;
    let root = RandomStream::new(cfg.root_seed);
    let mut ev = Evaluator {
        targets,
        sc,
        cfg,
        stream: fitness_stream(cfg.root_seed),
        seen: HashMap::new(),
        evaluations: 0,
    };

    let mut pop = init_population(cfg, targets, fc, &root.child(INIT_BRANCH))?;
    let mut fits: Vec<f64> = pop.iter().map(|ind| ev.eval(ind)).collect();
    let mut best = argmin(&fits);
    let mut trace = vec![fits[best]];
    let mut stalled = 0;
    let mut stop_reason = StopReason::MaxIterations;
    let mut generations = 0;

    for e in 1..=cfg.max_iterations {
        let gen = root.child(GENERATION_BRANCH).child(e as u64);
        let pool = select_parents(&fits, &gen.child(0));
        let mut next = vec![pop[best].clone()];
        let mut next_fits = vec![fits[best]];
        let mut pair = 0u64;
        while next.len() < cfg.population_size {
            let k = 2 * pair as usize % pool.len();
            let (a, b) = (&pop[pool[k]], &pop[pool[(k + 1) % pool.len()]]);
            let s = gen.child(1).child(pair);
            let (ca, cb) = crossover(a, b, cfg, targets, fc, &s.child(0));
            for (child, site) in [(ca, 1), (cb, 2)] {
                if next.len() == cfg.population_size {
                    break;
                }
                let child = mutate(&child, cfg, targets, fc, &s.child(site));
                next_fits.push(ev.eval(&child));
                next.push(child);
            }
            pair += 1;
        }
        pop = next;
        fits = next_fits;
        best = argmin(&fits);
        let prev = *trace.last().unwrap();
        trace.push(fits[best]);
        generations = e;
        if prev - fits[best] <= cfg.convergence_eps {
            stalled += 1;
            if stalled >= cfg.stall_generations {
                stop_reason = StopReason::Converged;
                break;
            }
        } else {
            stalled = 0;
        }
    }

    let best_ind = &pop[best];
    let best_fitness = fits[best];
    if !best_fitness.is_finite() {
        return Err(Error::Infeasible {
            constraint: "rp_count",
            attempts: cfg.repair_attempts,
        });
    }
    Ok(OptimizationResult {
        best_placement: best_ind.placement()?,
        best_fitness,
        best_stats: ev
            .stats_of(best_ind)
            .expect("best individual was evaluated"),
        fitness_trace: trace,
        generations,
        stop_reason,
        evaluations: ev.evaluations,
        top_individuals: ev.top(cfg.top_fraction),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc() -> ScenarioConfig {
        let mut sc = ScenarioConfig::inh_nlos();
        sc.zenith_spread_enabled = false;
        sc
    }

    fn small() -> GaConfig {
        GaConfig {
            max_iterations: 4,
            population_size: 10,
            fitness_realizations: 4,
            stall_generations: 10,
            ..GaConfig::default()
        }
    }

    #[test]
    fn pl_weight_serde() {
        #[derive(Serialize, Deserialize)]
        struct W {
            w: PlWeight,
        }
        let hard: W = toml::from_str("w = \"hard\"").unwrap();
        assert_eq!(hard.w, PlWeight::Hard);
        let num: W = toml::from_str("w = 2.5").unwrap();
        assert_eq!(num.w, PlWeight::Finite(2.5));
        assert!(toml::from_str::<W>("w = \"soft\"").is_err());
        assert_eq!(
            toml::to_string(&W { w: PlWeight::Hard }).unwrap().trim(),
            "w = \"hard\""
        );
    }

    #[test]
    fn config_checks() {
        assert!(GaConfig::default().check().is_ok());
        let bad = [
            GaConfig {
                population_size: 1,
                ..GaConfig::default()
            },
            GaConfig {
                mutation_rate: 1.5,
                ..GaConfig::default()
            },
            GaConfig {
                fitness_realizations: 0,
                ..GaConfig::default()
            },
            GaConfig {
                w_ds: f64::NAN,
                ..GaConfig::default()
            },
            GaConfig {
                w_pl: PlWeight::Finite(f64::INFINITY),
                ..GaConfig::default()
            },
        ];
        for c in bad {
            assert!(c.check().is_err());
        }
    }

    #[test]
    fn trace_nonincreasing_and_deterministic() {
        let cfg = small();
        let t = MeasuredTargets::indoor_28ghz();
        let r = run_ga(&cfg, &t, &sc()).unwrap();
        assert_eq!(r.fitness_trace.len(), r.generations + 1);
        for w in r.fitness_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(r.best_fitness, *r.fitness_trace.last().unwrap());
        assert!(validate_ok(&r.best_placement, &cfg.constraints));
        assert_eq!(r, run_ga(&cfg, &t, &sc()).unwrap());
        assert!(!r.top_individuals.is_empty());
        assert_eq!(r.top_individuals[0].fitness, r.best_fitness);
    }

    #[test]
    fn zero_iterations_returns_best_initial() {
        let cfg = GaConfig {
            max_iterations: 0,
            ..small()
        };
        let t = MeasuredTargets::indoor_28ghz();
        let r = run_ga(&cfg, &t, &sc()).unwrap();
        assert_eq!(r.generations, 0);
        assert_eq!(r.fitness_trace.len(), 1);
        let pop = init_population(
            &cfg,
            &t,
            28.0,
            &RandomStream::new(cfg.root_seed).child(INIT_BRANCH),
        )
        .unwrap();
        let best = pop
            .iter()
            .map(|ind| fitness(ind, &t, &sc(), &cfg, &fitness_stream(cfg.root_seed)))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_fitness, best);
    }

    #[test]
    fn common_random_numbers() {
        let cfg = small();
        let t = MeasuredTargets::indoor_28ghz();
        let pop = init_population(&cfg, &t, 28.0, &RandomStream::new(3)).unwrap();
        let s = fitness_stream(cfg.root_seed);
        let a = fitness(&pop[0], &t, &sc(), &cfg, &s);
        assert_eq!(a, fitness(&pop[0].clone(), &t, &sc(), &cfg, &s));
        // A global AoD rotation leaves the fitness unchanged.
        let p = pop[0].placement().unwrap();
        let rotated = RpPlacement::new(
            p.distances_m().to_vec(),
            p.aod_deg()
                .iter()
                .map(|a| crate::geometry::wrap360(a + 77.0))
                .collect(),
            p.zod_deg().to_vec(),
        )
        .unwrap();
        let e1 = evaluate_placement(&p, &t, &sc(), &cfg, &s).unwrap();
        let e2 = evaluate_placement(&rotated, &t, &sc(), &cfg, &s).unwrap();
        assert!((e1.fitness - e2.fitness).abs() < 1e-6);
    }

    fn validate_ok(p: &RpPlacement, c: &ConstraintSet) -> bool {
        crate::placement::validate_placement(p, c).unwrap().is_ok()
    }
}
