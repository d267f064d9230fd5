//! Generational genetic search with periodic simplex refinement.

use std::time::Instant;

use nalgebra::{Complex, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::genome::{crossover, mutate, Action, Genome, GenomeSpace, MutationRates};
use super::simplex::{nelder_mead, SimplexOptions};
use crate::dynamics::{CompositionMode, Configuration, Simulator};
use crate::error::{Error, Result};
use crate::format::SequenceFile;
use crate::metrics::{objective_f9, objective_f_joint};

/// Quantity minimized by the search.
pub trait Objective: Sync {
    fn evaluate(&self, genome: &Genome) -> f64;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    #[serde(rename = "f9")]
    F9,
    #[default]
    #[serde(rename = "f_joint")]
    FJoint,
}

/// CNOT objective of a decoded genome.
#[derive(Clone, Debug)]
pub struct CnotObjective {
    pub space: GenomeSpace,
    pub kind: ObjectiveKind,
    pub mode: CompositionMode,
    sim: Simulator<f64>,
}

impl CnotObjective {
    pub fn new(space: GenomeSpace, kind: ObjectiveKind, mode: CompositionMode) -> Self {
        CnotObjective {
            space,
            kind,
            mode,
            sim: Simulator::new(),
        }
    }
}

impl Objective for CnotObjective {
    fn evaluate(&self, genome: &Genome) -> f64 {
        let seq = self.space.decode(genome);
        let u = self.sim.sequence_propagator_unchecked(&seq, self.mode);
        let f = match self.kind {
            ObjectiveKind::F9 => objective_f9(&u.s1.entries),
            ObjectiveKind::FJoint => objective_f_joint(&u.s0.entries, &u.s1.entries),
        };
        f.unwrap_or(f64::INFINITY)
    }
}

/// Distance of the two-spin propagator of a single-pair genome from SWAP
/// (up to phase): `sqrt(1 − |tr(SWAP·U)|/4)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SwapObjective;

impl SwapObjective {
    fn propagator(theta: f64) -> Matrix4<Complex<f64>> {
        let (o, z) = (Complex::new(1.0, 0.0), Complex::new(0.0, 0.0));
        let swap = Matrix4::new(o, z, z, z, z, z, o, z, z, o, z, z, z, z, z, o);
        let exchange =
            swap * Complex::new(0.5, 0.0) - Matrix4::identity() * Complex::new(0.25, 0.0);
        let singlet = Matrix4::identity() * Complex::new(0.25, 0.0) - exchange;
        let triplet = Matrix4::identity() * Complex::new(0.75, 0.0) + exchange;
        singlet * Complex::from_polar(1.0, 0.75 * theta)
            + triplet * Complex::from_polar(1.0, -0.25 * theta)
    }

    pub fn swap() -> Matrix4<Complex<f64>> {
        Self::propagator(std::f64::consts::PI)
            * Complex::from_polar(1.0, std::f64::consts::FRAC_PI_4)
    }
}

impl Objective for SwapObjective {
    fn evaluate(&self, genome: &Genome) -> f64 {
        let mut u = Matrix4::<Complex<f64>>::identity();
        for g in &genome.genes {
            if let Action::Pulse(_) = g.action {
                u = Self::propagator(2.0 * std::f64::consts::PI * g.duration) * u;
            }
        }
        let overlap = (Self::swap().adjoint() * u).trace().norm();
        (1.0 - overlap / 4.0).max(0.0).sqrt()
    }
}

/// Hyperparameters. The defaults are pinned so runs are reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub population: usize,
    pub generations: usize,
    pub duration_sigma: f64,
    pub p_insert: f64,
    pub p_delete: f64,
    pub p_pair_swap: f64,
    pub p_crossover: f64,
    pub tournament: usize,
    pub elite: usize,
    pub simplex_period: usize,
    pub simplex_iterations: usize,
    pub target_f: f64,
    pub seed: u64,
    pub max_steps: usize,
    pub initial_steps: usize,
    pub max_duration: f64,
    pub objective: ObjectiveKind,
    pub mode: CompositionMode,
    pub allow_wait: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population: 128,
            generations: 200,
            duration_sigma: 0.05,
            p_insert: 0.1,
            p_delete: 0.1,
            p_pair_swap: 0.1,
            p_crossover: 0.7,
            tournament: 4,
            elite: 2,
            simplex_period: 10,
            simplex_iterations: 200,
            target_f: 0.01,
            seed: 42,
            max_steps: 40,
            initial_steps: 12,
            max_duration: 2.0,
            objective: ObjectiveKind::FJoint,
            mode: CompositionMode::Sequential,
            allow_wait: true,
        }
    }
}

impl SearchConfig {
    /// Budget for the all-controllable toy problem: few long genomes, each
    /// generation followed by a long simplex polish of the best.
    pub fn toy_budget() -> Self {
        SearchConfig {
            population: 16,
            generations: 60,
            p_insert: 0.05,
            p_delete: 0.05,
            simplex_period: 1,
            simplex_iterations: 3000,
            target_f: 0.1,
            max_steps: 64,
            initial_steps: 64,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_insert", self.p_insert),
            ("p_delete", self.p_delete),
            ("p_pair_swap", self.p_pair_swap),
            ("p_crossover", self.p_crossover),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parse(format!("{name} = {p} is not a probability")));
            }
        }
        if self.population < 4 {
            return Err(Error::Parse("population must be at least 4".into()));
        }
        if self.tournament == 0 || self.tournament > self.population {
            return Err(Error::Parse(
                "tournament size must be in [1, population]".into(),
            ));
        }
        if self.elite >= self.population {
            return Err(Error::Parse(
                "elite must be smaller than the population".into(),
            ));
        }
        if self.max_steps == 0 || self.initial_steps == 0 {
            return Err(Error::Parse("step limits must be positive".into()));
        }
        if !(self.max_duration > 0.0) || !(self.duration_sigma >= 0.0) || !(self.target_f >= 0.0) {
            return Err(Error::Parse(
                "durations, sigma and target must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Genome space for a configuration under these settings.
    pub fn space(&self, configuration: Configuration) -> GenomeSpace {
        let mut space = GenomeSpace::for_configuration(configuration, self.max_steps);
        space.allow_wait = self.allow_wait && !configuration.fully_controllable;
        space.max_duration = self.max_duration;
        space
    }

    fn rates(&self) -> MutationRates {
        MutationRates {
            duration_sigma: self.duration_sigma,
            p_insert: self.p_insert,
            p_delete: self.p_delete,
            p_pair_swap: self.p_pair_swap,
        }
    }
}

/// Outcome of [`run_search`]. Wall time is reported but not serialized and
/// not compared, so equal seeds give equal reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchReport {
    pub best_genome: Genome,
    pub best_sequence: Option<SequenceFile>,
    pub best_f: f64,
    /// Best objective after initialization and after each generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub generations: usize,
    pub reached_target: bool,
    #[serde(skip)]
    pub wall_time_seconds: f64,
}

impl PartialEq for SearchReport {
    fn eq(&self, other: &Self) -> bool {
        self.best_genome == other.best_genome
            && self.best_sequence == other.best_sequence
            && self.best_f.to_bits() == other.best_f.to_bits()
            && self.trace.len() == other.trace.len()
            && self
                .trace
                .iter()
                .zip(&other.trace)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.evaluations == other.evaluations
            && self.generations == other.generations
            && self.reached_target == other.reached_target
    }
}

/// Independent random stream for one candidate of one generation.
fn candidate_rng(seed: u64, generation: usize, index: usize) -> ChaCha8Rng {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (generation as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index as u64);
    rng
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Index order by value, ties broken by index.
fn ranking(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

fn tournament<R: Rng>(values: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..values.len());
    for _ in 1..size {
        let c = rng.random_range(0..values.len());
        if values[c] < values[best] || (values[c] == values[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Nelder-Mead over the durations of `genome` with pairs frozen.
/// Returns the refined genome, its value, and the number of evaluations.
pub fn refine_durations<O: Objective + ?Sized>(
    objective: &O,
    space: &GenomeSpace,
    genome: &Genome,
    iterations: usize,
) -> (Genome, f64, usize) {
    let x0 = genome.durations();
    let (lo, hi) = space.bounds(x0.len());
    let f = |x: &[f64]| sanitize(objective.evaluate(&genome.with_durations(x)));
    let f0 = f(&x0);
    let result = nelder_mead(
        f,
        &x0,
        &lo,
        &hi,
        SimplexOptions {
            max_iterations: iterations,
            ..Default::default()
        },
    );
    if result.f < f0 {
        (
            genome.with_durations(&result.x),
            result.f,
            result.evaluations + 1,
        )
    } else {
        (genome.clone(), f0, result.evaluations + 1)
    }
}

/// Runs the search from a random population.
pub fn run_search<O: Objective + ?Sized>(
    config: &SearchConfig,
    space: &GenomeSpace,
    objective: &O,
) -> Result<SearchReport> {
    config.validate()?;
    let start = Instant::now();
    let rates = config.rates();
    let mut population: Vec<Genome> = (0..config.population)
        .map(|i| space.random_genome(&mut candidate_rng(config.seed, 0, i), config.initial_steps))
        .collect();
    let mut values: Vec<f64> = population
        .par_iter()
        .map(|g| sanitize(objective.evaluate(g)))
        .collect();
    let mut evaluations = population.len();
    let mut trace = vec![values.iter().copied().fold(f64::INFINITY, f64::min)];
    let mut generation = 0;

    while generation < config.generations && trace[trace.len() - 1] > config.target_f {
        generation += 1;
        let order = ranking(&values);
        let n_elite = config.elite.max(1);
        let children: Vec<Genome> = (n_elite..config.population)
            .into_par_iter()
            .map(|i| {
                let mut rng = candidate_rng(config.seed, generation, i);
                let a = tournament(&values, config.tournament, &mut rng);
                let mut child = if rng.random_bool(config.p_crossover) {
                    let b = tournament(&values, config.tournament, &mut rng);
                    crossover(space, &population[a], &population[b], &mut rng)
                } else {
                    population[a].clone()
                };
                mutate(space, &mut child, &rates, &mut rng);
                debug_assert!(space.check(&child).is_ok());
                child
            })
            .collect();
        let child_values: Vec<f64> = children
            .par_iter()
            .map(|g| sanitize(objective.evaluate(g)))
            .collect();
        evaluations += children.len();

        let mut next: Vec<Genome> = order[..n_elite]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        let mut next_values: Vec<f64> = order[..n_elite].iter().map(|&i| values[i]).collect();
        next.extend(children);
        next_values.extend(child_values);
        population = next;
        values = next_values;

        if config.simplex_period > 0 && generation % config.simplex_period == 0 {
            let best = ranking(&values)[0];
            let (refined, f, evals) = refine_durations(
                objective,
                space,
                &population[best],
                config.simplex_iterations,
            );
            evaluations += evals;
            if f < values[best] {
                population[best] = refined;
                values[best] = f;
            }
        }
        trace.push(values.iter().copied().fold(f64::INFINITY, f64::min));
    }

    let best = ranking(&values)[0];
    let best_genome = population[best].clone();
    let best_f = values[best];
    Ok(SearchReport {
        best_sequence: None,
        best_genome,
        best_f,
        trace,
        evaluations,
        generations: generation,
        reached_target: best_f <= config.target_f,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Searches for a CNOT sequence in `configuration`.
pub fn search_cnot(config: &SearchConfig, configuration: Configuration) -> Result<SearchReport> {
    let space = config.space(configuration);
    let objective = CnotObjective::new(space.clone(), config.objective, config.mode);
    let mut report = run_search(config, &space, &objective)?;
    report.best_sequence = Some(SequenceFile::from_sequence(
        &space.decode(&report.best_genome),
    ));
    Ok(report)
}
