//! Genetic-algorithm heuristic over path-choice bit strings.
//!
//! A chromosome concatenates one block per flow; block `i` has one bit per
//! candidate path of flow `i`, and at most one bit per block is set (an
//! all-zero block means DROP). Every operator preserves that invariant.
//!
//! Fitness walks the flows in index order against a running residual
//! network: a placement that fits earns the flow's priority and consumes
//! bandwidth, one that does not costs the priority and consumes nothing.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{PfarError, Result};
use crate::exact::{SolveResult, SolveStats};
use crate::network::{check_solution, objective_value, PfarInstance, RouteAssignment};

/// Final mutation rate of the linear schedule.
pub const MR_END: f64 = 0.9;

const RATE_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub time_budget: Duration,
    /// Chance that a non-seed individual starts with a path for a flow.
    pub init_path_prob: f64,
    /// Chance that a mutated flow is given a fresh random path.
    pub mutation_path_prob: f64,
    pub cr_start: f64,
    pub mr_start: f64,
    pub seed: u64,
    /// Optional cap on generations. When set, the rate schedule follows
    /// generation progress instead of wall time, which makes a run
    /// reproducible as long as the time budget does not bind first.
    pub max_generations: Option<u64>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 100,
            time_budget: Duration::from_secs(10),
            init_path_prob: 0.0001,
            mutation_path_prob: 0.0001,
            cr_start: 0.9,
            mr_start: 0.1,
            seed: 0,
            max_generations: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(PfarError::InvalidConfig(msg.into()));
        if self.population_size == 0 {
            return bad("population size must be positive");
        }
        if self.time_budget.is_zero() {
            return bad("time budget must be positive");
        }
        for p in [self.init_path_prob, self.mutation_path_prob, self.cr_start, self.mr_start] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities and rates must lie in [0, 1]");
            }
        }
        if (self.cr_start + self.mr_start - 1.0).abs() > 1e-9 {
            return bad("crossover and mutation rates must sum to 1");
        }
        if self.mr_start > MR_END {
            return bad("initial mutation rate exceeds the schedule's final rate");
        }
        if self.max_generations == Some(0) {
            return bad("generation limit must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rates {
    pub mr: f64,
    pub cr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    BoundReached,
    TimeExhausted,
    GenerationLimit,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::BoundReached => "bound-reached",
            Termination::TimeExhausted => "time-exhausted",
            Termination::GenerationLimit => "generation-limit",
        })
    }
}

/// One line of the per-generation log. Generation 0 is the initial
/// population.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRecord {
    pub generation: u64,
    pub best_fitness: i64,
    pub rates: Rates,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaStats {
    /// Number of bred generations.
    pub generations: u64,
    pub history: Vec<GenerationRecord>,
    pub elapsed: Duration,
    pub terminated_by: Termination,
}

impl GaStats {
    pub fn best_fitness_per_generation(&self) -> Vec<i64> {
        self.history.iter().map(|r| r.best_fitness).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
}

impl Chromosome {
    pub fn zeros(len: usize) -> Self {
        Chromosome { bits: vec![false; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Chromosome { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bits.iter().try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
    }
}

/// Block boundaries: block `i` spans `offsets[i]..offsets[i + 1]`.
#[derive(Clone, Debug)]
struct Layout {
    offsets: Vec<usize>,
}

impl Layout {
    fn of(instance: &PfarInstance) -> Result<Self> {
        let mut offsets = Vec::with_capacity(instance.flow_count() + 1);
        offsets.push(0);
        for paths in instance.paths()? {
            offsets.push(offsets.last().unwrap() + paths.len());
        }
        Ok(Layout { offsets })
    }

    fn flows(&self) -> usize {
        self.offsets.len() - 1
    }

    fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn block(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// First set bit of block `i`, as a path index.
    fn choice(&self, c: &Chromosome, i: usize) -> Option<usize> {
        c.bits[self.block(i)].iter().position(|&b| b)
    }

    fn check(&self, c: &Chromosome) -> Result<()> {
        if c.len() != self.len() {
            return Err(PfarError::ShapeMismatch { left: c.len(), right: self.len() });
        }
        Ok(())
    }
}

/// Flows by non-increasing priority (ties by index), each on its first
/// path that fits the residual network, else dropped.
pub fn greedy_assign(instance: &PfarInstance) -> Result<RouteAssignment> {
    instance.paths()?;
    let mut residual: Vec<u64> = instance.network().capacities().to_vec();
    let mut order: Vec<usize> = (0..instance.flow_count()).collect();
    order.sort_by(|&a, &b| instance.priority(b).cmp(&instance.priority(a)).then(a.cmp(&b)));
    let mut assignment = RouteAssignment::all_dropped(instance.flow_count());
    for i in order {
        let bw = instance.flows()[i].bandwidth;
        let fits = |m: &usize| instance.path_edge_ids(i, *m).iter().all(|&e| residual[e] >= bw);
        if let Some(m) = (0..instance.flow_paths(i).len()).find(fits) {
            instance.path_edge_ids(i, m).iter().for_each(|&e| residual[e] -= bw);
            assignment.set(i, Some(m));
        }
    }
    Ok(assignment)
}

pub fn encode(instance: &PfarInstance, assignment: &RouteAssignment) -> Result<Chromosome> {
    let layout = Layout::of(instance)?;
    if assignment.len() != layout.flows() {
        return Err(PfarError::AssignmentIncomplete { expected: layout.flows(), got: assignment.len() });
    }
    let mut c = Chromosome::zeros(layout.len());
    for (i, choice) in assignment.choices().iter().enumerate() {
        if let Some(m) = *choice {
            let block = layout.block(i);
            if m >= block.len() {
                return Err(PfarError::UnknownPath { flow: i, path: m.to_string() });
            }
            c.bits[block.start + m] = true;
        }
    }
    Ok(c)
}

/// Reads the chosen path of every flow; a block with several set bits is
/// read as its first one.
pub fn decode(instance: &PfarInstance, chromosome: &Chromosome) -> Result<RouteAssignment> {
    let layout = Layout::of(instance)?;
    layout.check(chromosome)?;
    Ok(RouteAssignment::new((0..layout.flows()).map(|i| layout.choice(chromosome, i)).collect()))
}

/// Decodes and drops every placement that does not fit, in the same order
/// fitness uses. The result is always a valid assignment.
pub fn repair(instance: &PfarInstance, chromosome: &Chromosome) -> Result<RouteAssignment> {
    let layout = Layout::of(instance)?;
    layout.check(chromosome)?;
    let mut residual = instance.network().capacities().to_vec();
    let mut assignment = RouteAssignment::all_dropped(layout.flows());
    walk(instance, &layout, chromosome, &mut residual, |i, m, fits| {
        if fits {
            assignment.set(i, Some(m));
        }
    });
    Ok(assignment)
}

pub fn fitness(instance: &PfarInstance, chromosome: &Chromosome) -> Result<i64> {
    let layout = Layout::of(instance)?;
    layout.check(chromosome)?;
    Ok(score(instance, &layout, chromosome, &mut Vec::new()))
}

/// Visits every placed flow in index order, reporting whether it fits the
/// residual left by the earlier fitting ones.
fn walk(
    instance: &PfarInstance,
    layout: &Layout,
    c: &Chromosome,
    residual: &mut [u64],
    mut visit: impl FnMut(usize, usize, bool),
) {
    for i in 0..layout.flows() {
        let Some(m) = layout.choice(c, i) else { continue };
        let bw = instance.flows()[i].bandwidth;
        let edges = instance.path_edge_ids(i, m);
        let fits = edges.iter().all(|&e| residual[e] >= bw);
        if fits {
            edges.iter().for_each(|&e| residual[e] -= bw);
        }
        visit(i, m, fits);
    }
}

fn score(instance: &PfarInstance, layout: &Layout, c: &Chromosome, residual: &mut Vec<u64>) -> i64 {
    residual.clear();
    residual.extend_from_slice(instance.network().capacities());
    let mut total = 0i64;
    walk(instance, layout, c, residual, |i, _, fits| {
        let p = instance.priority(i) as i64;
        total += if fits { p } else { -p };
    });
    total
}

/// Individual 0 is the greedy solution; every other individual gives each
/// flow a uniformly random path with probability `init_path_prob`.
pub fn init_population(instance: &PfarInstance, cfg: &GaConfig, rng: &mut impl Rng) -> Result<Vec<Chromosome>> {
    let layout = Layout::of(instance)?;
    let mut population = Vec::with_capacity(cfg.population_size);
    population.push(encode(instance, &greedy_assign(instance)?)?);
    while population.len() < cfg.population_size {
        let mut c = Chromosome::zeros(layout.len());
        for i in 0..layout.flows() {
            let block = layout.block(i);
            if !block.is_empty() && rng.gen_bool(cfg.init_path_prob) {
                c.bits[block.start + rng.gen_range(0..block.len())] = true;
            }
        }
        population.push(c);
    }
    Ok(population)
}

/// Uniform blockwise crossover: each flow's block comes whole from one
/// parent, chosen with probability 1/2.
pub fn crossover(a: &Chromosome, b: &Chromosome, instance: &PfarInstance, rng: &mut impl Rng) -> Result<Chromosome> {
    if a.len() != b.len() {
        return Err(PfarError::ShapeMismatch { left: a.len(), right: b.len() });
    }
    let layout = Layout::of(instance)?;
    layout.check(a)?;
    Ok(cross(&layout, a, b, rng))
}

fn cross(layout: &Layout, a: &Chromosome, b: &Chromosome, rng: &mut impl Rng) -> Chromosome {
    let mut child = a.clone();
    for i in 0..layout.flows() {
        if rng.gen_bool(0.5) {
            let block = layout.block(i);
            child.bits[block.clone()].copy_from_slice(&b.bits[block]);
        }
    }
    child
}

/// Clears the block of one uniformly chosen flow, then with probability
/// `mutation_path_prob` sets one uniformly random path bit in it.
pub fn mutate(
    chromosome: &Chromosome,
    instance: &PfarInstance,
    cfg: &GaConfig,
    rng: &mut impl Rng,
) -> Result<Chromosome> {
    let layout = Layout::of(instance)?;
    layout.check(chromosome)?;
    let mut c = chromosome.clone();
    mutate_in_place(&layout, &mut c, cfg.mutation_path_prob, rng);
    Ok(c)
}

fn mutate_in_place(layout: &Layout, c: &mut Chromosome, path_prob: f64, rng: &mut impl Rng) {
    if layout.flows() == 0 {
        return;
    }
    let block = layout.block(rng.gen_range(0..layout.flows()));
    c.bits[block.clone()].iter_mut().for_each(|b| *b = false);
    if !block.is_empty() && rng.gen_bool(path_prob) {
        c.bits[block.start + rng.gen_range(0..block.len())] = true;
    }
}

/// Linear schedule from `mr_start` to [`MR_END`] over `progress` in [0, 1].
pub fn rates_at(progress: f64, cfg: &GaConfig) -> Rates {
    let mr = cfg.mr_start + (MR_END - cfg.mr_start) * progress.clamp(0.0, 1.0);
    Rates { mr, cr: 1.0 - mr }
}

pub fn adapt_rates(elapsed: Duration, cfg: &GaConfig) -> Rates {
    rates_at(elapsed.as_secs_f64() / cfg.time_budget.as_secs_f64(), cfg)
}

/// Elite count, offspring count and number of offspring to mutate for a
/// population of `population_size` at the given rates.
pub fn breeding_sizes(population_size: usize, rates: Rates) -> (usize, usize, usize) {
    let elites = ((population_size as f64 * (1.0 - rates.cr) + RATE_EPS).floor() as usize).clamp(1, population_size);
    let offspring = population_size - elites;
    let mutated = ((offspring as f64 * rates.mr + RATE_EPS).floor() as usize).min(offspring);
    (elites, offspring, mutated)
}

/// One generation: sort by fitness, keep the elites, fill the rest with
/// crossover children of binary-tournament parents, and mutate a uniform
/// sample of the children. `fitnesses[k]` belongs to `population[k]`.
pub fn select_and_breed(
    population: &[Chromosome],
    fitnesses: &[i64],
    instance: &PfarInstance,
    cfg: &GaConfig,
    rates: Rates,
    rng: &mut impl Rng,
) -> Result<Vec<Chromosome>> {
    if population.len() != fitnesses.len() {
        return Err(PfarError::ShapeMismatch { left: population.len(), right: fitnesses.len() });
    }
    let layout = Layout::of(instance)?;
    if let Some(c) = population.iter().find(|c| c.len() != layout.len()) {
        return Err(PfarError::ShapeMismatch { left: c.len(), right: layout.len() });
    }
    Ok(breed(&layout, population, fitnesses, cfg, rates, rng))
}

fn breed(
    layout: &Layout,
    population: &[Chromosome],
    fitnesses: &[i64],
    cfg: &GaConfig,
    rates: Rates,
    rng: &mut impl Rng,
) -> Vec<Chromosome> {
    let size = population.len();
    let mut ranked: Vec<usize> = (0..size).collect();
    ranked.sort_by(|&a, &b| fitnesses[b].cmp(&fitnesses[a]).then(a.cmp(&b)));
    let (elites, offspring, mutated) = breeding_sizes(size, rates);

    let mut next: Vec<Chromosome> = ranked[..elites].iter().map(|&k| population[k].clone()).collect();
    let mut tournament = || {
        let a = rng.gen_range(0..size);
        let b = rng.gen_range(0..size);
        if fitnesses[b] > fitnesses[a] {
            b
        } else {
            a
        }
    };
    let parents: Vec<(usize, usize)> = (0..offspring).map(|_| (tournament(), tournament())).collect();
    for (a, b) in parents {
        next.push(cross(layout, &population[a], &population[b], rng));
    }
    for k in sample(rng, offspring, mutated) {
        mutate_in_place(layout, &mut next[elites + k], cfg.mutation_path_prob, rng);
    }
    debug_assert_eq!(next.len(), size);
    next
}

/// Evolves until some individual reaches the sum of all priorities, the
/// time budget runs out, or the optional generation cap is hit. Returns the
/// best individual, repaired into a valid assignment.
///
/// In the returned [`SolveResult`], `proven_optimal` is set only when every
/// flow was admitted, `stats.bound` is the priority sum and
/// `stats.nodes_explored` counts fitness evaluations.
pub fn run_ga(instance: &PfarInstance, cfg: &GaConfig) -> Result<(SolveResult, GaStats)> {
    cfg.validate()?;
    let started = Instant::now();
    let layout = Layout::of(instance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let upper = instance.priority_sum() as i64;

    let mut scratch = Vec::new();
    let mut population = init_population(instance, cfg, &mut rng)?;
    let mut fitnesses: Vec<i64> = population.iter().map(|c| score(instance, &layout, c, &mut scratch)).collect();
    let mut evaluations = population.len() as u64;
    let mut rates = rates_at(0.0, cfg);
    let best_of = |f: &[i64]| *f.iter().max().unwrap();
    let mut history =
        vec![GenerationRecord { generation: 0, best_fitness: best_of(&fitnesses), rates, elapsed: started.elapsed() }];

    let mut generation = 0;
    let terminated_by = loop {
        if best_of(&fitnesses) == upper {
            break Termination::BoundReached;
        }
        if cfg.max_generations.is_some_and(|g| generation >= g) {
            break Termination::GenerationLimit;
        }
        let elapsed = started.elapsed();
        if elapsed >= cfg.time_budget {
            break Termination::TimeExhausted;
        }
        rates = match cfg.max_generations {
            Some(g) => rates_at(generation as f64 / g as f64, cfg),
            None => adapt_rates(elapsed, cfg),
        };
        population = breed(&layout, &population, &fitnesses, cfg, rates, &mut rng);
        fitnesses = population.iter().map(|c| score(instance, &layout, c, &mut scratch)).collect();
        evaluations += population.len() as u64;
        generation += 1;
        history.push(GenerationRecord {
            generation,
            best_fitness: best_of(&fitnesses),
            rates,
            elapsed: started.elapsed(),
        });
    };

    let best = (0..population.len()).max_by(|&a, &b| fitnesses[a].cmp(&fitnesses[b]).then(b.cmp(&a))).unwrap();
    let assignment = repair(instance, &population[best])?;
    debug_assert!(check_solution(instance, &assignment)?.valid);
    let objective = objective_value(instance, &assignment)?;
    let elapsed = started.elapsed();
    let result = SolveResult {
        assignment,
        objective,
        proven_optimal: objective as i64 == upper,
        stats: SolveStats { nodes_explored: evaluations, elapsed, bound: upper as u64 },
    };
    Ok((result, GaStats { generations: generation, history, elapsed, terminated_by }))
}
