//! Genetic search over opening/closing sequences, scored by `M*`.
//!
//! A genome is a short list of `(open|close, size)` steps. Its fitness is
//! the `M*` of its output against a fixed reference filter, so lower is
//! better. A genome that leaves the noisy image untouched would score 0 and
//! is given [`WORST_FITNESS`] instead.
//!
//! Each generation: evaluate, keep the single best genome, then fill the
//! rest of the population with children. A child comes from two tournament
//! winners; with probability `crossover_rate` it is a prefix of the first
//! parent joined to a suffix of the second (cut points drawn independently,
//! result truncated to `max_stages`), otherwise a copy of the first parent.
//! Each gene then mutates with probability `mutation_rate`: a coin decides
//! between flipping the operation and redrawing the size.
//!
//! All randomness comes from one [`XorShift64Star`] stream consumed in a
//! fixed order, so a seed fully determines the run. Fitness is cached per
//! genome and uncached genomes of a generation are evaluated on worker
//! threads; neither affects the result.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::{abs_diff, Image};
use crate::measures::{Aggregation, WeightedDiagram};
use crate::morphology::{apply_filter, FilterKind, FilterSpec, MorphOp, Shape};
use crate::rng::XorShift64Star;

/// Fitness given to genomes that reproduce the noisy input.
pub const WORST_FITNESS: u128 = u128::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub max_stages: usize,
    pub max_se_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub tournament_size: usize,
    pub seed: u64,
    pub reference_spec: FilterSpec,
    pub r_max: usize,
    pub aggregation: Aggregation,
    /// Element shape for genome steps and for the measure's openings.
    pub shape: Shape,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            generations: 50,
            max_stages: 4,
            max_se_size: 5,
            mutation_rate: 0.1,
            crossover_rate: 0.7,
            tournament_size: 3,
            seed: 0,
            reference_spec: FilterSpec::center(1, Shape::Square),
            r_max: crate::diagrams::DEFAULT_R_MAX,
            aggregation: Aggregation::default(),
            shape: Shape::Square,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value '{value}' for '{key}'")))
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.population_size == 0 {
            return bad("population_size must be positive");
        }
        if self.generations == 0 {
            return bad("generations must be positive");
        }
        if self.max_stages == 0 || self.max_se_size == 0 {
            return bad("max_stages and max_se_size must be positive");
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return bad("tournament_size must be in 1..=population_size");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) || !(0.0..=1.0).contains(&self.crossover_rate)
        {
            return bad("rates must be in [0, 1]");
        }
        self.reference_spec.validate()
    }

    /// Sets one field from its textual `key` and `value`.
    ///
    /// `reference_spec` takes the filter mini-language and uses the
    /// configured `shape`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "population_size" => self.population_size = parse_value(key, value)?,
            "generations" => self.generations = parse_value(key, value)?,
            "max_stages" => self.max_stages = parse_value(key, value)?,
            "max_se_size" => self.max_se_size = parse_value(key, value)?,
            "mutation_rate" => self.mutation_rate = parse_value(key, value)?,
            "crossover_rate" => self.crossover_rate = parse_value(key, value)?,
            "tournament_size" => self.tournament_size = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "r_max" => self.r_max = parse_value(key, value)?,
            "aggregation" => self.aggregation = value.parse()?,
            "shape" => {
                self.shape = value.parse()?;
                self.reference_spec.shape = self.shape;
            }
            "reference_spec" => {
                self.reference_spec = FilterSpec::parse(value, self.shape)?;
            }
            other => return Err(Error::InvalidConfig(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_key_values(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", no + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }
}

/// A non-empty sequence of opening/closing steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genome {
    ops: Vec<(MorphOp, usize)>,
}

impl Genome {
    pub fn new(ops: Vec<(MorphOp, usize)>, cfg: &GaConfig) -> Result<Self> {
        let genome = Self { ops };
        if genome.is_valid(cfg) {
            Ok(genome)
        } else {
            Err(Error::InvalidConfig(format!(
                "genome {genome} outside 1..={} steps of size 1..={}",
                cfg.max_stages, cfg.max_se_size
            )))
        }
    }

    pub fn ops(&self) -> &[(MorphOp, usize)] {
        &self.ops
    }

    pub fn is_valid(&self, cfg: &GaConfig) -> bool {
        (1..=cfg.max_stages).contains(&self.ops.len())
            && self
                .ops
                .iter()
                .all(|&(_, s)| (1..=cfg.max_se_size).contains(&s))
    }

    pub fn to_spec(&self, shape: Shape) -> FilterSpec {
        FilterSpec::sequence(self.ops.clone(), shape)
    }

    fn random(rng: &mut XorShift64Star, cfg: &GaConfig) -> Self {
        let len = 1 + rng.index(cfg.max_stages);
        let ops = (0..len).map(|_| random_gene(rng, cfg)).collect();
        Self { ops }
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        FilterKind::Sequence(self.ops.clone()).fmt(f)
    }
}

fn random_op(rng: &mut XorShift64Star) -> MorphOp {
    if rng.next_bool() {
        MorphOp::Close
    } else {
        MorphOp::Open
    }
}

fn random_gene(rng: &mut XorShift64Star, cfg: &GaConfig) -> (MorphOp, usize) {
    let op = random_op(rng);
    (op, 1 + rng.index(cfg.max_se_size))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub fitness: u128,
    /// Output equals the noisy input.
    pub degenerate: bool,
    /// Output equals the reference filter's output, so `M*` is 0.
    pub mimics_reference: bool,
}

/// Fitness evaluation against a fixed noisy image and reference output.
pub struct Evaluator<'a> {
    noisy: &'a Image,
    cfg: &'a GaConfig,
    reference_out: Image,
    cache: HashMap<Genome, Evaluation>,
}

impl<'a> Evaluator<'a> {
    pub fn new(noisy: &'a Image, cfg: &'a GaConfig) -> Result<Self> {
        cfg.validate()?;
        let reference_out = apply_filter(noisy, &cfg.reference_spec)?;
        Ok(Self {
            noisy,
            cfg,
            reference_out,
            cache: HashMap::new(),
        })
    }

    fn compute(&self, genome: &Genome) -> Evaluation {
        let out = apply_filter(self.noisy, &genome.to_spec(self.cfg.shape))
            .expect("valid genomes always apply");
        if &out == self.noisy {
            return Evaluation {
                fitness: WORST_FITNESS,
                degenerate: true,
                mimics_reference: out == self.reference_out,
            };
        }
        let own = WeightedDiagram::new(
            &abs_diff(self.noisy, &out).expect("same shape"),
            self.cfg.r_max,
            self.cfg.shape,
        );
        let cross = WeightedDiagram::new(
            &abs_diff(&out, &self.reference_out).expect("same shape"),
            self.cfg.r_max,
            self.cfg.shape,
        );
        Evaluation {
            fitness: own.combine(&cross, self.cfg.aggregation),
            degenerate: false,
            mimics_reference: out == self.reference_out,
        }
    }

    pub fn evaluate(&mut self, genome: &Genome) -> Evaluation {
        if let Some(e) = self.cache.get(genome) {
            return *e;
        }
        let e = self.compute(genome);
        self.cache.insert(genome.clone(), e);
        e
    }

    /// Evaluates a whole population, computing cache misses concurrently.
    pub fn evaluate_all(&mut self, population: &[Genome]) -> Vec<Evaluation> {
        let mut missing: Vec<&Genome> = population
            .iter()
            .filter(|g| !self.cache.contains_key(*g))
            .collect();
        missing.sort();
        missing.dedup();

        if !missing.is_empty() {
            let workers = std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
                .min(missing.len());
            let chunk = missing.len().div_ceil(workers);
            let this = &*self;
            let results: Vec<(Genome, Evaluation)> = std::thread::scope(|s| {
                let handles: Vec<_> = missing
                    .chunks(chunk)
                    .map(|part| {
                        s.spawn(move || {
                            part.iter()
                                .map(|g| ((*g).clone(), this.compute(g)))
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("fitness worker panicked"))
                    .collect()
            });
            self.cache.extend(results);
        }
        population.iter().map(|g| self.cache[g]).collect()
    }

    pub fn evaluations(&self) -> usize {
        self.cache.len()
    }
}

/// `M*` of the genome's output against the reference filter's output, or
/// [`WORST_FITNESS`] when the genome reproduces `noisy`.
pub fn fitness(genome: &Genome, noisy: &Image, cfg: &GaConfig) -> Result<u128> {
    if !genome.is_valid(cfg) {
        return Err(Error::InvalidConfig(format!("genome {genome} is invalid")));
    }
    Ok(Evaluator::new(noisy, cfg)?.evaluate(genome).fitness)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: u128,
    /// Mean over non-degenerate members; `None` when every member is
    /// degenerate.
    pub mean_fitness: Option<f64>,
    pub degenerate: usize,
    pub reference_mimics: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evolution {
    pub best: Genome,
    pub best_fitness: u128,
    pub history: Vec<GenerationStats>,
    /// Distinct genomes evaluated.
    pub evaluations: usize,
}

pub fn evolve(noisy: &Image, cfg: &GaConfig) -> Result<Evolution> {
    cfg.validate()?;
    let mut rng = XorShift64Star::new(cfg.seed);
    let initial = (0..cfg.population_size)
        .map(|_| Genome::random(&mut rng, cfg))
        .collect();
    run(noisy, cfg, initial, rng)
}

/// Like [`evolve`] but starting from the given population, which must hold
/// exactly `population_size` valid genomes.
pub fn evolve_from(noisy: &Image, cfg: &GaConfig, initial: Vec<Genome>) -> Result<Evolution> {
    cfg.validate()?;
    if initial.len() != cfg.population_size {
        return Err(Error::InvalidConfig(format!(
            "initial population has {} genomes, expected {}",
            initial.len(),
            cfg.population_size
        )));
    }
    if let Some(g) = initial.iter().find(|g| !g.is_valid(cfg)) {
        return Err(Error::InvalidConfig(format!("genome {g} is invalid")));
    }
    run(noisy, cfg, initial, XorShift64Star::new(cfg.seed))
}

/// Index of the lowest fitness; ties go to the earliest index.
fn argmin(evals: &[Evaluation]) -> usize {
    let mut best = 0;
    for (i, e) in evals.iter().enumerate() {
        if e.fitness < evals[best].fitness {
            best = i;
        }
    }
    best
}

fn tournament(rng: &mut XorShift64Star, evals: &[Evaluation], size: usize) -> usize {
    let mut best = rng.index(evals.len());
    for _ in 1..size {
        let i = rng.index(evals.len());
        if evals[i].fitness < evals[best].fitness {
            best = i;
        }
    }
    best
}

fn breed(
    rng: &mut XorShift64Star,
    cfg: &GaConfig,
    population: &[Genome],
    evals: &[Evaluation],
) -> Genome {
    let a = &population[tournament(rng, evals, cfg.tournament_size)];
    let b = &population[tournament(rng, evals, cfg.tournament_size)];
    let mut ops = if rng.chance(cfg.crossover_rate) {
        let head = 1 + rng.index(a.ops.len());
        let tail = rng.index(b.ops.len());
        let mut ops: Vec<_> = a.ops[..head]
            .iter()
            .chain(&b.ops[tail..])
            .copied()
            .collect();
        ops.truncate(cfg.max_stages);
        ops
    } else {
        a.ops.clone()
    };
    for gene in ops.iter_mut() {
        if rng.chance(cfg.mutation_rate) {
            if rng.next_bool() {
                gene.0 = match gene.0 {
                    MorphOp::Open => MorphOp::Close,
                    MorphOp::Close => MorphOp::Open,
                };
            } else {
                gene.1 = 1 + rng.index(cfg.max_se_size);
            }
        }
    }
    Genome { ops }
}

fn run(
    noisy: &Image,
    cfg: &GaConfig,
    mut population: Vec<Genome>,
    mut rng: XorShift64Star,
) -> Result<Evolution> {
    let mut evaluator = Evaluator::new(noisy, cfg)?;
    let mut history = Vec::with_capacity(cfg.generations);
    let mut best: Option<(Genome, u128)> = None;

    for generation in 0..cfg.generations {
        let evals = evaluator.evaluate_all(&population);
        let elite = argmin(&evals);
        let scored: Vec<u128> = evals
            .iter()
            .filter(|e| !e.degenerate)
            .map(|e| e.fitness)
            .collect();
        history.push(GenerationStats {
            generation,
            best_fitness: evals[elite].fitness,
            mean_fitness: (!scored.is_empty())
                .then(|| scored.iter().map(|&f| f as f64).sum::<f64>() / scored.len() as f64),
            degenerate: evals.iter().filter(|e| e.degenerate).count(),
            reference_mimics: evals.iter().filter(|e| e.mimics_reference).count(),
        });
        if best.as_ref().is_none_or(|(_, f)| evals[elite].fitness < *f) {
            best = Some((population[elite].clone(), evals[elite].fitness));
        }

        if generation + 1 == cfg.generations {
            break;
        }
        let mut next = Vec::with_capacity(cfg.population_size);
        next.push(population[elite].clone());
        while next.len() < cfg.population_size {
            next.push(breed(&mut rng, cfg, &population, &evals));
        }
        population = next;
    }

    let (best, best_fitness) = best.expect("at least one generation");
    Ok(Evolution {
        best,
        best_fitness,
        history,
        evaluations: evaluator.evaluations(),
    })
}

/// `generation,best_fitness,mean_fitness,degenerate,reference_mimics` rows.
/// The worst-fitness sentinel is written as `inf`, a missing mean as an
/// empty field.
pub fn history_to_csv(history: &[GenerationStats]) -> Vec<u8> {
    let mut out =
        String::from("generation,best_fitness,mean_fitness,degenerate,reference_mimics\n");
    for h in history {
        let best = if h.best_fitness == WORST_FITNESS {
            "inf".to_string()
        } else {
            h.best_fitness.to_string()
        };
        let mean = h
            .mean_fitness
            .map(|m| format!("{m:.3}"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{best},{mean},{},{}",
            h.generation, h.degenerate, h.reference_mimics
        );
    }
    out.into_bytes()
}
