use std::collections::HashMap;

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finish, Budget, Guard, RunOutcome, SolverConfig, StopReason, Trace};
use crate::dataset::{dot, Dataset, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{self, subset_rss};

/// Largest p for which the Gram matrix is cached for fitness evaluation.
const GRAM_CACHE_MAX_P: usize = 2000;
const FITNESS_CACHE_MAX: usize = 200_000;

/// A binary mask over the p predictors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome(Vec<bool>);

impl Chromosome {
    pub fn from_support(p: usize, support: &SupportSet) -> Self {
        let mut bits = vec![false; p];
        for &j in support.indices() {
            bits[j] = true;
        }
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn support(&self) -> SupportSet {
        SupportSet::new(self.0.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect())
    }

    /// Flips uniformly chosen bits until exactly `k` are set.
    fn repair(&mut self, k: usize, rng: &mut impl Rng) {
        let ones: Vec<usize> = (0..self.0.len()).filter(|&j| self.0[j]).collect();
        if ones.len() > k {
            for i in sample(rng, ones.len(), ones.len() - k) {
                self.0[ones[i]] = false;
            }
        } else if ones.len() < k {
            let zeros: Vec<usize> = (0..self.0.len()).filter(|&j| !self.0[j]).collect();
            for i in sample(rng, zeros.len(), k - ones.len()) {
                self.0[zeros[i]] = true;
            }
        }
    }
}

/// RSS of a support, through a Cholesky solve on the cached Gram block
/// when that is accurate and an exact QR solve otherwise.
struct Fitness<'a> {
    data: &'a Dataset,
    gram: Option<DMatrix<f64>>,
    xty: Vec<f64>,
    yty: f64,
    cache: HashMap<Vec<usize>, f64>,
}

impl<'a> Fitness<'a> {
    fn new(data: &'a Dataset) -> Self {
        let p = data.p();
        Self {
            data,
            gram: (p <= GRAM_CACHE_MAX_P).then(|| linalg::gram(data)),
            xty: (0..p).map(|j| dot(data.column(j), data.y())).collect(),
            yty: data.y_norm_sq(),
            cache: HashMap::new(),
        }
    }

    fn gram_entry(&self, a: usize, b: usize) -> f64 {
        match &self.gram {
            Some(g) => g[(a, b)],
            None => dot(self.data.column(a), self.data.column(b)),
        }
    }

    fn fast(&self, s: &[usize]) -> Option<f64> {
        let m = s.len();
        let block = DMatrix::from_fn(m, m, |a, b| self.gram_entry(s[a], s[b]));
        let min_diag = (0..m).map(|i| block[(i, i)]).fold(f64::INFINITY, f64::min);
        let chol = block.cholesky()?;
        let l = chol.l_dirty();
        let min_pivot = (0..m).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if !(min_pivot > 1e-4 * min_diag) {
            return None;
        }
        let rhs = DVector::from_iterator(m, s.iter().map(|&j| self.xty[j]));
        let beta = chol.solve(&rhs);
        let rss = self.yty - rhs.dot(&beta);
        (rss > 1e-4 * self.yty).then_some(rss)
    }

    fn eval(&mut self, c: &Chromosome) -> f64 {
        let support = c.support();
        if let Some(&v) = self.cache.get(support.indices()) {
            return v;
        }
        let v = match self.fast(support.indices()) {
            Some(v) => v,
            None => subset_rss(self.data, &support).map(|s| s.rss).unwrap_or(f64::INFINITY),
        };
        if self.cache.len() >= FITNESS_CACHE_MAX {
            self.cache.clear();
        }
        self.cache.insert(support.indices().to_vec(), v);
        v
    }
}

/// Genetic search over masks with exactly `k` ones, one generation per step.
pub struct GeneticSearch<'a> {
    k: usize,
    p: usize,
    crossover_rate: f64,
    mutation_rate: f64,
    rng: ChaCha8Rng,
    fitness: Fitness<'a>,
    population: Vec<Chromosome>,
    scores: Vec<f64>,
    generations: u64,
}

impl<'a> GeneticSearch<'a> {
    /// Random initial population of `config.population_size` chromosomes.
    pub fn new(data: &'a Dataset, k: usize, config: &SolverConfig) -> Result<Self> {
        Self::validate(data, k, config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let population = (0..config.population_size)
            .map(|_| Chromosome::from_support(data.p(), &SupportSet::new(sample(&mut rng, data.p(), k).into_vec())))
            .collect();
        Ok(Self::assemble(data, k, config, rng, population))
    }

    /// Starts from an explicit population; every chromosome must have `k` ones.
    pub fn with_population(
        data: &'a Dataset,
        k: usize,
        config: &SolverConfig,
        population: Vec<Chromosome>,
    ) -> Result<Self> {
        Self::validate(data, k, config)?;
        if population.len() < 2 {
            return Err(Error::InvalidConfig(format!("population size {} < 2", population.len())));
        }
        if population.iter().any(|c| c.bits().len() != data.p() || c.ones() != k) {
            return Err(Error::InvalidArgument(format!("every chromosome needs length {} and {k} ones", data.p())));
        }
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        Ok(Self::assemble(data, k, config, rng, population))
    }

    fn validate(data: &Dataset, k: usize, config: &SolverConfig) -> Result<()> {
        if k == 0 || k > data.p() {
            return Err(Error::InvalidK { k, p: data.p() });
        }
        if config.population_size < 2 {
            return Err(Error::InvalidConfig(format!("population size {} < 2", config.population_size)));
        }
        if !(0.0..=1.0).contains(&config.crossover_rate) || !(0.0..=1.0).contains(&config.mutation_rate) {
            return Err(Error::InvalidConfig("crossover and mutation rates must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn assemble(
        data: &'a Dataset,
        k: usize,
        config: &SolverConfig,
        rng: ChaCha8Rng,
        population: Vec<Chromosome>,
    ) -> Self {
        let mut fitness = Fitness::new(data);
        let scores = population.iter().map(|c| fitness.eval(c)).collect();
        Self {
            k,
            p: data.p(),
            crossover_rate: config.crossover_rate,
            mutation_rate: config.mutation_rate,
            rng,
            fitness,
            population,
            scores,
            generations: 0,
        }
    }

    pub fn population(&self) -> &[Chromosome] {
        &self.population
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn generations(&self) -> u64 {
        self.generations
    }

    pub fn is_homogeneous(&self) -> bool {
        self.population.windows(2).all(|w| w[0] == w[1])
    }

    /// Fittest chromosome, first in population order on ties.
    pub fn best(&self) -> (&Chromosome, f64) {
        let mut b = 0;
        for i in 1..self.scores.len() {
            if self.scores[i] < self.scores[b] {
                b = i;
            }
        }
        (&self.population[b], self.scores[b])
    }

    /// Flips `round(MR * p * cols)` distinct bits across the offspring matrix, then repairs.
    fn mutate(&mut self, offspring: &mut [Chromosome]) {
        let total = self.p * offspring.len();
        let flips = ((self.mutation_rate * total as f64).round() as usize).min(total);
        if flips > 0 {
            for pos in sample(&mut self.rng, total, flips) {
                let bits = &mut offspring[pos / self.p].0;
                bits[pos % self.p] = !bits[pos % self.p];
            }
        }
        for c in offspring.iter_mut() {
            c.repair(self.k, &mut self.rng);
        }
    }

    /// One generation: crossover, mutation, and survival of the fittest.
    pub fn step(&mut self) {
        let s = self.population.len();
        let mut u = Vec::new();
        let mut v = Vec::new();
        for _ in 0..s {
            if self.rng.random::<f64>() < self.crossover_rate {
                let parents = sample(&mut self.rng, s, 2);
                let (a, b) = (&self.population[parents.index(0)], &self.population[parents.index(1)]);
                let site = if self.p > 1 { self.rng.random_range(1..self.p) } else { 1 };
                let mut uh = a.clone();
                let mut vh = b.clone();
                uh.0[site..].copy_from_slice(&b.0[site..]);
                vh.0[site..].copy_from_slice(&a.0[site..]);
                uh.repair(self.k, &mut self.rng);
                vh.repair(self.k, &mut self.rng);
                u.push(uh);
                v.push(vh);
            }
        }
        self.mutate(&mut u);
        self.mutate(&mut v);
        let offspring: Vec<Chromosome> = u.into_iter().chain(v).collect();
        let new_scores: Vec<f64> = offspring.iter().map(|c| self.fitness.eval(c)).collect();
        let mut merged: Vec<(Chromosome, f64)> = self
            .population
            .drain(..)
            .zip(self.scores.drain(..))
            .chain(offspring.into_iter().zip(new_scores))
            .collect();
        merged.sort_by(|a, b| a.1.total_cmp(&b.1));
        merged.truncate(s);
        for (c, f) in merged {
            self.population.push(c);
            self.scores.push(f);
        }
        self.generations += 1;
    }
}

/// Genetic algorithm; stops when the population is homogeneous or the budget runs out.
pub fn genetic(data: &Dataset, k: usize, budget: &Budget, config: &SolverConfig) -> Result<RunOutcome> {
    let guard = Guard::start(*budget);
    let search = GeneticSearch::new(data, k, config)?;
    evolve(data, search, guard, config)
}

/// Genetic algorithm from an explicit initial population.
pub fn genetic_from(
    data: &Dataset,
    k: usize,
    population: Vec<Chromosome>,
    budget: &Budget,
    config: &SolverConfig,
) -> Result<RunOutcome> {
    let guard = Guard::start(*budget);
    let search = GeneticSearch::with_population(data, k, config, population)?;
    evolve(data, search, guard, config)
}

fn evolve(data: &Dataset, mut search: GeneticSearch<'_>, guard: Guard, config: &SolverConfig) -> Result<RunOutcome> {
    let mut trace = Trace::new(config.trace);
    trace.push(search.best().1);
    let stop = loop {
        if search.is_homogeneous() {
            break StopReason::PopulationHomogeneous;
        }
        if let Some(reason) = guard.check(search.generations()) {
            break reason;
        }
        search.step();
        trace.push(search.best().1);
    };
    debug!("GA stopped after {} generations: {stop}", search.generations());
    let support = search.best().0.support();
    finish(data, support, &guard, search.generations(), stop, trace, Vec::new())
}
