//! Variable-length genome encoding of pulse sequences and its variation operators.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Configuration, Pulse, PulseSequence, PulseStep};
use crate::error::{Error, Result};
use crate::spin::SpinPair;

/// Smallest duration a mutation may produce.
pub const MIN_DURATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Wait,
    Pulse(SpinPair),
}

/// One step: a wait or a pulse, optionally with a second simultaneous pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gene {
    pub action: Action,
    pub duration: f64,
    pub partner: Option<(SpinPair, f64)>,
}

impl Gene {
    pub fn wait(duration: f64) -> Self {
        Gene {
            action: Action::Wait,
            duration,
            partner: None,
        }
    }

    pub fn pulse(pair: SpinPair, duration: f64) -> Self {
        Gene {
            action: Action::Pulse(pair),
            duration,
            partner: None,
        }
    }

    pub fn with_partner(mut self, pair: SpinPair, duration: f64) -> Self {
        self.partner = Some((pair, duration));
        self
    }

    fn n_durations(&self) -> usize {
        1 + usize::from(self.partner.is_some())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub genes: Vec<Gene>,
}

impl Genome {
    pub fn new(genes: Vec<Gene>) -> Self {
        Genome { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// All durations in gene order (primary before partner).
    pub fn durations(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.genes {
            out.push(g.duration);
            if let Some((_, d)) = g.partner {
                out.push(d);
            }
        }
        out
    }

    /// Replaces the durations, in the order of [`Self::durations`].
    pub fn with_durations(&self, durations: &[f64]) -> Genome {
        let mut out = self.clone();
        let mut it = durations.iter().copied();
        for g in &mut out.genes {
            g.duration = it.next().expect("enough durations");
            if let Some((_, d)) = g.partner.as_mut() {
                *d = it.next().expect("enough durations");
            }
        }
        out
    }

    pub fn n_durations(&self) -> usize {
        self.genes.iter().map(Gene::n_durations).sum()
    }

    /// Reads a pulse sequence back into a genome (at most two pulses per step).
    pub fn from_sequence(seq: &PulseSequence<f64>) -> Result<Genome> {
        let mut genes = Vec::with_capacity(seq.steps.len());
        for (k, step) in seq.steps.iter().enumerate() {
            genes.push(match step {
                PulseStep::Wait(t) => Gene::wait(*t),
                PulseStep::Pulses(ps) => match ps.as_slice() {
                    [a] => Gene::pulse(a.pair, a.duration),
                    [a, b] => Gene::pulse(a.pair, a.duration).with_partner(b.pair, b.duration),
                    _ => {
                        return Err(Error::Parse(format!(
                            "step {} has {} pulses; genomes hold at most two",
                            k + 1,
                            ps.len()
                        )))
                    }
                },
            });
        }
        Ok(Genome { genes })
    }
}

/// Which genomes are legal and how random ones are drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct GenomeSpace {
    pub configuration: Configuration,
    pub pairs: Vec<SpinPair>,
    pub allow_wait: bool,
    pub allow_partner: bool,
    pub max_steps: usize,
    pub max_duration: f64,
    pub jmax_fraction_fixed: f64,
}

impl GenomeSpace {
    /// Every tunable pair of `configuration`, waits allowed, two pulses per step.
    pub fn for_configuration(configuration: Configuration, max_steps: usize) -> Self {
        GenomeSpace {
            configuration,
            pairs: configuration.tunable_pairs(),
            allow_wait: !configuration.fully_controllable,
            allow_partner: true,
            max_steps,
            max_duration: 2.0,
            jmax_fraction_fixed: 0.5,
        }
    }

    fn duration_ok(&self, d: f64) -> bool {
        d.is_finite() && d > 0.0 && d <= self.max_duration
    }

    pub fn check(&self, genome: &Genome) -> Result<()> {
        if genome.is_empty() || genome.len() > self.max_steps {
            return Err(Error::Parse(format!(
                "genome length {} outside [1, {}]",
                genome.len(),
                self.max_steps
            )));
        }
        for g in &genome.genes {
            if !self.duration_ok(g.duration) {
                return Err(Error::InvalidDuration(g.duration));
            }
            match g.action {
                Action::Wait => {
                    if !self.allow_wait || g.partner.is_some() {
                        return Err(Error::Parse("wait not allowed here".into()));
                    }
                }
                Action::Pulse(p) => {
                    if !self.pairs.contains(&p) {
                        return Err(Error::IllegalPair {
                            pair: p.to_string(),
                            configuration: self.configuration.to_string(),
                        });
                    }
                    if let Some((q, d)) = g.partner {
                        if !self.allow_partner || q == p || !self.pairs.contains(&q) {
                            return Err(Error::RepeatedPair(q.to_string()));
                        }
                        if !self.duration_ok(d) {
                            return Err(Error::InvalidDuration(d));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn decode(&self, genome: &Genome) -> PulseSequence<f64> {
        let steps = genome
            .genes
            .iter()
            .map(|g| match g.action {
                Action::Wait => PulseStep::Wait(g.duration),
                Action::Pulse(p) => {
                    let mut ps = vec![Pulse::new(p, g.duration)];
                    if let Some((q, d)) = g.partner {
                        ps.push(Pulse::new(q, d));
                    }
                    PulseStep::Pulses(ps)
                }
            })
            .collect();
        PulseSequence {
            configuration: self.configuration,
            steps,
            jmax_fraction_fixed: self.jmax_fraction_fixed,
        }
    }

    /// Lower and upper duration bounds for simplex refinement.
    pub fn bounds(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![MIN_DURATION; n], vec![self.max_duration; n])
    }

    pub fn random_duration<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.random_range(MIN_DURATION..=self.max_duration)
    }

    fn random_action<R: Rng>(&self, rng: &mut R) -> Action {
        let n = self.pairs.len() + usize::from(self.allow_wait);
        let k = rng.random_range(0..n);
        if k < self.pairs.len() {
            Action::Pulse(self.pairs[k])
        } else {
            Action::Wait
        }
    }

    /// A random gene; partners are added with probability `p_partner`.
    pub fn random_gene<R: Rng>(&self, rng: &mut R, p_partner: f64) -> Gene {
        let action = self.random_action(rng);
        let mut gene = Gene {
            action,
            duration: self.random_duration(rng),
            partner: None,
        };
        if let Action::Pulse(p) = action {
            if self.allow_partner && self.pairs.len() > 1 && rng.random_bool(p_partner) {
                let others: Vec<SpinPair> =
                    self.pairs.iter().copied().filter(|q| *q != p).collect();
                let q = *others.choose(rng).expect("at least one other pair");
                gene.partner = Some((q, self.random_duration(rng)));
            }
        }
        gene
    }

    /// A random genome with between half of `max_initial` and `max_initial` steps.
    pub fn random_genome<R: Rng>(&self, rng: &mut R, max_initial: usize) -> Genome {
        let hi = max_initial.clamp(1, self.max_steps);
        let len = rng.random_range(hi.div_ceil(2)..=hi);
        Genome {
            genes: (0..len).map(|_| self.random_gene(rng, 0.1)).collect(),
        }
    }

    /// Reflects `d` back into `[MIN_DURATION, max_duration]`.
    fn fold_duration(&self, mut d: f64) -> f64 {
        let (lo, hi) = (MIN_DURATION, self.max_duration);
        for _ in 0..4 {
            if d < lo {
                d = 2.0 * lo - d;
            } else if d > hi {
                d = 2.0 * hi - d;
            } else {
                return d;
            }
        }
        d.clamp(lo, hi)
    }
}

/// Mutation knobs; see `SearchConfig` for defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationRates {
    pub duration_sigma: f64,
    pub p_insert: f64,
    pub p_delete: f64,
    pub p_pair_swap: f64,
}

/// Gaussian duration kicks on every duration, then at most one each of
/// insertion, deletion and pair swap.
pub fn mutate<R: Rng>(
    space: &GenomeSpace,
    genome: &mut Genome,
    rates: &MutationRates,
    rng: &mut R,
) {
    if rates.duration_sigma > 0.0 {
        let normal = Normal::new(0.0, rates.duration_sigma).expect("finite sigma");
        let p_each = 1.0 / genome.n_durations().max(1) as f64;
        for g in &mut genome.genes {
            if rng.random_bool(p_each.max(0.25)) {
                g.duration = space.fold_duration(g.duration + normal.sample(rng));
            }
            if let Some((_, d)) = g.partner.as_mut() {
                if rng.random_bool(p_each.max(0.25)) {
                    *d = space.fold_duration(*d + normal.sample(rng));
                }
            }
        }
    }
    if genome.len() < space.max_steps && rng.random_bool(rates.p_insert) {
        let at = rng.random_range(0..=genome.len());
        let gene = space.random_gene(rng, 0.1);
        genome.genes.insert(at, gene);
    }
    if genome.len() > 1 && rng.random_bool(rates.p_delete) {
        let at = rng.random_range(0..genome.len());
        genome.genes.remove(at);
    }
    if !genome.is_empty() && rng.random_bool(rates.p_pair_swap) {
        let at = rng.random_range(0..genome.len());
        let g = &mut genome.genes[at];
        let action = space.random_action(rng);
        g.action = action;
        match action {
            Action::Wait => g.partner = None,
            Action::Pulse(p) => {
                if matches!(g.partner, Some((q, _)) if q == p) {
                    g.partner = None;
                }
            }
        }
    }
}

/// One-point crossover on the step lists: `a[..i] ++ b[j..]`.
pub fn crossover<R: Rng>(space: &GenomeSpace, a: &Genome, b: &Genome, rng: &mut R) -> Genome {
    let i = rng.random_range(0..=a.len());
    let j = rng.random_range(0..=b.len());
    let mut genes: Vec<Gene> = a.genes[..i].iter().chain(&b.genes[j..]).copied().collect();
    genes.truncate(space.max_steps);
    if genes.is_empty() {
        genes.push(if a.is_empty() { b.genes[0] } else { a.genes[0] });
    }
    Genome { genes }
}
