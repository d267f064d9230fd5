//! Pulse sequences and their propagators.
//!
//! Energies are in units of `Jmax` and times in units of `h/Jmax`, so a
//! pulse of strength `J` and duration `t` contributes the rotation angle
//! `θ = 2π J t` to `exp(-iθ S_i·S_j)`.
//!
//! Sector propagators are evaluated on the projected 5×5 and 9×9 blocks;
//! both sectors are invariant under every exchange operator, so the
//! projection is exact. The full 64-dimensional propagator is available
//! through [`Simulator::full_propagator`].

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, lit, phase_factor, to_f64, Real};
use crate::spin::{
    build_subspace_basis, exchange_matrix, Sector, SpinLabel, SpinPair, SubspaceBasis, DIM, N_PAIRS,
};

/// Geometry of the coupled double-dot pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    /// Single-level dot of `a` faces the two-level dot of `b`.
    A,
    /// The two two-level dots face each other.
    B,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layout::A => write!(f, "A"),
            Layout::B => write!(f, "B"),
        }
    }
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Layout::A),
            "B" | "b" => Ok(Layout::B),
            other => Err(Error::Parse(format!("unknown configuration {other:?}"))),
        }
    }
}

const FIXED_PAIRS: [SpinPair; 2] = [
    SpinPair::of(SpinLabel::A1, SpinLabel::A2),
    SpinPair::of(SpinLabel::B1, SpinLabel::B2),
];

const INTRA_TUNABLE: [SpinPair; 4] = [
    SpinPair::of(SpinLabel::A1, SpinLabel::A3),
    SpinPair::of(SpinLabel::A2, SpinLabel::A3),
    SpinPair::of(SpinLabel::B1, SpinLabel::B3),
    SpinPair::of(SpinLabel::B2, SpinLabel::B3),
];

/// Coupling topology plus the control model.
///
/// In the physical model the intra-dot pairs `a1a2` and `b1b2` are always on
/// at a fixed fraction of `Jmax`. The fully controllable variant makes them
/// tunable instead and drops the fixed background.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub layout: Layout,
    pub fully_controllable: bool,
}

impl Configuration {
    pub const A: Configuration = Configuration {
        layout: Layout::A,
        fully_controllable: false,
    };
    pub const B: Configuration = Configuration {
        layout: Layout::B,
        fully_controllable: false,
    };

    pub fn new(layout: Layout) -> Self {
        Configuration {
            layout,
            fully_controllable: false,
        }
    }

    pub fn fully_controllable(layout: Layout) -> Self {
        Configuration {
            layout,
            fully_controllable: true,
        }
    }

    pub fn inter_qubit_pairs(&self) -> [SpinPair; 2] {
        match self.layout {
            Layout::A => [
                SpinPair::of(SpinLabel::A3, SpinLabel::B1),
                SpinPair::of(SpinLabel::A3, SpinLabel::B2),
            ],
            Layout::B => [
                SpinPair::of(SpinLabel::A1, SpinLabel::B1),
                SpinPair::of(SpinLabel::A2, SpinLabel::B2),
            ],
        }
    }

    /// Pairs that carry the always-on coupling (empty when fully controllable).
    pub fn fixed_pairs(&self) -> &'static [SpinPair] {
        if self.fully_controllable {
            &[]
        } else {
            &FIXED_PAIRS
        }
    }

    pub fn tunable_pairs(&self) -> Vec<SpinPair> {
        let mut pairs = INTRA_TUNABLE.to_vec();
        pairs.extend(self.inter_qubit_pairs());
        if self.fully_controllable {
            pairs.extend(FIXED_PAIRS);
        }
        pairs
    }

    pub fn is_tunable(&self, pair: SpinPair) -> bool {
        INTRA_TUNABLE.contains(&pair)
            || self.inter_qubit_pairs().contains(&pair)
            || (self.fully_controllable && FIXED_PAIRS.contains(&pair))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.fully_controllable {
            write!(f, "{} (fully controllable)", self.layout)
        } else {
            write!(f, "{}", self.layout)
        }
    }
}

/// One exchange pulse. Duration in `h/Jmax`, strength in `Jmax`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulse<T> {
    pub pair: SpinPair,
    pub duration: T,
    pub strength: T,
}

impl<T: Real> Pulse<T> {
    /// Full-strength (bang-bang) pulse.
    pub fn new(pair: SpinPair, duration: T) -> Self {
        Pulse {
            pair,
            duration,
            strength: T::one(),
        }
    }

    pub fn with_strength(pair: SpinPair, duration: T, strength: T) -> Self {
        Pulse {
            pair,
            duration,
            strength,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PulseStep<T> {
    /// Pulses switched on together at the start of the step.
    Pulses(Vec<Pulse<T>>),
    /// Only the fixed couplings act.
    Wait(T),
}

impl<T: Real> PulseStep<T> {
    pub fn single(pair: SpinPair, duration: T) -> Self {
        PulseStep::Pulses(vec![Pulse::new(pair, duration)])
    }

    /// Wall-clock length of the step under `mode`.
    pub fn duration(&self, mode: CompositionMode) -> T {
        match self {
            PulseStep::Wait(t) => *t,
            PulseStep::Pulses(pulses) => match mode {
                CompositionMode::Simultaneous => {
                    pulses.iter().fold(
                        T::zero(),
                        |m, p| if p.duration > m { p.duration } else { m },
                    )
                }
                CompositionMode::Sequential => pulses.iter().fold(T::zero(), |s, p| s + p.duration),
            },
        }
    }
}

/// How pulses listed in the same step are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositionMode {
    /// Each pulse occupies its own time slot, in listed order.
    #[default]
    Sequential,
    /// All pulses start together; each switches off after its own duration.
    Simultaneous,
}

impl fmt::Display for CompositionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompositionMode::Sequential => write!(f, "sequential"),
            CompositionMode::Simultaneous => write!(f, "simultaneous"),
        }
    }
}

impl std::str::FromStr for CompositionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(CompositionMode::Sequential),
            "simultaneous" => Ok(CompositionMode::Simultaneous),
            other => Err(Error::Parse(format!("unknown composition mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence<T> {
    pub configuration: Configuration,
    pub steps: Vec<PulseStep<T>>,
    /// Strength of the always-on couplings in units of `Jmax`.
    pub jmax_fraction_fixed: T,
}

impl<T: Real> PulseSequence<T> {
    pub fn new(configuration: Configuration) -> Self {
        PulseSequence {
            configuration,
            steps: Vec::new(),
            jmax_fraction_fixed: lit(0.5),
        }
    }

    pub fn with_steps(configuration: Configuration, steps: Vec<PulseStep<T>>) -> Self {
        PulseSequence {
            steps,
            ..Self::new(configuration)
        }
    }

    pub fn push(&mut self, step: PulseStep<T>) -> &mut Self {
        self.steps.push(step);
        self
    }

    /// Concatenation, `self` first.
    pub fn then(&self, other: &PulseSequence<T>) -> PulseSequence<T> {
        let mut out = self.clone();
        out.steps.extend(other.steps.iter().cloned());
        out
    }

    /// Total duration in `h/Jmax`.
    pub fn total_duration(&self, mode: CompositionMode) -> T {
        self.steps
            .iter()
            .fold(T::zero(), |acc, s| acc + s.duration(mode))
    }

    pub fn pulses(&self) -> impl Iterator<Item = &Pulse<T>> {
        self.steps.iter().flat_map(|s| match s {
            PulseStep::Pulses(p) => p.as_slice(),
            PulseStep::Wait(_) => &[],
        })
    }

    /// Copy with every duration multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> PulseSequence<T> {
        let mut out = self.clone();
        for step in &mut out.steps {
            match step {
                PulseStep::Wait(t) => *t *= factor,
                PulseStep::Pulses(ps) => ps.iter_mut().for_each(|p| p.duration *= factor),
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let frac = to_f64(self.jmax_fraction_fixed);
        if !self.configuration.fully_controllable && !(frac > 0.0 && frac <= 1.0) {
            return Err(Error::InvalidFixedFraction(frac));
        }
        for (k, step) in self.steps.iter().enumerate() {
            match step {
                PulseStep::Wait(t) => check_duration(*t)?,
                PulseStep::Pulses(pulses) => {
                    if pulses.is_empty() {
                        return Err(Error::EmptyStep(k + 1));
                    }
                    for (i, p) in pulses.iter().enumerate() {
                        if !self.configuration.is_tunable(p.pair) {
                            return Err(Error::IllegalPair {
                                pair: p.pair.to_string(),
                                configuration: self.configuration.to_string(),
                            });
                        }
                        check_duration(p.duration)?;
                        let s = to_f64(p.strength);
                        if !(0.0..=1.0).contains(&s) {
                            return Err(Error::InvalidStrength(s));
                        }
                        if pulses[..i].iter().any(|q| q.pair == p.pair) {
                            return Err(Error::RepeatedPair(p.pair.to_string()));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_duration<T: Real>(t: T) -> Result<()> {
    let v = to_f64(t);
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDuration(v))
    }
}

/// Complex unitary restricted to one sector, in that sector's basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformationMatrix<T: Real> {
    pub sector: Sector,
    pub entries: DMatrix<Complex<T>>,
}

impl<T: Real> TransformationMatrix<T> {
    pub fn identity(sector: Sector) -> Self {
        let d = sector.dim();
        TransformationMatrix {
            sector,
            entries: DMatrix::identity(d, d),
        }
    }

    pub fn new(sector: Sector, entries: DMatrix<Complex<T>>) -> Result<Self> {
        let d = sector.dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        Ok(TransformationMatrix { sector, entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_defect(&self) -> T {
        let d = self.dim();
        (self.entries.adjoint() * &self.entries - DMatrix::<Complex<T>>::identity(d, d)).norm()
    }

    /// `self · rhs` (rhs acts first).
    pub fn compose(&self, rhs: &TransformationMatrix<T>) -> TransformationMatrix<T> {
        debug_assert_eq!(self.sector, rhs.sector);
        TransformationMatrix {
            sector: self.sector,
            entries: &self.entries * &rhs.entries,
        }
    }

    pub fn adjoint(&self) -> TransformationMatrix<T> {
        TransformationMatrix {
            sector: self.sector,
            entries: self.entries.adjoint(),
        }
    }
}

/// Propagators of the S=0 (5×5) and S=1, Sz=−1 (9×9) sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorPropagators<T: Real> {
    pub s0: TransformationMatrix<T>,
    pub s1: TransformationMatrix<T>,
}

impl<T: Real> SectorPropagators<T> {
    pub fn identity() -> Self {
        SectorPropagators {
            s0: TransformationMatrix::identity(Sector::S0),
            s1: TransformationMatrix::identity(Sector::S1),
        }
    }

    /// `self · rhs` in both sectors.
    pub fn compose(&self, rhs: &SectorPropagators<T>) -> SectorPropagators<T> {
        SectorPropagators {
            s0: self.s0.compose(&rhs.s0),
            s1: self.s1.compose(&rhs.s1),
        }
    }
}

/// Closed-form `exp(-iθ S_i·S_j)` on the 64-dimensional space.
///
/// With the singlet projector `P_s = 1/4 − S_i·S_j` and the triplet
/// projector `P_t = 3/4 + S_i·S_j`, the propagator is
/// `e^{+3iθ/4} P_s + e^{−iθ/4} P_t`.
pub fn exchange_propagator<T: Real>(pair: SpinPair, theta: T) -> DMatrix<Complex<T>> {
    let ex = exchange_matrix::<T>(pair);
    let id = DMatrix::<T>::identity(DIM, DIM);
    let p_singlet = &id * lit::<T>(0.25) - &ex;
    let p_triplet = &id * lit::<T>(0.75) + &ex;
    let singlet_phase = phase_factor(-theta * lit::<T>(0.75));
    let triplet_phase = phase_factor(theta * lit::<T>(0.25));
    p_singlet.map(|x| c(x) * singlet_phase) + p_triplet.map(|x| c(x) * triplet_phase)
}

/// `exp(-iθH)` for a real symmetric `H`, via its eigendecomposition.
pub fn expm_symmetric<T: Real>(h: &DMatrix<T>, theta: T) -> DMatrix<Complex<T>> {
    Spectrum::new(h.clone()).propagator(theta)
}

/// A constant-Hamiltonian interval: `(duration, [(pair, strength)])` on top of the fixed background.
type Segment<T> = (T, Vec<(SpinPair, T)>);

fn segments<T: Real>(step: &PulseStep<T>, mode: CompositionMode) -> Vec<Segment<T>> {
    match step {
        PulseStep::Wait(t) => vec![(*t, Vec::new())],
        PulseStep::Pulses(pulses) => match mode {
            CompositionMode::Sequential => pulses
                .iter()
                .map(|p| (p.duration, vec![(p.pair, p.strength)]))
                .collect(),
            CompositionMode::Simultaneous => {
                let mut ends: Vec<T> = pulses.iter().map(|p| p.duration).collect();
                ends.sort_by(|a, b| a.partial_cmp(b).expect("finite durations"));
                ends.dedup();
                let mut out = Vec::with_capacity(ends.len());
                let mut start = T::zero();
                for end in ends {
                    if end > start {
                        let active = pulses
                            .iter()
                            .filter(|p| p.duration >= end)
                            .map(|p| (p.pair, p.strength))
                            .collect();
                        out.push((end - start, active));
                    }
                    start = end;
                }
                out
            }
        },
    }
}

/// Eigensystem of one constant Hamiltonian; only the angle changes between uses.
#[derive(Debug)]
struct Spectrum<T: Real> {
    vectors: DMatrix<Complex<T>>,
    vectors_t: DMatrix<Complex<T>>,
    values: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    fn new(h: DMatrix<T>) -> Self {
        let eig = SymmetricEigen::new(h);
        let vectors = eig.eigenvectors.map(c);
        Spectrum {
            vectors_t: vectors.transpose(),
            vectors,
            values: eig.eigenvalues.iter().copied().collect(),
        }
    }

    /// `exp(-iθH)`.
    fn propagator(&self, theta: T) -> DMatrix<Complex<T>> {
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let f = phase_factor(theta * lambda);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= f);
        }
        scaled * &self.vectors_t
    }
}

/// Matrix dimension plus the `(pair index, strength bits)` terms of a Hamiltonian.
type SpectrumKey = (usize, Vec<(usize, u64)>);

const SPECTRUM_CACHE_LIMIT: usize = 4096;

/// Cached exchange matrices (full and sector-projected) for fast propagation.
///
/// Construction costs a few milliseconds; share one instance across threads.
/// Eigensystems of the step Hamiltonians are memoized, so repeated pair
/// patterns cost a matrix product rather than a diagonalization.
#[derive(Debug)]
pub struct Simulator<T: Real> {
    full: Vec<DMatrix<T>>,
    s0_basis: SubspaceBasis<T>,
    s1_basis: SubspaceBasis<T>,
    s0: Vec<DMatrix<T>>,
    s1: Vec<DMatrix<T>>,
    spectra: RwLock<HashMap<SpectrumKey, Arc<Spectrum<T>>>>,
}

impl<T: Real> Clone for Simulator<T> {
    fn clone(&self) -> Self {
        Simulator {
            full: self.full.clone(),
            s0_basis: self.s0_basis.clone(),
            s1_basis: self.s1_basis.clone(),
            s0: self.s0.clone(),
            s1: self.s1.clone(),
            spectra: RwLock::new(HashMap::new()),
        }
    }
}

impl<T: Real> Default for Simulator<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Simulator<T> {
    pub fn new() -> Self {
        let s0_basis = build_subspace_basis::<T>(Sector::S0);
        let s1_basis = build_subspace_basis::<T>(Sector::S1);
        let mut full = Vec::with_capacity(N_PAIRS);
        for pair in SpinPair::all() {
            full.push(exchange_matrix::<T>(pair));
        }
        let s0 = full.iter().map(|m| s0_basis.project(m)).collect();
        let s1 = full.iter().map(|m| s1_basis.project(m)).collect();
        Simulator {
            full,
            s0_basis,
            s1_basis,
            s0,
            s1,
            spectra: RwLock::new(HashMap::new()),
        }
    }

    pub fn basis(&self, sector: Sector) -> &SubspaceBasis<T> {
        match sector {
            Sector::S0 => &self.s0_basis,
            _ => &self.s1_basis,
        }
    }

    fn spectrum(
        &self,
        mats: &[DMatrix<T>],
        dim: usize,
        terms: &[(SpinPair, T)],
    ) -> Arc<Spectrum<T>> {
        let mut key: Vec<(usize, u64)> = terms
            .iter()
            .map(|(p, s)| (p.index(), to_f64(*s).to_bits()))
            .collect();
        key.sort_unstable();
        let key = (dim, key);
        if let Some(hit) = self.spectra.read().expect("spectrum cache").get(&key) {
            return Arc::clone(hit);
        }
        let mut h = DMatrix::<T>::zeros(dim, dim);
        for (pair, strength) in terms {
            h += &mats[pair.index()] * *strength;
        }
        let spectrum = Arc::new(Spectrum::new(h));
        let mut cache = self.spectra.write().expect("spectrum cache");
        if cache.len() < SPECTRUM_CACHE_LIMIT {
            cache.insert(key, Arc::clone(&spectrum));
        }
        spectrum
    }

    /// Applies one step to `u` (the propagator accumulated so far).
    fn apply_step(
        &self,
        mats: &[DMatrix<T>],
        u: DMatrix<Complex<T>>,
        step: &PulseStep<T>,
        config: &Configuration,
        fixed_strength: T,
        mode: CompositionMode,
    ) -> DMatrix<Complex<T>> {
        let dim = u.nrows();
        let two_pi = T::two_pi();
        let mut u = u;
        for (dt, active) in segments(step, mode) {
            if dt == T::zero() {
                continue;
            }
            let mut terms: Vec<(SpinPair, T)> = config
                .fixed_pairs()
                .iter()
                .map(|p| (*p, fixed_strength))
                .collect();
            terms.extend(active);
            let theta = two_pi * dt;
            u = match terms.as_slice() {
                [] => u,
                // a lone exchange has two eigenvalues: U = αI + βE with E = S_i·S_j
                [(pair, strength)] => {
                    let angle = theta * *strength;
                    let singlet = phase_factor(-angle * lit::<T>(0.75));
                    let triplet = phase_factor(angle * lit::<T>(0.25));
                    let alpha = singlet * lit::<T>(0.25) + triplet * lit::<T>(0.75);
                    let beta = triplet - singlet;
                    let e = &mats[pair.index()];
                    let mut out = &u * alpha;
                    for col in 0..dim {
                        for k in 0..dim {
                            let ukc = u[(k, col)] * beta;
                            for row in 0..dim {
                                out[(row, col)] += ukc * e[(row, k)];
                            }
                        }
                    }
                    out
                }
                _ => {
                    let sp = self.spectrum(mats, dim, &terms);
                    let mut w = &sp.vectors_t * u;
                    for (k, &lambda) in sp.values.iter().enumerate() {
                        let f = phase_factor(theta * lambda);
                        w.row_mut(k).iter_mut().for_each(|z| *z *= f);
                    }
                    &sp.vectors * w
                }
            };
        }
        u
    }

    fn step_in(
        &self,
        mats: &[DMatrix<T>],
        dim: usize,
        step: &PulseStep<T>,
        config: &Configuration,
        fixed_strength: T,
        mode: CompositionMode,
    ) -> DMatrix<Complex<T>> {
        self.apply_step(
            mats,
            DMatrix::identity(dim, dim),
            step,
            config,
            fixed_strength,
            mode,
        )
    }

    /// 64-dimensional propagator of one step.
    pub fn step_propagator(
        &self,
        step: &PulseStep<T>,
        config: &Configuration,
        jmax_fraction_fixed: T,
        mode: CompositionMode,
    ) -> Result<DMatrix<Complex<T>>> {
        if let PulseStep::Pulses(p) = step {
            if p.is_empty() {
                return Err(Error::EmptyStep(0));
            }
        }
        Ok(self.step_in(&self.full, DIM, step, config, jmax_fraction_fixed, mode))
    }

    /// Ordered product of all step propagators on the 64-dimensional space.
    pub fn full_propagator(
        &self,
        seq: &PulseSequence<T>,
        mode: CompositionMode,
    ) -> Result<DMatrix<Complex<T>>> {
        seq.validate()?;
        let mut u = DMatrix::<Complex<T>>::identity(DIM, DIM);
        for step in &seq.steps {
            u = self.apply_step(
                &self.full,
                u,
                step,
                &seq.configuration,
                seq.jmax_fraction_fixed,
                mode,
            );
        }
        Ok(u)
    }

    /// Sector propagators of the whole sequence (step 1 acts first).
    pub fn sequence_propagator(
        &self,
        seq: &PulseSequence<T>,
        mode: CompositionMode,
    ) -> Result<SectorPropagators<T>> {
        seq.validate()?;
        Ok(self.sequence_propagator_unchecked(seq, mode))
    }

    /// As [`Self::sequence_propagator`] without validation, for callers that
    /// construct sequences known to be valid.
    pub fn sequence_propagator_unchecked(
        &self,
        seq: &PulseSequence<T>,
        mode: CompositionMode,
    ) -> SectorPropagators<T> {
        let mut u0 = DMatrix::<Complex<T>>::identity(5, 5);
        let mut u1 = DMatrix::<Complex<T>>::identity(9, 9);
        for step in &seq.steps {
            let f = seq.jmax_fraction_fixed;
            u0 = self.apply_step(&self.s0, u0, step, &seq.configuration, f, mode);
            u1 = self.apply_step(&self.s1, u1, step, &seq.configuration, f, mode);
        }
        SectorPropagators {
            s0: TransformationMatrix {
                sector: Sector::S0,
                entries: u0,
            },
            s1: TransformationMatrix {
                sector: Sector::S1,
                entries: u1,
            },
        }
    }

    /// Projects a 64-dimensional operator onto a sector basis.
    pub fn project(&self, full: &DMatrix<Complex<T>>, sector: Sector) -> TransformationMatrix<T> {
        let basis = match sector {
            Sector::S0 => self.s0_basis.clone(),
            Sector::S1 => self.s1_basis.clone(),
            Sector::S1Sz0 => build_subspace_basis::<T>(Sector::S1Sz0),
        };
        TransformationMatrix {
            sector,
            entries: basis.project_complex(full),
        }
    }

    /// `after · central · before` in both sectors.
    ///
    /// The wrappers must act within single qubits.
    pub fn wrap_with_local_ops(
        &self,
        central: &SectorPropagators<T>,
        before: &PulseSequence<T>,
        after: &PulseSequence<T>,
        mode: CompositionMode,
    ) -> Result<SectorPropagators<T>> {
        for seq in [before, after] {
            if let Some(p) = seq.pulses().find(|p| !p.pair.is_intra_qubit()) {
                return Err(Error::InterQubitWrapper(p.pair.to_string()));
            }
        }
        let b = self.sequence_propagator(before, mode)?;
        let a = self.sequence_propagator(after, mode)?;
        Ok(a.compose(&central.compose(&b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{exchange_op, total_spin_matrices};

    fn pair(s: &str) -> SpinPair {
        s.parse().unwrap()
    }

    fn cnorm(m: &DMatrix<Complex<f64>>) -> f64 {
        m.norm()
    }

    #[test]
    fn zero_angle_is_identity() {
        let u = exchange_propagator::<f64>(pair("a1a3"), 0.0);
        assert!(cnorm(&(u - DMatrix::identity(DIM, DIM))) < 1e-14);
    }

    #[test]
    fn full_turn_is_global_phase() {
        let u = exchange_propagator::<f64>(pair("a3b1"), 2.0 * std::f64::consts::PI);
        let expect = DMatrix::<Complex<f64>>::identity(DIM, DIM) * Complex::new(0.0, -1.0);
        assert!(cnorm(&(u - expect)) < 1e-13);
    }

    #[test]
    fn half_turn_is_phased_swap() {
        let p = pair("a2b2");
        let u = exchange_propagator::<f64>(p, std::f64::consts::PI);
        // SWAP = 2 S·S + 1/2
        let swap = exchange_matrix::<f64>(p) * 2.0 + DMatrix::identity(DIM, DIM) * 0.5;
        let phase = Complex::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        let expect = swap.map(|x| Complex::new(x, 0.0) * phase);
        assert!(cnorm(&(u - expect)) < 1e-13);
    }

    #[test]
    fn wait_of_two_units_is_global_phase() {
        let sim = Simulator::<f64>::new();
        let u = sim
            .step_propagator(
                &PulseStep::Wait(2.0),
                &Configuration::A,
                0.5,
                CompositionMode::Sequential,
            )
            .unwrap();
        let phase = u[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        let expect = DMatrix::<Complex<f64>>::identity(DIM, DIM) * phase;
        assert!(cnorm(&(u - expect)) < 1e-11);
    }

    #[test]
    fn single_pulse_step_matches_direct_exponential() {
        let sim = Simulator::<f64>::new();
        let p = pair("a3b2");
        let step = PulseStep::single(p, 0.37);
        let u = sim
            .step_propagator(&step, &Configuration::A, 0.5, CompositionMode::Simultaneous)
            .unwrap();
        let h = exchange_matrix::<f64>(p)
            + (exchange_matrix::<f64>(pair("a1a2")) + exchange_matrix::<f64>(pair("b1b2"))) * 0.5;
        let expect = expm_symmetric(&h, 2.0 * std::f64::consts::PI * 0.37);
        assert!(cnorm(&(u - expect)) < 1e-12);
    }

    #[test]
    fn unequal_durations_give_two_segments() {
        let step = PulseStep::Pulses(vec![
            Pulse::new(pair("b2b3"), 0.598_f64),
            Pulse::new(pair("a2a3"), 0.377),
        ]);
        let segs = segments(&step, CompositionMode::Simultaneous);
        assert_eq!(segs.len(), 2);
        assert!((segs[0].0 - 0.377).abs() < 1e-15);
        assert_eq!(segs[0].1.len(), 2);
        assert!((segs[1].0 - 0.221).abs() < 1e-12);
        assert_eq!(segs[1].1, vec![(pair("b2b3"), 1.0)]);
        assert_eq!(segments(&step, CompositionMode::Sequential).len(), 2);
        assert!((step.duration(CompositionMode::Simultaneous) - 0.598).abs() < 1e-15);
        assert!((step.duration(CompositionMode::Sequential) - 0.975).abs() < 1e-12);
    }

    #[test]
    fn empty_sequence_is_identity() {
        let sim = Simulator::<f64>::new();
        let seq = PulseSequence::<f64>::new(Configuration::B);
        let u = sim
            .sequence_propagator(&seq, CompositionMode::Sequential)
            .unwrap();
        assert_eq!(u, SectorPropagators::identity());
    }

    #[test]
    fn validation_rejects_illegal_pairs() {
        let mut seq = PulseSequence::<f64>::new(Configuration::A);
        seq.push(PulseStep::single(pair("a1b1"), 0.3));
        assert!(matches!(seq.validate(), Err(Error::IllegalPair { .. })));
        let mut seq = PulseSequence::<f64>::new(Configuration::B);
        seq.push(PulseStep::single(pair("a1a2"), 0.3));
        assert!(seq.validate().is_err());
        let mut toy = PulseSequence::<f64>::new(Configuration::fully_controllable(Layout::B));
        toy.push(PulseStep::single(pair("a1a2"), 0.3));
        assert!(toy.validate().is_ok());
        let mut rep = PulseSequence::<f64>::new(Configuration::A);
        rep.push(PulseStep::Pulses(vec![
            Pulse::new(pair("a1a3"), 0.1),
            Pulse::new(pair("a1a3"), 0.2),
        ]));
        assert!(matches!(rep.validate(), Err(Error::RepeatedPair(_))));
        let mut empty = PulseSequence::<f64>::new(Configuration::A);
        empty.push(PulseStep::Pulses(vec![]));
        assert!(matches!(empty.validate(), Err(Error::EmptyStep(1))));
        let mut neg = PulseSequence::<f64>::new(Configuration::A);
        neg.push(PulseStep::Wait(-0.1));
        assert!(neg.validate().is_err());
    }

    #[test]
    fn sector_path_matches_projection_of_full_propagator() {
        let sim = Simulator::<f64>::new();
        let mut seq = PulseSequence::<f64>::new(Configuration::A);
        seq.push(PulseStep::Wait(0.3))
            .push(PulseStep::single(pair("a3b1"), 0.41))
            .push(PulseStep::Pulses(vec![
                Pulse::new(pair("a1a3"), 0.2),
                Pulse::new(pair("b2b3"), 0.7),
            ]));
        for mode in [CompositionMode::Sequential, CompositionMode::Simultaneous] {
            let full = sim.full_propagator(&seq, mode).unwrap();
            let sectors = sim.sequence_propagator(&seq, mode).unwrap();
            assert!((sim.project(&full, Sector::S0).entries - &sectors.s0.entries).norm() < 1e-12);
            assert!((sim.project(&full, Sector::S1).entries - &sectors.s1.entries).norm() < 1e-12);
            let (s2, sz) = total_spin_matrices::<f64>();
            let (s2, sz) = (s2.map(c), sz.map(c));
            assert!((&full * &s2 - &s2 * &full).norm() < 1e-10);
            assert!((&full * &sz - &sz * &full).norm() < 1e-10);
        }
    }

    #[test]
    fn wrappers_reject_inter_qubit_pairs() {
        let sim = Simulator::<f64>::new();
        let cfg = Configuration::fully_controllable(Layout::B);
        let before = PulseSequence::with_steps(cfg, vec![PulseStep::single(pair("a1b1"), 0.2)]);
        let after = PulseSequence::new(cfg);
        let err = sim
            .wrap_with_local_ops(
                &SectorPropagators::identity(),
                &before,
                &after,
                CompositionMode::Sequential,
            )
            .unwrap_err();
        assert!(matches!(err, Error::InterQubitWrapper(_)));
    }

    #[test]
    fn expm_symmetric_is_unitary_and_matches_spectral_form() {
        let e = exchange_op::<f64>(SpinLabel::A1, SpinLabel::B2).unwrap();
        let h = e.map(|z| z.re);
        let u = expm_symmetric(&h, 1.234);
        let d = u.adjoint() * &u - DMatrix::identity(DIM, DIM);
        assert!(d.norm() < 1e-12);
        let closed = exchange_propagator::<f64>(pair("a1b2"), 1.234);
        assert!((u - closed).norm() < 1e-12);
    }

    #[test]
    fn f32_sequence_propagator_is_unitary() {
        let sim = Simulator::<f32>::new();
        let mut seq = PulseSequence::<f32>::new(Configuration::B);
        seq.push(PulseStep::single(pair("a1b1"), 0.4))
            .push(PulseStep::Wait(0.2));
        let u = sim
            .sequence_propagator(&seq, CompositionMode::Sequential)
            .unwrap();
        assert!(u.s1.unitarity_defect() < 1e-4);
        assert!(u.s0.unitarity_defect() < 1e-4);
    }
}
