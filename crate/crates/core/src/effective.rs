//! Hubbard-to-Heisenberg effective couplings, an exact-diagonalization
//! Hubbard oracle, and gate-time estimates.
//!
//! Orbital `k_q` of qubit `q` carries the spin labelled `q k` in the
//! effective model, so the same [`SpinLabel`]/[`SpinPair`] keys are used for
//! microscopic parameters and effective couplings.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dynamics::{CompositionMode, Layout, PulseSequence};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::spin::{exchange_matrix, Qubit, SpinLabel, SpinPair, N_SPINS};

/// Planck constant in µeV·ns.
pub const PLANCK_UEV_NS: f64 = 4.135667;

/// Microscopic parameters of the two-qubit Hubbard model. Missing entries are zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HubbardParameters<T: Real> {
    pub eps: BTreeMap<SpinLabel, T>,
    pub t: BTreeMap<SpinPair, T>,
    pub u_site: BTreeMap<SpinLabel, T>,
    pub u_pair: BTreeMap<SpinPair, T>,
    pub je: BTreeMap<SpinPair, T>,
    pub jp: BTreeMap<SpinPair, T>,
    pub jt: BTreeMap<SpinPair, T>,
}

fn pair(i: SpinLabel, j: SpinLabel) -> SpinPair {
    SpinPair::of(i, j)
}

fn intra_pairs(q: Qubit) -> [SpinPair; 3] {
    let l = |k| SpinLabel::new(q, k).expect("index in 1..=3");
    [pair(l(1), l(3)), pair(l(2), l(3)), pair(l(1), l(2))]
}

fn inter_exchange_pairs(layout: Layout) -> Vec<SpinPair> {
    use SpinLabel as S;
    match layout {
        Layout::A => vec![pair(S::A3, S::B1), pair(S::A3, S::B2)],
        Layout::B => vec![pair(S::A1, S::B1), pair(S::A2, S::B2)],
    }
}

fn inter_coulomb_pairs(layout: Layout) -> Vec<SpinPair> {
    use SpinLabel as S;
    match layout {
        Layout::A => inter_exchange_pairs(layout),
        Layout::B => vec![
            pair(S::A1, S::B1),
            pair(S::A1, S::B2),
            pair(S::A2, S::B1),
            pair(S::A2, S::B2),
        ],
    }
}

impl<T: Real> HubbardParameters<T> {
    fn get_site(map: &BTreeMap<SpinLabel, T>, k: SpinLabel) -> T {
        map.get(&k).copied().unwrap_or_else(T::zero)
    }

    fn get_pair(map: &BTreeMap<SpinPair, T>, p: SpinPair) -> T {
        map.get(&p).copied().unwrap_or_else(T::zero)
    }

    /// Checks positivity of `U_site`, finiteness, and that every pair key
    /// exists in `layout`.
    pub fn validate(&self, layout: Layout) -> Result<()> {
        for k in SpinLabel::ALL {
            let u = Self::get_site(&self.u_site, k);
            if !(to_f64(u) > 0.0) {
                return Err(Error::NonPositiveOnSite(k.to_string()));
            }
        }
        let finite = |name: String, v: T| {
            if to_f64(v).is_finite() {
                Ok(())
            } else {
                Err(Error::NonFinite(name))
            }
        };
        for (k, v) in self.eps.iter().chain(&self.u_site) {
            finite(k.to_string(), *v)?;
        }
        let intra: Vec<SpinPair> = intra_pairs(Qubit::A)
            .into_iter()
            .chain(intra_pairs(Qubit::B))
            .collect();
        let hopping: Vec<SpinPair> = intra
            .iter()
            .copied()
            .filter(|p| p.second().index() == 3)
            .chain(inter_exchange_pairs(layout))
            .collect();
        let exchange: Vec<SpinPair> = intra
            .iter()
            .copied()
            .chain(inter_exchange_pairs(layout))
            .collect();
        let coulomb: Vec<SpinPair> = intra
            .iter()
            .copied()
            .chain(inter_coulomb_pairs(layout))
            .collect();
        let checks: [(&str, &BTreeMap<SpinPair, T>, &Vec<SpinPair>); 5] = [
            ("t", &self.t, &hopping),
            ("u_pair", &self.u_pair, &coulomb),
            ("je", &self.je, &exchange),
            ("jp", &self.jp, &exchange),
            ("jt", &self.jt, &exchange),
        ];
        for (name, map, allowed) in checks {
            for (p, v) in map {
                finite(format!("{name}[{p}]"), *v)?;
                if !allowed.contains(p) && to_f64(*v) != 0.0 {
                    return Err(Error::Parse(format!(
                        "{name}[{p}] is not a parameter of configuration {layout}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest magnitude among the off-diagonal (non-Coulomb) parameters.
    pub fn max_off_diagonal(&self) -> T {
        [&self.t, &self.je, &self.jp, &self.jt]
            .iter()
            .flat_map(|m| m.values())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Classical energy of an occupation pattern (`occ` in canonical spin order).
    pub fn occupation_energy(&self, layout: Layout, occ: [u8; N_SPINS]) -> T {
        let mut e = T::zero();
        for (k, &n) in SpinLabel::ALL.iter().zip(&occ) {
            e += Self::get_site(&self.eps, *k) * lit(n as f64);
            if n == 2 {
                e += Self::get_site(&self.u_site, *k);
            }
        }
        let pairs = intra_pairs(Qubit::A)
            .into_iter()
            .chain(intra_pairs(Qubit::B))
            .chain(inter_coulomb_pairs(layout));
        for p in pairs {
            let n = occ[p.first().position()] * occ[p.second().position()];
            e += Self::get_pair(&self.u_pair, p) * lit(n as f64);
        }
        e
    }

    /// Copy with every tunneling amplitude (`t` and `J_t`) multiplied by `factor`.
    pub fn with_hopping_scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.t.values_mut().for_each(|v| *v *= factor);
        out.jt.values_mut().for_each(|v| *v *= factor);
        out
    }
}

/// Named excitation energies. Keys: `dE1a..dE4a`, `dE1b..dE4b`, and for
/// configuration A also `dE5`, `dE6`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnergyDifferences<T: Real>(pub BTreeMap<String, T>);

impl<T: Real> EnergyDifferences<T> {
    pub fn get(&self, name: &str) -> T {
        self.0[name]
    }

    pub fn min(&self) -> T {
        self.0
            .values()
            .fold(T::max_value().unwrap_or_else(T::one), |m, v| m.min(*v))
    }
}

fn qubit_occupation(q: Qubit, local: [u8; 3]) -> [u8; N_SPINS] {
    let mut occ = [1; N_SPINS];
    let off = if q == Qubit::A { 0 } else { 3 };
    occ[off..off + 3].copy_from_slice(&local);
    occ
}

/// Energies of the virtual configurations relative to the singly occupied ground configuration.
pub fn energy_differences<T: Real>(
    params: &HubbardParameters<T>,
    layout: Layout,
) -> Result<EnergyDifferences<T>> {
    params.validate(layout)?;
    let e0 = params.occupation_energy(layout, [1; N_SPINS]);
    let mut out = BTreeMap::new();
    let virtuals: [(&str, [u8; 3]); 4] = [
        ("1", [0, 1, 2]),
        ("2", [1, 0, 2]),
        ("3", [2, 0, 1]),
        ("4", [0, 2, 1]),
    ];
    for q in [Qubit::A, Qubit::B] {
        for (n, local) in virtuals {
            let e = params.occupation_energy(layout, qubit_occupation(q, local));
            out.insert(format!("dE{n}{}", q.letter()), e - e0);
        }
    }
    if layout == Layout::A {
        out.insert(
            "dE5".into(),
            params.occupation_energy(layout, [1, 1, 2, 0, 1, 1]) - e0,
        );
        out.insert(
            "dE6".into(),
            params.occupation_energy(layout, [1, 1, 2, 1, 0, 1]) - e0,
        );
    }
    for (name, v) in &out {
        let x = to_f64(*v);
        if !(x > 0.0) {
            return Err(Error::NonPositiveGap {
                name: name.clone(),
                value: x,
            });
        }
    }
    Ok(EnergyDifferences(out))
}

/// Heisenberg couplings of the effective spin model (energy units of the input).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCouplings<T: Real> {
    pub configuration: Layout,
    pub j: BTreeMap<SpinPair, T>,
}

impl<T: Real> EffectiveCouplings<T> {
    pub fn get(&self, p: SpinPair) -> T {
        self.j.get(&p).copied().unwrap_or_else(T::zero)
    }

    /// `Σ J_ij S_i·S_j` on the 64-dimensional spin space.
    pub fn hamiltonian(&self) -> DMatrix<T> {
        let mut h = DMatrix::zeros(64, 64);
        for (p, j) in &self.j {
            h += exchange_matrix::<T>(*p) * *j;
        }
        h
    }

    /// Sorted eigenvalues of [`Self::hamiltonian`].
    pub fn spectrum(&self) -> Vec<T> {
        sorted_eigenvalues(self.hamiltonian())
    }
}

fn second_order<T: Real>(t: T, jt: T, je: T, de: T) -> T {
    let a = t - jt;
    lit::<T>(4.0) * a * a / de - lit::<T>(2.0) * je
}

pub fn effective_couplings<T: Real>(
    params: &HubbardParameters<T>,
    layout: Layout,
) -> Result<EffectiveCouplings<T>> {
    let de = energy_differences(params, layout)?;
    let g = HubbardParameters::<T>::get_pair;
    let mut j = BTreeMap::new();
    for q in [Qubit::A, Qubit::B] {
        let [p13, p23, p12] = intra_pairs(q);
        let l = q.letter();
        j.insert(
            p13,
            second_order(
                g(&params.t, p13),
                g(&params.jt, p13),
                g(&params.je, p13),
                de.get(&format!("dE1{l}")),
            ),
        );
        j.insert(
            p23,
            second_order(
                g(&params.t, p23),
                g(&params.jt, p23),
                g(&params.je, p23),
                de.get(&format!("dE2{l}")),
            ),
        );
        let jt12 = g(&params.jt, p12);
        let inv = T::one() / de.get(&format!("dE3{l}")) + T::one() / de.get(&format!("dE4{l}"));
        j.insert(
            p12,
            inv * lit::<T>(4.0) * jt12 * jt12 - lit::<T>(2.0) * g(&params.je, p12),
        );
    }
    use SpinLabel as S;
    match layout {
        Layout::A => {
            for (p, name) in [(pair(S::A3, S::B1), "dE5"), (pair(S::A3, S::B2), "dE6")] {
                j.insert(
                    p,
                    second_order(
                        g(&params.t, p),
                        g(&params.jt, p),
                        g(&params.je, p),
                        de.get(name),
                    ),
                );
            }
        }
        Layout::B => {
            for p in [pair(S::A1, S::B1), pair(S::A2, S::B2)] {
                j.insert(p, -lit::<T>(2.0) * g(&params.je, p));
            }
            j.insert(pair(S::A1, S::B2), T::zero());
            j.insert(pair(S::A2, S::B1), T::zero());
        }
    }
    Ok(EffectiveCouplings {
        configuration: layout,
        j,
    })
}

fn sorted_eigenvalues<T: Real>(h: DMatrix<T>) -> Vec<T> {
    let mut ev: Vec<T> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    ev
}

// ---- exact diagonalization -------------------------------------------------

const N_MODES: usize = 2 * N_SPINS;
const N_ELECTRONS: u32 = N_SPINS as u32;

/// Spin-orbital index: orbital-major, spin up (0) before down (1).
fn mode(k: SpinLabel, spin: usize) -> usize {
    2 * k.position() + spin
}

#[derive(Clone, Copy)]
enum Op {
    Create(usize),
    Annihilate(usize),
}

/// Applies a product of ladder operators (rightmost first) to a Fock state.
fn apply(ops: &[Op], mut state: u32) -> Option<(u32, f64)> {
    let mut sign = 1.0;
    for op in ops.iter().rev() {
        let (m, create) = match *op {
            Op::Create(m) => (m, true),
            Op::Annihilate(m) => (m, false),
        };
        let occupied = state >> m & 1 == 1;
        if occupied == create {
            return None;
        }
        if (state & ((1 << m) - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        state ^= 1 << m;
    }
    Some((state, sign))
}

fn adjoint(ops: &[Op]) -> Vec<Op> {
    ops.iter()
        .rev()
        .map(|op| match *op {
            Op::Create(m) => Op::Annihilate(m),
            Op::Annihilate(m) => Op::Create(m),
        })
        .collect()
}

/// Off-diagonal terms `coef · ops (+ h.c.)` of the second-quantized Hamiltonian.
fn hopping_terms<T: Real>(params: &HubbardParameters<T>) -> Vec<(f64, Vec<Op>)> {
    use Op::{Annihilate as A, Create as C};
    let mut terms = Vec::new();
    let mut with_hc = |coef: f64, ops: Vec<Op>| {
        if coef != 0.0 {
            let hc = adjoint(&ops);
            terms.push((coef, ops));
            terms.push((coef, hc));
        }
    };
    for (p, t) in &params.t {
        let (i, j) = (p.first(), p.second());
        for s in 0..2 {
            with_hc(to_f64(*t), vec![C(mode(i, s)), A(mode(j, s))]);
        }
    }
    let mut jpairs: Vec<SpinPair> = params
        .je
        .keys()
        .chain(params.jp.keys())
        .chain(params.jt.keys())
        .copied()
        .collect();
    jpairs.sort();
    jpairs.dedup();
    for p in jpairs {
        let (i, j) = (p.first(), p.second());
        let g = |m: &BTreeMap<SpinPair, T>| to_f64(m.get(&p).copied().unwrap_or_else(T::zero));
        let (je, jp, jt) = (g(&params.je), g(&params.jp), g(&params.jt));
        with_hc(
            -je,
            vec![C(mode(i, 1)), C(mode(j, 0)), A(mode(j, 1)), A(mode(i, 0))],
        );
        with_hc(
            -jp,
            vec![C(mode(j, 0)), C(mode(j, 1)), A(mode(i, 0)), A(mode(i, 1))],
        );
        for k in [i, j] {
            for s in 0..2 {
                let sb = 1 - s;
                with_hc(
                    -jt,
                    vec![C(mode(k, s)), A(mode(k, s)), C(mode(i, sb)), A(mode(j, sb))],
                );
            }
        }
    }
    terms
}

fn diagonal_energy<T: Real>(params: &HubbardParameters<T>, layout: Layout, state: u32) -> f64 {
    let n = |k: SpinLabel, s: usize| f64::from(state >> mode(k, s) & 1);
    let mut occ = [0u8; N_SPINS];
    for k in SpinLabel::ALL {
        occ[k.position()] = (n(k, 0) + n(k, 1)) as u8;
    }
    let mut e = to_f64(params.occupation_energy(layout, occ));
    for (p, je) in &params.je {
        let (i, j) = (p.first(), p.second());
        e -= to_f64(*je) * (n(i, 0) * n(j, 0) + n(i, 1) * n(j, 1));
    }
    e
}

/// Sorted spectra of the six-electron Hubbard Hamiltonian, one entry per
/// number of spin-up electrons (`0..=6`, i.e. `S_z = n_up - 3`).
pub fn hubbard_sz_blocks<T: Real>(
    params: &HubbardParameters<T>,
    layout: Layout,
) -> Result<Vec<Vec<f64>>> {
    params.validate(layout)?;
    let terms = hopping_terms(params);
    let up_mask: u32 = (0..N_SPINS).map(|k| 1u32 << (2 * k)).sum();
    let mut blocks = Vec::with_capacity(N_SPINS + 1);
    for n_up in 0..=N_ELECTRONS {
        let states: Vec<u32> = (0u32..1 << N_MODES)
            .filter(|s| s.count_ones() == N_ELECTRONS && (s & up_mask).count_ones() == n_up)
            .collect();
        let index: HashMap<u32, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let d = states.len();
        let mut h = DMatrix::<f64>::zeros(d, d);
        for (col, &s) in states.iter().enumerate() {
            h[(col, col)] += diagonal_energy(params, layout, s);
            for (coef, ops) in &terms {
                if let Some((s2, sign)) = apply(ops, s) {
                    let row = *index.get(&s2).ok_or_else(|| {
                        Error::Parse("Hamiltonian term leaves the fixed-Sz sector".into())
                    })?;
                    h[(row, col)] += coef * sign;
                }
            }
        }
        let asym = (&h - h.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::NonHermitian(asym));
        }
        blocks.push(sorted_eigenvalues(h));
    }
    Ok(blocks)
}

/// Lowest `n_levels` eigenvalues of the six-electron Hubbard Hamiltonian
/// (12 spin-orbitals, 924 states).
pub fn hubbard_oracle_spectrum<T: Real>(
    params: &HubbardParameters<T>,
    layout: Layout,
    n_levels: usize,
) -> Result<Vec<f64>> {
    if n_levels < 2 {
        return Err(Error::Parse("n_levels must be at least 2".into()));
    }
    let mut levels: Vec<f64> = hubbard_sz_blocks(params, layout)?
        .into_iter()
        .flatten()
        .collect();
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    levels.truncate(n_levels);
    Ok(levels)
}

/// Oracle vs effective-model spectra, both shifted so the ground level is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub oracle: Vec<f64>,
    pub effective: Vec<f64>,
    pub max_abs_error: f64,
    /// `max_abs_error` divided by the full bandwidth of the effective spectrum.
    pub relative_error: f64,
}

pub fn compare_with_oracle<T: Real>(
    params: &HubbardParameters<T>,
    layout: Layout,
    n_levels: usize,
) -> Result<OracleComparison> {
    let oracle = hubbard_oracle_spectrum(params, layout, n_levels)?;
    let eff: Vec<f64> = effective_couplings(params, layout)?
        .spectrum()
        .into_iter()
        .map(to_f64)
        .collect();
    let bandwidth = eff[eff.len() - 1] - eff[0];
    let align = |v: &[f64]| v.iter().map(|x| x - v[0]).collect::<Vec<_>>();
    let oracle = align(&oracle);
    let effective = align(&eff[..n_levels.min(eff.len())]);
    let max_abs_error = oracle
        .iter()
        .zip(&effective)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(OracleComparison {
        oracle,
        effective,
        max_abs_error,
        relative_error: max_abs_error / bandwidth,
    })
}

// ---- gate time ---------------------------------------------------------------

/// Device figures in µeV. Geometry values are carried but not used.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviceParameters {
    pub tr: f64,
    pub de_st: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, f64>,
}

impl DeviceParameters {
    pub fn new(tr: f64, de_st: f64) -> Self {
        DeviceParameters {
            tr,
            de_st,
            metadata: BTreeMap::new(),
        }
    }

    /// `Jmax = TR² / ΔE_ST` in µeV.
    pub fn jmax(&self) -> Result<f64> {
        if !(self.tr > 0.0) {
            return Err(Error::NonPositive("tunneling rate"));
        }
        if !(self.de_st > 0.0) {
            return Err(Error::NonPositive("singlet-triplet splitting"));
        }
        Ok(self.tr * self.tr / self.de_st)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateTimeEstimate {
    pub jmax_uev: f64,
    /// Duration in units of `h/Jmax`.
    pub dimensionless_time: f64,
    pub time_ns: f64,
}

/// `T = T̃ · h / Jmax`.
pub fn gate_time_ns(dimensionless_time: f64, jmax_uev: f64) -> Result<f64> {
    if !(jmax_uev > 0.0) {
        return Err(Error::NonPositive("Jmax"));
    }
    Ok(dimensionless_time * PLANCK_UEV_NS / jmax_uev)
}

/// The `Jmax` (µeV) at which a sequence of length `T̃` takes `target_ns`.
pub fn jmax_for_time(dimensionless_time: f64, target_ns: f64) -> Result<f64> {
    if !(target_ns > 0.0) {
        return Err(Error::NonPositive("target time"));
    }
    Ok(dimensionless_time * PLANCK_UEV_NS / target_ns)
}

pub fn estimate_gate_time<T: Real>(
    dev: &DeviceParameters,
    seq: &PulseSequence<T>,
    mode: CompositionMode,
) -> Result<GateTimeEstimate> {
    let jmax = dev.jmax()?;
    let t = to_f64(seq.total_duration(mode));
    Ok(GateTimeEstimate {
        jmax_uev: jmax,
        dimensionless_time: t,
        time_ns: gate_time_ns(t, jmax)?,
    })
}
