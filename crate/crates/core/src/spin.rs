//! Spin-1/2 operators and encoded bases on the six-spin Hilbert space.
//!
//! The tensor order is `a1 ⊗ a2 ⊗ a3 ⊗ b1 ⊗ b2 ⊗ b3` and each factor lists
//! `↑` before `↓`. Basis index `n` therefore has bit `5 - p` set when the spin
//! at position `p` points down; `a1` is the most significant bit.
//!
//! Spin operators are dimensionless (ħ = 1). Exchange operators and the
//! encoded bases are real in this basis, so they are returned as real
//! matrices; the general spin operators (`S_y` is imaginary) are complex.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Dimension of the six-spin Hilbert space.
pub const DIM: usize = 64;
/// Number of spins.
pub const N_SPINS: usize = 6;
/// Number of unordered spin pairs.
pub const N_PAIRS: usize = 15;

/// Dense complex operator on the 64-dimensional space.
pub type Operator<T> = DMatrix<Complex<T>>;
/// Complex amplitudes over the 64 σz basis states.
pub type StateVector<T> = DVector<Complex<T>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    A,
    B,
}

impl Qubit {
    pub fn letter(self) -> char {
        match self {
            Qubit::A => 'a',
            Qubit::B => 'b',
        }
    }
}

/// One of the six spins; `index` is 1, 2 or 3 within its qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinLabel {
    qubit: Qubit,
    index: u8,
}

impl SpinLabel {
    pub const A1: SpinLabel = SpinLabel {
        qubit: Qubit::A,
        index: 1,
    };
    pub const A2: SpinLabel = SpinLabel {
        qubit: Qubit::A,
        index: 2,
    };
    pub const A3: SpinLabel = SpinLabel {
        qubit: Qubit::A,
        index: 3,
    };
    pub const B1: SpinLabel = SpinLabel {
        qubit: Qubit::B,
        index: 1,
    };
    pub const B2: SpinLabel = SpinLabel {
        qubit: Qubit::B,
        index: 2,
    };
    pub const B3: SpinLabel = SpinLabel {
        qubit: Qubit::B,
        index: 3,
    };

    /// All labels in canonical (tensor-factor) order.
    pub const ALL: [SpinLabel; N_SPINS] =
        [Self::A1, Self::A2, Self::A3, Self::B1, Self::B2, Self::B3];

    pub fn new(qubit: Qubit, index: u8) -> Result<Self> {
        if (1..=3).contains(&index) {
            Ok(SpinLabel { qubit, index })
        } else {
            Err(Error::Parse(format!("spin index {index} not in 1..=3")))
        }
    }

    pub fn qubit(self) -> Qubit {
        self.qubit
    }

    pub fn index(self) -> u8 {
        self.index
    }

    /// Tensor-factor position, 0 for `a1` through 5 for `b3`.
    pub fn position(self) -> usize {
        let base = match self.qubit {
            Qubit::A => 0,
            Qubit::B => 3,
        };
        base + self.index as usize - 1
    }

    pub fn from_position(position: usize) -> Self {
        Self::ALL[position]
    }

    /// Bit mask of this spin inside a basis index.
    #[inline]
    pub(crate) fn mask(self) -> usize {
        1 << (N_SPINS - 1 - self.position())
    }
}

impl fmt::Display for SpinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.qubit.letter(), self.index)
    }
}

impl FromStr for SpinLabel {
    type Err = Error;

    /// Accepts both `a1` and `1a`.
    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.trim().as_bytes();
        if bytes.len() != 2 {
            return Err(Error::Parse(format!("bad spin label {s:?}")));
        }
        let (letter, digit) = if bytes[0].is_ascii_digit() {
            (bytes[1], bytes[0])
        } else {
            (bytes[0], bytes[1])
        };
        let qubit = match letter.to_ascii_lowercase() {
            b'a' => Qubit::A,
            b'b' => Qubit::B,
            _ => return Err(Error::Parse(format!("bad spin label {s:?}"))),
        };
        if !digit.is_ascii_digit() {
            return Err(Error::Parse(format!("bad spin label {s:?}")));
        }
        SpinLabel::new(qubit, digit - b'0')
            .map_err(|_| Error::Parse(format!("bad spin label {s:?}")))
    }
}

impl Serialize for SpinLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Unordered pair of distinct spins, stored with the lower position first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinPair(SpinLabel, SpinLabel);

impl SpinPair {
    pub fn new(i: SpinLabel, j: SpinLabel) -> Result<Self> {
        if i == j {
            return Err(Error::SameSpin(i.to_string()));
        }
        Ok(if i.position() < j.position() {
            SpinPair(i, j)
        } else {
            SpinPair(j, i)
        })
    }

    /// Infallible constructor for distinct constants.
    pub const fn of(i: SpinLabel, j: SpinLabel) -> Self {
        SpinPair(i, j)
    }

    pub fn first(self) -> SpinLabel {
        self.0
    }

    pub fn second(self) -> SpinLabel {
        self.1
    }

    pub fn is_intra_qubit(self) -> bool {
        self.0.qubit == self.1.qubit
    }

    /// Dense index in `0..15`, lexicographic in positions.
    pub fn index(self) -> usize {
        let (p, q) = (self.0.position(), self.1.position());
        // rows of the strict upper triangle: 5, 4, 3, 2, 1 entries
        p * (2 * N_SPINS - p - 1) / 2 + (q - p - 1)
    }

    pub fn all() -> impl Iterator<Item = SpinPair> {
        (0..N_SPINS).flat_map(|p| {
            (p + 1..N_SPINS)
                .map(move |q| SpinPair(SpinLabel::from_position(p), SpinLabel::from_position(q)))
        })
    }
}

impl fmt::Display for SpinPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0, self.1)
    }
}

impl FromStr for SpinPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != 4 || !s.is_ascii() {
            return Err(Error::Parse(format!("bad spin pair {s:?}")));
        }
        let i: SpinLabel = s[..2].parse()?;
        let j: SpinLabel = s[2..].parse()?;
        SpinPair::new(i, j)
    }
}

impl Serialize for SpinPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinPair {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// `S_axis` on one tensor factor, identity elsewhere.
pub fn pauli_spin_op<T: Real>(label: SpinLabel, axis: Axis) -> Operator<T> {
    let half = lit::<T>(0.5);
    let zero = T::zero();
    let mask = label.mask();
    let mut op = Operator::<T>::zeros(DIM, DIM);
    for n in 0..DIM {
        let down = n & mask != 0;
        match axis {
            Axis::Z => {
                op[(n, n)] = Complex::new(if down { -half } else { half }, zero);
            }
            Axis::X => {
                op[(n ^ mask, n)] = Complex::new(half, zero);
            }
            Axis::Y => {
                // S_y|↑> = (i/2)|↓>, S_y|↓> = -(i/2)|↑>
                op[(n ^ mask, n)] = Complex::new(zero, if down { -half } else { half });
            }
        }
    }
    op
}

/// Real matrix of `S_i · S_j = P_ij / 2 - 1/4`, with `P_ij` the swap of the two spins.
pub fn exchange_matrix<T: Real>(pair: SpinPair) -> DMatrix<T> {
    let (mi, mj) = (pair.0.mask(), pair.1.mask());
    let half = lit::<T>(0.5);
    let quarter = lit::<T>(0.25);
    let mut m = DMatrix::<T>::zeros(DIM, DIM);
    for n in 0..DIM {
        let bi = n & mi != 0;
        let bj = n & mj != 0;
        let swapped = if bi == bj { n } else { n ^ mi ^ mj };
        m[(swapped, n)] += half;
        m[(n, n)] -= quarter;
    }
    m
}

/// `S_i · S_j` as a complex operator.
pub fn exchange_op<T: Real>(i: SpinLabel, j: SpinLabel) -> Result<Operator<T>> {
    let pair = SpinPair::new(i, j)?;
    Ok(exchange_matrix::<T>(pair).map(|x| Complex::new(x, T::zero())))
}

/// Real `(S_tot², S_tot,z)`.
pub fn total_spin_matrices<T: Real>() -> (DMatrix<T>, DMatrix<T>) {
    // S² = Σ_i S_i² + 2 Σ_{i<j} S_i·S_j, with S_i² = 3/4
    let mut s2 = DMatrix::<T>::identity(DIM, DIM) * lit::<T>(0.75 * N_SPINS as f64);
    for pair in SpinPair::all() {
        s2 += exchange_matrix::<T>(pair) * lit::<T>(2.0);
    }
    let sz = DMatrix::<T>::from_fn(DIM, DIM, |r, c| {
        if r != c {
            return T::zero();
        }
        let downs = r.count_ones() as f64;
        lit::<T>(0.5 * (N_SPINS as f64 - downs) - 0.5 * downs)
    });
    (s2, sz)
}

/// `(S_tot², S_tot,z)` for all six spins.
pub fn total_spin_ops<T: Real>() -> (Operator<T>, Operator<T>) {
    let (s2, sz) = total_spin_matrices::<T>();
    let cplx = |x: T| Complex::new(x, T::zero());
    (s2.map(cplx), sz.map(cplx))
}

fn two_spin<T: Real>(up_down: f64, down_up: f64, up_up: f64, down_down: f64) -> DVector<T> {
    // order |↑↑>, |↑↓>, |↓↑>, |↓↓>
    DVector::from_vec(vec![lit(up_up), lit(up_down), lit(down_up), lit(down_down)])
}

fn one_spin<T: Real>(up: bool) -> DVector<T> {
    if up {
        DVector::from_vec(vec![T::one(), T::zero()])
    } else {
        DVector::from_vec(vec![T::zero(), T::one()])
    }
}

/// The three-spin states |1⟩ … |8⟩ of one qubit (8-dimensional, spin 1 most significant).
///
/// The same basis is used for both qubits; combine two of them with
/// [`product_state`].
pub fn single_qubit_states<T: Real>() -> [DVector<T>; 8] {
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = two_spin::<T>(r2, -r2, 0.0, 0.0);
    let t0 = two_spin::<T>(r2, r2, 0.0, 0.0);
    let t_plus = two_spin::<T>(0.0, 0.0, 1.0, 0.0);
    let t_minus = two_spin::<T>(0.0, 0.0, 0.0, 1.0);
    let up = one_spin::<T>(true);
    let down = one_spin::<T>(false);
    let k = |a: &DVector<T>, b: &DVector<T>| a.kronecker(b);
    let s3 = lit::<T>(1.0 / 3f64.sqrt());
    let sq2 = lit::<T>(2f64.sqrt());
    [
        k(&singlet, &up),
        k(&singlet, &down),
        (k(&t_plus, &down) * sq2 - k(&t0, &up)) * s3,
        (k(&t0, &down) - k(&t_minus, &up) * sq2) * s3,
        k(&t_plus, &up),
        (k(&t_plus, &down) + k(&t0, &up) * sq2) * s3,
        (k(&t0, &down) * sq2 + k(&t_minus, &up)) * s3,
        k(&t_minus, &down),
    ]
}

/// `|i⟩_a |j⟩_b` for 1-based single-qubit labels.
pub fn product_state<T: Real>(states: &[DVector<T>; 8], i: usize, j: usize) -> DVector<T> {
    states[i - 1].kronecker(&states[j - 1])
}

/// Total-spin sector of the two-qubit system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    /// S = 0, Sz = 0; five states.
    S0,
    /// S = 1, Sz = -1; nine states, the first four are |00⟩, |01⟩, |10⟩, |11⟩.
    S1,
    /// S = 1, Sz = 0; the S1 basis raised by S_tot,+.
    S1Sz0,
}

impl Sector {
    pub fn dim(self) -> usize {
        match self {
            Sector::S0 => 5,
            Sector::S1 | Sector::S1Sz0 => 9,
        }
    }

    /// `(S, Sz)`.
    pub fn quantum_numbers(self) -> (f64, f64) {
        match self {
            Sector::S0 => (0.0, 0.0),
            Sector::S1 => (1.0, -1.0),
            Sector::S1Sz0 => (1.0, 0.0),
        }
    }
}

/// Orthonormal basis of a sector, one column per basis vector.
#[derive(Clone, Debug)]
pub struct SubspaceBasis<T: Real> {
    sector: Sector,
    vectors: DMatrix<T>,
}

impl<T: Real> SubspaceBasis<T> {
    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// 64 × dim matrix whose columns are the basis vectors.
    pub fn vectors(&self) -> &DMatrix<T> {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> DVector<T> {
        self.vectors.column(k).into_owned()
    }

    pub fn state(&self, k: usize) -> StateVector<T> {
        self.vector(k).map(|x| Complex::new(x, T::zero()))
    }

    /// `Bᵀ M B` for a real operator `M`.
    pub fn project(&self, m: &DMatrix<T>) -> DMatrix<T> {
        self.vectors.transpose() * m * &self.vectors
    }

    /// `B† M B` for a complex operator.
    pub fn project_complex(&self, m: &Operator<T>) -> DMatrix<Complex<T>> {
        let b = self.vectors.map(|x| Complex::new(x, T::zero()));
        b.adjoint() * m * b
    }
}

/// Basis of the requested sector with the coefficients of the encoded-state tables.
pub fn build_subspace_basis<T: Real>(sector: Sector) -> SubspaceBasis<T> {
    let q = single_qubit_states::<T>();
    let p = |i, j| product_state(&q, i, j);
    let cols: Vec<DVector<T>> = match sector {
        Sector::S1 => {
            let r3h = lit::<T>(3f64.sqrt() / 2.0);
            let half = lit::<T>(0.5);
            let c9 = lit::<T>(0.5 * (6.0f64 / 5.0).sqrt());
            let c77 = lit::<T>((2.0f64 / 5.0).sqrt());
            vec![
                p(2, 2),
                p(2, 4),
                p(4, 2),
                p(4, 4),
                p(1, 8) * r3h - p(2, 7) * half,
                p(3, 8) * r3h - p(4, 7) * half,
                p(7, 2) * half - p(8, 1) * r3h,
                p(7, 4) * half - p(8, 3) * r3h,
                (p(6, 8) + p(8, 6)) * c9 - p(7, 7) * c77,
            ]
        }
        Sector::S0 => {
            let r2 = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
            let half = lit::<T>(0.5);
            vec![
                (p(1, 2) - p(2, 1)) * r2,
                (p(1, 4) - p(2, 3)) * r2,
                (p(3, 2) - p(4, 1)) * r2,
                (p(3, 4) - p(4, 3)) * r2,
                (p(5, 8) - p(8, 5) + p(7, 6) - p(6, 7)) * half,
            ]
        }
        Sector::S1Sz0 => {
            let lower = build_subspace_basis::<T>(Sector::S1);
            let raise = total_raising_matrix::<T>();
            // S+|1,-1> = sqrt(2)|1,0>
            let inv = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
            (0..9).map(|k| &raise * lower.vector(k) * inv).collect()
        }
    };
    SubspaceBasis {
        sector,
        vectors: DMatrix::from_columns(&cols),
    }
}

/// Real matrix of `S_tot,+ = Σ_i S_i,+`.
pub fn total_raising_matrix<T: Real>() -> DMatrix<T> {
    let mut m = DMatrix::<T>::zeros(DIM, DIM);
    for label in SpinLabel::ALL {
        let mask = label.mask();
        for n in 0..DIM {
            if n & mask != 0 {
                m[(n ^ mask, n)] += T::one();
            }
        }
    }
    m
}
