//! CNOT objectives, encoded-block extraction, leakage, local invariants and
//! heatmap export.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Complex, ComplexField, DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use crate::dynamics::{SectorPropagators, TransformationMatrix};
use crate::error::{Error, Result};
use crate::scalar::{c, lit, to_f64, Real};

/// Number of encoded states at the top of each sector basis.
pub const ENCODED_DIM: usize = 4;

/// The 4×4 CNOT in the encoded order `|00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CnotTarget;

impl CnotTarget {
    pub fn matrix<T: Real>(&self) -> Matrix4<Complex<T>> {
        let (o, z) = (c(T::one()), c(T::zero()));
        Matrix4::new(o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z)
    }

    /// Largest entrywise distance between `block` and `e^{iφ}·CNOT`, with
    /// `φ` the phase that best aligns them. Returns `(distance, φ)`.
    pub fn deviation<T: Real>(&self, block: &Matrix4<Complex<T>>) -> (T, T) {
        let overlap = encoded_sum(|i, j| block[(i, j)]);
        let phase = overlap.argument();
        let unphase = Complex::new(phase.cos(), -phase.sin());
        let target = self.matrix::<T>();
        let dev = (block * unphase - target)
            .iter()
            .fold(T::zero(), |m, z| m.max(z.modulus()));
        (dev, phase)
    }
}

/// `U11 + U22 + U34 + U43` of a matrix whose first four basis vectors are encoded.
fn encoded_sum<T: Real>(u: impl Fn(usize, usize) -> Complex<T>) -> Complex<T> {
    u(0, 0) + u(1, 1) + u(2, 3) + u(3, 2)
}

fn check_dim<T: Real>(u: &DMatrix<Complex<T>>, expected: usize) -> Result<()> {
    if u.nrows() != expected || u.ncols() != expected {
        return Err(Error::Dimension {
            expected,
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    Ok(())
}

fn sqrt_clamped<T: Real>(x: T) -> T {
    x.max(T::zero()).sqrt()
}

/// Single-sector objective on the 9×9 S=1 block.
pub fn objective_f9<T: Real>(u9: &DMatrix<Complex<T>>) -> Result<T> {
    check_dim(u9, 9)?;
    let s = encoded_sum(|i, j| u9[(i, j)]).modulus();
    Ok(sqrt_clamped(T::one() - s / lit(4.0)))
}

/// Joint objective over the 5×5 S=0 and 9×9 S=1 blocks.
pub fn objective_f_joint<T: Real>(u5: &DMatrix<Complex<T>>, u9: &DMatrix<Complex<T>>) -> Result<T> {
    check_dim(u5, 5)?;
    check_dim(u9, 9)?;
    let s5 = encoded_sum(|i, j| u5[(i, j)]).modulus();
    let s9 = encoded_sum(|i, j| u9[(i, j)]).modulus();
    Ok(sqrt_clamped(lit::<T>(2.0) - s5 / lit(4.0) - s9 / lit(4.0)))
}

/// Encoded 4×4 block of a sector matrix and its coupling to the leaked states.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedBlock<T: Real> {
    pub block: Matrix4<Complex<T>>,
    /// Frobenius norm of the encoded→leaked and leaked→encoded blocks.
    pub leakage: T,
}

pub fn encoded_block<T: Real>(u: &DMatrix<Complex<T>>) -> Result<EncodedBlock<T>> {
    let n = u.nrows();
    if n < ENCODED_DIM || u.ncols() != n {
        return Err(Error::Dimension {
            expected: 9,
            rows: n,
            cols: u.ncols(),
        });
    }
    let block = Matrix4::from_fn(|i, j| u[(i, j)]);
    let rest = n - ENCODED_DIM;
    let upper = u.view((0, ENCODED_DIM), (ENCODED_DIM, rest)).norm_squared();
    let lower = u.view((ENCODED_DIM, 0), (rest, ENCODED_DIM)).norm_squared();
    Ok(EncodedBlock {
        block,
        leakage: (upper + lower).sqrt(),
    })
}

/// Per-sector summary used by `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub leakage: f64,
    /// Unit-modulus phase factor of the encoded overlap with CNOT.
    pub phase: Complex<f64>,
    /// Largest entrywise distance from CNOT after removing `phase`.
    pub cnot_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub f9: f64,
    pub f_joint: f64,
    /// Larger of the two sector leakages.
    pub leakage: f64,
    /// Phases of the S=0 and S=1 sectors.
    pub per_sector_phase: [Complex<f64>; 2],
    pub s0: SectorReport,
    pub s1: SectorReport,
}

impl ObjectiveReport {
    pub fn new<T: Real>(u: &SectorPropagators<T>) -> Result<Self> {
        let f9 = to_f64(objective_f9(&u.s1.entries)?);
        let f_joint = to_f64(objective_f_joint(&u.s0.entries, &u.s1.entries)?);
        let s0 = sector_report(&u.s0)?;
        let s1 = sector_report(&u.s1)?;
        Ok(ObjectiveReport {
            f9,
            f_joint,
            leakage: s0.leakage.max(s1.leakage),
            per_sector_phase: [s0.phase, s1.phase],
            s0,
            s1,
        })
    }

    /// Phase difference between the sectors, in `[0, π]`.
    pub fn phase_mismatch(&self) -> f64 {
        (self.per_sector_phase[0] * self.per_sector_phase[1].conj())
            .arg()
            .abs()
    }

    /// The objectives ignore the relative phase between sectors; a true CNOT
    /// needs it to vanish.
    pub fn strict_phase_ok(&self, tolerance: f64) -> bool {
        self.phase_mismatch() <= tolerance
    }
}

fn sector_report<T: Real>(u: &TransformationMatrix<T>) -> Result<SectorReport> {
    let enc = encoded_block(&u.entries)?;
    let (dev, phase) = CnotTarget.deviation(&enc.block);
    Ok(SectorReport {
        leakage: to_f64(enc.leakage),
        phase: Complex::from_polar(1.0, to_f64(phase)),
        cnot_deviation: to_f64(dev),
    })
}

/// Local invariants of a two-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MakhlinInvariants {
    pub g1: Complex<f64>,
    pub g2: f64,
}

impl MakhlinInvariants {
    pub fn distance(&self, other: &MakhlinInvariants) -> f64 {
        (self.g1 - other.g1).norm().max((self.g2 - other.g2).abs())
    }
}

const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Transformation to the magic (Bell) basis.
fn magic_basis<T: Real>() -> Matrix4<Complex<T>> {
    let s = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
    let (o, z) = (Complex::new(s, T::zero()), c(T::zero()));
    let i = Complex::new(T::zero(), s);
    Matrix4::new(o, z, z, i, z, i, o, z, z, i, -o, z, o, z, z, -i)
}

pub fn makhlin_invariants<T: Real>(v: &Matrix4<Complex<T>>) -> Result<MakhlinInvariants> {
    let defect = to_f64((v.adjoint() * v - Matrix4::identity()).norm());
    if defect > UNITARITY_TOLERANCE {
        return Err(Error::NotUnitary(defect));
    }
    let q = magic_basis::<T>();
    let vb = q.adjoint() * v * q;
    let m = vb.transpose() * vb;
    let det = v.determinant();
    let tr = m.trace();
    let tr2 = (m * m).trace();
    let g1 = tr * tr / (det * lit::<T>(16.0));
    let g2 = (tr * tr - tr2) / (det * lit::<T>(4.0));
    Ok(MakhlinInvariants {
        g1: Complex::new(to_f64(g1.re), to_f64(g1.im)),
        g2: to_f64(g2.re),
    })
}

/// Closest unitary in Frobenius norm (the polar factor `W V†` of `M = W Σ V†`).
pub fn nearest_unitary<T: Real>(m: &Matrix4<Complex<T>>) -> Matrix4<Complex<T>> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
    u * v_t
}

/// One cell of a heatmap file (1-based indices).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub row: usize,
    pub col: usize,
    pub modulus: f64,
    pub phase_radians: f64,
}

/// Argument mapped into `(-π, π]`.
fn principal_phase(z: Complex<f64>) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

pub fn heatmap_cells<T: Real>(u: &DMatrix<Complex<T>>) -> Vec<HeatmapCell> {
    let mut out = Vec::with_capacity(u.len());
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            let z = u[(i, j)];
            let z = Complex::new(to_f64(z.re), to_f64(z.im));
            out.push(HeatmapCell {
                row: i + 1,
                col: j + 1,
                modulus: z.norm(),
                phase_radians: principal_phase(z),
            });
        }
    }
    out
}

/// Writes `row,col,modulus,phase_radians` rows, row-major.
pub fn write_heatmap<T: Real, W: Write>(u: &DMatrix<Complex<T>>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for cell in heatmap_cells(u) {
        w.serialize(cell)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_matrix_heatmap<T: Real>(
    u: &TransformationMatrix<T>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_heatmap(&u.entries, std::io::BufWriter::new(file))
}

pub fn read_heatmap<R: Read>(reader: R) -> Result<Vec<HeatmapCell>> {
    let mut r = csv::Reader::from_reader(reader);
    let cells = r
        .deserialize()
        .collect::<std::result::Result<Vec<HeatmapCell>, _>>()?;
    Ok(cells)
}

/// Rebuilds the complex matrix described by a heatmap.
pub fn heatmap_matrix(cells: &[HeatmapCell]) -> Result<DMatrix<Complex<f64>>> {
    let n = cells.iter().map(|c| c.row.max(c.col)).max().unwrap_or(0);
    if cells.len() != n * n || cells.iter().any(|c| c.row == 0 || c.col == 0) {
        return Err(Error::Parse(format!(
            "heatmap with {} cells is not a full square grid",
            cells.len()
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for cell in cells {
        m[(cell.row - 1, cell.col - 1)] = Complex::from_polar(cell.modulus, cell.phase_radians);
    }
    Ok(m)
}
