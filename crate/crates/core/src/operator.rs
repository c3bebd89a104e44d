//! Dense complex operators over composite Hilbert spaces.
//!
//! Every [`Operator`] carries the ordered list of subsystem dimensions it acts
//! on. Subsystems are ordered left to right, so `kron(A, B)` places `A` on
//! slot 0. Single-qubit conventions used throughout the crate: basis index 0
//! is the ground state, `σz = diag(1, -1)` and `σ⁺ = |1⟩⟨0|`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Matrix = DMatrix<C64>;

/// Absolute max-norm tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest absolute entry of a matrix.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

#[derive(Clone, PartialEq)]
pub struct Operator {
    data: Matrix,
    dims: Vec<usize>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dims={:?}){}", self.dims, self.data)
    }
}

impl Operator {
    pub fn new(data: Matrix, dims: Vec<usize>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidDims(format!(
                "matrix is {}x{}, not square",
                data.nrows(),
                data.ncols()
            )));
        }
        check_dims(&dims)?;
        let size: usize = dims.iter().product();
        if size != data.nrows() {
            return Err(Error::DimensionMismatch {
                expected: size,
                found: data.nrows(),
            });
        }
        Ok(Self { data, dims })
    }

    /// Single-subsystem operator from a square matrix.
    pub fn single(data: Matrix) -> Result<Self> {
        let n = data.nrows();
        Self::new(data, vec![n])
    }

    /// Single-subsystem operator from real row-major entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut m = Matrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidDims("ragged rows".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = real(v);
            }
        }
        Self::single(m)
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Self {
            data: Matrix::identity(n, n),
            dims: dims.to_vec(),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Self {
            data: Matrix::zeros(n, n),
            dims: dims.to_vec(),
        }
    }

    pub fn diagonal(values: &[f64], dims: &[usize]) -> Result<Self> {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| real(v)),
        ));
        Self::new(m, dims.to_vec())
    }

    /// `|row⟩⟨col|` on a single subsystem of dimension `dim`.
    pub fn projector_element(dim: usize, row: usize, col: usize) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        m[(row, col)] = real(1.0);
        Self {
            data: m,
            dims: vec![dim],
        }
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn into_data(self) -> Matrix {
        self.data
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn max_norm(&self) -> f64 {
        max_abs(&self.data)
    }

    /// `‖A − A†‖_max`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_error();
        if deviation > HERMITIAN_TOL {
            Err(Error::NotHermitian { deviation })
        } else {
            Ok(())
        }
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            data: (&self.data + self.data.adjoint()) * real(0.5),
            dims: self.dims.clone(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.data[(i, j)] == C64::new(0.0, 0.0)))
    }

    pub fn diagonal_values(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.data[(i, i)]).collect()
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Operator) -> Operator {
        self * other + other * self
    }

    pub fn scaled(&self, c: C64) -> Operator {
        Self {
            data: &self.data * c,
            dims: self.dims.clone(),
        }
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs(&(&self.data - &other.data))
    }

    /// `⟨bra|A|ket⟩` for state vectors given as columns.
    pub fn sandwich(&self, bra: &nalgebra::DVector<C64>, ket: &nalgebra::DVector<C64>) -> C64 {
        bra.dotc(&(&self.data * ket))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn assert_same_dims(&self, other: &Operator) {
        assert_eq!(
            self.dims, other.dims,
            "operator subsystem dimensions differ"
        );
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::InvalidDims("empty dimension list".into()));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidDims(format!("zero-sized subsystem in {dims:?}")));
    }
    Ok(())
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.assert_same_dims(rhs);
        Operator {
            data: &self.data + &rhs.data,
            dims: self.dims.clone(),
        }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.assert_same_dims(rhs);
        self.data += &rhs.data;
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.assert_same_dims(rhs);
        Operator {
            data: &self.data - &rhs.data,
            dims: self.dims.clone(),
        }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.assert_same_dims(rhs);
        Operator {
            data: &self.data * &rhs.data,
            dims: self.dims.clone(),
        }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scaled(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scaled(real(rhs))
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(mut self, rhs: f64) -> Operator {
        self.data *= real(rhs);
        self
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(mut self) -> Operator {
        self.data = -self.data;
        self
    }
}

/// Tensor product; subsystem lists are concatenated.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Operator {
        data: a.data.kronecker(&b.data),
        dims,
    }
}

/// Tensor product of several operators, left to right.
pub fn kron_all(ops: &[&Operator]) -> Operator {
    let mut iter = ops.iter();
    let first = (*iter.next().expect("kron_all needs at least one operator")).clone();
    iter.fold(first, |acc, op| kron(&acc, op))
}

/// Place a single-subsystem operator on `slot` of the composite space `dims`.
pub fn embed(op: &Operator, slot: usize, dims: &[usize]) -> Result<Operator> {
    check_dims(dims)?;
    if slot >= dims.len() {
        return Err(Error::InvalidDims(format!(
            "slot {slot} out of range for {} subsystems",
            dims.len()
        )));
    }
    if op.dim() != dims[slot] {
        return Err(Error::DimensionMismatch {
            expected: dims[slot],
            found: op.dim(),
        });
    }
    let left: usize = dims[..slot].iter().product();
    let right: usize = dims[slot + 1..].iter().product();
    let data = Matrix::identity(left, left)
        .kronecker(&op.data)
        .kronecker(&Matrix::identity(right, right));
    Ok(Operator {
        data,
        dims: dims.to_vec(),
    })
}

/// Truncated bosonic ladder operators.
#[derive(Clone, Debug)]
pub struct BosonOps {
    pub a: Operator,
    pub adag: Operator,
    pub n: Operator,
}

pub fn boson_ops(dim: usize) -> Result<BosonOps> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "boson truncation must be at least 2, got {dim}"
        )));
    }
    let mut a = Matrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = real((k as f64).sqrt());
    }
    let n = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        (0..dim).map(|k| real(k as f64)),
    ));
    Ok(BosonOps {
        adag: Operator {
            data: a.adjoint(),
            dims: vec![dim],
        },
        a: Operator {
            data: a,
            dims: vec![dim],
        },
        n: Operator {
            data: n,
            dims: vec![dim],
        },
    })
}

/// `exp(scale · A)`.
///
/// Backed by nalgebra's scaling-and-squaring Padé implementation.
pub fn matrix_exp(a: &Operator, scale: C64) -> Result<Operator> {
    if !a.is_finite() || !(scale.re.is_finite() && scale.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Operator {
        data: expm(&(&a.data * scale)),
        dims: a.dims.clone(),
    })
}

/// Raw matrix exponential used on hot paths.
pub(crate) fn expm(m: &Matrix) -> Matrix {
    if m.nrows() == 1 {
        return Matrix::from_element(1, 1, m[(0, 0)].exp());
    }
    m.exp()
}

/// Pauli matrices in the crate's convention.
pub mod pauli {
    use super::*;

    pub fn identity() -> Operator {
        Operator::identity(&[2])
    }

    pub fn x() -> Operator {
        Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> Operator {
        let mut m = Matrix::zeros(2, 2);
        m[(0, 1)] = c64(0.0, -1.0);
        m[(1, 0)] = c64(0.0, 1.0);
        Operator::single(m).unwrap()
    }

    pub fn z() -> Operator {
        Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }

    /// `σ⁺ = |1⟩⟨0|`.
    pub fn raising() -> Operator {
        Operator::projector_element(2, 1, 0)
    }

    /// `σ⁻ = |0⟩⟨1|`.
    pub fn lowering() -> Operator {
        Operator::projector_element(2, 0, 1)
    }

    pub fn by_index(p: Pauli) -> Operator {
        match p {
            Pauli::I => identity(),
            Pauli::X => x(),
            Pauli::Y => y(),
            Pauli::Z => z(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const XYZ: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'x',
            Pauli::Y => 'y',
            Pauli::Z => 'z',
        }
    }
}

/// Real coefficients `c_ab` of `Σ_ab c_ab σ1^a σ2^b`, indexed by `{I,x,y,z}²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PauliTable {
    pub coefficients: [[f64; 4]; 4],
}

impl PauliTable {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, a: Pauli, b: Pauli) -> f64 {
        self.coefficients[a.index()][b.index()]
    }

    pub fn set(&mut self, a: Pauli, b: Pauli, value: f64) {
        self.coefficients[a.index()][b.index()] = value;
    }

    pub fn with(mut self, a: Pauli, b: Pauli, value: f64) -> Self {
        self.set(a, b, value);
        self
    }

    /// `Σ_ab c_ab σ^a ⊗ σ^b` on dims `[2, 2]`.
    pub fn reconstruct(&self) -> Operator {
        let mut out = Operator::zeros(&[2, 2]);
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let c = self.get(a, b);
                if c != 0.0 {
                    out += &(&kron(&pauli::by_index(a), &pauli::by_index(b)) * c);
                }
            }
        }
        out
    }

    /// The nine two-body entries `c_ab`, `a, b ∈ {x, y, z}`, row-major.
    pub fn two_body(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for (i, a) in Pauli::XYZ.iter().enumerate() {
            for (j, b) in Pauli::XYZ.iter().enumerate() {
                out[3 * i + j] = self.get(*a, *b);
            }
        }
        out
    }

    pub fn from_two_body(values: &[f64; 9]) -> Self {
        let mut t = Self::zero();
        for (i, a) in Pauli::XYZ.iter().enumerate() {
            for (j, b) in Pauli::XYZ.iter().enumerate() {
                t.set(*a, *b, values[3 * i + j]);
            }
        }
        t
    }

    /// Entries with exactly one identity factor.
    pub fn single_qubit_terms(&self) -> Vec<((Pauli, Pauli), f64)> {
        let mut out = Vec::new();
        for p in Pauli::XYZ {
            out.push(((p, Pauli::I), self.get(p, Pauli::I)));
            out.push(((Pauli::I, p), self.get(Pauli::I, p)));
        }
        out
    }

    pub fn max_abs_diff(&self, other: &PauliTable) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..4 {
            for b in 0..4 {
                worst = worst.max((self.coefficients[a][b] - other.coefficients[a][b]).abs());
            }
        }
        worst
    }

    pub fn two_body_max_abs_diff(&self, other: &PauliTable) -> f64 {
        self.two_body()
            .iter()
            .zip(other.two_body().iter())
            .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.coefficients.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn label(a: Pauli, b: Pauli) -> String {
        format!("{}{}", a.label(), b.label())
    }
}

impl Add for PauliTable {
    type Output = PauliTable;
    fn add(mut self, rhs: PauliTable) -> PauliTable {
        for a in 0..4 {
            for b in 0..4 {
                self.coefficients[a][b] += rhs.coefficients[a][b];
            }
        }
        self
    }
}

/// `c_ab = Tr(H σ^a⊗σ^b)/4` for a Hermitian two-qubit operator.
pub fn pauli_decompose(h: &Operator) -> Result<PauliTable> {
    if h.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: h.dim(),
        });
    }
    h.ensure_hermitian()?;
    let mut table = PauliTable::zero();
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            let basis = kron(&pauli::by_index(a), &pauli::by_index(b));
            // Tr(H P) = Σ_ij H_ij P_ji
            let mut tr = C64::new(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    tr += h.data[(i, j)] * basis.data[(j, i)];
                }
            }
            table.set(a, b, tr.re / 4.0);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn kron_sigma_plus_minus_single_entry() {
        let op = kron(&pauli::raising(), &pauli::lowering());
        // |10⟩ is index 2, |01⟩ is index 1
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (2, 1) { 1.0 } else { 0.0 };
                assert_eq!(op.get(i, j), real(expected));
            }
        }
    }

    #[test]
    fn kron_identities() {
        let id = kron(&Operator::identity(&[2]), &Operator::identity(&[3]));
        assert_eq!(id.dims(), &[2, 3]);
        assert_eq!(id.data(), Operator::identity(&[6]).data());
    }

    #[test]
    fn kron_x_identity_acts_on_first_factor() {
        let op = kron(&pauli::x(), &pauli::identity());
        // |00⟩ -> |10⟩
        assert_eq!(op.get(2, 0), real(1.0));
        assert_eq!(op.get(1, 0), real(0.0));
    }

    #[test]
    fn embed_matches_kron() {
        let e = embed(&pauli::z(), 0, &[2, 2]).unwrap();
        assert_eq!(e, kron(&pauli::z(), &pauli::identity()));
    }

    #[test]
    fn embed_disjoint_slots_commute() {
        let n3 = boson_ops(3).unwrap().n;
        let n10 = boson_ops(10).unwrap();
        let a = embed(&n10.n, 1, &[3, 10]).unwrap();
        let b = embed(&(&n3 * 2.0), 0, &[3, 10]).unwrap();
        assert_eq!(a.commutator(&b).max_norm(), 0.0);
    }

    #[test]
    fn embed_annihilator_kills_vacuum() {
        let a = embed(&boson_ops(4).unwrap().a, 1, &[2, 4]).unwrap();
        for q in 0..2 {
            let col = q * 4;
            assert!(a.data().column(col).iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn embed_dimension_mismatch() {
        assert!(matches!(
            embed(&pauli::x(), 1, &[2, 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn boson_ops_dim_two_is_lowering() {
        assert_eq!(boson_ops(2).unwrap().a, pauli::lowering());
        assert!(boson_ops(1).is_err());
    }

    #[test]
    fn boson_ops_matrix_elements() {
        let ops = boson_ops(4).unwrap();
        assert_abs_diff_eq!(ops.a.get(2, 3).re, 3f64.sqrt());
        assert!((&ops.adag * &ops.a).max_abs_diff(&ops.n) < 1e-15);
    }

    #[test]
    fn truncated_commutator() {
        let dim = 5;
        let ops = boson_ops(dim).unwrap();
        let comm = ops.a.commutator(&ops.adag);
        let mut expected = Operator::identity(&[dim]);
        expected = &expected - &(&Operator::projector_element(dim, dim - 1, dim - 1) * dim as f64);
        assert!(comm.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let u = matrix_exp(&Operator::zeros(&[3]), real(1.0)).unwrap();
        assert_eq!(u.data(), Operator::identity(&[3]).data());
    }

    #[test]
    fn exp_of_sigma_x_quarter_turn() {
        let u = matrix_exp(&pauli::x(), c64(0.0, -PI / 2.0)).unwrap();
        let expected = pauli::x().scaled(c64(0.0, -1.0));
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn exp_inverse() {
        let a = Operator::from_real_rows(&[&[0.3, 1.2, -0.4], &[0.0, -1.1, 2.0], &[0.7, 0.2, 0.5]])
            .unwrap();
        let prod = &matrix_exp(&a, real(1.0)).unwrap() * &matrix_exp(&a, real(-1.0)).unwrap();
        assert!(prod.max_abs_diff(&Operator::identity(&[3])) < 1e-10);
    }

    #[test]
    fn exp_rejects_non_finite() {
        let a = Operator::from_real_rows(&[&[f64::NAN]]).unwrap();
        assert_eq!(matrix_exp(&a, real(1.0)), Err(Error::NonFinite));
    }

    #[test]
    fn exp_matches_diagonal_closed_form() {
        let d = Operator::diagonal(&[0.5, -2.0, 3.0], &[3]).unwrap();
        let u = matrix_exp(&d, c64(0.0, -1.7)).unwrap();
        for (k, v) in [0.5_f64, -2.0, 3.0].iter().enumerate() {
            let expected = c64(0.0, -1.7 * v).exp();
            assert!((u.get(k, k) - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn decompose_simple_tables() {
        let xx = kron(&pauli::x(), &pauli::x());
        let t = pauli_decompose(&xx).unwrap();
        assert_abs_diff_eq!(t.get(Pauli::X, Pauli::X), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.max_abs_diff(&PauliTable::zero().with(Pauli::X, Pauli::X, 1.0)), 0.0);

        let id = pauli_decompose(&Operator::identity(&[2, 2])).unwrap();
        assert_eq!(id, PauliTable::zero().with(Pauli::I, Pauli::I, 1.0));
    }

    #[test]
    fn decompose_mixed_hamiltonian() {
        let h = &kron(&pauli::z(), &pauli::identity()) * 0.3
            + &kron(&pauli::y(), &pauli::y()) * 0.1;
        let t = pauli_decompose(&h).unwrap();
        let expected = PauliTable::zero()
            .with(Pauli::Z, Pauli::I, 0.3)
            .with(Pauli::Y, Pauli::Y, 0.1);
        assert!(t.max_abs_diff(&expected) < 1e-15);
        assert!(t.reconstruct().max_abs_diff(&h) < 1e-15);
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let op = kron(&pauli::raising(), &pauli::identity());
        assert!(matches!(pauli_decompose(&op), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sigma_plus_in_pauli_basis() {
        // σ⁺ = (σx − iσy)/2 in this convention
        let sp = (&pauli::x() - &pauli::y().scaled(c64(0.0, 1.0))) * 0.5;
        assert!(sp.max_abs_diff(&pauli::raising()) < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_op(n: usize) -> impl Strategy<Value = Operator> {
            proptest::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
                let m = Matrix::from_fn(n, n, |i, j| c64(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
                Operator::single(m).unwrap()
            })
        }

        proptest! {
            #[test]
            fn decompose_reconstruct_roundtrip(vals in proptest::array::uniform16(-2.0f64..2.0)) {
                let mut t = PauliTable::zero();
                for (k, v) in vals.iter().enumerate() {
                    t.coefficients[k / 4][k % 4] = *v;
                }
                let back = pauli_decompose(&t.reconstruct()).unwrap();
                prop_assert!(back.max_abs_diff(&t) < 1e-12);
            }

            #[test]
            fn exp_of_anti_hermitian_is_unitary(a in small_op(4), scale in 0.1f64..5.0) {
                let h = a.hermitian_part();
                let u = matrix_exp(&h, c64(0.0, -scale)).unwrap();
                let err = (&u.adjoint() * &u).max_abs_diff(&Operator::identity(&[4]));
                prop_assert!(err <= 1e-10);
            }

            #[test]
            fn kron_is_associative(a in small_op(2), b in small_op(3), c in small_op(2)) {
                let left = kron(&kron(&a, &b), &c);
                let right = kron(&a, &kron(&b, &c));
                prop_assert_eq!(left.dims(), right.dims());
                prop_assert!(left.max_abs_diff(&right) < 1e-14);
            }
        }
    }
}
