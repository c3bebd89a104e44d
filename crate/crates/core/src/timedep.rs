//! Time-dependent Hamiltonians.

use crate::operator::{Matrix, Operator};

/// A Hamiltonian `t ↦ H(t)` on a fixed composite space.
pub trait TimeDependent: Sync {
    fn dims(&self) -> &[usize];

    /// The raw matrix at time `t`.
    fn matrix_at(&self, t: f64) -> Matrix;

    fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    fn at(&self, t: f64) -> Operator {
        Operator::new(self.matrix_at(t), self.dims().to_vec())
            .expect("time-dependent Hamiltonian produced a matrix of the wrong size")
    }
}

impl<T: TimeDependent + ?Sized> TimeDependent for &T {
    fn dims(&self) -> &[usize] {
        (**self).dims()
    }

    fn matrix_at(&self, t: f64) -> Matrix {
        (**self).matrix_at(t)
    }
}

/// A time-independent Hamiltonian.
#[derive(Clone, Debug)]
pub struct Constant(pub Operator);

impl TimeDependent for Constant {
    fn dims(&self) -> &[usize] {
        self.0.dims()
    }

    fn matrix_at(&self, _t: f64) -> Matrix {
        self.0.data().clone()
    }
}

/// A Hamiltonian given by a closure.
pub struct FnHamiltonian<F> {
    dims: Vec<usize>,
    f: F,
}

impl<F: Fn(f64) -> Matrix + Sync> FnHamiltonian<F> {
    pub fn new(dims: Vec<usize>, f: F) -> Self {
        Self { dims, f }
    }
}

impl<F: Fn(f64) -> Matrix + Sync> TimeDependent for FnHamiltonian<F> {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn matrix_at(&self, t: f64) -> Matrix {
        (self.f)(t)
    }
}

pub type Modulation<'a> = Box<dyn Fn(f64) -> f64 + Sync + 'a>;

/// `H0 + Σ_k s_k(t) A_k` with scalar modulations `s_k`.
pub struct Modulated<'a> {
    pub h0: Operator,
    pub terms: Vec<(Operator, Modulation<'a>)>,
}

impl TimeDependent for Modulated<'_> {
    fn dims(&self) -> &[usize] {
        self.h0.dims()
    }

    fn matrix_at(&self, t: f64) -> Matrix {
        let mut m = self.h0.data().clone();
        for (op, s) in &self.terms {
            let v = s(t);
            if v != 0.0 {
                m.zip_apply(op.data(), |a, b| *a += b * v);
            }
        }
        m
    }
}
