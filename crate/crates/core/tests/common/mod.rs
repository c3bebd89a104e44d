use fluxcouple::readout::ReadoutSystem;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Exact dressed sandwiches from a separate real-matrix construction.
pub fn oracle(sys: &ReadoutSystem) -> impl Fn(usize, (usize, usize), (usize, usize)) -> f64 {
    let (nq, nr) = (3, sys.resonator_dim);
    let d = nq * nr;
    let idx = move |k: usize, n: usize| k * nr + n;
    let p = sys.phase_coeffs;
    let mut h = DMatrix::<f64>::zeros(d, d);
    let ladder = [1.0, p.q2];
    for k in 0..nq {
        let ek = [0.0, sys.omega_t, 2.0 * sys.omega_t - sys.nonlinearity][k];
        for n in 0..nr {
            h[(idx(k, n), idx(k, n))] = ek + n as f64 * sys.omega_r;
            if k + 1 < nq && n > 0 {
                let v = -sys.g * ladder[k] * (n as f64).sqrt();
                h[(idx(k + 1, n - 1), idx(k, n))] = v;
                h[(idx(k, n), idx(k + 1, n - 1))] = v;
            }
        }
    }
    let eig = SymmetricEigen::new(h);
    let state = move |k: usize, n: usize| -> DVector<f64> {
        let j = (0..d)
            .max_by(|&a, &b| eig.eigenvectors[(idx(k, n), a)].abs().total_cmp(&eig.eigenvectors[(idx(k, n), b)].abs()))
            .unwrap();
        let v = eig.eigenvectors.column(j).into_owned();
        if v[idx(k, n)] < 0.0 { -v } else { v }
    };
    let cos_diag = [p.c0 + p.c, p.c0 - p.c, p.c0 - 3.0 * p.c];
    move |which, bra, ket| {
        let (b, k) = (state(bra.0, bra.1), state(ket.0, ket.1));
        let mut op = DMatrix::<f64>::zeros(d, d);
        for n in 0..nr {
            if which == 0 {
                for q in 0..3 {
                    op[(idx(q, n), idx(q, n))] = cos_diag[q];
                }
                op[(idx(0, n), idx(2, n))] = p.c2;
                op[(idx(2, n), idx(0, n))] = p.c2;
            } else {
                for (q, s) in [(0, p.s1), (1, p.s2)] {
                    op[(idx(q, n), idx(q + 1, n))] = s;
                    op[(idx(q + 1, n), idx(q, n))] = s;
                }
            }
        }
        b.dot(&(op * k))
    }
}
