//! Small dense complex linear algebra: 2x2 matrices, Hilbert-space vectors,
//! and Hermitian eigendecompositions sized for this crate (2x2 closed form
//! with a pinned phase convention, cyclic Jacobi for the per-atom Gram
//! blocks).

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A 2x2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub e: [[C64; 2]; 2],
}

impl Mat2 {
    pub fn zero() -> Self {
        Mat2 { e: [[ZERO; 2]; 2] }
    }

    pub fn identity() -> Self {
        Mat2 {
            e: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { e: [[a, b], [c, d]] }
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    /// Elementary matrix with 1 at `(i, j)` (0-based), 0 elsewhere.
    pub fn unit(i: usize, j: usize) -> Self {
        let mut m = Mat2::zero();
        m.e[i][j] = ONE;
        m
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2::new(a, ZERO, ZERO, d)
    }

    pub fn adjoint(&self) -> Self {
        Mat2::new(
            self.e[0][0].conj(),
            self.e[1][0].conj(),
            self.e[0][1].conj(),
            self.e[1][1].conj(),
        )
    }

    pub fn mul(&self, o: &Mat2) -> Self {
        let mut r = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                r.e[i][j] = self.e[i][0] * o.e[0][j] + self.e[i][1] * o.e[1][j];
            }
        }
        r
    }

    pub fn add(&self, o: &Mat2) -> Self {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.e[i][j] += o.e[i][j];
            }
        }
        r
    }

    pub fn sub(&self, o: &Mat2) -> Self {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.e[i][j] -= o.e[i][j];
            }
        }
        r
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.e[i][j] *= s;
            }
        }
        r
    }

    pub fn trace(&self) -> C64 {
        self.e[0][0] + self.e[1][1]
    }

    /// Max entry modulus.
    pub fn norm_max(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max(self.e[i][j].norm());
            }
        }
        m
    }

    /// Residual of `m^2 = m` and `m = m*`, as a max entry modulus.
    pub fn projection_residual(&self) -> f64 {
        let idem = self.mul(self).sub(self).norm_max();
        let herm = self.sub(&self.adjoint()).norm_max();
        idem.max(herm)
    }

    pub fn is_projection(&self, tolerance: f64) -> bool {
        self.projection_residual() <= tolerance
    }

    /// Hermiticity residual.
    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).norm_max()
    }

    /// Eigenvalues of a Hermitian matrix, descending. The caller is expected
    /// to have checked Hermiticity; only the real parts of the diagonal and
    /// the upper off-diagonal entry are used.
    pub fn eigvals_hermitian(&self) -> [f64; 2] {
        let a = self.e[0][0].re;
        let d = self.e[1][1].re;
        let b = self.e[0][1].norm();
        let mid = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mid + disc, mid - disc]
    }

    /// Minimum eigenvalue of a Hermitian matrix.
    pub fn min_eigval_hermitian(&self) -> f64 {
        self.eigvals_hermitian()[1]
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        Mat2::mul(&self, &rhs)
    }
}

impl std::ops::Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2::add(&self, &rhs)
    }
}

impl std::ops::Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2::sub(&self, &rhs)
    }
}

/// Eigendecomposition `m = u diag(l1, l2) u*` of a Hermitian 2x2 matrix with
/// deterministic output: eigenvalues descending, each eigenvector's first
/// component of modulus above `1e-12` made real nonnegative (falling back to
/// the second component when the first vanishes).
///
/// Returns `(eigenvalues, u)` with the eigenvectors as the columns of `u`.
pub fn eig2_hermitian(m: &Mat2) -> ([f64; 2], Mat2) {
    let a = m.e[0][0].re;
    let d = m.e[1][1].re;
    let b = m.e[0][1];
    let vals = m.eigvals_hermitian();

    if b.norm() <= 1e-15 * (1.0 + a.abs() + d.abs()) {
        // Diagonal: order columns by descending diagonal entry.
        let u = if a >= d {
            Mat2::identity()
        } else {
            Mat2::new(ZERO, ONE, ONE, ZERO)
        };
        let ordered = if a >= d { [a, d] } else { [d, a] };
        return (ordered, u);
    }

    // Eigenvector for the top eigenvalue: (b, l1 - a). Both entries cannot
    // vanish since b != 0 here.
    let v1 = normalize2(phase_fix2([b, C64::from(vals[0] - a)]));
    // Orthogonal complement, then the same phase convention.
    let v2 = phase_fix2([-v1[1].conj(), v1[0].conj()]);
    let u = Mat2::new(v1[0], v2[0], v1[1], v2[1]);
    (vals, u)
}

fn normalize2(v: [C64; 2]) -> [C64; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

fn phase_fix2(v: [C64; 2]) -> [C64; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let lead = if v[0].norm() > 1e-12 * n { v[0] } else { v[1] };
    let phase = lead / lead.norm();
    [v[0] * phase.conj(), v[1] * phase.conj()]
}

/// A vector in the Hilbert space `H`.
pub type HVec = Vec<C64>;

/// Inner product, linear in the first argument and conjugate-linear in the
/// second: `<u, v> = sum_i u_i conj(v_i)`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm_sqr(u: &[C64]) -> f64 {
    u.iter().map(|a| a.norm_sqr()).sum()
}

pub fn norm(u: &[C64]) -> f64 {
    norm_sqr(u).sqrt()
}

/// `out += c * v`.
pub fn axpy(out: &mut [C64], c: C64, v: &[C64]) {
    debug_assert_eq!(out.len(), v.len());
    if c == ZERO {
        return;
    }
    for (o, x) in out.iter_mut().zip(v) {
        *o += c * x;
    }
}

pub fn zeros(dim: usize) -> HVec {
    vec![ZERO; dim]
}

/// Eigendecomposition of a small Hermitian matrix (row major, `n x n`) by
/// cyclic Jacobi with complex rotations. Returns eigenvalues descending and
/// the matching eigenvectors as columns of `v` (`v[i * n + m]` is component
/// `i` of eigenvector `m`), so `a = v diag(l) v*`.
///
/// Intended for the per-atom 4x4 Gram blocks; cost is irrelevant at that
/// size and the algorithm is unconditionally stable on Hermitian input.
pub fn eigh_small(a: &[C64], n: usize) -> (Vec<f64>, Vec<C64>) {
    assert_eq!(a.len(), n * n, "matrix shape");
    let mut m: Vec<C64> = a.to_vec();
    // Symmetrize against rounding in the input.
    for i in 0..n {
        for j in 0..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i].conj());
            m[i * n + j] = avg;
            m[j * n + i] = avg.conj();
        }
        m[i * n + i] = C64::from(m[i * n + i].re);
    }
    let mut v: Vec<C64> = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = ONE;
    }

    let scale: f64 = m.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p * n + q].norm());
            }
        }
        if off <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.norm() <= 1e-18 * scale {
                    continue;
                }
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                // Unitary 2x2 rotation diag(1,..,c,..,s*w,..,1) eliminating
                // the (p,q) entry: write apq = |apq| w, reduce to the real
                // symmetric case for the angle.
                let w = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // The eliminating unitary G restricted to (p,q) is
                // [[c, s], [-s*conj(w), c*conj(w)]]; apply m <- G* m G and
                // accumulate v <- v G.
                for i in 0..n {
                    let mip = m[i * n + p];
                    let miq = m[i * n + q];
                    m[i * n + p] = c * mip - s * w.conj() * miq;
                    m[i * n + q] = s * mip + c * w.conj() * miq;
                }
                for j in 0..n {
                    let mpj = m[p * n + j];
                    let mqj = m[q * n + j];
                    m[p * n + j] = c * mpj - s * w * mqj;
                    m[q * n + j] = s * mpj + c * w * mqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * w.conj() * viq;
                    v[i * n + q] = s * vip + c * w.conj() * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    order.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).unwrap().then(i.cmp(&j)));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    let mut sorted_vecs = vec![ZERO; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[i * n + new_col] = v[i * n + old_col];
        }
    }
    (sorted_vals, sorted_vecs)
}
