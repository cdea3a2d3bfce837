//! Vector fields over the block algebra, their center reductions, and the
//! associated functional densities.
//!
//! A field `F: N -> H` is stored by its values on the basis
//! `{pi_k eps_ij}`: one Hilbert vector per (atom, i, j). Linearity then
//! determines `F` on all of `N`:
//! `F(x) = sum_k sum_ij x_ij(atom k) F(pi_k eps_ij)`.

use crate::error::CoreError;
use crate::linalg::{self, HVec, Mat2, C64, ZERO};
use crate::measure::{BlockElement, CenterElement, MeasureSpace};
use crate::tol;

/// A vector field over `N` given by its basis table.
///
/// The Hilbert dimension is finite by construction, which makes weak-star
/// continuity of the extended map automatic; it is recorded here, not
/// tested.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldTable {
    space: MeasureSpace,
    hilbert_dim: usize,
    /// `values[k * 4 + i * 2 + j]` is `F(pi_k eps_{i+1, j+1})` (0-based i, j).
    values: Vec<HVec>,
}

impl VectorFieldTable {
    pub fn new(
        space: MeasureSpace,
        hilbert_dim: usize,
        values: Vec<HVec>,
    ) -> Result<Self, CoreError> {
        if values.len() != 4 * space.len() {
            return Err(CoreError::AtomCountMismatch {
                expected: 4 * space.len(),
                got: values.len(),
            });
        }
        for v in &values {
            if v.len() != hilbert_dim {
                return Err(CoreError::DimensionMismatch {
                    expected: hilbert_dim,
                    got: v.len(),
                });
            }
        }
        Ok(VectorFieldTable {
            space,
            hilbert_dim,
            values,
        })
    }

    pub fn zero(space: MeasureSpace, hilbert_dim: usize) -> Self {
        let n = space.len();
        VectorFieldTable {
            space,
            hilbert_dim,
            values: vec![linalg::zeros(hilbert_dim); 4 * n],
        }
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn atoms(&self) -> usize {
        self.space.len()
    }

    /// Basis vector `F(pi_k eps_ij)`, 0-based `i, j`.
    pub fn basis(&self, k: usize, i: usize, j: usize) -> &HVec {
        &self.values[k * 4 + i * 2 + j]
    }

    pub fn basis_mut(&mut self, k: usize, i: usize, j: usize) -> &mut HVec {
        &mut self.values[k * 4 + i * 2 + j]
    }

    pub fn basis_vectors(&self) -> &[HVec] {
        &self.values
    }

    /// `F(eps_ij) = sum_k F(pi_k eps_ij)`, 0-based `i, j`.
    pub fn unit_value(&self, i: usize, j: usize) -> HVec {
        let mut out = linalg::zeros(self.hilbert_dim);
        for k in 0..self.atoms() {
            linalg::axpy(&mut out, linalg::ONE, self.basis(k, i, j));
        }
        out
    }

    /// `F(I) = F(eps_11) + F(eps_22)`.
    pub fn unit_total(&self) -> HVec {
        let mut out = self.unit_value(0, 0);
        linalg::axpy(&mut out, linalg::ONE, &self.unit_value(1, 1));
        out
    }

    /// Evaluate `F` on a block element by linear extension.
    pub fn evaluate(&self, x: &BlockElement) -> Result<HVec, CoreError> {
        if x.len() != self.atoms() {
            return Err(CoreError::AtomCountMismatch {
                expected: self.atoms(),
                got: x.len(),
            });
        }
        let mut out = linalg::zeros(self.hilbert_dim);
        for k in 0..self.atoms() {
            for i in 0..2 {
                for j in 0..2 {
                    linalg::axpy(&mut out, x.blocks[k].e[i][j], self.basis(k, i, j));
                }
            }
        }
        Ok(out)
    }

    /// The reduction `F_ij: M -> H`, `a -> F(a eps_ij)` (0-based `i, j`).
    pub fn reduction(&self, i: usize, j: usize) -> CommutativeFieldTable {
        CommutativeFieldTable {
            space: self.space.clone(),
            hilbert_dim: self.hilbert_dim,
            vectors: (0..self.atoms()).map(|k| self.basis(k, i, j).clone()).collect(),
        }
    }

    /// Conjugate the field argument by a per-atom unitary:
    /// `F'(x) = F(u x u*)`. The basis table transforms atom-locally.
    pub fn twist(&self, unitaries: &[Mat2]) -> Result<Self, CoreError> {
        if unitaries.len() != self.atoms() {
            return Err(CoreError::AtomCountMismatch {
                expected: self.atoms(),
                got: unitaries.len(),
            });
        }
        let mut out = self.clone();
        for (k, u) in unitaries.iter().enumerate() {
            out.twist_atom_in_place(k, u);
        }
        Ok(out)
    }

    /// Conjugate the argument by a unitary on a single atom.
    pub fn twist_atom(&self, k: usize, u: &Mat2) -> Self {
        let mut out = self.clone();
        out.twist_atom_in_place(k, u);
        out
    }

    fn twist_atom_in_place(&mut self, k: usize, u: &Mat2) {
        let old: Vec<HVec> = (0..4).map(|t| self.values[k * 4 + t].clone()).collect();
        for i in 0..2 {
            for j in 0..2 {
                // u eps_ij u* has entries (m, n) -> u[m][i] * conj(u[n][j])
                let mut acc = linalg::zeros(self.hilbert_dim);
                for m in 0..2 {
                    for n in 0..2 {
                        let coeff = u.e[m][i] * u.e[n][j].conj();
                        linalg::axpy(&mut acc, coeff, &old[m * 2 + n]);
                    }
                }
                self.values[k * 4 + i * 2 + j] = acc;
            }
        }
    }
}

/// A commutative field `M -> H` given by its per-atom vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutativeFieldTable {
    pub space: MeasureSpace,
    pub hilbert_dim: usize,
    /// `vectors[k]` is the value on the atom projection `pi_k`.
    pub vectors: Vec<HVec>,
}

impl CommutativeFieldTable {
    /// Evaluate on a center element by linear extension.
    pub fn evaluate(&self, a: &CenterElement) -> Result<HVec, CoreError> {
        if a.len() != self.space.len() {
            return Err(CoreError::AtomCountMismatch {
                expected: self.space.len(),
                got: a.len(),
            });
        }
        let mut out = linalg::zeros(self.hilbert_dim);
        for (k, c) in a.values.iter().enumerate() {
            linalg::axpy(&mut out, *c, &self.vectors[k]);
        }
        Ok(out)
    }

    /// Value at the unit of `M`.
    pub fn unit_value(&self) -> HVec {
        self.evaluate(&CenterElement::one(self.space.len())).unwrap()
    }
}

/// A normal functional of `N` as a 2x2 complex density matrix per atom,
/// acting by the trace pairing
/// `phi(x) = sum_k nu_k * tr(phi(atom k) x(atom k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDensity {
    pub space: MeasureSpace,
    pub entries: Vec<Mat2>,
}

impl FunctionalDensity {
    pub fn new(space: MeasureSpace, entries: Vec<Mat2>) -> Result<Self, CoreError> {
        if entries.len() != space.len() {
            return Err(CoreError::AtomCountMismatch {
                expected: space.len(),
                got: entries.len(),
            });
        }
        Ok(FunctionalDensity { space, entries })
    }

    pub fn zero(space: MeasureSpace) -> Self {
        let n = space.len();
        FunctionalDensity {
            space,
            entries: vec![Mat2::zero(); n],
        }
    }

    /// Apply the functional to a block element.
    pub fn apply(&self, x: &BlockElement) -> Result<C64, CoreError> {
        if x.len() != self.space.len() {
            return Err(CoreError::AtomCountMismatch {
                expected: self.space.len(),
                got: x.len(),
            });
        }
        let mut acc = ZERO;
        for (k, (d, b)) in self.entries.iter().zip(&x.blocks).enumerate() {
            acc += C64::from(self.space.weight(k)) * d.mul(b).trace();
        }
        Ok(acc)
    }

    /// Minimum eigenvalue over atoms (of the Hermitian parts); the
    /// Hermiticity residual is reported separately.
    pub fn min_eigenvalue(&self) -> f64 {
        self.entries
            .iter()
            .map(Mat2::min_eigval_hermitian)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_hermiticity_residual(&self) -> f64 {
        self.entries
            .iter()
            .map(Mat2::hermiticity_residual)
            .fold(0.0, f64::max)
    }

    /// Positive iff every atom's matrix is Hermitian positive semidefinite
    /// (eigenvalue floor `psd_floor`, Hermiticity within the projection
    /// residual tolerance).
    pub fn is_positive(&self, psd_floor: f64) -> bool {
        self.max_hermiticity_residual() <= tol::PROJECTION_RESIDUAL
            && self.min_eigenvalue() >= psd_floor
    }

    pub fn add(&self, o: &FunctionalDensity) -> FunctionalDensity {
        FunctionalDensity {
            space: self.space.clone(),
            entries: self
                .entries
                .iter()
                .zip(&o.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, o: &FunctionalDensity) -> FunctionalDensity {
        FunctionalDensity {
            space: self.space.clone(),
            entries: self
                .entries
                .iter()
                .zip(&o.entries)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn norm_max(&self) -> f64 {
        self.entries.iter().map(Mat2::norm_max).fold(0.0, f64::max)
    }
}

/// The positive functional `rho(x) = <F(x), F(I)>` realized as densities.
///
/// Diagonal entries come from the diagonal reductions paired with
/// themselves, `rho_ii(atom k) = <F_ii(pi_k), F_ii(1)> / nu_k`; off-diagonal
/// entries pair the transposed reduction with the full unit,
/// `rho_ij(atom k) = <F_ji(pi_k), F_11(1) + F_22(1)> / nu_k` for `i != j`.
pub fn rho_functional(f: &VectorFieldTable) -> FunctionalDensity {
    let n = f.atoms();
    let f11_one = f.unit_value(0, 0);
    let f22_one = f.unit_value(1, 1);
    let mut total = f11_one.clone();
    linalg::axpy(&mut total, linalg::ONE, &f22_one);
    let mut entries = Vec::with_capacity(n);
    for k in 0..n {
        let nu = f.space().weight(k);
        let mut d = Mat2::zero();
        d.e[0][0] = linalg::inner(f.basis(k, 0, 0), &f11_one) / nu;
        d.e[1][1] = linalg::inner(f.basis(k, 1, 1), &f22_one) / nu;
        // rho_12 pairs F_21, rho_21 pairs F_12.
        d.e[0][1] = linalg::inner(f.basis(k, 1, 0), &total) / nu;
        d.e[1][0] = linalg::inner(f.basis(k, 0, 1), &total) / nu;
        entries.push(d);
    }
    FunctionalDensity {
        space: f.space().clone(),
        entries,
    }
}

/// Density report: `rho`, the four nonnegative derivative densities
/// `r_ij(atom k) = <F_ij(pi_k), F_ij(1)> / nu_k`, optional cross densities,
/// and the residuals of the trace identity `r_12 + r_21 = rho_11 + rho_22`.
#[derive(Debug, Clone)]
pub struct DensityReport {
    pub rho: FunctionalDensity,
    /// `r[k][i][j]` is the real part of the `r_ij` density at atom `k`.
    pub r: Vec<[[f64; 2]; 2]>,
    /// Max imaginary part encountered in any `r_ij` (should vanish for an
    /// actual OVF; a large value flags a non-OVF input, it is not an error).
    pub max_imag_r: f64,
    /// Per-atom residual of `r_12 + r_21 = rho_11 + rho_22`.
    pub trace_residuals: Vec<f64>,
    /// Optional 16 cross densities per atom:
    /// `cross[k][(i*2+j)*4 + (l*2+m)] = <F_ij(pi_k), F_lm(1)> / nu_k`.
    pub cross: Option<Vec<[C64; 16]>>,
}

impl DensityReport {
    pub fn max_trace_residual(&self) -> f64 {
        self.trace_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Compute the density report for a field table.
pub fn r_densities(f: &VectorFieldTable, with_cross: bool) -> DensityReport {
    let n = f.atoms();
    let rho = rho_functional(f);
    let units: Vec<HVec> = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| f.unit_value(i, j))
        .collect();
    let mut r = Vec::with_capacity(n);
    let mut max_imag: f64 = 0.0;
    let mut trace_residuals = Vec::with_capacity(n);
    let mut cross = with_cross.then(|| Vec::with_capacity(n));
    for k in 0..n {
        let nu = f.space().weight(k);
        let mut rk = [[0.0f64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let ip = linalg::inner(f.basis(k, i, j), &units[i * 2 + j]) / nu;
                rk[i][j] = ip.re;
                max_imag = max_imag.max(ip.im.abs());
            }
        }
        let resid =
            (rk[0][1] + rk[1][0] - rho.entries[k].e[0][0].re - rho.entries[k].e[1][1].re).abs();
        trace_residuals.push(resid);
        r.push(rk);
        if let Some(cr) = cross.as_mut() {
            let mut row = [ZERO; 16];
            for i in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        for m in 0..2 {
                            row[(i * 2 + j) * 4 + l * 2 + m] =
                                linalg::inner(f.basis(k, i, j), &units[l * 2 + m]) / nu;
                        }
                    }
                }
            }
            cr.push(row);
        }
    }
    DensityReport {
        rho,
        r,
        max_imag_r: max_imag,
        trace_residuals,
        cross,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{inner, norm_sqr, I, ONE};
    use crate::measure::matrix_unit;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// A small handmade OVF on two atoms: each atom carries an orthogonal
    /// 4-dim block in an 8-dim space, the per-atom vectors being the rank-one
    /// family (F_11 = F(I) on the atom, F_22 = 0, F_12 and F_21 orthogonal).
    fn handmade_field() -> VectorFieldTable {
        let sp = MeasureSpace::new(vec!["a".into(), "b".into()], vec![1.0, 2.0]).unwrap();
        let mut f = VectorFieldTable::zero(sp, 8);
        for k in 0..2 {
            let base = 4 * k;
            let w = f.space().weight(k).sqrt();
            f.basis_mut(k, 0, 0)[base] = C64::from(w);
            f.basis_mut(k, 0, 1)[base + 1] = C64::from(w * 0.6f64.sqrt());
            f.basis_mut(k, 1, 0)[base + 2] = C64::from(w * 0.4f64.sqrt());
        }
        f
    }

    #[test]
    fn evaluate_on_basis_and_unit() {
        let f = handmade_field();
        let sp = f.space().clone();
        // x = pi_0 eps_12 picks the stored vector
        let x = BlockElement::new(vec![Mat2::unit(0, 1), Mat2::zero()]);
        assert_eq!(f.evaluate(&x).unwrap(), *f.basis(0, 0, 1));
        // x = I sums the diagonal entries
        let id = BlockElement::identity(2);
        let got = f.evaluate(&id).unwrap();
        assert_eq!(got, f.unit_total());
        let e11 = matrix_unit(1, 1, &sp);
        assert_eq!(f.evaluate(&e11).unwrap(), f.unit_value(0, 0));
    }

    #[test]
    fn evaluate_rejects_wrong_atom_count() {
        let f = handmade_field();
        let x = BlockElement::identity(3);
        assert!(matches!(
            f.evaluate(&x),
            Err(crate::error::CoreError::AtomCountMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_is_linear() {
        let f = handmade_field();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let random_block = |rng: &mut ChaCha8Rng| {
            BlockElement::new(
                (0..2)
                    .map(|_| {
                        let mut m = Mat2::zero();
                        for i in 0..2 {
                            for j in 0..2 {
                                m.e[i][j] =
                                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                            }
                        }
                        m
                    })
                    .collect(),
            )
        };
        for _ in 0..50 {
            let x = random_block(&mut rng);
            let y = random_block(&mut rng);
            let alpha = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            let combo = x.scale(alpha).add(&y);
            let lhs = f.evaluate(&combo).unwrap();
            let mut rhs = f.evaluate(&y).unwrap();
            linalg::axpy(&mut rhs, alpha, &f.evaluate(&x).unwrap());
            let diff: f64 = lhs
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-13, "linearity residual {diff}");
        }
    }

    #[test]
    fn reduction_matches_definition() {
        let f = handmade_field();
        let red = f.reduction(0, 0);
        assert_eq!(red.unit_value(), f.unit_value(0, 0));
        // sum over reductions reproduces evaluate
        let x = BlockElement::new(vec![
            Mat2::new(ONE, I, C64::from(2.0), -ONE),
            Mat2::new(-I, ZERO, ONE, C64::new(0.5, 0.5)),
        ]);
        let mut rhs = linalg::zeros(f.hilbert_dim());
        for i in 0..2 {
            for j in 0..2 {
                let a = CenterElement::new(x.blocks.iter().map(|b| b.e[i][j]).collect());
                linalg::axpy(&mut rhs, linalg::ONE, &f.reduction(i, j).evaluate(&a).unwrap());
            }
        }
        assert_eq!(f.evaluate(&x).unwrap(), rhs);
    }

    #[test]
    fn rho_of_rank1_atom_is_unit_mass() {
        // Single-atom rank-one instance: rho_11 = 1, rho_22 = 0.
        let sp = MeasureSpace::uniform(1);
        let mut f = VectorFieldTable::zero(sp, 4);
        f.basis_mut(0, 0, 0)[0] = ONE;
        f.basis_mut(0, 0, 1)[1] = C64::from(0.3f64.sqrt());
        f.basis_mut(0, 1, 0)[2] = C64::from(0.7f64.sqrt());
        let rho = rho_functional(&f);
        assert!((rho.entries[0].e[0][0] - ONE).norm() < 1e-15);
        assert!(rho.entries[0].e[1][1].norm() < 1e-15);
        // both off-diagonal vectors are orthogonal to F(I), so the
        // off-diagonal densities vanish
        assert!(rho.entries[0].e[0][1].norm() < 1e-15);
        assert!(rho.entries[0].e[1][0].norm() < 1e-15);
        let rep = r_densities(&f, false);
        assert!((rep.r[0][0][1] - 0.3).abs() < 1e-15);
        assert!((rep.r[0][1][0] - 0.7).abs() < 1e-15);
        assert!(rep.max_trace_residual() < 1e-15);
    }

    #[test]
    fn density_pairing_reproduces_inner_products() {
        let f = handmade_field();
        let rho = rho_functional(&f);
        let f_total = f.unit_total();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = BlockElement::new(
                (0..2)
                    .map(|_| {
                        let mut m = Mat2::zero();
                        for i in 0..2 {
                            for j in 0..2 {
                                m.e[i][j] =
                                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                            }
                        }
                        m
                    })
                    .collect(),
            );
            let direct = inner(&f.evaluate(&x).unwrap(), &f_total);
            let paired = rho.apply(&x).unwrap();
            let scale = norm_sqr(&f_total).max(1.0);
            assert!(
                (direct - paired).norm() <= 1e-12 * scale,
                "trace pairing disagrees: {direct} vs {paired}"
            );
        }
    }

    #[test]
    fn zero_field_zero_densities() {
        let f = VectorFieldTable::zero(MeasureSpace::uniform(3), 4);
        let rep = r_densities(&f, true);
        assert_eq!(rep.rho.norm_max(), 0.0);
        assert!(rep.r.iter().all(|rk| rk.iter().flatten().all(|x| *x == 0.0)));
        assert_eq!(rep.max_trace_residual(), 0.0);
    }

    #[test]
    fn twist_by_identity_is_identity() {
        let f = handmade_field();
        let twisted = f.twist(&[Mat2::identity(), Mat2::identity()]).unwrap();
        assert_eq!(f, twisted);
    }

    #[test]
    fn twist_composes_with_evaluate() {
        // F'(x) = F(u x u*) must hold for the linear extension, not just the
        // basis table.
        let f = handmade_field();
        let u = {
            // a fixed unitary: [[c, s],[-s, c]] with a phase
            let c = C64::from(0.8);
            let s = C64::new(0.0, 0.6);
            Mat2::new(c, s, -s.conj(), c)
        };
        let us = vec![u, Mat2::identity()];
        let twisted = f.twist(&us).unwrap();
        let x = BlockElement::new(vec![
            Mat2::new(ONE, I, -I, C64::from(0.5)),
            Mat2::new(ZERO, ONE, ZERO, ZERO),
        ]);
        let u_block = BlockElement::new(us.clone());
        let conj = u_block.mul(&x).mul(&u_block.adjoint());
        let lhs = twisted.evaluate(&x).unwrap();
        let rhs = f.evaluate(&conj).unwrap();
        let diff: f64 = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14, "twist mismatch {diff}");
    }
}
