//! Finite atomic model of the commutative algebra `M` and the block algebra
//! `N = M (x) M2`.
//!
//! The base space is a finite list of atoms with positive weights; a center
//! element is one complex value per atom, a block element one 2x2 complex
//! matrix per atom. Every integral is a finite weighted sum and every
//! almost-everywhere statement is a per-atom statement.

use crate::error::CoreError;
use crate::linalg::{Mat2, C64, ONE, ZERO};
use crate::tol;

/// A finite atomic measure space: ordered atom identifiers with positive
/// weights. The ordering is fixed at construction and governs all iteration
/// and serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    atoms: Vec<String>,
    weights: Vec<f64>,
}

impl MeasureSpace {
    pub fn new(atoms: Vec<String>, weights: Vec<f64>) -> Result<Self, CoreError> {
        if atoms.len() != weights.len() {
            return Err(CoreError::InvalidSpace(format!(
                "{} atom ids vs {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.is_empty() {
            return Err(CoreError::InvalidSpace("no atoms".into()));
        }
        for (i, w) in weights.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(CoreError::InvalidSpace(format!(
                    "weight of atom {i} must be finite and positive, got {w}"
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for id in &atoms {
            if !seen.insert(id) {
                return Err(CoreError::InvalidSpace(format!("duplicate atom id {id:?}")));
            }
        }
        Ok(MeasureSpace { atoms, weights })
    }

    /// Space with atoms named `a0..a{n-1}`, all of weight 1.
    pub fn uniform(n: usize) -> Self {
        MeasureSpace::new((0..n).map(|k| format!("a{k}")).collect(), vec![1.0; n]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom_ids(&self) -> &[String] {
        &self.atoms
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// An element of the commutative algebra `M`: one complex value per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterElement {
    pub values: Vec<C64>,
}

impl CenterElement {
    pub fn new(values: Vec<C64>) -> Self {
        CenterElement { values }
    }

    pub fn constant(n: usize, v: C64) -> Self {
        CenterElement { values: vec![v; n] }
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, ONE)
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(n, ZERO)
    }

    /// Indicator of a set of atoms.
    pub fn indicator(n: usize, atoms: &[usize]) -> Self {
        let mut v = vec![ZERO; n];
        for &k in atoms {
            v[k] = ONE;
        }
        CenterElement { values: v }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_projection(&self, tolerance: f64) -> bool {
        self.values
            .iter()
            .all(|v| (v - ONE).norm() <= tolerance || v.norm() <= tolerance)
    }

    pub fn is_selfadjoint(&self, tolerance: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tolerance)
    }

    pub fn conj(&self) -> Self {
        CenterElement::new(self.values.iter().map(|v| v.conj()).collect())
    }

    pub fn mul(&self, o: &CenterElement) -> Self {
        CenterElement::new(
            self.values
                .iter()
                .zip(&o.values)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }
}

/// The range projection of a nonnegative center element: the indicator of
/// the atoms where the value exceeds the support tolerance. It is the least
/// projection `p` with `pa = a` at that tolerance scale.
pub fn range_projection(a: &CenterElement, support_tolerance: f64) -> Result<CenterElement, CoreError> {
    let mut out = Vec::with_capacity(a.len());
    for (k, v) in a.values.iter().enumerate() {
        if v.im.abs() > tol::PROJECTION_RESIDUAL || v.re < -tol::PROJECTION_RESIDUAL {
            return Err(CoreError::Domain(format!(
                "range projection needs nonnegative real values; atom {k} has {v}"
            )));
        }
        out.push(if v.re > support_tolerance { ONE } else { ZERO });
    }
    Ok(CenterElement::new(out))
}

/// An element of `N = M (x) M2`: one 2x2 complex matrix per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockElement {
    pub blocks: Vec<Mat2>,
}

impl BlockElement {
    pub fn new(blocks: Vec<Mat2>) -> Self {
        BlockElement { blocks }
    }

    pub fn zero(n: usize) -> Self {
        BlockElement {
            blocks: vec![Mat2::zero(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        BlockElement {
            blocks: vec![Mat2::identity(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn entry(&self, k: usize, i: usize, j: usize) -> C64 {
        self.blocks[k].e[i][j]
    }

    pub fn mul(&self, o: &BlockElement) -> Self {
        BlockElement::new(
            self.blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a.mul(b))
                .collect(),
        )
    }

    pub fn add(&self, o: &BlockElement) -> Self {
        BlockElement::new(
            self.blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a.add(b))
                .collect(),
        )
    }

    pub fn sub(&self, o: &BlockElement) -> Self {
        BlockElement::new(
            self.blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a.sub(b))
                .collect(),
        )
    }

    pub fn adjoint(&self) -> Self {
        BlockElement::new(self.blocks.iter().map(|a| a.adjoint()).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        BlockElement::new(self.blocks.iter().map(|a| a.scale(s)).collect())
    }

    /// Max entry modulus over all atoms.
    pub fn norm_max(&self) -> f64 {
        self.blocks.iter().map(Mat2::norm_max).fold(0.0, f64::max)
    }

    /// Max over atoms of the per-block idempotency and Hermiticity residual.
    pub fn projection_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(Mat2::projection_residual)
            .fold(0.0, f64::max)
    }

    pub fn is_projection(&self, tolerance: f64) -> bool {
        self.projection_residual() <= tolerance
    }

    pub fn is_selfadjoint(&self, tolerance: f64) -> bool {
        self.blocks
            .iter()
            .all(|a| a.hermiticity_residual() <= tolerance)
    }
}

/// The matrix unit `eps_ij` of `N`: every atom's block has 1 at `(i, j)` and
/// 0 elsewhere. Indices are 1-based as in the usual notation `eps_12`.
pub fn matrix_unit(i: usize, j: usize, space: &MeasureSpace) -> BlockElement {
    assert!((1..=2).contains(&i) && (1..=2).contains(&j), "indices must be 1 or 2");
    BlockElement::new(vec![Mat2::unit(i - 1, j - 1); space.len()])
}

/// Embed a center element at entry `(i, j)`: the block `a eps_ij` with `a`
/// at `(i, j)` and zeros elsewhere, per atom. Indices are 1-based.
pub fn embed_center(a: &CenterElement, i: usize, j: usize) -> BlockElement {
    assert!((1..=2).contains(&i) && (1..=2).contains(&j), "indices must be 1 or 2");
    BlockElement::new(
        a.values
            .iter()
            .map(|&v| {
                let mut m = Mat2::zero();
                m.e[i - 1][j - 1] = v;
                m
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;

    #[test]
    fn matrix_unit_relations() {
        let sp = MeasureSpace::uniform(3);
        // eps_ij eps_kl = delta_jk eps_il, exactly
        for i in 1..=2 {
            for j in 1..=2 {
                for k in 1..=2 {
                    for l in 1..=2 {
                        let prod = matrix_unit(i, j, &sp).mul(&matrix_unit(k, l, &sp));
                        let expect = if j == k {
                            matrix_unit(i, l, &sp)
                        } else {
                            BlockElement::zero(3)
                        };
                        assert_eq!(prod, expect, "eps_{i}{j} eps_{k}{l}");
                    }
                }
            }
        }
    }

    #[test]
    fn unit_sum_and_adjoint() {
        let sp = MeasureSpace::uniform(2);
        let sum = matrix_unit(1, 1, &sp).add(&matrix_unit(2, 2, &sp));
        assert_eq!(sum, BlockElement::identity(2));
        assert_eq!(matrix_unit(1, 2, &sp).adjoint(), matrix_unit(2, 1, &sp));
    }

    #[test]
    fn embed_center_multiplication() {
        let a = CenterElement::new(vec![C64::new(0.5, 0.5), I]);
        let b = CenterElement::new(vec![C64::new(-1.0, 2.0), C64::from(3.0)]);
        // embed(a,(1,2)) * embed(b,(2,1)) = embed(ab,(1,1))
        let lhs = embed_center(&a, 1, 2).mul(&embed_center(&b, 2, 1));
        let rhs = embed_center(&a.mul(&b), 1, 1);
        assert_eq!(lhs, rhs);
        // embedding the constant one at (1,1) gives eps_11
        let sp = MeasureSpace::uniform(2);
        assert_eq!(embed_center(&CenterElement::one(2), 1, 1), matrix_unit(1, 1, &sp));
    }

    #[test]
    fn range_projection_support() {
        let a = CenterElement::new(vec![C64::from(0.3), ZERO, C64::from(1.7)]);
        let p = range_projection(&a, 1e-12).unwrap();
        assert_eq!(p.values, vec![ONE, ZERO, ONE]);
        // least projection with pa = a
        assert_eq!(p.mul(&a), a);
        let zero = CenterElement::zero(4);
        assert_eq!(range_projection(&zero, 1e-12).unwrap(), zero);
        // negative input is a domain error
        let bad = CenterElement::new(vec![C64::from(-0.1)]);
        assert!(range_projection(&bad, 1e-12).is_err());
    }

    #[test]
    fn rp_of_a_one_minus_a_detects_interior() {
        // rp(a(1-a)) = 1 iff 0 < a < 1 on all atoms
        let n = 3;
        let interior = CenterElement::new(vec![C64::from(0.2), C64::from(0.5), C64::from(0.9)]);
        let ones = CenterElement::one(n);
        let prod = interior.mul(&CenterElement::new(
            interior.values.iter().map(|v| ONE - v).collect(),
        ));
        assert_eq!(range_projection(&prod, 1e-12).unwrap(), ones);

        let boundary = CenterElement::new(vec![C64::from(0.2), ONE, C64::from(0.9)]);
        let prod = boundary.mul(&CenterElement::new(
            boundary.values.iter().map(|v| ONE - v).collect(),
        ));
        assert_ne!(range_projection(&prod, 1e-12).unwrap(), ones);
    }

    #[test]
    fn space_validation() {
        assert!(MeasureSpace::new(vec!["a".into()], vec![0.0]).is_err());
        assert!(MeasureSpace::new(vec!["a".into(), "a".into()], vec![1.0, 1.0]).is_err());
        assert!(MeasureSpace::new(vec!["a".into()], vec![1.0, 2.0]).is_err());
        assert!(MeasureSpace::new(vec![], vec![]).is_err());
    }
}
