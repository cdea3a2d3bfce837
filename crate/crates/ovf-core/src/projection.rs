//! The canonical parametric form of projections in the block algebra and
//! the algebraic orthogonality conditions between two such projections.
//!
//! Every projection `r` in `N` decomposes atom-wise as a diagonal part
//! `pi1 (+) pi2` plus a rank-one part
//!
//! ```text
//! p(a, v, pi) = [ a*pi              v*pi*k(a) ]      k(x) = (x(1-x))^(1/2)
//!               [ conj(v)*pi*k(a)   (1-a)*pi  ]
//! ```
//!
//! with `pi1, pi2 <= 1 - pi` and `0 < a < 1`, `|v| = 1` on `pi`.

use rand::Rng;

use crate::error::CoreError;
use crate::linalg::{Mat2, C64, ONE, ZERO};
use crate::measure::{BlockElement, MeasureSpace};
use crate::tol;

/// Per-atom classification of a canonical projection.
#[derive(Debug, Clone, PartialEq)]
pub enum AtomPart {
    /// Zero block: the atom is in none of the three projections.
    Zero,
    /// `diag(1, 0)`: atom in `pi1` only.
    Upper,
    /// `diag(0, 1)`: atom in `pi2` only.
    Lower,
    /// Identity block: atom in both `pi1` and `pi2`.
    Full,
    /// Rank-one block `p(a, v)` with `0 < a < 1` and `|v| = 1`.
    Interior { a: f64, v: C64 },
}

/// A projection of `N` in canonical form: one [`AtomPart`] per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalProjection {
    pub parts: Vec<AtomPart>,
}

impl CanonicalProjection {
    /// Validating constructor. The interior parameter must satisfy
    /// `min(a, 1-a) > 1e-9` and `|v| = 1` within the phase tolerance; both
    /// encode the constraint that `a(1-a)` has full support on `pi`.
    pub fn new(parts: Vec<AtomPart>) -> Result<Self, CoreError> {
        for (k, part) in parts.iter().enumerate() {
            if let AtomPart::Interior { a, v } = part {
                if !a.is_finite() || a.min(1.0 - a) <= tol::INTERIOR_STRICTNESS {
                    return Err(CoreError::CanonicalConstraint {
                        atom: k,
                        constraint: format!(
                            "interior parameter a = {a} must satisfy min(a, 1-a) > {}",
                            tol::INTERIOR_STRICTNESS
                        ),
                    });
                }
                if (v.norm() - 1.0).abs() > tol::PROJECTION_RESIDUAL {
                    return Err(CoreError::CanonicalConstraint {
                        atom: k,
                        constraint: format!("phase |v| = {} must be 1", v.norm()),
                    });
                }
            }
        }
        Ok(CanonicalProjection { parts })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Indicator vectors of the three diagonal projections (`pi1`, `pi2`,
    /// `pi`), in the fixed atom order.
    pub fn diagonal_projections(&self) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
        let mut p1 = Vec::with_capacity(self.len());
        let mut p2 = Vec::with_capacity(self.len());
        let mut p3 = Vec::with_capacity(self.len());
        for part in &self.parts {
            p1.push(matches!(part, AtomPart::Upper | AtomPart::Full));
            p2.push(matches!(part, AtomPart::Lower | AtomPart::Full));
            p3.push(matches!(part, AtomPart::Interior { .. }));
        }
        (p1, p2, p3)
    }

    /// The complementary projection `I - r`, again in canonical form.
    pub fn complement(&self) -> CanonicalProjection {
        let parts = self
            .parts
            .iter()
            .map(|p| match p {
                AtomPart::Zero => AtomPart::Full,
                AtomPart::Full => AtomPart::Zero,
                AtomPart::Upper => AtomPart::Lower,
                AtomPart::Lower => AtomPart::Upper,
                AtomPart::Interior { a, v } => AtomPart::Interior { a: 1.0 - a, v: -v },
            })
            .collect();
        CanonicalProjection { parts }
    }
}

fn kappa(x: f64) -> f64 {
    (x * (1.0 - x)).sqrt()
}

fn interior_block(a: f64, v: C64) -> Mat2 {
    let k = kappa(a);
    Mat2::new(C64::from(a), v * k, v.conj() * k, C64::from(1.0 - a))
}

/// Materialize the canonical form into a concrete block element.
pub fn materialize(r: &CanonicalProjection) -> BlockElement {
    let blocks = r
        .parts
        .iter()
        .map(|part| match part {
            AtomPart::Zero => Mat2::zero(),
            AtomPart::Upper => Mat2::diag(ONE, ZERO),
            AtomPart::Lower => Mat2::diag(ZERO, ONE),
            AtomPart::Full => Mat2::identity(),
            AtomPart::Interior { a, v } => interior_block(*a, *v),
        })
        .collect();
    BlockElement::new(blocks)
}

/// Inverse of [`materialize`]: classify each atom of a concrete projection.
///
/// Fails with the max residual if the input is not a projection within
/// `tolerance`, or with a constraint error if a rank-one block's interior
/// parameter falls outside the strict classification band.
pub fn decompose_projection(
    p: &BlockElement,
    tolerance: f64,
) -> Result<CanonicalProjection, CoreError> {
    let residual = p.projection_residual();
    if residual > tolerance {
        return Err(CoreError::NotAProjection {
            max_residual: residual,
            tolerance,
        });
    }
    let mut parts = Vec::with_capacity(p.len());
    for (k, b) in p.blocks.iter().enumerate() {
        let off = b.e[0][1];
        if off.norm() < tol::PHASE_FLOOR {
            // Diagonal block: idempotency forces each diagonal entry to 0 or 1.
            let d0 = b.e[0][0].re > 0.5;
            let d1 = b.e[1][1].re > 0.5;
            parts.push(match (d0, d1) {
                (false, false) => AtomPart::Zero,
                (true, false) => AtomPart::Upper,
                (false, true) => AtomPart::Lower,
                (true, true) => AtomPart::Full,
            });
        } else {
            let a = b.e[0][0].re;
            if a.min(1.0 - a) <= tol::INTERIOR_STRICTNESS {
                return Err(CoreError::CanonicalConstraint {
                    atom: k,
                    constraint: format!(
                        "rank-one block with off-diagonal {:.3e} has a = {a} outside the strict band",
                        off.norm()
                    ),
                });
            }
            let v = off / off.norm();
            parts.push(AtomPart::Interior { a, v });
        }
    }
    CanonicalProjection::new(parts)
}

/// Outcome of the algebraic orthogonality test, with the first violated
/// condition as a witness.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityReport {
    pub orthogonal: bool,
    /// `(condition, atom, magnitude)` for the worst violation, if any.
    pub witness: Option<(String, usize, f64)>,
    /// Max entry modulus of the direct block product, for cross-checking.
    pub product_norm: f64,
}

/// Evaluate the algebraic conditions equivalent to `pq = 0` for two
/// canonical projections: the diagonal supports must be disjoint in the
/// stated pattern, and on the common rank-one support the parameters must
/// be complementary (`b = 1 - a`) with opposite phases (`w = -v`).
///
/// The result agrees with the direct test `materialize(p) * materialize(q)
/// = 0` at the same tolerance.
pub fn orthogonality_conditions(
    p: &CanonicalProjection,
    q: &CanonicalProjection,
    tolerance: f64,
) -> OrthogonalityReport {
    assert_eq!(p.len(), q.len(), "atom count mismatch");
    let mut worst: Option<(String, usize, f64)> = None;
    let mut note = |cond: &str, atom: usize, mag: f64| {
        if mag > tolerance && worst.as_ref().is_none_or(|w| mag > w.2) {
            worst = Some((cond.to_string(), atom, mag));
        }
    };

    for k in 0..p.len() {
        let tp = &p.parts[k];
        let tq = &q.parts[k];
        let (t1, t2, t3) = part_flags(tp);
        let (s1, s2, s3) = part_flags(tq);

        // tau_i sigma_i = 0
        if t1 && s1 {
            note("tau1*sigma1 = 0", k, 1.0);
        }
        if t2 && s2 {
            note("tau2*sigma2 = 0", k, 1.0);
        }
        // tau_3 sigma_i = 0 and tau_i sigma_3 = 0
        if t3 && (s1 || s2) {
            note("tau3*sigma_i = 0", k, 1.0);
        }
        if s3 && (t1 || t2) {
            note("tau_i*sigma3 = 0", k, 1.0);
        }
        // On pi = sigma3*tau3: w = -v and b = 1 - a.
        if let (AtomPart::Interior { a, v }, AtomPart::Interior { a: b, v: w }) = (tp, tq) {
            note("w = -v on pi", k, (w + v).norm());
            note("b = 1 - a on pi", k, (b - (1.0 - a)).abs());
        }
    }

    let product_norm = materialize(p).mul(&materialize(q)).norm_max();
    OrthogonalityReport {
        orthogonal: worst.is_none(),
        witness: worst,
        product_norm,
    }
}

fn part_flags(p: &AtomPart) -> (bool, bool, bool) {
    match p {
        AtomPart::Zero => (false, false, false),
        AtomPart::Upper => (true, false, false),
        AtomPart::Lower => (false, true, false),
        AtomPart::Full => (true, true, false),
        AtomPart::Interior { .. } => (false, false, true),
    }
}

/// Draw a pair of projections with `pq = 0` exactly, per atom: the first
/// block is sampled from {0, I, rank-one}, the second from the orthogonal
/// complement options of the first. Deterministic under a fixed RNG state.
pub fn sample_orthogonal_pair<R: Rng>(
    space: &MeasureSpace,
    rng: &mut R,
) -> (CanonicalProjection, CanonicalProjection) {
    let mut pp = Vec::with_capacity(space.len());
    let mut qq = Vec::with_capacity(space.len());
    for _ in 0..space.len() {
        let (p, q) = sample_orthogonal_atom(rng);
        pp.push(p);
        qq.push(q);
    }
    (
        CanonicalProjection { parts: pp },
        CanonicalProjection { parts: qq },
    )
}

fn sample_interior<R: Rng>(rng: &mut R) -> AtomPart {
    let a = rng.random_range(0.05..0.95);
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    AtomPart::Interior {
        a,
        v: C64::from_polar(1.0, theta),
    }
}

fn sample_orthogonal_atom<R: Rng>(rng: &mut R) -> (AtomPart, AtomPart) {
    // 20% zero, 20% full, 20% diagonal, 40% rank-one.
    let roll: f64 = rng.random();
    let p = if roll < 0.2 {
        AtomPart::Zero
    } else if roll < 0.4 {
        AtomPart::Full
    } else if roll < 0.5 {
        AtomPart::Upper
    } else if roll < 0.6 {
        AtomPart::Lower
    } else {
        sample_interior(rng)
    };
    let q = match &p {
        // Anything orthogonal to zero.
        AtomPart::Zero => {
            let roll: f64 = rng.random();
            if roll < 0.25 {
                AtomPart::Zero
            } else if roll < 0.5 {
                AtomPart::Full
            } else if roll < 0.75 {
                if rng.random::<bool>() {
                    AtomPart::Upper
                } else {
                    AtomPart::Lower
                }
            } else {
                sample_interior(rng)
            }
        }
        AtomPart::Full => AtomPart::Zero,
        AtomPart::Upper => {
            if rng.random::<bool>() {
                AtomPart::Zero
            } else {
                AtomPart::Lower
            }
        }
        AtomPart::Lower => {
            if rng.random::<bool>() {
                AtomPart::Zero
            } else {
                AtomPart::Upper
            }
        }
        AtomPart::Interior { a, v } => {
            if rng.random::<bool>() {
                AtomPart::Zero
            } else {
                AtomPart::Interior { a: 1.0 - a, v: -v }
            }
        }
    };
    (p, q)
}
