//! Building block OVFs from commutative data: reconstruction from four
//! center reductions, per-atom generator families derived from the
//! coordinate parametrization of a factor field, and an independent
//! stationary-form generator that factorizes a positive-functional Gram
//! matrix.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::field::{CommutativeFieldTable, FunctionalDensity, VectorFieldTable};
use crate::linalg::{self, eigh_small, HVec, Mat2, C64, ONE, ZERO};
use crate::measure::MeasureSpace;
use crate::tol;

/// Per-atom coordinates of a rank-two factor field in C^4:
///
/// ```text
/// F(I) = (1, 0, 0, 0)        F_11 = (alpha, zeta, 0, 0)
/// F_22 = (1 - alpha, -zeta, 0, 0)
/// F_12 = (0, xi, xi3, xi4)   F_21 = (0, -omega^2 conj(xi), eta3, eta4)
/// ```
///
/// with `zeta = omega * sqrt(alpha - alpha^2)`, subject to the normalization
/// `2|xi|^2 + |xi3|^2 + |xi4|^2 + |eta3|^2 + |eta4|^2 = 1` and the bilinear
/// constraint `xi3 conj(eta3) + xi4 conj(eta4) = conj(omega)^2 xi^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCoordinates {
    pub alpha: f64,
    pub omega: C64,
    pub xi: C64,
    pub xi3: C64,
    pub xi4: C64,
    pub eta3: C64,
    pub eta4: C64,
}

impl FactorCoordinates {
    /// Residuals of the two scalar constraints (normalization, bilinear).
    pub fn constraint_residuals(&self) -> (f64, f64) {
        let norm = 2.0 * self.xi.norm_sqr()
            + self.xi3.norm_sqr()
            + self.xi4.norm_sqr()
            + self.eta3.norm_sqr()
            + self.eta4.norm_sqr();
        let bilinear = self.xi3 * self.eta3.conj() + self.xi4 * self.eta4.conj()
            - self.omega.conj() * self.omega.conj() * self.xi * self.xi;
        ((norm - 1.0).abs(), bilinear.norm())
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CoreError::Domain(format!(
                "alpha = {} must lie strictly in (0, 1)",
                self.alpha
            )));
        }
        if (self.omega.norm() - 1.0).abs() > 1e-12 {
            return Err(CoreError::Domain(format!(
                "|omega| = {} must be 1",
                self.omega.norm()
            )));
        }
        let (norm_res, bilinear_res) = self.constraint_residuals();
        if norm_res > 1e-12 {
            return Err(CoreError::Domain(format!(
                "coordinate normalization off by {norm_res:.3e}"
            )));
        }
        if bilinear_res > 1e-12 {
            return Err(CoreError::Domain(format!(
                "bilinear phase constraint off by {bilinear_res:.3e}"
            )));
        }
        Ok(())
    }

    pub fn zeta(&self) -> C64 {
        self.omega * (self.alpha - self.alpha * self.alpha).sqrt()
    }
}

/// The five vectors of a rank-two atom in C^4, in the order
/// `(F(I), F_11, F_22, F_12, F_21)`.
pub fn generate_rank2_atom(c: &FactorCoordinates) -> Result<[HVec; 5], CoreError> {
    c.validate()?;
    let zeta = c.zeta();
    let alpha = C64::from(c.alpha);
    let f_i = vec![ONE, ZERO, ZERO, ZERO];
    let f11 = vec![alpha, zeta, ZERO, ZERO];
    let f22 = vec![ONE - alpha, -zeta, ZERO, ZERO];
    let f12 = vec![ZERO, c.xi, c.xi3, c.xi4];
    let f21 = vec![
        ZERO,
        -c.omega * c.omega * c.xi.conj(),
        c.eta3,
        c.eta4,
    ];
    Ok([f_i, f11, f22, f12, f21])
}

/// The five vectors of a rank-one atom in C^4: `F(I) = F_11` is a unit
/// vector, `F_22 = 0`, and `F_12, F_21` are orthogonal to it and to each
/// other with `||F_12||^2 = split`, `||F_21||^2 = 1 - split`.
pub fn generate_rank1_atom(split: f64) -> Result<[HVec; 5], CoreError> {
    if !(0.0..=1.0).contains(&split) {
        return Err(CoreError::Domain(format!(
            "rank-one split {split} must lie in [0, 1]"
        )));
    }
    let f_i = vec![ONE, ZERO, ZERO, ZERO];
    let f11 = f_i.clone();
    let f22 = vec![ZERO; 4];
    let mut f12 = vec![ZERO; 4];
    f12[1] = C64::from(split.sqrt());
    let mut f21 = vec![ZERO; 4];
    f21[2] = C64::from((1.0 - split).sqrt());
    Ok([f_i, f11, f22, f12, f21])
}

/// Which per-atom family to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomCase {
    Rank1,
    Rank2,
}

/// How to choose the Hilbert dimension of assembled instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimPolicy {
    /// Four coordinates per atom (`dim H = 4 * atoms`), the direct-sum layout.
    #[default]
    Full,
    /// Drop coordinates that are zero in every table vector.
    Minimal,
}

/// Specification for the instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// Per-atom case tags; the atom count is the length.
    pub cases: Vec<AtomCase>,
    pub seed: u64,
    /// Fixed split for rank-one atoms; when absent, drawn uniformly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<f64>,
    /// Apply a random per-atom unitary twist to the argument.
    #[serde(default)]
    pub twist: bool,
    /// Draw atom weights uniformly from [0.5, 2]; otherwise all weights are 1.
    #[serde(default = "default_true")]
    pub random_weights: bool,
    #[serde(default)]
    pub dim_policy: DimPolicy,
}

fn default_true() -> bool {
    true
}

impl GeneratorSpec {
    pub fn mixed(atoms: usize, seed: u64) -> Self {
        GeneratorSpec {
            cases: (0..atoms)
                .map(|k| if k % 3 == 2 { AtomCase::Rank1 } else { AtomCase::Rank2 })
                .collect(),
            seed,
            split: None,
            twist: false,
            random_weights: true,
            dim_policy: DimPolicy::Full,
        }
    }

    pub fn uniform(atoms: usize, case: AtomCase, seed: u64) -> Self {
        GeneratorSpec {
            cases: vec![case; atoms],
            seed,
            split: None,
            twist: false,
            random_weights: true,
            dim_policy: DimPolicy::Full,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.cases.is_empty() {
            return Err(CoreError::Domain("generator needs at least one atom".into()));
        }
        if let Some(s) = self.split {
            if !(0.0..=1.0).contains(&s) {
                return Err(CoreError::Domain(format!("split {s} out of [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Draw factor coordinates: `alpha` uniform on [0.05, 0.95], phases uniform
/// on the circle, squared magnitudes from the simplex, and the four free
/// phases solved so the bilinear constraint holds. Draws whose magnitudes
/// cannot close the phase triangle are rejected and resampled.
pub fn sample_rank2_coordinates<R: Rng>(rng: &mut R) -> Result<FactorCoordinates, CoreError> {
    for _ in 0..256 {
        let alpha = rng.random_range(0.05..0.95);
        let omega = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        // Squared magnitudes: (|xi|^2 twice, |xi3|^2, |xi4|^2, |eta3|^2, |eta4|^2)
        // normalized to sum 1 with the double weight on |xi|^2.
        let draws: Vec<f64> = (0..5).map(|_| -f64::ln(1.0 - rng.random::<f64>())).collect();
        let total = 2.0 * draws[0] + draws[1] + draws[2] + draws[3] + draws[4];
        let m_xi = draws[0] / total;
        let m3 = draws[1] / total;
        let m4 = draws[2] / total;
        let n3 = draws[3] / total;
        let n4 = draws[4] / total;

        let xi = C64::from_polar(m_xi.sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
        // Need xi3 conj(eta3) + xi4 conj(eta4) = conj(omega)^2 xi^2 =: target.
        // The two products have fixed moduli p3, p4; the triangle closes iff
        // |p3 - p4| <= |target| <= p3 + p4.
        let target = omega.conj() * omega.conj() * xi * xi;
        let p3 = (m3 * n3).sqrt();
        let p4 = (m4 * n4).sqrt();
        let t = target.norm();
        if t > p3 + p4 || t < (p3 - p4).abs() {
            continue;
        }
        // Law of cosines for the two product phases around the target. A
        // vanishing target with equal legs closes with opposite phases; the
        // unequal case was rejected above (t < |p3 - p4|).
        let (theta3, theta4) = if t < 1e-300 {
            (0.0, std::f64::consts::PI)
        } else if p3 < 1e-300 {
            // One leg vanishes; the triangle test already forced t = p4.
            (0.0, target.arg())
        } else if p4 < 1e-300 {
            (target.arg(), 0.0)
        } else {
            let cos3 = ((t * t + p3 * p3 - p4 * p4) / (2.0 * t * p3)).clamp(-1.0, 1.0);
            let cos4 = ((t * t + p4 * p4 - p3 * p3) / (2.0 * t * p4)).clamp(-1.0, 1.0);
            let base = target.arg();
            (base + cos3.acos(), base - cos4.acos())
        };
        // Distribute each product phase between xi and eta with a free
        // overall rotation per leg.
        let free3 = rng.random_range(0.0..std::f64::consts::TAU);
        let free4 = rng.random_range(0.0..std::f64::consts::TAU);
        let c = FactorCoordinates {
            alpha,
            omega,
            xi,
            xi3: C64::from_polar(m3.sqrt(), free3),
            eta3: C64::from_polar(n3.sqrt(), free3 - theta3),
            xi4: C64::from_polar(m4.sqrt(), free4),
            eta4: C64::from_polar(n4.sqrt(), free4 - theta4),
        };
        if c.validate().is_ok() {
            return Ok(c);
        }
    }
    Err(CoreError::InfeasibleDraw(
        "could not close the bilinear phase triangle after 256 attempts".into(),
    ))
}

/// Haar-like random 2x2 unitary via Gram-Schmidt on Gaussian columns.
pub fn sample_unitary<R: Rng>(rng: &mut R) -> Mat2 {
    let dist = StandardNormal;
    loop {
        let mut c0 = [
            C64::new(dist.sample(rng), dist.sample(rng)),
            C64::new(dist.sample(rng), dist.sample(rng)),
        ];
        let n0 = (c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt();
        if n0 < 1e-6 {
            continue;
        }
        c0[0] /= n0;
        c0[1] /= n0;
        // Orthogonal complement with a random phase.
        let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        let c1 = [-c0[1].conj() * phase, c0[0].conj() * phase];
        return Mat2::new(c0[0], c1[0], c0[1], c1[1]);
    }
}

/// Assemble a field table from a generator spec: per-atom blocks embedded
/// in mutually orthogonal 4-dimensional subspaces (scaled by `sqrt(nu_k)`),
/// with an optional per-atom unitary twist of the argument.
pub fn assemble<R: Rng>(spec: &GeneratorSpec, rng: &mut R) -> Result<VectorFieldTable, CoreError> {
    spec.validate()?;
    let n = spec.cases.len();
    let weights: Vec<f64> = if spec.random_weights {
        (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
    } else {
        vec![1.0; n]
    };
    let space = MeasureSpace::new((0..n).map(|k| format!("a{k}")).collect(), weights)?;
    let dim = 4 * n;
    let mut table = VectorFieldTable::zero(space, dim);

    for (k, case) in spec.cases.iter().enumerate() {
        let vectors = match case {
            AtomCase::Rank1 => {
                let split = spec.split.unwrap_or_else(|| rng.random_range(0.0..=1.0));
                generate_rank1_atom(split)?
            }
            AtomCase::Rank2 => generate_rank2_atom(&sample_rank2_coordinates(rng)?)?,
        };
        let scale = C64::from(table.space().weight(k).sqrt());
        // order in `vectors`: (F(I), F_11, F_22, F_12, F_21)
        let slots = [(0usize, 0usize, 1usize), (1, 1, 2), (0, 1, 3), (1, 0, 4)];
        for (i, j, src) in slots {
            let dst = table.basis_mut(k, i, j);
            for (t, v) in vectors[src].iter().enumerate() {
                dst[4 * k + t] = scale * v;
            }
        }
    }

    let table = if spec.twist {
        let us: Vec<Mat2> = (0..n).map(|_| sample_unitary(rng)).collect();
        table.twist(&us)?
    } else {
        table
    };

    Ok(match spec.dim_policy {
        DimPolicy::Full => table,
        DimPolicy::Minimal => prune_zero_coordinates(&table),
    })
}

/// Drop Hilbert-space coordinates that vanish in every table vector.
pub fn prune_zero_coordinates(f: &VectorFieldTable) -> VectorFieldTable {
    let dim = f.hilbert_dim();
    let used: Vec<usize> = (0..dim)
        .filter(|&t| f.basis_vectors().iter().any(|v| v[t] != ZERO))
        .collect();
    let values = f
        .basis_vectors()
        .iter()
        .map(|v| used.iter().map(|&t| v[t]).collect())
        .collect();
    VectorFieldTable::new(f.space().clone(), used.len(), values).unwrap()
}

/// Reconstruct a block field from its four center reductions.
///
/// The reductions must satisfy the compatibility identities (cross
/// annihilation, norm balance, the module property on disjoint atoms, and
/// the off-diagonal symmetry); each is checked exactly on the atom basis
/// and a violation rejects the synthesis, naming the identity and atom.
pub fn synthesize(
    f11: &CommutativeFieldTable,
    f12: &CommutativeFieldTable,
    f21: &CommutativeFieldTable,
    f22: &CommutativeFieldTable,
    tolerance: f64,
) -> Result<VectorFieldTable, CoreError> {
    let tables = [f11, f12, f21, f22];
    let space = f11.space.clone();
    let dim = f11.hilbert_dim;
    for t in &tables {
        if t.space != space {
            return Err(CoreError::InvalidSpace("reduction spaces differ".into()));
        }
        if t.hilbert_dim != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                got: t.hilbert_dim,
            });
        }
    }
    let n = space.len();
    check_reduction_identities(f11, f12, f21, f22, n, tolerance)?;

    let mut values = Vec::with_capacity(4 * n);
    for k in 0..n {
        values.push(f11.vectors[k].clone());
        values.push(f12.vectors[k].clone());
        values.push(f21.vectors[k].clone());
        values.push(f22.vectors[k].clone());
    }
    VectorFieldTable::new(space, dim, values)
}

fn check_reduction_identities(
    f11: &CommutativeFieldTable,
    f12: &CommutativeFieldTable,
    f21: &CommutativeFieldTable,
    f22: &CommutativeFieldTable,
    n: usize,
    tolerance: f64,
) -> Result<(), CoreError> {
    let reject = |identity: &str, atom: usize, residual: f64| {
        Err(CoreError::SynthesisRejected {
            identity: identity.into(),
            atom,
            residual,
        })
    };
    let scale: f64 = [f11, f12, f21, f22]
        .iter()
        .flat_map(|t| t.vectors.iter().map(|v| linalg::norm_sqr(v)))
        .fold(0.0, f64::max)
        .max(tol::NORM_FLOOR);

    // Cross annihilation on atoms:
    // <F_11(pi_k), F_22(pi_l)> = <F_12(pi_k), F_21(pi_l)> = 0.
    for k in 0..n {
        for l in 0..n {
            let r1 = linalg::inner(&f11.vectors[k], &f22.vectors[l]).norm();
            if r1 > tolerance * scale {
                return reject("cross annihilation <F_11, F_22> = 0", k, r1 / scale);
            }
            let r2 = linalg::inner(&f12.vectors[k], &f21.vectors[l]).norm();
            if r2 > tolerance * scale {
                return reject("cross annihilation <F_12, F_21> = 0", k, r2 / scale);
            }
        }
    }
    // Module property on atoms: disjoint atoms annihilate within each
    // reduction.
    for (name, t) in [("F_11", f11), ("F_12", f12), ("F_21", f21), ("F_22", f22)] {
        for k in 0..n {
            for l in 0..n {
                if k == l {
                    continue;
                }
                let r = linalg::inner(&t.vectors[k], &t.vectors[l]).norm();
                if r > tolerance * scale {
                    return reject(&format!("disjoint atoms in {name}"), k, r / scale);
                }
            }
        }
    }
    // Mixed disjointness across reductions follows from the module
    // property and cross annihilation; check the diagonal-vs-offdiagonal
    // family directly anyway.
    for (name, a, b) in [
        ("diagonal/off-diagonal disjointness F_11 vs F_12", f11, f12),
        ("diagonal/off-diagonal disjointness F_11 vs F_21", f11, f21),
        ("diagonal/off-diagonal disjointness F_22 vs F_12", f22, f12),
        ("diagonal/off-diagonal disjointness F_22 vs F_21", f22, f21),
    ] {
        for k in 0..n {
            for l in 0..n {
                if k == l {
                    continue;
                }
                let r = linalg::inner(&a.vectors[k], &b.vectors[l]).norm();
                if r > tolerance * scale {
                    return reject(name, k, r / scale);
                }
            }
        }
    }
    // Norm balance on atoms.
    for k in 0..n {
        let lhs = linalg::norm_sqr(&f12.vectors[k]) + linalg::norm_sqr(&f21.vectors[k]);
        let rhs = linalg::norm_sqr(&f11.vectors[k]) + linalg::norm_sqr(&f22.vectors[k]);
        let r = (lhs - rhs).abs();
        if r > tolerance * scale {
            return reject("norm balance", k, r / scale);
        }
    }
    // Off-diagonal symmetry on atoms.
    let f11_one = f11.unit_value();
    let f22_one = f22.unit_value();
    for k in 0..n {
        let r1 = (linalg::inner(&f12.vectors[k], &f11_one)
            - linalg::inner(&f22_one, &f21.vectors[k]))
        .norm();
        if r1 > tolerance * scale {
            return reject("off-diagonal symmetry <F_12(pi), F_11(1)> = <F_22(1), F_21(pi)>", k, r1 / scale);
        }
        let r2 = (linalg::inner(&f21.vectors[k], &f11_one)
            - linalg::inner(&f22_one, &f12.vectors[k]))
        .norm();
        if r2 > tolerance * scale {
            return reject("off-diagonal symmetry <F_21(pi), F_11(1)> = <F_22(1), F_12(pi)>", k, r2 / scale);
        }
    }
    Ok(())
}

/// Build a stationary field from a pair of positive functionals: the Gram
/// matrix `G[x, y] = phi(y* x) + psi(x y*)` over the basis elements
/// `x = pi_k eps_ij` is block diagonal over atoms; factorizing each 4x4
/// block yields table vectors realizing it, so the resulting field is
/// stationary with the given pair by construction.
pub fn generate_from_stationary_pair(
    phi: &FunctionalDensity,
    psi: &FunctionalDensity,
) -> Result<VectorFieldTable, CoreError> {
    if phi.space != psi.space {
        return Err(CoreError::InvalidSpace("pair spaces differ".into()));
    }
    for d in [phi, psi] {
        if !d.is_positive(tol::PSD_FLOOR) {
            let (atom, min_eigenvalue) = d
                .entries
                .iter()
                .map(Mat2::min_eigval_hermitian)
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            return Err(CoreError::NotPsd {
                atom,
                min_eigenvalue,
            });
        }
    }
    let space = phi.space.clone();
    let n = space.len();
    let dim = 4 * n;
    let mut table = VectorFieldTable::zero(space.clone(), dim);

    for k in 0..n {
        let nu = space.weight(k);
        let p = &phi.entries[k];
        let q = &psi.entries[k];
        // Basis order within the atom: (i, j) = (0,0), (0,1), (1,0), (1,1).
        // G[(i,j),(i2,j2)] = nu * (delta_{i,i2} phi_{j,j2} + delta_{j,j2} psi_{i2,i}).
        let mut g = vec![ZERO; 16];
        for i in 0..2 {
            for j in 0..2 {
                for i2 in 0..2 {
                    for j2 in 0..2 {
                        let mut val = ZERO;
                        if i == i2 {
                            val += p.e[j][j2];
                        }
                        if j == j2 {
                            val += q.e[i2][i];
                        }
                        g[(i * 2 + j) * 4 + (i2 * 2 + j2)] = C64::from(nu) * val;
                    }
                }
            }
        }
        let (vals, vecs) = eigh_small(&g, 4);
        let scale = vals[0].max(0.0);
        let min_eig = *vals.last().unwrap();
        if min_eig < -tol::GRAM_PSD_GUARD * scale.max(1.0) {
            return Err(CoreError::GramNotPsd {
                atom: k,
                eigenvalue: min_eig,
            });
        }
        for (t, (i, j)) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)].iter().copied().enumerate() {
            let dst = table.basis_mut(k, i, j);
            for m in 0..4 {
                let lam = vals[m];
                let clipped = if lam <= tol::GRAM_CLIP * scale { 0.0 } else { lam };
                dst[4 * k + m] = C64::from(clipped.sqrt()) * vecs[t * 4 + m];
            }
        }
    }
    Ok(table)
}
