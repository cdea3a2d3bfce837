//! The stationary decomposition of an orthogonal vector field: positive
//! functionals `phi, psi` with
//!
//! ```text
//! <F(x), F(y)> = phi(y* x) + psi(x y*)          for all x, y in N.
//! ```
//!
//! Per atom the problem reduces to a 2x2 factor: with the density matrix
//! diagonalized, every entry of the pair is forced by the field's densities
//! except the scalar `phi_11`, which must satisfy three closed-form
//! inequalities; the "+" root `phi0` of the quadratic
//! `phi (phi + rho22 - r21) = |phi12|^2` always lies in the feasible set
//! when the data comes from an actual OVF.

use crate::error::CoreError;
use crate::field::{rho_functional, FunctionalDensity, VectorFieldTable};
use crate::linalg::{self, eig2_hermitian, Mat2, C64, ZERO};
use crate::tol;

/// The solved pair of positive functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPair {
    pub phi: FunctionalDensity,
    pub psi: FunctionalDensity,
}

impl StationaryPair {
    /// Minimum eigenvalue over both densities and all atoms.
    pub fn min_eigenvalue(&self) -> f64 {
        self.phi.min_eigenvalue().min(self.psi.min_eigenvalue())
    }

    /// Entry-wise residual of `phi + psi = rho`.
    pub fn decomposition_residual(&self, rho: &FunctionalDensity) -> f64 {
        self.phi.add(&self.psi).sub(rho).norm_max()
    }
}

/// Scalar data of one factor (one atom), at density scale. `basis_unitary`
/// maps the working basis back to the original one: the solved matrices are
/// conjugated as `u m u*` on output.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorData {
    pub atom: usize,
    pub rho11: f64,
    pub rho22: f64,
    pub rho12: C64,
    pub r12: f64,
    pub r21: f64,
    pub phi12: C64,
    pub basis_unitary: Mat2,
}

impl FactorData {
    /// Residual of the trace identity `r12 + r21 = rho11 + rho22`.
    pub fn trace_residual(&self) -> f64 {
        (self.r12 + self.r21 - self.rho11 - self.rho22).abs()
    }

    /// Slack of the product estimate `|phi12|^2 <= r12 r21 rho11 rho22 / T^2`
    /// (`T` the density trace; the estimate is stated at unit normalization
    /// and scales with `T^2`). Nonnegative for data harvested from an OVF.
    pub fn product_estimate_slack(&self) -> f64 {
        let t = self.rho11 + self.rho22;
        if t <= 0.0 {
            return -self.phi12.norm_sqr();
        }
        self.r12 * self.r21 * self.rho11 * self.rho22 / (t * t) - self.phi12.norm_sqr()
    }
}

/// The `+` root of `phi (phi + rho22 - r21) = c^2`, evaluated in a
/// cancellation-free form:
///
/// `phi0 = (r21 - rho22 + sqrt((r21 - rho22)^2 + 4 c^2)) / 2`.
pub fn phi0(r21: f64, rho22: f64, phi12_abs: f64) -> f64 {
    phi0_pair(r21, rho22, phi12_abs).0
}

/// Returns `(phi0, phi0 + rho22 - r21)`, both computed without subtractive
/// cancellation so that their product reproduces `phi12_abs^2` to a few ulps.
pub fn phi0_pair(r21: f64, rho22: f64, phi12_abs: f64) -> (f64, f64) {
    let q = r21 - rho22;
    let c2 = phi12_abs * phi12_abs;
    let s = (q * q + 4.0 * c2).sqrt();
    if q >= 0.0 {
        let root = 0.5 * (q + s);
        let cof = if s + q > 0.0 { 2.0 * c2 / (s + q) } else { 0.0 };
        (root, cof)
    } else {
        let cof = 0.5 * (s - q);
        let root = if s - q > 0.0 { 2.0 * c2 / (s - q) } else { 0.0 };
        (root, cof)
    }
}

/// Slacks of the three feasibility inequalities at a candidate `phi`
/// (all nonnegative when feasible):
///
/// * the admissible box `max{0, r21 - rho22} <= phi <= min{rho11, r21}`,
/// * `|phi12|^2 <= phi (phi + rho22 - r21)` (positivity of the first matrix),
/// * `|rho12 - phi12|^2 <= (rho11 - phi)(r21 - phi)` (positivity of the second).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilitySlacks {
    pub box_lower: f64,
    pub box_upper: f64,
    pub quad: f64,
    pub psi_det: f64,
}

impl FeasibilitySlacks {
    pub fn feasible(&self, floor: f64) -> bool {
        self.min() >= floor
    }

    pub fn min(&self) -> f64 {
        self.box_lower
            .min(self.box_upper)
            .min(self.quad)
            .min(self.psi_det)
    }
}

pub fn check_feasibility(f: &FactorData, phi: f64) -> FeasibilitySlacks {
    let lower_edge = (f.r21 - f.rho22).max(0.0);
    let upper_edge = f.rho11.min(f.r21);
    FeasibilitySlacks {
        box_lower: phi - lower_edge,
        box_upper: upper_edge - phi,
        quad: phi * (phi + f.rho22 - f.r21) - f.phi12.norm_sqr(),
        psi_det: (f.rho11 - phi) * (f.r21 - phi) - (f.rho12 - f.phi12).norm_sqr(),
    }
}

/// Brute-force scan of the admissible box with the given step: returns the
/// smallest and largest feasible grid value, if any (the box endpoints are
/// always included as grid points).
pub fn grid_feasible_interval(
    f: &FactorData,
    step: f64,
    slack_floor: f64,
) -> Option<(f64, f64)> {
    let lo = (f.r21 - f.rho22).max(0.0);
    let hi = f.rho11.min(f.r21);
    if hi < lo {
        return None;
    }
    let mut min_feasible = None;
    let mut max_feasible = None;
    let steps = ((hi - lo) / step).floor() as usize;
    let mut probe = |phi: f64| {
        if check_feasibility(f, phi).feasible(slack_floor) {
            if min_feasible.is_none() {
                min_feasible = Some(phi);
            }
            max_feasible = Some(phi);
        }
    };
    for t in 0..=steps {
        probe(lo + t as f64 * step);
    }
    probe(hi);
    Some((min_feasible?, max_feasible?))
}

/// How a factor was classified and solved.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorCase {
    /// Density matrix of rank one: the pair is unique,
    /// `phi = diag(r21, 0)`, `psi = diag(r12, 0)` in the eigenbasis that
    /// carries the mass at the first slot (mirrored otherwise).
    Rank1 { mass_first: bool },
    /// Full-rank density: the quadratic root `phi0` fills the one free slot.
    Rank2 {
        phi0: f64,
        slacks: FeasibilitySlacks,
    },
}

/// Solve one factor. Expects data in a basis where `rho12` vanishes; the
/// returned matrices are expressed in that basis (not yet conjugated back).
pub fn stationarize_factor(f: &FactorData) -> Result<(Mat2, Mat2, FactorCase), CoreError> {
    let trace = f.rho11 + f.rho22;
    let floor = tol::FEASIBILITY_SLACK;
    if f.r12 < floor || f.r21 < floor || f.rho11 < floor || f.rho22 < floor {
        return Err(CoreError::InconsistentFactor {
            atom: f.atom,
            detail: format!(
                "negative density (rho11 {:.3e}, rho22 {:.3e}, r12 {:.3e}, r21 {:.3e})",
                f.rho11, f.rho22, f.r12, f.r21
            ),
        });
    }

    if f.rho11.min(f.rho22) <= tol::RANK_CLIFF * trace {
        // Rank one: the off-diagonal data must vanish with the small
        // eigenvalue; emit the unique exact pair.
        let mass_first = f.rho11 >= f.rho22;
        let (phi, psi) = if mass_first {
            (
                Mat2::diag(C64::from(f.r21), ZERO),
                Mat2::diag(C64::from(f.r12), ZERO),
            )
        } else {
            (
                Mat2::diag(ZERO, C64::from(f.r12)),
                Mat2::diag(ZERO, C64::from(f.r21)),
            )
        };
        return Ok((phi, psi, FactorCase::Rank1 { mass_first }));
    }

    let c = f.phi12.norm();
    let (root, cofactor) = phi0_pair(f.r21, f.rho22, c);
    let slacks = check_feasibility(f, root);
    if !slacks.feasible(floor) {
        return Err(CoreError::InconsistentFactor {
            atom: f.atom,
            detail: format!(
                "phi0 = {root:.6e} infeasible (slacks {:?}); data not from an OVF",
                slacks
            ),
        });
    }
    let phi = Mat2::new(
        C64::from(root),
        f.phi12,
        f.phi12.conj(),
        C64::from(cofactor),
    );
    let psi = Mat2::new(
        C64::from(f.rho11 - root),
        f.rho12 - f.phi12,
        (f.rho12 - f.phi12).conj(),
        C64::from(f.r21 - root),
    );
    Ok((phi, psi, FactorCase::Rank2 { phi0: root, slacks }))
}

/// Per-atom record of the solve.
#[derive(Debug, Clone)]
pub struct AtomSolve {
    pub atom: usize,
    pub data: FactorData,
    pub case: FactorCase,
}

/// Basis element index `(atom, i, j)` with 1-based unit indices.
pub type BasisIndex = (usize, usize, usize);

/// Residual report of the stationarity equality on all basis pairs.
#[derive(Debug, Clone)]
pub struct StationarityReport {
    pub max_residual: f64,
    /// The worst basis pair.
    pub worst_pair: Option<(BasisIndex, BasisIndex)>,
    /// Entry-wise residual of `phi + psi = rho`.
    pub decomposition_residual: f64,
    pub phi_min_eigenvalue: f64,
    pub psi_min_eigenvalue: f64,
}

impl StationarityReport {
    pub fn pass(&self, residual_tol: f64) -> bool {
        self.max_residual <= residual_tol
            && self.decomposition_residual <= tol::DECOMPOSITION_RESIDUAL
            && self.phi_min_eigenvalue >= tol::PSD_FLOOR
            && self.psi_min_eigenvalue >= tol::PSD_FLOOR
    }
}

/// Evaluate the stationarity equality on every pair of basis elements
/// (sufficient by sesquilinearity) and the decomposition identity.
pub fn check_stationarity(
    f: &VectorFieldTable,
    pair: &StationaryPair,
) -> Result<StationarityReport, CoreError> {
    if pair.phi.space != *f.space() || pair.psi.space != *f.space() {
        return Err(CoreError::InvalidSpace(
            "pair space does not match the field".into(),
        ));
    }
    let n = f.atoms();
    let mut max_residual = 0.0f64;
    let mut worst_pair = None;
    for k in 0..n {
        let nu = f.space().weight(k);
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..n {
                    for m in 0..2 {
                        for nn in 0..2 {
                            let lhs = linalg::inner(f.basis(k, i, j), f.basis(l, m, nn));
                            // y* x = delta_{kl} delta_{mi} pi_k eps_{nn, j};
                            // x y* = delta_{kl} delta_{j nn} pi_k eps_{i m}.
                            let mut rhs = ZERO;
                            if k == l {
                                if m == i {
                                    rhs += C64::from(nu) * pair.phi.entries[k].e[j][nn];
                                }
                                if j == nn {
                                    rhs += C64::from(nu) * pair.psi.entries[k].e[m][i];
                                }
                            }
                            let res = (lhs - rhs).norm();
                            if res > max_residual {
                                max_residual = res;
                                worst_pair =
                                    Some(((k, i + 1, j + 1), (l, m + 1, nn + 1)));
                            }
                        }
                    }
                }
            }
        }
    }
    let rho = rho_functional(f);
    Ok(StationarityReport {
        max_residual,
        worst_pair,
        decomposition_residual: pair.decomposition_residual(&rho),
        phi_min_eigenvalue: pair.phi.min_eigenvalue(),
        psi_min_eigenvalue: pair.psi.min_eigenvalue(),
    })
}

/// Extract per-atom factor data, diagonalizing the density matrix where its
/// off-diagonal entry is nonzero. The returned data is expressed in the
/// diagonalized basis, with the unitary recorded for conjugating back.
pub fn harvest_factor_data(f: &VectorFieldTable) -> Vec<FactorData> {
    let rho = rho_functional(f);
    (0..f.atoms())
        .map(|k| {
            let h = hermitian_part(&rho.entries[k]);
            if h.e[0][1].norm() > tol::PHASE_FLOOR {
                let (_, u) = eig2_hermitian(&h);
                let g = f.twist_atom(k, &u);
                measure_factor(&g, k, u)
            } else {
                measure_factor(f, k, Mat2::identity())
            }
        })
        .collect()
}

fn hermitian_part(m: &Mat2) -> Mat2 {
    m.add(&m.adjoint()).scale(C64::from(0.5))
}

fn measure_factor(t: &VectorFieldTable, k: usize, basis_unitary: Mat2) -> FactorData {
    let nu = t.space().weight(k);
    let g11_one = t.unit_value(0, 0);
    let g22_one = t.unit_value(1, 1);
    let g12_one = t.unit_value(0, 1);
    let g21_one = t.unit_value(1, 0);
    let mut total = g11_one.clone();
    linalg::axpy(&mut total, linalg::ONE, &g22_one);
    FactorData {
        atom: k,
        rho11: linalg::inner(t.basis(k, 0, 0), &g11_one).re / nu,
        rho22: linalg::inner(t.basis(k, 1, 1), &g22_one).re / nu,
        rho12: linalg::inner(t.basis(k, 1, 0), &total) / nu,
        r12: linalg::inner(t.basis(k, 0, 1), &g12_one).re / nu,
        r21: linalg::inner(t.basis(k, 1, 0), &g21_one).re / nu,
        phi12: linalg::inner(t.basis(k, 1, 0), &g22_one) / nu,
        basis_unitary,
    }
}

/// Outcome of the end-to-end solve: the pair, the per-atom records, and the
/// verification report on the result. Construction never silently succeeds:
/// the report always carries the measured residuals.
#[derive(Debug, Clone)]
pub struct StationarizeOutcome {
    pub pair: StationaryPair,
    pub atoms: Vec<AtomSolve>,
    pub report: StationarityReport,
}

impl StationarizeOutcome {
    pub fn pass(&self, residual_tol: f64) -> bool {
        self.report.pass(residual_tol)
    }
}

/// Compute a stationary pair for a field: per atom, diagonalize the density
/// matrix if needed, solve the factor, and conjugate the solution back.
/// The assembled pair is then verified on all basis pairs.
///
/// Errors signal structurally impossible input (a factor whose data cannot
/// come from an OVF); residual quality is reported, not raised.
pub fn stationarize(f: &VectorFieldTable) -> Result<StationarizeOutcome, CoreError> {
    let mut phi_entries = Vec::with_capacity(f.atoms());
    let mut psi_entries = Vec::with_capacity(f.atoms());
    let mut atoms = Vec::with_capacity(f.atoms());
    for data in harvest_factor_data(f) {
        let (phi_m, psi_m, case) = stationarize_factor(&data)?;
        let u = data.basis_unitary;
        phi_entries.push(u.mul(&phi_m).mul(&u.adjoint()));
        psi_entries.push(u.mul(&psi_m).mul(&u.adjoint()));
        atoms.push(AtomSolve {
            atom: data.atom,
            data,
            case,
        });
    }
    let pair = StationaryPair {
        phi: FunctionalDensity::new(f.space().clone(), phi_entries)?,
        psi: FunctionalDensity::new(f.space().clone(), psi_entries)?,
    };
    let report = check_stationarity(f, &pair)?;
    Ok(StationarizeOutcome { pair, atoms, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::measure::MeasureSpace;
    use approx::assert_abs_diff_eq;

    #[test]
    fn phi0_symmetric_case_equals_offdiagonal() {
        // r21 = rho22 makes the quadratic symmetric: phi0 = |phi12|.
        for c in [0.0, 0.1, 0.5, 2.0] {
            assert_abs_diff_eq!(phi0(0.4, 0.4, c), c, epsilon = 1e-15);
        }
    }

    #[test]
    fn phi0_degenerate_roots() {
        // c = 0: phi0 = max(0, r21 - rho22), exactly.
        assert_eq!(phi0(0.7, 0.2, 0.0), 0.7 - 0.2);
        assert_eq!(phi0(0.2, 0.7, 0.0), 0.0);
    }

    #[test]
    fn phi0_printed_value() {
        // r21 = 0.5, rho22 = 0.3, c = 0.1:
        // phi0 = (0.2 + sqrt(0.04 + 0.04)) / 2 = 0.1 + sqrt(0.02).
        let expect = 0.1 + 0.02f64.sqrt();
        assert_abs_diff_eq!(phi0(0.5, 0.3, 0.1), expect, epsilon = 1e-16);
        assert_abs_diff_eq!(phi0(0.5, 0.3, 0.1), 0.2414213562373095, epsilon = 1e-15);
    }

    #[test]
    fn phi0_quadratic_identity_is_stable() {
        // Including regimes with strong cancellation (tiny c, large |q|).
        let cases = [
            (0.5, 0.3, 0.1),
            (0.9, 0.1, 1e-8),
            (0.1, 0.9, 1e-8),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 1e-3),
            (0.3, 0.3, 1e-12),
        ];
        for (r21, rho22, c) in cases {
            let (root, cof) = phi0_pair(r21, rho22, c);
            let lhs = root * cof;
            let rel = (lhs - c * c).abs() / (c * c).max(1e-30);
            assert!(rel <= 1e-12, "identity residual {rel} at ({r21}, {rho22}, {c})");
            // cofactor agrees with the naive expression up to rounding
            assert_abs_diff_eq!(cof, root + rho22 - r21, epsilon = 1e-12);
        }
    }

    fn diag_factor(rho11: f64, rho22: f64, r12: f64, r21: f64, c: f64) -> FactorData {
        FactorData {
            atom: 0,
            rho11,
            rho22,
            rho12: ZERO,
            r12,
            r21,
            phi12: C64::from(c),
            basis_unitary: Mat2::identity(),
        }
    }

    #[test]
    fn feasibility_box_violation() {
        let f = diag_factor(0.5, 0.5, 0.6, 0.4, 0.0);
        let slacks = check_feasibility(&f, 0.45);
        assert!(slacks.box_upper < 0.0); // phi > min(rho11, r21) = 0.4
        assert!(!slacks.feasible(tol::FEASIBILITY_SLACK));
        let slacks = check_feasibility(&f, -0.1);
        assert!(slacks.box_lower < 0.0);
    }

    #[test]
    fn case1_unique_pair_is_feasible_edge() {
        // rho22 = 0, phi12 = 0: the box collapses to phi = r21.
        let f = diag_factor(1.0, 0.0, 0.3, 0.7, 0.0);
        let slacks = check_feasibility(&f, f.r21);
        assert!(slacks.feasible(tol::FEASIBILITY_SLACK), "{slacks:?}");
        let (lo, hi) = grid_feasible_interval(&f, tol::GRID_STEP, tol::FEASIBILITY_SLACK).unwrap();
        assert!(lo <= 0.7 + tol::GRID_STEP && hi >= 0.7 - tol::GRID_STEP);
    }

    #[test]
    fn factor_case1_matrices() {
        let f = diag_factor(1.0, 0.0, 0.3, 0.7, 0.0);
        let (phi, psi, case) = stationarize_factor(&f).unwrap();
        assert_eq!(case, FactorCase::Rank1 { mass_first: true });
        assert_eq!(phi, Mat2::diag(C64::from(0.7), ZERO));
        assert_eq!(psi, Mat2::diag(C64::from(0.3), ZERO));
        // mirrored mass
        let f = diag_factor(0.0, 1.0, 0.3, 0.7, 0.0);
        let (phi, psi, _) = stationarize_factor(&f).unwrap();
        assert_eq!(phi, Mat2::diag(ZERO, C64::from(0.3)));
        assert_eq!(psi, Mat2::diag(ZERO, C64::from(0.7)));
    }

    #[test]
    fn factor_case2_printed_example() {
        // phi12 = 0, r21 = 0.4, rho22 = 0.5, rho11 = 0.5, r12 = 0.6:
        // phi0 = 0, phi = diag(0, 0.1), psi = diag(0.5, 0.4).
        let f = diag_factor(0.5, 0.5, 0.6, 0.4, 0.0);
        let (phi, psi, case) = stationarize_factor(&f).unwrap();
        match case {
            FactorCase::Rank2 { phi0, .. } => assert_eq!(phi0, 0.0),
            other => panic!("expected rank-2, got {other:?}"),
        }
        assert!((phi.e[0][0].re - 0.0).abs() < 1e-15);
        assert!((phi.e[1][1].re - 0.1).abs() < 1e-15);
        assert!((psi.e[0][0].re - 0.5).abs() < 1e-15);
        assert!((psi.e[1][1].re - 0.4).abs() < 1e-15);
        // both PSD and phi + psi = diag(0.5, 0.5)
        assert!(phi.min_eigval_hermitian() >= 0.0);
        assert!(psi.min_eigval_hermitian() >= 0.0);
        let sum = phi.add(&psi);
        assert!((sum.e[0][0].re - 0.5).abs() < 1e-15);
        assert!((sum.e[1][1].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn factor_zero_atom() {
        let f = diag_factor(0.0, 0.0, 0.0, 0.0, 0.0);
        let (phi, psi, _) = stationarize_factor(&f).unwrap();
        assert_eq!(phi, Mat2::zero());
        assert_eq!(psi, Mat2::zero());
    }

    #[test]
    fn factor_rejects_impossible_data() {
        // rank-2 data violating the product estimate: |phi12| too large.
        let f = diag_factor(0.5, 0.5, 0.5, 0.5, 0.49);
        assert!(stationarize_factor(&f).is_err());
    }

    #[test]
    fn stationarize_single_rank1_atom() {
        // Single-atom rank-one instance reproduces the unique pair.
        let sp = MeasureSpace::uniform(1);
        let mut field = VectorFieldTable::zero(sp, 4);
        field.basis_mut(0, 0, 0)[0] = ONE;
        field.basis_mut(0, 0, 1)[1] = C64::from(0.3f64.sqrt());
        field.basis_mut(0, 1, 0)[2] = C64::from(0.7f64.sqrt());
        let out = stationarize(&field).unwrap();
        assert!(out.report.max_residual <= 1e-12, "{:?}", out.report);
        let phi = &out.pair.phi.entries[0];
        let psi = &out.pair.psi.entries[0];
        assert!((phi.e[0][0].re - 0.7).abs() < 1e-12);
        assert!((psi.e[0][0].re - 0.3).abs() < 1e-12);
        assert!(phi.e[1][1].norm() < 1e-12 && psi.e[1][1].norm() < 1e-12);
        assert!(out.pass(tol::STATIONARITY_RESIDUAL));
    }

    #[test]
    fn check_stationarity_detects_flipped_entry() {
        let sp = MeasureSpace::uniform(1);
        let mut field = VectorFieldTable::zero(sp, 4);
        field.basis_mut(0, 0, 0)[0] = ONE;
        field.basis_mut(0, 0, 1)[1] = C64::from(0.3f64.sqrt());
        field.basis_mut(0, 1, 0)[2] = C64::from(0.7f64.sqrt());
        let out = stationarize(&field).unwrap();
        let mut pair = out.pair.clone();
        // negate a diagonal entry of phi: the (2,1)x(2,1) pair must notice
        pair.phi.entries[0].e[0][0] = -pair.phi.entries[0].e[0][0];
        let rep = check_stationarity(&field, &pair).unwrap();
        assert!(rep.max_residual > 1.0, "expected a visible residual");
        assert!(!rep.pass(tol::STATIONARITY_RESIDUAL));
    }

    #[test]
    fn zero_field_zero_pair() {
        let field = VectorFieldTable::zero(MeasureSpace::uniform(2), 4);
        let out = stationarize(&field).unwrap();
        assert_eq!(out.report.max_residual, 0.0);
        assert_eq!(out.pair.phi.norm_max(), 0.0);
        assert_eq!(out.pair.psi.norm_max(), 0.0);
    }
}
