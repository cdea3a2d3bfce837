//! Level-set partition approximation of the decomposition parameter over a
//! simulated continuous base space `[0, 1]`.
//!
//! The scalar data of a field over a non-atomic base is modeled by
//! piecewise-polynomial profiles. For a refinement level `n`, each of the
//! three binned quantities (`rho11`, `r21`, `|phi12|`) is cut along the
//! thresholds `t/n`; the cells are the nonempty triple intersections of the
//! level sets, so each binned quantity oscillates less than `1/n` on every
//! cell. The per-cell closed-form root `phi0` of the averaged data gives a
//! simple function that is dominated by `min(rho11, r21)` and converges to
//! the pointwise root as `n` grows.
//!
//! Cell boundaries are computed exactly for pieces of degree <= 2 and by
//! sign-change bisection at `1e-12` for higher degrees, which keeps the
//! oscillation bound a construction property rather than an observation.

use crate::error::CoreError;
use crate::linalg::C64;
use crate::stationarity::{check_feasibility, phi0, FactorData, FeasibilitySlacks};
use crate::tol;

/// A real piecewise-polynomial function on `[0, 1]`: ascending breakpoints
/// (first 0, last 1) and one coefficient vector per piece, ascending powers
/// of the global coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    pub breakpoints: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    pub fn new(breakpoints: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        if breakpoints.len() < 2 || coeffs.len() + 1 != breakpoints.len() {
            return Err(CoreError::InvalidProfile(format!(
                "{} breakpoints vs {} pieces",
                breakpoints.len(),
                coeffs.len()
            )));
        }
        if (breakpoints[0] - 0.0).abs() > 1e-15
            || (breakpoints[breakpoints.len() - 1] - 1.0).abs() > 1e-15
        {
            return Err(CoreError::InvalidProfile(
                "domain must be exactly [0, 1]".into(),
            ));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(CoreError::InvalidProfile(
                "breakpoints must be strictly ascending".into(),
            ));
        }
        for c in &coeffs {
            if c.is_empty() || c.iter().any(|x| !x.is_finite()) {
                return Err(CoreError::InvalidProfile(
                    "each piece needs finite coefficients".into(),
                ));
            }
        }
        Ok(PiecewisePoly {
            breakpoints,
            coeffs,
        })
    }

    pub fn constant(v: f64) -> Self {
        PiecewisePoly {
            breakpoints: vec![0.0, 1.0],
            coeffs: vec![vec![v]],
        }
    }

    /// Piecewise-linear interpolant through `(x_i, y_i)` nodes.
    pub fn linear_nodes(nodes: &[(f64, f64)]) -> Result<Self, CoreError> {
        if nodes.len() < 2 {
            return Err(CoreError::InvalidProfile("need at least two nodes".into()));
        }
        let breakpoints: Vec<f64> = nodes.iter().map(|p| p.0).collect();
        let coeffs = nodes
            .windows(2)
            .map(|w| {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                vec![w[0].1 - slope * w[0].0, slope]
            })
            .collect();
        PiecewisePoly::new(breakpoints, coeffs)
    }

    fn piece_index(&self, x: f64) -> usize {
        // Half-open pieces [b_i, b_{i+1}), the last closed at 1.
        match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.coeffs.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.coeffs.len() - 1),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let piece = self.piece_index(x);
        horner(&self.coeffs[piece], x)
    }

    /// Exact integral over `[a, b]` (intersected with the domain).
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(0.0), b.min(1.0));
        if b <= a {
            return 0.0;
        }
        let mut acc = 0.0;
        for (p, c) in self.coeffs.iter().enumerate() {
            let lo = self.breakpoints[p].max(a);
            let hi = self.breakpoints[p + 1].min(b);
            if hi > lo {
                acc += antiderivative(c, hi) - antiderivative(c, lo);
            }
        }
        acc
    }

    /// All solutions of `f(x) = level` strictly inside `(a, b)`, piece by
    /// piece: closed form up to degree 2, bisection on sign changes above.
    pub fn level_crossings(&self, level: f64, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for (p, c) in self.coeffs.iter().enumerate() {
            let lo = self.breakpoints[p].max(a);
            let hi = self.breakpoints[p + 1].min(b);
            if hi <= lo {
                continue;
            }
            let mut shifted = c.clone();
            shifted[0] -= level;
            poly_roots_in(&shifted, lo, hi, &mut out);
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup_by(|x, y| (*x - *y).abs() <= 1e-13);
        out
    }

    pub fn range_hint(&self) -> (f64, f64) {
        // Bounds via dense sampling plus piece endpoints; used only to size
        // the threshold sweep, so a hint is enough.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut probe = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        for t in 0..=512 {
            probe(self.eval(t as f64 / 512.0));
        }
        for (p, c) in self.coeffs.iter().enumerate() {
            probe(horner(c, self.breakpoints[p]));
            probe(horner(c, self.breakpoints[p + 1]));
        }
        (lo, hi)
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * x + k)
}

fn antiderivative(c: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (p, k) in c.iter().enumerate().rev() {
        acc = (acc + k / (p + 1) as f64) * x;
    }
    acc
}

fn effective_degree(c: &[f64]) -> usize {
    c.iter()
        .rposition(|x| *x != 0.0)
        .unwrap_or(0)
}

/// Roots of the polynomial `c` strictly inside `(lo, hi)`, appended to `out`.
fn poly_roots_in(c: &[f64], lo: f64, hi: f64, out: &mut Vec<f64>) {
    match effective_degree(c) {
        0 => {} // constant: either no root or identically at the level
        1 => {
            let root = -c[0] / c[1];
            if root > lo && root < hi {
                out.push(root);
            }
        }
        2 => {
            let (a, b, k) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * k;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                // Numerically stable pairing of the two roots.
                let q = -0.5 * (b + b.signum() * sq);
                let mut roots = [q / a, if q != 0.0 { k / q } else { -b / (2.0 * a) }];
                if b == 0.0 {
                    roots = [sq / (2.0 * a), -sq / (2.0 * a)];
                }
                for r in roots {
                    if r.is_finite() && r > lo && r < hi {
                        out.push(r);
                    }
                }
            }
        }
        deg => {
            // Sign-change bisection on a subdivision fine enough for the
            // profile suites handled here.
            let cells = 64 * deg;
            let mut prev_x = lo;
            let mut prev_v = horner(c, lo);
            for t in 1..=cells {
                let x = lo + (hi - lo) * t as f64 / cells as f64;
                let v = horner(c, x);
                if prev_v == 0.0 && prev_x > lo {
                    out.push(prev_x);
                } else if prev_v * v < 0.0 {
                    out.push(bisect(c, prev_x, x));
                }
                prev_x = x;
                prev_v = v;
            }
        }
    }
}

fn bisect(c: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = horner(c, lo);
    for _ in 0..200 {
        if hi - lo <= tol::ROOT_BISECTION {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = horner(c, mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Scalar data of a field over the simulated base `[0, 1]`: the four real
/// densities plus the complex off-diagonal value, all piecewise-polynomial,
/// with unit total measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldProfile {
    pub rho11: PiecewisePoly,
    pub rho22: PiecewisePoly,
    pub r12: PiecewisePoly,
    pub r21: PiecewisePoly,
    pub phi12_re: PiecewisePoly,
    pub phi12_im: PiecewisePoly,
}

/// Validation grid size for the pointwise profile constraints.
const VALIDATION_GRID: usize = 4096;

impl ScalarFieldProfile {
    /// Validates on a dense grid: nonnegative densities, the trace identity
    /// `r12 + r21 = rho11 + rho22`, and the trace-scaled product estimate
    /// `|phi12|^2 (rho11 + rho22)^2 <= r12 r21 rho11 rho22` (at unit trace
    /// this is the plain four-factor estimate, and it implies the pairwise
    /// bounds that keep the per-cell root inside its admissible box).
    pub fn new(
        rho11: PiecewisePoly,
        rho22: PiecewisePoly,
        r12: PiecewisePoly,
        r21: PiecewisePoly,
        phi12_re: PiecewisePoly,
        phi12_im: PiecewisePoly,
        total_measure: f64,
    ) -> Result<Self, CoreError> {
        if (total_measure - 1.0).abs() > 1e-15 {
            return Err(CoreError::InvalidProfile(format!(
                "total measure must be 1, got {total_measure}"
            )));
        }
        let p = ScalarFieldProfile {
            rho11,
            rho22,
            r12,
            r21,
            phi12_re,
            phi12_im,
        };
        for t in 0..=VALIDATION_GRID {
            let x = t as f64 / VALIDATION_GRID as f64;
            let (a, b) = (p.rho11.eval(x), p.rho22.eval(x));
            let (r12, r21) = (p.r12.eval(x), p.r21.eval(x));
            let c2 = p.phi12_re.eval(x).powi(2) + p.phi12_im.eval(x).powi(2);
            for (name, v) in [("rho11", a), ("rho22", b), ("r12", r12), ("r21", r21)] {
                if v < -tol::PROFILE_RESIDUAL {
                    return Err(CoreError::InvalidProfile(format!(
                        "{name}({x}) = {v} is negative"
                    )));
                }
            }
            let trace_res = (r12 + r21 - a - b).abs();
            if trace_res > tol::PROFILE_RESIDUAL {
                return Err(CoreError::InvalidProfile(format!(
                    "trace identity off by {trace_res:.3e} at {x}"
                )));
            }
            let t_sum = a + b;
            let slack = r12 * r21 * a * b - c2 * t_sum * t_sum;
            if slack < -tol::PROFILE_RESIDUAL {
                return Err(CoreError::InvalidProfile(format!(
                    "product estimate violated by {:.3e} at {x}",
                    -slack
                )));
            }
        }
        Ok(p)
    }

    pub fn abs_phi12(&self, x: f64) -> f64 {
        (self.phi12_re.eval(x).powi(2) + self.phi12_im.eval(x).powi(2)).sqrt()
    }

    /// The pointwise limit of the partition approximants.
    pub fn phi_limit(&self, x: f64) -> f64 {
        phi0(self.r21.eval(x), self.rho22.eval(x), self.abs_phi12(x))
    }

    /// Factor view of the profile at a point (diagonal data, `rho12 = 0`).
    pub fn factor_at(&self, x: f64) -> FactorData {
        FactorData {
            atom: 0,
            rho11: self.rho11.eval(x),
            rho22: self.rho22.eval(x),
            rho12: C64::from(0.0),
            r12: self.r12.eval(x),
            r21: self.r21.eval(x),
            phi12: C64::from(self.abs_phi12(x)),
            basis_unitary: crate::linalg::Mat2::identity(),
        }
    }

    /// All points where any binned quantity crosses a bin boundary of width
    /// `1/n`, together with the profile's own breakpoints.
    fn cut_points(&self, n: usize) -> Vec<f64> {
        let mut cuts = vec![0.0, 1.0];
        for f in [&self.rho11, &self.r21] {
            cuts.extend(f.breakpoints.iter().copied());
            let (lo, hi) = f.range_hint();
            let t_lo = (lo * n as f64).floor().max(0.0) as i64;
            let t_hi = (hi * n as f64).ceil() as i64 + 1;
            for t in t_lo..=t_hi {
                cuts.extend(f.level_crossings(t as f64 / n as f64, 0.0, 1.0));
            }
        }
        // |phi12| crossings: roots of re^2 + im^2 - (t/n)^2, polynomial.
        let sq = poly_add(
            &poly_mul(&self.phi12_re, &self.phi12_re),
            &poly_mul(&self.phi12_im, &self.phi12_im),
        );
        cuts.extend(sq.breakpoints.iter().copied());
        let (_, hi) = sq.range_hint();
        let m_hi = (hi.max(0.0).sqrt() * n as f64).ceil() as i64 + 1;
        for m in 0..=m_hi {
            let level = (m as f64 / n as f64).powi(2);
            cuts.extend(sq.level_crossings(level, 0.0, 1.0));
        }
        cuts.retain(|x| (0.0..=1.0).contains(x));
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
        cuts
    }
}

/// Re-express a piecewise polynomial on a refinement of its breakpoint set.
/// Coefficients are in the global coordinate, so splitting a piece copies
/// its coefficient vector verbatim.
fn refine_onto(p: &PiecewisePoly, cuts: &[f64]) -> PiecewisePoly {
    let mut breakpoints: Vec<f64> = p
        .breakpoints
        .iter()
        .chain(cuts.iter())
        .copied()
        .collect();
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();
    let coeffs = breakpoints
        .windows(2)
        .map(|w| p.coeffs[p.piece_index(0.5 * (w[0] + w[1]))].clone())
        .collect();
    PiecewisePoly {
        breakpoints,
        coeffs,
    }
}

fn align(a: &PiecewisePoly, b: &PiecewisePoly) -> (PiecewisePoly, PiecewisePoly) {
    (refine_onto(a, &b.breakpoints), refine_onto(b, &a.breakpoints))
}

/// Product of two piecewise polynomials on the merged breakpoint grid (used
/// for the modulus-squared of the off-diagonal profile).
fn poly_mul(a: &PiecewisePoly, b: &PiecewisePoly) -> PiecewisePoly {
    let (a, b) = align(a, b);
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(ca, cb)| {
            let mut out = vec![0.0; ca.len() + cb.len() - 1];
            for (i, x) in ca.iter().enumerate() {
                for (j, y) in cb.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        })
        .collect();
    PiecewisePoly {
        breakpoints: a.breakpoints.clone(),
        coeffs,
    }
}

fn poly_add(a: &PiecewisePoly, b: &PiecewisePoly) -> PiecewisePoly {
    let (a, b) = align(a, b);
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(ca, cb)| {
            let mut out = vec![0.0; ca.len().max(cb.len())];
            for (i, x) in ca.iter().enumerate() {
                out[i] += x;
            }
            for (i, x) in cb.iter().enumerate() {
                out[i] += x;
            }
            out
        })
        .collect();
    PiecewisePoly {
        breakpoints: a.breakpoints.clone(),
        coeffs,
    }
}

/// One cell of a level partition: the triple bin index, its intervals, and
/// the averaged field values.
#[derive(Debug, Clone)]
pub struct Cell {
    /// Bin indices of (`rho11`, `r21`, `|phi12|`).
    pub index: (i64, i64, i64),
    /// Disjoint half-open intervals whose union is the cell.
    pub intervals: Vec<(f64, f64)>,
    pub measure: f64,
    pub avg_rho11: f64,
    pub avg_rho22: f64,
    pub avg_r12: f64,
    pub avg_r21: f64,
    /// Average of `|phi12|` (the binned quantity itself, so the in-cell
    /// oscillation bound carries over to it).
    pub avg_abs_phi12: f64,
    /// Complex average of `phi12`, for reporting.
    pub avg_phi12: C64,
}

/// A level-`n` partition of `[0, 1]` into level-set cells.
#[derive(Debug, Clone)]
pub struct Partition {
    pub level: usize,
    pub cells: Vec<Cell>,
}

impl Partition {
    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// Index of the cell containing `x` (half-open interval semantics).
    pub fn locate(&self, x: f64) -> Option<usize> {
        self.cells.iter().position(|c| {
            c.intervals
                .iter()
                .any(|(lo, hi)| x >= *lo && (x < *hi || (*hi == 1.0 && x == 1.0)))
        })
    }
}

/// Integral of `|phi12|` over an interval. Exact when the modulus is
/// piecewise constant (constant complex profiles) or the imaginary part
/// vanishes (split the real part at its sign changes); composite
/// Gauss-Legendre otherwise.
fn integrate_abs_phi12(p: &ScalarFieldProfile, lo: f64, hi: f64) -> f64 {
    let sq = poly_add(
        &poly_mul(&p.phi12_re, &p.phi12_re),
        &poly_mul(&p.phi12_im, &p.phi12_im),
    );
    let modulus_constant = (0..sq.coeffs.len()).all(|i| {
        effective_degree(&sq.coeffs[i]) == 0 && sq.coeffs[i][0] == sq.coeffs[0][0]
    });
    if modulus_constant {
        return sq.coeffs[0][0].max(0.0).sqrt() * (hi - lo);
    }
    let im_zero = p
        .phi12_im
        .coeffs
        .iter()
        .all(|c| c.iter().all(|x| *x == 0.0));
    if im_zero {
        let mut cuts = vec![lo, hi];
        cuts.extend(p.phi12_re.level_crossings(0.0, lo, hi));
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            acc += p.phi12_re.integrate(w[0], w[1]).abs();
        }
        acc
    } else {
        // 16-point Gauss-Legendre on 8 subdivisions.
        const NODES: [(f64, f64); 8] = [
            (0.0950125098376374, 0.1894506104550685),
            (0.2816035507792589, 0.1826034150449236),
            (0.4580167776572274, 0.1691565193950025),
            (0.6178762444026438, 0.1495959888165767),
            (0.755404408355003, 0.1246289712555339),
            (0.8656312023878318, 0.0951585116824928),
            (0.9445750230732326, 0.0622535239386479),
            (0.9894009349916499, 0.0271524594117541),
        ];
        let mut acc = 0.0;
        for s in 0..8 {
            let a = lo + (hi - lo) * s as f64 / 8.0;
            let b = lo + (hi - lo) * (s + 1) as f64 / 8.0;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in NODES {
                acc += half * w * (p.abs_phi12(mid + half * x) + p.abs_phi12(mid - half * x));
            }
        }
        acc
    }
}

/// Build the level-`n` partition: cut `[0, 1]` at every bin-boundary
/// crossing of the three binned quantities, classify each elementary
/// interval by its bin triple at the midpoint, and merge intervals with the
/// same triple into cells with exactly-integrated averages.
pub fn build_partition(p: &ScalarFieldProfile, n: usize) -> Result<Partition, CoreError> {
    if n == 0 {
        return Err(CoreError::Domain("level must be at least 1".into()));
    }
    let cuts = p.cut_points(n);
    let mut cells: Vec<Cell> = Vec::new();
    let mut by_index = std::collections::BTreeMap::<(i64, i64, i64), usize>::new();
    let bin = |v: f64| -> i64 { (v * n as f64).floor().max(0.0) as i64 };
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let index = (
            bin(p.rho11.eval(mid)),
            bin(p.r21.eval(mid)),
            bin(p.abs_phi12(mid)),
        );
        let slot = *by_index.entry(index).or_insert_with(|| {
            cells.push(Cell {
                index,
                intervals: Vec::new(),
                measure: 0.0,
                avg_rho11: 0.0,
                avg_rho22: 0.0,
                avg_r12: 0.0,
                avg_r21: 0.0,
                avg_abs_phi12: 0.0,
                avg_phi12: C64::from(0.0),
            });
            cells.len() - 1
        });
        let cell = &mut cells[slot];
        cell.intervals.push((lo, hi));
        cell.measure += hi - lo;
        cell.avg_rho11 += p.rho11.integrate(lo, hi);
        cell.avg_rho22 += p.rho22.integrate(lo, hi);
        cell.avg_r12 += p.r12.integrate(lo, hi);
        cell.avg_r21 += p.r21.integrate(lo, hi);
        cell.avg_abs_phi12 += integrate_abs_phi12(p, lo, hi);
        cell.avg_phi12 += C64::new(
            p.phi12_re.integrate(lo, hi),
            p.phi12_im.integrate(lo, hi),
        );
    }
    for c in &mut cells {
        c.avg_rho11 /= c.measure;
        c.avg_rho22 /= c.measure;
        c.avg_r12 /= c.measure;
        c.avg_r21 /= c.measure;
        c.avg_abs_phi12 /= c.measure;
        c.avg_phi12 /= C64::from(c.measure);
    }
    // Deterministic order: by bin triple.
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by_key(|&i| cells[i].index);
    let cells = order.into_iter().map(|i| cells[i].clone()).collect();
    Ok(Partition { level: n, cells })
}

/// The partition approximant as a simple function, with its per-cell values
/// and the domination bound `max{0, r21 - rho22} <= value <= min{rho11, r21}`
/// evaluated on the averaged data.
#[derive(Debug, Clone)]
pub struct SimpleFunction {
    pub level: usize,
    /// `(intervals, value)` per cell, in partition order.
    pub pieces: Vec<(Vec<(f64, f64)>, f64)>,
    /// Flat interval index for evaluation.
    index: Vec<(f64, f64, usize)>,
}

impl SimpleFunction {
    pub fn eval(&self, x: f64) -> f64 {
        let pos = self
            .index
            .partition_point(|(lo, _, _)| *lo <= x)
            .saturating_sub(1);
        let (lo, hi, cell) = self.index[pos];
        debug_assert!(x >= lo && (x < hi || x == 1.0));
        self.pieces[cell].1
    }
}

/// Violation record of the per-cell domination bound.
#[derive(Debug, Clone)]
pub struct BoundViolation {
    pub cell: usize,
    pub index: (i64, i64, i64),
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Compute the simple function `phi^(n)` with the per-cell closed-form root,
/// and check the domination bound on every cell.
pub fn phi_delta(part: &Partition) -> (SimpleFunction, Vec<BoundViolation>) {
    let mut pieces = Vec::with_capacity(part.cells.len());
    let mut violations = Vec::new();
    for (ci, c) in part.cells.iter().enumerate() {
        let value = phi0(c.avg_r21, c.avg_rho22, c.avg_abs_phi12);
        let lower = (c.avg_r21 - c.avg_rho22).max(0.0);
        let upper = c.avg_rho11.min(c.avg_r21);
        if value < lower - tol::FEASIBILITY_SLACK.abs() || value > upper + tol::FEASIBILITY_SLACK.abs()
        {
            violations.push(BoundViolation {
                cell: ci,
                index: c.index,
                value,
                lower,
                upper,
            });
        }
        pieces.push((c.intervals.clone(), value));
    }
    let mut index: Vec<(f64, f64, usize)> = pieces
        .iter()
        .enumerate()
        .flat_map(|(ci, (ivs, _))| ivs.iter().map(move |&(lo, hi)| (lo, hi, ci)))
        .collect();
    index.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (
        SimpleFunction {
            level: part.level,
            pieces,
            index,
        },
        violations,
    )
}

/// Per-level convergence data.
#[derive(Debug, Clone)]
pub struct LevelRow {
    pub level: usize,
    pub cells: usize,
    pub sup_error: f64,
    pub l1_error: f64,
    pub bound_violations: usize,
    /// Max violation of the dominating bound
    /// `phi^(n) <= min(rho11, r21) + 2/n` on the sample grid.
    pub domination_excess: f64,
}

/// Convergence report across levels.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<LevelRow>,
    /// Worst feasibility slack of the pointwise limit on the sample grid.
    pub limit_min_slack: f64,
    /// `integral of the limit <= integral of min(rho11, r21)` margin.
    pub domination_integral_margin: f64,
}

impl ConvergenceReport {
    pub fn sup_errors_nonincreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].sup_error <= w[0].sup_error + 1e-15)
    }

    pub fn total_bound_violations(&self) -> usize {
        self.rows.iter().map(|r| r.bound_violations).sum()
    }
}

/// Sample count for sup/L1 distances in the convergence report.
const SAMPLE_CELLS: usize = 40_000;

/// Evaluate the approximants against the pointwise limit across the given
/// levels: sup and L1 distances on a dense midpoint grid (augmented with
/// points hugging every cell boundary), the per-cell bound, the dominating
/// bound with oscillation slack `2/n`, and feasibility of the limit.
pub fn convergence_report(
    p: &ScalarFieldProfile,
    levels: &[usize],
) -> Result<ConvergenceReport, CoreError> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoreError::Domain("levels must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let part = build_partition(p, n)?;
        let (simple, violations) = phi_delta(&part);
        let mut sup: f64 = 0.0;
        let mut l1 = 0.0;
        let mut domination: f64 = 0.0;
        let slack = 2.0 / n as f64;
        let h = 1.0 / SAMPLE_CELLS as f64;
        for t in 0..SAMPLE_CELLS {
            let x = (t as f64 + 0.5) * h;
            let d = (simple.eval(x) - p.phi_limit(x)).abs();
            sup = sup.max(d);
            l1 += d * h;
            let dom = simple.eval(x) - p.rho11.eval(x).min(p.r21.eval(x)) - slack;
            domination = domination.max(dom);
        }
        // Hug the cell boundaries from both sides.
        for (lo, hi, _) in &simple.index {
            for x in [lo + 1e-9, hi - 1e-9] {
                if (0.0..=1.0).contains(&x) {
                    sup = sup.max((simple.eval(x) - p.phi_limit(x)).abs());
                }
            }
        }
        rows.push(LevelRow {
            level: n,
            cells: part.cells.len(),
            sup_error: sup,
            l1_error: l1,
            bound_violations: violations.len(),
            domination_excess: domination,
        });
    }

    // Pointwise feasibility of the limit and integrability domination.
    let mut limit_min_slack = f64::INFINITY;
    let grid = 4096;
    let mut integral_limit = 0.0;
    let mut integral_dominator = 0.0;
    for t in 0..grid {
        let x = (t as f64 + 0.5) / grid as f64;
        let f = p.factor_at(x);
        let slacks: FeasibilitySlacks = check_feasibility(&f, p.phi_limit(x));
        limit_min_slack = limit_min_slack.min(slacks.min());
        integral_limit += p.phi_limit(x) / grid as f64;
        integral_dominator += p.rho11.eval(x).min(p.r21.eval(x)) / grid as f64;
    }
    Ok(ConvergenceReport {
        rows,
        limit_min_slack,
        domination_integral_margin: integral_dominator - integral_limit,
    })
}

/// A fixed suite of piecewise-linear test profiles (trace-normalized, all
/// constraints strict), plus their names. The fields span wide value ranges
/// so every refinement level introduces new cuts.
pub fn standard_profile_suite() -> Vec<(String, ScalarFieldProfile)> {
    let mk = |name: &str,
              rho11: &[(f64, f64)],
              r21: &[(f64, f64)],
              c: &[(f64, f64)]|
     -> (String, ScalarFieldProfile) {
        let complement = |nodes: &[(f64, f64)]| -> Vec<(f64, f64)> {
            nodes.iter().map(|&(x, y)| (x, 1.0 - y)).collect()
        };
        let p = ScalarFieldProfile::new(
            PiecewisePoly::linear_nodes(rho11).unwrap(),
            PiecewisePoly::linear_nodes(&complement(rho11)).unwrap(),
            PiecewisePoly::linear_nodes(&complement(r21)).unwrap(),
            PiecewisePoly::linear_nodes(r21).unwrap(),
            PiecewisePoly::linear_nodes(c).unwrap(),
            PiecewisePoly::constant(0.0),
            1.0,
        )
        .unwrap();
        (name.to_string(), p)
    };
    vec![
        mk(
            "ramp",
            &[(0.0, 0.1), (1.0, 0.9)],
            &[(0.0, 0.8), (1.0, 0.15)],
            &[(0.0, 0.02), (1.0, 0.05)],
        ),
        mk(
            "tent",
            &[(0.0, 0.15), (0.5, 0.85), (1.0, 0.2)],
            &[(0.0, 0.25), (1.0, 0.75)],
            &[(0.0, 0.04), (0.5, 0.01), (1.0, 0.04)],
        ),
        mk(
            "zigzag",
            &[(0.0, 0.2), (0.25, 0.7), (0.5, 0.3), (0.75, 0.8), (1.0, 0.25)],
            &[(0.0, 0.7), (0.4, 0.2), (1.0, 0.85)],
            &[(0.0, 0.03), (1.0, 0.03)],
        ),
        mk(
            "plateau",
            &[(0.0, 0.15), (0.4, 0.75), (0.6, 0.75), (1.0, 0.2)],
            &[(0.0, 0.7), (1.0, 0.2)],
            &[(0.0, 0.025), (1.0, 0.025)],
        ),
        mk(
            "crossing",
            &[(0.0, 0.85), (0.3, 0.25), (0.7, 0.6), (1.0, 0.1)],
            &[(0.0, 0.12), (0.5, 0.88), (1.0, 0.3)],
            &[(0.0, 0.02), (0.5, 0.035), (1.0, 0.015)],
        ),
    ]
}
