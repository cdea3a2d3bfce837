//! The identity suite an orthogonal vector field must satisfy, with witness
//! reporting.
//!
//! Verification never raises on a mathematical failure: each check returns a
//! structured record with the worst residual and a witness describing where
//! it occurred, so callers (and the CLI) can emit witness tables. Residuals
//! are normalized by the operand norms with an absolute floor, making the
//! checks scale-free on perturbed inputs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::field::{r_densities, rho_functional, VectorFieldTable};
use crate::linalg::{self, C64, ONE};
use crate::measure::{BlockElement, CenterElement};
use crate::projection::{materialize, sample_orthogonal_pair};
use crate::tol;

/// One named check: worst normalized residual, pass flag, witnesses.
#[derive(Debug, Clone)]
pub struct CheckRecord {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
}

impl CheckRecord {
    fn new(name: &str, tolerance: f64) -> Self {
        CheckRecord {
            name: name.to_string(),
            max_residual: 0.0,
            tolerance,
            pass: true,
            witnesses: Vec::new(),
        }
    }

    fn record(&mut self, residual: f64, witness: impl FnOnce() -> Witness) {
        if residual > self.max_residual {
            self.max_residual = residual;
        }
        if residual > self.tolerance {
            self.pass = false;
            if self.witnesses.len() < 8 {
                self.witnesses.push(witness());
            }
        }
    }
}

/// Where a residual was observed.
#[derive(Debug, Clone)]
pub struct Witness {
    pub identity: String,
    pub atom: Option<usize>,
    pub detail: String,
    pub residual: f64,
}

/// Aggregate over several checks.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckRecord>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&CheckRecord> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .max_by(|a, b| a.max_residual.partial_cmp(&b.max_residual).unwrap())
    }
}

fn normalized(residual: f64, scale: f64) -> f64 {
    residual / scale.max(tol::NORM_FLOOR)
}

/// Check the defining property on projections: `pq = 0` implies
/// `<F(p), F(q)> = 0`. Draws `samples` exactly-orthogonal pairs from the
/// canonical sampler and sweeps a deterministic family of matrix-unit
/// derived orthogonal pairs. The residual for a pair is
/// `|<F(p),F(q)>| / max(||F(p)|| * ||F(q)||, floor)`.
pub fn verify_orthogonality<R: Rng>(
    f: &VectorFieldTable,
    samples: usize,
    rng: &mut R,
    tolerance: f64,
) -> CheckRecord {
    let mut check = CheckRecord::new("orthogonality", tolerance);
    let n = f.atoms();

    let test_pair = |fp: &[C64], fq: &[C64], detail: &dyn Fn() -> String, atom: Option<usize>, check: &mut CheckRecord| {
        let ip = linalg::inner(fp, fq).norm();
        let scale = linalg::norm(fp) * linalg::norm(fq);
        let res = normalized(ip, scale);
        check.record(res, || Witness {
            identity: "pq = 0 => <F(p), F(q)> = 0".into(),
            atom,
            detail: detail(),
            residual: res,
        });
    };

    // Deterministic sweep: diagonal matrix-unit projections on single atoms
    // against each other and against complements.
    let id = BlockElement::identity(n);
    for k in 0..n {
        for i in 0..2 {
            let mut p = BlockElement::zero(n);
            p.blocks[k].e[i][i] = ONE;
            let fp = f.evaluate(&p).unwrap();
            // complement I - p
            let comp = id.sub(&p);
            let fcomp = f.evaluate(&comp).unwrap();
            test_pair(&fp, &fcomp, &|| format!("pi_{k} eps_{}{} vs complement", i + 1, i + 1), Some(k), &mut check);
            for l in 0..n {
                for j in 0..2 {
                    if k == l && i == j {
                        continue;
                    }
                    let mut q = BlockElement::zero(n);
                    q.blocks[l].e[j][j] = ONE;
                    let fq = f.evaluate(&q).unwrap();
                    test_pair(
                        &fp,
                        &fq,
                        &|| format!("pi_{k} eps_{}{} vs pi_{l} eps_{}{}", i + 1, i + 1, j + 1, j + 1),
                        Some(k),
                        &mut check,
                    );
                }
            }
        }
    }

    // Sampled canonical pairs.
    for s in 0..samples {
        let (p, q) = sample_orthogonal_pair(f.space(), rng);
        let fp = f.evaluate(&materialize(&p)).unwrap();
        let fq = f.evaluate(&materialize(&q)).unwrap();
        test_pair(&fp, &fq, &|| format!("sampled canonical pair #{s}"), None, &mut check);
    }

    check
}

fn random_center<R: Rng>(n: usize, rng: &mut R) -> CenterElement {
    let dist = StandardNormal;
    CenterElement::new(
        (0..n)
            .map(|_| C64::new(dist.sample(rng), dist.sample(rng)))
            .collect(),
    )
}

fn random_selfadjoint_block<R: Rng>(n: usize, rng: &mut R) -> BlockElement {
    let dist = StandardNormal;
    BlockElement::new(
        (0..n)
            .map(|_| {
                let d0: f64 = dist.sample(rng);
                let d1: f64 = dist.sample(rng);
                let off = C64::new(dist.sample(rng), dist.sample(rng));
                crate::linalg::Mat2::new(C64::from(d0), off, off.conj(), C64::from(d1))
            })
            .collect(),
    )
}

/// Verify the four reduction identities together with the derived
/// equalities for `||F(x)||^2`, the symmetrized product rule, disjointness
/// annihilation, and the mixed identity at a random center element and its
/// two canonical specializations.
pub fn verify_reduction_identities<R: Rng>(
    f: &VectorFieldTable,
    trials: usize,
    rng: &mut R,
    tolerance: f64,
) -> VerifyReport {
    let n = f.atoms();
    let red: Vec<_> = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| f.reduction(i, j))
        .collect();
    let unit: Vec<_> = red.iter().map(|r| r.unit_value()).collect();
    let slot = |i: usize, j: usize| i * 2 + j;

    let mut c_cross = CheckRecord::new("cross annihilation", tolerance);
    let mut c_balance = CheckRecord::new("norm balance", tolerance);
    let mut c_module = CheckRecord::new("module property", tolerance);
    let mut c_offdiag = CheckRecord::new("off-diagonal symmetry", tolerance);
    let mut c_sq = CheckRecord::new("norm identity for squares", tolerance);
    let mut c_sym = CheckRecord::new("symmetrized product rule", tolerance);
    let mut c_disj = CheckRecord::new("disjoint annihilation", tolerance);
    let mut c_mixed = CheckRecord::new("mixed off-diagonal identity", tolerance);

    // Off-diagonal symmetry on all atomic projections:
    // <F_12(pi), F_11(1)> = <F_22(1), F_21(pi)> and
    // <F_21(pi), F_11(1)> = <F_22(1), F_12(pi)>.
    for k in 0..n {
        let pairs = [
            (slot(0, 1), slot(0, 0), slot(1, 1), slot(1, 0)),
            (slot(1, 0), slot(0, 0), slot(1, 1), slot(0, 1)),
        ];
        for (a, b, c, d) in pairs {
            let lhs = linalg::inner(&red[a].vectors[k], &unit[b]);
            let rhs = linalg::inner(&unit[c], &red[d].vectors[k]);
            let scale = linalg::norm(&red[a].vectors[k]) * linalg::norm(&unit[b])
                + linalg::norm(&unit[c]) * linalg::norm(&red[d].vectors[k]);
            let res = normalized((lhs - rhs).norm(), scale);
            c_offdiag.record(res, || Witness {
                identity: "off-diagonal symmetry".into(),
                atom: Some(k),
                detail: format!("basis slots {a} vs {d}"),
                residual: res,
            });
        }
    }

    for t in 0..trials {
        let a = random_center(n, rng);
        let b = random_center(n, rng);

        // cross annihilation: <F_11(a), F_22(b)> = <F_12(a), F_21(b)> = 0
        for (x, y) in [(slot(0, 0), slot(1, 1)), (slot(0, 1), slot(1, 0))] {
            let fa = red[x].evaluate(&a).unwrap();
            let fb = red[y].evaluate(&b).unwrap();
            let res = normalized(
                linalg::inner(&fa, &fb).norm(),
                linalg::norm(&fa) * linalg::norm(&fb),
            );
            c_cross.record(res, || Witness {
                identity: "cross annihilation".into(),
                atom: None,
                detail: format!("trial {t}, slots {x} vs {y}"),
                residual: res,
            });
        }

        // norm balance: ||F_12(a)||^2 + ||F_21(a)||^2 = ||F_11(a)||^2 + ||F_22(a)||^2
        let norms: Vec<f64> = red
            .iter()
            .map(|r| linalg::norm_sqr(&r.evaluate(&a).unwrap()))
            .collect();
        let lhs = norms[slot(0, 1)] + norms[slot(1, 0)];
        let rhs = norms[slot(0, 0)] + norms[slot(1, 1)];
        let res = normalized((lhs - rhs).abs(), lhs + rhs);
        c_balance.record(res, || Witness {
            identity: "norm balance".into(),
            atom: None,
            detail: format!("trial {t}"),
            residual: res,
        });

        // module property: <F_ij(a), F_kl(b)> = <F_ij(b* a), F_kl(1)>, all 16 combos
        let ba = b.conj().mul(&a);
        for x in 0..4 {
            for y in 0..4 {
                let fa = red[x].evaluate(&a).unwrap();
                let fb = red[y].evaluate(&b).unwrap();
                let lhs = linalg::inner(&fa, &fb);
                let rhs = linalg::inner(&red[x].evaluate(&ba).unwrap(), &unit[y]);
                let scale = linalg::norm(&fa) * linalg::norm(&fb) + rhs.norm();
                let res = normalized((lhs - rhs).norm(), scale);
                c_module.record(res, || Witness {
                    identity: "module property".into(),
                    atom: None,
                    detail: format!("trial {t}, slots {x} vs {y}"),
                    residual: res,
                });
            }
        }

        // norm identity: ||F(x)||^2 = rho(x^2) on selfadjoint x, rho evaluated directly
        let x = random_selfadjoint_block(n, rng);
        let y = random_selfadjoint_block(n, rng);
        let fx = f.evaluate(&x).unwrap();
        let f_total = f.unit_total();
        let x2 = x.mul(&x);
        let lhs = linalg::norm_sqr(&fx);
        let rhs = linalg::inner(&f.evaluate(&x2).unwrap(), &f_total);
        let res = normalized((C64::from(lhs) - rhs).norm(), lhs + rhs.norm());
        c_sq.record(res, || Witness {
            identity: "norm identity for squares".into(),
            atom: None,
            detail: format!("trial {t}"),
            residual: res,
        });

        // symmetrized product rule: Re<F(x), F(y)> = rho(xy + yx) / 2, selfadjoint x, y
        let fy = f.evaluate(&y).unwrap();
        let anti = x.mul(&y).add(&y.mul(&x));
        let lhs = linalg::inner(&fx, &fy).re;
        let rhs = 0.5 * linalg::inner(&f.evaluate(&anti).unwrap(), &f_total);
        let scale = linalg::norm(&fx) * linalg::norm(&fy) + rhs.norm();
        let res = normalized((lhs - rhs.re).abs().max(rhs.im.abs()), scale);
        c_sym.record(res, || Witness {
            identity: "symmetrized product rule".into(),
            atom: None,
            detail: format!("trial {t}"),
            residual: res,
        });

        // disjoint annihilation: sigma tau = 0 =>
        // <F_ii(sigma), F_12(tau)> = <F_ii(sigma), F_21(tau)> = 0
        let mask: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let sigma = CenterElement::indicator(
            n,
            &(0..n).filter(|k| mask[*k]).collect::<Vec<_>>(),
        );
        let tau = CenterElement::indicator(
            n,
            &(0..n).filter(|k| !mask[*k]).collect::<Vec<_>>(),
        );
        for i in 0..2 {
            for off in [slot(0, 1), slot(1, 0)] {
                let fs = red[slot(i, i)].evaluate(&sigma).unwrap();
                let ft = red[off].evaluate(&tau).unwrap();
                let res = normalized(
                    linalg::inner(&fs, &ft).norm(),
                    linalg::norm(&fs) * linalg::norm(&ft),
                );
                c_disj.record(res, || Witness {
                    identity: "disjoint annihilation".into(),
                    atom: None,
                    detail: format!("trial {t}, diagonal {} vs slot {off}", i + 1),
                    residual: res,
                });
            }
        }

        // mixed identity: <F_12(a pi) + F_21(a* pi), F_11(pi)> =
        //                  <F_22(pi), F_12(a pi) + F_21(a* pi)>,
        // at a random a, then at the unit and imaginary-unit specializations.
        let pi_atoms: Vec<usize> = (0..n).filter(|_| rng.random()).collect();
        let pi = CenterElement::indicator(n, &pi_atoms);
        for (label, aa) in [
            ("mixed identity, random argument", a.clone()),
            ("mixed identity, unit argument", CenterElement::one(n)),
            ("mixed identity, imaginary argument", CenterElement::constant(n, C64::new(0.0, 1.0))),
        ] {
            let api = aa.mul(&pi);
            let astar_pi = aa.conj().mul(&pi);
            let mut vec = red[slot(0, 1)].evaluate(&api).unwrap();
            linalg::axpy(&mut vec, ONE, &red[slot(1, 0)].evaluate(&astar_pi).unwrap());
            let f11pi = red[slot(0, 0)].evaluate(&pi).unwrap();
            let f22pi = red[slot(1, 1)].evaluate(&pi).unwrap();
            let lhs = linalg::inner(&vec, &f11pi);
            let rhs = linalg::inner(&f22pi, &vec);
            let scale = linalg::norm(&vec) * (linalg::norm(&f11pi) + linalg::norm(&f22pi));
            let res = normalized((lhs - rhs).norm(), scale);
            c_mixed.record(res, || Witness {
                identity: label.into(),
                atom: None,
                detail: format!("trial {t}"),
                residual: res,
            });
        }
    }

    VerifyReport {
        checks: vec![c_cross, c_balance, c_module, c_offdiag, c_sq, c_sym, c_disj, c_mixed],
    }
}

/// The combined instance verification used by the CLI: trace-identity
/// residuals from the density report, orthogonality on sampled pairs, and
/// the full reduction-identity suite.
pub fn verify_instance<R: Rng>(
    f: &VectorFieldTable,
    samples: usize,
    trials: usize,
    rng: &mut R,
    tolerance: f64,
) -> VerifyReport {
    let mut checks = Vec::new();

    let report = r_densities(f, false);
    let mut c_trace = CheckRecord::new("trace identity", tolerance);
    for (k, resid) in report.trace_residuals.iter().enumerate() {
        let scale = report.rho.entries[k].e[0][0].re.abs() + report.rho.entries[k].e[1][1].re.abs();
        let res = normalized(*resid, scale);
        c_trace.record(res, || Witness {
            identity: "trace identity".into(),
            atom: Some(k),
            detail: "r_12 + r_21 vs rho_11 + rho_22".into(),
            residual: res,
        });
    }
    let mut c_imag = CheckRecord::new("derivative densities real", tolerance);
    let res = report.max_imag_r;
    c_imag.record(res, || Witness {
        identity: "derivative density imaginary part".into(),
        atom: None,
        detail: "imaginary part of an r density".into(),
        residual: res,
    });
    checks.push(c_trace);
    checks.push(c_imag);

    // Hermiticity of rho (rho_21 = conj(rho_12)) holds for any OVF.
    let rho = rho_functional(f);
    let mut c_herm = CheckRecord::new("rho Hermitian", tolerance);
    for (k, d) in rho.entries.iter().enumerate() {
        let res = normalized(d.hermiticity_residual(), d.norm_max());
        c_herm.record(res, || Witness {
            identity: "rho_21 = conj(rho_12)".into(),
            atom: Some(k),
            detail: String::new(),
            residual: res,
        });
    }
    checks.push(c_herm);

    checks.push(verify_orthogonality(f, samples, rng, tolerance));
    checks.extend(verify_reduction_identities(f, trials, rng, tolerance).checks);
    VerifyReport { checks }
}
