//! JSON persistence for instances, pairs, projections and profiles.
//!
//! Wire structs mirror the domain types with complex numbers as `[re, im]`
//! arrays. Every floating-point number is written with 17 significant
//! decimal digits (`{:.16e}`), which round-trips any finite f64 exactly and
//! makes identical data serialize to identical bytes regardless of the
//! platform's shortest-representation choices. Output files are written to
//! a temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::field::{FunctionalDensity, VectorFieldTable};
use crate::linalg::{Mat2, C64};
use crate::measure::{BlockElement, MeasureSpace};
use crate::projection::{AtomPart, CanonicalProjection};
use crate::refinement::{PiecewisePoly, ScalarFieldProfile};
use crate::stationarity::StationaryPair;

type Cx = [f64; 2];

fn cx(z: C64) -> Cx {
    [z.re, z.im]
}

fn uncx(v: Cx) -> C64 {
    C64::new(v[0], v[1])
}

fn mat2_to_wire(m: &Mat2) -> [[Cx; 2]; 2] {
    [
        [cx(m.e[0][0]), cx(m.e[0][1])],
        [cx(m.e[1][0]), cx(m.e[1][1])],
    ]
}

fn mat2_from_wire(w: &[[Cx; 2]; 2]) -> Mat2 {
    Mat2::new(uncx(w[0][0]), uncx(w[0][1]), uncx(w[1][0]), uncx(w[1][1]))
}

/// JSON serializer that prints every f64 with 17 significant digits.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with the fixed-width float format, appending a newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, CoreError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| CoreError::Io(e.to_string()))
}

/// Write a file atomically: serialize, write to a temporary sibling, rename.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CoreError> {
    let body = to_json_string(value)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let stem = path
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{stem}.tmp-{}", std::process::id()));
    {
        let mut fh = std::fs::File::create(&tmp)?;
        fh.write_all(body.as_bytes())?;
        fh.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CoreError> {
    let body = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&body)?)
}

fn ensure_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<(), CoreError> {
    for v in values {
        if !v.is_finite() {
            return Err(CoreError::Malformed(format!("non-finite number in {what}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceWire {
    pub atoms: Vec<String>,
    pub weights: Vec<f64>,
}

impl SpaceWire {
    pub fn from_space(s: &MeasureSpace) -> Self {
        SpaceWire {
            atoms: s.atom_ids().to_vec(),
            weights: s.weights().to_vec(),
        }
    }

    pub fn into_space(self) -> Result<MeasureSpace, CoreError> {
        ensure_finite(self.weights.iter().copied(), "space weights")?;
        MeasureSpace::new(self.atoms, self.weights)
    }
}

/// An OVF instance: the basis table `values[atom][i*2+j] = F(pi_k eps_ij)`
/// with row-major unit order (11, 12, 21, 22).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceWire {
    pub space: SpaceWire,
    pub hilbert_dim: usize,
    pub values: Vec<Vec<Vec<Cx>>>,
}

impl InstanceWire {
    pub fn from_table(f: &VectorFieldTable) -> Self {
        let values = (0..f.atoms())
            .map(|k| {
                (0..4)
                    .map(|t| f.basis(k, t / 2, t % 2).iter().map(|z| cx(*z)).collect())
                    .collect()
            })
            .collect();
        InstanceWire {
            space: SpaceWire::from_space(f.space()),
            hilbert_dim: f.hilbert_dim(),
            values,
        }
    }

    pub fn into_table(self) -> Result<VectorFieldTable, CoreError> {
        let space = self.space.into_space()?;
        if self.values.len() != space.len() {
            return Err(CoreError::AtomCountMismatch {
                expected: space.len(),
                got: self.values.len(),
            });
        }
        let mut flat = Vec::with_capacity(4 * space.len());
        for per_atom in &self.values {
            if per_atom.len() != 4 {
                return Err(CoreError::Malformed(format!(
                    "each atom needs 4 basis vectors, got {}",
                    per_atom.len()
                )));
            }
            for vec in per_atom {
                ensure_finite(vec.iter().flatten().copied(), "instance values")?;
                flat.push(vec.iter().map(|v| uncx(*v)).collect());
            }
        }
        VectorFieldTable::new(space, self.hilbert_dim, flat)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockWire {
    pub space: SpaceWire,
    pub blocks: Vec<[[Cx; 2]; 2]>,
}

impl BlockWire {
    pub fn from_block(space: &MeasureSpace, b: &BlockElement) -> Self {
        BlockWire {
            space: SpaceWire::from_space(space),
            blocks: b.blocks.iter().map(mat2_to_wire).collect(),
        }
    }

    pub fn into_block(self) -> Result<(MeasureSpace, BlockElement), CoreError> {
        let space = self.space.into_space()?;
        if self.blocks.len() != space.len() {
            return Err(CoreError::AtomCountMismatch {
                expected: space.len(),
                got: self.blocks.len(),
            });
        }
        ensure_finite(
            self.blocks.iter().flatten().flatten().flatten().copied(),
            "block entries",
        )?;
        let blocks = self.blocks.iter().map(mat2_from_wire).collect();
        Ok((space, BlockElement::new(blocks)))
    }
}

/// Canonical projection: three indicator vectors plus the interior
/// parameters (`a`, `v`), the latter meaningful only where `pi3` holds
/// (zero / one elsewhere by convention).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalWire {
    pub space: SpaceWire,
    pub pi1: Vec<bool>,
    pub pi2: Vec<bool>,
    pub pi3: Vec<bool>,
    pub a: Vec<f64>,
    pub v: Vec<Cx>,
}

impl CanonicalWire {
    pub fn from_projection(space: &MeasureSpace, c: &CanonicalProjection) -> Self {
        let (pi1, pi2, pi3) = c.diagonal_projections();
        let mut a = Vec::with_capacity(c.len());
        let mut v = Vec::with_capacity(c.len());
        for part in &c.parts {
            match part {
                AtomPart::Interior { a: aa, v: vv } => {
                    a.push(*aa);
                    v.push(cx(*vv));
                }
                _ => {
                    a.push(0.0);
                    v.push([1.0, 0.0]);
                }
            }
        }
        CanonicalWire {
            space: SpaceWire::from_space(space),
            pi1,
            pi2,
            pi3,
            a,
            v,
        }
    }

    pub fn into_projection(self) -> Result<(MeasureSpace, CanonicalProjection), CoreError> {
        let space = self.space.into_space()?;
        let n = space.len();
        for (name, len) in [
            ("pi1", self.pi1.len()),
            ("pi2", self.pi2.len()),
            ("pi3", self.pi3.len()),
            ("a", self.a.len()),
            ("v", self.v.len()),
        ] {
            if len != n {
                return Err(CoreError::Malformed(format!(
                    "{name} has {len} entries for {n} atoms"
                )));
            }
        }
        ensure_finite(self.a.iter().copied(), "interior parameters")?;
        ensure_finite(self.v.iter().flatten().copied(), "phases")?;
        let mut parts = Vec::with_capacity(n);
        for k in 0..n {
            if self.pi3[k] {
                if self.pi1[k] || self.pi2[k] {
                    return Err(CoreError::CanonicalConstraint {
                        atom: k,
                        constraint: "pi1/pi2 must vanish under pi3".into(),
                    });
                }
                parts.push(AtomPart::Interior {
                    a: self.a[k],
                    v: uncx(self.v[k]),
                });
            } else {
                parts.push(match (self.pi1[k], self.pi2[k]) {
                    (false, false) => AtomPart::Zero,
                    (true, false) => AtomPart::Upper,
                    (false, true) => AtomPart::Lower,
                    (true, true) => AtomPart::Full,
                });
            }
        }
        Ok((space, CanonicalProjection::new(parts)?))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityWire {
    pub entries: Vec<[[Cx; 2]; 2]>,
}

impl DensityWire {
    fn from_density(d: &FunctionalDensity) -> Self {
        DensityWire {
            entries: d.entries.iter().map(mat2_to_wire).collect(),
        }
    }

    fn into_density(self, space: MeasureSpace) -> Result<FunctionalDensity, CoreError> {
        ensure_finite(
            self.entries.iter().flatten().flatten().flatten().copied(),
            "density entries",
        )?;
        FunctionalDensity::new(space, self.entries.iter().map(mat2_from_wire).collect())
    }
}

/// A stationary pair of functional densities over a common space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairWire {
    pub space: SpaceWire,
    pub phi: DensityWire,
    pub psi: DensityWire,
}

impl PairWire {
    pub fn from_pair(p: &StationaryPair) -> Self {
        PairWire {
            space: SpaceWire::from_space(&p.phi.space),
            phi: DensityWire::from_density(&p.phi),
            psi: DensityWire::from_density(&p.psi),
        }
    }

    pub fn into_pair(self) -> Result<StationaryPair, CoreError> {
        let space = self.space.into_space()?;
        Ok(StationaryPair {
            phi: self.phi.into_density(space.clone())?,
            psi: self.psi.into_density(space)?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyWire {
    pub breakpoints: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl PolyWire {
    fn from_poly(p: &PiecewisePoly) -> Self {
        PolyWire {
            breakpoints: p.breakpoints.clone(),
            coeffs: p.coeffs.clone(),
        }
    }

    fn into_poly(self) -> Result<PiecewisePoly, CoreError> {
        ensure_finite(self.breakpoints.iter().copied(), "breakpoints")?;
        ensure_finite(self.coeffs.iter().flatten().copied(), "coefficients")?;
        PiecewisePoly::new(self.breakpoints, self.coeffs)
    }
}

/// Scalar field profile for the refinement engine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileWire {
    pub total_measure: f64,
    pub rho11: PolyWire,
    pub rho22: PolyWire,
    pub r12: PolyWire,
    pub r21: PolyWire,
    pub phi12_re: PolyWire,
    pub phi12_im: PolyWire,
}

impl ProfileWire {
    pub fn from_profile(p: &ScalarFieldProfile) -> Self {
        ProfileWire {
            total_measure: 1.0,
            rho11: PolyWire::from_poly(&p.rho11),
            rho22: PolyWire::from_poly(&p.rho22),
            r12: PolyWire::from_poly(&p.r12),
            r21: PolyWire::from_poly(&p.r21),
            phi12_re: PolyWire::from_poly(&p.phi12_re),
            phi12_im: PolyWire::from_poly(&p.phi12_im),
        }
    }

    pub fn into_profile(self) -> Result<ScalarFieldProfile, CoreError> {
        ScalarFieldProfile::new(
            self.rho11.into_poly()?,
            self.rho22.into_poly()?,
            self.r12.into_poly()?,
            self.r21.into_poly()?,
            self.phi12_re.into_poly()?,
            self.phi12_im.into_poly()?,
            self.total_measure,
        )
    }
}
