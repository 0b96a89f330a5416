//! One-dimensional dictionaries and their separable 3D tensor products.
//!
//! Every dictionary stores its atoms column-major (one contiguous slice per
//! atom) with unit Euclidean norm. The 3D dictionary `dx (x) dy (x) dz` is
//! never formed; pursuit kernels only ever touch the three factors.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::num::Real;

/// Unit-norm tolerance every stored `f64` atom satisfies. Coarser scalars
/// get `64 * epsilon`.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Where an atom came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cosine,
    Sine,
    /// Translates of a linear B-spline prototype `h_1..h_7`.
    Spline(u8),
    /// Translates of a wavelet-domain prototype `p_1..p_7`.
    WaveletLocal(u8),
    Dirac,
    Custom,
    Imported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomLabel {
    pub family: Family,
    /// Frequency index for trigonometric atoms, shift for translated ones.
    pub index: usize,
}

/// Which flavour of localized atoms a mixed dictionary carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Pixel domain.
    Pd,
    /// Wavelet domain.
    Wd,
}

impl std::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pd" => Ok(Domain::Pd),
            "wd" => Ok(Domain::Wd),
            other => invalid(format!("unknown domain {other:?}, expected pd or wd")),
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Domain::Pd => "pd",
            Domain::Wd => "wd",
        })
    }
}

/// `n x m` matrix of unit-norm column atoms for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary1D<T> {
    n: usize,
    atoms: Vec<T>,
    labels: Vec<AtomLabel>,
}

impl<T: Real> Dictionary1D<T> {
    /// Builds a dictionary from raw column-major data. Columns must already be
    /// unit norm.
    pub fn from_columns(n: usize, atoms: Vec<T>, labels: Vec<AtomLabel>) -> Result<Self> {
        if n == 0 {
            return invalid("atom length must be positive");
        }
        if atoms.len() != n * labels.len() || labels.is_empty() {
            return invalid(format!(
                "{} values do not form {} atoms of length {n}",
                atoms.len(),
                labels.len()
            ));
        }
        let dict = Self { n, atoms, labels };
        let tol = UNIT_NORM_TOL.max(64.0 * T::epsilon().as_f64());
        for (k, atom) in dict.iter().enumerate() {
            if atom.iter().any(|v| !v.is_finite()) {
                return invalid(format!("atom {k} has non-finite entries"));
            }
            let norm = atom.iter().map(|&v| v * v).sum::<T>().sqrt().as_f64();
            if norm == 0.0 {
                return invalid(format!("atom {k} is all zero"));
            }
            if (norm - 1.0).abs() > tol {
                return invalid(format!("atom {k} has norm {norm}, expected 1"));
            }
        }
        Ok(dict)
    }

    /// Normalizes each column to unit norm and drops all-zero ones.
    fn from_unnormalized(n: usize, columns: Vec<(Vec<T>, AtomLabel)>) -> Result<Self> {
        let mut atoms = Vec::with_capacity(n * columns.len());
        let mut labels = Vec::with_capacity(columns.len());
        for (col, label) in columns {
            debug_assert_eq!(col.len(), n);
            let norm = col.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm.is_zero() {
                continue;
            }
            atoms.extend(col.iter().map(|&v| v / norm));
            labels.push(label);
        }
        Self::from_columns(n, atoms, labels)
    }

    /// Atom length (the signal extent along this axis).
    #[inline]
    pub fn len_atom(&self) -> usize {
        self.n
    }

    /// Number of atoms `m`.
    #[inline]
    pub fn count(&self) -> usize {
        self.labels.len()
    }

    /// `m / n`.
    pub fn redundancy(&self) -> f64 {
        self.count() as f64 / self.n as f64
    }

    #[inline]
    pub fn atom(&self, k: usize) -> &[T] {
        &self.atoms[k * self.n..(k + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.atoms.chunks_exact(self.n)
    }

    pub fn labels(&self) -> &[AtomLabel] {
        &self.labels
    }

    /// Column-major values.
    pub fn as_slice(&self) -> &[T] {
        &self.atoms
    }

    /// Concatenates several dictionaries over the same extent. Duplicated
    /// columns are kept so that atom indices stay stable.
    pub fn union(parts: &[Dictionary1D<T>]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return invalid("union of zero dictionaries");
        };
        let n = first.n;
        let mut atoms = Vec::new();
        let mut labels = Vec::new();
        for part in parts {
            if part.n != n {
                return Err(Error::ShapeMismatch {
                    left: vec![n],
                    right: vec![part.n],
                });
            }
            atoms.extend_from_slice(&part.atoms);
            labels.extend_from_slice(&part.labels);
        }
        Ok(Self { n, atoms, labels })
    }

    /// Text form: a header line `n m` then one atom per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.count());
        for atom in self.iter() {
            for (i, v) in atom.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                // shortest representation that parses back to the same value
                let _ = write!(out, "{:?}", v.as_f64());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty dictionary file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Format(format!("bad header token {t:?}")))
            })
            .collect::<Result<_>>()?;
        let [n, m] = dims[..] else {
            return Err(Error::Format(format!(
                "header must be `n m`, got {header:?}"
            )));
        };
        let mut atoms = Vec::with_capacity(n * m);
        for k in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing atom {k} of {m}")))?;
            let before = atoms.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::Format(format!("bad value {tok:?} in atom {k}")))?;
                atoms.push(T::lit(v));
            }
            if atoms.len() - before != n {
                return Err(Error::Format(format!(
                    "atom {k} has {} values, expected {n}",
                    atoms.len() - before
                )));
            }
        }
        if lines.next().is_some() {
            return Err(Error::Format(format!("trailing data after {m} atoms")));
        }
        let labels = (0..m)
            .map(|index| AtomLabel {
                family: Family::Imported,
                index,
            })
            .collect();
        Self::from_columns(n, atoms, labels)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return invalid(format!(
            "dictionary sizes must be positive, got n={n}, m={m}"
        ));
    }
    Ok(())
}

/// Cosine atoms `cos(pi (2i-1)(k-1) / 2m)`, `i = 1..n`, `k = 1..m`.
pub fn build_cosine<T: Real>(n: usize, m: usize) -> Result<Dictionary1D<T>> {
    check_sizes(n, m)?;
    let cols = (1..=m)
        .map(|k| {
            let col = (1..=n)
                .map(|i| {
                    let arg =
                        std::f64::consts::PI * (2 * i - 1) as f64 * (k - 1) as f64 / (2 * m) as f64;
                    T::lit(arg.cos())
                })
                .collect();
            (
                col,
                AtomLabel {
                    family: Family::Cosine,
                    index: k,
                },
            )
        })
        .collect();
    Dictionary1D::from_unnormalized(n, cols)
}

/// Sine atoms `sin(pi (2i-1) k / 2m)`, `i = 1..n`, `k = 1..m`.
pub fn build_sine<T: Real>(n: usize, m: usize) -> Result<Dictionary1D<T>> {
    check_sizes(n, m)?;
    let cols = (1..=m)
        .map(|k| {
            let col = (1..=n)
                .map(|i| {
                    let arg = std::f64::consts::PI * (2 * i - 1) as f64 * k as f64 / (2 * m) as f64;
                    T::lit(arg.sin())
                })
                .collect();
            (
                col,
                AtomLabel {
                    family: Family::Sine,
                    index: k,
                },
            )
        })
        .collect();
    Dictionary1D::from_unnormalized(n, cols)
}

/// Linear B-spline hat of half-width `m`, sampled at `x = 1..2m-1`.
fn hat(m: usize) -> Vec<f64> {
    let mf = m as f64;
    (1..2 * m)
        .map(|x| {
            let x = x as f64;
            if x < mf {
                x / mf
            } else {
                2.0 - x / mf
            }
        })
        .collect()
}

/// Right-continuous derivative of [`hat`]: `+1/m` on `[0, m)`, `-1/m` on `[m, 2m)`.
fn hat_derivative(m: usize) -> Vec<f64> {
    let mf = m as f64;
    (1..2 * m)
        .map(|x| if (x as f64) < mf { 1.0 / mf } else { -1.0 / mf })
        .collect()
}

/// The seven pixel-domain prototypes `h_1..h_7` (leading samples only,
/// unnormalized). `h_5..h_7` are the derivatives of `h_2..h_4`.
pub fn build_spline_prototypes<T: Real>(n: usize) -> Result<Vec<Vec<T>>> {
    if n < 8 {
        return invalid(format!("spline prototypes need n >= 8, got {n}"));
    }
    let protos = [
        hat(1),
        hat(2),
        hat(3),
        hat(4),
        hat_derivative(2),
        hat_derivative(3),
        hat_derivative(4),
    ];
    Ok(protos
        .iter()
        .map(|p| p.iter().map(|&v| T::lit(v)).collect())
        .collect())
}

/// The seven wavelet-domain prototypes `p_1..p_7` (leading samples only).
pub fn build_wavelet_prototypes<T: Real>(n: usize) -> Result<Vec<Vec<T>>> {
    if n < 3 {
        return invalid(format!("wavelet prototypes need n >= 3, got {n}"));
    }
    let protos: [Vec<f64>; 7] = [
        vec![1.0],
        vec![1.0, 1.0],
        hat_derivative(2),
        vec![1.0, 1.0, 1.0],
        vec![-1.0, 1.0, 1.0],
        vec![1.0, -1.0, 1.0],
        vec![-1.0, -1.0, 1.0],
    ];
    Ok(protos
        .iter()
        .map(|p| p.iter().map(|&v| T::lit(v)).collect())
        .collect())
}

/// Shifts `proto` so its first sample lands on each position `0..n`,
/// truncates to length `n` and normalizes.
pub fn translate_prototype<T: Real>(proto: &[T], n: usize) -> Result<Dictionary1D<T>> {
    translate_labelled(proto, n, Family::Custom)
}

fn translate_labelled<T: Real>(proto: &[T], n: usize, family: Family) -> Result<Dictionary1D<T>> {
    if n == 0 {
        return invalid("atom length must be positive");
    }
    if proto.iter().all(|v| v.is_zero()) {
        return invalid("prototype is all zero");
    }
    let cols = (0..n)
        .map(|shift| {
            let mut col = vec![T::zero(); n];
            for (k, &v) in proto.iter().enumerate() {
                if shift + k < n {
                    col[shift + k] = v;
                }
            }
            (
                col,
                AtomLabel {
                    family,
                    index: shift + 1,
                },
            )
        })
        .collect();
    Dictionary1D::from_unnormalized(n, cols)
}

/// Standard Euclidean basis of `R^n`.
pub fn build_dirac<T: Real>(n: usize) -> Result<Dictionary1D<T>> {
    translate_labelled(&[T::one()], n, Family::Dirac)
}

/// Cosine and sine atoms (`2n` each) plus the seven translated prototypes of
/// the chosen domain (`n` each), `11n` atoms in total.
pub fn build_mixed_1d<T: Real>(n: usize, domain: Domain) -> Result<Dictionary1D<T>> {
    if n < 8 {
        return invalid(format!("mixed dictionaries need n >= 8, got {n}"));
    }
    let (protos, family): (_, fn(u8) -> Family) = match domain {
        Domain::Pd => (build_spline_prototypes::<T>(n)?, Family::Spline),
        Domain::Wd => (build_wavelet_prototypes::<T>(n)?, Family::WaveletLocal),
    };
    let mut parts = vec![build_cosine(n, 2 * n)?, build_sine(n, 2 * n)?];
    for (k, proto) in protos.iter().enumerate() {
        parts.push(translate_labelled(proto, n, family(k as u8 + 1))?);
    }
    Dictionary1D::union(&parts)
}

/// Cosine, sine and Dirac atoms: `5n` atoms, redundancy 5 per axis.
pub fn build_thin_3d<T: Real>(n: usize) -> Result<Dictionary1D<T>> {
    Dictionary1D::union(&[
        build_cosine(n, 2 * n)?,
        build_sine(n, 2 * n)?,
        build_dirac(n)?,
    ])
}

/// Separable 3D dictionary `dx (x) dy (x) dz`, kept as its three factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableDictionary3<T> {
    pub dx: Dictionary1D<T>,
    pub dy: Dictionary1D<T>,
    pub dz: Dictionary1D<T>,
}

impl<T: Real> SeparableDictionary3<T> {
    pub fn assemble(dx: Dictionary1D<T>, dy: Dictionary1D<T>, dz: Dictionary1D<T>) -> Self {
        Self { dx, dy, dz }
    }

    /// Atom lengths `(nx, ny, nz)` the dictionary applies to.
    pub fn extents(&self) -> [usize; 3] {
        [self.dx.len_atom(), self.dy.len_atom(), self.dz.len_atom()]
    }

    /// Per-axis atom counts `(Mx, My, Mz)`.
    pub fn counts(&self) -> [usize; 3] {
        [self.dx.count(), self.dy.count(), self.dz.count()]
    }

    /// Implied 3D dictionary size `M = Mx My Mz`.
    pub fn size(&self) -> usize {
        self.counts().iter().product()
    }

    pub fn axis_redundancies(&self) -> [f64; 3] {
        [
            self.dx.redundancy(),
            self.dy.redundancy(),
            self.dz.redundancy(),
        ]
    }

    /// `M / N`.
    pub fn redundancy(&self) -> f64 {
        self.size() as f64 / self.extents().iter().product::<usize>() as f64
    }

    /// SHA-256 over the text form of the three factors, used to tie
    /// decomposition files to the dictionary that produced them.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for d in [&self.dx, &self.dy, &self.dz] {
            h.update(d.to_text().as_bytes());
        }
        h.finalize().into()
    }
}
