use std::str::FromStr;

use spmp3d_core::{build_dirac, build_mixed_1d, build_thin_3d, Dictionary, Domain, Separable};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictChoice {
    Thin3d,
    MixedPd,
    MixedWd,
    Dirac,
}

impl FromStr for DictChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "thin3d" => Ok(DictChoice::Thin3d),
            "mixed-pd" => Ok(DictChoice::MixedPd),
            "mixed-wd" => Ok(DictChoice::MixedWd),
            "dirac" => Ok(DictChoice::Dirac),
            other => Err(format!(
                "unknown dictionary {other:?}, expected thin3d, mixed-pd, mixed-wd or dirac"
            )),
        }
    }
}

impl std::fmt::Display for DictChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DictChoice::Thin3d => "thin3d",
            DictChoice::MixedPd => "mixed-pd",
            DictChoice::MixedWd => "mixed-wd",
            DictChoice::Dirac => "dirac",
        })
    }
}

impl DictChoice {
    /// The mixed dictionary matching a domain.
    pub fn mixed(domain: Domain) -> Self {
        match domain {
            Domain::Pd => DictChoice::MixedPd,
            Domain::Wd => DictChoice::MixedWd,
        }
    }

    pub fn build(self, n: usize) -> CliResult<Dictionary> {
        let d = match self {
            DictChoice::Thin3d => build_thin_3d(n),
            DictChoice::MixedPd => build_mixed_1d(n, Domain::Pd),
            DictChoice::MixedWd => build_mixed_1d(n, Domain::Wd),
            DictChoice::Dirac => build_dirac(n),
        };
        d.map_err(|e| CliError::usage(format!("dictionary {self} for extent {n}: {e}")))
    }
}

/// One dictionary choice per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DictSpec {
    pub x: DictChoice,
    pub y: DictChoice,
    pub z: DictChoice,
}

impl DictSpec {
    pub fn uniform(c: DictChoice) -> Self {
        Self { x: c, y: c, z: c }
    }

    /// A single-sample axis only admits the trivial atom, so `bz = 1` always
    /// gets the 1-point Dirac basis.
    pub fn for_block(mut self, block: [usize; 3]) -> Self {
        if block[2] == 1 {
            self.z = DictChoice::Dirac;
        }
        self
    }

    pub fn build(&self, block: [usize; 3]) -> CliResult<Separable> {
        Ok(Separable::assemble(
            self.x.build(block[0])?,
            self.y.build(block[1])?,
            self.z.build(block[2])?,
        ))
    }

    /// `x=..,y=..,z=..`, the form stored in decomposition files.
    pub fn label(&self) -> String {
        format!("x={},y={},z={}", self.x, self.y, self.z)
    }

    pub fn from_label(label: &str) -> CliResult<Self> {
        let mut axes = [None; 3];
        for part in label.split(',') {
            let (axis, choice) = part
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("bad dictionary label {label:?}")))?;
            let slot = match axis {
                "x" => 0,
                "y" => 1,
                "z" => 2,
                _ => return Err(CliError::usage(format!("bad dictionary label {label:?}"))),
            };
            axes[slot] = Some(choice.parse::<DictChoice>().map_err(CliError::Usage)?);
        }
        match axes {
            [Some(x), Some(y), Some(z)] => Ok(Self { x, y, z }),
            _ => Err(CliError::usage(format!(
                "dictionary label {label:?} must name x, y and z"
            ))),
        }
    }
}
