use std::path::PathBuf;

use clap::Args;

use spmp3d_core::imaging::{save_image, DecompositionFile};

use crate::dict::{DictChoice, DictSpec};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    /// Decomposition file written by `approximate`.
    #[arg(long)]
    pub decomp: PathBuf,
    /// Output image; the format follows the original input.
    #[arg(long)]
    pub out: PathBuf,
    /// Dictionary for all axes; defaults to the one named in the file.
    #[arg(long)]
    pub dict: Option<DictChoice>,
    #[arg(long)]
    pub dict_x: Option<DictChoice>,
    #[arg(long)]
    pub dict_y: Option<DictChoice>,
    #[arg(long)]
    pub dict_z: Option<DictChoice>,
}

pub fn cmd_reconstruct(args: &ReconstructArgs) -> CliResult<PathBuf> {
    let file = DecompositionFile::load(&args.decomp)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.decomp.display())))?;
    let stored = DictSpec::from_label(&file.dictionary)?;
    let spec = if args.dict.is_none()
        && args.dict_x.is_none()
        && args.dict_y.is_none()
        && args.dict_z.is_none()
    {
        stored
    } else {
        let base = args.dict.unwrap_or(DictChoice::Thin3d);
        DictSpec {
            x: args.dict_x.unwrap_or(base),
            y: args.dict_y.unwrap_or(base),
            z: args.dict_z.unwrap_or(base),
        }
        .for_block(file.layout.block)
    };
    let dict = spec.build(file.layout.block)?;
    let img = file.reconstruct(&dict)?;
    save_image(&args.out, &img, &file.encoding)?;
    Ok(args.out.clone())
}
