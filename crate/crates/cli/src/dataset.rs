use std::path::{Path, PathBuf};

use pcnn::denoise::NamedImage;
use pcnn::imaging::load_image;

use crate::error::CliError;

const EXTENSIONS: [&str; 3] = ["pgm", "ppm", "pnm"];

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// PGM/PPM files of a directory in name order, at most `limit` of them.
pub fn load_dir(dir: &Path, limit: usize) -> Result<Vec<NamedImage>, CliError> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    paths.sort();
    paths.truncate(limit);
    if paths.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no PGM/PPM images",
            dir.display()
        )));
    }
    paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            let img =
                load_image(&p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Ok((name, img))
        })
        .collect()
}

/// `explicit`, else `<root>/<split>`.
pub fn split_dir(
    explicit: &Option<PathBuf>,
    root: &Option<PathBuf>,
    split: &str,
) -> Result<PathBuf, CliError> {
    match (explicit, root) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(r)) => Ok(r.join(split)),
        (None, None) => Err(CliError::Usage(format!(
            "no {split} directory: pass --data or --{split}-dir"
        ))),
    }
}
