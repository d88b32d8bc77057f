use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

fn write_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Write {
        path: path.display().to_string(),
        source,
    }
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = Path::new(&tmp);
    fs::write(tmp, contents).map_err(|e| write_error(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| write_error(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| write_error(dir, e))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|source| {
        CliError::Core(dualfeat::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}
