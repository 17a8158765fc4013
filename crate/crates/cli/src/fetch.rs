//! Verifies the MNIST cache and fills gaps from a mirror of gzipped IDX files.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use vsql::data::{load_mnist, mnist_dir, MNIST_FILES};

use crate::config::{read_json, MnistFetch};
use crate::CliError;

fn download(base: &str, name: &str, dest: &Path) -> Result<(), CliError> {
    let url = format!("{}/{name}.gz", base.trim_end_matches('/'));
    let resp = ureq::get(&url)
        .call()
        .map_err(|e| CliError::runtime(format!("download {url} failed: {e}")))?;
    let mut bytes = Vec::new();
    GzDecoder::new(resp.into_reader())
        .read_to_end(&mut bytes)
        .map_err(|e| CliError::runtime(format!("cannot decompress {url}: {e}")))?;
    fs::write(dest, bytes).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", dest.display())))
}

pub fn gen_mnist(config: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let cfg: MnistFetch = config.map(read_json).transpose()?.unwrap_or_default();
    let dir = out.map_or_else(mnist_dir, Path::to_path_buf);
    let missing: Vec<&str> = MNIST_FILES.iter().copied().filter(|f| !dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        let base = cfg.source_url.as_deref().ok_or_else(|| {
            CliError::runtime(format!(
                "{} missing from {} and no source_url configured",
                missing.join(", "),
                dir.display()
            ))
        })?;
        fs::create_dir_all(&dir).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
        for name in missing {
            download(base, name, &dir.join(name))?;
        }
    }
    let (train, test) = load_mnist(&dir).map_err(|e| CliError::runtime(e.to_string()))?;
    let fmt = |h: [usize; 10]| h.iter().map(usize::to_string).collect::<Vec<_>>().join("/");
    println!("{}: train {} images ({}), test {} images ({})", dir.display(), train.len(), fmt(train.histogram()), test.len(), fmt(test.histogram()));
    Ok(())
}
