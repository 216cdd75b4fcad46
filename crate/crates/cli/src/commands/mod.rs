pub mod evaluate;
pub mod optimize;
pub mod simulate;
pub mod sweep;

use std::path::Path;

use crate::error::{io_err, CliResult};

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}
