use std::fs;
use std::path::{Path, PathBuf};

use microcavity::io::{PlotTable, RunConfig};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::failure::Failure;
use crate::svg::{self, Series};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// State shared by every subcommand of one invocation.
pub struct Context {
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    out: PathBuf,
    svg: bool,
}

impl Context {
    pub fn new(config: Option<&Path>, out: PathBuf, seed: u64, svg: bool) -> Result<Self, Failure> {
        let config = match config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
                RunConfig::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::reference(),
        };
        let config_hash = config.hash();
        Ok(Self {
            config,
            config_hash,
            seed,
            out,
            svg,
        })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Output directory, created on first use.
    pub fn out_dir(&self) -> Result<PathBuf, Failure> {
        let dir = self.out.clone();
        fs::create_dir_all(&dir)
            .map_err(|e| Failure::Input(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(dir)
    }

    /// Adds the provenance lines every output carries.
    pub fn stamp(&self, table: &mut PlotTable, command: &str) {
        let mut meta = vec![
            ("command".to_string(), command.to_string()),
            ("config_sha256".to_string(), self.config_hash.clone()),
            ("seed".to_string(), self.seed.to_string()),
            ("tool_version".to_string(), TOOL_VERSION.to_string()),
        ];
        meta.extend(
            table
                .metadata
                .drain(..)
                .filter(|(k, _)| !matches!(k.as_str(), "command" | "config_sha256" | "seed" | "tool_version")),
        );
        table.metadata = meta;
    }

    /// Stamps and writes `table` as `<out>/<name>`.
    pub fn write(&self, table: &mut PlotTable, command: &str, name: &str) -> Result<PathBuf, Failure> {
        self.stamp(table, command);
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| Failure::Input(format!("cannot create output directory {}: {e}", parent.display())))?;
        }
        table.write_file(&path)?;
        Ok(path)
    }

    /// Writes `<out>/<name>` as an SVG line plot when `--svg` was given.
    pub fn plot(&self, name: &str, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<(), Failure> {
        if !self.svg {
            return Ok(());
        }
        let path = self.out_dir()?.join(name);
        let text = svg::render(title, x_label, y_label, series);
        fs::write(&path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

/// Expands directories into their `.csv` files, sorted by name; plain files
/// pass through in the order given.
pub fn collect_csv(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| Failure::Input(format!("cannot list {}: {e}", input.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(Failure::Input(format!("{} does not exist", input.display())));
        }
    }
    if files.is_empty() {
        return Err(Failure::Input("no input CSV files found".into()));
    }
    Ok(files)
}

/// File name without directories, so outputs do not depend on where the
/// inputs live.
pub fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
