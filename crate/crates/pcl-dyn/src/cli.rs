use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{Config, ModelChoice};
use crate::error::CliError;
use crate::run::{self, Overrides};

#[derive(Debug, Parser)]
#[command(name = "pcl-dyn", version, about = "Phase-coupled and linear-coupling hierarchy dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Flags {
    /// Output directory (overrides output.dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Truncation levels, comma separated; the last one is used outside scan-L.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Restrict to one model.
    #[arg(long)]
    pub model: Option<ModelChoice>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides { out: self.out.clone(), model: self.model, levels: self.levels.clone() }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the dissipaton spectrum and its reconstruction error.
    Decompose(Common),
    /// Propagate each requested model and write trajectory CSVs and a manifest.
    Evolve(Common),
    /// Propagate both models and write the joined comparison CSV.
    Compare(Common),
    /// Truncation-level convergence table.
    #[command(name = "scan-L")]
    ScanL(Common),
    /// Run a built-in figure preset (fig2, fig3, fig4).
    Preset {
        name: String,
        /// Print the preset configuration instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        flags: Flags,
    },
}

fn report(written: run::Written) -> String {
    written.files.iter().map(|p| format!("wrote {}\n", p.display())).collect()
}

/// Executes a parsed command and returns the text destined for stdout.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Decompose(c) => run::decompose_command(Config::load(&c.config)?, &c.flags.overrides()),
        Command::Evolve(c) => run::evolve_command(Config::load(&c.config)?, &c.flags.overrides()).map(report),
        Command::Compare(c) => run::compare_command(Config::load(&c.config)?, &c.flags.overrides()).map(report),
        Command::ScanL(c) => run::scan_command(Config::load(&c.config)?, &c.flags.overrides()),
        Command::Preset { name, print: true, .. } => Ok(crate::presets::preset(name)?.to_toml()),
        Command::Preset { name, flags, .. } => run::preset_command(name, &flags.overrides()).map(report),
    }
}
