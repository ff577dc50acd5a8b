use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use comp_sim::config::parse_config;
use comp_sim::presets::{build_config, execute, read_manifest, replay, write_manifest, Preset, RunManifest};
use comp_sim::{serialize_config, Error, Result};

#[derive(Parser)]
#[command(name = "comp-sim", version, about = "CoMP downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario once per seed, or an experiment preset.
    Run {
        /// Scenario file; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// One of fig3a, fig3b, fig3c, fig3d, table2.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated seeds; `a-b` spans are inclusive.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<SeedList>,
        /// Override a config key, e.g. `--set scheduler.v=10`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Parse and validate a scenario file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run a manifest and compare output checksums.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Where to write the replayed files; defaults to `<manifest dir>/replay`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.parse().map_err(|_| format!("bad seed {a:?}"))?;
                let b: u64 = b.parse().map_err(|_| format!("bad seed {b:?}"))?;
                if a > b {
                    return Err(format!("empty seed span {part}"));
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| format!("bad seed {part:?}"))?),
        }
    }
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(SeedList(seeds))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: PathBuf,
    seeds: Option<SeedList>,
    overrides: Vec<String>,
) -> Result<()> {
    let preset: Option<Preset> = preset.as_deref().map(str::parse).transpose()?;
    let text = match &config {
        Some(p) => read(p)?,
        None => String::new(),
    };
    let resolved = build_config(&text, preset, &overrides)?;
    let seeds = seeds.map(|s| s.0).unwrap_or_else(|| preset.map_or_else(|| vec![resolved.seed], Preset::default_seeds));
    let checksums = execute(&resolved, preset, &seeds, &out)?;
    let manifest = RunManifest {
        config_path: config.map(|p| p.to_string_lossy().into_owned()),
        preset,
        out_dir: out.to_string_lossy().into_owned(),
        seeds,
        overrides,
        config: serialize_config(&resolved)?,
        checksums,
    };
    let path = write_manifest(&manifest, &out)?;
    for (file, sum) in &manifest.checksums {
        println!("{sum}  {file}");
    }
    println!("manifest: {}", path.display());
    Ok(())
}

fn validate(config: PathBuf) -> Result<()> {
    parse_config(&read(&config)?)?;
    println!("{}: ok", config.display());
    Ok(())
}

fn replay_cmd(manifest_path: PathBuf, out: Option<PathBuf>) -> Result<bool> {
    let manifest = read_manifest(&manifest_path)?;
    let out = out.unwrap_or_else(|| manifest_path.parent().unwrap_or(Path::new(".")).join("replay"));
    let mismatches = replay(&manifest, &out)?;
    for m in &mismatches {
        eprintln!(
            "mismatch {}: expected {} got {}",
            m.file,
            m.expected.as_deref().unwrap_or("(absent)"),
            m.actual.as_deref().unwrap_or("(absent)")
        );
    }
    if mismatches.is_empty() {
        println!("replay matches {} files", manifest.checksums.len());
    }
    Ok(mismatches.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            preset,
            out,
            seeds,
            overrides,
        } => run(config, preset, out, seeds, overrides).map(|()| true),
        Command::Validate { config } => validate(config).map(|()| true),
        Command::Replay { manifest, out } => replay_cmd(manifest, out),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
