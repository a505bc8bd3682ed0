//! Flat `key=value` experiment configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use spherenet::netsim::SLaw;
use spherenet::orthopoly::ActivationSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Expand,
    Bounds,
    SteinCheck,
    RateSweep,
    Kernel,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Expand => "expand",
            Command::Bounds => "bounds",
            Command::SteinCheck => "stein-check",
            Command::RateSweep => "rate-sweep",
            Command::Kernel => "kernel",
        })
    }
}

/// Keys accepted in config files.
pub const KEYS: [&str; 11] = [
    "d",
    "activation",
    "s_law",
    "widths",
    "samples",
    "grid",
    "seed",
    "out",
    "lmax",
    "tests",
    "control",
];

/// Raw settings: file values overridden by flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key=value, got `{line}`", no + 1))?;
            let k = k.trim().replace('-', "_");
            if !KEYS.contains(&k.as_str()) {
                bail!("line {}: unknown key `{k}`", no + 1);
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub d: usize,
    pub activation: ActivationSpec,
    pub s_law: SLaw,
    pub widths: Vec<usize>,
    pub samples: usize,
    pub grid: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Expansion degree (`expand`, `kernel`) or kernel degree `k`
    /// (`stein-check`); defaults to the polynomial degree.
    pub lmax: Option<usize>,
    pub tests: usize,
    pub control: bool,
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("bad integer `{p}` in list"))
        })
        .collect()
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => bail!("expected a boolean, got `{other}`"),
    }
}

impl ExperimentConfig {
    pub fn from_settings(command: Command, s: &Settings) -> Result<Self> {
        let seed = s
            .get("seed")
            .context("a seed is required (--seed or seed= in the config file)")?
            .parse::<u64>()
            .context("seed must be an unsigned 64-bit integer")?;
        let d = s
            .get("d")
            .unwrap_or("3")
            .parse::<usize>()
            .context("d must be an integer")?;
        let activation: ActivationSpec = s
            .get("activation")
            .unwrap_or("relu")
            .parse()
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let s_law: SLaw = s
            .get("s_law")
            .unwrap_or("rademacher")
            .parse()
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let default_samples = match command {
            Command::SteinCheck => "1000000",
            _ => "4096",
        };
        let widths = parse_list(s.get("widths").unwrap_or("8,16,32,64,128,256,512"))?;
        if widths.windows(2).any(|w| w[0] >= w[1]) {
            bail!("widths must be strictly increasing");
        }
        let config = Self {
            command,
            d,
            activation,
            s_law,
            widths,
            samples: s
                .get("samples")
                .unwrap_or(default_samples)
                .parse()
                .context("samples must be an integer")?,
            grid: s
                .get("grid")
                .unwrap_or("8")
                .parse()
                .context("grid must be an integer")?,
            seed,
            out: PathBuf::from(s.get("out").unwrap_or(".")),
            lmax: s
                .get("lmax")
                .map(|v| v.parse::<usize>())
                .transpose()
                .context("lmax must be an integer")?,
            tests: s
                .get("tests")
                .unwrap_or("20")
                .parse()
                .context("tests must be an integer")?,
            control: s
                .get("control")
                .map(parse_bool)
                .transpose()?
                .unwrap_or(false),
        };
        Ok(config)
    }

    /// Canonical `key=value` lines of every setting that affects results.
    pub fn canonical(&self) -> String {
        let widths: Vec<String> = self.widths.iter().map(usize::to_string).collect();
        let mut lines = vec![
            format!("command={}", self.command),
            format!("d={}", self.d),
            format!("activation={}", self.activation),
            format!("s_law={}", self.s_law),
            format!("widths={}", widths.join(",")),
            format!("samples={}", self.samples),
            format!("grid={}", self.grid),
            format!("seed={}", self.seed),
            format!("tests={}", self.tests),
            format!("control={}", self.control),
        ];
        if let Some(l) = self.lmax {
            lines.push(format!("lmax={l}"));
        }
        lines.join("\n")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut s = Settings::parse("# comment\nd = 5\nactivation=poly:0,0,1\nseed=3\n").unwrap();
        s.set("d", "4");
        let c = ExperimentConfig::from_settings(Command::Expand, &s).unwrap();
        assert_eq!(c.d, 4);
        assert_eq!(c.seed, 3);
        assert_eq!(c.activation.degree(), Some(2));
        assert!(Settings::parse("colour=blue").is_err());
        assert!(Settings::parse("d").is_err());
    }

    #[test]
    fn seed_is_mandatory() {
        let s = Settings::parse("d=3").unwrap();
        assert!(ExperimentConfig::from_settings(Command::Bounds, &s).is_err());
    }

    #[test]
    fn widths_must_increase() {
        let s = Settings::parse("seed=1\nwidths=4,2").unwrap();
        assert!(ExperimentConfig::from_settings(Command::RateSweep, &s).is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut s = Settings::parse("seed=1").unwrap();
        let a = ExperimentConfig::from_settings(Command::Kernel, &s)
            .unwrap()
            .hash();
        s.set("out", "/tmp/elsewhere");
        assert_eq!(
            a,
            ExperimentConfig::from_settings(Command::Kernel, &s)
                .unwrap()
                .hash()
        );
        s.set("seed", "2");
        assert_ne!(
            a,
            ExperimentConfig::from_settings(Command::Kernel, &s)
                .unwrap()
                .hash()
        );
    }
}
