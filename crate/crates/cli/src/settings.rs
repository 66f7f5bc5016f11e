//! Flag / config-file / default resolution.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use qshape::spectral::{io, wireless_channel, wireline_channel, WirelessParams, WirelineParams};
use qshape::{fixtures, ChannelSpec64, FrequencyGrid64, PowerBudget64};

use crate::CommonArgs;

/// Values from `--config`, keyed by flag name without the leading dashes.
#[derive(Debug, Default)]
pub struct ConfigFile(HashMap<String, String>);

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let pairs =
            qshape::kv::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Self(pairs.into_iter().collect()))
    }

    /// Flag value if given, else the config value, else `None`.
    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key `{key}` = `{raw}`: {e}")),
        }
    }

    pub fn get_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    /// Boolean switch: set on the command line, or `true` in the config.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get::<bool>(None, key)?.unwrap_or(false))
    }
}

/// Resolved settings shared by every command.
#[derive(Debug)]
pub struct Common {
    pub channel: ChannelSpec64,
    pub budget: PowerBudget64,
    pub out: PathBuf,
    pub seed: u64,
    pub config: ConfigFile,
}

pub const DEFAULT_SEED: u64 = 7;

impl Common {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let config = ConfigFile::load(args.config.as_deref())?;
        let seed = config.get_or(args.seed, "seed", DEFAULT_SEED)?;
        let power = config.get_or(args.power, "power", fixtures::BUDGET)?;
        let budget = PowerBudget64::new(power).context("--power")?;
        let out = config.get_or(args.out.clone(), "out", PathBuf::from("."))?;
        let kind = config.get_or(args.channel.clone(), "channel", "wireline".to_string())?;
        let bins = config.get_or(args.bins, "bins", fixtures::BINS)?;
        let flo = config.get_or(args.flo, "flo", 0.0)?;
        let fhi = config.get_or(args.fhi, "fhi", 1.0)?;

        let channel = if let Some(path) = kind.strip_prefix("file:") {
            let file = std::fs::File::open(path)
                .with_context(|| format!("opening channel file {path}"))?;
            io::read_channel(file).with_context(|| format!("reading channel file {path}"))?
        } else {
            let grid = FrequencyGrid64::new(flo, fhi, bins).context("channel grid")?;
            match kind.as_str() {
                "wireline" => wireline_channel(&grid, &WirelineParams::default())?,
                "wireless" => wireless_channel(
                    &grid,
                    &WirelessParams {
                        seed,
                        ..WirelessParams::default()
                    },
                )?,
                other => {
                    bail!("unknown channel `{other}` (expected wireline, wireless or file:PATH)")
                }
            }
        };
        Ok(Self {
            channel,
            budget,
            out,
            seed,
            config,
        })
    }
}
