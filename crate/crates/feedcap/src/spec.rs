//! Channel specifications: `name[:p1,p2,...][@dim][^n]` or a path to a
//! channel file.
//!
//! `dim` defaults to 2 and `^n` (n = 1 or 2) takes the n-fold tensor power.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use feedcap_core::channels::make_channel;
use feedcap_core::{ChannelKind, KrausChannel};

use crate::error::{config, CliError, Result};
use crate::format;

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSpec {
    Named {
        kind: ChannelKind,
        params: Vec<f64>,
        dim: usize,
        power: usize,
    },
    File(PathBuf),
}

impl ChannelSpec {
    pub fn build(&self) -> Result<KrausChannel> {
        match self {
            ChannelSpec::Named {
                kind,
                params,
                dim,
                power,
            } => Ok(make_channel(*kind, params, *dim)?.tensor_power(*power)),
            ChannelSpec::File(path) => format::load_channel(path),
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Named {
                kind,
                params,
                dim,
                power,
            } => {
                write!(f, "{kind}")?;
                if !params.is_empty() {
                    let ps: Vec<String> = params.iter().map(f64::to_string).collect();
                    write!(f, ":{}", ps.join(","))?;
                }
                if *dim != 2 {
                    write!(f, "@{dim}")?;
                }
                if *power != 1 {
                    write!(f, "^{power}")?;
                }
                Ok(())
            }
            ChannelSpec::File(path) => write!(f, "{}", path.display()),
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let path = PathBuf::from(s);
        if path.is_file() {
            return Ok(ChannelSpec::File(path));
        }
        if s.ends_with(".json") {
            return Err(CliError::Parse {
                path,
                message: "channel file not found".into(),
            });
        }
        let (rest, power) = match s.rsplit_once('^') {
            Some((r, n)) => (
                r,
                n.parse::<usize>()
                    .map_err(|_| config(format!("channel `{s}`: bad power `{n}`")))?,
            ),
            None => (s, 1),
        };
        if !(1..=2).contains(&power) {
            return Err(config(format!(
                "channel `{s}`: tensor power must be 1 or 2"
            )));
        }
        let (rest, dim) = match rest.rsplit_once('@') {
            Some((r, d)) => (
                r,
                d.parse::<usize>()
                    .map_err(|_| config(format!("channel `{s}`: bad dimension `{d}`")))?,
            ),
            None => (rest, 2),
        };
        let (name, params) = match rest.split_once(':') {
            Some((n, ps)) => {
                let params = ps
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<f64>()
                            .map_err(|_| config(format!("channel `{s}`: bad parameter `{p}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (n, params)
            }
            None => (rest, Vec::new()),
        };
        let kind: ChannelKind = name
            .parse()
            .map_err(|e| config(format!("channel `{s}`: {e}")))?;
        if params.len() != kind.param_count() {
            return Err(config(format!(
                "channel `{s}`: {kind} takes {} parameter(s), got {}",
                kind.param_count(),
                params.len()
            )));
        }
        Ok(ChannelSpec::Named {
            kind,
            params,
            dim,
            power,
        })
    }
}
