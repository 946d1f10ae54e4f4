//! Capacity references for the bound checks: closed forms where they are
//! known, otherwise the qubit grid search.

use feedcap_core::holevo::chi_grid_oracle_qubit;
use feedcap_core::math::log2;
use feedcap_core::{ChannelKind, KrausChannel};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::spec::ChannelSpec;

/// Default allowance for a grid reference at resolution 24.
pub const GRID_SLACK: f64 = 2e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiSource {
    /// Closed form when known, else the grid.
    #[default]
    Auto,
    Grid,
    ClosedForm,
}

impl std::str::FromStr for ChiSource {
    type Err = crate::error::CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(ChiSource::Auto),
            "grid" => Ok(ChiSource::Grid),
            "closed-form" => Ok(ChiSource::ClosedForm),
            other => Err(config(format!(
                "chi-source: unknown value `{other}` (auto, grid, closed-form)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiReference {
    pub value: f64,
    pub source: String,
    /// Amount by which `value` may undershoot the true capacity.
    pub slack: f64,
}

/// Single-use capacity of the unitarily covariant zoo channels.
pub fn closed_form_chi(spec: &ChannelSpec) -> Option<f64> {
    let ChannelSpec::Named {
        kind,
        params,
        dim,
        power: 1,
    } = spec
    else {
        return None;
    };
    let d = *dim as f64;
    match kind {
        ChannelKind::Identity | ChannelKind::Dephasing => Some(log2(d)),
        ChannelKind::Erasure => Some((1.0 - params[0]) * log2(d)),
        ChannelKind::Depolarizing => {
            let p = params[0];
            let big = 1.0 - p + p / d;
            let small = p / d;
            let h = |x: f64| if x > 0.0 { -x * log2(x) } else { 0.0 };
            Some(log2(d) - h(big) - (d - 1.0) * h(small))
        }
        ChannelKind::AmplitudeDamping => None,
    }
}

pub fn closed_reference(spec: &ChannelSpec) -> Option<ChiReference> {
    closed_form_chi(spec).map(|value| ChiReference {
        value,
        source: "closed-form".into(),
        slack: 0.0,
    })
}

pub fn chi_reference(
    spec: &ChannelSpec,
    ch: &KrausChannel,
    source: ChiSource,
    resolution: usize,
    grid_slack: f64,
) -> Result<ChiReference> {
    let closed = || closed_reference(spec);
    let grid = || -> Result<ChiReference> {
        if ch.d_in() != 2 {
            return Err(config(format!(
                "no capacity reference for `{spec}`: the grid needs a qubit input; pass chi1/chi2 explicitly"
            )));
        }
        Ok(ChiReference {
            value: chi_grid_oracle_qubit(ch, resolution)?,
            source: format!("grid:{resolution}"),
            slack: grid_slack,
        })
    };
    match source {
        ChiSource::Auto => closed().map_or_else(grid, Ok),
        ChiSource::Grid => grid(),
        ChiSource::ClosedForm => {
            closed().ok_or_else(|| config(format!("no closed-form capacity for `{spec}`")))
        }
    }
}

pub fn user_reference(value: f64, slack: f64) -> ChiReference {
    ChiReference {
        value,
        source: "user".into(),
        slack,
    }
}
