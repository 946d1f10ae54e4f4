//! JSON file formats for channels and protocols.
//!
//! Matrices are `{"re": [[...]], "im": [[...]]}` with rows outermost; `im`
//! may be omitted for real matrices. A channel file is
//! `{"d_in": n, "d_out": m, "kraus": [matrix, ...]}`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use feedcap_core::channels::{InstrumentOutcome, COMPLETENESS_TOL};
use feedcap_core::feedback::ProductTerm;
use feedcap_core::{
    ComplexMatrix, DensityMatrix, FeedbackProtocol, InputClass, Instrument, KrausChannel,
    MessageInput, C64,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.rows())
                .map(|r| (0..m.cols()).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    /// Converts to a matrix, naming `field` in shape errors.
    pub fn to_matrix(&self, field: &str) -> std::result::Result<ComplexMatrix, String> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(format!("{field}.re: empty matrix"));
        }
        if let Some(r) = self.re.iter().position(|row| row.len() != cols) {
            return Err(format!(
                "{field}.re[{r}]: expected {cols} entries, found {}",
                self.re[r].len()
            ));
        }
        if let Some(im) = &self.im {
            if im.len() != rows {
                return Err(format!(
                    "{field}.im: expected {rows} rows, found {}",
                    im.len()
                ));
            }
            if let Some(r) = im.iter().position(|row| row.len() != cols) {
                return Err(format!(
                    "{field}.im[{r}]: expected {cols} entries, found {}",
                    im[r].len()
                ));
            }
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let im = self.im.as_ref().map_or(0.0, |m| m[r][c]);
                data.push(C64::new(self.re[r][c], im));
            }
        }
        ComplexMatrix::new(rows, cols, data).map_err(|e| format!("{field}: {e}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub d_in: usize,
    pub d_out: usize,
    pub kraus: Vec<MatrixJson>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self {
            d_in: ch.d_in(),
            d_out: ch.d_out(),
            kraus: ch.kraus().iter().map(MatrixJson::from_matrix).collect(),
        }
    }

    pub fn to_channel(&self) -> std::result::Result<KrausChannel, String> {
        if self.kraus.is_empty() {
            return Err("kraus: no operators".into());
        }
        let ops = kraus_list(&self.kraus, "kraus")?;
        for (k, op) in ops.iter().enumerate() {
            if op.rows() != self.d_out || op.cols() != self.d_in {
                return Err(format!(
                    "kraus[{k}]: shape {}x{} does not match d_out x d_in = {}x{}",
                    op.rows(),
                    op.cols(),
                    self.d_out,
                    self.d_in
                ));
            }
        }
        let ch = KrausChannel::new(ops).map_err(|e| format!("kraus: {e}"))?;
        let residual = ch.completeness_residual();
        if !(residual <= COMPLETENESS_TOL) {
            return Err(format!(
                "kraus: completeness residual {residual:.3e} exceeds {COMPLETENESS_TOL:e}"
            ));
        }
        Ok(ch)
    }
}

fn kraus_list(ms: &[MatrixJson], field: &str) -> std::result::Result<Vec<ComplexMatrix>, String> {
    ms.iter()
        .enumerate()
        .map(|(k, m)| m.to_matrix(&format!("{field}[{k}]")))
        .collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

fn parse_err(path: &Path) -> impl Fn(String) -> CliError + '_ {
    move |message| CliError::Parse {
        path: path.into(),
        message,
    }
}

pub fn parse_channel(text: &str) -> std::result::Result<KrausChannel, String> {
    let file: ChannelFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    file.to_channel()
}

pub fn load_channel(path: &Path) -> Result<KrausChannel> {
    parse_channel(&read(path)?).map_err(parse_err(path))
}

pub fn save_channel(ch: &KrausChannel, path: &Path) -> Result<()> {
    fs::write(
        path,
        serde_json::to_string_pretty(&ChannelFile::from_channel(ch))?,
    )?;
    Ok(())
}

/// One message of a protocol file: `q1` and `q2` for a product input,
/// `terms` for a separable one, or `state` (with optional `dims`) for any.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageJson {
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q2: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub weight: f64,
    pub q1: MatrixJson,
    pub q2: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeJson {
    pub label: usize,
    pub kraus: Vec<MatrixJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionJson {
    pub message: usize,
    pub outcome: usize,
    pub kraus: Vec<MatrixJson>,
}

/// Protocol file. Corrections missing from the list default to the identity
/// on `Q2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    pub input_class: String,
    pub messages: Vec<MessageJson>,
    pub instrument: Vec<OutcomeJson>,
    #[serde(default)]
    pub corrections: Vec<CorrectionJson>,
}

fn density(m: &MatrixJson, field: &str) -> std::result::Result<DensityMatrix, String> {
    DensityMatrix::from_matrix(m.to_matrix(field)?).map_err(|e| format!("{field}: {e}"))
}

impl ProtocolFile {
    pub fn from_protocol(p: &FeedbackProtocol) -> Self {
        let messages = p
            .messages()
            .iter()
            .map(|m| match (&m.certificate, p.input_class()) {
                (Some(terms), _) => MessageJson {
                    probability: m.probability,
                    terms: Some(
                        terms
                            .iter()
                            .map(|t| TermJson {
                                weight: t.weight,
                                q1: MatrixJson::from_matrix(t.q1.matrix()),
                                q2: MatrixJson::from_matrix(t.q2.matrix()),
                            })
                            .collect(),
                    ),
                    ..MessageJson::default()
                },
                _ => MessageJson {
                    probability: m.probability,
                    state: Some(MatrixJson::from_matrix(m.state.matrix())),
                    dims: Some([m.state.dims()[0], m.state.dims()[1]]),
                    ..MessageJson::default()
                },
            })
            .collect();
        let instrument = p
            .instrument()
            .outcomes()
            .iter()
            .map(|o| OutcomeJson {
                label: o.label,
                kraus: o.kraus.iter().map(MatrixJson::from_matrix).collect(),
            })
            .collect();
        let corrections = p
            .corrections()
            .iter()
            .map(|(&(message, outcome), ch)| CorrectionJson {
                message,
                outcome,
                kraus: ch.kraus().iter().map(MatrixJson::from_matrix).collect(),
            })
            .collect();
        Self {
            input_class: p.input_class().name().into(),
            messages,
            instrument,
            corrections,
        }
    }

    pub fn to_protocol(&self) -> std::result::Result<FeedbackProtocol, String> {
        let class: InputClass = self
            .input_class
            .parse()
            .map_err(|e| format!("input_class: {e}"))?;
        let mut messages = Vec::with_capacity(self.messages.len());
        for (i, m) in self.messages.iter().enumerate() {
            let f = format!("messages[{i}]");
            let msg = match (&m.q1, &m.q2, &m.terms, &m.state) {
                (Some(a), Some(b), None, None) => MessageInput::product(
                    m.probability,
                    &density(a, &format!("{f}.q1"))?,
                    &density(b, &format!("{f}.q2"))?,
                ),
                (None, None, Some(terms), None) => {
                    let terms = terms
                        .iter()
                        .enumerate()
                        .map(|(k, t)| {
                            Ok(ProductTerm {
                                weight: t.weight,
                                q1: density(&t.q1, &format!("{f}.terms[{k}].q1"))?,
                                q2: density(&t.q2, &format!("{f}.terms[{k}].q2"))?,
                            })
                        })
                        .collect::<std::result::Result<Vec<_>, String>>()?;
                    MessageInput::separable(m.probability, terms)
                        .map_err(|e| format!("{f}.terms: {e}"))?
                }
                (None, None, None, Some(s)) => {
                    let rho = density(s, &format!("{f}.state"))?;
                    let dims = match m.dims {
                        Some(d) => d.to_vec(),
                        None => {
                            let d = (rho.dim() as f64).sqrt().round() as usize;
                            if d * d != rho.dim() {
                                return Err(format!(
                                    "{f}.dims: required when the state dimension is not a square"
                                ));
                            }
                            vec![d, d]
                        }
                    };
                    let rho = rho.with_dims(dims).map_err(|e| format!("{f}.dims: {e}"))?;
                    MessageInput::entangled(m.probability, rho)
                }
                _ => return Err(format!("{f}: give exactly one of q1+q2, terms or state")),
            };
            messages.push(msg);
        }
        let outcomes = self
            .instrument
            .iter()
            .enumerate()
            .map(|(j, o)| {
                Ok(InstrumentOutcome {
                    label: o.label,
                    kraus: kraus_list(&o.kraus, &format!("instrument[{j}].kraus"))?,
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let instrument = Instrument::new(outcomes).map_err(|e| format!("instrument: {e}"))?;
        let d2 = messages.first().ok_or("messages: empty list")?.state.dims()[1];
        let mut corrections = BTreeMap::new();
        for (k, c) in self.corrections.iter().enumerate() {
            let ch = KrausChannel::new(kraus_list(&c.kraus, &format!("corrections[{k}].kraus"))?)
                .map_err(|e| format!("corrections[{k}].kraus: {e}"))?;
            if corrections.insert((c.message, c.outcome), ch).is_some() {
                return Err(format!(
                    "corrections[{k}]: duplicate (message, outcome) = ({}, {})",
                    c.message, c.outcome
                ));
            }
        }
        for i in 0..messages.len() {
            for j in instrument.labels() {
                corrections
                    .entry((i, j))
                    .or_insert_with(|| KrausChannel::identity(d2));
            }
        }
        FeedbackProtocol::new(messages, class, instrument, corrections).map_err(|e| e.to_string())
    }
}

pub fn parse_protocol(text: &str) -> std::result::Result<FeedbackProtocol, String> {
    let file: ProtocolFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    file.to_protocol()
}

pub fn load_protocol(path: &Path) -> Result<FeedbackProtocol> {
    parse_protocol(&read(path)?).map_err(parse_err(path))
}

pub fn save_protocol(p: &FeedbackProtocol, path: &Path) -> Result<()> {
    fs::write(
        path,
        serde_json::to_string_pretty(&ProtocolFile::from_protocol(p))?,
    )?;
    Ok(())
}
