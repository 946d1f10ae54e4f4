//! Two-use classical-feedback protocols over a pair of channels.
//!
//! A message `i` (probability `p_i`) is encoded into a state on `Q1 ⊗ Q2`.
//! `Q1` goes through `omega`; the receiver applies an instrument to the
//! output and reports the outcome `j`; the sender then applies a
//! trace-preserving correction indexed by `(i, j)` to `Q2`, which is sent
//! through `lambda`. The memory register holding `i` is never touched, so
//! corrections are simply indexed by `i`.
//!
//! [`run_protocol`] tracks the per-message states and the message/output
//! mutual informations; [`verify_product_bounds`] and [`verify_eb_bound`]
//! check them against single-use capacity references.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::channels::{self, is_entanglement_breaking, EbVerdict, Instrument, KrausChannel};
use crate::error::{Error, Result};
use crate::matops::{self, ComplexMatrix};
use crate::quantum::{
    cq_mutual_information, cq_mutual_information_with_side, mutual_information, CqBranch, CqState,
    DensityMatrix, PROB_TOL,
};
use crate::random::{self, SeededRng};

/// Residual allowed between an input and its declared product/separable form.
pub const STRUCTURE_TOL: f64 = 1e-9;

/// Declared structure of the message inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputClass {
    Product,
    Separable,
    Entangled,
}

impl InputClass {
    pub const ALL: [InputClass; 3] = [
        InputClass::Product,
        InputClass::Separable,
        InputClass::Entangled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InputClass::Product => "product",
            InputClass::Separable => "separable",
            InputClass::Entangled => "entangled",
        }
    }
}

impl fmt::Display for InputClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for InputClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        InputClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownName {
                kind: "input class",
                name: s.into(),
            })
    }
}

/// One term `w ρ_Q1 ⊗ ρ_Q2` of a separable decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTerm {
    pub weight: f64,
    pub q1: DensityMatrix,
    pub q2: DensityMatrix,
}

/// A message and its encoding on `Q1 ⊗ Q2`. Separable inputs carry the
/// decomposition they were built from.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageInput {
    pub probability: f64,
    pub state: DensityMatrix,
    pub certificate: Option<Vec<ProductTerm>>,
}

impl MessageInput {
    pub fn product(probability: f64, q1: &DensityMatrix, q2: &DensityMatrix) -> Self {
        Self {
            probability,
            state: bipartite(q1, q2),
            certificate: None,
        }
    }

    pub fn separable(probability: f64, terms: Vec<ProductTerm>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or(Error::Empty("separable decomposition"))?;
        let d1 = first.q1.dim();
        let d2 = first.q2.dim();
        let mut acc = ComplexMatrix::zeros(d1 * d2, d1 * d2);
        for t in &terms {
            if t.q1.dim() != d1 || t.q2.dim() != d2 {
                return Err(Error::DimensionMismatch {
                    what: "separable term dim",
                    expected: d1 * d2,
                    found: t.q1.dim() * t.q2.dim(),
                });
            }
            acc.add_assign_scaled(&matops::tensor(t.q1.matrix(), t.q2.matrix()), t.weight);
        }
        let state = DensityMatrix::new(acc, vec![d1, d2])?;
        Ok(Self {
            probability,
            state,
            certificate: Some(terms),
        })
    }

    pub fn entangled(probability: f64, state: DensityMatrix) -> Self {
        Self {
            probability,
            state,
            certificate: None,
        }
    }
}

fn bipartite(q1: &DensityMatrix, q2: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::trusted(
        matops::tensor(q1.matrix(), q2.matrix()),
        vec![q1.dim(), q2.dim()],
    )
}

/// Message inputs, receiver instrument and `(message, outcome)`-indexed
/// corrections on `Q2`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackProtocol {
    messages: Vec<MessageInput>,
    input_class: InputClass,
    instrument: Instrument,
    corrections: BTreeMap<(usize, usize), KrausChannel>,
}

impl FeedbackProtocol {
    pub fn new(
        messages: Vec<MessageInput>,
        input_class: InputClass,
        instrument: Instrument,
        corrections: BTreeMap<(usize, usize), KrausChannel>,
    ) -> Result<Self> {
        let first = messages.first().ok_or(Error::Empty("message list"))?;
        let dims = first.state.dims().to_vec();
        if dims.len() != 2 {
            return Err(Error::InvalidPartition(
                "message inputs must have dims [d_q1, d_q2]",
            ));
        }
        let mut sum = 0.0;
        for (idx, m) in messages.iter().enumerate() {
            if m.state.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch {
                    what: "message input dim",
                    expected: first.state.dim(),
                    found: m.state.dim(),
                });
            }
            if !(m.probability >= 0.0) {
                return Err(Error::InvalidProbabilities { sum: m.probability });
            }
            sum += m.probability;
            check_structure(idx, m, input_class)?;
        }
        if !((sum - 1.0).abs() <= PROB_TOL) {
            return Err(Error::InvalidProbabilities { sum });
        }
        for i in 0..messages.len() {
            for j in instrument.labels() {
                let c = corrections.get(&(i, j)).ok_or(Error::MissingCorrection {
                    message: i,
                    outcome: j,
                })?;
                if c.d_in() != dims[1] || c.d_out() != dims[1] {
                    return Err(Error::DimensionMismatch {
                        what: "correction dim",
                        expected: dims[1],
                        found: c.d_in(),
                    });
                }
                let residual = c.completeness_residual();
                if !(residual <= channels::COMPLETENESS_TOL) {
                    return Err(Error::NotTracePreserving { residual });
                }
            }
        }
        Ok(Self {
            messages,
            input_class,
            instrument,
            corrections,
        })
    }

    /// Protocol with no feedback: a one-outcome identity instrument and
    /// identity corrections.
    pub fn without_feedback(
        messages: Vec<MessageInput>,
        input_class: InputClass,
        q1_out: usize,
    ) -> Result<Self> {
        let d2 = messages
            .first()
            .ok_or(Error::Empty("message list"))?
            .state
            .dims()[1];
        let corrections = (0..messages.len())
            .map(|i| ((i, 0), KrausChannel::identity(d2)))
            .collect();
        Self::new(
            messages,
            input_class,
            Instrument::trivial(q1_out),
            corrections,
        )
    }

    pub fn messages(&self) -> &[MessageInput] {
        &self.messages
    }

    pub fn input_class(&self) -> InputClass {
        self.input_class
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    pub fn corrections(&self) -> &BTreeMap<(usize, usize), KrausChannel> {
        &self.corrections
    }

    pub fn correction(&self, message: usize, outcome: usize) -> Option<&KrausChannel> {
        self.corrections.get(&(message, outcome))
    }

    pub fn q1_dim(&self) -> usize {
        self.messages[0].state.dims()[0]
    }

    pub fn q2_dim(&self) -> usize {
        self.messages[0].state.dims()[1]
    }
}

fn check_structure(idx: usize, m: &MessageInput, class: InputClass) -> Result<()> {
    match class {
        InputClass::Product => {
            let a = m.state.reduce(&[0])?;
            let b = m.state.reduce(&[1])?;
            let residual = bipartite(&a, &b).matrix().max_abs_diff(m.state.matrix());
            if !(residual <= STRUCTURE_TOL) {
                return Err(Error::InputStructure {
                    index: idx,
                    residual,
                });
            }
        }
        InputClass::Separable => {
            let terms = m.certificate.as_ref().ok_or(Error::InputStructure {
                index: idx,
                residual: f64::INFINITY,
            })?;
            let wsum: f64 = terms.iter().map(|t| t.weight).sum();
            if terms.iter().any(|t| !(t.weight >= 0.0)) || !((wsum - 1.0).abs() <= PROB_TOL) {
                return Err(Error::InvalidProbabilities { sum: wsum });
            }
            let d = m.state.dim();
            let mut acc = ComplexMatrix::zeros(d, d);
            for t in terms {
                if t.q1.dim() * t.q2.dim() != d {
                    return Err(Error::DimensionMismatch {
                        what: "separable term dim",
                        expected: d,
                        found: t.q1.dim() * t.q2.dim(),
                    });
                }
                acc.add_assign_scaled(&matops::tensor(t.q1.matrix(), t.q2.matrix()), t.weight);
            }
            let residual = acc.max_abs_diff(m.state.matrix());
            if !(residual <= STRUCTURE_TOL) {
                return Err(Error::InputStructure {
                    index: idx,
                    residual,
                });
            }
        }
        InputClass::Entangled => {}
    }
    Ok(())
}

/// Informations (bits) and per-message states of one protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolReport {
    /// `S(M:Q1')` after the instrument.
    pub info_q1: f64,
    /// `S(M:Q2'|Q1') = info_total - info_q1`.
    pub info_q2_given_q1: f64,
    /// `S(M:Q1'Q2')`.
    pub info_total: f64,
    /// `S(M:Q1')` right after `omega`, before the instrument.
    pub info_q1_before_feedback: f64,
    /// `S(MQ1':Q2')`.
    pub info_memory_q1_to_q2: f64,
    /// Final states on `Q1' ⊗ Q2'`, labelled by message index.
    pub per_message_states: CqState,
    /// States on `Q1' ⊗ Q2` after the correction, before `lambda`.
    pub post_feedback_states: CqState,
    /// Minimum partial-transpose eigenvalue of each post-feedback state.
    pub min_pt_eigenvalues: Vec<f64>,
}

impl ProtocolReport {
    pub fn min_pt_eigenvalue(&self) -> f64 {
        self.min_pt_eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Gap between the two chain-rule expansions of `S(M:Q2'|Q1')`:
    /// `info_total - info_q1` and `S(MQ1':Q2') - S(Q1':Q2')`.
    pub fn chain_rule_residual(&self) -> Result<f64> {
        let avg = self.per_message_states.average();
        let q1_q2 = mutual_information(&avg, &[0], &[1])?;
        Ok((self.info_q2_given_q1 - (self.info_memory_q1_to_q2 - q1_q2)).abs())
    }
}

/// Evolves every message through `omega`, the instrument, the corrections and
/// `lambda`, then evaluates the message/output informations.
pub fn run_protocol(
    p: &FeedbackProtocol,
    omega: &KrausChannel,
    lambda: &KrausChannel,
) -> Result<ProtocolReport> {
    if omega.d_in() != p.q1_dim() {
        return Err(Error::DimensionMismatch {
            what: "omega input vs Q1",
            expected: p.q1_dim(),
            found: omega.d_in(),
        });
    }
    if p.instrument.d_in() != omega.d_out() {
        return Err(Error::DimensionMismatch {
            what: "instrument input vs omega output",
            expected: omega.d_out(),
            found: p.instrument.d_in(),
        });
    }
    if lambda.d_in() != p.q2_dim() {
        return Err(Error::DimensionMismatch {
            what: "lambda input vs Q2",
            expected: p.q2_dim(),
            found: lambda.d_in(),
        });
    }

    let mut before = Vec::with_capacity(p.messages.len());
    let mut post = Vec::with_capacity(p.messages.len());
    let mut finals = Vec::with_capacity(p.messages.len());
    let mut min_pt = Vec::with_capacity(p.messages.len());

    for (i, m) in p.messages.iter().enumerate() {
        let after_first = omega.apply_on_subsystem(&m.state, 0)?;
        let dims = after_first.dims().to_vec();
        let out_dims = vec![p.instrument.d_out(), dims[1]];
        let n = out_dims[0] * out_dims[1];
        let mut omega_i = ComplexMatrix::zeros(n, n);
        for outcome in p.instrument.outcomes() {
            let (branch, bdims) = channels::apply_operators_on_subsystem(
                &outcome.kraus,
                after_first.matrix(),
                &dims,
                0,
            );
            let corr = p
                .correction(i, outcome.label)
                .ok_or(Error::MissingCorrection {
                    message: i,
                    outcome: outcome.label,
                })?;
            let (corrected, _) =
                channels::apply_operators_on_subsystem(corr.kraus(), &branch, &bdims, 1);
            omega_i = omega_i.add(&corrected);
        }
        let omega_i = DensityMatrix::trusted(omega_i, out_dims);
        min_pt.push(omega_i.min_partial_transpose_eigenvalue(1)?);
        let final_i = lambda.apply_on_subsystem(&omega_i, 1)?;

        before.push(CqBranch {
            probability: m.probability,
            label: i,
            state: after_first,
        });
        post.push(CqBranch {
            probability: m.probability,
            label: i,
            state: omega_i,
        });
        finals.push(CqBranch {
            probability: m.probability,
            label: i,
            state: final_i,
        });
    }

    let before = CqState::new(before)?;
    let per_message_states = CqState::new(finals)?;
    let post_feedback_states = CqState::new(post)?;

    let info_q1 = cq_mutual_information(&per_message_states, &[0])?;
    let info_total = cq_mutual_information(&per_message_states, &[0, 1])?;
    let info_memory_q1_to_q2 = cq_mutual_information_with_side(&per_message_states, &[0], &[1])?;
    let info_q1_before_feedback = cq_mutual_information(&before, &[0])?;

    Ok(ProtocolReport {
        info_q1,
        info_q2_given_q1: info_total - info_q1,
        info_total,
        info_q1_before_feedback,
        info_memory_q1_to_q2,
        per_message_states,
        post_feedback_states,
        min_pt_eigenvalues: min_pt,
    })
}

/// Verification tolerance: `base + oracle_slack`, both reported.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub base: f64,
    /// Allowance for capacity references that are grid lower bounds.
    pub oracle_slack: f64,
}

impl Tolerance {
    pub const GRID_24: Tolerance = Tolerance {
        base: 1e-6,
        oracle_slack: 2e-3,
    };
    pub const EXACT: Tolerance = Tolerance {
        base: 1e-6,
        oracle_slack: 0.0,
    };

    pub fn total(self) -> f64 {
        self.base + self.oracle_slack
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::GRID_24
    }
}

/// The inequalities checked on a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bound {
    /// `S(M:Q1') <= chi_1`
    FirstUse,
    /// `S(M:Q2'|Q1') <= chi_2`
    ConditionalSecondUse,
    /// `S(M:Q1'Q2') <= chi_1 + chi_2`
    TotalCapacity,
    /// `S(MQ1':Q2') <= chi_2`
    MemoryJointSecondUse,
    /// `S(M:Q2'|Q1') <= S(MQ1':Q2')`
    ConditioningChain,
    /// `S(M:Q1'Q2') <= S(M:Q1') + chi_2`
    ChainedTotal,
}

impl Bound {
    pub fn name(self) -> &'static str {
        match self {
            Bound::FirstUse => "first-use",
            Bound::ConditionalSecondUse => "conditional-second-use",
            Bound::TotalCapacity => "total-capacity",
            Bound::MemoryJointSecondUse => "memory-joint-second-use",
            Bound::ConditioningChain => "conditioning-chain",
            Bound::ChainedTotal => "chained-total",
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub bound: Bound,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative values within the tolerance still pass.
    pub margin: f64,
    pub passed: bool,
}

impl BoundCheck {
    fn new(bound: Bound, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            bound,
            lhs,
            rhs,
            margin: rhs - lhs,
            passed: lhs <= rhs + tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationVerdict {
    pub checks: Vec<BoundCheck>,
    pub tolerance: Tolerance,
}

impl VerificationVerdict {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn violations(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Smallest margin over all checks.
    pub fn min_margin(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self, bound: Bound) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.bound == bound)
    }
}

/// Checks the three single-use capacity bounds for product or separable
/// inputs. `chi1_ref`/`chi2_ref` must be upper-bound-safe references (closed
/// forms, or grid values with `tol.oracle_slack` covering the grid error).
pub fn verify_product_bounds(
    report: &ProtocolReport,
    chi1_ref: f64,
    chi2_ref: f64,
    tol: Tolerance,
) -> VerificationVerdict {
    let t = tol.total();
    VerificationVerdict {
        checks: vec![
            BoundCheck::new(Bound::FirstUse, report.info_q1, chi1_ref, t),
            BoundCheck::new(
                Bound::ConditionalSecondUse,
                report.info_q2_given_q1,
                chi2_ref,
                t,
            ),
            BoundCheck::new(
                Bound::TotalCapacity,
                report.info_total,
                chi1_ref + chi2_ref,
                t,
            ),
        ],
        tolerance: tol,
    }
}

/// Runs `p` with an entanglement-breaking first channel and checks the
/// second-use and chained bounds, which hold for any input class. With
/// `chi1_ref` the first-use and total-capacity bounds are checked as well.
/// Refuses to run unless `omega` is certified entanglement breaking.
pub fn verify_eb_bound(
    p: &FeedbackProtocol,
    omega: &KrausChannel,
    lambda: &KrausChannel,
    chi1_ref: Option<f64>,
    chi2_ref: f64,
    tol: Tolerance,
) -> Result<(ProtocolReport, VerificationVerdict)> {
    let eb = is_entanglement_breaking(omega);
    if eb.verdict != EbVerdict::Yes {
        return Err(Error::NotEntanglementBreaking {
            min_eigenvalue: eb.min_pt_eigenvalue,
            d_in: omega.d_in(),
            d_out: omega.d_out(),
        });
    }
    let report = run_protocol(p, omega, lambda)?;
    let t = tol.total();
    let mut checks = vec![
        BoundCheck::new(
            Bound::MemoryJointSecondUse,
            report.info_memory_q1_to_q2,
            chi2_ref,
            t,
        ),
        BoundCheck::new(
            Bound::ConditioningChain,
            report.info_q2_given_q1,
            report.info_memory_q1_to_q2,
            t,
        ),
        BoundCheck::new(
            Bound::ChainedTotal,
            report.info_total,
            report.info_q1 + chi2_ref,
            t,
        ),
    ];
    if let Some(chi1) = chi1_ref {
        checks.push(BoundCheck::new(Bound::FirstUse, report.info_q1, chi1, t));
        checks.push(BoundCheck::new(
            Bound::TotalCapacity,
            report.info_total,
            chi1 + chi2_ref,
            t,
        ));
    }
    Ok((
        report,
        VerificationVerdict {
            checks,
            tolerance: tol,
        },
    ))
}

/// Register dimensions of a random protocol: `Q1` input, `Q1` output of the
/// first channel (the instrument's space) and `Q2` input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProtocolDims {
    pub q1_in: usize,
    pub q1_out: usize,
    pub q2: usize,
}

impl ProtocolDims {
    pub const QUBITS: ProtocolDims = ProtocolDims {
        q1_in: 2,
        q1_out: 2,
        q2: 2,
    };

    pub fn for_channels(omega: &KrausChannel, lambda: &KrausChannel) -> Self {
        Self {
            q1_in: omega.d_in(),
            q1_out: omega.d_out(),
            q2: lambda.d_in(),
        }
    }
}

fn random_local_state(rng: &mut SeededRng, d: usize) -> DensityMatrix {
    let m = if rng.random_bool(0.5) {
        random::random_pure_density(rng, d)
    } else {
        random::random_density(rng, d)
    };
    DensityMatrix::trusted(m, vec![d])
}

/// Seeded random protocol of the given input class: random message weights,
/// an instrument with 2 to 4 outcomes on `Q1'` and a random channel as the
/// correction for every `(message, outcome)`.
pub fn random_protocol(
    class: InputClass,
    dims: ProtocolDims,
    n_messages: usize,
    seed: u64,
) -> Result<FeedbackProtocol> {
    if n_messages < 2 {
        return Err(Error::InvalidParameter {
            name: "n_messages",
            value: n_messages as f64,
        });
    }
    if dims.q1_in == 0 || dims.q1_out == 0 || dims.q2 == 0 {
        return Err(Error::InvalidParameter {
            name: "dims",
            value: 0.0,
        });
    }
    let mut rng = random::rng_from_seed(seed);
    let probs = random::random_probabilities(&mut rng, n_messages, 0.05);
    let mut messages = Vec::with_capacity(n_messages);
    for &p in &probs {
        let m = match class {
            InputClass::Product => {
                let a = random_local_state(&mut rng, dims.q1_in);
                let b = random_local_state(&mut rng, dims.q2);
                MessageInput::product(p, &a, &b)
            }
            InputClass::Separable => {
                let n_terms = rng.random_range(1..=4);
                let weights = random::random_probabilities(&mut rng, n_terms, 0.05);
                let terms = weights
                    .into_iter()
                    .map(|weight| ProductTerm {
                        weight,
                        q1: random_local_state(&mut rng, dims.q1_in),
                        q2: random_local_state(&mut rng, dims.q2),
                    })
                    .collect();
                MessageInput::separable(p, terms)?
            }
            InputClass::Entangled => {
                let d = dims.q1_in * dims.q2;
                let m = if rng.random_bool(0.7) {
                    random::random_pure_density(&mut rng, d)
                } else {
                    random::random_density(&mut rng, d)
                };
                MessageInput::entangled(p, DensityMatrix::trusted(m, vec![dims.q1_in, dims.q2]))
            }
        };
        messages.push(m);
    }
    let n_outcomes = rng.random_range(2..=4);
    let instrument = channels::random_instrument(&mut rng, dims.q1_out, n_outcomes);
    let mut corrections = BTreeMap::new();
    for i in 0..n_messages {
        for j in instrument.labels() {
            corrections.insert(
                (i, j),
                channels::random_channel(&mut rng, dims.q2, dims.q2, dims.q2 * dims.q2),
            );
        }
    }
    FeedbackProtocol::new(messages, class, instrument, corrections)
}

/// One entangled-input trial of the exploration harness.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationRow {
    pub trial: usize,
    pub seed: u64,
    pub info_q1: f64,
    pub info_q2_given_q1: f64,
    pub info_total: f64,
    /// `info_total - 2 chi_ref`.
    pub excess: f64,
    pub min_pt_eigenvalue: f64,
}

/// Observational summary: no pass/fail is implied.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationReport {
    pub chi_ref: f64,
    pub rows: Vec<ExplorationRow>,
    pub max_excess: f64,
    pub argmax_seed: Option<u64>,
}

impl ExplorationReport {
    /// Builds the summary from rows in trial order.
    pub fn from_rows(chi_ref: f64, rows: Vec<ExplorationRow>) -> Self {
        let mut max_excess = f64::NEG_INFINITY;
        let mut argmax_seed = None;
        for r in &rows {
            if r.excess > max_excess {
                max_excess = r.excess;
                argmax_seed = Some(r.seed);
            }
        }
        Self {
            chi_ref,
            rows,
            max_excess,
            argmax_seed,
        }
    }
}

/// Trial `trial` of [`explore_entangled_feedback`], drawing its protocol from
/// `derive_seed(seed, trial)`.
pub fn exploration_trial(
    channel: &KrausChannel,
    chi_ref: f64,
    seed: u64,
    trial: usize,
    n_messages: usize,
) -> Result<ExplorationRow> {
    let trial_seed = random::derive_seed(seed, trial as u64);
    let dims = ProtocolDims::for_channels(channel, channel);
    let p = random_protocol(InputClass::Entangled, dims, n_messages, trial_seed)?;
    let r = run_protocol(&p, channel, channel)?;
    Ok(ExplorationRow {
        trial,
        seed: trial_seed,
        info_q1: r.info_q1,
        info_q2_given_q1: r.info_q2_given_q1,
        info_total: r.info_total,
        excess: r.info_total - 2.0 * chi_ref,
        min_pt_eigenvalue: r.min_pt_eigenvalue(),
    })
}

/// Runs `trials` random entangled-input protocols with the same channel on
/// both uses and records how far the total information gets relative to
/// `2 chi_ref`.
pub fn explore_entangled_feedback(
    channel: &KrausChannel,
    chi_ref: f64,
    trials: usize,
    seed: u64,
    n_messages: usize,
) -> Result<ExplorationReport> {
    let rows = (0..trials)
        .map(|t| exploration_trial(channel, chi_ref, seed, t, n_messages))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExplorationReport::from_rows(chi_ref, rows))
}
