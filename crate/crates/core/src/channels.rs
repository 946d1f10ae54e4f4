//! Completely positive trace-preserving maps in Kraus and Choi form, a small
//! zoo of standard channels, random channels and instruments, and the
//! PPT-based entanglement-breaking test.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::matops::{self, ComplexMatrix, C64};
use crate::quantum::DensityMatrix;
use crate::random::{self, SeededRng};

/// Tolerance on `max |sum K^dagger K - I|`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Choi eigenvalues above this count towards the Kraus rank.
pub const CHOI_RANK_TOL: f64 = 1e-10;
/// Minimum partial-transpose eigenvalue still treated as PPT.
pub const PPT_TOL: f64 = 1e-9;

fn completeness_residual(ops: &[ComplexMatrix], d_in: usize) -> f64 {
    let mut acc = ComplexMatrix::zeros(d_in, d_in);
    for k in ops {
        acc = acc.add(&k.adjoint().matmul(k));
    }
    acc.max_abs_diff(&ComplexMatrix::identity(d_in))
}

fn check_shapes(ops: &[ComplexMatrix]) -> Result<(usize, usize)> {
    let first = ops.first().ok_or(Error::Empty("Kraus operator list"))?;
    let (d_out, d_in) = (first.rows(), first.cols());
    for k in ops {
        if k.cols() != d_in {
            return Err(Error::DimensionMismatch {
                what: "Kraus operator input dim",
                expected: d_in,
                found: k.cols(),
            });
        }
        if k.rows() != d_out {
            return Err(Error::DimensionMismatch {
                what: "Kraus operator output dim",
                expected: d_out,
                found: k.rows(),
            });
        }
    }
    Ok((d_in, d_out))
}

/// Channel `rho -> sum_k K rho K^dagger` with `K: d_in -> d_out`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    kraus: Vec<ComplexMatrix>,
    d_in: usize,
    d_out: usize,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let (d_in, d_out) = check_shapes(&kraus)?;
        let residual = completeness_residual(&kraus, d_in);
        if !(residual <= COMPLETENESS_TOL) {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Self { kraus, d_in, d_out })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            kraus: vec![ComplexMatrix::identity(dim)],
            d_in: dim,
            d_out: dim,
        }
    }

    /// Conjugation by a unitary.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn completeness_residual(&self) -> f64 {
        completeness_residual(&self.kraus, self.d_in)
    }

    fn output_dims(&self, rho: &DensityMatrix) -> Vec<usize> {
        if self.d_in == self.d_out {
            rho.dims().to_vec()
        } else {
            vec![self.d_out]
        }
    }

    /// `sum_k K rho K^dagger`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.d_in {
            return Err(Error::DimensionMismatch {
                what: "channel input",
                expected: self.d_in,
                found: rho.dim(),
            });
        }
        let out = apply_kraus(&self.kraus, rho.matrix(), self.d_out);
        Ok(DensityMatrix::trusted(out, self.output_dims(rho)))
    }

    /// Applies the channel to subsystem `target` and the identity elsewhere.
    pub fn apply_on_subsystem(&self, rho: &DensityMatrix, target: usize) -> Result<DensityMatrix> {
        let dims = rho.dims();
        if target >= dims.len() {
            return Err(Error::InvalidPartition("target subsystem out of range"));
        }
        if dims[target] != self.d_in {
            return Err(Error::DimensionMismatch {
                what: "target subsystem",
                expected: self.d_in,
                found: dims[target],
            });
        }
        let lifted = lift_operators(&self.kraus, dims, target);
        let mut out_dims = dims.to_vec();
        out_dims[target] = self.d_out;
        let n_out: usize = out_dims.iter().product();
        let out = apply_kraus(&lifted, rho.matrix(), n_out);
        Ok(DensityMatrix::trusted(out, out_dims))
    }

    /// `after ∘ self`.
    pub fn then(&self, after: &KrausChannel) -> Result<KrausChannel> {
        if after.d_in != self.d_out {
            return Err(Error::DimensionMismatch {
                what: "channel composition",
                expected: self.d_out,
                found: after.d_in,
            });
        }
        let kraus = after
            .kraus
            .iter()
            .flat_map(|a| self.kraus.iter().map(move |b| a.matmul(b)))
            .collect();
        Ok(Self {
            kraus,
            d_in: self.d_in,
            d_out: after.d_out,
        })
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| matops::tensor(a, b)))
            .collect();
        Self {
            kraus,
            d_in: self.d_in * other.d_in,
            d_out: self.d_out * other.d_out,
        }
    }

    pub fn tensor_power(&self, n: usize) -> KrausChannel {
        assert!(n >= 1);
        (1..n).fold(self.clone(), |acc, _| acc.tensor(self))
    }
}

fn apply_kraus(ops: &[ComplexMatrix], rho: &ComplexMatrix, d_out: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d_out, d_out);
    for k in ops {
        out = out.add(&k.sandwich(rho));
    }
    out
}

/// `I_left ⊗ K ⊗ I_right` for each operator.
fn lift_operators(ops: &[ComplexMatrix], dims: &[usize], target: usize) -> Vec<ComplexMatrix> {
    let left: usize = dims[..target].iter().product();
    let right: usize = dims[target + 1..].iter().product();
    let il = ComplexMatrix::identity(left);
    let ir = ComplexMatrix::identity(right);
    ops.iter()
        .map(|k| matops::tensor(&matops::tensor(&il, k), &ir))
        .collect()
}

/// Applies raw (possibly non-trace-preserving) operators to one subsystem and
/// returns the unnormalized result.
pub(crate) fn apply_operators_on_subsystem(
    ops: &[ComplexMatrix],
    rho: &ComplexMatrix,
    dims: &[usize],
    target: usize,
) -> (ComplexMatrix, Vec<usize>) {
    let lifted = lift_operators(ops, dims, target);
    let mut out_dims = dims.to_vec();
    out_dims[target] = ops[0].rows();
    let n: usize = out_dims.iter().product();
    (apply_kraus(&lifted, rho, n), out_dims)
}

/// Choi state `(1 ⊗ Λ)|Φ+><Φ+|` on `[d_in, d_out]`, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    state: DensityMatrix,
}

impl ChoiMatrix {
    pub fn new(state: DensityMatrix) -> Result<Self> {
        let dims = state.dims();
        if dims.len() != 2 {
            return Err(Error::InvalidPartition(
                "Choi state needs dims [d_in, d_out]",
            ));
        }
        let d_in = dims[0];
        let marginal = matops::partial_trace(state.matrix(), dims, &[0])?;
        let residual =
            marginal.max_abs_diff(&ComplexMatrix::identity(d_in).scale(1.0 / d_in as f64));
        if !(residual <= COMPLETENESS_TOL) {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Self { state })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn d_in(&self) -> usize {
        self.state.dims()[0]
    }

    pub fn d_out(&self) -> usize {
        self.state.dims()[1]
    }
}

pub fn kraus_to_choi(ch: &KrausChannel) -> ChoiMatrix {
    let (d_in, d_out) = (ch.d_in, ch.d_out);
    let n = d_in * d_out;
    let mut m = ComplexMatrix::zeros(n, n);
    let w = 1.0 / d_in as f64;
    for k in &ch.kraus {
        for i in 0..d_in {
            for a in 0..d_out {
                let kai = k[(a, i)];
                for j in 0..d_in {
                    for b in 0..d_out {
                        m[(i * d_out + a, j * d_out + b)] += kai * k[(b, j)].conj() * w;
                    }
                }
            }
        }
    }
    ChoiMatrix {
        state: DensityMatrix::trusted(m, vec![d_in, d_out]),
    }
}

/// Kraus operators `K_k[a][i] = sqrt(d_in λ_k) v_k[(i, a)]` from the Choi
/// eigendecomposition; one operator per eigenvalue above `CHOI_RANK_TOL`.
pub fn choi_to_kraus(c: &ChoiMatrix) -> Result<KrausChannel> {
    let (d_in, d_out) = (c.d_in(), c.d_out());
    let eig = matops::eig_hermitian(c.state.matrix())?;
    let mut kraus = Vec::new();
    for (idx, &lambda) in eig.values.iter().enumerate().rev() {
        if lambda <= CHOI_RANK_TOL {
            continue;
        }
        let s = math::sqrt(d_in as f64 * lambda);
        let v = eig.vectors.column_vec(idx);
        kraus.push(ComplexMatrix::from_fn(d_out, d_in, |a, i| {
            v[i * d_out + a] * s
        }));
    }
    KrausChannel::new(kraus)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EbVerdict {
    Yes,
    No,
    Inconclusive,
}

impl fmt::Display for EbVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EbVerdict::Yes => "yes",
            EbVerdict::No => "no",
            EbVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EbReport {
    pub verdict: EbVerdict,
    pub min_pt_eigenvalue: f64,
}

/// PPT test on the Choi state. Exact for `d_in * d_out <= 6`; PPT in larger
/// dimensions is reported as inconclusive.
pub fn is_entanglement_breaking(ch: &KrausChannel) -> EbReport {
    let choi = kraus_to_choi(ch);
    let min_pt_eigenvalue = choi
        .state
        .min_partial_transpose_eigenvalue(1)
        .expect("Choi state is square and Hermitian");
    let verdict = if min_pt_eigenvalue < -PPT_TOL {
        EbVerdict::No
    } else if ch.d_in * ch.d_out <= 6 {
        EbVerdict::Yes
    } else {
        EbVerdict::Inconclusive
    };
    EbReport {
        verdict,
        min_pt_eigenvalue,
    }
}

/// Bisects a one-parameter family for the point where the EB verdict flips
/// from "no" (at `lo`) to "yes" (at `hi`).
pub fn bisect_eb_threshold(
    family: impl Fn(f64) -> Result<KrausChannel>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let is_yes = |p: f64| -> Result<bool> {
        Ok(is_entanglement_breaking(&family(p)?).verdict == EbVerdict::Yes)
    };
    if is_yes(lo)? || !is_yes(hi)? {
        return Err(Error::InvalidParameter {
            name: "bisection bracket",
            value: lo,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if is_yes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One labelled outcome of an instrument with its Kraus set.
#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentOutcome {
    pub label: usize,
    pub kraus: Vec<ComplexMatrix>,
}

/// Measurement with outcome-labelled Kraus sets whose union is complete.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    outcomes: Vec<InstrumentOutcome>,
    d_in: usize,
    d_out: usize,
}

impl Instrument {
    pub fn new(outcomes: Vec<InstrumentOutcome>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Empty("instrument outcome list"));
        }
        let mut labels = Vec::with_capacity(outcomes.len());
        for o in &outcomes {
            if o.kraus.is_empty() {
                return Err(Error::Empty("instrument outcome Kraus set"));
            }
            if labels.contains(&o.label) {
                return Err(Error::DuplicateLabel(o.label));
            }
            labels.push(o.label);
        }
        let all: Vec<ComplexMatrix> = outcomes
            .iter()
            .flat_map(|o| o.kraus.iter().cloned())
            .collect();
        let (d_in, d_out) = check_shapes(&all)?;
        let residual = completeness_residual(&all, d_in);
        if !(residual <= COMPLETENESS_TOL) {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Self {
            outcomes,
            d_in,
            d_out,
        })
    }

    /// Single outcome carrying the identity: no measurement at all.
    pub fn trivial(dim: usize) -> Self {
        Self {
            outcomes: vec![InstrumentOutcome {
                label: 0,
                kraus: vec![ComplexMatrix::identity(dim)],
            }],
            d_in: dim,
            d_out: dim,
        }
    }

    /// Projective measurement in the computational basis.
    pub fn computational_basis(dim: usize) -> Self {
        let outcomes = (0..dim)
            .map(|j| {
                let mut p = ComplexMatrix::zeros(dim, dim);
                p[(j, j)] = C64::new(1.0, 0.0);
                InstrumentOutcome {
                    label: j,
                    kraus: vec![p],
                }
            })
            .collect();
        Self {
            outcomes,
            d_in: dim,
            d_out: dim,
        }
    }

    pub fn outcomes(&self) -> &[InstrumentOutcome] {
        &self.outcomes
    }

    pub fn labels(&self) -> Vec<usize> {
        self.outcomes.iter().map(|o| o.label).collect()
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// The channel obtained by discarding the outcome.
    pub fn as_channel(&self) -> KrausChannel {
        KrausChannel {
            kraus: self
                .outcomes
                .iter()
                .flat_map(|o| o.kraus.iter().cloned())
                .collect(),
            d_in: self.d_in,
            d_out: self.d_out,
        }
    }
}

/// Named channel families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Identity,
    /// `rho -> (1-p) rho + p I/d`
    Depolarizing,
    /// `rho -> (1-p) rho + p diag(rho)`
    Dephasing,
    /// Qubit decay `|1> -> |0>` with probability `gamma`.
    AmplitudeDamping,
    /// `d -> d+1`: replaces the input by an orthogonal flag state with probability `p`.
    Erasure,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 5] = [
        ChannelKind::Identity,
        ChannelKind::Depolarizing,
        ChannelKind::Dephasing,
        ChannelKind::AmplitudeDamping,
        ChannelKind::Erasure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Identity => "identity",
            ChannelKind::Depolarizing => "depolarizing",
            ChannelKind::Dephasing => "dephasing",
            ChannelKind::AmplitudeDamping => "amplitude_damping",
            ChannelKind::Erasure => "erasure",
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            ChannelKind::Identity => 0,
            _ => 1,
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::UnknownName {
                kind: "channel kind",
                name: s.into(),
            })
    }
}

fn probability_param(name: &'static str, params: &[f64]) -> Result<f64> {
    let p = *params.first().ok_or(Error::InvalidParameter {
        name,
        value: f64::NAN,
    })?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter { name, value: p });
    }
    Ok(p)
}

/// Generalized Pauli (Weyl) operator `X^a Z^b` in dimension `d`.
fn weyl(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    let two_pi = 2.0 * core::f64::consts::PI;
    for j in 0..d {
        let angle = two_pi * ((b * j) % d) as f64 / d as f64;
        m[((j + a) % d, j)] = C64::new(math::cos(angle), math::sin(angle));
    }
    m
}

/// Standard Kraus forms for the named families.
pub fn make_channel(kind: ChannelKind, params: &[f64], dim: usize) -> Result<KrausChannel> {
    if dim == 0 {
        return Err(Error::InvalidParameter {
            name: "dim",
            value: 0.0,
        });
    }
    if params.len() > kind.param_count() {
        return Err(Error::InvalidParameter {
            name: "parameter count",
            value: params.len() as f64,
        });
    }
    let d = dim as f64;
    let kraus = match kind {
        ChannelKind::Identity => vec![ComplexMatrix::identity(dim)],
        ChannelKind::Depolarizing => {
            let p = probability_param("p", params)?;
            let mut ops = Vec::with_capacity(dim * dim);
            for a in 0..dim {
                for b in 0..dim {
                    let w = if a == 0 && b == 0 {
                        1.0 - p + p / (d * d)
                    } else {
                        p / (d * d)
                    };
                    if w > 0.0 {
                        ops.push(weyl(dim, a, b).scale(math::sqrt(w)));
                    }
                }
            }
            ops
        }
        ChannelKind::Dephasing => {
            let p = probability_param("p", params)?;
            let mut ops = Vec::with_capacity(dim + 1);
            if p < 1.0 {
                ops.push(ComplexMatrix::identity(dim).scale(math::sqrt(1.0 - p)));
            }
            if p > 0.0 {
                for j in 0..dim {
                    let mut proj = ComplexMatrix::zeros(dim, dim);
                    proj[(j, j)] = C64::new(math::sqrt(p), 0.0);
                    ops.push(proj);
                }
            }
            ops
        }
        ChannelKind::AmplitudeDamping => {
            if dim != 2 {
                return Err(Error::DimensionMismatch {
                    what: "amplitude damping dim",
                    expected: 2,
                    found: dim,
                });
            }
            let g = probability_param("gamma", params)?;
            let k0 = ComplexMatrix::diag_real(&[1.0, math::sqrt(1.0 - g)]);
            let mut k1 = ComplexMatrix::zeros(2, 2);
            k1[(0, 1)] = C64::new(math::sqrt(g), 0.0);
            vec![k0, k1]
        }
        ChannelKind::Erasure => {
            let p = probability_param("p", params)?;
            let mut ops = Vec::with_capacity(dim + 1);
            let embed = ComplexMatrix::from_fn(dim + 1, dim, |r, c| {
                if r == c {
                    C64::new(math::sqrt(1.0 - p), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            ops.push(embed);
            for j in 0..dim {
                let mut flag = ComplexMatrix::zeros(dim + 1, dim);
                flag[(dim, j)] = C64::new(math::sqrt(p), 0.0);
                ops.push(flag);
            }
            ops
        }
    };
    KrausChannel::new(kraus)
}

/// Channel from a Haar isometry `V: d_in -> d_env ⊗ d_out`, with
/// `K_k = (<k|_env ⊗ I) V`.
pub fn random_channel<R: Rng + ?Sized>(
    rng: &mut R,
    d_in: usize,
    d_out: usize,
    d_env: usize,
) -> KrausChannel {
    assert!(
        d_out * d_env >= d_in,
        "isometry needs d_out * d_env >= d_in"
    );
    let v = random::haar_isometry(rng, d_env * d_out, d_in);
    let kraus = (0..d_env)
        .map(|k| ComplexMatrix::from_fn(d_out, d_in, |a, i| v[(k * d_out + a, i)]))
        .collect();
    KrausChannel { kraus, d_in, d_out }
}

/// Random channel on `dim` whose Kraus set is split across `n_outcomes`
/// labelled outcomes (labels `0..n_outcomes`). Each outcome gets at least one
/// operator.
pub fn random_instrument<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_outcomes: usize,
) -> Instrument {
    assert!(n_outcomes >= 1);
    let d_env = (dim * dim).max(n_outcomes);
    let ch = random_channel(rng, dim, dim, d_env);
    let mut outcomes: Vec<InstrumentOutcome> = (0..n_outcomes)
        .map(|label| InstrumentOutcome {
            label,
            kraus: Vec::new(),
        })
        .collect();
    for (idx, k) in ch.kraus.into_iter().enumerate() {
        let slot = if idx < n_outcomes {
            idx
        } else {
            rng.random_range(0..n_outcomes)
        };
        outcomes[slot].kraus.push(k);
    }
    Instrument {
        outcomes,
        d_in: dim,
        d_out: dim,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomKind {
    State,
    PureState,
    Unitary,
    Channel,
    Instrument,
}

/// Dimensions for [`random_object`]. `d_out`, `d_env` and `outcomes` are only
/// read by the kinds that need them; `d_env = None` means `d_in * d_out`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomDims {
    pub d_in: usize,
    pub d_out: usize,
    pub d_env: Option<usize>,
    pub outcomes: usize,
}

impl RandomDims {
    pub fn square(d: usize) -> Self {
        Self {
            d_in: d,
            d_out: d,
            d_env: None,
            outcomes: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RandomObject {
    State(DensityMatrix),
    PureState(DensityMatrix),
    Unitary(ComplexMatrix),
    Channel(KrausChannel),
    Instrument(Instrument),
}

/// Seeded sample of the requested kind.
pub fn random_object(kind: RandomKind, dims: RandomDims, seed: u64) -> Result<RandomObject> {
    if dims.d_in == 0 || dims.d_out == 0 {
        return Err(Error::InvalidParameter {
            name: "dim",
            value: 0.0,
        });
    }
    let mut rng: SeededRng = random::rng_from_seed(seed);
    Ok(match kind {
        RandomKind::State => RandomObject::State(DensityMatrix::trusted(
            random::random_density(&mut rng, dims.d_in),
            vec![dims.d_in],
        )),
        RandomKind::PureState => RandomObject::PureState(DensityMatrix::trusted(
            random::random_pure_density(&mut rng, dims.d_in),
            vec![dims.d_in],
        )),
        RandomKind::Unitary => RandomObject::Unitary(random::haar_unitary(&mut rng, dims.d_in)),
        RandomKind::Channel => {
            let d_env = dims.d_env.unwrap_or(dims.d_in * dims.d_out);
            if d_env == 0 || dims.d_out * d_env < dims.d_in {
                return Err(Error::InvalidParameter {
                    name: "d_env",
                    value: d_env as f64,
                });
            }
            RandomObject::Channel(random_channel(&mut rng, dims.d_in, dims.d_out, d_env))
        }
        RandomKind::Instrument => {
            if dims.outcomes == 0 {
                return Err(Error::InvalidParameter {
                    name: "outcomes",
                    value: 0.0,
                });
            }
            RandomObject::Instrument(random_instrument(&mut rng, dims.d_in, dims.outcomes))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::mutual_information;

    fn half_identity() -> ComplexMatrix {
        ComplexMatrix::identity(2).scale(0.5)
    }

    fn plus() -> DensityMatrix {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap()
    }

    fn phi_plus() -> DensityMatrix {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        DensityMatrix::pure_with_dims(&[C64::new(h, 0.0), z, z, C64::new(h, 0.0)], vec![2, 2])
            .unwrap()
    }

    fn rand_state(seed: u64, d: usize) -> DensityMatrix {
        match random_object(RandomKind::State, RandomDims::square(d), seed).unwrap() {
            RandomObject::State(s) => s,
            _ => unreachable!(),
        }
    }

    fn rand_channel(seed: u64, d_in: usize, d_out: usize) -> KrausChannel {
        let dims = RandomDims {
            d_in,
            d_out,
            d_env: None,
            outcomes: 2,
        };
        match random_object(RandomKind::Channel, dims, seed).unwrap() {
            RandomObject::Channel(c) => c,
            _ => unreachable!(),
        }
    }

    #[test]
    fn apply_examples() {
        let rho = rand_state(1, 2);
        let id = KrausChannel::identity(2);
        assert!(id.apply(&rho).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let dep = make_channel(ChannelKind::Depolarizing, &[1.0], 2).unwrap();
        assert!(
            dep.apply(&rho)
                .unwrap()
                .matrix()
                .max_abs_diff(&half_identity())
                < 1e-12
        );
        let deph = make_channel(ChannelKind::Dephasing, &[1.0], 2).unwrap();
        assert!(
            deph.apply(&plus())
                .unwrap()
                .matrix()
                .max_abs_diff(&half_identity())
                < 1e-12
        );
        assert!(id.apply(&rand_state(2, 3)).is_err());
    }

    #[test]
    fn apply_on_subsystem_examples() {
        let rho = rand_state(3, 2);
        let sigma = rand_state(4, 2);
        let joint = rho.tensor(&sigma);
        let id = KrausChannel::identity(2);
        assert!(
            id.apply_on_subsystem(&joint, 1)
                .unwrap()
                .matrix()
                .max_abs_diff(joint.matrix())
                < 1e-15
        );
        let ch = rand_channel(5, 2, 2);
        let got = ch.apply_on_subsystem(&joint, 1).unwrap();
        let want = rho.tensor(&ch.apply(&sigma).unwrap());
        assert!(got.matrix().max_abs_diff(want.matrix()) < 1e-12);
        let dep = make_channel(ChannelKind::Depolarizing, &[1.0], 2).unwrap();
        let got = dep.apply_on_subsystem(&phi_plus(), 1).unwrap();
        assert!(
            got.matrix()
                .max_abs_diff(&ComplexMatrix::identity(4).scale(0.25))
                < 1e-12
        );
        assert!(dep
            .apply_on_subsystem(&rand_state(6, 3).tensor(&rho), 0)
            .is_err());
    }

    #[test]
    fn apply_on_subsystem_changes_dims_for_rectangular_channels() {
        let er = make_channel(ChannelKind::Erasure, &[0.25], 2).unwrap();
        let out = er.apply_on_subsystem(&phi_plus(), 0).unwrap();
        assert_eq!(out.dims(), &[3, 2]);
        assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn choi_examples() {
        let id = kraus_to_choi(&KrausChannel::identity(2));
        assert!(id.state().matrix().max_abs_diff(phi_plus().matrix()) < 1e-15);
        let dep1 = kraus_to_choi(&make_channel(ChannelKind::Depolarizing, &[1.0], 2).unwrap());
        assert!(
            dep1.state()
                .matrix()
                .max_abs_diff(&ComplexMatrix::identity(4).scale(0.25))
                < 1e-12
        );
        for p in [0.1, 0.4, 0.9] {
            let c = kraus_to_choi(&make_channel(ChannelKind::Depolarizing, &[p], 2).unwrap());
            let want = phi_plus()
                .matrix()
                .scale(1.0 - p)
                .add(&ComplexMatrix::identity(4).scale(p / 4.0));
            assert!(c.state().matrix().max_abs_diff(&want) < 1e-12);
        }
    }

    #[test]
    fn choi_to_kraus_examples() {
        let k = choi_to_kraus(&kraus_to_choi(&KrausChannel::identity(2))).unwrap();
        assert_eq!(k.kraus().len(), 1);
        // proportional to I up to a global phase
        let k0 = &k.kraus()[0];
        assert!((k0[(0, 0)].norm() - 1.0).abs() < 1e-12 && k0[(0, 1)].norm() < 1e-12);
        assert!((k0[(0, 0)] - k0[(1, 1)]).norm() < 1e-12);

        let constant = ChoiMatrix::new(
            DensityMatrix::new(ComplexMatrix::identity(4).scale(0.25), vec![2, 2]).unwrap(),
        )
        .unwrap();
        let k = choi_to_kraus(&constant).unwrap();
        assert_eq!(k.kraus().len(), 4);
        for seed in 0..5 {
            let out = k.apply(&rand_state(seed, 2)).unwrap();
            assert!(out.matrix().max_abs_diff(&half_identity()) < 1e-10);
        }
    }

    #[test]
    fn choi_rejects_non_tp_state() {
        let s = DensityMatrix::new(ComplexMatrix::diag_real(&[1.0, 0.0, 0.0, 0.0]), vec![2, 2])
            .unwrap();
        assert!(matches!(
            ChoiMatrix::new(s),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn eb_examples() {
        let r = is_entanglement_breaking(&KrausChannel::identity(2));
        assert_eq!(r.verdict, EbVerdict::No);
        assert!((r.min_pt_eigenvalue + 0.5).abs() < 1e-12);
        let r = is_entanglement_breaking(&make_channel(ChannelKind::Dephasing, &[1.0], 2).unwrap());
        assert_eq!(r.verdict, EbVerdict::Yes);
        // min eigenvalue of PT of the isotropic Choi state is (3p - 2)/4
        for p in [0.0, 0.3, 0.6, 0.7, 1.0] {
            let r = is_entanglement_breaking(
                &make_channel(ChannelKind::Depolarizing, &[p], 2).unwrap(),
            );
            assert!((r.min_pt_eigenvalue - (3.0 * p - 2.0) / 4.0).abs() < 1e-12);
            let want = if p >= 2.0 / 3.0 {
                EbVerdict::Yes
            } else {
                EbVerdict::No
            };
            assert_eq!(r.verdict, want, "p={p}");
        }
        let t = bisect_eb_threshold(
            |p| make_channel(ChannelKind::Depolarizing, &[p], 2),
            0.0,
            1.0,
            1e-8,
        )
        .unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-6);
        // PPT but 3x3: inconclusive
        let r =
            is_entanglement_breaking(&make_channel(ChannelKind::Depolarizing, &[1.0], 3).unwrap());
        assert_eq!(r.verdict, EbVerdict::Inconclusive);
    }

    #[test]
    fn make_channel_examples_and_errors() {
        let dep0 = make_channel(ChannelKind::Depolarizing, &[0.0], 2).unwrap();
        for seed in 0..20 {
            let rho = rand_state(100 + seed, 2);
            assert!(
                dep0.apply(&rho)
                    .unwrap()
                    .matrix()
                    .max_abs_diff(rho.matrix())
                    < 1e-12
            );
        }
        let ad = make_channel(ChannelKind::AmplitudeDamping, &[1.0], 2).unwrap();
        for seed in 0..5 {
            let out = ad.apply(&rand_state(seed, 2)).unwrap();
            assert!(
                out.matrix()
                    .max_abs_diff(DensityMatrix::basis(2, 0).matrix())
                    < 1e-12
            );
        }
        let p = 0.3;
        let out = make_channel(ChannelKind::Dephasing, &[p], 2)
            .unwrap()
            .apply(&plus())
            .unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.5 * (1.0 - p)).abs() < 1e-12);
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);

        for kind in ChannelKind::ALL {
            for d in [2usize, 3] {
                let params: &[f64] = if kind.param_count() == 0 {
                    &[]
                } else {
                    &[0.37]
                };
                if let Ok(ch) = make_channel(kind, params, d) {
                    assert!(ch.completeness_residual() <= 1e-12, "{kind} d={d}");
                }
            }
        }
        assert!(make_channel(ChannelKind::Depolarizing, &[1.5], 2).is_err());
        assert!(make_channel(ChannelKind::Dephasing, &[-0.1], 2).is_err());
        assert!(make_channel(ChannelKind::AmplitudeDamping, &[0.1], 3).is_err());
        assert!(make_channel(ChannelKind::Identity, &[0.1], 2).is_err());
        assert!(make_channel(ChannelKind::Depolarizing, &[], 2).is_err());
    }

    #[test]
    fn channel_kind_parsing() {
        assert_eq!(
            "amplitude-damping".parse::<ChannelKind>().unwrap(),
            ChannelKind::AmplitudeDamping
        );
        assert_eq!(
            "Depolarizing".parse::<ChannelKind>().unwrap(),
            ChannelKind::Depolarizing
        );
        assert!("bogus".parse::<ChannelKind>().is_err());
    }

    #[test]
    fn kraus_channel_validation() {
        let bad = vec![ComplexMatrix::identity(2).scale(0.9)];
        assert!(matches!(
            KrausChannel::new(bad),
            Err(Error::NotTracePreserving { .. })
        ));
        let mixed = vec![ComplexMatrix::identity(2), ComplexMatrix::identity(3)];
        assert!(KrausChannel::new(mixed).is_err());
        assert!(KrausChannel::new(vec![]).is_err());
    }

    #[test]
    fn random_objects_are_valid_and_deterministic() {
        for seed in 0..1000u64 {
            let s = rand_state(seed, 2);
            assert!(DensityMatrix::new(s.matrix().clone(), vec![2]).is_ok());
            let ch = rand_channel(seed, 2, 2);
            assert!(ch.completeness_residual() <= 1e-10);
        }
        let dims = RandomDims {
            d_in: 2,
            d_out: 3,
            d_env: Some(2),
            outcomes: 3,
        };
        for kind in [
            RandomKind::State,
            RandomKind::PureState,
            RandomKind::Unitary,
            RandomKind::Channel,
            RandomKind::Instrument,
        ] {
            assert_eq!(
                random_object(kind, dims, 77).unwrap(),
                random_object(kind, dims, 77).unwrap()
            );
        }
        let RandomObject::Instrument(inst) = random_object(
            RandomKind::Instrument,
            RandomDims {
                outcomes: 4,
                ..RandomDims::square(2)
            },
            3,
        )
        .unwrap() else {
            unreachable!()
        };
        assert_eq!(inst.labels(), vec![0, 1, 2, 3]);
        assert!(Instrument::new(inst.outcomes().to_vec()).is_ok());
        let RandomObject::Unitary(u) =
            random_object(RandomKind::Unitary, RandomDims::square(3), 1).unwrap()
        else {
            unreachable!()
        };
        assert!(
            u.adjoint()
                .matmul(&u)
                .max_abs_diff(&ComplexMatrix::identity(3))
                < 1e-12
        );
        assert!(random_object(
            RandomKind::Channel,
            RandomDims {
                d_in: 4,
                d_out: 1,
                d_env: Some(2),
                outcomes: 1
            },
            0
        )
        .is_err());
    }

    #[test]
    fn data_processing_on_random_channels() {
        for seed in 0..200u64 {
            let rho = DensityMatrix::new(rand_state(seed, 4).into_matrix(), vec![2, 2]).unwrap();
            let ch = rand_channel(seed + 10_000, 2, 2);
            let before = mutual_information(&rho, &[0], &[1]).unwrap();
            let after =
                mutual_information(&ch.apply_on_subsystem(&rho, 1).unwrap(), &[0], &[1]).unwrap();
            assert!(after <= before + 1e-9);
        }
    }

    #[test]
    fn composition_choi_is_tp() {
        let a = rand_channel(1, 2, 3);
        let b = rand_channel(2, 3, 2);
        let c = kraus_to_choi(&a.then(&b).unwrap());
        assert!((c.state().matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(ChoiMatrix::new(c.state().clone()).is_ok());
    }

    #[test]
    fn instrument_validation() {
        let half = ComplexMatrix::identity(2).scale(core::f64::consts::FRAC_1_SQRT_2);
        let ok = Instrument::new(vec![
            InstrumentOutcome {
                label: 0,
                kraus: vec![half.clone()],
            },
            InstrumentOutcome {
                label: 1,
                kraus: vec![half.clone()],
            },
        ]);
        assert!(ok.is_ok());
        let incomplete = Instrument::new(vec![InstrumentOutcome {
            label: 0,
            kraus: vec![half.clone()],
        }]);
        assert!(matches!(incomplete, Err(Error::NotTracePreserving { .. })));
        let dup = Instrument::new(vec![
            InstrumentOutcome {
                label: 0,
                kraus: vec![half.clone()],
            },
            InstrumentOutcome {
                label: 0,
                kraus: vec![half],
            },
        ]);
        assert_eq!(dup, Err(Error::DuplicateLabel(0)));
    }
}
