//! Holevo quantity of an ensemble sent through a channel, a multi-start
//! optimizer estimating its maximum, and an exhaustive Bloch-sphere search
//! for qubit-input channels used as an independent reference.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::math;
use crate::matops::{self, ComplexMatrix, C64};
use crate::quantum::{entropy, relative_entropy, spectrum_entropy, DensityMatrix, Ensemble};
use crate::random::{self, SeededRng};

/// `S(Λ avg) - sum_i p_i S(Λ rho_i)`.
pub fn holevo_quantity(ch: &KrausChannel, e: &Ensemble) -> Result<f64> {
    if e.dim() != ch.d_in() {
        return Err(Error::DimensionMismatch {
            what: "ensemble state dim",
            expected: ch.d_in(),
            found: e.dim(),
        });
    }
    let mut outputs = Vec::with_capacity(e.len());
    let mut mixed = 0.0;
    for (p, rho) in e.items() {
        let out = ch.apply(rho)?;
        if *p > 0.0 {
            mixed += p * entropy(&out)?;
        }
        outputs.push((*p, out));
    }
    let avg = DensityMatrix::mixture(outputs.iter().map(|(p, s)| (*p, s)))?;
    Ok(entropy(&avg)? - mixed)
}

/// Knobs for [`maximize_holevo`].
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence threshold on the objective gain over `patience` iterations.
    pub tol: f64,
    pub patience: usize,
    pub seed: u64,
    /// Initial perturbation size for the state updates.
    pub initial_step: f64,
    /// Ensemble whose pure-state decomposition seeds restart 0.
    pub initial: Option<Ensemble>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 5000,
            tol: 1e-8,
            patience: 50,
            seed: 0,
            initial_step: 0.5,
            initial: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolevoResult {
    pub chi_estimate: f64,
    pub best_ensemble: Ensemble,
    pub restarts_used: usize,
    pub converged: bool,
    pub seed: u64,
    /// Index of the restart that produced `best_ensemble`.
    pub best_restart: usize,
    pub iterations: usize,
}

impl HolevoResult {
    /// Associative merge keeping the larger estimate (ties go to the lower
    /// restart index so merges are order independent).
    pub fn merge(self, other: HolevoResult) -> HolevoResult {
        let restarts_used = self.restarts_used + other.restarts_used;
        let better = other.chi_estimate > self.chi_estimate
            || (other.chi_estimate == self.chi_estimate && other.best_restart < self.best_restart);
        let mut winner = if better { other } else { self };
        winner.restarts_used = restarts_used;
        winner
    }
}

/// Working state of one restart: pure input vectors, weights and cached
/// channel outputs with their entropies.
struct Search<'a> {
    ch: &'a KrausChannel,
    vectors: Vec<Vec<C64>>,
    probs: Vec<f64>,
    outputs: Vec<ComplexMatrix>,
    out_entropies: Vec<f64>,
    value: f64,
}

impl<'a> Search<'a> {
    fn new(ch: &'a KrausChannel, vectors: Vec<Vec<C64>>, probs: Vec<f64>) -> Result<Self> {
        let outputs: Vec<ComplexMatrix> = vectors.iter().map(|v| pure_output(ch, v)).collect();
        let out_entropies = outputs
            .iter()
            .map(matrix_entropy)
            .collect::<Result<Vec<_>>>()?;
        let mut s = Self {
            ch,
            vectors,
            probs,
            outputs,
            out_entropies,
            value: 0.0,
        };
        s.value = s.objective(&s.probs, None)?;
        Ok(s)
    }

    fn average(&self, probs: &[f64], replace: Option<(usize, &ComplexMatrix)>) -> ComplexMatrix {
        let d = self.ch.d_out();
        let mut avg = ComplexMatrix::zeros(d, d);
        for (i, (p, out)) in probs.iter().zip(&self.outputs).enumerate() {
            let out = match replace {
                Some((j, m)) if j == i => m,
                _ => out,
            };
            avg.add_assign_scaled(out, *p);
        }
        avg
    }

    fn objective(
        &self,
        probs: &[f64],
        replace: Option<(usize, &ComplexMatrix, f64)>,
    ) -> Result<f64> {
        let avg = self.average(probs, replace.map(|(j, m, _)| (j, m)));
        let mut mixed = 0.0;
        for (i, p) in probs.iter().enumerate() {
            let s = match replace {
                Some((j, _, sj)) if j == i => sj,
                _ => self.out_entropies[i],
            };
            mixed += p * s;
        }
        Ok(matrix_entropy(&avg)? - mixed)
    }

    /// Multiplicative update `p_i <- p_i 2^{D(Λρ_i || Λavg)}`, kept only if it
    /// does not decrease the objective.
    fn probability_step(&mut self) -> Result<bool> {
        let avg = DensityMatrix::trusted(self.average(&self.probs, None), vec![self.ch.d_out()]);
        let mut next = Vec::with_capacity(self.probs.len());
        for (p, out) in self.probs.iter().zip(&self.outputs) {
            if *p <= 0.0 {
                next.push(0.0);
                continue;
            }
            let out = DensityMatrix::trusted(out.clone(), vec![self.ch.d_out()]);
            let d = relative_entropy(&out, &avg)?;
            next.push(if d.is_finite() { p * math::exp2(d) } else { *p });
        }
        let total: f64 = next.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Ok(false);
        }
        for p in next.iter_mut() {
            *p /= total;
        }
        let value = self.objective(&next, None)?;
        if value >= self.value {
            self.probs = next;
            self.value = value;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Random local move of vector `i`; accepted on strict improvement.
    fn state_step(&mut self, rng: &mut SeededRng, i: usize, step: f64) -> Result<bool> {
        let v = &self.vectors[i];
        let proposal: Vec<C64> = v
            .iter()
            .map(|z| z + random::complex_normal(rng) * step)
            .collect();
        let n = random::norm(&proposal);
        if !(n > 1e-300) {
            return Ok(false);
        }
        let proposal: Vec<C64> = proposal.into_iter().map(|z| z / n).collect();
        let out = pure_output(self.ch, &proposal);
        let s = matrix_entropy(&out)?;
        let value = self.objective(&self.probs, Some((i, &out, s)))?;
        if value > self.value {
            self.vectors[i] = proposal;
            self.outputs[i] = out;
            self.out_entropies[i] = s;
            self.value = value;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn ensemble(&self) -> Ensemble {
        let items = self
            .vectors
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| {
                (
                    *p,
                    DensityMatrix::trusted(ComplexMatrix::ket_bra(v), vec![v.len()]),
                )
            })
            .collect();
        Ensemble::trusted(items)
    }
}

/// `Λ(|v><v|) = sum_k (K v)(K v)^dagger`.
fn pure_output(ch: &KrausChannel, v: &[C64]) -> ComplexMatrix {
    let col = ComplexMatrix::column(v);
    let d = ch.d_out();
    let mut out = ComplexMatrix::zeros(d, d);
    for k in ch.kraus() {
        let kv = k.matmul(&col);
        out = out.add(&ComplexMatrix::ket_bra(kv.as_slice()));
    }
    out
}

fn matrix_entropy(m: &ComplexMatrix) -> Result<f64> {
    spectrum_entropy(&matops::eig_hermitian(m)?.values)
}

/// Pure-state decomposition `sum_i p_i sum_k λ_ik |v_ik><v_ik|` of an
/// ensemble; zero-weight components are dropped.
fn pure_decomposition(e: &Ensemble) -> Result<(Vec<Vec<C64>>, Vec<f64>)> {
    let mut vectors = Vec::new();
    let mut probs = Vec::new();
    for (p, rho) in e.items() {
        let eig = matops::eig_hermitian(rho.matrix())?;
        for (k, &lambda) in eig.values.iter().enumerate() {
            let w = p * lambda;
            if w > 1e-14 {
                vectors.push(eig.vectors.column_vec(k));
                probs.push(w);
            }
        }
    }
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok((vectors, probs))
}

/// Result of one restart.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub restart: usize,
    pub value: f64,
    pub ensemble: Ensemble,
    pub converged: bool,
    pub iterations: usize,
}

/// Runs restart `restart` of the optimizer. Restart `r` draws from stream
/// `derive_seed(opts.seed, r)`; restart 0 starts from `opts.initial` when set.
pub fn run_restart(
    ch: &KrausChannel,
    ensemble_size: usize,
    opts: &OptimizerOptions,
    restart: usize,
) -> Result<RestartOutcome> {
    let mut rng = random::rng_from_seed(random::derive_seed(opts.seed, restart as u64));
    let (vectors, probs) = match (&opts.initial, restart) {
        (Some(init), 0) => {
            if init.dim() != ch.d_in() {
                return Err(Error::DimensionMismatch {
                    what: "seed ensemble dim",
                    expected: ch.d_in(),
                    found: init.dim(),
                });
            }
            pure_decomposition(init)?
        }
        _ => {
            let vectors: Vec<Vec<C64>> = (0..ensemble_size)
                .map(|_| random::random_pure_vector(&mut rng, ch.d_in()))
                .collect();
            let probs = vec![1.0 / ensemble_size as f64; ensemble_size];
            (vectors, probs)
        }
    };
    let n = vectors.len();
    let mut search = Search::new(ch, vectors, probs)?;
    let mut steps = vec![opts.initial_step; n];
    let mut history: Vec<f64> = Vec::with_capacity(opts.max_iters.min(1 << 16));
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        search.probability_step()?;
        for (i, step) in steps.iter_mut().enumerate() {
            if search.state_step(&mut rng, i, *step)? {
                *step = (*step * 1.2).min(1.0);
            } else {
                *step = (*step * 0.85).max(1e-7);
            }
        }
        history.push(search.value);
        if iter >= opts.patience && search.value - history[iter - opts.patience] < opts.tol {
            converged = true;
            break;
        }
        // re-inflate collapsed step sizes
        if iter % 200 == 199 {
            for step in steps.iter_mut() {
                *step = step.max(rng.random_range(0.01..0.1));
            }
        }
    }

    let ensemble = search.ensemble();
    let value = holevo_quantity(ch, &ensemble)?;
    Ok(RestartOutcome {
        restart,
        value,
        ensemble,
        converged,
        iterations,
    })
}

impl RestartOutcome {
    pub fn into_result(self, seed: u64) -> HolevoResult {
        HolevoResult {
            chi_estimate: self.value,
            best_ensemble: self.ensemble,
            restarts_used: 1,
            converged: self.converged,
            seed,
            best_restart: self.restart,
            iterations: self.iterations,
        }
    }
}

/// Multi-start estimate of `max_ensembles holevo_quantity(ch, ·)` over pure
/// ensembles of `ensemble_size` states. The estimate is a lower bound.
pub fn maximize_holevo(
    ch: &KrausChannel,
    ensemble_size: usize,
    opts: &OptimizerOptions,
) -> Result<HolevoResult> {
    if ensemble_size < 2 {
        return Err(Error::InvalidParameter {
            name: "ensemble_size",
            value: ensemble_size as f64,
        });
    }
    let restarts = opts.restarts.max(1);
    let mut best: Option<HolevoResult> = None;
    for r in 0..restarts {
        let res = run_restart(ch, ensemble_size, opts, r)?.into_result(opts.seed);
        best = Some(match best {
            None => res,
            Some(b) => b.merge(res),
        });
    }
    Ok(best.expect("at least one restart"))
}

/// Default ensemble size `d_in^2`.
pub fn default_ensemble_size(ch: &KrausChannel) -> usize {
    (ch.d_in() * ch.d_in()).max(2)
}

/// Output of a qubit state with Bloch vector `r` through the channel,
/// cached as a 2x2 block `[[a, b], [b*, d]]` or a general matrix.
enum GridOutput {
    Qubit { bloch: [f64; 3], entropy: f64 },
    General { mat: ComplexMatrix, entropy: f64 },
}

fn qubit_bloch(m: &ComplexMatrix) -> [f64; 3] {
    // rho = (I + x X + y Y + z Z)/2
    let b = m[(0, 1)];
    [2.0 * b.re, -2.0 * b.im, m[(0, 0)].re - m[(1, 1)].re]
}

/// Entropy of the qubit state with Bloch vector `r`, from its closed-form
/// spectrum `(1 ± |r|)/2`.
fn bloch_entropy(r: &[f64; 3]) -> f64 {
    let n = math::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).min(1.0);
    math::binary_entropy(0.5 * (1.0 + n))
}

fn bloch_point(theta: f64, phi: f64) -> ComplexMatrix {
    let a = C64::new(math::cos(theta / 2.0), 0.0);
    let b = C64::new(math::cos(phi), math::sin(phi)) * math::sin(theta / 2.0);
    ComplexMatrix::ket_bra(&[a, b])
}

/// Bloch-sphere grid with polar step `pi/resolution` and azimuthal step
/// `pi/resolution`; the poles appear once.
fn bloch_grid(resolution: usize) -> Vec<ComplexMatrix> {
    let pi = core::f64::consts::PI;
    let mut pts = vec![bloch_point(0.0, 0.0)];
    for k in 1..resolution {
        let theta = pi * k as f64 / resolution as f64;
        for l in 0..2 * resolution {
            let phi = pi * l as f64 / resolution as f64;
            pts.push(bloch_point(theta, phi));
        }
    }
    pts.push(bloch_point(pi, 0.0));
    pts
}

fn grid_outputs(ch: &KrausChannel, resolution: usize) -> Result<Vec<GridOutput>> {
    bloch_grid(resolution)
        .into_iter()
        .map(|rho| {
            let out = ch
                .apply(&DensityMatrix::trusted(rho, vec![2]))?
                .into_matrix();
            Ok(if ch.d_out() == 2 {
                let bloch = qubit_bloch(&out);
                GridOutput::Qubit {
                    entropy: bloch_entropy(&bloch),
                    bloch,
                }
            } else {
                GridOutput::General {
                    entropy: matrix_entropy(&out)?,
                    mat: out,
                }
            })
        })
        .collect()
}

fn output_entropy(o: &GridOutput) -> f64 {
    match o {
        GridOutput::Qubit { entropy, .. } | GridOutput::General { entropy, .. } => *entropy,
    }
}

fn mixture_entropy(outs: &[&GridOutput], weights: &[f64]) -> Result<f64> {
    match outs[0] {
        GridOutput::Qubit { .. } => {
            let mut r = [0.0; 3];
            for (o, w) in outs.iter().zip(weights) {
                if let GridOutput::Qubit { bloch, .. } = o {
                    for k in 0..3 {
                        r[k] += w * bloch[k];
                    }
                }
            }
            Ok(bloch_entropy(&r))
        }
        GridOutput::General { mat, .. } => {
            let mut avg = ComplexMatrix::zeros(mat.rows(), mat.cols());
            for (o, w) in outs.iter().zip(weights) {
                if let GridOutput::General { mat, .. } = o {
                    avg.add_assign_scaled(mat, *w);
                }
            }
            matrix_entropy(&avg)
        }
    }
}

/// Exhaustive Holevo search for a qubit-input channel. Two-state ensembles
/// range over the full Bloch grid at `resolution` with probabilities in steps
/// of `1/resolution`; three-state ensembles use the coarse grid
/// `max(resolution / 4, 2)` for both angles and probabilities. Every evaluated
/// ensemble is feasible, so the result never exceeds the true maximum.
pub fn chi_grid_oracle_qubit(ch: &KrausChannel, resolution: usize) -> Result<f64> {
    if ch.d_in() != 2 {
        return Err(Error::DimensionMismatch {
            what: "grid oracle input dim",
            expected: 2,
            found: ch.d_in(),
        });
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter {
            name: "resolution",
            value: resolution as f64,
        });
    }
    let res = resolution;
    let mut best = 0.0f64;

    let outs = grid_outputs(ch, res)?;
    for a in 0..outs.len() {
        for b in a + 1..outs.len() {
            let pair = [&outs[a], &outs[b]];
            let (sa, sb) = (output_entropy(&outs[a]), output_entropy(&outs[b]));
            for k in 1..res {
                let p = k as f64 / res as f64;
                let v = mixture_entropy(&pair, &[p, 1.0 - p])? - p * sa - (1.0 - p) * sb;
                best = best.max(v);
            }
        }
    }

    let coarse_res = (res / 4).max(2);
    let coarse = grid_outputs(ch, coarse_res)?;
    let step = 1.0 / coarse_res as f64;
    let n = coarse.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let trip = [&coarse[a], &coarse[b], &coarse[c]];
                let s = [
                    output_entropy(trip[0]),
                    output_entropy(trip[1]),
                    output_entropy(trip[2]),
                ];
                for k1 in 1..coarse_res {
                    for k2 in 1..coarse_res - k1 {
                        let k3 = coarse_res - k1 - k2;
                        let w = [k1 as f64 * step, k2 as f64 * step, k3 as f64 * step];
                        let v =
                            mixture_entropy(&trip, &w)? - w[0] * s[0] - w[1] * s[1] - w[2] * s[2];
                        best = best.max(v);
                    }
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_channel, ChannelKind};

    fn orth_pair() -> Ensemble {
        Ensemble::new(vec![
            (0.5, DensityMatrix::basis(2, 0)),
            (0.5, DensityMatrix::basis(2, 1)),
        ])
        .unwrap()
    }

    fn quick() -> OptimizerOptions {
        OptimizerOptions {
            restarts: 4,
            max_iters: 2000,
            ..OptimizerOptions::default()
        }
    }

    #[test]
    fn holevo_quantity_examples() {
        let id = KrausChannel::identity(2);
        let single = Ensemble::new(vec![(1.0, DensityMatrix::maximally_mixed(2))]).unwrap();
        assert!(holevo_quantity(&id, &single).unwrap().abs() < 1e-12);
        assert!((holevo_quantity(&id, &orth_pair()).unwrap() - 1.0).abs() < 1e-12);
        for p in [0.1, 0.5, 0.9] {
            let dep = make_channel(ChannelKind::Depolarizing, &[p], 2).unwrap();
            let want = 1.0 - math::binary_entropy(p / 2.0);
            assert!((holevo_quantity(&dep, &orth_pair()).unwrap() - want).abs() < 1e-12);
        }
        let e3 = Ensemble::new(vec![(1.0, DensityMatrix::maximally_mixed(3))]).unwrap();
        assert!(holevo_quantity(&id, &e3).is_err());
    }

    #[test]
    fn optimizer_examples() {
        let id = KrausChannel::identity(2);
        let r = maximize_holevo(&id, 4, &quick()).unwrap();
        assert!((r.chi_estimate - 1.0).abs() < 1e-4, "{}", r.chi_estimate);
        let dep = make_channel(ChannelKind::Depolarizing, &[0.5], 2).unwrap();
        let r = maximize_holevo(&dep, 4, &quick()).unwrap();
        assert!((r.chi_estimate - 0.188_721_875_540_867).abs() < 1e-3);
        let deph = make_channel(ChannelKind::Dephasing, &[1.0], 2).unwrap();
        let r = maximize_holevo(&deph, 4, &quick()).unwrap();
        assert!((r.chi_estimate - 1.0).abs() < 1e-4, "{}", r.chi_estimate);
        assert!((holevo_quantity(&deph, &r.best_ensemble).unwrap() - r.chi_estimate).abs() < 1e-9);
        assert!(maximize_holevo(&deph, 1, &quick()).is_err());
    }

    #[test]
    fn optimizer_is_deterministic() {
        let ad = make_channel(ChannelKind::AmplitudeDamping, &[0.3], 2).unwrap();
        let opts = OptimizerOptions {
            restarts: 2,
            max_iters: 300,
            seed: 5,
            ..OptimizerOptions::default()
        };
        assert_eq!(
            maximize_holevo(&ad, 4, &opts).unwrap(),
            maximize_holevo(&ad, 4, &opts).unwrap()
        );
    }

    #[test]
    fn seeded_ensemble_is_a_floor() {
        let ad = make_channel(ChannelKind::AmplitudeDamping, &[0.3], 2).unwrap();
        let seed_ens = orth_pair();
        let floor = holevo_quantity(&ad, &seed_ens).unwrap();
        let opts = OptimizerOptions {
            restarts: 1,
            max_iters: 5,
            initial: Some(seed_ens),
            ..OptimizerOptions::default()
        };
        assert!(maximize_holevo(&ad, 4, &opts).unwrap().chi_estimate >= floor);
    }

    #[test]
    fn grid_oracle_examples() {
        let id = KrausChannel::identity(2);
        assert!(chi_grid_oracle_qubit(&id, 24).unwrap() >= 0.999);
        let dep = make_channel(ChannelKind::Depolarizing, &[0.5], 2).unwrap();
        let g = chi_grid_oracle_qubit(&dep, 24).unwrap();
        assert!((g - 0.188_721_875_540_867).abs() < 2e-3);
        assert!(g <= 0.188_721_875_540_867 + 1e-12);
        assert!(chi_grid_oracle_qubit(&KrausChannel::identity(3), 8).is_err());
    }

    #[test]
    fn grid_oracle_handles_non_qubit_output() {
        let er = make_channel(ChannelKind::Erasure, &[0.25], 2).unwrap();
        let g = chi_grid_oracle_qubit(&er, 8).unwrap();
        // erasure capacity 1 - p, reached by the orthogonal pair on the grid
        assert!((g - 0.75).abs() < 1e-9, "{g}");
    }

    #[test]
    fn merge_is_order_independent() {
        let dep = make_channel(ChannelKind::Depolarizing, &[0.3], 2).unwrap();
        let opts = OptimizerOptions {
            restarts: 3,
            max_iters: 100,
            ..OptimizerOptions::default()
        };
        let rs: Vec<HolevoResult> = (0..3)
            .map(|r| run_restart(&dep, 4, &opts, r).unwrap().into_result(0))
            .collect();
        let fwd = rs[0].clone().merge(rs[1].clone()).merge(rs[2].clone());
        let rev = rs[2].clone().merge(rs[1].clone().merge(rs[0].clone()));
        assert_eq!(fwd, rev);
        assert_eq!(fwd.restarts_used, 3);
    }
}
