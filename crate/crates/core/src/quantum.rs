//! Density matrices, classical-quantum states and the entropy functionals
//! built on them. All entropies are in bits.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matops::{self, ComplexMatrix, C64};

/// Tolerance used for trace, Hermiticity and positivity of states.
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance on the sum of a probability vector.
pub const PROB_TOL: f64 = 1e-10;
/// Eigenvalues of the second argument of a relative entropy below this are
/// outside its support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Hermitian, positive semidefinite, unit-trace matrix with a subsystem
/// dimension list.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates and wraps `mat`. The stored matrix is the Hermitian part of
    /// the input.
    pub fn new(mat: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        let total: usize = dims.iter().product();
        if total != mat.rows() || dims.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "product of subsystem dims",
                expected: mat.rows(),
                found: total,
            });
        }
        let residual = mat.hermiticity_residual();
        if !(residual <= STATE_TOL) {
            return Err(Error::NotHermitian { residual });
        }
        let trace = mat.trace().re;
        if !((trace - 1.0).abs() <= STATE_TOL) {
            return Err(Error::NotUnitTrace { trace });
        }
        let min_eigenvalue = matops::eig_hermitian(&mat)?.values[0];
        if min_eigenvalue < -STATE_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self {
            mat: mat.hermitian_part(),
            dims,
        })
    }

    /// Single-system state.
    pub fn from_matrix(mat: ComplexMatrix) -> Result<Self> {
        let n = mat.rows();
        Self::new(mat, vec![n])
    }

    /// Wraps a matrix already known to be a state (output of a CPTP map or a
    /// convex combination of states). Only the Hermitian part is kept.
    pub(crate) fn trusted(mat: ComplexMatrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), mat.rows());
        Self {
            mat: mat.hermitian_part(),
            dims,
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::trusted(
            ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
            vec![dim],
        )
    }

    /// `|k><k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self::trusted(m, vec![dim])
    }

    /// `|v><v| / <v|v>`.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let n = crate::random::norm(amplitudes);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter {
                name: "state vector norm",
                value: n,
            });
        }
        let v: Vec<C64> = amplitudes.iter().map(|z| z / n).collect();
        Ok(Self::trusted(ComplexMatrix::ket_bra(&v), vec![v.len()]))
    }

    pub fn pure_with_dims(amplitudes: &[C64], dims: Vec<usize>) -> Result<Self> {
        let s = Self::pure(amplitudes)?;
        s.with_dims(dims)
    }

    /// Same matrix, different subsystem split.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != self.dim() || dims.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "product of subsystem dims",
                expected: self.dim(),
                found: total,
            });
        }
        Ok(Self {
            mat: self.mat,
            dims,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::trusted(matops::tensor(&self.mat, &other.mat), dims)
    }

    /// Marginal on the listed subsystems.
    pub fn reduce(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Empty("kept subsystem list"));
        }
        let mat = matops::partial_trace(&self.mat, &self.dims, keep)?;
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        let dims = kept.iter().map(|&k| self.dims[k]).collect();
        Ok(Self::trusted(mat, dims))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(matops::eig_hermitian(&self.mat)?.values)
    }

    /// Minimum eigenvalue of the partial transpose on subsystem `on`.
    pub fn min_partial_transpose_eigenvalue(&self, on: usize) -> Result<f64> {
        let pt = matops::partial_transpose(&self.mat, &self.dims, on)?;
        Ok(matops::eig_hermitian(&pt)?.values[0])
    }

    /// Convex combination `sum w_k rho_k`; the weights are not re-checked.
    pub fn mixture<'a>(items: impl IntoIterator<Item = (f64, &'a DensityMatrix)>) -> Result<Self> {
        let mut iter = items.into_iter();
        let (w0, first) = iter.next().ok_or(Error::Empty("mixture"))?;
        let mut acc = first.mat.scale(w0);
        let dims = first.dims.clone();
        for (w, s) in iter {
            if s.dims != dims {
                return Err(Error::DimensionMismatch {
                    what: "mixture component dim",
                    expected: first.dim(),
                    found: s.dim(),
                });
            }
            acc.add_assign_scaled(&s.mat, w);
        }
        Ok(Self::trusted(acc, dims))
    }
}

/// Von Neumann entropy `-sum lambda log2 lambda` of a spectrum, rejecting
/// eigenvalues below `-STATE_TOL` and clipping the rest into `[0, 1]`.
pub fn spectrum_entropy(values: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &v in values {
        if v < -STATE_TOL {
            return Err(Error::NotPositive { min_eigenvalue: v });
        }
        let v = v.clamp(0.0, 1.0);
        if v > 0.0 {
            s -= v * math::log2(v);
        }
    }
    Ok(s.max(0.0))
}

pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    spectrum_entropy(&rho.eigenvalues()?)
}

/// Entropy of the marginal on `keep`.
pub fn marginal_entropy(rho: &DensityMatrix, keep: &[usize]) -> Result<f64> {
    entropy(&rho.reduce(keep)?)
}

/// `D(rho || sigma) = tr rho (log2 rho - log2 sigma)`, or `+inf` when the
/// support of `rho` is not contained in that of `sigma`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            what: "relative entropy arguments",
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let neg_s_rho = -entropy(rho)?;
    let es = matops::eig_hermitian(&sigma.mat)?;
    let n = sigma.dim();
    let mut cross = 0.0;
    for k in 0..n {
        let v = es.vectors.column_vec(k);
        // <v|rho|v>
        let mut weight = C64::new(0.0, 0.0);
        for r in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for (c, vc) in v.iter().enumerate() {
                row += rho.mat[(r, c)] * vc;
            }
            weight += v[r].conj() * row;
        }
        let w = weight.re;
        let mu = es.values[k];
        if mu < SUPPORT_TOL {
            if w > STATE_TOL {
                return Ok(f64::INFINITY);
            }
        } else {
            cross += w * math::log2(mu);
        }
    }
    Ok(neg_s_rho - cross)
}

fn check_groups(n: usize, groups: &[&[usize]]) -> Result<()> {
    let mut seen = vec![false; n];
    for g in groups {
        if g.is_empty() {
            return Err(Error::InvalidPartition("empty subsystem group"));
        }
        for &k in *g {
            if k >= n {
                return Err(Error::InvalidPartition("subsystem index out of range"));
            }
            if seen[k] {
                return Err(Error::InvalidPartition("subsystem groups overlap"));
            }
            seen[k] = true;
        }
    }
    Ok(())
}

fn union(groups: &[&[usize]]) -> Vec<usize> {
    let mut all: Vec<usize> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    all.sort_unstable();
    all
}

/// `S(A) + S(B) - S(AB)`. Subsystems in neither group are traced out.
pub fn mutual_information(rho: &DensityMatrix, a: &[usize], b: &[usize]) -> Result<f64> {
    check_groups(rho.dims.len(), &[a, b])?;
    let sa = marginal_entropy(rho, a)?;
    let sb = marginal_entropy(rho, b)?;
    let sab = marginal_entropy(rho, &union(&[a, b]))?;
    Ok(sa + sb - sab)
}

/// `S(A|B) = S(AB) - S(B)`.
pub fn conditional_entropy(rho: &DensityMatrix, a: &[usize], b: &[usize]) -> Result<f64> {
    check_groups(rho.dims.len(), &[a, b])?;
    Ok(marginal_entropy(rho, &union(&[a, b]))? - marginal_entropy(rho, b)?)
}

/// `S(A:B|C) = S(AC) + S(BC) - S(ABC) - S(C)`.
pub fn conditional_mutual_information(
    rho: &DensityMatrix,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    check_groups(rho.dims.len(), &[a, b, c])?;
    let sac = marginal_entropy(rho, &union(&[a, c]))?;
    let sbc = marginal_entropy(rho, &union(&[b, c]))?;
    let sabc = marginal_entropy(rho, &union(&[a, b, c]))?;
    let sc = marginal_entropy(rho, c)?;
    Ok(sac + sbc - sabc - sc)
}

fn check_probabilities<'a>(probs: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    let mut sum = 0.0;
    for &p in probs {
        if !(p >= 0.0) || p > 1.0 + PROB_TOL {
            return Err(Error::InvalidProbabilities { sum: p });
        }
        sum += p;
    }
    if !((sum - 1.0).abs() <= PROB_TOL) {
        return Err(Error::InvalidProbabilities { sum });
    }
    Ok(())
}

/// Probability-weighted family of states of equal dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    items: Vec<(f64, DensityMatrix)>,
}

impl Ensemble {
    pub fn new(items: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let first = items.first().ok_or(Error::Empty("ensemble"))?;
        let dims = first.1.dims().to_vec();
        for (_, s) in &items {
            if s.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch {
                    what: "ensemble member dim",
                    expected: first.1.dim(),
                    found: s.dim(),
                });
            }
        }
        check_probabilities(items.iter().map(|(p, _)| p))?;
        Ok(Self { items })
    }

    pub(crate) fn trusted(items: Vec<(f64, DensityMatrix)>) -> Self {
        Self { items }
    }

    pub fn items(&self) -> &[(f64, DensityMatrix)] {
        &self.items
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.items.iter().map(|(p, _)| *p).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.items[0].1.dim()
    }

    pub fn average(&self) -> DensityMatrix {
        DensityMatrix::mixture(self.items.iter().map(|(p, s)| (*p, s)))
            .expect("ensemble is non-empty and dimension-consistent")
    }
}

/// One branch `p_i |m_i><m_i| (x) rho_i` of a classical-quantum state.
#[derive(Clone, Debug, PartialEq)]
pub struct CqBranch {
    pub probability: f64,
    pub label: usize,
    pub state: DensityMatrix,
}

/// Classical-quantum state `sum_i p_i |m_i><m_i| (x) rho_i`. The message
/// register is kept implicit: its basis states are orthogonal, so every
/// functional reduces to branch-wise quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct CqState {
    branches: Vec<CqBranch>,
}

impl CqState {
    pub fn new(branches: Vec<CqBranch>) -> Result<Self> {
        let first = branches.first().ok_or(Error::Empty("cq state"))?;
        let dims = first.state.dims().to_vec();
        let mut labels: Vec<usize> = Vec::with_capacity(branches.len());
        for b in &branches {
            if b.state.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch {
                    what: "cq branch dim",
                    expected: first.state.dim(),
                    found: b.state.dim(),
                });
            }
            if labels.contains(&b.label) {
                return Err(Error::DuplicateLabel(b.label));
            }
            labels.push(b.label);
        }
        check_probabilities(branches.iter().map(|b| &b.probability))?;
        Ok(Self { branches })
    }

    /// Labels are the branch positions.
    pub fn from_ensemble(e: &Ensemble) -> Self {
        let branches = e
            .items()
            .iter()
            .enumerate()
            .map(|(label, (p, s))| CqBranch {
                probability: *p,
                label,
                state: s.clone(),
            })
            .collect();
        Self { branches }
    }

    pub fn branches(&self) -> &[CqBranch] {
        &self.branches
    }

    pub fn dims(&self) -> &[usize] {
        self.branches[0].state.dims()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.probability).collect()
    }

    /// Average quantum state `sum_i p_i rho_i`.
    pub fn average(&self) -> DensityMatrix {
        DensityMatrix::mixture(self.branches.iter().map(|b| (b.probability, &b.state)))
            .expect("cq state is non-empty and dimension-consistent")
    }

    fn reduced_branches(&self, keep: &[usize]) -> Result<Vec<(f64, DensityMatrix)>> {
        self.branches
            .iter()
            .map(|b| Ok((b.probability, b.state.reduce(keep)?)))
            .collect()
    }
}

/// `S(M : Q_subset) = S(avg) - sum_i p_i S(rho_i)` on the chosen quantum
/// registers.
pub fn cq_mutual_information(s: &CqState, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::Empty("quantum register subset"));
    }
    check_groups(s.dims().len(), &[subset])?;
    let reduced = s.reduced_branches(subset)?;
    let avg = DensityMatrix::mixture(reduced.iter().map(|(p, r)| (*p, r)))?;
    let mut mixed = 0.0;
    for (p, r) in &reduced {
        if *p > 0.0 {
            mixed += p * entropy(r)?;
        }
    }
    Ok(entropy(&avg)? - mixed)
}

/// `S(M X : Y)`, the message register grouped with the side registers `side`
/// against `target`:
/// `S(avg_Y) + sum_i p_i [S(rho_i,X) - S(rho_i,XY)]`.
pub fn cq_mutual_information_with_side(
    s: &CqState,
    side: &[usize],
    target: &[usize],
) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::Empty("target register subset"));
    }
    if side.is_empty() {
        return cq_mutual_information(s, target);
    }
    check_groups(s.dims().len(), &[side, target])?;
    let joint = union(&[side, target]);
    let target_branches = s.reduced_branches(target)?;
    let avg_target = DensityMatrix::mixture(target_branches.iter().map(|(p, r)| (*p, r)))?;
    let mut acc = entropy(&avg_target)?;
    for b in &s.branches {
        if b.probability > 0.0 {
            let sx = marginal_entropy(&b.state, side)?;
            let sxy = marginal_entropy(&b.state, &joint)?;
            acc += b.probability * (sx - sxy);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn phi_plus() -> DensityMatrix {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure_with_dims(&[c(h), c(0.0), c(0.0), c(h)], vec![2, 2]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&DensityMatrix::maximally_mixed(2)).unwrap() - 1.0).abs() < 1e-12);
        assert!(entropy(&DensityMatrix::basis(2, 0)).unwrap().abs() < 1e-12);
        let d = DensityMatrix::from_matrix(ComplexMatrix::diag_real(&[0.25, 0.75])).unwrap();
        // -0.25 log2 0.25 - 0.75 log2 0.75 = 0.5 + 0.311278...
        assert!((entropy(&d).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn state_validation_errors() {
        let m = ComplexMatrix::diag_real(&[0.5, 0.6]);
        assert!(matches!(
            DensityMatrix::from_matrix(m),
            Err(Error::NotUnitTrace { .. })
        ));
        let m = ComplexMatrix::diag_real(&[1.5, -0.5]);
        assert!(matches!(
            DensityMatrix::from_matrix(m),
            Err(Error::NotPositive { .. })
        ));
        let m = ComplexMatrix::diag_real(&[0.5, 0.5]);
        assert!(DensityMatrix::new(m, vec![3]).is_err());
    }

    #[test]
    fn spectrum_clipping() {
        assert_eq!(spectrum_entropy(&[-5e-11, 1.0]).unwrap(), 0.0);
        assert!(spectrum_entropy(&[-1e-6, 1.0]).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let mut rng = random::rng_from_seed(4);
        let rho = DensityMatrix::from_matrix(random::random_density(&mut rng, 3)).unwrap();
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-9);
        let zero = DensityMatrix::basis(2, 0);
        let one = DensityMatrix::basis(2, 1);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((relative_entropy(&zero, &mixed).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(relative_entropy(&zero, &one).unwrap(), f64::INFINITY);
        assert!(relative_entropy(&zero, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let mut rng = random::rng_from_seed(8);
        let a = DensityMatrix::from_matrix(random::random_density(&mut rng, 2)).unwrap();
        let b = DensityMatrix::from_matrix(random::random_density(&mut rng, 3)).unwrap();
        assert!(mutual_information(&a.tensor(&b), &[0], &[1]).unwrap().abs() < 1e-9);
        assert!((mutual_information(&phi_plus(), &[0], &[1]).unwrap() - 2.0).abs() < 1e-9);
        let classical =
            DensityMatrix::new(ComplexMatrix::diag_real(&[0.5, 0.0, 0.0, 0.5]), vec![2, 2])
                .unwrap();
        assert!((mutual_information(&classical, &[0], &[1]).unwrap() - 1.0).abs() < 1e-9);
        assert!(mutual_information(&classical, &[0], &[0]).is_err());
        assert!(mutual_information(&classical, &[], &[1]).is_err());
    }

    #[test]
    fn conditional_mutual_information_examples() {
        let mut rng = random::rng_from_seed(12);
        let states: Vec<DensityMatrix> = (0..3)
            .map(|_| DensityMatrix::from_matrix(random::random_density(&mut rng, 2)).unwrap())
            .collect();
        let prod = states[0].tensor(&states[1]).tensor(&states[2]);
        assert!(
            conditional_mutual_information(&prod, &[0], &[1], &[2])
                .unwrap()
                .abs()
                < 1e-9
        );
        let bell_c = phi_plus().tensor(&states[2]);
        let v = conditional_mutual_information(&bell_c, &[0], &[1], &[2]).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cq_examples() {
        let zero = DensityMatrix::basis(2, 0);
        let one = DensityMatrix::basis(2, 1);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[c(h), c(h)]).unwrap();
        let same = CqState::new(vec![
            CqBranch {
                probability: 0.3,
                label: 0,
                state: plus.clone(),
            },
            CqBranch {
                probability: 0.7,
                label: 1,
                state: plus.clone(),
            },
        ])
        .unwrap();
        assert!(cq_mutual_information(&same, &[0]).unwrap().abs() < 1e-12);
        let orth = CqState::new(vec![
            CqBranch {
                probability: 0.5,
                label: 0,
                state: zero.clone(),
            },
            CqBranch {
                probability: 0.5,
                label: 1,
                state: one,
            },
        ])
        .unwrap();
        assert!((cq_mutual_information(&orth, &[0]).unwrap() - 1.0).abs() < 1e-12);
        let nonorth = CqState::new(vec![
            CqBranch {
                probability: 0.5,
                label: 0,
                state: zero,
            },
            CqBranch {
                probability: 0.5,
                label: 1,
                state: plus,
            },
        ])
        .unwrap();
        // average state has eigenvalues cos^2(pi/8), sin^2(pi/8)
        let c2 = libm::cos(core::f64::consts::PI / 8.0).powi(2);
        let want = crate::math::binary_entropy(c2);
        assert!((cq_mutual_information(&nonorth, &[0]).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.600_876).abs() < 1e-6);
        assert!(cq_mutual_information(&nonorth, &[]).is_err());
    }

    #[test]
    fn cq_state_validation() {
        let z = DensityMatrix::basis(2, 0);
        let dup = CqState::new(vec![
            CqBranch {
                probability: 0.5,
                label: 3,
                state: z.clone(),
            },
            CqBranch {
                probability: 0.5,
                label: 3,
                state: z.clone(),
            },
        ]);
        assert_eq!(dup, Err(Error::DuplicateLabel(3)));
        let bad = CqState::new(vec![CqBranch {
            probability: 0.9,
            label: 0,
            state: z,
        }]);
        assert!(matches!(bad, Err(Error::InvalidProbabilities { .. })));
    }
}
