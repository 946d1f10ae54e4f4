use feedcap_core::math::shannon_entropy;
use feedcap_core::matops::{eig_hermitian, tensor};
use feedcap_core::quantum::{
    conditional_entropy, conditional_mutual_information, cq_mutual_information, entropy,
    mutual_information,
};
use feedcap_core::random::{
    random_density, random_probabilities, random_pure_density, rng_from_seed, SeededRng,
};
use feedcap_core::{ComplexMatrix, CqBranch, CqState, DensityMatrix};

fn state(rng: &mut SeededRng, dims: &[usize]) -> DensityMatrix {
    let d = dims.iter().product();
    DensityMatrix::new(random_density(rng, d), dims.to_vec()).unwrap()
}

fn pure(rng: &mut SeededRng, dims: &[usize]) -> DensityMatrix {
    let d = dims.iter().product();
    DensityMatrix::new(random_pure_density(rng, d), dims.to_vec()).unwrap()
}

fn embed(s: &CqState) -> DensityMatrix {
    let n = s.branches().len();
    let d = s.branches()[0].state.dim();
    let mut m = ComplexMatrix::zeros(n * d, n * d);
    for (i, b) in s.branches().iter().enumerate() {
        let mut proj = ComplexMatrix::zeros(n, n);
        proj[(i, i)] = 1.0.into();
        m.add_assign_scaled(&tensor(&proj, b.state.matrix()), b.probability);
    }
    let mut dims = vec![n];
    dims.extend_from_slice(s.dims());
    DensityMatrix::new(m, dims).unwrap()
}

fn random_cq(rng: &mut SeededRng, n: usize, dims: &[usize]) -> CqState {
    let probs = random_probabilities(rng, n, 0.0);
    let branches = probs
        .into_iter()
        .enumerate()
        .map(|(label, probability)| CqBranch {
            probability,
            label,
            state: if label % 2 == 0 {
                pure(rng, dims)
            } else {
                state(rng, dims)
            },
        })
        .collect();
    CqState::new(branches).unwrap()
}

#[test]
fn strong_subadditivity_on_random_three_qubit_states() {
    let mut rng = rng_from_seed(11);
    for k in 0..1000 {
        let rho = if k % 2 == 0 {
            state(&mut rng, &[2, 2, 2])
        } else {
            pure(&mut rng, &[2, 2, 2])
        };
        let cmi = conditional_mutual_information(&rho, &[0], &[1], &[2]).unwrap();
        assert!(cmi >= -1e-9, "sample {k}: {cmi}");
    }
}

#[test]
fn chain_rule_for_mutual_information() {
    let mut rng = rng_from_seed(12);
    for _ in 0..200 {
        let rho = state(&mut rng, &[2, 2, 2]);
        let abc = mutual_information(&rho, &[0], &[1, 2]).unwrap();
        let ac = mutual_information(&rho, &[0], &[2]).unwrap();
        let cmi = conditional_mutual_information(&rho, &[0], &[1], &[2]).unwrap();
        assert!((abc - ac - cmi).abs() <= 1e-9);
    }
}

#[test]
fn entropy_is_additive_on_products() {
    let mut rng = rng_from_seed(13);
    for _ in 0..500 {
        let a = state(&mut rng, &[2]);
        let b = state(&mut rng, &[3]);
        let s = entropy(&a.tensor(&b)).unwrap() - entropy(&a).unwrap() - entropy(&b).unwrap();
        assert!(s.abs() <= 1e-9);
    }
}

#[test]
fn entropy_stays_in_range() {
    let mut rng = rng_from_seed(14);
    for d in 1..7 {
        for _ in 0..50 {
            let s = entropy(&state(&mut rng, &[d])).unwrap();
            assert!(s >= 0.0 && s <= (d as f64).log2() + 1e-9);
        }
    }
}

#[test]
fn conditional_entropy_is_concave() {
    let mut rng = rng_from_seed(15);
    for k in 0..300 {
        let probs = random_probabilities(&mut rng, 2 + k % 4, 0.0);
        let states: Vec<DensityMatrix> =
            (0..probs.len()).map(|_| state(&mut rng, &[2, 2])).collect();
        let avg = DensityMatrix::mixture(probs.iter().copied().zip(states.iter())).unwrap();
        let lhs = conditional_entropy(&avg, &[0], &[1]).unwrap();
        let rhs: f64 = probs
            .iter()
            .zip(&states)
            .map(|(p, s)| p * conditional_entropy(s, &[0], &[1]).unwrap())
            .sum();
        assert!(lhs >= rhs - 1e-9);
    }
}

#[test]
fn mutual_information_bounds() {
    let mut rng = rng_from_seed(16);
    for _ in 0..300 {
        let rho = state(&mut rng, &[2, 3]);
        let i = mutual_information(&rho, &[0], &[1]).unwrap();
        assert!((-1e-9..=2.0 + 1e-9).contains(&i));
    }
}

#[test]
fn cq_information_matches_explicit_embedding() {
    let mut rng = rng_from_seed(17);
    for n in 2..6 {
        for _ in 0..40 {
            let s = random_cq(&mut rng, n, &[2, 2]);
            let direct = cq_mutual_information(&s, &[0, 1]).unwrap();
            let embedded = mutual_information(&embed(&s), &[0], &[1, 2]).unwrap();
            assert!((direct - embedded).abs() <= 1e-9);
            let marginal = cq_mutual_information(&s, &[1]).unwrap();
            let embedded = mutual_information(&embed(&s), &[0], &[2]).unwrap();
            assert!((marginal - embedded).abs() <= 1e-9);
        }
    }
}

#[test]
fn cq_information_obeys_holevo_bound() {
    let mut rng = rng_from_seed(18);
    for n in 2..9 {
        for _ in 0..40 {
            let s = random_cq(&mut rng, n, &[3]);
            let i = cq_mutual_information(&s, &[0]).unwrap();
            assert!(i >= -1e-9);
            assert!(i <= shannon_entropy(&s.probabilities()) + 1e-9);
            assert!(i <= 3f64.log2() + 1e-9);
        }
    }
}

#[test]
fn cq_plus_state_pair_matches_block_eigenvalues() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityMatrix::pure(&[h.into(), h.into()]).unwrap();
    let s = CqState::new(vec![
        CqBranch {
            probability: 0.5,
            label: 0,
            state: DensityMatrix::basis(2, 0),
        },
        CqBranch {
            probability: 0.5,
            label: 1,
            state: plus,
        },
    ])
    .unwrap();
    let e = eig_hermitian(embed(&s).matrix()).unwrap();
    let joint = -e
        .values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.log2())
        .sum::<f64>();
    let avg = eig_hermitian(s.average().matrix()).unwrap();
    let q = -avg.values.iter().map(|v| v * v.log2()).sum::<f64>();
    let oracle = 1.0 + q - joint;
    assert!((cq_mutual_information(&s, &[0]).unwrap() - oracle).abs() <= 1e-9);
    assert!((oracle - 0.600_876_036_692_856).abs() <= 1e-9);
}
