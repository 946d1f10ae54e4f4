use feedcap_core::channels::{make_channel, random_channel};
use feedcap_core::holevo::{
    chi_grid_oracle_qubit, default_ensemble_size, holevo_quantity, maximize_holevo,
};
use feedcap_core::math::{binary_entropy, shannon_entropy};
use feedcap_core::matops::eig_hermitian;
use feedcap_core::random::{random_density, random_probabilities, rng_from_seed};
use feedcap_core::{ChannelKind, DensityMatrix, Ensemble, KrausChannel, OptimizerOptions};

const AMPLITUDE_DAMPING_03_GRID_24: f64 = 0.637_812_407_630_008;
const AMPLITUDE_DAMPING_03_GRID_48: f64 = 0.638_174_035_443_731;

fn zoo() -> Vec<(&'static str, KrausChannel)> {
    let mk = |k, p: &[f64]| make_channel(k, p, 2).unwrap();
    vec![
        ("identity", KrausChannel::identity(2)),
        ("depolarizing(0.3)", mk(ChannelKind::Depolarizing, &[0.3])),
        ("depolarizing(0.5)", mk(ChannelKind::Depolarizing, &[0.5])),
        ("depolarizing(1)", mk(ChannelKind::Depolarizing, &[1.0])),
        ("dephasing(0.5)", mk(ChannelKind::Dephasing, &[0.5])),
        ("dephasing(1)", mk(ChannelKind::Dephasing, &[1.0])),
        (
            "amplitude_damping(0.3)",
            mk(ChannelKind::AmplitudeDamping, &[0.3]),
        ),
        (
            "amplitude_damping(0.8)",
            mk(ChannelKind::AmplitudeDamping, &[0.8]),
        ),
    ]
}

fn random_ensemble(seed: u64, n: usize, d: usize) -> Ensemble {
    let mut rng = rng_from_seed(seed);
    let probs = random_probabilities(&mut rng, n, 0.0);
    let items = probs
        .into_iter()
        .map(|p| {
            (
                p,
                DensityMatrix::from_matrix(random_density(&mut rng, d)).unwrap(),
            )
        })
        .collect();
    Ensemble::new(items).unwrap()
}

fn pure_decomposition(e: &Ensemble) -> Ensemble {
    let mut items = Vec::new();
    for (p, rho) in e.items() {
        let eig = eig_hermitian(rho.matrix()).unwrap();
        for (k, &w) in eig.values.iter().enumerate() {
            if w > 1e-14 {
                items.push((
                    p * w,
                    DensityMatrix::pure(&eig.vectors.column_vec(k)).unwrap(),
                ));
            }
        }
    }
    let total: f64 = items.iter().map(|(p, _)| p).sum();
    Ensemble::new(items.into_iter().map(|(p, s)| (p / total, s)).collect()).unwrap()
}

fn quick(seed: u64) -> OptimizerOptions {
    OptimizerOptions {
        restarts: 4,
        max_iters: 2000,
        seed,
        ..OptimizerOptions::default()
    }
}

#[test]
fn holevo_quantity_bounded_by_prior_entropy_and_dimension() {
    let mut rng = rng_from_seed(31);
    for k in 0..200u64 {
        let ch = random_channel(&mut rng, 3, 2, 3);
        let e = random_ensemble(k, 2 + k as usize % 6, 3);
        let chi = holevo_quantity(&ch, &e).unwrap();
        assert!(chi >= -1e-9);
        assert!(chi <= shannon_entropy(&e.probabilities()) + 1e-9);
        assert!(chi <= 1.0 + 1e-9);
    }
}

#[test]
fn pure_decomposition_never_lowers_holevo_quantity() {
    let mut rng = rng_from_seed(32);
    for k in 0..200u64 {
        let ch = random_channel(&mut rng, 2, 3, 2);
        let e = random_ensemble(1000 + k, 2 + k as usize % 3, 2);
        let mixed = holevo_quantity(&ch, &e).unwrap();
        let pure = holevo_quantity(&ch, &pure_decomposition(&e)).unwrap();
        assert!(pure >= mixed - 1e-9);
    }
}

#[test]
fn depolarizing_orthogonal_pair_closed_form() {
    let pair = Ensemble::new(vec![
        (0.5, DensityMatrix::basis(2, 0)),
        (0.5, DensityMatrix::basis(2, 1)),
    ])
    .unwrap();
    for k in 0..=10 {
        let p = k as f64 / 10.0;
        let ch = make_channel(ChannelKind::Depolarizing, &[p], 2).unwrap();
        let chi = holevo_quantity(&ch, &pair).unwrap();
        assert!((chi - (1.0 - binary_entropy(p / 2.0))).abs() <= 1e-10);
    }
}

#[test]
fn optimizer_never_ends_below_its_seed_ensemble() {
    let mut rng = rng_from_seed(33);
    for k in 0..10u64 {
        let ch = random_channel(&mut rng, 2, 2, 2);
        let e = random_ensemble(2000 + k, 4, 2);
        let seeded = holevo_quantity(&ch, &e).unwrap();
        let opts = OptimizerOptions {
            restarts: 1,
            max_iters: 200,
            initial: Some(e),
            ..OptimizerOptions::default()
        };
        let r = maximize_holevo(&ch, 4, &opts).unwrap();
        assert!(r.chi_estimate >= seeded - 1e-9);
    }
}

#[test]
fn optimizer_reaches_grid_reference_on_zoo() {
    for (name, ch) in zoo() {
        let grid = chi_grid_oracle_qubit(&ch, 24).unwrap();
        let r = maximize_holevo(&ch, default_ensemble_size(&ch), &quick(5)).unwrap();
        assert!(
            r.chi_estimate >= grid - 5e-3,
            "{name}: {} vs grid {grid}",
            r.chi_estimate
        );
        assert!(
            r.chi_estimate >= -1e-9 && r.chi_estimate <= 1.0 + 1e-9,
            "{name}"
        );
        let again = holevo_quantity(&ch, &r.best_ensemble).unwrap();
        assert!((again - r.chi_estimate).abs() <= 1e-9, "{name}");
    }
}

#[test]
fn erasure_capacity_is_one_minus_erasure_probability() {
    for eps in [0.0, 0.25, 0.6] {
        let ch = make_channel(ChannelKind::Erasure, &[eps], 2).unwrap();
        let r = maximize_holevo(&ch, 4, &quick(6)).unwrap();
        assert!(
            (r.chi_estimate - (1.0 - eps)).abs() <= 1e-3,
            "eps {eps}: {}",
            r.chi_estimate
        );
        assert!(r.chi_estimate <= 3f64.log2() + 1e-9);
    }
}

#[test]
fn grid_reference_stays_below_closed_forms() {
    for k in 0..=4 {
        let p = k as f64 / 4.0;
        let ch = make_channel(ChannelKind::Depolarizing, &[p], 2).unwrap();
        let exact = 1.0 - binary_entropy(p / 2.0);
        let grid = chi_grid_oracle_qubit(&ch, 12).unwrap();
        assert!(grid <= exact + 1e-12 && grid >= exact - 1e-2);
    }
}

#[test]
fn amplitude_damping_grid_regression() {
    let ch = make_channel(ChannelKind::AmplitudeDamping, &[0.3], 2).unwrap();
    assert!(
        (chi_grid_oracle_qubit(&ch, 24).unwrap() - AMPLITUDE_DAMPING_03_GRID_24).abs() <= 1e-12
    );
    assert!(
        (chi_grid_oracle_qubit(&ch, 48).unwrap() - AMPLITUDE_DAMPING_03_GRID_48).abs() <= 1e-12
    );
}

#[test]
fn product_ensembles_bound_two_use_capacity() {
    let ch = make_channel(ChannelKind::Dephasing, &[0.5], 2).unwrap();
    let single = maximize_holevo(&ch, 4, &quick(7)).unwrap().chi_estimate;
    let pair = ch.tensor(&ch);
    let opts = OptimizerOptions {
        restarts: 4,
        max_iters: 3000,
        seed: 7,
        ..OptimizerOptions::default()
    };
    let double = maximize_holevo(&pair, default_ensemble_size(&pair), &opts)
        .unwrap()
        .chi_estimate;
    assert!(double >= 2.0 * single - 1e-2, "{double} vs 2 x {single}");
    assert!(double <= 2.0 + 1e-9);
}
