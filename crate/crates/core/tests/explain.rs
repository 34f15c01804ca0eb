use nalgebra::DMatrix;
use rand::Rng;

use latent_cause::explain::{
    auroc, shap_enumerate, shap_exact, shap_sampled, train_boosted, train_logistic, BoostParams, LogisticParams,
    Margin,
};
use latent_cause::stats::{mean, seeded_rng, std_dev};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Direct Shapley formula: average over the background of the model at the
/// hybrid point, weighted over every subset excluding each feature.
fn brute_force(model: &impl Margin, x: &[f64], bg: &DMatrix<f64>) -> Vec<f64> {
    let k = x.len();
    let value = |mask: usize| -> f64 {
        let mut total = 0.0;
        for b in bg.column_iter() {
            let z: Vec<f64> = (0..k).map(|f| if mask >> f & 1 == 1 { x[f] } else { b[f] }).collect();
            total += model.margin(&z);
        }
        total / bg.ncols() as f64
    };
    let values: Vec<f64> = (0..1usize << k).map(value).collect();
    (0..k)
        .map(|i| {
            (0..1usize << k)
                .filter(|s| s >> i & 1 == 0)
                .map(|s| {
                    let size = s.count_ones() as usize;
                    factorial(size) * factorial(k - size - 1) / factorial(k) * (values[s | 1 << i] - values[s])
                })
                .sum()
        })
        .collect()
}

fn boosted_fixture(k: usize, n: usize, seed: u64) -> (latent_cause::explain::TreeEnsemble, DMatrix<f64>) {
    let mut rng = seeded_rng(seed);
    let x: DMatrix<f64> = DMatrix::from_fn(k, n, |_, _| rng.random_range(-2.0..2.0));
    let y: Vec<u8> = x
        .column_iter()
        .map(|c| {
            let m = c[0] * c[1] + c[2] - 0.5 * c[3].abs() + 0.3 * c[4] * c[5];
            u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-m).exp()))
        })
        .collect();
    let params = BoostParams { n_rounds: 40, max_depth: 4, min_samples_leaf: 5, seed, ..Default::default() };
    (train_boosted(&x, &y, &params).0, x)
}

#[test]
fn tree_shap_matches_brute_force_at_k8() {
    let (model, x) = boosted_fixture(8, 600, 1);
    let bg = x.columns(0, 30).into_owned();
    for j in [100, 200, 300] {
        let inst: Vec<f64> = x.column(j).iter().copied().collect();
        let oracle = brute_force(&model, &inst, &bg);
        let exact = shap_exact(&model, &inst, &bg).unwrap();
        let (_, enumerated) = shap_enumerate(&model, &inst, &bg).unwrap();
        for i in 0..8 {
            assert!((exact.phi[i] - oracle[i]).abs() < 1e-9);
            assert!((enumerated[i] - oracle[i]).abs() < 1e-9);
        }
        assert!((exact.total() - model.margin(&inst)).abs() < 1e-9);
    }
}

#[test]
fn sampled_error_shrinks_like_root_n() {
    let (model, x) = boosted_fixture(8, 600, 2);
    let bg = x.columns(0, 20).into_owned();
    let inst: Vec<f64> = x.column(400).iter().copied().collect();
    let exact = shap_exact(&model, &inst, &bg).unwrap();
    let mut rng = seeded_rng(3);
    let mut ratios = Vec::new();
    for _ in 0..10 {
        let small = shap_sampled(&model, &inst, &bg, 500, &mut rng).unwrap();
        let large = shap_sampled(&model, &inst, &bg, 1000, &mut rng).unwrap();
        ratios.push(mean(small.std_errors.as_ref().unwrap()) / mean(large.std_errors.as_ref().unwrap()));
        let within = (0..8).all(|i| (large.phi[i] - exact.phi[i]).abs() <= 4.0 * large.std_errors.as_ref().unwrap()[i] + 1e-12);
        assert!(within);
    }
    let r = mean(&ratios);
    assert!((r / 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {r}");
}

#[test]
fn boosting_loss_never_increases() {
    let mut rng = seeded_rng(5);
    let x = DMatrix::from_fn(4, 800, |_, _| rng.random_range(-1.0..1.0));
    let y: Vec<u8> = x.column_iter().map(|c| u8::from(c[0] + 0.5 * c[1] > rng.random_range(-0.5..0.5))).collect();
    for subsample in [1.0, 0.5] {
        let params = BoostParams { n_rounds: 60, subsample, ..Default::default() };
        let (_, trace) = train_boosted(&x, &y, &params);
        assert_eq!(trace.losses.len(), 61);
        assert!(trace.losses.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }
}

#[test]
fn logistic_recovers_generating_weights() {
    let mut rng = seeded_rng(6);
    let x = DMatrix::from_fn(2, 20_000, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let y: Vec<u8> = x
        .column_iter()
        .map(|c| u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-(2.0 * c[0] - c[1])).exp())))
        .collect();
    let (m, report) = train_logistic(&x, &y, &LogisticParams::default());
    assert!(report.converged);
    assert!((m.weights[0] / 2.0 - 1.0).abs() < 0.15, "{:?}", m.weights);
    assert!((m.weights[1] / -1.0 - 1.0).abs() < 0.15, "{:?}", m.weights);
}

#[test]
fn random_labels_give_chance_auroc() {
    let mut rng = seeded_rng(7);
    let x = DMatrix::from_fn(3, 1000, |_, _| rng.random_range(-1.0..1.0));
    let y: Vec<u8> = (0..1000).map(|_| u8::from(rng.random::<bool>())).collect();
    // Train on the first half, score the second.
    let train = x.columns(0, 500).into_owned();
    let (model, _) = train_boosted(&train, &y[..500], &BoostParams { n_rounds: 50, ..Default::default() });
    let scores: Vec<f64> = (500..1000).map(|j| model.predict(x.column(j).as_slice())).collect();
    let a = auroc(&scores, &y[500..]).unwrap();
    assert!((0.4..=0.6).contains(&a), "{a}");
}

#[test]
fn auroc_matches_all_pairs_oracle() {
    let mut rng = seeded_rng(8);
    for _ in 0..50 {
        let n = rng.random_range(2..40);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6u8))).collect();
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        labels[0] = 0;
        labels[1] = 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    num += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Less => 0.0,
                    };
                }
            }
        }
        assert_eq!(auroc(&scores, &labels).unwrap(), num / den);
    }
}

#[test]
fn monotone_signal_gives_monotone_predictions() {
    let mut rng = seeded_rng(9);
    let x: DMatrix<f64> = DMatrix::from_fn(1, 3000, |_, _| rng.random_range(-3.0..3.0));
    let y: Vec<u8> = x.iter().map(|&v| u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-2.0 * v).exp()))).collect();
    let (lm, _) = train_logistic(&x, &y, &LogisticParams::default());
    let sweep: Vec<f64> = (-30..=30).map(|i| lm.predict(&[i as f64 / 10.0])).collect();
    assert!(sweep.windows(2).all(|w| w[1] > w[0]));
    let (trees, _) = train_boosted(&x, &y, &BoostParams { n_rounds: 100, ..Default::default() });
    let sweep: Vec<f64> = (-30..=30).map(|i| trees.predict(&[i as f64 / 10.0])).collect();
    let spread = std_dev(&sweep);
    assert!(spread > 0.1);
    assert!(sweep.last().unwrap() > sweep.first().unwrap());
}
