use proptest::prelude::*;
use rehearsal_core::generative::{separation_penalty, CVae, CVaeConfig, LossWeights};
use rehearsal_core::nn::{Adam, Tensor};
use rehearsal_core::tasks::synthetic_clusters;
use rehearsal_core::SeededRng;

fn three_condition_model(seed: u64) -> CVae {
    let mut cfg = CVaeConfig::new(8, 3);
    cfg.hidden = vec![12];
    let mut vae = CVae::new(&cfg, &mut SeededRng::new(seed)).unwrap();
    for c in 0..3 {
        vae.ensure_condition(c, &[0.5; 8]).unwrap();
    }
    vae
}

#[test]
fn unconditioned_draws_cover_conditions_evenly() {
    let vae = three_condition_model(0);
    let mut counts = [0usize; 3];
    let n = 10_000;
    for (_, c) in vae.generate(n, &mut SeededRng::new(1), None).unwrap() {
        counts[c] += 1;
    }
    for c in counts {
        assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
    }
}

#[test]
fn fixed_latent_and_condition_decode_deterministically() {
    let vae = three_condition_model(2);
    let z = Tensor::matrix(2, 3, vec![0.1, -0.4, 2.0, 0.1, -0.4, 2.0]).unwrap();
    let x = vae.decode(&z, &[1, 1]).unwrap();
    assert_eq!(x.row(0), x.row(1));
    assert_eq!(x, vae.decode(&z, &[1, 1]).unwrap());
}

#[test]
fn training_reduces_loss_and_keeps_decomposition() {
    let mut rng = SeededRng::new(3);
    let data = synthetic_clusters(40, 3, 8, 0.05, &mut rng).unwrap();
    let mut vae = three_condition_model(4);
    let x = Tensor::from_rows(&data.images).unwrap();
    let weights = LossWeights::new(2.0, 1.0).unwrap();
    let mut opt = Adam::new(3e-3);
    let (before, _) = vae.loss(&x, &data.labels, weights, &mut SeededRng::new(9)).unwrap();
    let mut last = before;
    for _ in 0..300 {
        last = vae.train_step(&x, &data.labels, weights, &mut opt, &mut rng).unwrap();
        let rebuilt = weights.w * last.recon + last.kl + weights.lambda * last.separation;
        assert!((last.total - rebuilt).abs() <= 1e-12 * last.total.abs().max(1.0));
        assert!(last.kl >= 0.0 && last.recon >= 0.0 && (0.0..=3.0).contains(&last.separation));
    }
    assert!(last.recon < 0.8 * before.recon, "{} -> {}", before.recon, last.recon);
    assert_eq!(vae.trained_steps(), 300);
    assert!(vae.centroids().counts().iter().all(|&n| n > 1));
}

proptest! {
    #[test]
    fn separation_is_bounded_and_invariant(
        raw in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 4), 0..6),
        scale in 0.01f64..100.0,
        shift in 0usize..6,
    ) {
        let c = raw.len() as f64;
        let s = separation_penalty(&raw);
        prop_assert!(s >= 0.0 && s <= c * (c - 1.0) / 2.0 + 1e-12);

        let mut rotated = raw.clone();
        if !rotated.is_empty() {
            let k = shift % rotated.len();
            rotated.rotate_left(k);
            rotated[0].iter_mut().for_each(|v| *v *= scale);
        }
        prop_assert!((separation_penalty(&rotated) - s).abs() < 1e-9);
    }
}
