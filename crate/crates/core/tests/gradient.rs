use ctrlz_core::learner::{PolicyNetwork, ReinforceConfig, ReinforceLearner};
use ctrlz_core::rng::{substream, Stream};
use ctrlz_core::Trajectory;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

const H: f64 = 1e-5;

fn close(analytic: f64, numeric: f64) -> bool {
    let diff = (analytic - numeric).abs();
    if analytic.abs().max(numeric.abs()) < 1e-2 {
        diff < 1e-6
    } else {
        diff / analytic.abs().max(numeric.abs()) < 1e-4
    }
}

fn random_net(seed: u64) -> (PolicyNetwork, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_std = rng.random_range(-1.0..0.5);
    let mut net = PolicyNetwork::new(&[4, 32, 32, 1], log_std, &mut rng).unwrap();
    for p in net.params_mut() {
        *p += rng.random_range(-0.2..0.2);
    }
    (net, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn log_prob_gradient_matches_central_differences(seed in any::<u64>()) {
        let (mut net, mut rng) = random_net(seed);
        let obs: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let action = vec![rng.random_range(-2.0..2.0)];

        let mut grad = vec![0.0; net.params().len()];
        net.accumulate_log_prob_grad(&obs, &action, 1.0, &mut grad).unwrap();

        // A spread of parameters across every layer plus log_std.
        let n = grad.len();
        let picks: Vec<usize> = (0..25).map(|_| rng.random_range(0..n)).chain([n - 1, 0, 4 * 32]).collect();
        for i in picks {
            let orig = net.params()[i];
            net.params_mut()[i] = orig + H;
            let up = net.log_prob(&obs, &action).unwrap();
            net.params_mut()[i] = orig - H;
            let down = net.log_prob(&obs, &action).unwrap();
            net.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * H);
            prop_assert!(close(grad[i], numeric), "param {}: analytic {} numeric {}", i, grad[i], numeric);
        }
    }
}

#[test]
fn log_prob_is_gaussian_density() {
    let (net, _) = random_net(3);
    let obs = [0.1, -0.2, 0.3, 0.0];
    let mean = net.mean_action(&obs).unwrap()[0];
    let sigma = net.log_std()[0].exp();
    let a = mean + 0.7;
    let oracle = -0.5 * (0.7 / sigma).powi(2) - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    assert!((net.log_prob(&obs, &[a]).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn policy_gradient_is_return_weighted_score() {
    let config = ReinforceConfig::default();
    let gamma = config.gamma;
    let learner = ReinforceLearner::new(config, 4, 1, &mut substream(11, Stream::Init)).unwrap();
    let mut traj = Trajectory::new();
    let rewards = [1.0, 1.0, 1.0, 1.0];
    for (i, r) in rewards.iter().enumerate() {
        traj.push(vec![0.05 * i as f64, 0.1, -0.02, 0.0], vec![0.3 - 0.2 * i as f64], *r);
    }
    let grad = learner.policy_gradient(std::slice::from_ref(&traj)).unwrap();

    // Surrogate sum_t G_t log pi(a_t|s_t) differentiated numerically.
    let returns: Vec<f64> = (0..rewards.len())
        .map(|t| rewards[t..].iter().enumerate().map(|(k, r)| gamma.powi(k as i32) * r).sum())
        .collect();
    let mut net = learner.network().clone();
    let surrogate = |net: &PolicyNetwork| -> f64 {
        traj.steps
            .iter()
            .zip(&returns)
            .map(|(s, g)| g * net.log_prob(&s.observation, &s.action).unwrap())
            .sum()
    };
    for i in (0..grad.len()).step_by(37).chain([grad.len() - 1]) {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + H;
        let up = surrogate(&net);
        net.params_mut()[i] = orig - H;
        let down = surrogate(&net);
        net.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * H);
        assert!(close(grad[i], numeric), "param {i}: {} vs {numeric}", grad[i]);
    }
}
