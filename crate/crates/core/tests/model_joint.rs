mod common;

use common::{integrate, joint_oracle, naive_matvec, random_problem};
use rand::Rng;
use skewt_inverse::model::{joint_log_density, joint_terms, nu_log_prior, residuals, ObservedData, PriorSpec};
use skewt_inverse::LinearForwardModel;

#[test]
fn nu_prior_integrates_to_one() {
    for rate in [0.1, 0.5, 2.0] {
        let spec = PriorSpec {
            nu_rate: rate,
            ..PriorSpec::default_for(1)
        };
        let mass = integrate(|nu| nu_log_prior(nu, &spec).exp(), 2.0, 2.0 + 60.0 / rate, 1e-12)
            + (-60.0f64).exp();
        assert!((mass - 1.0).abs() < 1e-8, "rate {rate}: {mass}");
    }
}

#[test]
fn residuals_match_naive_product() {
    let mut rng = skewt_inverse::seeded_rng(1);
    for _ in 0..20 {
        let (data, _, state) = random_problem(&mut rng, 9, 4);
        let direct = naive_matvec(data.operator.matrix(), &state.u);
        let eps = residuals(&state, &data).unwrap();
        for i in 0..9 {
            assert!((eps[i] - (data.y[i] - direct[i])).abs() < 1e-12);
        }
    }
}

#[test]
fn joint_matches_term_oracle() {
    let mut rng = skewt_inverse::seeded_rng(2);
    for _ in 0..100 {
        let n = rng.random_range(1..12);
        let d = rng.random_range(1..6);
        let (data, spec, state) = random_problem(&mut rng, n, d);
        let got = joint_log_density(&state, &data, &spec).unwrap();
        let want = joint_oracle(&state, &data, &spec);
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn duplicated_observation_adds_one_block() {
    let mut rng = skewt_inverse::seeded_rng(3);
    let (data, spec, state) = random_problem(&mut rng, 1, 3);
    let row = data.operator.matrix().clone();
    let doubled = nalgebra::DMatrix::from_fn(2, 3, |_, j| row[(0, j)]);
    let data2 = ObservedData::new(vec![data.y[0]; 2], LinearForwardModel::new(doubled).unwrap()).unwrap();
    let mut state2 = state.clone();
    state2.z.push(state.z[0]);
    state2.w.push(state.w[0]);
    let single = joint_terms(&state, &data, &spec).unwrap();
    let extra = single.likelihood[0] + single.latent_z[0] + single.latent_w[0];
    let j1 = joint_log_density(&state, &data, &spec).unwrap();
    let j2 = joint_log_density(&state2, &data2, &spec).unwrap();
    assert!((j2 - (j1 + extra)).abs() < 1e-10);
}

#[test]
fn prior_only_terms_when_no_data_terms() {
    let mut rng = skewt_inverse::seeded_rng(4);
    let (data, spec, state) = random_problem(&mut rng, 3, 2);
    let t = joint_terms(&state, &data, &spec).unwrap();
    let data_part: f64 = t.likelihood.iter().chain(&t.latent_z).chain(&t.latent_w).sum();
    let priors = t.u_prior + t.delta_prior + t.tau_prior + t.nu_prior;
    assert!((t.total() - data_part - priors).abs() < 1e-12);
}
