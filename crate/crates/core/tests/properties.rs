use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toroskew::families::BaseDensity;
use toroskew::{
    base_log_density, log_likelihood, mixture_log_density, sample, skew_log_density, symmetry_test, Family, FamilyParams,
    FitOptions, MixtureModel, SkewModel, TorusPoint,
};

fn angle() -> impl Strategy<Value = f64> {
    -std::f64::consts::PI..std::f64::consts::PI
}

/// Skewness vectors inside the unit l1-ball.
fn lambda() -> impl Strategy<Value = Vec<f64>> {
    (-1.0..1.0f64, 0.0..1.0f64).prop_map(|(a, t)| vec![a, (1.0 - a.abs()) * (2.0 * t - 1.0)])
}

fn base() -> impl Strategy<Value = FamilyParams> {
    prop_oneof![
        Just(FamilyParams::uniform(2).unwrap()),
        (0.1..8.0f64, 0.1..8.0f64, -4.0..4.0f64).prop_map(|(a, b, r)| FamilyParams::sine(a, b, r).unwrap()),
        (0.1..8.0f64, 0.1..8.0f64, -4.0..4.0f64).prop_map(|(a, b, r)| FamilyParams::cosine(a, b, r).unwrap()),
        (0.0..0.9f64, 0.0..0.9f64, -0.9..0.9f64).prop_map(|(a, b, r)| FamilyParams::wrapped_cauchy(a, b, r).unwrap()),
    ]
}

fn skew_model() -> impl Strategy<Value = SkewModel> {
    (base(), angle(), angle(), lambda()).prop_map(|(theta, m1, m2, l)| SkewModel::new(TorusPoint::new(vec![m1, m2]), theta, l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// g(mu + y) + g(mu - y) = 2 f(y): skewing only redistributes mass
    /// between reflected points.
    #[test]
    fn reflected_pairs_sum_to_twice_the_base(m in skew_model(), y1 in angle(), y2 in angle()) {
        let mu = m.mu();
        let plus = TorusPoint::new(vec![mu[0] + y1, mu[1] + y2]);
        let minus = TorusPoint::new(vec![mu[0] - y1, mu[1] - y2]);
        let g = skew_log_density(&m, &plus).unwrap().exp() + skew_log_density(&m, &minus).unwrap().exp();
        let f = base_log_density(m.theta(), &[y1, y2]).unwrap().exp();
        prop_assert!((g - 2.0 * f).abs() <= 1e-12 * (1.0 + f), "{g} vs {}", 2.0 * f);
    }

    #[test]
    fn single_component_mixture_is_the_model(m in skew_model(), x1 in angle(), x2 in angle()) {
        let x = TorusPoint::new(vec![x1, x2]);
        let a = skew_log_density(&m, &x).unwrap();
        let b = mixture_log_density(&MixtureModel::single(m), &x).unwrap();
        prop_assert!((a - b).abs() < 1e-12 || (a == f64::NEG_INFINITY && b == f64::NEG_INFINITY));
    }

    #[test]
    fn draws_lie_in_the_fundamental_domain(m in skew_model(), seed in any::<u64>()) {
        let draws = sample(&m, 50, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(draws.len(), 50);
        for p in draws {
            prop_assert!(p.iter().all(|v| (-std::f64::consts::PI..std::f64::consts::PI).contains(v)));
            prop_assert!(skew_log_density(&m, &p).unwrap().is_finite());
        }
    }

    #[test]
    fn models_survive_json(m in skew_model()) {
        let text = serde_json::to_string(&m).unwrap();
        let back: SkewModel = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn rejects_lambda_outside_the_ball() {
    let theta = FamilyParams::sine(1.0, 1.0, 0.0).unwrap();
    let err = SkewModel::new(TorusPoint::zeros(2), theta, vec![0.7, -0.5]).unwrap_err();
    assert!(err.to_string().contains("<= 1"), "{err}");
    let json = r#"{"mu":[0,0],"theta":{"family":"sine","dim":2,"kappa":[1,1],"dep":[0]},"lambda":[0.9,0.9]}"#;
    assert!(serde_json::from_str::<SkewModel>(json).is_err());
}

#[test]
fn nested_fits_order_the_likelihoods() {
    let truth = SkewModel::new(TorusPoint::new(vec![0.5, -1.0]), FamilyParams::cosine(1.5, 2.0, 0.5).unwrap(), vec![0.5, 0.2]).unwrap();
    let data = sample(&truth, 600, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let opts = FitOptions { n_starts: 4, compute_cov: false, ..FitOptions::default() };
    let t = symmetry_test(Family::Cosine, &data, &opts).unwrap();
    assert!(t.log_lik_skewed >= t.log_lik_symmetric);
    assert_eq!(t.df, 2);
    assert!(t.log_lik_skewed >= log_likelihood(&truth, &data).unwrap() - 1e-6);
}

#[test]
fn trivariate_models_evaluate_and_sample() {
    let theta = FamilyParams::new(Family::Sine, 3, vec![2.0, 1.0, 3.0], vec![0.5, -0.3, 0.2]).unwrap();
    let m = SkewModel::new(TorusPoint::new(vec![0.1, 0.2, 0.3]), theta.clone(), vec![0.2, 0.3, -0.4]).unwrap();
    let draws = sample(&m, 200, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert!(draws.iter().all(|p| p.dim() == 3));
    let b = BaseDensity::new(&theta).unwrap();
    assert!(b.log_density(&[0.0, 0.0, 0.0]).is_finite());
}
