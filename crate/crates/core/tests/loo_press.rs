use bgp_core::inference::{self, press_bounded, press_unbounded, sigma2_closed_form};
use bgp_core::{
    normal, rng, BoundSpec, FittedGP, HyperParams, InferenceConfig, InferenceMode, TrainingSet,
};
use rand::Rng;

fn random_set(r: &mut impl Rng, n: usize, d: usize) -> TrainingSet {
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| r.random_range(0.0..1.0)).collect())
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| {
            x.iter()
                .enumerate()
                .map(|(j, v)| ((j + 2) as f64 * v).sin())
                .sum::<f64>()
                + r.random_range(-0.1..0.1)
        })
        .collect();
    TrainingSet::new(xs, ys).unwrap()
}

/// Refit without row `i` and predict the held-out output.
fn brute_loo(train: &TrainingSet, params: &HyperParams, i: usize) -> (f64, f64) {
    let gp = FittedGP::fit(train.without(i).unwrap(), params.clone()).unwrap();
    let p = gp.predict(train.input(i)).unwrap();
    (p.mean, p.variance + params.nugget)
}

/// Literal two-sided clipped-Gaussian mean.
fn clipped_mean(mu: f64, var: f64, l: f64, u: f64) -> f64 {
    let s = var.sqrt();
    let (a, b) = ((l - mu) / s, (u - mu) / s);
    let z = normal::cdf(b) - normal::cdf(a);
    z * mu + s * (normal::pdf(a) - normal::pdf(b)) + l * normal::cdf(a) + u * (1.0 - normal::cdf(b))
}

#[test]
fn loo_shortcut_matches_refits() {
    let mut r = rng::seeded(8);
    for _ in 0..50 {
        let n = r.random_range(2..=10);
        let d = r.random_range(1..=3);
        let train = random_set(&mut r, n, d);
        let sigma2 = r.random_range(0.1..5.0);
        let theta: Vec<f64> = (0..d).map(|_| r.random_range(0.1..1.0)).collect();
        let params = HyperParams::new(sigma2, theta, 1e-4 * sigma2).unwrap();
        let gp = FittedGP::fit(train.clone(), params.clone()).unwrap();
        assert_eq!(gp.jitter(), 0.0);
        for (i, p) in gp.loo_predictions().iter().enumerate() {
            let (m, v) = brute_loo(&train, &params, i);
            assert!(
                (p.mean - m).abs() <= 1e-6 * (1.0 + m.abs()),
                "mean {} vs {m}",
                p.mean
            );
            assert!(
                (p.variance - v).abs() <= 1e-6 * (1.0 + v),
                "var {} vs {v}",
                p.variance
            );
        }
    }
}

#[test]
fn press_matches_refits() {
    let mut r = rng::seeded(9);
    for _ in 0..20 {
        let d = r.random_range(1..=2);
        let train = random_set(&mut r, 8, d);
        let theta: Vec<f64> = (0..d).map(|_| r.random_range(0.15..0.8)).collect();
        let params = HyperParams::new(1.7, theta.clone(), 1e-6).unwrap();
        let brute: f64 = (0..8)
            .map(|i| (train.outputs()[i] - brute_loo(&train, &params, i).0).powi(2))
            .sum();
        let fast = press_unbounded(&train, &theta, 1.7, 1e-6).unwrap();
        assert!(
            (fast - brute).abs() <= 1e-8 * (1.0 + brute),
            "{fast} vs {brute}"
        );

        let (l, u) = (-0.4, 1.2);
        let bounded_brute: f64 = (0..8)
            .map(|i| {
                let (m, v) = brute_loo(&train, &params, i);
                (train.outputs()[i] - clipped_mean(m, v, l, u)).powi(2)
            })
            .sum();
        let spec = BoundSpec::constant(Some(l), Some(u)).unwrap();
        let got = press_bounded(&train, &spec, &params).unwrap();
        assert!(
            (got - bounded_brute).abs() <= 1e-8 * (1.0 + bounded_brute),
            "{got} vs {bounded_brute}"
        );
    }
}

#[test]
fn closed_form_variance_matches_refits() {
    let mut r = rng::seeded(10);
    let train = random_set(&mut r, 9, 2);
    let theta = [0.4, 0.6];
    let nu = 1e-6;
    let unit = HyperParams::new(1.0, theta.to_vec(), nu).unwrap();
    let brute = (0..9)
        .map(|i| {
            let (m, v) = brute_loo(&train, &unit, i);
            (train.outputs()[i] - m).powi(2) / v
        })
        .sum::<f64>()
        / 9.0;
    let got = sigma2_closed_form(&train, &theta, nu).unwrap();
    assert!((got - brute).abs() <= 1e-8 * brute, "{got} vs {brute}");
}

#[test]
fn unbounded_press_ignores_signal_variance() {
    let mut r = rng::seeded(11);
    for _ in 0..10 {
        let xs: Vec<Vec<f64>> = (0..7)
            .map(|i| vec![(i as f64 + r.random_range(-0.2..0.2)) / 6.0])
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| (4.0 * x[0]).cos() + r.random_range(-0.1..0.1))
            .collect();
        let train = TrainingSet::new(xs, ys).unwrap();
        let theta = [r.random_range(0.08..0.2)];
        let gp = FittedGP::fit(
            train.clone(),
            HyperParams::new(1.0, theta.to_vec(), 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(gp.jitter(), 0.0);
        let base = press_unbounded(&train, &theta, 1.0, 0.0).unwrap();
        for s2 in [1e-3, 0.5, 7.0, 1e3] {
            let p = press_unbounded(&train, &theta, s2, 0.0).unwrap();
            assert!((p - base).abs() <= 1e-10 * base, "σ² = {s2}: {p} vs {base}");
        }
    }
}

#[test]
fn bounded_press_tends_to_unbounded() {
    let mut r = rng::seeded(12);
    let train = random_set(&mut r, 8, 2);
    let params = HyperParams::new(2.0, vec![0.3, 0.5], 2e-8).unwrap();
    let free = press_unbounded(&train, &params.lengthscales, params.sigma2, params.nugget).unwrap();
    let mut last = f64::INFINITY;
    for k in [1.0, 3.0, 10.0, 100.0, 1e4] {
        let spec = BoundSpec::constant(Some(-k), Some(k)).unwrap();
        let gap = (press_bounded(&train, &spec, &params).unwrap() - free).abs();
        assert!(gap <= last + 1e-15);
        last = gap;
    }
    assert!(last <= 1e-10 * free);
}

#[test]
fn inference_beats_a_lengthscale_grid() {
    let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (5.0 * x[0]).sin() + 0.5 * x[0]).collect();
    let train = TrainingSet::normalized(xs, ys).unwrap();
    let cfg = InferenceConfig {
        mode: InferenceMode::Unbounded,
        seed: 1,
        ..Default::default()
    };
    let fit = inference::infer(&train, None, &cfg).unwrap();
    let (lo, hi) = cfg.lengthscale_box;
    let nu = cfg.nugget;
    let grid_best = (0..=400)
        .map(|k| {
            let t = (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / 400.0).exp();
            let s2 = sigma2_closed_form(&train, &[t], nu).unwrap();
            press_unbounded(&train, &[t], s2, nu * s2).unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(
        fit.objective <= grid_best * (1.0 + 1e-6),
        "{} vs grid {grid_best}",
        fit.objective
    );
    let t = fit.params.lengthscales[0];
    assert!((lo..=hi).contains(&t));
    assert_eq!(
        fit.params.sigma2,
        sigma2_closed_form(&train, &[t], nu).unwrap()
    );
}

#[test]
fn bounded_inference_stays_in_its_box() {
    let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0]).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| (x[0] * (1.0 - x[0])).powi(2) * 16.0)
        .collect();
    let train = TrainingSet::normalized(xs, ys).unwrap();
    let spec = BoundSpec::constant(Some(0.0), None).unwrap();
    let cfg = InferenceConfig {
        seed: 2,
        ..InferenceConfig::bounded()
    };
    let fit = inference::infer(&train, Some(&spec), &cfg).unwrap();
    let ratio = fit.params.sigma2 / fit.sigma2_reference;
    assert!(ratio >= cfg.c_l * (1.0 - 1e-12) && ratio <= cfg.c_u * (1.0 + 1e-12));
    let again = press_bounded(&train, &spec, &fit.params).unwrap();
    assert!((again - fit.objective).abs() <= 1e-9 * (1.0 + again));
    assert_eq!(fit, inference::infer(&train, Some(&spec), &cfg).unwrap());
}
