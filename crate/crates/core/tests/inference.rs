use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use rdseg_core::inference::{
    fit_mixture_mle, gamma_mle_single, gibbs_fit, mixture_nll, mixture_nll_and_gradient, newton_alpha,
    sample_beta_posterior, scaling_check, GibbsConfig, MixtureCoords, MleConfig, Prior,
};
use rdseg_core::rng::seeded;
use rdseg_core::special::{digamma, trigamma};
use rdseg_core::{CellBatch, GammaParams, MixtureParams};

/// Draws from Gamma(shape, rate).
fn gamma_draws(shape: f64, rate: f64, n: usize, seed: u64) -> Vec<f64> {
    let d = Gamma::new(shape, 1.0 / rate).unwrap();
    let mut rng = seeded(seed);
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

fn direct_nll(cells: &[f64], g: GammaParams) -> f64 {
    let lg = statrs::function::gamma::ln_gamma(g.shape);
    -cells.iter().map(|&z| g.shape * g.rate.ln() - lg + (g.shape - 1.0) * z.ln() - g.rate * z).sum::<f64>()
        / cells.len() as f64
}

fn single(g: GammaParams) -> MixtureParams {
    MixtureParams::new(1.0, g, g).unwrap()
}

#[test]
fn special_function_constants() {
    assert!((digamma(1.0).unwrap() + 0.577_215_664_901_532_9).abs() < 1e-12);
    assert!((trigamma(1.0).unwrap() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
    for x in [0.1, 1.0, 10.0] {
        assert!((digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x).abs() < 1e-12);
    }
}

#[test]
fn exponential_density_at_one() {
    let b = CellBatch::new(vec![1.0], 1.0).unwrap();
    let g = GammaParams::new(1.0, 1.0).unwrap();
    assert!((mixture_nll(&b, &single(g)).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn equal_components_collapse_to_single_nll() {
    let cells = gamma_draws(0.7, 3.0, 500, 1);
    let b = CellBatch::new(cells.clone(), 1.0).unwrap();
    let g = GammaParams::new(0.7, 3.0).unwrap();
    let reference = direct_nll(&cells, g);
    for w in [0.0, 0.3, 0.5, 1.0] {
        let nll = mixture_nll(&b, &MixtureParams::new(w, g, g).unwrap()).unwrap();
        assert!((nll - reference).abs() < 1e-12 * reference.abs());
    }
}

#[test]
fn true_parameters_beat_perturbed_ones() {
    let cells = gamma_draws(0.13, 7682.0, 100_000, 2);
    let b = CellBatch::new(cells.clone(), 1.0).unwrap();
    let at = |a, r| mixture_nll(&b, &single(GammaParams::new(a, r).unwrap())).unwrap();
    let truth = at(0.13, 7682.0);
    assert!((truth - direct_nll(&cells, GammaParams::new(0.13, 7682.0).unwrap())).abs() < 1e-9 * truth.abs());
    assert!(truth <= at(0.5, 7682.0));
    assert!(truth <= at(0.13, 1000.0));
}

#[test]
fn single_gamma_data_fit_by_dominant_component() {
    let cells = gamma_draws(2.0, 3.0, 5000, 3);
    let b = CellBatch::new(cells.clone(), 1.0).unwrap();
    let s = gamma_mle_single(&cells).unwrap();
    let fit = fit_mixture_mle(std::slice::from_ref(&b), MixtureParams::bulk_and_tail(s), &MleConfig::default()).unwrap();
    let (w, comp) = fit.params.dominant();
    assert!(w >= 0.9, "{:?}", fit.params);
    assert!((comp.shape - 2.0).abs() / 2.0 < 0.1 && (comp.rate - 3.0).abs() / 3.0 < 0.1, "{comp:?}");

    // Grid oracle over the single-Gamma NLL agrees with the closed-form MLE.
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=80 {
        for j in 0..=80 {
            let (a, r) = (1.6 + 0.01 * i as f64, 2.4 + 0.015 * j as f64);
            let nll = direct_nll(&cells, GammaParams::new(a, r).unwrap());
            if nll < best.0 {
                best = (nll, a, r);
            }
        }
    }
    assert!((best.1 - s.shape).abs() <= 0.01 && (best.2 - s.rate).abs() <= 0.015, "{best:?} vs {s:?}");
}

#[test]
fn nll_history_does_not_increase() {
    let cells = gamma_draws(0.4, 10.0, 3000, 4);
    let b = CellBatch::new(cells.clone(), 1.0).unwrap();
    let init = MixtureParams::bulk_and_tail(gamma_mle_single(&cells).unwrap());
    let fit = fit_mixture_mle(&[b], init, &MleConfig { max_iterations: 500, ..MleConfig::default() }).unwrap();
    for w in fit.nll_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn exponential_mle_is_consistent() {
    let g = gamma_mle_single(&gamma_draws(1.0, 1.0, 1_000_000, 5)).unwrap();
    assert!((0.99..=1.01).contains(&g.shape) && (0.99..=1.01).contains(&g.rate), "{g:?}");
}

#[test]
fn mle_is_a_stationary_point() {
    let cells = gamma_draws(0.3, 40.0, 20_000, 6);
    let g = gamma_mle_single(&cells).unwrap();
    let n = cells.len() as f64;
    let sum: f64 = cells.iter().sum();
    let log_sum: f64 = cells.iter().map(|z| z.ln()).sum();
    let d_alpha = n * (g.rate.ln() - digamma(g.shape).unwrap()) + log_sum;
    let d_beta = n * g.shape / g.rate - sum;
    assert!(d_alpha.abs() < 1e-6 * n && d_beta.abs() < 1e-6 * n, "{d_alpha} {d_beta}");
}

#[test]
fn scaling_examples() {
    let cells = gamma_draws(0.5, 2.0, 1000, 7);
    let same = scaling_check(&cells, 1.0).unwrap();
    assert_eq!(same.original, same.scaled);
    for lambda in [10.0, 10772.1 / 35.1, 1e6] {
        let r = scaling_check(&cells, lambda).unwrap();
        assert!(r.holds(1e-9), "{r:?}");
        assert!((r.scaled.rate / r.original.rate / lambda - 1.0).abs() < 1e-9);
    }
}

#[test]
fn beta_posterior_moments() {
    let mut rng = seeded(8);
    let draws: Vec<f64> = (0..1_000_000).map(|_| sample_beta_posterior(1.0, 2.0, 1, Prior::default(), &mut rng).unwrap()).collect();
    let m = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!((m - 0.5).abs() / 0.5 < 0.01, "{m}");

    for (prior, n, alpha, s) in [(Prior::default(), 100, 0.5, 40.0), (Prior { a: 3.0, b: 2.0 }, 100, 0.5, 40.0)] {
        let draws: Vec<f64> = (0..100_000).map(|_| sample_beta_posterior(alpha, s, n, prior, &mut rng).unwrap()).collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let expected = (prior.a + n as f64 * alpha) / (prior.b + s);
        assert!((m - expected).abs() / expected < 0.01, "{m} vs {expected}");
    }
}

#[test]
fn gibbs_recovers_synthetic_shapes() {
    let b = CellBatch::new(gamma_draws(0.13, 7682.0, 100_000, 9), 1.0).unwrap();
    let t = gibbs_fit(&b, &GibbsConfig::default(), &mut seeded(1)).unwrap();
    assert!((0.117..=0.143).contains(&t.posterior_mean.shape), "{:?}", t.posterior_mean);
    let mle = gamma_mle_single(b.values()).unwrap();
    assert!((t.posterior_mean.shape - mle.shape).abs() / mle.shape < 0.02);

    let b = CellBatch::new(gamma_draws(1.0, 5.0, 100_000, 10), 1.0).unwrap();
    let t = gibbs_fit(&b, &GibbsConfig::default(), &mut seeded(2)).unwrap();
    assert!((0.95..=1.05).contains(&t.posterior_mean.shape));
    assert!((4.75..=5.25).contains(&t.posterior_mean.rate));
}

#[test]
fn gibbs_init_chain_length_and_determinism() {
    let b = CellBatch::new(gamma_draws(0.8, 2.0, 2000, 11), 1.0).unwrap();
    let one = gibbs_fit(&b, &GibbsConfig { iterations: 1, ..GibbsConfig::default() }, &mut seeded(3)).unwrap();
    assert_eq!(one.alpha_chain.len(), 1);
    assert_eq!(one.posterior_mean.shape, one.alpha_chain[0]);
    assert_eq!(one.posterior_mean.rate, one.beta_chain[0]);

    let cfg = GibbsConfig { iterations: 60, ..GibbsConfig::default() };
    let a = gibbs_fit(&b, &cfg, &mut seeded(4)).unwrap();
    let c = gibbs_fit(&b, &cfg, &mut seeded(4)).unwrap();
    assert_eq!(a, c);
    assert_eq!(a.alpha_chain.len(), 60);
    assert_eq!(a.burn_in, 12);
    assert!(a.alpha_chain.iter().chain(&a.beta_chain).all(|&v| v > 0.0));
}

fn bisect(beta: f64, log_sum: f64, n: f64) -> f64 {
    let g = |a: f64| n * (beta.ln() - statrs::function::gamma::digamma(a)) + log_sum;
    let (mut lo, mut hi) = (1e-12, 1e6);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradient_matches_central_differences(
        w in 0.05f64..0.95,
        a1 in 0.1f64..4.0, r1 in 0.1f64..100.0,
        a2 in 0.1f64..4.0, r2 in 0.1f64..100.0,
    ) {
        let b = CellBatch::new(gamma_draws(0.5, 8.0, 800, 12), 1.0).unwrap();
        let p = MixtureParams::new(w, GammaParams::new(a1, r1).unwrap(), GammaParams::new(a2, r2).unwrap()).unwrap();
        let c = MixtureCoords::from_params(&p);
        let batches = [b];
        let (_, grad) = mixture_nll_and_gradient(&batches, &c).unwrap();
        for i in 0..5 {
            let h = 1e-6;
            let (mut up, mut dn) = (c, c);
            up.0[i] += h;
            dn.0[i] -= h;
            let fd = (mixture_nll_and_gradient(&batches, &up).unwrap().0 - mixture_nll_and_gradient(&batches, &dn).unwrap().0) / (2.0 * h);
            prop_assert!((grad[i] - fd).abs() <= 1e-5 * grad[i].abs().max(fd.abs()).max(1.0), "{} {} {}", i, grad[i], fd);
        }
    }

    #[test]
    fn newton_matches_bisection(n in 5usize..5000, ln_alpha in -2.5f64..2.5, ln_beta in -5.0f64..5.0, seed in any::<u64>()) {
        let (alpha, beta) = (ln_alpha.exp(), ln_beta.exp());
        let log_sum: f64 = gamma_draws(alpha, beta, n, seed).iter().map(|z| z.ln()).sum();
        let newton = newton_alpha(1.0, beta, log_sum, n, 1e-12, 200).unwrap();
        let oracle = bisect(beta, log_sum, n as f64);
        prop_assert!((newton - oracle).abs() <= 1e-6 * oracle.max(1.0), "{} {}", newton, oracle);
    }

    #[test]
    fn shape_invariant_rate_equivariant(seed in any::<u64>(), n in 2usize..400, log_lambda in -20.0f64..20.0) {
        let mut rng = seeded(seed);
        let cells: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10f64.powi(rng.random_range(-3..3)) + 1e-12).collect();
        let lambda = log_lambda.exp();
        match scaling_check(&cells, lambda) {
            Ok(r) => prop_assert!(r.holds(1e-9), "{:?}", r),
            // Identical cells carry no shape information.
            Err(_) => prop_assert!(cells.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-14 * w[0])),
        }
    }

    #[test]
    fn weights_stay_on_simplex(seed in any::<u64>(), iters in 0usize..50) {
        let cells: Vec<f64> = gamma_draws(0.6, 2.0, 300, seed);
        let b = CellBatch::new(cells.clone(), 1.0).unwrap();
        let init = MixtureParams::bulk_and_tail(gamma_mle_single(&cells).unwrap());
        let fit = fit_mixture_mle(&[b], init, &MleConfig { max_iterations: iters, ..MleConfig::default() }).unwrap();
        let p = fit.params;
        prop_assert!(p.w1 >= 0.0 && p.w2 >= 0.0 && (p.w1 + p.w2 - 1.0).abs() < 1e-12);
        prop_assert!(p.comp1.shape > 0.0 && p.comp1.rate > 0.0 && p.comp2.shape > 0.0 && p.comp2.rate > 0.0);
        prop_assert_eq!(fit.nll_history.len(), fit.iterations + 1);
    }
}
