//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Every tolerance below is fixed; nothing is tuned to the
//! outcome.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use rdseg_core::detect::skewness;
use rdseg_core::eval::stats::mean;
use rdseg_core::eval::{
    corpus_segments, per_segment_pfa, redundancy_study, run_sweep, skewness_distribution_study, CorpusConfig,
    CorpusKind, RedundancyConfig, StudyConfig, StudyReport, SweepConfig, SweepReport,
};
use rdseg_core::inference::{
    fit_mixture_mle, gamma_mle_single, gibbs_fit, mixture_nll_and_gradient, newton_alpha, sample_beta_posterior,
    scaling_check, CellBatch, GibbsConfig, MixtureCoords, MixtureParams, MleConfig, Prior,
};
use rdseg_core::rd::{batch_max, global_normalize};
use rdseg_core::rng::seeded;
use rdseg_core::GammaParams;

const SEED: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = Result<Outcome, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// 1. Sample skewness of Gamma draws against 2/sqrt(alpha).
fn skewness_identity() -> Check {
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, &alpha) in [0.13, 0.5, 1.0, 2.0].iter().enumerate() {
        let start = Instant::now();
        let mut rng = seeded(SEED + i as u64);
        let dist = Gamma::new(alpha, 1.0 / 3.0).map_err(err)?;
        let draws: Vec<f64> = (0..1_000_000).map(|_| dist.sample(&mut rng)).collect();
        let k = skewness(&draws);
        let elapsed = start.elapsed();
        let expected = 2.0 / alpha.sqrt();
        let rel = (k - expected).abs() / expected;
        pass &= rel <= 0.03 && elapsed < Duration::from_secs(5);
        parts.push(format!("a={alpha}: {k:.4} vs {expected:.4} ({:.2}%, {:.2}s)", rel * 100.0, elapsed.as_secs_f64()));
    }
    Ok(outcome(pass, parts.join("; ")))
}

// 2. Noise-only segments centre on skewness 2.
fn h0_calibration(study: &StudyReport) -> Check {
    let h0 = study.class(CorpusKind::Noise).ok_or("no h0 class")?;
    Ok(outcome(
        h0.n >= 1000 && (1.6..=2.4).contains(&h0.mean),
        format!("n={} mean={:.4} (need [1.6, 2.4])", h0.n, h0.mean),
    ))
}

// 3. Single-target segments sit well above the threshold.
fn h1_separation(study: &StudyReport) -> Check {
    let h1 = study.class(CorpusKind::SingleTarget).ok_or("no h1 class")?;
    let skews = &study.skews[1];
    let frac = skews.iter().filter(|&&k| k > 5.0).count() as f64 / skews.len() as f64;
    Ok(outcome(
        h1.n >= 1000 && h1.median >= 4.5 && frac >= 0.85,
        format!("n={} median={:.4} (need >= 4.5), frac>5.0={:.4} (need >= 0.85)", h1.n, h1.median, frac),
    ))
}

// 4. Shape invariance and rate equivariance of the single-Gamma MLE.
fn scaling_laws() -> Check {
    let mut rng = seeded(SEED);
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (n, alpha) in [(50, 0.13), (1000, 0.7), (20_000, 3.0)] {
        let dist = Gamma::new(alpha, 2.0).map_err(err)?;
        let cells: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        for lambda in [1e-6, 0.37, 3.7, 1e8] {
            let r = scaling_check(&cells, lambda).map_err(err)?;
            worst = worst.max(r.shape_rel_error).max(r.rate_rel_error);
            pass &= r.holds(1e-9);
        }
    }
    Ok(outcome(pass, format!("worst relative error {worst:.3e} (need <= 1e-9)")))
}

// 5. Posterior rate draws against the conjugate Gamma moments.
fn conjugacy() -> Check {
    let (alpha, n_cells, sum) = (0.6, 120, 35.0);
    let prior = Prior { a: 2.0, b: 0.5 };
    let mut rng = seeded(SEED);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| sample_beta_posterior(alpha, sum, n_cells, prior, &mut rng))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let shape = prior.a + n_cells as f64 * alpha;
    let rate = prior.b + sum;
    let (m_exp, v_exp) = (shape / rate, shape / (rate * rate));
    let m = mean(&draws);
    let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    let (em, ev) = ((m - m_exp).abs() / m_exp, (v - v_exp).abs() / v_exp);
    Ok(outcome(
        em <= 0.01 && ev <= 0.01,
        format!("mean {m:.5} vs {m_exp:.5} ({:.3}%), var {v:.6} vs {v_exp:.6} ({:.3}%)", em * 100.0, ev * 100.0),
    ))
}

fn score(alpha: f64, ln_beta: f64, log_sum: f64, n: f64) -> f64 {
    n * (ln_beta - statrs::function::gamma::digamma(alpha)) + log_sum
}

/// Root of the score by bisection; the score decreases in alpha.
fn bisect_alpha(ln_beta: f64, log_sum: f64, n: f64) -> f64 {
    let (mut lo, mut hi) = (1e-12, 1e6);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if score(mid, ln_beta, log_sum, n) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The estimation corpus: single-target segments over a wide SNR range,
/// globally normalised.
fn estimation_corpus() -> Result<CellBatch, String> {
    let cfg = CorpusConfig { snr_db: (-25.0, 25.0), ..CorpusConfig::default() };
    let segs = corpus_segments(&cfg, CorpusKind::SingleTarget, 1000, SEED).map_err(err)?;
    let norm = global_normalize(&segs, batch_max(&segs)).map_err(err)?;
    CellBatch::from_segments(&norm.segments, 1.0).map_err(err)
}

// 6. Newton inner loop against bisection, then Gibbs chain settling.
fn newton_and_gibbs(batch: &CellBatch) -> Check {
    let mut rng = seeded(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(10..5000usize);
        let alpha_true = 10f64.powf(rng.random_range(-1.3..1.0));
        let beta = 10f64.powf(rng.random_range(-2.0..2.0));
        let dist = Gamma::new(alpha_true, 1.0 / beta).map_err(err)?;
        let log_sum: f64 = (0..n).map(|_| dist.sample(&mut rng).ln()).sum();
        let newton = newton_alpha(1.0, beta, log_sum, n, 1e-12, 200).map_err(err)?;
        let oracle = bisect_alpha(beta.ln(), log_sum, n as f64);
        worst = worst.max((newton - oracle).abs() / oracle.max(1.0));
    }
    let trace = gibbs_fit(batch, &GibbsConfig::default(), &mut seeded(SEED)).map_err(err)?;
    let half = trace.alpha_chain.len() / 2;
    let tail_mean = mean(&trace.alpha_chain[half..]);
    let ratio = trace.alpha_tail_std() / tail_mean;
    Ok(outcome(
        worst <= 1e-6 && ratio < 0.1,
        format!(
            "newton vs bisection worst {worst:.2e} (need <= 1e-6); gibbs tail std/mean {ratio:.2e} (need < 0.1), alpha {:.4}",
            trace.posterior_mean.shape
        ),
    ))
}

// 7. Two-component MLE collapses onto one heavy-tailed component.
fn mixture_collapse(batch: &CellBatch) -> Check {
    let single = gamma_mle_single(batch.values()).map_err(err)?;
    let fit = fit_mixture_mle(std::slice::from_ref(batch), MixtureParams::bulk_and_tail(single), &MleConfig::default())
        .map_err(err)?;
    let (w, comp) = fit.params.dominant();
    Ok(outcome(
        w >= 0.9 && (0.08..=0.2).contains(&comp.shape),
        format!(
            "dominant weight {w:.4} (need >= 0.9), alpha {:.4} (need [0.08, 0.2]); {} iterations, converged={}",
            comp.shape, fit.iterations, fit.converged
        ),
    ))
}

// 8. Analytic mixture gradient against central differences.
fn gradient_check() -> Check {
    let mut rng = seeded(SEED);
    let dist = Gamma::new(0.4, 1.0 / 20.0).map_err(err)?;
    let batch = CellBatch::new((0..2000).map(|_| dist.sample(&mut rng)).collect(), 1.0).map_err(err)?;
    let batches = [batch];
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = MixtureParams::new(
            rng.random_range(0.05..0.95),
            GammaParams::new(rng.random_range(0.1..3.0), rng.random_range(0.5..50.0)).map_err(err)?,
            GammaParams::new(rng.random_range(0.1..3.0), rng.random_range(0.5..50.0)).map_err(err)?,
        )
        .map_err(err)?;
        let c = MixtureCoords::from_params(&p);
        let (_, grad) = mixture_nll_and_gradient(&batches, &c).map_err(err)?;
        for i in 0..5 {
            let h = 1e-5;
            let (mut up, mut dn) = (c, c);
            up.0[i] += h;
            dn.0[i] -= h;
            let fd = (mixture_nll_and_gradient(&batches, &up).map_err(err)?.0
                - mixture_nll_and_gradient(&batches, &dn).map_err(err)?.0)
                / (2.0 * h);
            worst = worst.max((grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1.0));
        }
    }
    Ok(outcome(worst <= 1e-5, format!("worst relative error {worst:.2e} over 20 points (need <= 1e-5)")))
}

// 9. One merged detection per extended target.
fn redundancy() -> Check {
    let r = redundancy_study(&RedundancyConfig { seed: SEED, ..RedundancyConfig::default() }).map_err(err)?;
    Ok(outcome(
        r.trials >= 350 && r.exactly_one.estimate >= 0.85 && r.mean_detections_per_target <= 1.3,
        format!(
            "{} trials: exactly one containing {:.4} (need >= 0.85), detections per target {:.3} (need <= 1.3), any containing {:.4}",
            r.trials, r.exactly_one.estimate, r.mean_detections_per_target, r.any_contains.estimate
        ),
    ))
}

fn sweep_config() -> SweepConfig {
    SweepConfig {
        seed: SEED,
        snr_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        thresholds: vec![4.0, 5.5, 6.0],
        n_trials: 200,
        cfar_pfas: vec![1e-4, 1e-3],
        ..SweepConfig::default()
    }
}

// 10. Skewness pipeline against OS-CFAR across SNR.
fn roc_ordering(sweep: &SweepReport, cfg: &SweepConfig, elapsed: Duration) -> Check {
    let mut pass = elapsed < Duration::from_secs(600);
    let mut parts = Vec::new();
    for &snr in &cfg.snr_db {
        let skew = sweep.skew_row(snr, 5.5).ok_or("missing skew row")?;
        let c4 = sweep.cfar_row(snr, 1e-4).ok_or("missing CFAR 1e-4 row")?;
        let c3 = sweep.cfar_row(snr, 1e-3).ok_or("missing CFAR 1e-3 row")?;
        let cells = cfg.detector.shape.cells();
        let cfar_seg_hi = per_segment_pfa(c3.pfa_cell.hi, cells);
        let pd_ok = skew.pd.not_below(&c4.pd);
        let pfa_ok = skew.pfa.lo <= cfar_seg_hi;
        pass &= pd_ok && pfa_ok && skew.trials >= 200;
        parts.push(format!(
            "{snr}dB Pd {:.3} vs {:.3}{} Pfa {:.2e} vs {:.2e}{}",
            skew.pd.estimate,
            c4.pd.estimate,
            if pd_ok { "" } else { "!" },
            skew.pfa.estimate,
            c3.pfa_segment_equiv,
            if pfa_ok { "" } else { "!" },
        ));
    }
    parts.push(format!("{:.0}s (need < 600s)", elapsed.as_secs_f64()));
    Ok(outcome(pass, parts.join("; ")))
}

// 11. Pd and Pfa fall as the threshold rises.
fn threshold_monotonicity(sweep: &SweepReport, cfg: &SweepConfig) -> Check {
    let mut pass = true;
    let mut broken = Vec::new();
    for &snr in &cfg.snr_db {
        let rows: Vec<_> =
            [4.0, 5.5, 6.0].iter().map(|&t| sweep.skew_row(snr, t).ok_or("missing row")).collect::<Result<_, _>>()?;
        for w in rows.windows(2) {
            let ok = w[0].pd.not_below(&w[1].pd) && w[0].pfa.not_below(&w[1].pfa);
            if !ok {
                broken.push(format!("{snr}dB T={} vs T={}", w[0].threshold, w[1].threshold));
            }
            pass &= ok;
        }
    }
    let pd4: Vec<String> = cfg.snr_db.iter().filter_map(|&s| sweep.skew_row(s, 4.0)).map(|r| format!("{:.3}", r.pd.estimate)).collect();
    let pd6: Vec<String> = cfg.snr_db.iter().filter_map(|&s| sweep.skew_row(s, 6.0)).map(|r| format!("{:.3}", r.pd.estimate)).collect();
    Ok(outcome(
        pass,
        format!("Pd(T=4) [{}], Pd(T=6) [{}]; violations: {}", pd4.join(" "), pd6.join(" "), if broken.is_empty() { "none".into() } else { broken.join(", ") }),
    ))
}

// 12. Two close targets shift the distribution left but stay high.
fn two_target_shift(study: &StudyReport) -> Check {
    let one = study.class(CorpusKind::SingleTarget).ok_or("no h1 class")?;
    let two = study.class(CorpusKind::TwoTarget).ok_or("no two-target class")?;
    Ok(outcome(
        two.median < one.median && two.median >= 4.0,
        format!("two-target median {:.4}, single {:.4} (need lower and >= 4.0)", two.median, one.median),
    ))
}

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_rdseg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(err)?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("rdseg {} exited with {status}", args.join(" ")))
    }
}

fn dir_contents(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(err)?
        .map(|e| {
            let e = e.map_err(err)?;
            Ok((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).map_err(err)?))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

// 13. Every subcommand is byte-for-byte reproducible.
fn cli_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let root = tmp.path();
    let scene = root.join("scene.json");
    std::fs::write(
        &scene,
        r#"{"seed": 5, "targets": [{"range_m": 30.0, "velocity_mps": 5.0, "snr_db": 20.0},
                                  {"range_m": 48.0, "velocity_mps": -6.0, "snr_db": 12.0}]}"#,
    )
    .map_err(err)?;
    let scene = scene.to_string_lossy().into_owned();
    let mut compared = 0;
    // Downstream commands of both runs read the first run's maps, so their
    // configs are identical too.
    let synth_a = root.join("a").join("synth");
    let f0 = synth_a.join("frame_0000.rdm").to_string_lossy().into_owned();
    let f1 = synth_a.join("frame_0001.rdm").to_string_lossy().into_owned();
    let truth = synth_a.join("truth.json").to_string_lossy().into_owned();
    for run in ["a", "b"] {
        let base = root.join(run);
        run_cli(&["synth", "--scene", &scene, "--frames", "2", "--seed", "11"], &base.join("synth"))?;
    }
    for run in ["a", "b"] {
        let base = root.join(run);
        run_cli(&["estimate", "--mode", "both", "--truth", &truth, "--seed", "11"], &base.join("estimate"))?;
        run_cli(&["detect", &f0, &f1], &base.join("detect"))?;
        run_cli(&["detect", "--method", "oscfar", "--quick", "--seed", "11", &f0], &base.join("oscfar"))?;
        run_cli(&["cfar-calibrate", "--quick", "--seed", "11"], &base.join("calibrate"))?;
        run_cli(&["eval", "--quick", "--seed", "11"], &base.join("eval"))?;
    }
    let mut mismatched = Vec::new();
    for sub in ["synth", "estimate", "detect", "oscfar", "calibrate", "eval"] {
        let a = dir_contents(&root.join("a").join(sub))?;
        let b = dir_contents(&root.join("b").join(sub))?;
        if a != b {
            mismatched.push(sub);
        }
        compared += a.len();
    }
    // Re-running from a manifest reproduces the outputs as well.
    let replay = root.join("replay");
    let manifest = root.join("a/eval/manifest.json").to_string_lossy().into_owned();
    run_cli(&["eval", "--config", &manifest], &replay)?;
    if dir_contents(&replay)? != dir_contents(&root.join("a/eval"))? {
        mismatched.push("eval replay");
    }
    Ok(outcome(
        mismatched.is_empty(),
        format!("{compared} files compared across 6 subcommands plus manifest replay; mismatched: {mismatched:?}"),
    ))
}

fn report(id: u32, name: &str, check: Check, failures: &mut u32) {
    let o = check.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
    if !o.pass {
        *failures += 1;
    }
    println!("{} {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn main() {
    let mut failures = 0;
    report(1, "skewness identity", skewness_identity(), &mut failures);

    let study = skewness_distribution_study(&StudyConfig { seed: SEED, ..StudyConfig::default() });
    let from_study = |f: fn(&StudyReport) -> Check| match &study {
        Ok(s) => f(s),
        Err(e) => Err(e.to_string()),
    };
    report(2, "H0 calibration", from_study(h0_calibration), &mut failures);
    report(3, "H1 separation", from_study(h1_separation), &mut failures);
    report(4, "scaling laws", scaling_laws(), &mut failures);
    report(5, "conjugacy", conjugacy(), &mut failures);

    let corpus = estimation_corpus();
    let with_corpus = |f: fn(&CellBatch) -> Check| match &corpus {
        Ok(b) => f(b),
        Err(e) => Err(e.clone()),
    };
    report(6, "Newton oracle and Gibbs convergence", with_corpus(newton_and_gibbs), &mut failures);
    report(7, "mixture collapse", with_corpus(mixture_collapse), &mut failures);
    report(8, "gradient check", gradient_check(), &mut failures);
    report(9, "pipeline redundancy", redundancy(), &mut failures);

    let cfg = sweep_config();
    let start = Instant::now();
    let sweep = run_sweep(&cfg);
    let elapsed = start.elapsed();
    match &sweep {
        Ok(s) => {
            report(10, "ROC ordering", roc_ordering(s, &cfg, elapsed), &mut failures);
            report(11, "threshold monotonicity", threshold_monotonicity(s, &cfg), &mut failures);
        }
        Err(e) => {
            report(10, "ROC ordering", Err(e.to_string()), &mut failures);
            report(11, "threshold monotonicity", Err(e.to_string()), &mut failures);
        }
    }
    report(12, "two-target shift", from_study(two_target_shift), &mut failures);
    report(13, "CLI determinism", cli_determinism(), &mut failures);

    println!("{} of 13 criteria passed", 13 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
