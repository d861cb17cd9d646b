//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a gating criterion fails. Criterion 6 (a soft assertion)
//! and criterion 7 (a seeded coverage count at the interval's own nominal
//! level) are reported but do not change the exit status.

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hicomp::experiments::{
    run_bound_table, run_concentration_experiment, run_pac_experiment, run_validation, to_csv_bytes, write_run,
    ExperimentConfig, MSpec, RunOutput, SigmaChoice, TargetSpec,
};
use hicomp::index::{alpha_sharp, InjectionVector};
use hicomp::learner::{asymptotic_guarantee_reference, azuma_bound, m_pac, GuaranteeInputs};
use hicomp::losses::{total_loss_exact_rectangles, total_loss_monte_carlo, LossSpec};
use hicomp::samples::{draw_sample, label_sample, HypothesisClass, LabeledSample, ProductMeasure};
use hicomp::schemes::{ConstantSizes, RectangleScheme};
use hicomp::Mode;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn modes() -> [Mode; 2] {
    [Mode::Partite, Mode::Nonpartite]
}

fn sides(mode: Mode, k: usize) -> usize {
    match mode {
        Mode::Partite => k,
        Mode::Nonpartite => 1,
    }
}

/// Criterion 1: `alpha#(F*_m(x)) = F*_n(alpha#(x))`.
fn equivariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE0);
    let mut checked = 0;
    let mut broken = Vec::new();
    for mode in modes() {
        for k in 1..=3 {
            let class = match mode {
                Mode::Partite => HypothesisClass::Rectangles { k },
                Mode::Nonpartite => HypothesisClass::SumThresholds { k },
            };
            let uniform = ProductMeasure::uniform(mode, k).unwrap();
            let lumpy = ProductMeasure::parse("discrete(0.1:0.3; 0.4:0.3; 0.7:0.4)", mode, k).unwrap();
            for i in 0..500 {
                let mu = if i % 2 == 0 { &uniform } else { &lumpy };
                let m = rng.gen_range(0..=8);
                let n = rng.gen_range(0..=m);
                let x = draw_sample(mu, m, rng.gen());
                let f = class.sample_member(&mut rng);
                let alpha = InjectionVector::random(sides(mode, k), n, m, &mut rng).unwrap();
                let labelled = LabeledSample::dense(x.clone(), label_sample(&f, &x).unwrap()).unwrap();
                let left = alpha_sharp(&labelled, &alpha).unwrap();
                let right = label_sample(&f, left.x()).unwrap();
                if left.tensor().unwrap().as_ref() != &right {
                    broken.push(format!("{mode} k={k} m={m} n={n}"));
                }
                checked += 1;
            }
        }
    }
    verdict(broken.is_empty(), format!("{checked} instances, {} mismatches {:?}", broken.len(), broken.first()))
}

/// Criterion 2: Zero empirical loss after `rho o kappa` on realizable samples.
fn compression_validity() -> Verdict {
    let mut detail = Vec::new();
    let mut pass = true;
    for (mode, scheme) in [(Mode::Partite, "rectangle"), (Mode::Nonpartite, "sum-threshold")] {
        let mut c = ExperimentConfig::new(mode, 2, scheme, scheme);
        c.m_values = (2..=40).map(MSpec::Fixed).collect();
        c.trials = 200;
        c.order_choices = 5;
        c.seed = 2;
        let s = run_validation(&c).unwrap();
        let orders = s.report.records.iter().map(|r| r.losses.len()).min().unwrap_or(0);
        pass &= s.passed() && s.report.records.len() == 39 * 200;
        detail.push(format!(
            "{scheme}: {} samples, {} violations, {orders} order choice(s) each",
            s.report.records.len(),
            s.report.violations
        ));
    }
    verdict(pass, detail.join("; "))
}

/// Criterion 3: Exceedance frequency minus CI below the single-selection bound.
fn concentration() -> Verdict {
    let mut pass = true;
    let mut rows = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (mode, scheme) in [(Mode::Partite, "rectangle"), (Mode::Nonpartite, "sum-threshold")] {
        for sigma in [SigmaChoice::Top, SigmaChoice::Random] {
            let mut c = ExperimentConfig::new(mode, 2, scheme, scheme);
            c.m_values = vec![MSpec::Fixed(50), MSpec::Fixed(200), MSpec::Fixed(1000)];
            c.epsilon = vec![0.1, 0.2];
            c.trials = 2000;
            c.sigma = sigma;
            c.target = TargetSpec::Random;
            c.seed = 3;
            let target = hicomp::experiments::resolve_target(&c, &c.resolve().unwrap());
            let s = run_concentration_experiment(&c, &target).unwrap();
            for r in &s.rows {
                rows += 1;
                worst = worst.max(r.p_hat - r.ci - r.bound);
                if !r.pass || r.skipped {
                    failures.push(format!("{mode} {sigma:?} m={} eps={}", r.m, r.epsilon));
                }
            }
            pass &= s.passed() && s.rows.iter().all(|r| !r.skipped);
        }
    }
    verdict(pass, format!("{rows} rows, max(p_hat - ci - bound) = {worst:.4}, failing {failures:?}"))
}

/// Criterion 4: Failure frequency of the learner at `m_pac` and `2 m_pac`.
fn pac_guarantee() -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for (mode, scheme, seed) in [(Mode::Partite, "rectangle", 41), (Mode::Nonpartite, "sum-threshold", 42)] {
        let mut c = ExperimentConfig::new(mode, 2, scheme, scheme);
        c.epsilon = vec![0.1];
        c.delta = vec![0.1];
        c.m_values = vec![MSpec::PacMultiple(1), MSpec::PacMultiple(2)];
        c.trials = 1000;
        c.seed = seed;
        let s = run_pac_experiment(&c).unwrap();
        pass &= s.passed() && s.rows.iter().all(|r| r.asserted);
        for r in &s.rows {
            detail.push(format!("{scheme} m={} q={}+-{:.4}", r.m, r.q_hat, r.ci));
        }
    }
    verdict(pass, detail.join("; "))
}

/// `exp(-x)` to about 60 decimal digits, by fixed-point Taylor series.
fn exp_neg(x: &BigRational) -> BigRational {
    let scale = BigInt::from(10).pow(60);
    let xs = (x * BigRational::from_integer(scale.clone())).to_integer();
    let mut term = scale.clone();
    let mut sum = scale.clone();
    let mut n = 1u32;
    while !term.is_zero() {
        term = -(&term * &xs) / (BigInt::from(n) * &scale);
        sum += &term;
        n += 1;
    }
    BigRational::new(sum, scale)
}

/// Criterion 5: The single-event bound at `(k=2, l=1, s=2, m=1000, eps=0.1)` against
/// an exact rational evaluation.
fn bound_cross_check() -> Verdict {
    let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let slack = BigRational::one() - r(998, 1000) * r(998, 1000);
    let et = r(1, 10) - slack;
    let exponent = &et * &et * r(998, 4);
    let oracle = exp_neg(&exponent).to_f64().unwrap();
    let inputs = GuaranteeInputs::new(Mode::Partite, 2, 1.0, 0.1, 0.1, Arc::new(ConstantSizes { s: 2, h: 2 })).unwrap();
    let b = azuma_bound(&inputs, 1000);
    let rel = ((b.single_event - oracle) / oracle).abs();
    let et_exact = et.to_f64().unwrap();
    let pass = rel <= 1e-9 && (oracle - 0.1003).abs() < 5e-5 && (b.epsilon_tilde - et_exact).abs() <= 1e-15;
    verdict(pass, format!("bound {:.12}, oracle {oracle:.12}, relative error {rel:.2e}, eps~ {}", b.single_event, et))
}

/// Criterion 6: `m_pac` within 1.5x of the leading-order reference (soft).
fn asymptotic_sanity() -> Verdict {
    let mut pass = true;
    let mut ratios = Vec::new();
    for eps in [0.05, 0.02] {
        for delta in [0.1, 0.01] {
            let inputs =
                GuaranteeInputs::new(Mode::Partite, 2, 1.0, eps, delta, Arc::new(RectangleScheme::new(2))).unwrap();
            let m0 = m_pac(&inputs, 4_000_000).unwrap().m_pac;
            let reference = asymptotic_guarantee_reference(&inputs);
            let ratio = m0.map_or(f64::INFINITY, |m| m as f64 / reference);
            pass &= ratio <= 1.5;
            ratios.push(format!("eps={eps} delta={delta}: {m0:?}/{reference:.0} = {ratio:.2}"));
        }
    }
    verdict(pass, ratios.join("; "))
}

/// Pairs of random rectangles, with the exact loss, the Monte Carlo estimate
/// and whether the interval covers the exact value.
fn coverage(seeds: std::ops::Range<u64>) -> Vec<(u64, f64, f64, bool)> {
    let mu = ProductMeasure::uniform(Mode::Partite, 2).unwrap();
    let class = HypothesisClass::Rectangles { k: 2 };
    let loss = LossSpec::zero_one(Mode::Partite);
    seeds
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f, h) = (class.sample_member(&mut rng), class.sample_member(&mut rng));
            let exact = total_loss_exact_rectangles(&mu, &f, &h).unwrap();
            let est = total_loss_monte_carlo(&mu, &f, &h, &loss, 10_000, seed).unwrap();
            (seed, exact, est.estimate, (est.estimate - exact).abs() <= est.ci)
        })
        .collect()
}

/// Criterion 7: Monte Carlo total loss against the exact rectangle formula on seeds
/// 0..100. The interval is a nominal 99% one, so a correct estimator misses
/// twice or more in 100 runs about a quarter of the time; the wider run is
/// reported alongside as a coverage check.
fn oracle_equivalence() -> Verdict {
    let runs = coverage(0..100);
    let inside = runs.iter().filter(|r| r.3).count();
    let misses: Vec<String> =
        runs.iter().filter(|r| !r.3).map(|r| format!("seed {} exact {:.4} estimate {:.4}", r.0, r.1, r.2)).collect();
    let wide = coverage(100..3100);
    let wide_miss = wide.iter().filter(|r| !r.3).count();
    verdict(
        inside >= 99,
        format!(
            "{inside}/100 runs within the 99% interval {misses:?}; coverage on 3000 further pairs: {wide_miss} misses"
        ),
    )
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// Criterion 8: Identical config and seed give byte-identical outputs.
fn determinism() -> Verdict {
    let run = |dir: &Path| {
        let mut c = ExperimentConfig::new(Mode::Partite, 2, "rectangle", "rectangle");
        c.m_values = vec![MSpec::Fixed(20), MSpec::Fixed(200)];
        c.trials = 100;
        c.seed = 8;
        c.estimator = "monte-carlo:2000".parse().unwrap();
        let pac = run_pac_experiment(&c).unwrap();
        write_run(&dir.join("pac"), "pac", &c, &pac.render().unwrap(), pac.passed()).unwrap();
        let target = hicomp::experiments::resolve_target(&c, &c.resolve().unwrap());
        let conc = run_concentration_experiment(&c, &target).unwrap();
        write_run(&dir.join("concentration"), "concentration", &c, &conc.render().unwrap(), conc.passed()).unwrap();

        let mut v = ExperimentConfig::new(Mode::Nonpartite, 2, "sum-threshold", "sum-threshold");
        v.m_values = vec![MSpec::Fixed(6), MSpec::Fixed(12)];
        v.trials = 30;
        v.seed = 8;
        let val = run_validation(&v).unwrap();
        write_run(&dir.join("validate"), "validate-scheme", &v, &val.render().unwrap(), val.passed()).unwrap();
        let table = run_bound_table(&c).unwrap();
        let out = RunOutput { trials_jsonl: Vec::new(), summary_csv: to_csv_bytes(&table).unwrap() };
        write_run(&dir.join("table"), "bound-table", &c, &out, true).unwrap();
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    let mut compared = 0;
    let mut differing = Vec::new();
    for sub in ["pac", "concentration", "validate", "table"] {
        let (fa, fb) = (files(&a.path().join(sub)), files(&b.path().join(sub)));
        compared += fa.len();
        if fa != fb {
            differing.push(sub);
        }
    }
    verdict(differing.is_empty() && compared == 12, format!("{compared} files compared, differing {differing:?}"))
}

type Criterion = (u32, &'static str, bool, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "equivariance", true, equivariance),
        (2, "compression validity", true, compression_validity),
        (3, "concentration", true, concentration),
        (4, "PAC guarantee", true, pac_guarantee),
        (5, "bound formula cross-check", true, bound_cross_check),
        (6, "asymptotic sanity (soft)", false, asymptotic_sanity),
        (7, "oracle equivalence", false, oracle_equivalence),
        (8, "determinism", true, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut hard_failures = 0;
    let mut reported = Vec::new();
    for (n, name, hard, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || f == &n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} [{name}]: {status} in {:.1}s: {}", start.elapsed().as_secs_f64(), v.detail);
        if !v.pass {
            if hard {
                hard_failures += 1;
            } else {
                reported.push(n);
            }
        }
    }
    println!("gating failures: {hard_failures}; non-gating criteria reported as FAIL: {reported:?}");
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
