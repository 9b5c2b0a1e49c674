//! Acceptance criteria 1-8, one PASS/FAIL line each. Exits non-zero if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{bivariate_normal_pair, gaussian_consistency_min_mismatch, mismatched_pair, SweepOracle};
use ioi_core::bayes::{flat_grid_prior, grid_bayes_update, LikelihoodKernel};
use ioi_core::bispatial::{assess_region_probability, one_sided_p_value, BispatialConfig, Calibration, PValueResult};
use ioi_core::composition::{compose, truncate_to_region, Interval, RegionPartition, RegionalDensitySet};
use ioi_core::fiducial::{fiducial_density, fiducial_region_probability, normal_mean_pivot, Side};
use ioi_core::gibbs::{check_compatibility, scan_sensitivity, ScanOrder, Verdict, WorkingBox};
use ioi_core::normal::std_normal_quantile;
use ioi_core::stats::{ks_against_cdf, ks_distance};
use ioi_core::{DataSummary, Density1D, PriorKnowledge};

type Criterion = (u32, fn() -> Outcome, Duration);

struct Outcome {
    pass: bool,
    detail: String,
}

fn random_summary(rng: &mut ChaCha8Rng) -> DataSummary {
    let mean = rng.random_range(-50.0..50.0);
    let n = rng.random_range(1..=500);
    let sigma2 = 10f64.powf(rng.random_range(-2.0..2.0));
    DataSummary::new(mean, n, sigma2).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let pivot = normal_mean_pivot();
    let gamma = Density1D::normal(0.0, 1.0).unwrap();
    let (mut exact, mut worst_ks) = (0, 0.0f64);
    for case in 0..50 {
        let data = random_summary(&mut rng);
        let fid = fiducial_density(&pivot, &data, PriorKnowledge::NoneOrVeryLittle).unwrap();
        let expected = Density1D::normal(data.mean(), data.sigma2() / data.n() as f64).unwrap();
        if fid == expected {
            exact += 1;
        }
        let draws = gamma.sample(100_000, 1000 + case).unwrap();
        let pushed: Vec<f64> = draws.values.iter().map(|&g| pivot.invert(g, &data)).collect();
        worst_ks = worst_ks.max(ks_against_cdf(&pushed, |t| fid.cdf(t)));
    }
    Outcome {
        pass: exact == 50 && worst_ks < 0.01,
        detail: format!("{exact}/50 exact normal(xbar, sigma2/n); max Monte Carlo KS {worst_ks:.5} (< 0.01)"),
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let data = random_summary(&mut rng);
        let se = data.standard_error();
        let width = rng.random_range(10.0..20.0);
        let prior = flat_grid_prior(data.mean() - width * se, data.mean() + width * se, 2048).unwrap();
        let post = grid_bayes_update(&prior, &LikelihoodKernel::normal_mean(), &data).unwrap();
        let fid = fiducial_density(&normal_mean_pivot(), &data, PriorKnowledge::NoneOrVeryLittle).unwrap();
        worst = worst.max(ks_distance(&post, &fid));
    }
    Outcome {
        pass: worst < 0.01,
        detail: format!("max KS grid posterior vs fiducial {worst:.2e} over 20 cases (< 0.01)"),
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst, mut gt_mismatch) = (0.0f64, 0);
    for _ in 0..100 {
        let data = random_summary(&mut rng);
        let eps = data.mean() + rng.random_range(-4.0..4.0) * data.standard_error();
        let p0 = one_sided_p_value(&data, eps).unwrap().p0;
        let fid = fiducial_density(&normal_mean_pivot(), &data, PriorKnowledge::NoneOrVeryLittle).unwrap();
        let leq = fiducial_region_probability(&fid, eps, Side::Leq);
        let gt = fiducial_region_probability(&fid, eps, Side::Gt);
        worst = worst.max((p0 - leq).abs()).max((p0 - (1.0 - gt)).abs());
        if (p0 - gt).abs() > 1e-9 {
            gt_mismatch += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!(
            "P0 = fiducial mass of {{mu <= eps}} = 1 - mass{{mu > eps}}: max err {worst:.2e} over 100 cases (<= 1e-9); \
             P0 differs from mass{{mu > eps}} itself in {gt_mismatch}/100 cases"
        ),
    }
}

fn random_density(rng: &mut ChaCha8Rng) -> Density1D {
    let mean = rng.random_range(-10.0..10.0);
    let var = 10f64.powf(rng.random_range(-1.0..1.0));
    match rng.random_range(0..3) {
        0 => Density1D::normal(mean, var).unwrap(),
        1 => {
            let (a, b) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0));
            let sd = var.sqrt();
            Density1D::grid_from_fn(mean - 4.0 * sd, mean + 4.0 * sd, 2048, |t| {
                let u = ((t - mean + 4.0 * sd) / (8.0 * sd)).clamp(0.0, 1.0);
                u.powf(a) * (1.0 - u).powf(b)
            })
            .unwrap()
            .normalize()
        }
        _ => Density1D::mixture(vec![
            (0.4, Density1D::normal(mean, var).unwrap()),
            (0.6, Density1D::normal(mean + 3.0, var * 2.0).unwrap()),
        ])
        .unwrap(),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = random_density(&mut rng);
        let cut = d.quantile(rng.random_range(0.05..0.95)).unwrap();
        let below = d.cdf(cut);
        let regions = vec![Interval::at_most(cut), Interval::above(cut)];
        let densities = regions
            .iter()
            .map(|r| truncate_to_region(&d, *r))
            .collect::<ioi_core::Result<Vec<_>>>()
            .unwrap();
        let partition = RegionPartition::new(regions, vec![below, 1.0 - below]).unwrap();
        let back = compose(&partition, &RegionalDensitySet { densities }).unwrap();
        worst = worst.max(ks_distance(&back, &d));
    }
    Outcome {
        pass: worst < 0.005,
        detail: format!("max KS recomposed vs original {worst:.2e} over 20 densities (< 0.005)"),
    }
}

fn criterion_5() -> Outcome {
    let bx = WorkingBox::new([-6.0, -6.0], [6.0, 6.0]).unwrap();
    let good = check_compatibility(&bivariate_normal_pair(0.7), bx, 201).unwrap();
    let bad = check_compatibility(&mismatched_pair(), bx, 201).unwrap();
    let sup = good.conditional_sup_distance.unwrap_or(f64::INFINITY);
    let (mismatch, at) = gaussian_consistency_min_mismatch(1.0, 1.0, 0.5, 1.0);
    let (control, _) = gaussian_consistency_min_mismatch(0.7, 0.51, 0.7, 0.51);
    let pass = good.verdict == Verdict::Compatible
        && sup <= 1e-6
        && bad.verdict == Verdict::Incompatible
        && bad.residual > bad.threshold
        && mismatch > 0.1
        && control < 1e-9;
    Outcome {
        pass,
        detail: format!(
            "rho=0.7: {:?}, residual {:.1e}, conditional sup gap {sup:.1e} (<= 1e-6); \
             mismatched: {:?}, residual {:.3} > {:.0e}; Gaussian brute force min mismatch {mismatch:.3} at \
             (v1, v2, rho) = ({:.2}, {:.2}, {:.2}), control {control:.1e}",
            good.verdict, good.residual, bad.verdict, bad.residual, bad.threshold, at[0], at[1], at[2]
        ),
    }
}

fn criterion_6() -> Outcome {
    let scans = [ScanOrder::Sweep(vec![1, 2]), ScanOrder::Sweep(vec![2, 1])];
    let iters = 200_000;
    let good = scan_sensitivity(&bivariate_normal_pair(0.7), &scans, &[0.0, 0.0], iters, 1000, 61).unwrap();
    let bad = scan_sensitivity(&mismatched_pair(), &scans, &[0.0, 0.0], iters, 1000, 61).unwrap();

    let oracle_bad = SweepOracle::new(1.0, 1.0, 0.5, 1.0, 101, 8.0);
    let oracle_good = SweepOracle::new(0.7, 0.51, 0.7, 0.51, 101, 8.0);
    let oracle_gap = oracle_bad.difference_gap();
    let oracle_coord = oracle_bad.coordinate_gap(0).max(oracle_bad.coordinate_gap(1));
    let pass = good.max_ks() < 0.03
        && bad.max_ks() > 0.03
        && oracle_gap > 0.03
        && oracle_bad.joint_tv() > 0.03
        && oracle_good.joint_tv() < 1e-6
        && (bad.max_ks() - oracle_gap).abs() < 0.02;
    Outcome {
        pass,
        detail: format!(
            "compatible max KS {:.4} (< 0.03); incompatible max KS {:.4} (> 0.03; coordinates only {:.4}); \
             oracle 101x101: theta_1 - theta_2 gap {oracle_gap:.4}, joint TV {:.4} vs compatible {:.1e}, \
             coordinate gap {oracle_coord:.1e}",
            good.max_ks(),
            bad.max_ks(),
            bad.max_coordinate_ks(2),
            oracle_bad.joint_tv(),
            oracle_good.joint_tv()
        ),
    }
}

fn criterion_7() -> Outcome {
    let (n, sigma2, eps) = (25, 4.0, 0.0);
    let se = DataSummary::new(0.0, n, sigma2).unwrap().standard_error();
    let cfg = BispatialConfig::new(eps, 0.5, Calibration::OddsDefault).unwrap();
    let mut rejected = 0;
    for i in 0..50 {
        let target = 0.1 + 0.89 * i as f64 / 49.0;
        let mut mean = eps + se * std_normal_quantile(1.0 - target).unwrap();
        let mut pv = one_sided_p_value(&DataSummary::new(mean, n, sigma2).unwrap(), eps).unwrap();
        while pv.p0 < target {
            mean -= 1e-15;
            pv = one_sided_p_value(&DataSummary::new(mean, n, sigma2).unwrap(), eps).unwrap();
        }
        if !pv.applicable && assess_region_probability(&pv, &cfg).is_err() {
            rejected += 1;
        }
    }

    let mut increasing_p = true;
    let mut prev = 0.0;
    for i in 1..=50 {
        let p0 = 0.1 * i as f64 / 51.0;
        let v = assess_region_probability(&PValueResult { p0, applicable: true }, &cfg).unwrap();
        increasing_p &= v > prev;
        prev = v;
    }
    let mut increasing_m = true;
    for &p0 in &[1e-6, 0.01, 0.05, 0.0999] {
        let mut prev = 0.0;
        for i in 1..=50 {
            let m = 0.9 * i as f64 / 50.0 - 1e-9;
            let c = BispatialConfig::new(eps, m, Calibration::OddsDefault).unwrap();
            let v = assess_region_probability(&PValueResult { p0, applicable: true }, &c).unwrap();
            increasing_m &= v > prev;
            prev = v;
        }
    }
    let tiny = assess_region_probability(&PValueResult { p0: 1e-12, applicable: true }, &cfg).unwrap();
    Outcome {
        pass: rejected == 50 && increasing_p && increasing_m && tiny < 1e-10,
        detail: format!(
            "rejected {rejected}/50 with P0 in [0.1, 0.99]; strictly increasing in P0: {increasing_p}, \
             in pre_data_mass (<= 0.9): {increasing_m}; P0 = 1e-12 -> {tiny:.1e} (< 1e-10)"
        ),
    }
}

fn run_cli(config: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ioi"))
        .arg("run")
        .arg(config)
        .output()
        .expect("ioi binary runs")
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("obs.csv"), "value\n9.8\n10.4\n10.1\n9.6\n10.9\n").unwrap();
    let conditionals = r#"[{"method":"fiducial","coef":0.7,"sigma2":0.51},
                          {"method":"bayes","prior":{"mean":0,"variance":100},"coef":0.7,"sigma2":0.51}]"#;
    let configs = [
        ("fiducial", r#"{"mode":"fiducial","data_path":"obs.csv","model":{"sigma2":1.0},"output_path":"fiducial.json"}"#.to_string()),
        ("bayes", r#"{"mode":"bayes","data":{"mean":10,"n":5,"sigma2":1},"model":{"prior":{"type":"grid","lo":5,"hi":15}},"output_path":"bayes.json"}"#.to_string()),
        ("bispatial", r#"{"mode":"bispatial","data":{"mean":1.2,"n":25,"sigma2":1},"model":{"bispatial":{"epsilon":0.5,"pre_data_mass":0.5}},"output_path":"bispatial.json"}"#.to_string()),
        ("compose-pipeline", r#"{"mode":"compose-pipeline","data":{"mean":1.2,"n":25,"sigma2":1},"model":{"bispatial":{"epsilon":0.5,"pre_data_mass":0.5}},"output_path":"pipeline.json"}"#.to_string()),
        ("gibbs", format!(r#"{{"mode":"gibbs","model":{{"conditionals":{conditionals}}},"seed":17,"iterations":20000,"output_path":"gibbs.json"}}"#)),
        ("scan-sensitivity", format!(r#"{{"mode":"scan-sensitivity","model":{{"conditionals":{conditionals}}},"seed":17,"iterations":20000,"output_path":"scan.json"}}"#)),
    ];
    let mut identical = 0;
    let mut failures = Vec::new();
    for (mode, text) in &configs {
        let cfg = dir.path().join(format!("{mode}.config.json"));
        std::fs::write(&cfg, text).unwrap();
        let first = run_cli(&cfg);
        if !first.status.success() {
            failures.push(format!("{mode}: {}", String::from_utf8_lossy(&first.stderr).trim()));
            continue;
        }
        let report_path: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
        let report_path = Path::new(report_path["report"].as_str().unwrap()).to_path_buf();
        let report = std::fs::read(&report_path).unwrap();
        let draws = dir.path().join("gibbs.csv");
        let csv_before = std::fs::read(&draws).ok();

        let parsed: serde_json::Value = serde_json::from_slice(&report).unwrap();
        let echoed = dir.path().join(format!("{mode}.echo.json"));
        std::fs::write(&echoed, serde_json::to_vec_pretty(&parsed["config"]).unwrap()).unwrap();
        let second = run_cli(&echoed);
        let again = std::fs::read(&report_path).unwrap();
        let csv_after = std::fs::read(&draws).ok();
        if second.status.success() && again == report && csv_before == csv_after {
            identical += 1;
        } else {
            failures.push(format!("{mode}: rerun differs"));
        }
    }
    Outcome {
        pass: identical == configs.len(),
        detail: format!("{identical}/{} modes byte-identical on echoed-config rerun {failures:?}", configs.len()),
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, criterion_1, Duration::from_secs(10)),
        (2, criterion_2, Duration::from_secs(10)),
        (3, criterion_3, Duration::from_secs(1)),
        (4, criterion_4, Duration::from_secs(5)),
        (5, criterion_5, Duration::from_secs(30)),
        (6, criterion_6, Duration::from_secs(120)),
        (7, criterion_7, Duration::from_secs(1)),
        (8, criterion_8, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (id, f, budget) in criteria {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id}: {} [{:.2}s / {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
