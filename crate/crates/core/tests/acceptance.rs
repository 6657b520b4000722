//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p dayahead --test acceptance`.

use std::time::{Duration, Instant};

use dayahead::synth::{planted_k, weekly};
use dayahead::{
    fit_ar, fit_hw, fit_kmeans, fit_transitions, mse, rank_methods, run_backtest, split_days, train,
    ArFit, BacktestConfig, DayAheadModel, DayMatrix, EvalReport, HwGrid, KMeansConfig, KRange, Method,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("runtime {elapsed:?} exceeds {limit:?}"))
}

/// Weekly HA/LA data trained with k = 2 gives P(HA→HA) = 0.8, P(HA→LA) = 0.2.
fn c1_weekly_markov() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    for (weeks, noise, p, seed) in [(10, 0.05, 1, 1u64), (10, 0.0, 1, 2), (12, 0.05, 3, 3), (52, 0.05, 1, 4)] {
        let data = weekly::<f64>(weeks * 7, 96, p, noise, seed).map_err(|e| e.to_string())?;
        let model = train(&data.series, 2, 96, seed).map_err(|e| e.to_string())?;
        let days = split_days(&data.series, 96).map_err(|e| e.to_string())?;
        let ha = model.classify(&days[0]).map_err(|e| e.to_string())?;
        let la = model.classify(&days[5]).map_err(|e| e.to_string())?;
        ensure(ha != la, "HA and LA days share a cluster")?;
        let p_hh = model.transitions.probs[ha][ha];
        let p_hl = model.transitions.probs[ha][la];
        ensure(
            (p_hh - 0.8).abs() <= 0.02 && (p_hl - 0.2).abs() <= 0.02,
            format!("{weeks} weeks, noise {noise}: P(HA→HA)={p_hh}, P(HA→LA)={p_hl}"),
        )?;
        details.push(format!("{weeks}w/p={p}: {p_hh:.3}"));
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("P(HA→HA) {}", details.join(", ")))
}

fn planted_backtest(seed: u64, noise: f64, methods: &[Method], k_range: KRange) -> Result<(usize, EvalReport<f64>), String> {
    let k = 2 + (seed as usize % 5);
    let data = planted_k::<f64>(k, 100, 24, 1, noise, seed).map_err(|e| e.to_string())?;
    let mut cfg = BacktestConfig::new(24);
    cfg.k_range = k_range;
    cfg.seed = seed;
    cfg.dataset_id = format!("planted-{k}-{seed}");
    let report = run_backtest(&data.series, methods, &cfg).map_err(|e| e.to_string())?;
    Ok((k, report))
}

/// omniscient ≤ day-ahead ≤ mean-day in mean error.
fn c2_method_ordering() -> Outcome {
    let start = Instant::now();
    let methods = [Method::DayAhead, Method::MeanDay, Method::Omniscient];
    let mut full_order = 0;
    let mut omni_ok = 0;
    for seed in 0..20u64 {
        let (_, r) = planted_backtest(seed, 0.5, &methods, KRange::new(2, 10).unwrap())?;
        let err = |m| r.summary_for(m).unwrap().mean_error;
        let (da, md, om) = (err(Method::DayAhead), err(Method::MeanDay), err(Method::Omniscient));
        if om <= da {
            omni_ok += 1;
        }
        if om <= da && da <= md {
            full_order += 1;
        }
        // per-forecast: the omniscient centroid is never farther from the truth
        for row in &r.errors {
            ensure(row[2] <= row[0] + 1e-12, format!("seed {seed}: omniscient worse on a forecast"))?;
        }
    }
    ensure(omni_ok == 20, format!("omniscient ≤ day-ahead in {omni_ok}/20"))?;
    ensure(full_order >= 18, format!("full ordering in {full_order}/20"))?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("full ordering {full_order}/20, omniscient ≤ day-ahead {omni_ok}/20"))
}

/// Noise-free planted profiles: k is recovered and test MSE vanishes.
fn c3_perfect_recovery() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let (k, r) = planted_backtest(seed, 0.0, &[Method::DayAhead], KRange::new(2, 10).unwrap())?;
        ensure(r.selected_k == Some(k), format!("planted k={k}, selected {:?}", r.selected_k))?;
        let max_err = r.errors.iter().map(|row| row[0]).fold(0.0, f64::max);
        ensure(max_err <= 1e-9, format!("k={k}: test MSE {max_err:e}"))?;
        worst = worst.max(max_err);
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("k recovered for k=2..6, worst test MSE {worst:.1e}"))
}

/// k = 1 day-ahead equals the mean-day baseline.
fn c4_single_cluster_collapse() -> Outcome {
    let mut datasets = Vec::new();
    for seed in 0..4u64 {
        datasets.push(planted_k::<f64>(2 + seed as usize, 40, 12, 2, 0.4, seed).unwrap().series);
        datasets.push(weekly::<f64>(35, 16, 1, 0.3, seed).unwrap().series);
    }
    let mut worst: f64 = 0.0;
    for (i, series) in datasets.iter().enumerate() {
        let h = if i % 2 == 0 { 12 } else { 16 };
        let mut cfg = BacktestConfig::new(h);
        cfg.k_range = KRange::single(1).unwrap();
        let r = run_backtest(series, &[Method::DayAhead, Method::MeanDay], &cfg).map_err(|e| e.to_string())?;
        let diff = (r.summary[0].mean_error - r.summary[1].mean_error).abs();
        for row in &r.errors {
            worst = worst.max((row[0] - row[1]).abs());
        }
        ensure(diff <= 1e-12, format!("dataset {i}: |Δ mean MSE| = {diff:e}"))?;
    }
    ensure(worst <= 1e-12, format!("per-forecast |Δ| = {worst:e}"))?;
    Ok(format!("{} datasets, max per-forecast |Δ| {worst:.1e}", datasets.len()))
}

/// Row-stochastic transitions and pair counts on random sequences.
fn c5_markov_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let k = rng.random_range(1..=12);
        let len = rng.random_range(2..=400);
        let seq: Vec<usize> = (0..len).map(|_| rng.random_range(0..k)).collect();
        let m = fit_transitions::<f64>(&seq, k).map_err(|e| e.to_string())?;
        ensure(m.total_count() == len as u64 - 1, format!("sequence {i}: count total"))?;
        for row in &m.probs {
            let s: f64 = row.iter().sum();
            ensure((s - 1.0).abs() <= 1e-9, format!("sequence {i}: row sum {s}"))?;
        }
    }
    Ok("1000 sequences".into())
}

/// Exhaustive optimum over all labelings of a small point set.
fn optimal_inertia(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let dim = points[0].len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        let mut total = 0.0;
        for c in 0..k {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            for d in 0..dim {
                let mean = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                total += members.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>();
            }
        }
        best = best.min(total);
        // next labeling in base k
        let mut i = 0;
        while i < n && labels[i] == k - 1 {
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
        labels[i] += 1;
    }
}

fn c6_kmeans_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut datasets: Vec<Vec<Vec<f64>>> = Vec::new();
    for _ in 0..24 {
        let n = rng.random_range(3..=8);
        let dim = rng.random_range(1..=3);
        datasets.push((0..n).map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect()).collect());
    }
    // tight groups plus a straggler, and points on a line
    datasets.push(vec![vec![0.0], vec![0.1], vec![0.2], vec![5.0], vec![5.1], vec![9.0], vec![20.0], vec![20.5]]);
    datasets.push((0..8).map(|i| vec![i as f64, 2.0 * i as f64]).collect());

    let cfg = KMeansConfig::default();
    let mut worst_rate = 1.0f64;
    let mut cases = 0;
    for (di, pts) in datasets.iter().enumerate() {
        let dim = pts[0].len();
        let days: Vec<DayMatrix<f64>> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| DayMatrix::new(p.clone(), dim, 1, i).unwrap())
            .collect();
        for k in 1..=3.min(pts.len()) {
            let opt = optimal_inertia(pts, k);
            let hits = (0..100u64)
                .filter(|&seed| {
                    let m = fit_kmeans(&days, k, seed, &cfg).unwrap();
                    (m.inertia - opt).abs() <= 1e-9
                })
                .count();
            let rate = hits as f64 / 100.0;
            worst_rate = worst_rate.min(rate);
            cases += 1;
            ensure(rate >= 0.95, format!("dataset {di}, k={k}: optimum reached in {hits}/100 seeds"))?;
        }
    }
    Ok(format!("{cases} dataset/k cases, worst hit rate {:.0}%", worst_rate * 100.0))
}

fn c7_ar_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut x = vec![0.0f64];
    for _ in 1..10_000 {
        let prev = x[x.len() - 1];
        x.push(0.5 * prev + noise.sample(&mut rng));
    }
    let fit = fit_ar(&x, 1).map_err(|e| e.to_string())?;
    let d1 = (fit.coeffs[0] - 0.5).abs();
    ensure(d1 <= 0.02, format!("simulated AR(1): coefficient {}", fit.coeffs[0]))?;

    let exact: Vec<f64> = (0..300).map(|t| 3.0 * 0.9f64.powi(t)).collect();
    let fit = fit_ar(&exact, 1).map_err(|e| e.to_string())?;
    let d2 = (fit.coeffs[0] - 0.9).abs();
    ensure(d2 <= 1e-6, format!("noise-free AR(1): coefficient {}", fit.coeffs[0]))?;

    let geo = ArFit { order: 1, coeffs: vec![0.5], intercept: 0.0 }.forecast(&[1.0], 3).unwrap();
    ensure(geo == vec![0.5, 0.25, 0.125], "geometric recursion")?;
    Ok(format!("|Δ| simulated {d1:.4}, noise-free {d2:.1e}"))
}

fn c8_hw_periodic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 24;
    let period: Vec<f64> = (0..h).map(|_| rng.random_range(-3.0..3.0)).collect();
    let series: Vec<f64> = period.iter().cycle().take(h * 6).copied().collect();
    let hw = fit_hw(&series, h, &HwGrid::default()).map_err(|e| e.to_string())?;
    let forecast = hw.forecast(h);
    let worst = forecast
        .iter()
        .zip(&period)
        .map(|(f, p)| (f - p).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-6, format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn c9_mse_rank_arithmetic() -> Outcome {
    let d = |v: &[f64]| DayMatrix::new(v.to_vec(), v.len(), 1, 0).unwrap();
    ensure(mse(&d(&[0.3, 0.7]), &d(&[0.3, 0.7])).unwrap() == 0.0, "mse identity")?;
    ensure(mse(&d(&[0.0, 0.0]), &d(&[1.0, 1.0])).unwrap() == 1.0, "mse unit offset")?;
    ensure(mse(&d(&[1.0, 3.0]), &d(&[2.0, 5.0])).unwrap() == 2.5, "mse [1,3] vs [2,5]")?;
    ensure(rank_methods(&[0.1, 0.2, 0.3]) == vec![1.0, 2.0, 3.0], "strict ranks")?;
    ensure(rank_methods(&[0.1, 0.1, 0.3]) == vec![1.5, 1.5, 3.0], "average ties")?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..2000 {
        let m = rng.random_range(1..=7);
        let errs: Vec<f64> = (0..m)
            .map(|_| match rng.random_range(0..4) {
                0 => f64::INFINITY,
                1 => 0.5,
                _ => rng.random_range(0.0..1.0),
            })
            .collect();
        let sum: f64 = rank_methods(&errs).iter().sum();
        ensure(sum == (m * (m + 1)) as f64 / 2.0, format!("rank sum {sum} for {errs:?}"))?;
    }
    Ok("mse cases exact, 2000 random rank sums".into())
}

fn c10_determinism_persistence() -> Outcome {
    let data = planted_k::<f64>(3, 60, 12, 2, 0.3, 10).unwrap();
    let mut cfg = BacktestConfig::new(12);
    cfg.k_range = KRange::new(2, 8).unwrap();
    cfg.seed = 10;
    let run = || -> Result<String, String> {
        let r = run_backtest(&data.series, &Method::ALL, &cfg).map_err(|e| e.to_string())?;
        r.to_json().map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, "EvalReport JSON differs between identical runs")?;
    let regen = EvalReport::<f64>::from_json(&a).map_err(|e| e.to_string())?.regenerate();
    ensure(regen.to_json().unwrap() == a, "summary regenerated from errors differs")?;

    let model = train(&data.series, 3, 12, 10).map_err(|e| e.to_string())?;
    let loaded = DayAheadModel::<f64>::from_json(&model.to_json().unwrap()).map_err(|e| e.to_string())?;
    ensure(loaded == model, "model changed through JSON")?;
    for day in split_days(&data.series, 12).unwrap() {
        let f1 = model.forecast_next(&day).unwrap();
        let f2 = loaded.forecast_next(&day).unwrap();
        let f3 = loaded.forecast_next(&day).unwrap();
        ensure(f1 == f2 && f2 == f3, format!("forecast differs on day {}", day.day_index()))?;
    }
    Ok(format!("report JSON {} bytes identical; model round-trip exact", a.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("C1 weekly Markov probability", c1_weekly_markov),
        ("C2 method ordering", c2_method_ordering),
        ("C3 perfect recovery", c3_perfect_recovery),
        ("C4 k=1 collapse", c4_single_cluster_collapse),
        ("C5 Markov invariants", c5_markov_invariants),
        ("C6 k-means oracle", c6_kmeans_oracle),
        ("C7 AR recovery", c7_ar_recovery),
        ("C8 HW periodic", c8_hw_periodic),
        ("C9 MSE/rank arithmetic", c9_mse_rank_arithmetic),
        ("C10 determinism and persistence", c10_determinism_persistence),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<34} {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<34} {why} [{secs:.2}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
