//! Property checks shared by the integration tests and the acceptance
//! runner. Each returns a short summary on success and the first
//! discrepancy on failure.
#![allow(dead_code, clippy::needless_range_loop)]

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flowdpc::baselines::{DbscanConfig, DetectorConfig, IForestConfig, KMeansConfig};
use flowdpc::dpc::{self, DpcResult};
use flowdpc::eval::{accuracy, confusion, false_positive_rate, g_mean, ConfusionMatrix};
use flowdpc::features::{self, TimeWindow};
use flowdpc::ingest::{generate_synthetic, SynthConfig};
use flowdpc::pca::{self, PcaConfig};
use flowdpc::pipeline::{self, PreprocessConfig};
use flowdpc::{rng, DpcParams, ScoreMode};

use super::oracle;

pub type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rows(points: &Array2<f64>) -> Vec<Vec<f64>> {
    points.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// A random point set: continuous, snapped to a coarse grid (many exact
/// distance and density ties), or with duplicated rows.
pub fn random_points(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
    match rng.random_range(0..3) {
        0 => Array2::from_shape_fn((m, n), |_| rng.random::<f64>()),
        1 => Array2::from_shape_fn((m, n), |_| rng.random_range(0..8) as f64 * 0.125),
        _ => {
            let base = Array2::from_shape_fn((m.div_ceil(2), n), |_| rng.random::<f64>());
            let picks: Vec<usize> = (0..m).map(|_| rng.random_range(0..base.nrows())).collect();
            base.select(Axis(0), &picks)
        }
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> DpcParams {
    DpcParams {
        d_c: rng.random_range(0.05..0.6),
        rho_min: rng.random_range(0..=10) as f64,
        delta_min: rng.random_range(0.0..0.4),
        a_th: rng.random_range(0.5..3.0),
        score_mode: if rng.random::<bool>() {
            ScoreMode::Normalized
        } else {
            ScoreMode::Raw
        },
        ..DpcParams::default()
    }
}

fn compare_dpc(result: &DpcResult, expected: &oracle::DpcOracle, tag: &str) -> Result<(), String> {
    let same_scores = result
        .score
        .iter()
        .zip(&expected.score)
        .all(|(a, b)| a == b || (a.is_infinite() && b.is_infinite()));
    ensure(result.state.rho == expected.rho, || {
        format!("{tag}: rho differs")
    })?;
    ensure(result.state.delta == expected.delta, || {
        format!("{tag}: delta differs")
    })?;
    ensure(result.state.nneigh == expected.nneigh, || {
        format!("{tag}: nneigh differs")
    })?;
    ensure(result.centers == expected.centers, || {
        format!(
            "{tag}: centers {:?} vs {:?}",
            result.centers, expected.centers
        )
    })?;
    ensure(result.cluster_label == expected.labels, || {
        format!("{tag}: labels differ")
    })?;
    ensure(same_scores, || format!("{tag}: scores differ"))?;
    ensure(result.is_anomaly == expected.is_anomaly, || {
        format!("{tag}: verdicts differ")
    })
}

/// The detector against the brute-force definition on `count` datasets with
/// m in [5, 200] and n in [1, 8].
pub fn dpc_matches_oracle(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut largest = 0;
    for case in 0..count {
        let m = rng.random_range(5..=200);
        let n = rng.random_range(1..=8);
        let points = random_points(&mut rng, m, n);
        let params = random_params(&mut rng);
        let expected = oracle::dpc(
            &rows(&points),
            params.d_c,
            params.rho_min,
            params.delta_min,
            params.a_th,
            params.score_mode == ScoreMode::Normalized,
        );
        let tag = format!("case {case} (m={m}, n={n}, {params:?})");
        let on_the_fly = dpc::detect(points.view(), &params).map_err(|e| format!("{tag}: {e}"))?;
        compare_dpc(&on_the_fly, &expected, &tag)?;
        let matrix = dpc::pairwise_distances(points.view()).map_err(|e| e.to_string())?;
        let dense = dpc::detect_with(&matrix, &params).map_err(|e| e.to_string())?;
        ensure(dense == on_the_fly, || {
            format!("{tag}: matrix and on-the-fly paths differ")
        })?;
        largest = largest.max(m);
    }
    Ok(format!("{count} datasets, largest m = {largest}"))
}

fn close(a: (f64, f64), b: (f64, f64), tol: f64) -> bool {
    (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol
}

/// FFT path against term-by-term summation, plus Parseval and conjugate
/// symmetry, on `count` windows with N in [4, 256].
pub fn dft_matches_direct_sum(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for case in 0..count {
        let n = rng.random_range(4..=256);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = features::dft(&x).map_err(|e| e.to_string())?;
        let direct = features::dft_direct(&x).map_err(|e| e.to_string())?;
        let expected = oracle::dft(&x);
        for f in 0..n {
            let err = (fast.coefficients[f].0 - expected[f].0)
                .abs()
                .max((fast.coefficients[f].1 - expected[f].1).abs());
            worst = worst.max(err);
            ensure(err <= 1e-9, || {
                format!("window {case} (N={n}) bin {f}: error {err:e}")
            })?;
            ensure(close(direct.coefficients[f], expected[f], 1e-9), || {
                format!("window {case}: direct path bin {f} differs")
            })?;
            let mirror = fast.coefficients[(n - f) % n];
            ensure(
                close(fast.coefficients[f], (mirror.0, -mirror.1), 1e-9),
                || format!("window {case} (N={n}): X[{f}] is not conj(X[N-{f}])"),
            )?;
            let m2 = fast.coefficients[f].0.powi(2) + fast.coefficients[f].1.powi(2);
            ensure(
                (fast.psd[f] - m2 / n as f64).abs() <= 1e-9 * m2.max(1.0),
                || format!("window {case}: psd bin {f}"),
            )?;
        }
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let spectral: f64 = fast.psd.iter().sum();
        ensure((energy - spectral).abs() <= 1e-9 * energy.max(1.0), || {
            format!("window {case} (N={n}): Parseval {energy} vs {spectral}")
        })?;
    }
    Ok(format!("{count} windows, max abs error {worst:.2e}"))
}

/// Eigen-residuals, orthonormality, ratio sums and the component-count
/// rule on `count` random matrices with m ≤ 500 and p ≤ 60.
pub fn pca_identities(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for case in 0..count {
        let p = rng.random_range(1..=60);
        let m = rng.random_range(2..=500);
        // Mixed column scales and a random rank make the spectra uneven.
        let rank = rng.random_range(1..=p);
        let latent = Array2::from_shape_fn((m, rank), |_| rng.random_range(-1.0..1.0));
        let mixing = Array2::from_shape_fn((rank, p), |_| rng.random_range(-1.0..1.0));
        let noise = rng.random_range(0.0..0.05);
        let x = latent.dot(&mixing)
            + Array2::from_shape_fn((m, p), |_| noise * rng.random_range(-1.0..1.0));
        let config = PcaConfig::default();
        let model = pca::fit_pca(&x, &config).map_err(|e| format!("case {case}: {e}"))?;
        let (_, cov) = pca::covariance(&x);
        let lambda1 = model.spectrum[0];
        let tol = 1e-8 * lambda1.max(1.0);
        let d = model.n_components();
        for k in 0..d {
            let v: Array1<f64> = model.components.column(k).to_owned();
            let residual = (&cov.dot(&v) - &(&v * model.eigenvalues[k]))
                .mapv(|e| e * e)
                .sum()
                .sqrt();
            worst = worst.max(residual / lambda1.max(1.0));
            ensure(residual <= tol, || {
                format!("case {case}: residual {residual:e} for component {k}")
            })?;
        }
        let gram = model.components.t().dot(&model.components);
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                ensure((gram[[i, j]] - want).abs() <= 1e-8, || {
                    format!("case {case}: V^T V [{i},{j}] = {}", gram[[i, j]])
                })?;
            }
        }
        let ratio_sum: f64 = model.explained_variance_ratio.iter().sum();
        ensure(ratio_sum <= 1.0 + 1e-9, || {
            format!("case {case}: ratios sum to {ratio_sum}")
        })?;

        // Independent eigenvalues and component count.
        let reference = oracle::jacobi_eigenvalues(&oracle::covariance(&rows(&x)));
        for (k, (a, b)) in model.spectrum.iter().zip(&reference).enumerate() {
            ensure((a - b.max(0.0)).abs() <= 1e-8 * lambda1.max(1.0), || {
                format!("case {case}: eigenvalue {k} is {a}, Jacobi gives {b}")
            })?;
        }
        let total: f64 = reference.iter().map(|v| v.max(0.0)).sum();
        let mut cumulative = 0.0;
        let mut d95 = p;
        for (k, v) in reference.iter().enumerate() {
            cumulative += v.max(0.0);
            if cumulative / total > config.variance_target {
                d95 = k + 1;
                break;
            }
        }
        // Within a rounding hair of the target the two solvers may differ.
        let near_boundary = {
            let c: f64 = reference
                .iter()
                .take(d95.saturating_sub(1))
                .map(|v| v.max(0.0))
                .sum();
            (c / total - config.variance_target).abs() < 1e-9
        };
        let want = d95.min(config.max_components).min(m.min(p));
        ensure(d == want || near_boundary, || {
            format!("case {case}: d = {d}, expected {want} (p={p}, m={m})")
        })?;
    }
    Ok(format!("{count} matrices, max scaled residual {worst:.2e}"))
}

/// Window moments against the definitions, plus the [0, 0, 0, 4] example.
pub fn moments_match_definitions(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..count {
        let len = rng.random_range(3..=64);
        let dims = rng.random_range(1..=4);
        let data = Array2::from_shape_fn((len, dims), |_| {
            rng.random_range(-2.0..2.0) * rng.random_range(0.1..3.0)
        });
        let window = TimeWindow {
            start_index: 0,
            data: data.view(),
        };
        let stats = features::compute_moments(&window).map_err(|e| e.to_string())?;
        for j in 0..dims {
            let (mean, var, skew) = oracle::moments(&data.column(j).to_vec());
            for (name, got, want) in [
                ("mean", stats.mean[j], mean),
                ("var", stats.variance[j], var),
                ("skew", stats.skewness[j], skew),
            ] {
                ensure((got - want).abs() <= 1e-12 * want.abs().max(1.0), || {
                    format!("window {case} column {j}: {name} {got} vs {want}")
                })?;
            }
        }
    }
    let hand = Array2::from_shape_vec((4, 1), vec![0.0, 0.0, 0.0, 4.0]).unwrap();
    let stats = features::compute_moments(&TimeWindow {
        start_index: 0,
        data: hand.view(),
    })
    .map_err(|e| e.to_string())?;
    // 2/3 · 8/√3, worked by hand.
    ensure((stats.skewness[0] - 3.0792).abs() <= 1e-3, || {
        format!("[0,0,0,4] skewness {}", stats.skewness[0])
    })?;
    ensure(
        (stats.skewness[0] - 3.079201435678004).abs() <= 1e-12,
        || {
            format!(
                "[0,0,0,4] skewness {} vs 3.079201435678004",
                stats.skewness[0]
            )
        },
    )?;
    ensure(stats.mean[0] == 1.0 && stats.variance[0] == 3.0, || {
        "[0,0,0,4] mean/var".into()
    })?;
    Ok(format!(
        "{count} windows; [0,0,0,4] skewness {:.4}",
        stats.skewness[0]
    ))
}

/// Metric functions against the textbook formulas on `count` random
/// confusion matrices, and the worked cell tp=8, tn=90, fp=10, fn=2.
pub fn metric_identities(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..count {
        let cm = ConfusionMatrix {
            tp: rng.random_range(0..50),
            tn: rng.random_range(0..1000),
            fp: rng.random_range(0..100),
            fn_: rng.random_range(0..50),
        };
        let total = cm.tp + cm.tn + cm.fp + cm.fn_;
        if total == 0 {
            ensure(accuracy(&cm).is_err(), || {
                "accuracy of an empty matrix".into()
            })?;
            continue;
        }
        let acc = (cm.tp + cm.tn) as f64 / total as f64;
        let tpr = if cm.tp + cm.fn_ > 0 {
            cm.tp as f64 / (cm.tp + cm.fn_) as f64
        } else {
            0.0
        };
        let tnr = if cm.tn + cm.fp > 0 {
            cm.tn as f64 / (cm.tn + cm.fp) as f64
        } else {
            0.0
        };
        let fpr = if cm.fp + cm.tn > 0 {
            cm.fp as f64 / (cm.fp + cm.tn) as f64
        } else {
            0.0
        };
        ensure(accuracy(&cm) == Ok(acc), || {
            format!("case {case}: accuracy")
        })?;
        ensure(g_mean(&cm).value == (tpr * tnr).sqrt(), || {
            format!("case {case}: g-mean")
        })?;
        ensure(false_positive_rate(&cm).value == fpr, || {
            format!("case {case}: fpr")
        })?;
        ensure(
            g_mean(&cm).undefined == (cm.tp + cm.fn_ == 0 || cm.tn + cm.fp == 0),
            || format!("case {case}: g-mean undefined flag"),
        )?;

        // Counting from label vectors reproduces the matrix.
        let mut predicted = Vec::new();
        let mut truth = Vec::new();
        for (n, p, t) in [
            (cm.tp, true, true),
            (cm.tn, false, false),
            (cm.fp, true, false),
            (cm.fn_, false, true),
        ] {
            predicted.extend(std::iter::repeat_n(p, n));
            truth.extend(std::iter::repeat_n(
                if t {
                    flowdpc::Label::Anomaly
                } else {
                    flowdpc::Label::Normal
                },
                n,
            ));
        }
        let mut order: Vec<usize> = (0..total).collect();
        order.shuffle(&mut rng);
        let predicted: Vec<bool> = order.iter().map(|&i| predicted[i]).collect();
        let truth: Vec<_> = order.iter().map(|&i| truth[i]).collect();
        ensure(confusion(&predicted, &truth) == Ok(cm), || {
            format!("case {case}: counting")
        })?;
    }
    let cell = ConfusionMatrix {
        tp: 8,
        tn: 90,
        fp: 10,
        fn_: 2,
    };
    let (a, g, f) = (
        accuracy(&cell).unwrap(),
        g_mean(&cell).value,
        false_positive_rate(&cell).value,
    );
    ensure(
        (a - 0.8909).abs() <= 1e-4 && (g - 0.8485).abs() <= 1e-4 && (f - 0.1000).abs() <= 1e-4,
        || format!("worked cell gives {a:.4} / {g:.4} / {f:.4}"),
    )?;
    Ok(format!(
        "{count} matrices; worked cell {a:.4} / {g:.4} / {f:.4}"
    ))
}

/// Detector configurations as the command line resolves them by default.
pub fn default_baselines(root_seed: u64) -> Vec<DetectorConfig> {
    vec![
        DetectorConfig::Kmeans(KMeansConfig {
            seed: rng::derive_seed(root_seed, rng::KMEANS),
            ..KMeansConfig::default()
        }),
        DetectorConfig::Iforest(IForestConfig {
            seed: rng::derive_seed(root_seed, rng::IFOREST),
            ..IForestConfig::default()
        }),
        DetectorConfig::Dbscan(DbscanConfig::default()),
    ]
}

pub const ROOT_SEED: u64 = 20_241_018;

/// `(method, g_mean, fpr)` for DPC and each baseline on the reference set.
pub fn reference_scores() -> Result<Vec<(String, f64, f64)>, String> {
    let data = generate_synthetic(&SynthConfig::reference()).map_err(|e| e.to_string())?;
    let prepared =
        pipeline::prepare(&data, &PreprocessConfig::default()).map_err(|e| e.to_string())?;
    let mut detectors = vec![DetectorConfig::Dpc(DpcParams::default())];
    detectors.extend(default_baselines(ROOT_SEED));
    detectors
        .iter()
        .map(|d| {
            let verdict = d.run(prepared.points.view()).map_err(|e| e.to_string())?;
            let cm = confusion(&verdict.is_anomaly, &prepared.labels).map_err(|e| e.to_string())?;
            Ok((
                d.method_name().to_string(),
                g_mean(&cm).value,
                false_positive_rate(&cm).value,
            ))
        })
        .collect()
}

pub fn reference_detection() -> Check {
    let scores = reference_scores()?;
    let (_, dpc_g, dpc_fpr) = scores[0].clone();
    ensure(dpc_g >= 0.90, || format!("dpc g-mean {dpc_g}"))?;
    ensure(dpc_fpr <= 0.05, || format!("dpc fpr {dpc_fpr}"))?;
    for (method, g, _) in &scores[1..] {
        ensure(dpc_g >= *g, || {
            format!("dpc g-mean {dpc_g} below {method} {g}")
        })?;
    }
    Ok(scores
        .iter()
        .map(|(m, g, f)| format!("{m} g={g:.4} fpr={f:.4}"))
        .collect::<Vec<_>>()
        .join(", "))
}

fn verdicts(points: ArrayView2<'_, f64>, params: &DpcParams) -> Result<Vec<bool>, String> {
    dpc::detect(points, params)
        .map(|r| r.is_anomaly)
        .map_err(|e| e.to_string())
}

/// Scaling coordinates by `s` with `d_c` and `delta_min` scaled alike (and
/// `a_th` in raw mode, where scores carry a distance unit) leaves every
/// verdict unchanged. Powers of two keep the arithmetic exact.
pub fn scale_invariance(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets: Vec<(Array2<f64>, DpcParams)> = Vec::new();
    let data = generate_synthetic(&SynthConfig::reference()).map_err(|e| e.to_string())?;
    let prepared =
        pipeline::prepare(&data, &PreprocessConfig::default()).map_err(|e| e.to_string())?;
    sets.push((prepared.points, DpcParams::default()));
    for _ in 0..count {
        let (m, n) = (rng.random_range(5..=150), rng.random_range(1..=6));
        sets.push((random_points(&mut rng, m, n), random_params(&mut rng)));
    }
    for (case, (points, params)) in sets.iter().enumerate() {
        let base = verdicts(points.view(), params)?;
        for s in [0.25, 0.5, 2.0, 8.0] {
            let scaled = points.mapv(|v| v * s);
            let p = DpcParams {
                d_c: params.d_c * s,
                delta_min: params.delta_min * s,
                a_th: if params.score_mode == ScoreMode::Raw {
                    params.a_th * s
                } else {
                    params.a_th
                },
                ..*params
            };
            ensure(verdicts(scaled.view(), &p)? == base, || {
                format!("set {case}: scale {s} changes verdicts")
            })?;
        }
    }
    Ok(format!("{} point sets x 4 scales", sets.len()))
}

/// Row permutations: densities always follow their rows; on the reference
/// set verdicts follow exactly, and on random sets they do under any
/// permutation that keeps the order of rows within each density tie.
pub fn permutation_invariance(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = generate_synthetic(&SynthConfig::reference()).map_err(|e| e.to_string())?;
    let prepared =
        pipeline::prepare(&data, &PreprocessConfig::default()).map_err(|e| e.to_string())?;
    let params = DpcParams::default();
    let base = verdicts(prepared.points.view(), &params)?;
    for trial in 0..3 {
        let mut perm: Vec<usize> = (0..base.len()).collect();
        perm.shuffle(&mut rng);
        let moved = verdicts(prepared.points.select(Axis(0), &perm).view(), &params)?;
        ensure(
            perm.iter().enumerate().all(|(k, &i)| moved[k] == base[i]),
            || format!("reference set, permutation {trial}: verdicts do not follow their rows"),
        )?;
    }
    let mut free = 0;
    for case in 0..count {
        let (m, n) = (rng.random_range(5..=120), rng.random_range(1..=6));
        let points = random_points(&mut rng, m, n);
        let params = random_params(&mut rng);
        let a = dpc::detect(points.view(), &params).map_err(|e| e.to_string())?;

        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut rng);
        let b = dpc::detect(points.select(Axis(0), &perm).view(), &params)
            .map_err(|e| e.to_string())?;
        ensure(
            perm.iter()
                .enumerate()
                .all(|(k, &i)| b.state.rho[k] == a.state.rho[i]),
            || format!("case {case}: densities do not follow their rows"),
        )?;
        if has_distinct_densities(&a.state.rho) {
            free += 1;
        }

        // Ties in ρ are broken by row index, so a permutation that keeps
        // the relative order inside every tie class must move verdicts
        // and scores with their rows.
        let perm = tie_order_preserving(&perm, &a.state.rho);
        let c = dpc::detect(points.select(Axis(0), &perm).view(), &params)
            .map_err(|e| e.to_string())?;
        ensure(
            perm.iter()
                .enumerate()
                .all(|(k, &i)| c.is_anomaly[k] == a.is_anomaly[i] && c.score[k] == a.score[i]),
            || format!("case {case}: verdicts do not follow their rows"),
        )?;
    }
    Ok(format!(
        "reference set x 3 permutations, {count} random sets ({free} without density ties)"
    ))
}

fn has_distinct_densities(rho: &[usize]) -> bool {
    let mut sorted = rho.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).all(|w| w[0] != w[1])
}

/// Reorders `perm` so that rows sharing a density keep their original
/// relative order, leaving the positions of each density class unchanged.
fn tie_order_preserving(perm: &[usize], rho: &[usize]) -> Vec<usize> {
    let mut out = perm.to_vec();
    let mut classes: Vec<usize> = rho.to_vec();
    classes.sort_unstable();
    classes.dedup();
    for r in classes {
        let slots: Vec<usize> = (0..perm.len()).filter(|&k| rho[perm[k]] == r).collect();
        let mut members: Vec<usize> = slots.iter().map(|&k| perm[k]).collect();
        members.sort_unstable();
        for (k, i) in slots.into_iter().zip(members) {
            out[k] = i;
        }
    }
    out
}
