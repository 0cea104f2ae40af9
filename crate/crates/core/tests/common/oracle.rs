//! Straight-from-the-definition reference implementations. Nothing here
//! calls into the library; speed is irrelevant.
#![allow(dead_code, clippy::needless_range_loop)]

/// Everything the density peaks detector reports per point.
#[derive(Debug, Clone, PartialEq)]
pub struct DpcOracle {
    pub rho: Vec<usize>,
    pub delta: Vec<f64>,
    pub nneigh: Vec<Option<usize>>,
    pub centers: Vec<usize>,
    pub labels: Vec<i64>,
    pub score: Vec<f64>,
    pub is_anomaly: Vec<bool>,
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

/// `j` precedes `i` in the density ordering.
fn denser(rho: &[usize], j: usize, i: usize) -> bool {
    rho[j] > rho[i] || (rho[j] == rho[i] && j < i)
}

/// Brute force over every (i, j, k) triple where the definition asks for
/// it: the densest point is found by checking it against all others, and
/// cluster membership by walking neighbour chains.
pub fn dpc(
    points: &[Vec<f64>],
    d_c: f64,
    rho_min: f64,
    delta_min: f64,
    a_th: f64,
    normalized: bool,
) -> DpcOracle {
    let m = points.len();
    let d = |i: usize, j: usize| distance(&points[i], &points[j]);

    let mut rho = vec![0usize; m];
    for i in 0..m {
        for j in 0..m {
            if j != i && d(i, j) < d_c {
                rho[i] += 1;
            }
        }
    }

    let mut delta = vec![0.0; m];
    let mut nneigh = vec![None; m];
    for i in 0..m {
        let is_top = (0..m).all(|j| j == i || denser(&rho, i, j));
        if is_top {
            delta[i] = (0..m).map(|j| d(i, j)).fold(0.0, f64::max);
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for j in 0..m {
            if denser(&rho, j, i) {
                let dij = d(i, j);
                match best {
                    Some((bd, bj)) if dij > bd || (dij == bd && j > bj) => {}
                    _ => best = Some((dij, j)),
                }
            }
        }
        let (bd, bj) = best.expect("a non-top point has a denser one");
        delta[i] = bd;
        nneigh[i] = Some(bj);
    }

    let mut centers: Vec<usize> = (0..m)
        .filter(|&i| rho[i] as f64 >= rho_min && delta[i] >= delta_min)
        .collect();
    if centers.is_empty() {
        // Largest ρ·δ; among equals the one earliest in density order.
        let gamma = |i: usize| rho[i] as f64 * delta[i];
        let best = (0..m)
            .find(|&i| {
                (0..m).all(|j| gamma(j) < gamma(i) || (gamma(j) == gamma(i) && !denser(&rho, j, i)))
            })
            .unwrap();
        centers.push(best);
    }

    let mut labels = vec![0i64; m];
    for i in 0..m {
        let mut p = i;
        while !centers.contains(&p) {
            p = nneigh[p].expect("chains end at a center");
        }
        labels[i] = p as i64;
    }

    let max_rho = *rho.iter().max().unwrap() as f64;
    let max_delta = delta.iter().copied().fold(0.0, f64::max);
    let score: Vec<f64> = (0..m)
        .map(|i| {
            let (r, dl) = if normalized {
                (
                    if max_rho > 0.0 {
                        rho[i] as f64 / max_rho
                    } else {
                        0.0
                    },
                    if max_delta > 0.0 {
                        delta[i] / max_delta
                    } else {
                        0.0
                    },
                )
            } else {
                (rho[i] as f64, delta[i])
            };
            if r == 0.0 {
                f64::INFINITY
            } else {
                dl / r
            }
        })
        .collect();
    let is_anomaly: Vec<bool> = (0..m).map(|i| rho[i] == 0 || score[i] > a_th).collect();
    for i in 0..m {
        if is_anomaly[i] {
            labels[i] = -1;
        }
    }
    DpcOracle {
        rho,
        delta,
        nneigh,
        centers,
        labels,
        score,
        is_anomaly,
    }
}

/// `X_f = Σ_t x_t e^{-2πi f t / N}` summed term by term.
pub fn dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|f| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (f * t % n) as f64 / n as f64;
                re += v * angle.cos();
                im += v * angle.sin();
            }
            (re, im)
        })
        .collect()
}

/// Population mean and variance, and the adjusted skewness
/// `N / ((N-1)(N-2)) · Σ ((x-μ)/σ)³`.
pub fn moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let skew = if x.len() < 3 || sd <= 1e-12 * scale || sd == 0.0 {
        0.0
    } else {
        n / ((n - 1.0) * (n - 2.0)) * x.iter().map(|v| ((v - mean) / sd).powi(3)).sum::<f64>()
    };
    (mean, var, skew)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let p = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for k in 0..p {
            for l in (k + 1)..p {
                if a[k][l].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[l][l] - a[k][k]) / (2.0 * a[k][l]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..p {
                    let (ark, arl) = (a[r][k], a[r][l]);
                    a[r][k] = c * ark - s * arl;
                    a[r][l] = s * ark + c * arl;
                }
                for r in 0..p {
                    let (akr, alr) = (a[k][r], a[l][r]);
                    a[k][r] = c * akr - s * alr;
                    a[l][r] = s * akr + c * alr;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..p).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Population covariance of the rows of `x`.
pub fn covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = x.len();
    let p = x[0].len();
    let mean: Vec<f64> = (0..p)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / m as f64)
        .collect();
    let mut c = vec![vec![0.0; p]; p];
    for r in x {
        for i in 0..p {
            for j in 0..p {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v /= m as f64;
        }
    }
    c
}
