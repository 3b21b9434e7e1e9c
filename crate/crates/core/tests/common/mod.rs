#![allow(dead_code)]

/// Lower Cholesky factor of a dense symmetric positive-definite matrix.
pub fn cholesky(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (m[i][i] - s).sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// `ln N(y; 0, Sigma1) - ln N(y; 0, sigma2 I)` with
/// `Sigma1[i][j] = pi0 a^|i-j| + sigma2 [i == j]`, by explicit factorization.
pub fn dense_llr(y: &[f64], a: f64, pi0: f64, sigma2: f64) -> f64 {
    let n = y.len();
    let cov: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let lag = (i as i32 - j as i32).unsigned_abs();
                    pi0 * a.powi(lag as i32) + if i == j { sigma2 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let l = cholesky(&cov);
    // forward solve L z = y
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (y[i] - s) / l[i][i];
    }
    let quad1: f64 = z.iter().map(|v| v * v).sum();
    let logdet1: f64 = 2.0 * (0..n).map(|i| l[i][i].ln()).sum::<f64>();
    let quad0: f64 = y.iter().map(|v| v * v).sum::<f64>() / sigma2;
    let logdet0 = n as f64 * sigma2.ln();
    -0.5 * (logdet1 + quad1) + 0.5 * (logdet0 + quad0)
}
