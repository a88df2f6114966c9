//! Output SINR of MRC and MMSE receivers for one channel draw.
//!
//! `cols[i]` is the stacked channel of the `i`-th active user and `snr[i]` its
//! transmit SNR `P_i / σ²`. Every column passed in is treated as active.

use nalgebra::DMatrix;
use num_complex::Complex64;

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn energy(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// `P̄_k‖h_k‖⁴ / (Σ_{i≠k} P̄_i |h_kᴴh_i|² + ‖h_k‖²)`; zero for a zero channel.
pub fn mrc_sinr(cols: &[Vec<Complex64>], snr: &[f64], k: usize) -> f64 {
    let e = energy(&cols[k]);
    if e == 0.0 {
        return 0.0;
    }
    let interference: f64 = (0..cols.len())
        .filter(|&i| i != k)
        .map(|i| snr[i] * inner(&cols[k], &cols[i]).norm_sqr())
        .sum();
    snr[k] * e * e / (interference + e)
}

/// MRC SINR of every user from one Gram matrix.
pub fn mrc_sinr_all(cols: &[Vec<Complex64>], snr: &[f64]) -> Vec<f64> {
    let n = cols.len();
    let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i..n {
            let g = inner(&cols[i], &cols[j]);
            gram[i * n + j] = g;
            gram[j * n + i] = g.conj();
        }
    }
    (0..n)
        .map(|k| {
            let e = gram[k * n + k].re;
            if e == 0.0 {
                return 0.0;
            }
            let interference: f64 = (0..n)
                .filter(|&i| i != k)
                .map(|i| snr[i] * gram[k * n + i].norm_sqr())
                .sum();
            snr[k] * e * e / (interference + e)
        })
        .collect()
}

/// Reference MMSE SINR, `P̄_k h_kᴴ (I + Σ_{i≠k} P̄_i h_i h_iᴴ)⁻¹ h_k`, from an
/// explicit antenna-domain solve.
pub fn mmse_sinr(cols: &[Vec<Complex64>], snr: &[f64], k: usize) -> f64 {
    let m = cols[k].len();
    let mut r = DMatrix::<Complex64>::identity(m, m);
    for (i, h) in cols.iter().enumerate() {
        if i == k {
            continue;
        }
        for a in 0..m {
            for b in 0..m {
                r[(a, b)] += h[a] * h[b].conj() * snr[i];
            }
        }
    }
    let hk = nalgebra::DVector::from_column_slice(&cols[k]);
    let chol = r.cholesky().expect("identity-regularized covariance is positive definite");
    let x = chol.solve(&hk);
    snr[k] * hk.dotc(&x).re
}

/// MMSE SINR of every user. Uses the `K × K` Gram form when there are fewer
/// users than antennas and the antenna-domain form otherwise.
pub fn mmse_sinr_all(cols: &[Vec<Complex64>], snr: &[f64]) -> Vec<f64> {
    let n = cols.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cols[0].len();
    if n < m {
        // γ_k = 1 / [(I + D^½ HᴴH D^½)⁻¹]_kk − 1
        let s: Vec<f64> = snr.iter().map(|p| p.sqrt()).collect();
        let mut a = DMatrix::<Complex64>::identity(n, n);
        for i in 0..n {
            for j in i..n {
                let g = inner(&cols[i], &cols[j]) * (s[i] * s[j]);
                a[(i, j)] += g;
                if i != j {
                    a[(j, i)] += g.conj();
                }
            }
        }
        let inv = a
            .cholesky()
            .expect("identity-regularized Gram matrix is positive definite")
            .inverse();
        (0..n).map(|k| (1.0 / inv[(k, k)].re - 1.0).max(0.0)).collect()
    } else {
        // t_k = P̄_k h_kᴴ R⁻¹ h_k with R including user k; γ_k = t_k / (1 − t_k)
        let mut r = DMatrix::<Complex64>::identity(m, m);
        for (i, h) in cols.iter().enumerate() {
            for a in 0..m {
                for b in 0..m {
                    r[(a, b)] += h[a] * h[b].conj() * snr[i];
                }
            }
        }
        let chol = r.cholesky().expect("identity-regularized covariance is positive definite");
        (0..n)
            .map(|k| {
                let hk = nalgebra::DVector::from_column_slice(&cols[k]);
                let t = snr[k] * hk.dotc(&chol.solve(&hk)).re;
                (t / (1.0 - t)).max(0.0)
            })
            .collect()
    }
}
