//! Reference computations written straight from the signal model, sharing
//! no code with the library beyond its matrix container.

#![allow(dead_code)]

use rsma_core::{CMatrix, QuantizerProfile, Resolution, SeededRng, C};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

pub type Z = C<f64>;

/// A random system instance.
pub struct Instance {
    pub h: CMatrix<f64>,
    pub f: CMatrix<f64>,
    pub profile: QuantizerProfile<f64>,
    pub power: f64,
    pub noise: f64,
}

pub fn random_resolution(rng: &mut SeededRng) -> Resolution {
    match rng.uniform_int(1, 9) {
        9 => Resolution::Infinite,
        b => Resolution::Bits(b),
    }
}

/// N ≤ 6, K ≤ 4, resolutions in {1..8, ∞}, P spread over five decades.
pub fn random_instance(rng: &mut SeededRng) -> Instance {
    let n = rng.uniform_int(1, 6) as usize;
    let k = rng.uniform_int(1, 4) as usize;
    let dac = (0..n).map(|_| random_resolution(rng)).collect();
    let adc = (0..k).map(|_| random_resolution(rng)).collect();
    Instance {
        h: CMatrix::from_fn(n, k, |_, _| rng.complex_gaussian()),
        f: CMatrix::from_fn(n, k + 1, |_, _| rng.complex_gaussian()),
        profile: QuantizerProfile::new(dac, adc).unwrap(),
        power: 10f64.powf(rng.uniform(-1.0, 4.0)),
        noise: rng.uniform(0.1, 2.0),
    }
}

fn matmul(a: &[Vec<Z>], b: &[Vec<Z>]) -> Vec<Vec<Z>> {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..p).map(|j| (0..m).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

fn dense(m: &CMatrix<f64>) -> Vec<Vec<Z>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

fn adjoint(a: &[Vec<Z>]) -> Vec<Vec<Z>> {
    (0..a[0].len()).map(|j| (0..a.len()).map(|i| a[i][j].conj()).collect()).collect()
}

fn diag(v: &[f64]) -> Vec<Vec<Z>> {
    (0..v.len())
        .map(|i| (0..v.len()).map(|j| if i == j { Z::new(v[i], 0.0) } else { Z::new(0.0, 0.0) }).collect())
        .collect()
}

/// `x̄ᴴ M x`.
fn quad(x: &[Z], m: &[Vec<Z>]) -> Z {
    (0..x.len()).map(|i| (0..x.len()).map(|j| x[i].conj() * m[i][j] * x[j]).sum::<Z>()).sum()
}

pub struct Direct {
    pub common: Vec<f64>,
    pub private: Vec<f64>,
    /// `tr(E[x_q x_qᴴ]) / P`.
    pub power_ratio: f64,
    pub dac_cov: Vec<Vec<Z>>,
    pub adc_var: Vec<f64>,
}

/// SINRs from the received-signal decomposition: desired term over
/// interference, DAC noise seen through the channel, ADC noise and thermal
/// noise, each built from explicit covariance matrices.
pub fn direct_sinrs(inst: &Instance) -> Direct {
    let Instance { h, f, profile, power, noise } = inst;
    let (n, k) = (h.rows(), h.cols());
    let fd = dense(f);
    let phi_a = diag(profile.dac_alpha());
    let phi_ab: Vec<f64> = profile.dac_alpha().iter().zip(profile.dac_beta()).map(|(a, b)| a * b).collect();
    // E[x xᴴ] = P F Fᴴ
    let exx: Vec<Vec<Z>> = matmul(&fd, &adjoint(&fd))
        .into_iter()
        .map(|row| row.into_iter().map(|z| z * *power).collect())
        .collect();
    let rq = diag(&(0..n).map(|i| phi_ab[i] * exx[i][i].re).collect::<Vec<_>>());
    // E[x_q x_qᴴ] = Φ_α E[x xᴴ] Φ_α + R_q
    let exq = matmul(&matmul(&phi_a, &exx), &phi_a);
    let exq: Vec<Vec<Z>> = (0..n).map(|i| (0..n).map(|j| exq[i][j] + rq[i][j]).collect()).collect();
    let power_ratio = (0..n).map(|i| exq[i][i].re).sum::<f64>() / power;
    let phi_f = matmul(&phi_a, &fd);

    let mut common = Vec::new();
    let mut private = Vec::new();
    let mut adc_var = Vec::new();
    for u in 0..k {
        let hk: Vec<Z> = (0..n).map(|i| h[(i, u)]).collect();
        let a = profile.adc_alpha()[u];
        let b = profile.adc_beta()[u];
        let g: Vec<f64> = (0..=k)
            .map(|s| (0..n).map(|i| hk[i].conj() * phi_f[i][s]).sum::<Z>().norm_sqr())
            .collect();
        let dac_term = quad(&hk, &rq).re;
        let r_adc = a * b * (quad(&hk, &exq).re + noise);
        adc_var.push(r_adc);
        let qe = a * a * dac_term + r_adc;
        let iui_c: f64 = (1..=k).map(|s| power * a * a * g[s]).sum();
        let iui_p: f64 = (1..=k).filter(|&s| s != u + 1).map(|s| power * a * a * g[s]).sum();
        common.push(power * a * a * g[0] / (iui_c + qe + a * a * noise));
        private.push(power * a * a * g[u + 1] / (iui_p + qe + a * a * noise));
    }
    Direct {
        common,
        private,
        power_ratio,
        dac_cov: rq,
        adc_var,
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Normalized MSE of the optimal (Lloyd-Max) `b`-bit quantizer for a
/// unit-variance Gaussian, by Lloyd's fixed-point iteration.
pub fn lloyd_max_beta(bits: u32) -> f64 {
    let std = Normal::new(0.0, 1.0).unwrap();
    let levels = 1usize << bits;
    let mut c: Vec<f64> = (0..levels)
        .map(|i| std.inverse_cdf((i as f64 + 0.5) / levels as f64))
        .collect();
    let mut mse = f64::NAN;
    for _ in 0..200_000 {
        let mut t = vec![f64::NEG_INFINITY];
        t.extend(c.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        t.push(f64::INFINITY);
        let pdf = |x: f64| if x.is_finite() { std.pdf(x) } else { 0.0 };
        let mut next = Vec::with_capacity(levels);
        let mut signal = 0.0;
        for i in 0..levels {
            let p = std.cdf(t[i + 1]) - std.cdf(t[i]);
            let ci = (pdf(t[i]) - pdf(t[i + 1])) / p;
            signal += ci * ci * p;
            next.push(ci);
        }
        let new_mse = 1.0 - signal;
        let moved = c.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c = next;
        mse = new_mse;
        if moved < 1e-13 {
            break;
        }
    }
    mse
}

/// Composite Simpson on a uniform grid.
pub fn simpson(f: impl Fn(f64) -> Z, a: f64, b: f64, panels: usize) -> Z {
    let m = panels * 2;
    let step = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + step * i as f64) * w;
    }
    acc * (step / 3.0)
}

/// One-ring covariance of a ULA with `spacing` wavelengths, by Simpson's rule.
pub fn ula_covariance_oracle(n: usize, spacing: f64, aod: f64, spread: f64) -> Vec<Vec<Z>> {
    let two_pi = 2.0 * std::f64::consts::PI;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = spacing * (i as f64 - j as f64);
                    simpson(|x| Z::from_polar(1.0, -two_pi * x.cos() * d), aod - spread, aod + spread, 20_000)
                        / (2.0 * spread)
                })
                .collect()
        })
        .collect()
}

/// Central-difference gradient of `f` in real coordinates, packed as
/// `∂f/∂x + j ∂f/∂y` per entry.
pub fn fd_gradient(f: impl Fn(&[Z]) -> f64, w: &[Z], h: f64) -> Vec<Z> {
    let mut out = Vec::with_capacity(w.len());
    let mut p = w.to_vec();
    for i in 0..w.len() {
        let orig = p[i];
        p[i] = orig + Z::new(h, 0.0);
        let fp = f(&p);
        p[i] = orig - Z::new(h, 0.0);
        let fm = f(&p);
        let dx = (fp - fm) / (2.0 * h);
        p[i] = orig + Z::new(0.0, h);
        let fp = f(&p);
        p[i] = orig - Z::new(0.0, h);
        let fm = f(&p);
        let dy = (fp - fm) / (2.0 * h);
        p[i] = orig;
        out.push(Z::new(dx, dy));
    }
    out
}

pub fn vec_norm(v: &[Z]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn report(name: &str, pass: bool, detail: impl std::fmt::Display) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}
