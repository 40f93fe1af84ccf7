use std::f64::consts::PI;

use num_complex::Complex64;

use super::RecoveryConfig;
use crate::error::{invalid, CsiError, Result};
use crate::linalg::{fro_norm_sq, norm_sq, CMat, CVec};
use crate::report::{Estimate, EstimateReport, Method, MixtureFit, TraceRow};

const WEIGHT_FLOOR: f64 = 1e-12;
const VARIANCE_FLOOR: f64 = 1e-12;
const INIT_SNR: f64 = 100.0;
const DIVERGENCE_WINDOW: usize = 5;
const DIVERGENCE_GROWTH: f64 = 10.0;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Prior {
    Mixture,
    BernoulliGaussian,
}

#[derive(Clone, Debug)]
struct Params {
    weights: Vec<f64>,
    variances: Vec<f64>,
    noise: f64,
}

/// Per-coefficient posterior summary plus the EM sufficient statistics.
struct Denoised {
    mean: CVec,
    var: Vec<f64>,
    mass: Vec<f64>,
    energy: Vec<f64>,
}

/// Column-wise GAMP with a Gaussian-mixture prior whose weights, slab variances and noise
/// variance are learned by EM. Component 0 is a fixed narrow spike.
pub fn gm_amp_em_recover(y: &CMat, pilots: &CMat, cfg: &RecoveryConfig) -> Result<EstimateReport> {
    run(y, pilots, cfg, Prior::Mixture, Method::GmAmpEm)
}

/// Bernoulli–Gaussian special case (exact zero spike, one slab) with closed-form denoiser.
pub fn bg_amp_em_recover(y: &CMat, pilots: &CMat, cfg: &RecoveryConfig) -> Result<EstimateReport> {
    run(y, pilots, cfg, Prior::BernoulliGaussian, Method::BgAmpEm)
}

fn run(y: &CMat, pilots: &CMat, cfg: &RecoveryConfig, prior: Prior, method: Method) -> Result<EstimateReport> {
    cfg.validate()?;
    let (tau, m) = y.shape();
    if pilots.nrows() != tau {
        return Err(invalid(format!("pilot rows {} != measurement rows {tau}", pilots.nrows())));
    }
    let n = pilots.ncols();
    let a2 = fro_norm_sq(pilots);
    if a2 == 0.0 {
        return Err(invalid("pilot matrix is zero"));
    }
    let mut est = CMat::zeros(n, m);
    let mut fits = Vec::with_capacity(m);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = true;
    for col in 0..m {
        let yc: CVec = y.column(col).into_owned();
        let out = solve_column(&yc, pilots, a2, cfg, prior)?;
        est.set_column(col, &out.x);
        iterations = iterations.max(out.iterations);
        converged &= out.converged;
        if col == 0 {
            trace = out.trace;
        }
        fits.push(MixtureFit { weights: out.params.weights, variances: out.params.variances, noise_var: out.params.noise });
    }
    let residual = fro_norm_sq(&(y - pilots * &est)).sqrt();
    let mean_noise = fits.iter().map(|f| f.noise_var).sum::<f64>() / m.max(1) as f64;
    let mut rep = EstimateReport::new(Estimate::Matrix(est), method, residual);
    rep.iterations = Some(iterations);
    rep.converged = converged;
    rep.noise_var = Some(mean_noise);
    rep.mixture = Some(fits);
    rep.trace = trace;
    Ok(rep)
}

struct ColumnOut {
    x: CVec,
    params: Params,
    iterations: usize,
    converged: bool,
    trace: Vec<TraceRow>,
}

fn init_params(y: &CVec, a2: f64, n: usize, cfg: &RecoveryConfig, prior: Prior) -> Params {
    let tau = y.len();
    let ey = norm_sq(y);
    let delta = tau as f64 / n as f64;
    let lambda = (0.5 * delta).clamp(1e-3, 0.5);
    let noise = ey / (tau as f64 * (INIT_SNR + 1.0));
    let slab = ((ey - tau as f64 * noise) / (a2 * lambda)).max(VARIANCE_FLOOR);
    match prior {
        Prior::BernoulliGaussian => Params { weights: vec![1.0 - lambda, lambda], variances: vec![0.0, slab], noise },
        Prior::Mixture => {
            let slabs = cfg.gm_components - 1;
            let mut weights = vec![1.0 - lambda];
            let mut variances = vec![cfg.gm_spike_variance];
            for c in 0..slabs {
                weights.push(lambda / slabs as f64);
                let spread = c as f64 - (slabs as f64 - 1.0) / 2.0;
                variances.push(slab * 4f64.powf(spread));
            }
            Params { weights, variances, noise }
        }
    }
}

fn solve_column(y: &CVec, a: &CMat, a2: f64, cfg: &RecoveryConfig, prior: Prior) -> Result<ColumnOut> {
    let (tau, n) = a.shape();
    if norm_sq(y) == 0.0 {
        let mut weights = vec![0.0; cfg.gm_components.max(2)];
        weights[0] = 1.0;
        let mut variances = vec![0.0; weights.len()];
        variances[0] = if prior == Prior::Mixture { cfg.gm_spike_variance } else { 0.0 };
        return Ok(ColumnOut {
            x: CVec::zeros(n),
            params: Params { weights, variances, noise: 0.0 },
            iterations: 0,
            converged: true,
            trace: Vec::new(),
        });
    }
    let d = cfg.amp_damping;
    let dc = Complex64::new(d, 0.0);
    let keep = Complex64::new(1.0 - d, 0.0);
    let mut params = init_params(y, a2, n, cfg, prior);
    if let Some(v) = cfg.amp_noise_var {
        params.noise = v;
    }
    let y_energy = norm_sq(y);
    let noise_floor = VARIANCE_FLOOR * y_energy / tau as f64;
    let prior_var: f64 = params.weights.iter().zip(&params.variances).map(|(w, v)| w * v).sum();
    let mut x = CVec::zeros(n);
    let mut nu_x = vec![prior_var; n];
    let mut s_hat = CVec::zeros(tau);
    let mut nu_s = 0.0;
    let mut energies: Vec<f64> = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iterations {
        iterations = it;
        let nu_p = a2 / tau as f64 * (nu_x.iter().sum::<f64>() / n as f64);
        let p_hat = a * &x - &s_hat * Complex64::new(nu_p, 0.0);
        let denom = nu_p + params.noise;
        let s_new = (y - &p_hat) / Complex64::new(denom, 0.0);
        s_hat = &s_new * dc + &s_hat * keep;
        nu_s = if it == 1 { 1.0 / denom } else { d / denom + (1.0 - d) * nu_s };
        let nu_r = n as f64 / (a2 * nu_s);
        let r_hat = &x + a.ad_mul(&s_hat) * Complex64::new(nu_r, 0.0);

        let den = match prior {
            Prior::Mixture => denoise_mixture(&r_hat, nu_r, &params),
            Prior::BernoulliGaussian => denoise_bg(&r_hat, nu_r, &params),
        };
        let x_old = x.clone();
        x = &den.mean * dc + &x * keep;
        nu_x = den.var.iter().zip(&nu_x).map(|(new, old)| d * new + (1.0 - d) * old).collect();
        update_prior(&mut params, &den.mass, &den.energy, n);

        if cfg.amp_noise_var.is_none() {
            // noise EM from the posterior of z = A·x under the current output channel
            let gain = nu_p / (nu_p + params.noise);
            let nu_z = nu_p * params.noise / (nu_p + params.noise);
            let z_hat = &p_hat + (y - &p_hat) * Complex64::new(gain, 0.0);
            params.noise = ((norm_sq(&(y - z_hat)) + tau as f64 * nu_z) / tau as f64).max(noise_floor);
        }

        let energy = norm_sq(&(y - a * &x));
        trace.push(TraceRow { iteration: it, objective: params.noise, residual: energy.sqrt(), merit: nu_r, penalty: d });
        if energies.len() >= DIVERGENCE_WINDOW {
            // growth back up to the noise level is not divergence
            let floor = (tau as f64 * params.noise).min(y_energy);
            let past = energies[energies.len() - DIVERGENCE_WINDOW].max(floor);
            if energy > DIVERGENCE_GROWTH * past {
                return Err(CsiError::Divergence { iteration: it, growth: energy / past });
            }
        }
        energies.push(energy);
        if !energy.is_finite() {
            return Err(CsiError::Divergence { iteration: it, growth: f64::INFINITY });
        }
        let change = norm_sq(&(&x - &x_old)).sqrt();
        if change <= cfg.tolerance * norm_sq(&x).sqrt().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(ColumnOut { x, params, iterations, converged, trace })
}

fn denoise_mixture(r: &CVec, nu_r: f64, params: &Params) -> Denoised {
    let n = r.len();
    let c = params.weights.len();
    let mut out = Denoised { mean: CVec::zeros(n), var: vec![0.0; n], mass: vec![0.0; c], energy: vec![0.0; c] };
    let mut logl = vec![0.0; c];
    let mut beta = vec![0.0; c];
    for i in 0..n {
        let ri = r[i];
        let r2 = ri.norm_sqr();
        for k in 0..c {
            let tot = params.variances[k] + nu_r;
            logl[k] = params.weights[k].ln() - (PI * tot).ln() - r2 / tot;
        }
        let peak = logl.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for k in 0..c {
            beta[k] = (logl[k] - peak).exp();
            z += beta[k];
        }
        let mut mean = Complex64::new(0.0, 0.0);
        let mut second = 0.0;
        for k in 0..c {
            beta[k] /= z;
            let v = params.variances[k];
            let g = v / (v + nu_r);
            let mu = ri * g;
            let eta = g * nu_r;
            mean += mu * beta[k];
            let e = mu.norm_sqr() + eta;
            second += beta[k] * e;
            out.mass[k] += beta[k];
            out.energy[k] += beta[k] * e;
        }
        out.mean[i] = mean;
        out.var[i] = (second - mean.norm_sqr()).max(0.0);
    }
    out
}

fn denoise_bg(r: &CVec, nu_r: f64, params: &Params) -> Denoised {
    let n = r.len();
    let lambda = params.weights[1];
    let v = params.variances[1];
    let mut out = Denoised { mean: CVec::zeros(n), var: vec![0.0; n], mass: vec![0.0; 2], energy: vec![0.0; 2] };
    let g = v / (v + nu_r);
    let eta = g * nu_r;
    for i in 0..n {
        let ri = r[i];
        let r2 = ri.norm_sqr();
        // log of (inactive likelihood / active likelihood)
        let log_ratio = ((1.0 - lambda) / lambda).ln() + ((v + nu_r) / nu_r).ln() - r2 * (1.0 / nu_r - 1.0 / (v + nu_r));
        let pi = 1.0 / (1.0 + log_ratio.exp());
        let mu = ri * g;
        let e = mu.norm_sqr() + eta;
        let mean = mu * pi;
        out.mean[i] = mean;
        out.var[i] = (pi * e - mean.norm_sqr()).max(0.0);
        out.mass[0] += 1.0 - pi;
        out.mass[1] += pi;
        out.energy[1] += pi * e;
    }
    out
}

fn update_prior(params: &mut Params, mass: &[f64], energy: &[f64], n: usize) {
    let mut total = 0.0;
    for (w, m) in params.weights.iter_mut().zip(mass) {
        *w = (m / n as f64).max(WEIGHT_FLOOR);
        total += *w;
    }
    params.weights.iter_mut().for_each(|w| *w /= total);
    for k in 1..params.variances.len() {
        if mass[k] > 0.0 {
            params.variances[k] = (energy[k] / mass[k]).max(VARIANCE_FLOOR);
        }
    }
}
