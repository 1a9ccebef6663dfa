//! Two-component univariate Gaussian mixture fitted by EM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 8;
const MAX_ITERATIONS: usize = 500;
const TOLERANCE: f64 = 1e-8;
const LN_SQRT_TAU: f64 = 0.918_938_533_204_672_8;

/// Fitted mixture, ordered so that `mu1 >= mu2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    pub mu1: f64,
    pub sigma1: f64,
    pub w1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub w2: f64,
    pub loglik: f64,
    pub iterations: usize,
    /// Log-likelihood after initialisation and after every EM iteration.
    #[serde(skip)]
    pub loglik_history: Vec<f64>,
}

impl GmmFit {
    /// `mu2 < mu1 - sigma1`: the darker component is clearly separated from
    /// the brighter one.
    pub fn separated(&self) -> bool {
        self.mu2 < self.mu1 - self.sigma1
    }
}

#[derive(Clone, Copy, Debug)]
struct Component {
    mean: f64,
    sigma: f64,
    weight: f64,
}

impl Component {
    #[inline]
    fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sigma;
        self.weight.ln() - self.sigma.ln() - LN_SQRT_TAU - 0.5 * z * z
    }
}

fn mean_sigma(xs: &[f64], floor: f64) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt().max(floor))
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// E-step: fills `resp` with the posterior of component 0 and returns the
/// log-likelihood.
fn expectation(samples: &[f64], comps: &[Component; 2], resp: &mut [f64]) -> f64 {
    let mut loglik = 0.0;
    for (r, &x) in resp.iter_mut().zip(samples) {
        let a = comps[0].log_density(x);
        let b = comps[1].log_density(x);
        let total = log_add(a, b);
        *r = (a - total).exp();
        loglik += total;
    }
    loglik
}

fn maximization(samples: &[f64], resp: &[f64], floor: f64) -> [Component; 2] {
    let n = samples.len() as f64;
    let mut out = [Component {
        mean: 0.0,
        sigma: 0.0,
        weight: 0.0,
    }; 2];
    for (c, comp) in out.iter_mut().enumerate() {
        let r = |i: usize| if c == 0 { resp[i] } else { 1.0 - resp[i] };
        let nk: f64 = (0..samples.len()).map(r).sum();
        let nk = nk.max(f64::MIN_POSITIVE);
        let mean = samples
            .iter()
            .enumerate()
            .map(|(i, x)| r(i) * x)
            .sum::<f64>()
            / nk;
        let var = samples
            .iter()
            .enumerate()
            .map(|(i, x)| r(i) * (x - mean).powi(2))
            .sum::<f64>()
            / nk;
        *comp = Component {
            mean,
            sigma: var.sqrt().max(floor),
            weight: nk / n,
        };
    }
    let w0 = out[0].weight.clamp(1e-12, 1.0 - 1e-12);
    out[0].weight = w0;
    out[1].weight = 1.0 - w0;
    out
}

/// Deterministic EM fit of two Gaussians.
///
/// Initialisation splits the sorted samples at the median; iteration stops
/// once the log-likelihood changes by less than `1e-8` or after 500 rounds.
pub fn fit_gmm2(samples: &[f64]) -> Result<GmmFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            actual: samples.len(),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[sorted.len() - 1] - sorted[0];
    if !(range > 0.0) {
        return Err(Error::DegenerateSamples);
    }
    let floor = 1e-6 * range;
    let (lower, upper) = sorted.split_at(sorted.len() / 2);
    let (m_lo, s_lo) = mean_sigma(lower, floor);
    let (m_hi, s_hi) = mean_sigma(upper, floor);
    let mut comps = [
        Component {
            mean: m_hi,
            sigma: s_hi,
            weight: 0.5,
        },
        Component {
            mean: m_lo,
            sigma: s_lo,
            weight: 0.5,
        },
    ];

    let mut resp = vec![0.0; samples.len()];
    let mut loglik = expectation(samples, &comps, &mut resp);
    let mut history = vec![loglik];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        comps = maximization(samples, &resp, floor);
        let next = expectation(samples, &comps, &mut resp);
        iterations += 1;
        history.push(next);
        let delta = (next - loglik).abs();
        loglik = next;
        if delta < TOLERANCE {
            break;
        }
    }

    if comps[1].mean > comps[0].mean {
        comps.swap(0, 1);
    }
    Ok(GmmFit {
        mu1: comps[0].mean,
        sigma1: comps[0].sigma,
        w1: comps[0].weight,
        mu2: comps[1].mean,
        sigma2: comps[1].sigma,
        w2: comps[1].weight,
        loglik,
        iterations,
        loglik_history: history,
    })
}
