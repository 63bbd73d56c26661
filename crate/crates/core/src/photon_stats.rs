//! Photon-pair correlations from time stamps, and the statistics of Poisson
//! mixtures of emitters.

use std::io::{self, Write};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::output::fmt_sig;

/// Default histogram bin width in units of the inverse reference rate.
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;
/// Default largest delay.
pub const DEFAULT_TAU_MAX: f64 = 20.0;

/// Binned `g²(τ)` estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub tau_bins: Vec<f64>,
    pub g2_values: Vec<f64>,
    pub counts: Vec<u64>,
    /// Poisson standard error of each bin.
    pub sigma: Vec<f64>,
    pub bin_width: f64,
    pub total_time: f64,
    pub mean_rate: f64,
    pub total_photons: u64,
}

impl CorrelationEstimate {
    /// `g²` of the first bin, the reported `g²(0)`.
    pub fn g2_zero(&self) -> f64 {
        self.g2_values[0]
    }

    pub fn g2_zero_sigma(&self) -> f64 {
        self.sigma[0]
    }

    pub fn n_bins(&self) -> usize {
        self.tau_bins.len()
    }

    /// All-zero estimate on the standard grid for a realization with fewer
    /// than two photons; it carries its rate but no pair information.
    pub fn empty(photons: u64, duration: f64, bin_width: f64, tau_max: f64) -> Result<Self> {
        let n = bin_count(bin_width, tau_max)?;
        Ok(CorrelationEstimate {
            tau_bins: bin_centers(bin_width, n),
            g2_values: vec![0.0; n],
            counts: vec![0; n],
            sigma: vec![0.0; n],
            bin_width,
            total_time: duration,
            mean_rate: photons as f64 / duration,
            total_photons: photons,
        })
    }

    /// Writes `tau,g2,counts,sigma` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "tau,g2,counts,sigma")?;
        for k in 0..self.n_bins() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_sig(self.tau_bins[k], 12),
                fmt_sig(self.g2_values[k], 12),
                self.counts[k],
                fmt_sig(self.sigma[k], 12)
            )?;
        }
        Ok(())
    }
}

fn bin_count(bin_width: f64, tau_max: f64) -> Result<usize> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::param("bin_width", "must be positive"));
    }
    if !(tau_max.is_finite() && tau_max >= bin_width) {
        return Err(Error::param("tau_max", "must be at least one bin width"));
    }
    let ratio = tau_max / bin_width;
    let rounded = ratio.round();
    let n = if (ratio - rounded).abs() < 1e-9 * rounded {
        rounded
    } else {
        ratio.ceil()
    };
    Ok(n as usize)
}

fn bin_centers(bin_width: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| (k as f64 + 0.5) * bin_width).collect()
}

/// Adds all ordered pairs `i < j` with `t_j − t_i < n·bin_width` to `counts`.
fn accumulate_pairs(times: &[f64], bin_width: f64, counts: &mut [u64]) {
    let n = counts.len();
    let reach = n as f64 * bin_width;
    for (i, &ti) in times.iter().enumerate() {
        for &tj in &times[i + 1..] {
            let sep = tj - ti;
            if sep >= reach {
                break;
            }
            let k = (sep / bin_width) as usize;
            if k < n {
                counts[k] += 1;
            }
        }
    }
}

fn finish(
    counts: Vec<u64>,
    bin_width: f64,
    total_time: f64,
    total_photons: u64,
) -> CorrelationEstimate {
    let n = counts.len();
    let rate = total_photons as f64 / total_time;
    let norm = rate * rate * total_time * bin_width;
    let g2_values = counts.iter().map(|&c| c as f64 / norm).collect();
    let sigma = counts.iter().map(|&c| (c as f64).sqrt() / norm).collect();
    CorrelationEstimate {
        tau_bins: bin_centers(bin_width, n),
        g2_values,
        counts,
        sigma,
        bin_width,
        total_time,
        mean_rate: rate,
        total_photons,
    }
}

/// Histogram of photon-pair delays, normalised so an uncorrelated stream
/// gives 1 in every bin: `g²(τ_k) = C_k / (R² T Δτ)` with `R = N/T`.
pub fn estimate_g2(traj: &Trajectory, bin_width: f64, tau_max: f64) -> Result<CorrelationEstimate> {
    concat_g2(std::slice::from_ref(traj), bin_width, tau_max)
}

/// Correlation of several trajectories appended one after another. Pairs are
/// only counted within a segment; counts, durations and photon numbers are
/// summed and normalised by the global mean rate.
pub fn concat_g2(trajs: &[Trajectory], bin_width: f64, tau_max: f64) -> Result<CorrelationEstimate> {
    if trajs.is_empty() {
        return Err(Error::EmptyInput("no trajectories to correlate"));
    }
    let n = bin_count(bin_width, tau_max)?;
    let photons: usize = trajs.iter().map(Trajectory::len).sum();
    if photons < 2 {
        return Err(Error::InsufficientPhotons {
            needed: 2,
            found: photons,
        });
    }
    let mut counts = vec![0u64; n];
    for t in trajs {
        accumulate_pairs(&t.times(), bin_width, &mut counts);
    }
    let total_time: f64 = trajs.iter().map(Trajectory::duration).sum();
    Ok(finish(counts, bin_width, total_time, photons as u64))
}

/// `g²_N(0) = (N − 1)/N` for `N` independent emitters.
pub fn g2_zero_fixed_n(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::param("n", "atom number must be at least 1"));
    }
    Ok((n as f64 - 1.0) / n as f64)
}

/// `P_μ(n) = μⁿ e^{−μ} / n!`.
pub fn poisson_weight(mu: f64, n: u32) -> f64 {
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if n > 170 || mu > 500.0 {
        let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        return (n as f64 * mu.ln() - mu - ln_fact).exp();
    }
    (1..=n).fold((-mu).exp(), |p, k| p * mu / k as f64)
}

/// Atom-number distribution and per-`N` emission rates `R_N`, `N = 1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub mu: f64,
    pub n_max: u32,
    /// `rates[N − 1] = R_N`.
    pub rates: Vec<f64>,
    /// `weights[N − 1] = P_μ(N)`.
    pub weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(mu: f64, rates: Vec<f64>) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::param("mu", "must be non-negative"));
        }
        if rates.is_empty() {
            return Err(Error::param("rates", "need at least R_1"));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::param("rates", "must be finite and non-negative"));
        }
        let n_max = rates.len() as u32;
        let weights = (1..=n_max).map(|n| poisson_weight(mu, n)).collect();
        Ok(MixtureSpec {
            mu,
            n_max,
            rates,
            weights,
        })
    }

    /// Non-interacting emitters, `R_N = N·R₁`.
    pub fn independent(mu: f64, r1: f64, n_max: u32) -> Result<Self> {
        Self::new(mu, (1..=n_max).map(|n| n as f64 * r1).collect())
    }
}

/// Intensity-weighted mixture `Σ g²_N(0) P(N) R_N / Σ P(N) R_N`.
pub fn mixture_g2_zero(spec: &MixtureSpec, g2_per_n: &[f64]) -> Result<f64> {
    if g2_per_n.len() != spec.rates.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.rates.len(),
            found: g2_per_n.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((g, p), r) in g2_per_n.iter().zip(&spec.weights).zip(&spec.rates) {
        num += g * p * r;
        den += p * r;
    }
    if den <= 0.0 {
        return Err(Error::ZeroRates);
    }
    Ok(num / den)
}

/// Total emission rate normalised to the single-emitter rate,
/// `(1/R₁) Σ P(N) R_N`.
pub fn brightness(spec: &MixtureSpec) -> Result<f64> {
    let r1 = spec.rates[0];
    if r1 <= 0.0 {
        return Err(Error::param("rates", "R_1 must be positive"));
    }
    Ok(spec
        .weights
        .iter()
        .zip(&spec.rates)
        .map(|(p, r)| p * r)
        .sum::<f64>()
        / r1)
}

/// `⟨N(N−1)⟩ / ⟨N⟩²` of the truncated atom-number distribution: the
/// photon-number-agnostic estimate that ignores how many photons each
/// configuration emits. Equals 1 for an untruncated Poisson law.
pub fn factorial_moment_g2_zero(mu: f64, n_max: u32) -> f64 {
    let (mut m1, mut m2) = (0.0, 0.0);
    for n in 1..=n_max {
        let p = poisson_weight(mu, n);
        m1 += p * n as f64;
        m2 += p * (n as f64) * (n as f64 - 1.0);
    }
    if m1 == 0.0 {
        0.0
    } else {
        m2 / (m1 * m1)
    }
}

/// Per-bin average of `g²` curves weighted by each realization's mean rate.
/// The combined mean rate is the duration-weighted mean of the inputs.
pub fn rate_weighted_average(estimates: &[CorrelationEstimate]) -> Result<CorrelationEstimate> {
    let first = estimates
        .first()
        .ok_or(Error::EmptyInput("no correlation estimates to average"))?;
    let n = first.n_bins();
    for e in &estimates[1..] {
        if e.n_bins() != n || e.bin_width != first.bin_width {
            return Err(Error::GridMismatch(format!(
                "{} bins of {} vs {} bins of {}",
                e.n_bins(),
                e.bin_width,
                n,
                first.bin_width
            )));
        }
    }
    let weight_sum: f64 = estimates.iter().map(|e| e.mean_rate).sum();
    if weight_sum <= 0.0 {
        return Err(Error::ZeroRates);
    }
    let mut g2 = vec![0.0; n];
    let mut var = vec![0.0; n];
    let mut counts = vec![0u64; n];
    for e in estimates {
        let w = e.mean_rate / weight_sum;
        for k in 0..n {
            g2[k] += w * e.g2_values[k];
            var[k] += (w * e.sigma[k]).powi(2);
            counts[k] += e.counts[k];
        }
    }
    let total_time: f64 = estimates.iter().map(|e| e.total_time).sum();
    let mean_rate = estimates.iter().map(|e| e.mean_rate * e.total_time).sum::<f64>() / total_time;
    Ok(CorrelationEstimate {
        tau_bins: first.tau_bins.clone(),
        g2_values: g2,
        counts,
        sigma: var.into_iter().map(f64::sqrt).collect(),
        bin_width: first.bin_width,
        total_time,
        mean_rate,
        total_photons: estimates.iter().map(|e| e.total_photons).sum(),
    })
}
