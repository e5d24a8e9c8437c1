//! Plain Monte Carlo estimates of the model's expectations, used as an
//! independent check on the closed forms.
//!
//! Normal draws come from a counter-based stream: sample `s` reads ChaCha8
//! stream `s` (keyed by the seed) from word position zero and maps each 53-bit
//! uniform through the inverse normal CDF. A sample's draws therefore depend
//! only on `(seed, s)`, which makes the estimate independent of how samples
//! are split across threads. Means and variances are reduced per fixed-size
//! chunk with compensated sums and merged in chunk order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::agent::best_response_effort;
use crate::error::{ModelError, Result};
use crate::model::{agent_realized_payoff, heaviside, std_normal_cdf, quality, system_value, transfer, AgentParams, Contract, Scenario};
use crate::scalar::Scalar;

const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// `(analytic - mean) / std_error`; zero when both agree exactly.
    pub fn z_score(&self, analytic: f64) -> f64 {
        let d = analytic - self.mean;
        if d == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            d.signum() * f64::INFINITY
        } else {
            d / self.std_error
        }
    }

    pub fn agrees_with(&self, analytic: f64, n_std_errors: f64) -> bool {
        self.z_score(analytic).abs() <= n_std_errors
    }

    /// Like [`z_score`](Self::z_score) but against the estimator's exact
    /// standard error `population_sd / sqrt(n)`, with `rounding` added in
    /// quadrature.
    ///
    /// The sample standard error is zero when every draw lands on the same
    /// side of a threshold, which happens whenever the tail probability is
    /// below about `1 / n`; the exact one is not.
    pub fn z_score_exact(&self, analytic: f64, population_sd: f64, rounding: f64) -> f64 {
        let d = analytic - self.mean;
        let se = (population_sd * population_sd / self.n_samples as f64 + rounding * rounding).sqrt();
        if d == 0.0 {
            0.0
        } else if se == 0.0 {
            d.signum() * f64::INFINITY
        } else {
            d / se
        }
    }
}

/// Counter-based source of standard normal draws.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal: Normal::standard(),
        }
    }

    /// Fills `out` with the draws belonging to sample `index`.
    pub fn fill(&mut self, index: u64, out: &mut [f64]) {
        self.rng.set_stream(index);
        self.rng.set_word_pos(0);
        for x in out.iter_mut() {
            // (k + 0.5) / 2^53 lies strictly inside (0, 1)
            let k = self.rng.next_u64() >> 11;
            let u = (k as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
            *x = self.normal.inverse_cdf(u);
        }
    }
}

/// Neumaier compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let m2 = compensated_sum(values.iter().map(|&v| (v - mean) * (v - mean)));
        Self { n, mean, m2 }
    }

    /// Chan et al. pairwise merge.
    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Self {
            n,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * w,
        }
    }
}

/// Draws `n` samples of `integrand(xi)` where `xi` has `dim` normal entries.
pub fn estimate<F>(n: usize, dim: usize, seed: u64, integrand: F) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n < 2 {
        return Err(ModelError::TooFewSamples(n));
    }
    let n_chunks = n.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut stream = NormalStream::new(seed);
            let mut xi = vec![0.0; dim];
            let values: Vec<f64> = (lo..hi)
                .map(|s| {
                    stream.fill(s as u64, &mut xi);
                    integrand(&xi)
                })
                .collect();
            Moments::of(&values)
        })
        .collect();
    let total = parts.into_iter().fold(
        Moments {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        },
        Moments::merge,
    );
    let var = total.m2 / (n - 1) as f64;
    Ok(McEstimate {
        mean: total.mean,
        std_error: (var / n as f64).sqrt(),
        n_samples: n,
        seed,
    })
}

fn bernoulli_variance<T: Scalar>(p: T) -> T {
    p * (T::one() - p)
}

/// Standard deviation of an agent's realized payoff at effort `e`.
pub fn agent_payoff_sd<T: Scalar>(e: T, contract: &Contract<T>, agent: &AgentParams<T>) -> Result<T> {
    let p = crate::agent::bonus_probability(e, contract, agent);
    crate::model::quality(e, T::zero(), agent)?;
    Ok(contract.psi2 * bernoulli_variance(p).sqrt())
}

/// Standard deviation of `H(lambda + sigma xi)`.
pub fn phi_identity_sd(lambda: f64, sigma: f64) -> f64 {
    bernoulli_variance(std_normal_cdf(lambda / sigma)).sqrt()
}

/// Standard deviation of the systems engineer's realized payoff under
/// best-responding agents.
///
/// With `P` the all-requirements-met indicator and `B_i` the bonus
/// indicators, `Var = V0^2 Var P - 2 V0 sum psi2_i Cov(P, B_i) + sum psi2_i^2 Var B_i`,
/// using independence across agents.
pub fn principal_payoff_sd<T: Scalar>(contracts: &[Contract<T>], scenario: &Scenario<T>) -> Result<T> {
    let efforts = induced_efforts(contracts, scenario)?;
    let cdf = |e: T, threshold: T, ag: &AgentParams<T>| std_normal_cdf((ag.a * e - threshold) / ag.sigma);
    let met: Vec<T> = efforts
        .iter()
        .zip(&scenario.agents)
        .map(|(&e, ag)| cdf(e, ag.r, ag))
        .collect();
    let all_met = met.iter().fold(T::one(), |acc, &h| acc * h);

    let mut var = scenario.v0 * scenario.v0 * bernoulli_variance(all_met);
    for (i, ((k, ag), &e)) in contracts.iter().zip(&scenario.agents).zip(&efforts).enumerate() {
        let b = cdf(e, k.psi3, ag);
        let both = cdf(e, ag.r.max(k.psi3), ag);
        let others = met
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .fold(T::one(), |acc, (_, &h)| acc * h);
        let cov = others * both - all_met * b;
        var = var - T::lit(2.0) * scenario.v0 * k.psi2 * cov + k.psi2 * k.psi2 * bernoulli_variance(b);
    }
    Ok(var.max(T::zero()).sqrt())
}

/// Sampled expected payoff of an agent working at effort `e`.
pub fn simulate_expected_agent_payoff<T: Scalar>(
    e: T,
    contract: &Contract<T>,
    agent: &AgentParams<T>,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    // surfaces an out-of-range effort before sampling
    agent_realized_payoff(e, T::zero(), contract, agent)?;
    estimate(n, 1, seed, |xi| {
        agent_realized_payoff(e, T::lit(xi[0]), contract, agent)
            .map(Scalar::to_f64_lossy)
            .unwrap_or(f64::NAN)
    })
}

/// Realized outcome of one state of nature under best-responding agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw<T> {
    pub qualities: Vec<T>,
    pub value: T,
    pub transfers: Vec<T>,
    pub bonus_paid: Vec<bool>,
    pub requirement_met: Vec<bool>,
}

impl<T: Scalar> Draw<T> {
    pub fn principal_payoff(&self) -> T {
        self.transfers.iter().fold(self.value, |acc, &t| acc - t)
    }
}

/// Realizes one draw: independent `xi_i` per agent at the given efforts.
pub fn realize<T: Scalar>(
    contracts: &[Contract<T>],
    efforts: &[T],
    scenario: &Scenario<T>,
    xi: &[f64],
) -> Result<Draw<T>> {
    let n = scenario.n_agents();
    for len in [contracts.len(), efforts.len(), xi.len()] {
        if len != n {
            return Err(ModelError::LengthMismatch { expected: n, got: len });
        }
    }
    let qualities = efforts
        .iter()
        .zip(&scenario.agents)
        .zip(xi)
        .map(|((&e, ag), &x)| quality(e, T::lit(x), ag))
        .collect::<Result<Vec<T>>>()?;
    let value = system_value(&qualities, scenario)?;
    let transfers = qualities.iter().zip(contracts).map(|(&q, k)| transfer(q, k)).collect();
    let bonus_paid = qualities
        .iter()
        .zip(contracts)
        .map(|(&q, k)| heaviside(q - k.psi3) == T::one())
        .collect();
    let requirement_met = qualities
        .iter()
        .zip(&scenario.agents)
        .map(|(&q, ag)| heaviside(q - ag.r) == T::one())
        .collect();
    Ok(Draw {
        qualities,
        value,
        transfers,
        bonus_paid,
        requirement_met,
    })
}

/// Best-response efforts, one per agent.
pub fn induced_efforts<T: Scalar>(contracts: &[Contract<T>], scenario: &Scenario<T>) -> Result<Vec<T>> {
    if contracts.len() != scenario.n_agents() {
        return Err(ModelError::LengthMismatch {
            expected: scenario.n_agents(),
            got: contracts.len(),
        });
    }
    Ok(contracts
        .iter()
        .zip(&scenario.agents)
        .map(|(k, ag)| best_response_effort(k, ag).effort)
        .collect())
}

/// Sampled expected payoff of the systems engineer: `V(q*) - sum t_i(q_i*)`.
pub fn simulate_expected_principal_payoff<T: Scalar>(
    contracts: &[Contract<T>],
    scenario: &Scenario<T>,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    let efforts = induced_efforts(contracts, scenario)?;
    estimate(n, scenario.n_agents(), seed, |xi| {
        realize(contracts, &efforts, scenario, xi)
            .map(|d| d.principal_payoff().to_f64_lossy())
            .unwrap_or(f64::NAN)
    })
}

/// Sample mean of `H(lambda + sigma xi)`, which should equal `Phi(lambda / sigma)`.
pub fn verify_phi_identity(lambda: f64, sigma: f64, n: usize, seed: u64) -> Result<McEstimate> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(ModelError::InvalidParameter {
            field: "sigma",
            value: sigma,
            reason: "must be finite and > 0",
        });
    }
    estimate(n, 1, seed, |xi| heaviside(lambda + sigma * xi[0]))
}
