//! Subsystem engineer best response.
//!
//! The expected payoff `psi1 - c e + psi2 Phi((a e - psi3) / sigma)` is a
//! sigmoid minus a line and is not concave on `[0, 1]`. Its derivative
//! `-c + (psi2 a / sigma) phi(z)` vanishes at `z = +-zbar`; only `+zbar` can be
//! a local maximum. The global maximizer is therefore one of `0`, `1`, or the
//! `+zbar` point, and [`best_response_effort`] compares all three.

use crate::error::Result;
use crate::model::{check_effort, std_normal_cdf, AgentParams, Contract, EffortSolution};
use crate::optim::brent_minimize;
use crate::scalar::Scalar;

/// Payoff difference treated as a tie; ties go to the larger effort.
pub const TIE_TOLERANCE: f64 = 1e-12;

const REFINE_HALF_WIDTH: f64 = 1e-4;
const REFINE_TOLERANCE: f64 = 1e-10;
const REFINE_MAX_ITER: usize = 200;

#[inline]
fn payoff_unchecked<T: Scalar>(e: T, contract: &Contract<T>, agent: &AgentParams<T>) -> T {
    contract.psi1 - agent.c * e
        + contract.psi2 * std_normal_cdf((agent.a * e - contract.psi3) / agent.sigma)
}

/// Closed-form expected payoff of an agent exerting effort `e`.
pub fn expected_agent_payoff<T: Scalar>(
    e: T,
    contract: &Contract<T>,
    agent: &AgentParams<T>,
) -> Result<T> {
    check_effort(e)?;
    Ok(payoff_unchecked(e, contract, agent))
}

/// Probability that the bonus is paid at effort `e`.
pub fn bonus_probability<T: Scalar>(e: T, contract: &Contract<T>, agent: &AgentParams<T>) -> T {
    std_normal_cdf((agent.a * e - contract.psi3) / agent.sigma)
}

/// Positive root `zbar` of `phi(z) = c sigma / (psi2 a)`, if one exists.
pub fn interior_z<T: Scalar>(contract: &Contract<T>, agent: &AgentParams<T>) -> Option<T> {
    if contract.psi2 <= T::zero() {
        return None;
    }
    let ratio = agent.c * agent.sigma * T::TAU().sqrt() / (contract.psi2 * agent.a);
    if ratio < T::one() {
        Some((-T::lit(2.0) * ratio.ln()).sqrt())
    } else {
        None
    }
}

/// Efforts that can be the global maximizer: the endpoints plus the clamped
/// interior local maximum when it exists.
pub fn stationary_candidates<T: Scalar>(contract: &Contract<T>, agent: &AgentParams<T>) -> Vec<T> {
    let mut out = vec![T::zero(), T::one()];
    if let Some(z) = interior_z(contract, agent) {
        // clamping into the effort domain happens here and nowhere else
        let e = ((contract.psi3 + agent.sigma * z) / agent.a).max(T::zero()).min(T::one());
        if e != T::zero() && e != T::one() {
            out.push(e);
        }
    }
    out
}

/// Global maximizer of the expected payoff over `[0, 1]`.
pub fn best_response_effort<T: Scalar>(
    contract: &Contract<T>,
    agent: &AgentParams<T>,
) -> EffortSolution<T> {
    let candidates = stationary_candidates(contract, agent);
    let tie = T::lit(TIE_TOLERANCE);

    let mut best_e = T::zero();
    let mut best_v = T::neg_infinity();
    let mut consider = |e: T, v: T| {
        if v > best_v + tie || ((v - best_v).abs() <= tie && e > best_e) {
            best_e = e;
            best_v = v;
        }
    };

    for &e in &candidates {
        let v = payoff_unchecked(e, contract, agent);
        consider(e, v);
        if e > T::zero() && e < T::one() {
            let w = T::lit(REFINE_HALF_WIDTH);
            let lo = (e - w).max(T::zero());
            let hi = (e + w).min(T::one());
            let (er, neg) = brent_minimize(
                |x| -payoff_unchecked(x, contract, agent),
                lo,
                hi,
                T::lit(REFINE_TOLERANCE),
                REFINE_MAX_ITER,
            );
            // only adopt the refined point on a strict improvement
            if -neg > v {
                consider(er, -neg);
            }
        }
    }

    EffortSolution {
        effort: best_e,
        expected_payoff: best_v,
        candidates,
    }
}
