//! Domain types and the closed-form building blocks of the model: quality,
//! cost, transfer, system value, and the standard normal distribution.
//!
//! Everything here is dimensionless: quality is measured in units of the
//! true requirement and money in units of the system value. Physical units
//! only appear in [`crate::calibration`].

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

fn check_positive<T: Scalar>(field: &'static str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            field,
            value: v.to_f64_lossy(),
            reason: "must be finite and > 0",
        })
    }
}

fn check_nonnegative<T: Scalar>(field: &'static str, v: T) -> Result<()> {
    if v.is_finite() && v >= T::zero() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            field,
            value: v.to_f64_lossy(),
            reason: "must be finite and >= 0",
        })
    }
}

/// A subsystem engineer: productivity `a`, quality noise `sigma`, opportunity
/// cost per unit effort `c`, and the true requirement `r` on their subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams<T> {
    pub a: T,
    pub sigma: T,
    pub c: T,
    pub r: T,
}

impl<T: Scalar> AgentParams<T> {
    pub fn new(a: T, sigma: T, c: T, r: T) -> Result<Self> {
        let p = Self { a, sigma, c, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("a", self.a)?;
        check_positive("sigma", self.sigma)?;
        check_positive("c", self.c)?;
        check_positive("r", self.r)
    }
}

/// Requirement-based contract: participation payment `psi1`, bonus `psi2`
/// paid when quality reaches the passed-down requirement `psi3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contract<T> {
    pub psi1: T,
    pub psi2: T,
    pub psi3: T,
}

impl<T: Scalar> Contract<T> {
    pub fn new(psi1: T, psi2: T, psi3: T) -> Result<Self> {
        let k = Self { psi1, psi2, psi3 };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonnegative("psi1", self.psi1)?;
        check_nonnegative("psi2", self.psi2)?;
        check_nonnegative("psi3", self.psi3)
    }

    pub fn to_array(self) -> [T; 3] {
        [self.psi1, self.psi2, self.psi3]
    }

    pub(crate) fn from_slice(v: &[T]) -> Self {
        Self {
            psi1: v[0],
            psi2: v[1],
            psi3: v[2],
        }
    }
}

/// The systems engineer's problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario<T> {
    pub v0: T,
    pub agents: Vec<AgentParams<T>>,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(v0: T, agents: Vec<AgentParams<T>>) -> Result<Self> {
        let s = Self { v0, agents };
        s.validate()?;
        Ok(s)
    }

    /// `v0 = 0` is accepted: it is the degenerate "worthless system" case.
    pub fn validate(&self) -> Result<()> {
        check_nonnegative("v0", self.v0)?;
        if self.agents.is_empty() {
            return Err(ModelError::InvalidParameter {
                field: "agents",
                value: 0.0,
                reason: "need at least one agent",
            });
        }
        self.agents.iter().try_for_each(AgentParams::validate)
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }
}

/// Agent best response to a contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortSolution<T> {
    pub effort: T,
    pub expected_payoff: T,
    pub candidates: Vec<T>,
}

/// Outcome of the contract optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult<T> {
    pub contracts: Vec<Contract<T>>,
    pub efforts: Vec<T>,
    pub principal_payoff: T,
    pub participation_slacks: Vec<T>,
    pub n_restarts_used: usize,
    pub converged: bool,
}

/// `1 / sqrt(2 pi)`
fn inv_sqrt_2pi<T: Scalar>() -> T {
    T::one() / (T::TAU()).sqrt()
}

/// Standard normal CDF, evaluated through `erfc` so both tails keep full
/// relative precision.
pub fn std_normal_cdf<T: Scalar>(x: T) -> T {
    T::lit(0.5) * (-x * T::FRAC_1_SQRT_2()).erfc()
}

/// Standard normal density.
pub fn std_normal_pdf<T: Scalar>(x: T) -> T {
    inv_sqrt_2pi::<T>() * (-T::lit(0.5) * x * x).exp()
}

/// Unit step with `heaviside(0) = 1`.
pub fn heaviside<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

/// Payment to an agent who delivers quality `q` under `contract`.
pub fn transfer<T: Scalar>(q: T, contract: &Contract<T>) -> T {
    contract.psi1 + contract.psi2 * heaviside(q - contract.psi3)
}

pub(crate) fn check_effort<T: Scalar>(e: T) -> Result<()> {
    if e >= T::zero() && e <= T::one() {
        Ok(())
    } else {
        Err(ModelError::EffortOutOfRange(e.to_f64_lossy()))
    }
}

/// Realized quality `a e + sigma xi` for a standard normal draw `xi`.
pub fn quality<T: Scalar>(e: T, xi: T, agent: &AgentParams<T>) -> Result<T> {
    check_effort(e)?;
    Ok(agent.a * e + agent.sigma * xi)
}

/// Linear opportunity cost of effort.
pub fn effort_cost<T: Scalar>(e: T, agent: &AgentParams<T>) -> T {
    agent.c * e
}

/// `V0` if every subsystem meets its true requirement, otherwise zero.
pub fn system_value<T: Scalar>(qualities: &[T], scenario: &Scenario<T>) -> Result<T> {
    if qualities.len() != scenario.n_agents() {
        return Err(ModelError::LengthMismatch {
            expected: scenario.n_agents(),
            got: qualities.len(),
        });
    }
    let met = qualities
        .iter()
        .zip(&scenario.agents)
        .all(|(&q, ag)| heaviside(q - ag.r) == T::one());
    Ok(if met { scenario.v0 } else { T::zero() })
}

/// Agent payoff for one state of nature: transfer minus effort cost.
pub fn agent_realized_payoff<T: Scalar>(
    e: T,
    xi: T,
    contract: &Contract<T>,
    agent: &AgentParams<T>,
) -> Result<T> {
    let q = quality(e, xi, agent)?;
    Ok(transfer(q, contract) - effort_cost(e, agent))
}
