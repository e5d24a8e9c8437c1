//! Systems engineer side: expected payoff under a contract vector,
//! participation, the contract optimization, and requirement sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{best_response_effort, bonus_probability};
use crate::error::{ModelError, Result};
use crate::model::{std_normal_cdf, AgentParams, Contract, Scenario, SolveResult};
use crate::optim::{compass_search, nelder_mead_box, Bounds, LocalMin};
use crate::scalar::Scalar;

/// Settings for [`optimize_contracts`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub n_restarts: usize,
    pub max_iterations: usize,
    pub feasibility_tolerance: f64,
    pub convergence_tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            n_restarts: 32,
            max_iterations: 2000,
            feasibility_tolerance: 1e-8,
            convergence_tolerance: 1e-9,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 {
            return Err(ModelError::InvalidParameter {
                field: "n_restarts",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        if self.max_iterations == 0 {
            return Err(ModelError::InvalidParameter {
                field: "max_iterations",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        for (field, v) in [
            ("feasibility_tolerance", self.feasibility_tolerance),
            ("convergence_tolerance", self.convergence_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidParameter {
                    field,
                    value: v,
                    reason: "must be finite and > 0",
                });
            }
        }
        Ok(())
    }
}

/// Payoff of the systems engineer as the passed-down requirement of one
/// agent is varied with everything else fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub agent_index: usize,
    pub grid: Vec<T>,
    pub payoffs: Vec<T>,
    pub efforts: Vec<T>,
    pub slacks: Vec<T>,
    pub fixed_contracts: Vec<Contract<T>>,
}

/// Everything induced by a contract vector once agents best-respond.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub payoff: T,
    pub efforts: Vec<T>,
    pub slacks: Vec<T>,
}

fn check_lengths<T>(contracts: &[Contract<T>], scenario: &Scenario<T>) -> Result<()> {
    if contracts.len() != scenario.agents.len() {
        return Err(ModelError::LengthMismatch {
            expected: scenario.agents.len(),
            got: contracts.len(),
        });
    }
    Ok(())
}

fn evaluate_unchecked<T: Scalar>(contracts: &[Contract<T>], scenario: &Scenario<T>) -> Evaluation<T> {
    let n = contracts.len();
    let mut success = T::one();
    let mut payments = T::zero();
    let mut efforts = Vec::with_capacity(n);
    let mut slacks = Vec::with_capacity(n);
    for (k, ag) in contracts.iter().zip(&scenario.agents) {
        let sol = best_response_effort(k, ag);
        let e = sol.effort;
        success = success * std_normal_cdf((ag.a * e - ag.r) / ag.sigma);
        payments = payments + k.psi1 + k.psi2 * bonus_probability(e, k, ag);
        efforts.push(e);
        slacks.push(sol.expected_payoff);
    }
    Evaluation {
        payoff: scenario.v0 * success - payments,
        efforts,
        slacks,
    }
}

/// Best responses, participation slacks and the systems engineer's expected
/// payoff for a full contract vector.
pub fn evaluate_contracts<T: Scalar>(
    contracts: &[Contract<T>],
    scenario: &Scenario<T>,
) -> Result<Evaluation<T>> {
    check_lengths(contracts, scenario)?;
    Ok(evaluate_unchecked(contracts, scenario))
}

/// `V0 prod Phi((a e* - r)/sigma) - sum psi1 - sum psi2 Phi((a e* - psi3)/sigma)`
/// with every `e*` recomputed from the agent's best response.
pub fn expected_principal_payoff<T: Scalar>(
    contracts: &[Contract<T>],
    scenario: &Scenario<T>,
) -> Result<T> {
    evaluate_contracts(contracts, scenario).map(|ev| ev.payoff)
}

/// Agent's expected payoff at their best response; negative means the agent
/// declines the contract.
pub fn participation_slack<T: Scalar>(contract: &Contract<T>, agent: &AgentParams<T>) -> T {
    best_response_effort(contract, agent).expected_payoff
}

/// Search box for one agent's `(psi1, psi2, psi3)`: payments in `[0, 2c]`,
/// requirement in `[max(0, r - 3 sigma), r + 3 sigma]`.
pub fn contract_bounds<T: Scalar>(agent: &AgentParams<T>) -> ([T; 3], [T; 3]) {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    (
        [T::zero(), T::zero(), (agent.r - three * agent.sigma).max(T::zero())],
        [two * agent.c, two * agent.c, agent.r + three * agent.sigma],
    )
}

/// Search box for the full `3N` parameter vector.
pub fn search_box<T: Scalar>(scenario: &Scenario<T>) -> Bounds<T> {
    let mut lower = Vec::with_capacity(3 * scenario.n_agents());
    let mut upper = Vec::with_capacity(3 * scenario.n_agents());
    for ag in &scenario.agents {
        let (lo, hi) = contract_bounds(ag);
        lower.extend(lo);
        upper.extend(hi);
    }
    Bounds { lower, upper }
}

fn unpack<T: Scalar>(x: &[T]) -> Vec<Contract<T>> {
    x.chunks_exact(3).map(Contract::from_slice).collect()
}

const INITIAL_SIMPLEX_STEP: f64 = 0.15;
const SIMPLEX_PASSES: usize = 3;
const POLISH_INITIAL_STEP: f64 = 0.02;
const POLISH_MIN_STEP: f64 = 1e-10;
const POLISH_MAX_EVALS: usize = 20_000;

struct RestartOutcome<T> {
    x: Vec<T>,
    payoff: T,
    feasible: bool,
}

fn run_restart<T: Scalar>(
    scenario: &Scenario<T>,
    bounds: &Bounds<T>,
    opts: &OptimizerOptions,
    restart: usize,
) -> RestartOutcome<T> {
    let tol = T::lit(opts.feasibility_tolerance);
    let ftol = T::lit(opts.convergence_tolerance);
    // Violations are priced far above any attainable payoff difference.
    let penalty_weight = T::lit(1e3)
        * (T::one()
            + scenario.v0
            + bounds.upper.iter().fold(T::zero(), |acc, &u| acc + u));

    let mut objective = |x: &[T]| -> T {
        let ev = evaluate_unchecked(&unpack(x), scenario);
        let violation = ev
            .slacks
            .iter()
            .fold(T::zero(), |acc, &s| acc + (-s - tol).max(T::zero()));
        -ev.payoff + penalty_weight * violation
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let start: Vec<T> = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(&lo, &hi)| lo + (hi - lo) * T::lit(rng.gen::<f64>()))
        .collect();

    let mut best: LocalMin<T> = nelder_mead_box(
        &mut objective,
        &start,
        bounds,
        T::lit(INITIAL_SIMPLEX_STEP),
        ftol,
        opts.max_iterations,
    );
    // restarting the simplex at its own optimum guards against collapse
    for pass in 1..SIMPLEX_PASSES {
        let step = T::lit(INITIAL_SIMPLEX_STEP / (4.0 * pass as f64));
        let next = nelder_mead_box(&mut objective, &best.x, bounds, step, ftol, opts.max_iterations);
        if next.f <= best.f {
            best = next;
        }
    }
    let mut best = compass_search(
        &mut objective,
        best,
        bounds,
        T::lit(POLISH_INITIAL_STEP),
        T::lit(POLISH_MIN_STEP),
        POLISH_MAX_EVALS,
    );

    // Payment components that no longer buy anything are set to zero.
    for i in 0..best.x.len() {
        if i % 3 == 2 || best.x[i] == bounds.lower[i] {
            continue;
        }
        let mut trial = best.x.clone();
        trial[i] = bounds.lower[i];
        let ft = objective(&trial);
        if ft <= best.f {
            best.x = trial;
            best.f = ft;
        }
    }

    symmetrize(&mut best, scenario, ftol, &mut objective);

    let ev = evaluate_unchecked(&unpack(&best.x), scenario);
    let feasible = ev.slacks.iter().all(|&s| s >= -tol);
    RestartOutcome {
        x: best.x,
        payoff: ev.payoff,
        feasible,
    }
}

/// Optima can be flat (e.g. full effort at the corner, where any bonus whose
/// expected value equals the effort cost works), so identical agents may end
/// up with different but equally good contracts. Copy one member's contract
/// to the whole group of identical agents unless that costs more than `slack`.
fn symmetrize<T: Scalar, F>(best: &mut LocalMin<T>, scenario: &Scenario<T>, slack: T, objective: &mut F)
where
    F: FnMut(&[T]) -> T,
{
    let n = scenario.n_agents();
    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let group: Vec<usize> = (i..n).filter(|&j| scenario.agents[j] == scenario.agents[i]).collect();
        group.iter().for_each(|&j| seen[j] = true);
        if group.len() < 2 {
            continue;
        }
        let mut winner: Option<(Vec<T>, T)> = None;
        for &src in &group {
            let mut trial = best.x.clone();
            for &dst in &group {
                let (s, d) = (3 * src, 3 * dst);
                let k: [T; 3] = [best.x[s], best.x[s + 1], best.x[s + 2]];
                trial[d..d + 3].copy_from_slice(&k);
            }
            let ft = objective(&trial);
            if winner.as_ref().is_none_or(|w| ft < w.1) {
                winner = Some((trial, ft));
            }
        }
        if let Some((x, f)) = winner {
            if f <= best.f + slack {
                best.x = x;
                best.f = f;
            }
        }
    }
}

/// Multistart derivative-free search for the payoff-maximizing contracts
/// subject to participation.
///
/// Restarts are independent and may run in parallel; the winner is the best
/// feasible outcome, ties going to the lowest restart index, so the result
/// does not depend on scheduling. When no restart is feasible the best
/// infeasible point is returned with `converged = false`.
pub fn optimize_contracts<T: Scalar>(
    scenario: &Scenario<T>,
    opts: &OptimizerOptions,
) -> Result<SolveResult<T>> {
    scenario.validate()?;
    opts.validate()?;
    let bounds = search_box(scenario);

    let outcomes: Vec<RestartOutcome<T>> = (0..opts.n_restarts)
        .into_par_iter()
        .map(|k| run_restart(scenario, &bounds, opts, k))
        .collect();

    let mut winner = 0;
    for (k, o) in outcomes.iter().enumerate().skip(1) {
        let w = &outcomes[winner];
        let better = match (o.feasible, w.feasible) {
            (true, false) => true,
            (false, true) => false,
            _ => o.payoff > w.payoff,
        };
        if better {
            winner = k;
        }
    }
    let best = &outcomes[winner];
    let contracts = unpack(&best.x);
    let ev = evaluate_unchecked(&contracts, scenario);
    Ok(SolveResult {
        contracts,
        efforts: ev.efforts,
        principal_payoff: ev.payoff,
        participation_slacks: ev.slacks,
        n_restarts_used: outcomes.len(),
        converged: best.feasible,
    })
}

/// Recomputes the systems engineer's payoff with one agent's `psi3` replaced by
/// each grid value. Participation is reported, not enforced.
pub fn sweep_requirement<T: Scalar>(
    scenario: &Scenario<T>,
    base: &SolveResult<T>,
    agent_index: usize,
    grid: &[T],
) -> Result<SweepResult<T>> {
    check_lengths(&base.contracts, scenario)?;
    if agent_index >= scenario.n_agents() {
        return Err(ModelError::AgentIndex {
            index: agent_index,
            n: scenario.n_agents(),
        });
    }
    if grid.is_empty() {
        return Err(ModelError::InvalidGrid("grid is empty"));
    }
    if grid.iter().any(|&g| !(g >= T::zero() && g <= T::lit(2.0))) {
        return Err(ModelError::InvalidGrid("grid values must lie in [0, 2]"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ModelError::InvalidGrid("grid must be strictly increasing"));
    }

    let mut contracts = base.contracts.clone();
    let mut payoffs = Vec::with_capacity(grid.len());
    let mut efforts = Vec::with_capacity(grid.len());
    let mut slacks = Vec::with_capacity(grid.len());
    for &g in grid {
        contracts[agent_index].psi3 = g;
        let ev = evaluate_unchecked(&contracts, scenario);
        payoffs.push(ev.payoff);
        efforts.push(ev.efforts[agent_index]);
        slacks.push(ev.slacks[agent_index]);
    }
    Ok(SweepResult {
        agent_index,
        grid: grid.to_vec(),
        payoffs,
        efforts,
        slacks,
        fixed_contracts: base.contracts.clone(),
    })
}

/// `points` evenly spaced values from `min` to `max` inclusive.
pub fn linspace<T: Scalar>(min: T, max: T, points: usize) -> Vec<T> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let steps = T::from_usize(points - 1).unwrap();
            (0..points)
                .map(|i| {
                    if i + 1 == points {
                        max
                    } else {
                        min + (max - min) * T::from_usize(i).unwrap() / steps
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn agent(a: f64, sigma: f64, c: f64) -> AgentParams<f64> {
        AgentParams::new(a, sigma, c, 1.0).unwrap()
    }

    fn pair(a: f64, sigma: f64, c: f64) -> Scenario<f64> {
        Scenario::new(1.0, vec![agent(a, sigma, c); 2]).unwrap()
    }

    fn fast_opts() -> OptimizerOptions {
        OptimizerOptions {
            n_restarts: 8,
            ..Default::default()
        }
    }

    #[test]
    fn no_incentive_no_effort() {
        let s = pair(2.0, 0.05, 0.01);
        let k = vec![Contract::new(0.0, 0.0, 1.0).unwrap(); 2];
        let ev = evaluate_contracts(&k, &s).unwrap();
        assert_eq!(ev.efforts, vec![0.0, 0.0]);
        // Phi(-20)^2
        assert!(ev.payoff.abs() < 1e-170);
    }

    #[test]
    fn interior_contract_payoff() {
        // mpmath: 0.98793551487390913
        let s = pair(2.0, 0.05, 0.01);
        let k = vec![Contract::new(0.0, 0.0061, 1.093).unwrap(); 2];
        let v = expected_principal_payoff(&k, &s).unwrap();
        assert_abs_diff_eq!(v, 0.9879355148739091, epsilon = 1e-9);
    }

    #[test]
    fn tabulated_contract_payoff_with_shirking_agents() {
        // agents shirk (e* = 0), so the engineer pays 2 psi1 for nothing
        let s = pair(2.0, 0.05, 0.01);
        let k = vec![Contract::new(0.001, 0.005, 1.087).unwrap(); 2];
        let v = expected_principal_payoff(&k, &s).unwrap();
        assert_abs_diff_eq!(v, -0.002, epsilon = 1e-15);
    }

    #[test]
    fn unreachable_requirement_costs_participation() {
        let s = pair(2.0, 0.05, 0.01);
        let k = vec![
            Contract::new(0.0, 0.0061, 1.093).unwrap(),
            Contract::new(0.003, 0.005, 10.0).unwrap(),
        ];
        let ev = evaluate_contracts(&k, &s).unwrap();
        assert_eq!(ev.efforts[1], 0.0);
        assert_abs_diff_eq!(ev.payoff, -0.003 - 0.0061 * bonus_probability(ev.efforts[0], &k[0], &s.agents[0]), epsilon = 1e-15);
    }

    #[test]
    fn length_mismatch_rejected() {
        let s = pair(2.0, 0.05, 0.01);
        let k = vec![Contract::new(0.0, 0.0, 1.0).unwrap()];
        assert!(matches!(
            expected_principal_payoff(&k, &s),
            Err(ModelError::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn slack_cases() {
        let ag = agent(2.0, 0.05, 0.01);
        assert_eq!(participation_slack(&Contract::new(0.004, 0.0, 1.0).unwrap(), &ag), 0.004);
        assert_eq!(participation_slack(&Contract::new(0.0, 0.0, 1.0).unwrap(), &ag), 0.0);
        // tabulated contract: agent prefers e = 0, keeping psi1
        let s = participation_slack(&Contract::new(0.001, 0.005, 1.087).unwrap(), &ag);
        assert_abs_diff_eq!(s, 0.001, epsilon = 1e-15);
    }

    #[test]
    fn bounds_clip_requirement_at_zero() {
        let (lo, hi) = contract_bounds(&AgentParams::new(2.0, 0.5, 0.01, 1.0).unwrap());
        assert_eq!(lo, [0.0, 0.0, 0.0]);
        assert_eq!(hi, [0.02, 0.02, 2.5]);
    }

    #[test]
    fn worthless_system_pays_nothing() {
        let s = Scenario::new(0.0, vec![agent(2.0, 0.05, 0.01); 2]).unwrap();
        let r = optimize_contracts(&s, &fast_opts()).unwrap();
        assert!(r.converged);
        assert!(r.principal_payoff.abs() < 1e-12, "{}", r.principal_payoff);
        for k in &r.contracts {
            assert_eq!(k.psi1, 0.0);
            assert_eq!(k.psi2, 0.0);
        }
    }

    #[test]
    fn optimizer_is_deterministic() {
        let s = pair(1.5, 0.1, 0.01);
        let a = optimize_contracts(&s, &fast_opts()).unwrap();
        let b = optimize_contracts(&s, &fast_opts()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn optimizer_feasible_and_in_box() {
        let s = pair(2.0, 0.2, 0.05);
        let opts = fast_opts();
        let r = optimize_contracts(&s, &opts).unwrap();
        assert!(r.converged);
        let b = search_box(&s);
        let flat: Vec<f64> = r.contracts.iter().flat_map(|k| k.to_array()).collect();
        assert!(b.contains(&flat));
        assert!(r.participation_slacks.iter().all(|&x| x >= -opts.feasibility_tolerance));
        // identical agents get near-identical contracts
        let (k0, k1) = (r.contracts[0], r.contracts[1]);
        assert!((k0.psi1 - k1.psi1).abs() < 2e-2);
        assert!((k0.psi2 - k1.psi2).abs() < 2e-2);
        assert!((k0.psi3 - k1.psi3).abs() < 2e-2);
    }

    #[test]
    fn invalid_options_rejected() {
        let s = pair(2.0, 0.2, 0.05);
        let opts = OptimizerOptions {
            n_restarts: 0,
            ..Default::default()
        };
        assert!(optimize_contracts(&s, &opts).is_err());
    }

    #[test]
    fn sweep_reproduces_base_and_validates() {
        let s = pair(1.5, 0.05, 0.01);
        let base = optimize_contracts(&s, &fast_opts()).unwrap();
        let star = base.contracts[0].psi3;
        let sw = sweep_requirement(&s, &base, 0, &[0.5, star, 2.0]).unwrap();
        assert!((sw.payoffs[1] - base.principal_payoff).abs() <= 1e-9);
        // a = 1.5 cannot reach psi3 = 2 even at full effort
        assert_eq!(sw.efforts[2], 0.0);

        assert!(sweep_requirement(&s, &base, 2, &[1.0]).is_err());
        assert!(sweep_requirement(&s, &base, 0, &[1.0, 2.5]).is_err());
        assert!(sweep_requirement(&s, &base, 0, &[1.0, 1.0]).is_err());
        assert!(sweep_requirement(&s, &base, 0, &[]).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.0_f64, 2.0, 201);
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[200], 2.0);
        assert!((g[100] - 1.0).abs() < 1e-15);
        assert_eq!(linspace(0.3, 2.0, 1), vec![0.3]);
    }
}
