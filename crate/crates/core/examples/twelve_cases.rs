//! Solves the twelve difficulty / cost / uncertainty combinations and prints
//! the optimal contracts.

use std::time::Instant;

use reqcontract::principal::optimize_contracts;
use reqcontract::{AgentParams, OptimizerOptions, Scenario};

fn main() {
    let opts = OptimizerOptions::default();
    println!("{:>5} {:>5} {:>5} | {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8} | {:>9} {:>6} {:>7}", "a", "c", "sigma", "psi11", "psi12", "psi13", "psi21", "psi22", "psi23", "payoff", "e1", "secs");
    for a in [1.5, 2.0] {
        for c in [0.01, 0.05] {
            for sigma in [0.05, 0.1, 0.2] {
                let ag = AgentParams::new(a, sigma, c, 1.0).unwrap();
                let s = Scenario::new(1.0, vec![ag; 2]).unwrap();
                let t = Instant::now();
                let r = optimize_contracts(&s, &opts).unwrap();
                let (k1, k2) = (r.contracts[0], r.contracts[1]);
                println!(
                    "{a:>5} {c:>5} {sigma:>5} | {:>8.5} {:>8.5} {:>8.5} | {:>8.5} {:>8.5} {:>8.5} | {:>9.6} {:>6.3} {:>7.2}",
                    k1.psi1, k1.psi2, k1.psi3, k2.psi1, k2.psi2, k2.psi3, r.principal_payoff, r.efforts[0],
                    t.elapsed().as_secs_f64()
                );
            }
        }
    }
}
