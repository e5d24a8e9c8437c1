use reqcontract::principal::{evaluate_contracts, optimize_contracts, search_box};
use reqcontract::{AgentParams, OptimizerOptions, Scenario};

/// (a, c, sigma, psi2, psi3, payoff) from an independent grid search over
/// symmetric contracts with psi1 = 0.
const REFERENCE: [(f64, f64, f64, f64, f64, f64); 12] = [
    (1.5, 0.01, 0.05, 0.00806, 1.0818, 0.983990),
    (1.5, 0.01, 0.10, 0.00935, 1.17206, 0.981550),
    (1.5, 0.01, 0.20, 0.01999, 1.49989, 0.967619),
    (1.5, 0.05, 0.05, 0.03952, 1.0595, 0.921367),
    (1.5, 0.05, 0.10, 0.04514, 1.12565, 0.910733),
    (1.5, 0.05, 0.20, 0.09989, 1.49972, 0.887619),
    (2.0, 0.01, 0.05, 0.00606, 1.08551, 0.987957),
    (2.0, 0.01, 0.10, 0.00705, 1.1797, 0.986088),
    (2.0, 0.01, 0.20, 0.00896, 1.37299, 0.982540),
    (2.0, 0.05, 0.05, 0.02975, 1.0637, 0.940826),
    (2.0, 0.05, 0.10, 0.03408, 1.13445, 0.932628),
    (2.0, 0.05, 0.20, 0.04231, 1.27983, 0.917326),
];

#[test]
fn twelve_scenarios_match_reference() {
    let opts = OptimizerOptions::default();
    for &(a, c, sigma, psi2, psi3, payoff) in &REFERENCE {
        let ag = AgentParams::new(a, sigma, c, 1.0).unwrap();
        let s = Scenario::new(1.0, vec![ag; 2]).unwrap();
        let r = optimize_contracts(&s, &opts).unwrap();
        let tag = format!("a={a} c={c} sigma={sigma}");
        assert!(r.converged, "{tag}");
        assert!((r.principal_payoff - payoff).abs() < 2e-5, "{tag}: {}", r.principal_payoff);
        for k in &r.contracts {
            assert_eq!(k.psi1, 0.0, "{tag}");
            // the corner optima (full effort) are flat in psi3, so only psi2 is pinned there
            assert!((k.psi2 - psi2).abs() < 2e-4, "{tag}: psi2 {}", k.psi2);
            if r.efforts[0] < 0.999 {
                assert!((k.psi3 - psi3).abs() < 5e-3, "{tag}: psi3 {}", k.psi3);
            }
        }
    }
}

#[test]
fn reported_values_are_consistent() {
    let ag = AgentParams::new(1.8, 0.08, 0.02, 1.0).unwrap();
    let other = AgentParams::new(2.5, 0.15, 0.03, 0.9).unwrap();
    let s = Scenario::new(2.0, vec![ag, other]).unwrap();
    let r = optimize_contracts(&s, &OptimizerOptions::default()).unwrap();
    let ev = evaluate_contracts(&r.contracts, &s).unwrap();
    assert_eq!(ev.payoff, r.principal_payoff);
    assert_eq!(ev.efforts, r.efforts);
    assert_eq!(ev.slacks, r.participation_slacks);
    let flat: Vec<f64> = r.contracts.iter().flat_map(|k| k.to_array()).collect();
    assert!(search_box(&s).contains(&flat));
}

#[test]
fn seed_changes_only_the_path() {
    let ag = AgentParams::new(2.0, 0.1, 0.01, 1.0).unwrap();
    let s = Scenario::new(1.0, vec![ag; 2]).unwrap();
    let a = optimize_contracts(&s, &OptimizerOptions::default()).unwrap();
    let b = optimize_contracts(&s, &OptimizerOptions { seed: 17, ..Default::default() }).unwrap();
    assert!((a.principal_payoff - b.principal_payoff).abs() < 1e-6);
}
