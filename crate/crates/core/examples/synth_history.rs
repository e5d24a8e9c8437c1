//! Writes a synthetic `investment,quality` history drawn from the linear
//! quality model, for calibration fixtures.
//!
//! usage: synth_history <a> <sigma> <q0> <i0> <n> <step> <seed>
//!
//! Investments are `i0 + step * k` for `k = 1..=n`.

use reqcontract::calibration::synthetic_records;

fn main() {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("numeric argument"))
        .collect();
    let [a, sigma, q0, i0, n, step, seed] = args[..] else {
        eprintln!("usage: synth_history <a> <sigma> <q0> <i0> <n> <step> <seed>");
        std::process::exit(1);
    };
    let investments: Vec<f64> = (1..=n as usize).map(|k| i0 + step * k as f64).collect();
    println!("investment,quality");
    for r in synthetic_records(a, sigma, q0, i0, &investments, seed as u64) {
        println!("{},{}", r.investment, r.quality);
    }
}
