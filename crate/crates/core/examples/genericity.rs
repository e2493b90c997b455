//! Failure rates of the local condition on random jet triples for several
//! target dimensions.

use skewjet::local_condition::LocalOptions;
use skewjet::stratification::genericity_experiment;

fn main() -> skewjet::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let opts = LocalOptions::default();
    println!("{:>3} {:>3} {:>9} {:>12} {:>11} {:>11} {:>11}", "n", "N", "failures", "expected", "q1", "median", "q3");
    for big_n in [4, 5, 6, 7, 9] {
        let r = genericity_experiment(2, big_n, trials, 1, &opts)?;
        let [q1, q2, q3] = r.min_sigma_quartiles;
        println!(
            "{:>3} {:>3} {:>9} {:>12} {q1:>11.3e} {q2:>11.3e} {q3:>11.3e}",
            r.n,
            r.big_n,
            r.failures,
            format!("{:?}", r.expected_failures),
        );
    }
    Ok(())
}
