fn main() {
    use theta_pq::suites::{run_suite, SuiteConfig};
    let args: Vec<String> = std::env::args().collect();
    let s = args[1].as_str();
    let p: usize = args[2].parse().unwrap();
    let q: usize = args[3].parse().unwrap();
    let n: usize = args[4].parse().unwrap();
    let t = std::time::Instant::now();
    match run_suite(s, &SuiteConfig::new(p, q, n, 7)) {
        Ok(r) => {
            println!("{s} ({p},{q}) x{n}: pass={} fail={} und={} [{:?}]", r.pass, r.fail, r.undecided, t.elapsed());
            for t in r.trials.iter().filter(|t| t.verdict != theta_pq::report::TrialVerdict::Pass).take(5) {
                println!("  non-pass: idx={} stmt={} margin={}", t.index, t.statement, t.margin);
            }
        }
        Err(e) => println!("{s} ({p},{q}): ERROR {e}"),
    }
}
