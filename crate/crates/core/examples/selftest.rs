//! The numerical oracle suite, as run by `vissl selftest`.

fn main() {
    let checks = vi_simsiam::selftest::run_selftest();
    for c in &checks {
        println!("{} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().any(|c| !c.passed) {
        std::process::exit(1);
    }
}
