//! The ten acceptance criteria, one line each. Clauses marked as known
//! deviations still print FAIL but do not fail the run.

use std::process::ExitCode;

use condex_cli::verify::criterion;

fn main() -> ExitCode {
    let mut ok = true;
    for id in 1..=10 {
        let c = criterion(id);
        println!("{}", c.line());
        for cl in c.clauses.iter().filter(|cl| !cl.pass) {
            println!("    {}{}: {}", if cl.known_deviation { "known " } else { "" }, cl.name, cl.detail);
        }
        ok &= c.passed_except_known();
    }
    if ok {
        println!("acceptance: ok (known deviations listed above)");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
