use std::process::ExitCode;

use monofront::verify::run_all;

fn main() -> ExitCode {
    let results = run_all();
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() && results.len() == 12 {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
