//! Wall-clock of one full run per stage: `cargo run --release --example timing -- 5000`.

use fdrsafe::generator::{sample_dataset, GeneratorParams};
use fdrsafe::pipeline::{run_fdrsafe_timed, SafeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let size: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let workers: usize = std::env::args().nth(2).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let phi = GeneratorParams::new(0.8, 1.0, 0.3, 2.0, 3.0)?;
    let data = sample_dataset(&phi, size, 7)?;
    let cfg = SafeConfig {
        workers,
        ..Default::default()
    };
    let (result, timings) = run_fdrsafe_timed(&data.u, &cfg)?;
    for (stage, t) in &timings {
        println!("{stage:>12}: {:.3}s", t.as_secs_f64());
    }
    println!("pi0_hat = {:.4}, models = {}", result.pi0, result.selected.len());
    for s in &result.selected {
        println!("  {:.4} {}", s.weight, s.model_id);
    }
    Ok(())
}
