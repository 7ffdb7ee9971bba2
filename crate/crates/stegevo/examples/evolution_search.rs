//! A complete (miniature) evolution run with the deterministic mock
//! provider, followed by a bit-exact replay of its journal.
//!
//! ```bash
//! cargo run --release --example evolution_search
//! ```

use stegevo::evolve::{replay_journal, run_evolution, EvolutionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config: EvolutionConfig = toml::from_str(
        r#"
            seed = 42
            seed_programs = ["hill"]
            max_iters = 12
            burn_in_iters = 6
            stage2_period = 3
            refresh_every_iters = 5
            threads = 2

            [corpus.synthetic]
            count = 24
            width = 48
            height = 48
            seed = 9

            [llm]
            provider = "mock"
            mock_seed = 42
        "#,
    )?;

    let base = std::env::temp_dir().join("stegevo-evolution-example");
    let run_dir = base.join("run");
    let replay_dir = base.join("replay");
    let _ = std::fs::remove_dir_all(&base);

    println!("running 12 mock-provider iterations...");
    let report = run_evolution(config, &run_dir)?;
    println!(
        "generated {} candidates, {} executable; faults: {:?}",
        report.candidates_generated, report.executable_candidates, report.faults
    );
    println!(
        "promoted {} program(s); evaluator pool grew to {}; stop: {}",
        report.promoted_total, report.pool_size, report.stop_reason
    );
    if let Some(superior) = &report.superior {
        println!("superior candidate {} validated at all rates:", superior.candidate);
        for s in &superior.scores {
            println!(
                "  {} bpp: candidate {:.4} vs baseline {:.4}",
                s.rate_bpp, s.candidate_pe, s.baseline_pe
            );
        }
    }
    println!("journal: {}", run_dir.join("journal.jsonl").display());
    println!("snapshot: {}", run_dir.join("database").display());

    println!("\nreplaying the journal...");
    let replay = replay_journal(&run_dir.join("journal.jsonl"), &replay_dir)?;
    println!(
        "replay of {} iterations matches: {}",
        replay.rounds_replayed, replay.matches
    );
    assert!(replay.matches);
    Ok(())
}
