//! Regenerates `data/covering_table.json`.
//!
//! Analytic optima are used for k = 2, 3, 4, 7; other entries come from the
//! local optimizer with many restarts.
//!
//!     cargo run --release -p qtn-core --example gen_covering_table > crates/core/data/covering_table.json

use qtn::deployment::covering::{analytic_covering, optimize_covering, table_to_json, MAX_TABLE_K};

fn main() {
    let restarts: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(24);
    let iterations: u32 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(60_000);
    let mut entries = Vec::new();
    for k in 2..=MAX_TABLE_K {
        let sol = analytic_covering(k).unwrap_or_else(|| optimize_covering(k, restarts, iterations, 2023));
        eprintln!("k = {k:2}  radius = {:.6}  1/radius = {:.6}", sol.radius, 1.0 / sol.radius);
        entries.push(sol);
    }
    print!("{}", table_to_json(&entries));
}
