//! Fixtures shared by the benchmarks.

use dab_core::config::EngineConfig;
use dab_core::engine::Engine;
use dab_core::ledger::Call;
use dab_core::types::{Address, NativeAmount};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HOLDERS: [&str; 5] = ["member1", "member2", "member3", "candidate", "occupant"];

/// A default engine after `transfers` random token transfers and delegations
/// among the configured holders, one transaction per block.
pub fn busy_token_engine(transfers: usize, seed: u64) -> (Engine, Vec<Address>) {
    let mut engine = Engine::new(EngineConfig::default(), seed).expect("default config is valid");
    let holders: Vec<Address> = HOLDERS.iter().map(|n| engine.account(n).expect("configured holder")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..transfers {
        let from = holders[rng.gen_range(0..holders.len())];
        let to = holders[rng.gen_range(0..holders.len())];
        let call = if rng.gen_bool(0.2) {
            Call::Delegate { to }
        } else {
            let held = engine.chain().token().balance_of(&from);
            Call::TransferTokens { to, amount: rng.gen_range(0..=held.min(500)) }
        };
        // Reverts are fine: they still seal a block.
        let _ = engine.call(from, call, NativeAmount::ZERO);
    }
    (engine, holders)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_deterministic_and_conserves() {
        let (a, _) = busy_token_engine(50, 3);
        let (b, _) = busy_token_engine(50, 3);
        assert_eq!(a.chain_digest(), b.chain_digest());
        assert!(a.chain().head() >= 50);
        a.check_conservation().unwrap();
    }
}
