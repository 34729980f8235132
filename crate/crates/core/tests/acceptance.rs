//! Acceptance gate: evaluates every primary criterion against the engine and
//! prints one PASS/FAIL line per criterion. Exits non-zero if any fails.

mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dab_core::config::EngineConfig;
use dab_core::costs::{report_costs, reproduce_published_fees};
use dab_core::engine::Engine;
use dab_core::governor::{DefeatReason, ProposalState};
use dab_core::ledger::{Call, GasSchedule, OpKind};
use dab_core::registry::ThresholdKey;
use dab_core::scenario::{run_all, run_builtin};
use dab_core::types::{Address, NativeAmount};

use support::{dec, ensure, Check};

const SEED: u64 = 7;
const RECIPIENT: &str = "0x3aF5647E366fb51C89e4c43Bc8C173dAa018AFf6";

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn scenario_passes(id: &str) -> Result<dab_core::scenario::ScenarioReport, String> {
    let report = run_builtin(id, &EngineConfig::default(), SEED).map_err(|e| e.to_string())?;
    ensure(report.passed, || format!("scripted scenario {id} failed:\n{}", report.render()))?;
    Ok(report)
}

fn revenue() -> Check {
    let start = Instant::now();
    scenario_passes("1")?;
    let mut engine = Engine::new(EngineConfig::default(), SEED).map_err(|e| e.to_string())?;
    let occupant = engine.account("occupant").map_err(|e| e.to_string())?;
    let treasury = engine.chain().treasury();
    let before = engine.chain().balance_of(&treasury);
    let fee = engine.chain().reservations().booking_fee();
    for i in 0..9 {
        let call = Call::BookRoom { room: format!("BFH-20{}", 1 + i % 3), slot: format!("2024-09-{}T10:00", 16 + i) };
        let r = engine.call(occupant, call, fee).map_err(|e| e.to_string())?;
        ensure(r.is_success(), || format!("booking {i} reverted: {:?}", r.status))?;
    }
    let delta = engine.chain().balance_of(&treasury).0 - before.0;
    ensure(delta == 9 * 10u128.pow(16), || format!("treasury delta {delta}"))?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("treasury +{delta} base units after 9 bookings"))
}

fn expense() -> Check {
    let start = Instant::now();
    let report = scenario_passes("2")?;
    let bill = report.proposals.first().ok_or("no proposal was created")?;
    ensure(bill.state == ProposalState::Executed, || format!("bill ended {:?}", bill.state))?;
    let p = dab_core::costs::expense_workflow(dec("22.73"), dec("0.169475"), dec("2400"), Address::derive("provider"))
        .map_err(|e| e.to_string())?;
    ensure(p.usd == dec("3.85") && p.eth == dec("0.0016"), || format!("{} USD -> {} ETH", p.usd, p.eth))?;
    ensure(p.amount == NativeAmount(16 * 10u128.pow(14)), || format!("amount {:?}", p.amount))?;
    within(Duration::from_secs(2), start)?;
    Ok("22.73 kWh -> 3.85 USD -> 0.0016 ETH paid after the full lifecycle; treasury reconciles to 0.0884".into())
}

fn threshold_governance() -> Check {
    let start = Instant::now();
    let report = scenario_passes("3")?;
    let failures_expected = report
        .steps
        .iter()
        .filter(|s| s.op == "execute" && s.detail.contains("TimelockNotElapsed (expected)"))
        .count();
    ensure(failures_expected == 1, || "early execution was not attempted".into())?;
    ensure(report.steps.iter().any(|s| s.op == "assert_agent_threshold" && s.detail.ends_with("= 17")), || {
        "agent reading of 17 not asserted".into()
    })?;
    within(Duration::from_secs(2), start)?;
    Ok(format!(
        "{} stays 20 until eta, early execute reverts, registry and agent read 17",
        ThresholdKey::MinTemperature
    ))
}

fn assistant_transfer() -> Check {
    let mut engine = Engine::new(EngineConfig::default(), SEED).map_err(|e| e.to_string())?;
    let member = engine.account("member1").map_err(|e| e.to_string())?;
    let to: Address = RECIPIENT.parse().map_err(|e| format!("{e}"))?;
    let before = engine.chain().balance_of(&to);
    let reply = engine
        .assistant_message(member, &format!("transfer 0.01 Ether to {RECIPIENT}"))
        .map_err(|e| e.to_string())?;
    let pending = reply.pending.ok_or("no transaction was prepared")?;
    let receipt = engine.assistant_sign(member, &pending.id).map_err(|e| e.to_string())?;
    ensure(receipt.is_success(), || format!("transfer reverted: {:?}", receipt.status))?;
    let delta = engine.chain().balance_of(&to).0 - before.0;
    ensure(delta == 10u128.pow(16), || format!("recipient credited {delta}"))?;
    scenario_passes("4")?;
    Ok(format!("recipient credited exactly {delta} base units"))
}

fn conservation() -> Check {
    let suite = run_all(&EngineConfig::default(), SEED).map_err(|e| e.to_string())?;
    let supply = EngineConfig::default().token.total_supply as u64;
    let mut steps = 0;
    for s in &suite.scenarios {
        ensure(s.passed, || format!("scenario {} failed a step or an invariant check", s.id))?;
        ensure(s.native_supply == s.genesis_native_supply, || {
            format!("scenario {}: native {:?} vs genesis {:?}", s.id, s.native_supply, s.genesis_native_supply)
        })?;
        ensure(s.token_supply == supply, || format!("scenario {}: token sum {}", s.id, s.token_supply))?;
        steps += s.steps.len();
    }
    Ok(format!("native and token supply identities held after each of {steps} scripted steps"))
}

fn governance_replay() -> Check {
    let report = scenario_passes("governance")?;
    let n = report.proposals.len();
    let passed = report
        .proposals
        .iter()
        .filter(|p| matches!(p.state, ProposalState::Succeeded | ProposalState::Queued | ProposalState::Executed))
        .count();
    let quorum = report
        .proposals
        .iter()
        .filter(|p| p.state == ProposalState::Defeated && p.defeat_reason == Some(DefeatReason::QuorumNotReached))
        .count();
    ensure(n == 8 && passed == 5 && quorum == 3, || format!("{n} proposals: {passed} passed, {quorum} short of quorum"))?;
    Ok(format!("{n} proposals: {passed} succeeded, {quorum} defeated by quorum"))
}

fn checkpoint() -> Check {
    let start = Instant::now();
    let detail = support::checkpoint_oracle(SEED, 1_000, 200, 100)?;
    within(Duration::from_secs(5), start)?;
    Ok(detail)
}

fn fee_table() -> Check {
    let rows = reproduce_published_fees();
    let worst = rows.iter().map(|r| r.abs_error()).max().ok_or("no rows")?;
    for r in &rows {
        ensure(r.abs_error() <= dec("0.000001"), || format!("{}: error {} ETH", r.operation, r.abs_error()))?;
    }
    let gwei = NativeAmount::gwei(1);
    let report = report_costs(&GasSchedule::default(), gwei, dec("2400")).map_err(|e| e.to_string())?;
    for row in &report.rows {
        ensure(row.fee.0 == row.gas as u128 * 1_000_000_000, || format!("{} fee {}", row.operation, row.fee.0))?;
    }
    // The same identity on a live receipt.
    let mut engine = Engine::new(EngineConfig::default(), SEED).map_err(|e| e.to_string())?;
    let member = engine.account("member1").map_err(|e| e.to_string())?;
    let r = engine
        .call(member, Call::TransferNative { to: Address::derive("anyone") }, NativeAmount(1))
        .map_err(|e| e.to_string())?;
    let gas = GasSchedule::default().gas(OpKind::NativeTransfer);
    ensure(r.gas_used == gas && r.fee.0 == gas as u128 * 1_000_000_000, || format!("receipt {r:?}"))?;
    Ok(format!("{} rows reproduced, worst error {} ETH; 1 gwei fees are gas × 10^9 exactly", rows.len(), worst.normalize()))
}

fn determinism() -> Check {
    let cfg = EngineConfig::default();
    let a = run_all(&cfg, SEED).map_err(|e| e.to_string())?;
    let b = run_all(&cfg, SEED).map_err(|e| e.to_string())?;
    for (x, y) in a.scenarios.iter().zip(&b.scenarios) {
        ensure(x.chain_digest == y.chain_digest && x.state_digest == y.state_digest, || {
            format!("scenario {} digests differ", x.id)
        })?;
    }
    ensure(a.suite_digest == b.suite_digest, || "suite digests differ".into())?;
    Ok(format!("suite digest {}", a.suite_digest))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("scenario-1 booking revenue", revenue),
        ("scenario-2 energy expense", expense),
        ("scenario-3 threshold governance", threshold_governance),
        ("scenario-4 assistant transfer", assistant_transfer),
        ("scenario-6 threshold control", support::control_reading_check),
        ("occupancy policy", support::occupancy_check),
        ("governance replay", governance_replay),
        ("checkpoint oracle", checkpoint),
        ("published fee table", fee_table),
        ("state-machine exhaustion", support::state_machine_exhaustion),
        ("conservation", conservation),
        ("determinism", determinism),
        ("simulation properties", || support::sim_properties(100, SEED)),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS  {name:<34} {detail} ({ms} ms)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name:<34} {reason} ({ms} ms)");
            }
        }
    }
    let total = started.elapsed();
    println!("acceptance: {} of {} criteria passed in {:.2?}", criteria.len() - failed, criteria.len(), total);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
