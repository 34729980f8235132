//! Independent oracles shared by the acceptance target and the property tests.
//! Each check returns a one-line detail on success and a reason on failure.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::str::FromStr;

use dab_core::agent::{control_cycle, occupancy_cycle, Actuators, Decision, PolicyConfig};
use dab_core::config::EngineConfig;
use dab_core::engine::Engine;
use dab_core::governor::{Action, ProposalState, Support};
use dab_core::ledger::{Call, CallOutput, Receipt};
use dab_core::registry::{ThresholdKey, ThresholdSet};
use dab_core::sim::{ApplianceKind, ApplianceLevels, EnergyMeter, EnvState, Sim, SimConfig};
use dab_core::token::{GovernanceToken, TokenConfig};
use dab_core::types::{Address, Hash32, NativeAmount};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

pub type Check = Result<String, String>;

pub fn dec(s: &str) -> Decimal {
    Decimal::from_str(s).expect("decimal literal")
}

pub fn ensure(ok: bool, reason: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(reason())
    }
}

// ---- checkpoint oracle ----------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum TokenOp {
    /// Reserve allocation: transfer out of the reserve, then self-delegate
    /// the recipient if it has no delegatee yet.
    Allocate { to: usize, amount: u128 },
    Transfer { from: usize, to: usize, amount: u128 },
    Delegate { from: usize, to: usize },
}

pub struct TokenHistory {
    pub holders: Vec<Address>,
    pub reserve: Address,
    pub log: Vec<(u64, TokenOp)>,
    pub token: GovernanceToken,
    pub last_block: u64,
}

/// Random transfer/delegate history applied to the real token.
pub fn random_token_history(seed: u64, ops: usize, blocks: u64, holders: usize) -> TokenHistory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let holders: Vec<Address> = (0..holders).map(|i| Address::derive(&format!("holder-{i}"))).collect();
    let reserve = Address::derive("reserve");
    let config = TokenConfig { total_supply: 1_000_000, auto_self_delegate: true };
    let genesis: Vec<(Address, u128)> = holders.iter().take(3).map(|h| (*h, 10_000)).collect();
    let mut token = GovernanceToken::mint_initial(&config, reserve, &genesis, 0).expect("genesis mints");
    let mut log: Vec<(u64, TokenOp)> = (0..3).map(|i| (0, TokenOp::Allocate { to: i, amount: 10_000 })).collect();
    let per_block = ops.div_ceil(blocks as usize).max(1);
    let mut done = 0;
    let mut block = 0;
    while done < ops || block < blocks {
        block += 1;
        // Some blocks are left empty so queries land between checkpoints.
        let n = if rng.gen_bool(0.2) { 0 } else { rng.gen_range(1..=2 * per_block) };
        for _ in 0..n {
            let op = match rng.gen_range(0..10) {
                0 => TokenOp::Allocate { to: rng.gen_range(0..holders.len()), amount: rng.gen_range(1..=500) },
                1..=3 => TokenOp::Delegate { from: rng.gen_range(0..holders.len()), to: rng.gen_range(0..holders.len()) },
                _ => {
                    let from = rng.gen_range(0..holders.len());
                    let bal = token.balance_of(&holders[from]);
                    let amount = if bal == 0 { 0 } else { rng.gen_range(0..=bal) };
                    TokenOp::Transfer { from, to: rng.gen_range(0..holders.len()), amount }
                }
            };
            let res = match op {
                TokenOp::Allocate { to, amount } => token.allocate(holders[to], amount, block),
                TokenOp::Transfer { from, to, amount } => token.transfer(holders[from], holders[to], amount, block),
                TokenOp::Delegate { from, to } => token.delegate(holders[from], holders[to], block),
            };
            res.expect("generated operations are valid");
            log.push((block, op));
            done += 1;
        }
    }
    TokenHistory { holders, reserve, log, token, last_block: block }
}

/// Brute force: replays the log up to and including `block` from scratch and
/// sums the balances of every holder delegating to `addr`.
pub fn replay_votes(history: &TokenHistory, addr: usize, block: u64) -> u128 {
    let n = history.holders.len();
    let mut balance = vec![0u128; n];
    let mut delegate: Vec<Option<usize>> = vec![None; n];
    for (b, op) in &history.log {
        if *b > block {
            break;
        }
        match *op {
            TokenOp::Allocate { to, amount } => {
                balance[to] += amount;
                if delegate[to].is_none() {
                    delegate[to] = Some(to);
                }
            }
            TokenOp::Transfer { from, to, amount } => {
                balance[from] -= amount;
                balance[to] += amount;
            }
            TokenOp::Delegate { from, to } => delegate[from] = Some(to),
        }
    }
    (0..n).filter(|h| delegate[*h] == Some(addr)).map(|h| balance[h]).sum()
}

pub fn checkpoint_oracle(seed: u64, ops: usize, blocks: u64, queries: usize) -> Check {
    let history = random_token_history(seed, ops, blocks, 8);
    let applied = history.log.len() - 3;
    ensure(applied >= ops, || format!("only {applied} operations generated"))?;
    ensure(history.last_block >= blocks, || format!("only {} blocks", history.last_block))?;
    let current = history.last_block + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for _ in 0..queries {
        let a = rng.gen_range(0..history.holders.len());
        let b = rng.gen_range(0..current);
        let got = history.token.get_past_votes(&history.holders[a], b, current).map_err(|e| e.to_string())?;
        let want = replay_votes(&history, a, b);
        ensure(got == want, || format!("holder {a} at block {b}: checkpoint {got}, replay {want}"))?;
    }
    ensure(history.token.get_past_votes(&history.holders[0], current, current).is_err(), || {
        "a query at the current block must be rejected".into()
    })?;
    Ok(format!("{applied} ops over {} blocks, {queries} queries match the replay", history.last_block))
}

// ---- governance state machine --------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmState {
    Pending,
    Active,
    Defeated,
    Succeeded,
    /// Queued, timelock still running.
    Queued,
    /// Queued with the eta reached.
    QueuedReady,
    Executed,
}

impl SmState {
    pub const ALL: [SmState; 7] = [
        SmState::Pending,
        SmState::Active,
        SmState::Defeated,
        SmState::Succeeded,
        SmState::Queued,
        SmState::QueuedReady,
        SmState::Executed,
    ];

    pub fn proposal_state(self) -> ProposalState {
        match self {
            SmState::Pending => ProposalState::Pending,
            SmState::Active => ProposalState::Active,
            SmState::Defeated => ProposalState::Defeated,
            SmState::Succeeded => ProposalState::Succeeded,
            SmState::Queued | SmState::QueuedReady => ProposalState::Queued,
            SmState::Executed => ProposalState::Executed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmOp {
    VoteFresh,
    VoteAgain,
    Queue,
    Execute,
    ProposeDuplicate,
}

impl SmOp {
    pub const ALL: [SmOp; 5] = [SmOp::VoteFresh, SmOp::VoteAgain, SmOp::Queue, SmOp::Execute, SmOp::ProposeDuplicate];

    /// The transition table: the only (state, op) pairs that may succeed.
    pub fn legal_in(self, s: SmState) -> Option<ProposalState> {
        match (self, s) {
            (SmOp::VoteFresh, SmState::Active) => Some(ProposalState::Active),
            (SmOp::Queue, SmState::Succeeded) => Some(ProposalState::Queued),
            (SmOp::Execute, SmState::QueuedReady) => Some(ProposalState::Executed),
            // A finished proposal's id may be reused by a fresh proposal.
            (SmOp::ProposeDuplicate, SmState::Defeated | SmState::Executed) => Some(ProposalState::Pending),
            _ => None,
        }
    }
}

pub struct SmFixture {
    pub engine: Engine,
    pub id: Hash32,
    pub members: [Address; 3],
}

pub fn sm_actions() -> Vec<Action> {
    vec![Action::SetThreshold { key: ThresholdKey::MinTemperature, value: 190 }]
}

pub const SM_DESCRIPTION: &str = "Lower the minimum temperature to 19 °C";

fn must(r: Receipt) -> Receipt {
    assert!(r.is_success(), "fixture transaction reverted: {:?}", r.status);
    r
}

/// A fresh engine with one proposal driven into `state`.
pub fn reach(state: SmState) -> SmFixture {
    let mut engine = Engine::new(EngineConfig::default(), 1).expect("default engine");
    let m = ["member1", "member2", "member3"].map(|n| engine.account(n).expect("default account"));
    let r = must(
        engine
            .call(m[0], Call::Propose { actions: sm_actions(), description: SM_DESCRIPTION.into() }, NativeAmount::ZERO)
            .expect("propose"),
    );
    let Some(CallOutput::ProposalId { id }) = r.output else { panic!("propose returns an id") };
    let mut f = SmFixture { engine, id, members: m };
    if state == SmState::Pending {
        return f;
    }
    f.engine.advance_blocks(1).expect("advance");
    if state == SmState::Active {
        // One ballot already cast so a repeat vote is meaningful.
        f.vote(0, Support::For);
        return f;
    }
    f.vote(0, Support::For);
    if state != SmState::Defeated {
        f.vote(1, Support::For);
    }
    f.end_voting();
    if matches!(state, SmState::Defeated | SmState::Succeeded) {
        return f;
    }
    must(f.engine.call(m[0], Call::Queue { proposal: id }, NativeAmount::ZERO).expect("queue"));
    if state == SmState::Queued {
        return f;
    }
    f.await_eta();
    if state == SmState::QueuedReady {
        return f;
    }
    must(f.engine.call(m[0], Call::Execute { proposal: id }, NativeAmount::ZERO).expect("execute"));
    f
}

impl SmFixture {
    fn vote(&mut self, who: usize, support: Support) {
        must(
            self.engine
                .call(self.members[who], Call::CastVote { proposal: self.id, support }, NativeAmount::ZERO)
                .expect("vote"),
        );
    }

    fn end_voting(&mut self) {
        let end = self.engine.chain().governor().proposal(&self.id).unwrap().vote_end_block;
        let clock = self.engine.chain().clock();
        self.engine.advance_blocks(end + 1 - clock).expect("advance");
    }

    fn await_eta(&mut self) {
        let eta = self.engine.chain().governor().proposal(&self.id).unwrap().eta.expect("queued");
        let bt = self.engine.chain().block_time();
        self.engine.advance_until(eta - bt).expect("advance");
    }

    pub fn state(&self) -> ProposalState {
        self.engine.chain().proposal_state(&self.id).expect("proposal exists")
    }

    pub fn apply(&mut self, op: SmOp) -> Result<Receipt, String> {
        let (who, call) = match op {
            SmOp::VoteFresh => (self.members[2], Call::CastVote { proposal: self.id, support: Support::Against }),
            SmOp::VoteAgain => (self.members[0], Call::CastVote { proposal: self.id, support: Support::Against }),
            SmOp::Queue => (self.members[1], Call::Queue { proposal: self.id }),
            SmOp::Execute => (self.members[1], Call::Execute { proposal: self.id }),
            SmOp::ProposeDuplicate => {
                (self.members[1], Call::Propose { actions: sm_actions(), description: SM_DESCRIPTION.into() })
            }
        };
        self.engine.call(who, call, NativeAmount::ZERO).map_err(|e| e.code().to_string())
    }

    /// Digest of all contract state and balances except the fee payer's and
    /// the fee sink's (a reverted transaction still pays for gas).
    pub fn contract_digest(&self, sender: Address) -> Hash32 {
        let chain = self.engine.chain();
        chain.state_digest_excluding(&[sender, chain.contracts().fee_sink])
    }
}

/// Every (state, operation) pair: legal pairs must move along the transition
/// table, illegal pairs must revert without touching contract state.
pub fn state_machine_exhaustion() -> Check {
    let (mut legal, mut illegal) = (0, 0);
    for s in SmState::ALL {
        for op in SmOp::ALL {
            let mut f = reach(s);
            ensure(f.state() == s.proposal_state(), || format!("fixture for {s:?} is in {:?}", f.state()))?;
            let sender = match op {
                SmOp::VoteFresh => f.members[2],
                SmOp::VoteAgain => f.members[0],
                _ => f.members[1],
            };
            let before = f.contract_digest(sender);
            let head = f.engine.chain().head();
            let outcome = f.apply(op);
            // The same fixture with time advanced equally but no operation.
            let mut twin = reach(s);
            let elapsed = f.engine.chain().head() - head;
            if elapsed > 0 {
                twin.engine.advance_blocks(elapsed).map_err(|e| e.to_string())?;
            }
            match op.legal_in(s) {
                Some(next) => {
                    let r = outcome.map_err(|c| format!("{op:?} in {s:?} rejected with {c}"))?;
                    ensure(r.is_success(), || format!("{op:?} in {s:?} reverted: {:?}", r.status))?;
                    let now = match op {
                        SmOp::ProposeDuplicate => f.engine.chain().proposal_state(&f.id).map_err(|e| e.to_string())?,
                        _ => f.state(),
                    };
                    ensure(now == next, || format!("{op:?} in {s:?} led to {now:?}, expected {next:?}"))?;
                    legal += 1;
                }
                None => {
                    let code = match outcome {
                        Ok(r) => r.revert_code().map(str::to_string),
                        Err(code) => Some(code),
                    };
                    ensure(code.is_some(), || format!("illegal {op:?} in {s:?} succeeded"))?;
                    let after = f.contract_digest(sender);
                    ensure(before == after, || format!("illegal {op:?} in {s:?} changed state"))?;
                    ensure(f.state() == twin.state(), || format!("illegal {op:?} in {s:?} moved the state"))?;
                    illegal += 1;
                }
            }
        }
    }
    let bookings = booking_exhaustion()?;
    Ok(format!(
        "{legal} legal and {illegal} illegal proposal transitions checked; {bookings} illegal booking operations digest-verified"
    ))
}

/// Reservation state machine: double booking, wrong fee and foreign or
/// repeated cancellation all revert without changing contract state.
pub fn booking_exhaustion() -> Result<usize, String> {
    let mut engine = Engine::new(EngineConfig::default(), 1).expect("default engine");
    let occupant = engine.account("occupant").unwrap();
    let other = engine.account("member1").unwrap();
    let fee = engine.chain().reservations().booking_fee();
    let book = |room: &str| Call::BookRoom { room: room.into(), slot: "2024-09-16T09:00".into() };
    let r = engine.call(occupant, book("BFH-201"), fee).map_err(|e| e.to_string())?;
    ensure(r.is_success(), || "first booking reverted".into())?;
    let Some(CallOutput::BookingId { booking_id }) = r.output else { return Err("booking returns an id".into()) };
    let illegal: Vec<(Address, Call, NativeAmount)> = vec![
        (other, book("BFH-201"), fee),
        (other, book("BFH-202"), NativeAmount(fee.0 / 10)),
        (other, book("BFH-202"), NativeAmount::ZERO),
        (other, Call::CancelBooking { booking_id }, NativeAmount::ZERO),
        (occupant, Call::CancelBooking { booking_id: booking_id + 100 }, NativeAmount::ZERO),
    ];
    let n = illegal.len();
    for (who, call, value) in illegal {
        let sink = engine.chain().contracts().fee_sink;
        let before = engine.chain().state_digest_excluding(&[who, sink]);
        let desc = format!("{call:?}");
        let code = match engine.call(who, call, value) {
            Ok(r) => r.revert_code().map(str::to_string),
            Err(e) => Some(e.code().to_string()),
        };
        ensure(code.is_some(), || format!("illegal {desc} succeeded"))?;
        ensure(engine.chain().state_digest_excluding(&[who, sink]) == before, || format!("illegal {desc} changed state"))?;
    }
    Ok(n)
}

// ---- simulation properties ------------------------------------------------

pub fn random_sim_config(rng: &mut ChaCha8Rng) -> SimConfig {
    SimConfig {
        ambient_temperature: rng.gen_range(10.0..35.0),
        ambient_humidity: rng.gen_range(20.0..80.0),
        natural_lux: (0..rng.gen_range(1..=24)).map(|_| rng.gen_range(0.0..800.0)).collect(),
        ambient_co: rng.gen_range(350.0..600.0),
        k_temperature: rng.gen_range(1e-5..0.05),
        k_humidity: rng.gen_range(1e-5..0.05),
        k_co: rng.gen_range(1e-5..0.05),
        fan_cooling: rng.gen_range(1e-5..0.01),
        humidifier_gain: rng.gen_range(1e-5..0.01),
        light_gain: rng.gen_range(0.1..5.0),
        occupant_heat: rng.gen_range(0.0..0.001),
        occupant_co: rng.gen_range(0.0..0.5),
        purifier_removal: rng.gen_range(1e-4..0.5),
        ..SimConfig::default()
    }
}

fn start_state(rng: &mut ChaCha8Rng, cfg: &SimConfig) -> (f64, f64, f64, f64) {
    (
        cfg.ambient_temperature + rng.gen_range(-10.0..10.0),
        rng.gen_range(0.0..100.0),
        rng.gen_range(0.0..800.0),
        cfg.ambient_co + rng.gen_range(0.0..1500.0),
    )
}

pub fn relaxation_monotone(cfg: &SimConfig, start: (f64, f64, f64, f64), ticks: usize) -> Result<(), String> {
    let mut sim = Sim::reset(cfg.clone(), 0).map_err(|e| e.to_string())?;
    sim.set_environment(start.0, start.1, start.2, start.3);
    let dist = |e: &EnvState| {
        [
            (e.temperature - cfg.ambient_temperature).abs(),
            (e.humidity - cfg.ambient_humidity).abs(),
            (e.co - cfg.ambient_co).abs(),
        ]
    };
    let mut prev = dist(&sim.read_sensors());
    for t in 0..ticks {
        let d = dist(&sim.tick(1).map_err(|e| e.to_string())?);
        for (i, name) in ["temperature", "humidity", "CO"].iter().enumerate() {
            ensure(d[i] <= prev[i], || format!("{name} moved away from ambient at tick {t}: {} -> {}", prev[i], d[i]))?;
        }
        prev = d;
    }
    Ok(())
}

pub fn actuator_monotone(cfg: &SimConfig, start: (f64, f64, f64, f64), occupancy: i64, ticks: i64) -> Result<(), String> {
    let run = |kind: ApplianceKind, level: i64| -> Result<EnvState, String> {
        let mut sim = Sim::reset(cfg.clone(), 0).map_err(|e| e.to_string())?;
        sim.set_environment(start.0, start.1, start.2, start.3);
        sim.set_occupancy(occupancy).map_err(|e| e.to_string())?;
        sim.set_appliance(kind, level).map_err(|e| e.to_string())?;
        sim.tick(ticks).map_err(|e| e.to_string())
    };
    for lo in 0..3 {
        let (a, b) = (run(ApplianceKind::Fan, lo)?, run(ApplianceKind::Fan, lo + 1)?);
        ensure(b.temperature <= a.temperature, || format!("fan {} is warmer than fan {lo}", lo + 1))?;
    }
    for lo in 0..7 {
        let (a, b) = (run(ApplianceKind::Purifier, lo)?, run(ApplianceKind::Purifier, lo + 1)?);
        ensure(b.co <= a.co, || format!("purifier {} leaves more CO than purifier {lo}", lo + 1))?;
    }
    for lo in (0..100).step_by(10) {
        let (a, b) = (run(ApplianceKind::Light, lo)?, run(ApplianceKind::Light, lo + 10)?);
        ensure(b.luminance > a.luminance, || format!("light {} is not brighter than light {lo}", lo + 10))?;
    }
    Ok(())
}

/// Meter delta over a random schedule equals Σ power × duration, exactly.
pub fn energy_additive(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mut sim = Sim::reset(cfg.clone(), 0).map_err(|e| e.to_string())?;
    let warmup = rng.gen_range(1..600);
    sim.tick(warmup).map_err(|e| e.to_string())?;
    let start = sim.meter();
    let mut expected_mws: u128 = 0;
    for _ in 0..rng.gen_range(1..20) {
        let mut levels = ApplianceLevels::default();
        for kind in ApplianceKind::ALL {
            let level = match kind {
                ApplianceKind::Light => rng.gen_range(0..=10) * 10,
                _ => rng.gen_range(0..=kind.max_level() as i64),
            };
            sim.set_appliance(kind, level).map_err(|e| e.to_string())?;
            levels.set(kind, level as u8);
        }
        let dt = rng.gen_range(1..900);
        sim.tick(dt).map_err(|e| e.to_string())?;
        let power: u128 = ApplianceKind::ALL.iter().map(|k| cfg.power.power_mw(*k, levels.get(*k)) as u128).sum();
        expected_mws += power * dt as u128;
    }
    let end = sim.meter();
    let got = end.milliwatt_seconds - start.milliwatt_seconds;
    ensure(got == expected_mws, || format!("meter advanced {got} mW·s, expected {expected_mws}"))?;
    let factor = Decimal::from(cfg.energy_scaling_factor);
    let want_kwh = Decimal::from(expected_mws) * factor / Decimal::from(3_600_000_000u64);
    let got_kwh = end.readout_kwh() - start.readout_kwh();
    ensure(got_kwh == want_kwh, || format!("readout delta {got_kwh} kWh, expected {want_kwh}"))
}

pub fn meter_reproduces_published_reading() -> Result<(), String> {
    let meter = EnergyMeter::from_raw_kwh(dec("5.6825"), 4).ok_or("raw reading not representable")?;
    ensure(meter.readout_kwh() == dec("22.73"), || format!("readout {}", meter.readout_kwh()))
}

pub fn sim_properties(configs: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..configs {
        let cfg = random_sim_config(&mut rng);
        let start = start_state(&mut rng, &cfg);
        relaxation_monotone(&cfg, start, 400).map_err(|e| format!("config {i}: relaxation: {e}"))?;
        let occ = rng.gen_range(0..=10);
        actuator_monotone(&cfg, start, occ, 300).map_err(|e| format!("config {i}: actuators: {e}"))?;
        energy_additive(&cfg, &mut rng).map_err(|e| format!("config {i}: energy: {e}"))?;
    }
    meter_reproduces_published_reading()?;
    Ok(format!("{configs} random configs hold all three properties; 5.6825 kWh raw reads 22.73 kWh"))
}

// ---- agent policy -----------------------------------------------------------

pub fn decision_set(decisions: &[dab_core::agent::AgentDecision]) -> BTreeMap<ApplianceKind, u8> {
    decisions
        .iter()
        .filter_map(|d| match d.decision {
            Decision::SetLevel { device, new_level } => Some((device, new_level)),
            Decision::Alert { .. } => None,
        })
        .collect()
}

pub fn control_reading_check() -> Check {
    let env = EnvState { temperature: 28.0, humidity: 45.0, luminance: 34.0, co: 752.0, occupancy: 0, sim_time: 0 };
    let thresholds = ThresholdSet::default();
    ensure(thresholds == ThresholdSet { temperature: [200, 270], humidity: [40, 100], luminance: [50, 150], co: [400, 1000] }, || {
        "default thresholds differ".into()
    })?;
    let out = control_cycle(&thresholds, &env, &Actuators::default(), &PolicyConfig::default()).map_err(|e| e.to_string())?;
    let want = BTreeMap::from([(ApplianceKind::Fan, 3), (ApplianceKind::Light, 90)]);
    ensure(out.len() == 2 && decision_set(&out) == want, || format!("decided {out:?}"))?;
    Ok("(28 °C, 45 %, 34 lux, 752 ppm) -> exactly {fan 3, light 90}".into())
}

pub fn occupancy_check() -> Check {
    let cfg = PolicyConfig::default();
    let mut levels = ApplianceLevels::default();
    levels.set(ApplianceKind::Fan, 1);
    levels.set(ApplianceKind::Purifier, 1);
    let busy = occupancy_cycle(10, &levels, &cfg, 0);
    let want = BTreeMap::from([(ApplianceKind::Fan, 3), (ApplianceKind::Purifier, 7)]);
    ensure(busy.len() == 2 && decision_set(&busy) == want, || format!("occupancy 10 decided {busy:?}"))?;
    let mut after = levels;
    for d in &busy {
        if let Decision::SetLevel { device, new_level } = d.decision {
            after.set(device, new_level);
        }
    }
    after.set(ApplianceKind::Light, 60);
    after.set(ApplianceKind::Humidifier, 2);
    let empty = occupancy_cycle(0, &after, &cfg, 0);
    let all_off = decision_set(&empty);
    ensure(all_off.len() == 4 && all_off.values().all(|l| *l == 0), || format!("occupancy 0 decided {empty:?}"))?;
    Ok("occupancy 10 -> {fan 3, purifier 7}; occupancy 0 -> every device at 0".into())
}
