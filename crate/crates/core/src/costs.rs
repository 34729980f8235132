//! Fee accounting and the monthly energy-expense workflow.

use std::str::FromStr;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::governor::Action;
use crate::ledger::{GasSchedule, OpKind};
use crate::types::{Address, NativeAmount, WEI_PER_ETH};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("gas price must be positive")]
    ZeroGasPrice,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("the computed payment rounds to zero")]
    EmptyPayment,
}

impl CostError {
    pub fn code(&self) -> &'static str {
        match self {
            CostError::ZeroGasPrice => "ZeroGasPrice",
            CostError::NonPositive(_) => "NonPositiveInput",
            CostError::EmptyPayment => "EmptyPayment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRow {
    pub operation: OpKind,
    pub contract: String,
    pub gas: u64,
    pub gas_price: NativeAmount,
    pub fee: NativeAmount,
    /// Fee in ETH-equivalent, exact.
    pub fee_eth: Decimal,
    /// Fee in USD, rounded half-up to cents.
    pub fee_usd: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub gas_price: NativeAmount,
    pub eth_usd: Decimal,
    pub rows: Vec<CostRow>,
}

impl CostReport {
    pub fn row(&self, op: OpKind) -> Option<&CostRow> {
        self.rows.iter().find(|r| r.operation == op)
    }

    /// Fixed-width text table.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<32} {:<22} {:>10} {:>14} {:>22} {:>10}\n",
            "operation", "contract", "gas", "gas price (wei)", "fee (ETH)", "fee (USD)"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<32} {:<22} {:>10} {:>14} {:>22} {:>10}\n",
                r.operation.name(),
                r.contract,
                r.gas,
                r.gas_price.0,
                r.fee_eth.normalize(),
                r.fee_usd
            ));
        }
        out
    }
}

fn usd(eth: Decimal, eth_usd: Decimal) -> Decimal {
    (eth * eth_usd).round_dp_with_strategy(2, RoundingStrategy::MidpointAwayFromZero)
}

/// One row per gas-schedule entry at a uniform gas price.
pub fn report_costs(schedule: &GasSchedule, gas_price: NativeAmount, eth_usd: Decimal) -> Result<CostReport, CostError> {
    if gas_price.0 == 0 {
        return Err(CostError::ZeroGasPrice);
    }
    if eth_usd <= Decimal::ZERO {
        return Err(CostError::NonPositive("eth_usd"));
    }
    let rows = schedule
        .entries()
        .map(|(op, gas)| {
            let fee = NativeAmount(gas as u128 * gas_price.0);
            let fee_eth = fee.to_eth_decimal();
            CostRow {
                operation: op,
                contract: op.contract().to_string(),
                gas,
                gas_price,
                fee,
                fee_eth,
                fee_usd: usd(fee_eth, eth_usd),
            }
        })
        .collect();
    Ok(CostReport { gas_price, eth_usd, rows })
}

/// A row of the reference deployment's published cost table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedFee {
    pub operation: OpKind,
    pub gas: u64,
    pub fee_eth: &'static str,
    pub fee_usd: &'static str,
}

/// Gas and fees measured on the public test network.
pub const PUBLISHED_FEES: [PublishedFee; 13] = [
    PublishedFee { operation: OpKind::DeployGovernor, gas: 3_880_388, fee_eth: "0.003880", fee_usd: "9.15" },
    PublishedFee { operation: OpKind::DeployTimelock, gas: 1_909_795, fee_eth: "0.001909", fee_usd: "4.50" },
    PublishedFee { operation: OpKind::DeployToken, gas: 1_971_098, fee_eth: "0.001971", fee_usd: "4.65" },
    PublishedFee { operation: OpKind::DeployAutomation, gas: 488_638, fee_eth: "0.011985", fee_usd: "28.26" },
    PublishedFee { operation: OpKind::DeployReservation, gas: 1_662_788, fee_eth: "0.032158", fee_usd: "75.82" },
    PublishedFee { operation: OpKind::AddMember, gas: 73_610, fee_eth: "0.000110", fee_usd: "0.26" },
    PublishedFee { operation: OpKind::Reservation, gas: 181_123, fee_eth: "0.003839", fee_usd: "9.05" },
    PublishedFee { operation: OpKind::Propose, gas: 108_168, fee_eth: "0.000199", fee_usd: "0.47" },
    PublishedFee { operation: OpKind::Vote, gas: 93_186, fee_eth: "0.000169", fee_usd: "0.40" },
    PublishedFee { operation: OpKind::Queue, gas: 123_769, fee_eth: "0.000235", fee_usd: "0.38" },
    PublishedFee { operation: OpKind::Execute, gas: 132_563, fee_eth: "0.000238", fee_usd: "0.56" },
    PublishedFee { operation: OpKind::TokenTransfer, gas: 72_954, fee_eth: "0.000139", fee_usd: "0.3286" },
    PublishedFee { operation: OpKind::NativeTransfer, gas: 21_055, fee_eth: "0.001052", fee_usd: "2.479" },
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReproducedFee {
    pub operation: OpKind,
    pub gas: u64,
    /// Whole-wei gas price implied by the published fee (fee ÷ gas, rounded).
    pub derived_gas_price: NativeAmount,
    pub published_fee_eth: Decimal,
    /// gas × derived price, exact.
    pub reproduced_fee: NativeAmount,
}

impl ReproducedFee {
    pub fn reproduced_fee_eth(&self) -> Decimal {
        self.reproduced_fee.to_eth_decimal()
    }

    pub fn abs_error(&self) -> Decimal {
        (self.reproduced_fee_eth() - self.published_fee_eth).abs()
    }
}

/// Recomputes each published fee as gas × a per-row gas price, where the price
/// is the published fee divided by the gas and rounded to a whole wei.
pub fn reproduce_published_fees() -> Vec<ReproducedFee> {
    PUBLISHED_FEES
        .iter()
        .map(|row| {
            let published_fee_eth = Decimal::from_str(row.fee_eth).expect("published fees are decimals");
            let published = NativeAmount::from_eth_decimal(published_fee_eth).expect("published fees fit");
            let gas = row.gas as u128;
            // Round half-up to the nearest wei.
            let price = (2 * published.0 + gas) / (2 * gas);
            ReproducedFee {
                operation: row.operation,
                gas: row.gas,
                derived_gas_price: NativeAmount(price),
                published_fee_eth,
                reproduced_fee: NativeAmount(gas * price),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpenseProposal {
    pub kwh: Decimal,
    pub usd_per_kwh: Decimal,
    pub eth_usd: Decimal,
    pub usd_exact: Decimal,
    /// Bill in USD rounded to cents.
    pub usd: Decimal,
    /// Payment in ETH-equivalent rounded half-up to 4 decimals.
    pub eth: Decimal,
    pub amount: NativeAmount,
    pub action: Action,
    pub description: String,
}

/// Converts a metered energy reading into a ready-to-submit payment proposal.
pub fn expense_workflow(
    kwh: Decimal,
    usd_per_kwh: Decimal,
    eth_usd: Decimal,
    provider: Address,
) -> Result<ExpenseProposal, CostError> {
    if usd_per_kwh <= Decimal::ZERO {
        return Err(CostError::NonPositive("usd_per_kwh"));
    }
    if eth_usd <= Decimal::ZERO {
        return Err(CostError::NonPositive("eth_usd"));
    }
    if kwh < Decimal::ZERO {
        return Err(CostError::NonPositive("kwh"));
    }
    let usd_exact = kwh * usd_per_kwh;
    let usd = usd_exact.round_dp_with_strategy(2, RoundingStrategy::MidpointAwayFromZero);
    let eth = (usd_exact / eth_usd).round_dp_with_strategy(4, RoundingStrategy::MidpointAwayFromZero);
    if eth.is_zero() {
        return Err(CostError::EmptyPayment);
    }
    let amount = NativeAmount::from_eth_decimal(eth).expect("4-decimal amounts are exact");
    debug_assert_eq!(amount.0 % (WEI_PER_ETH / 10_000), 0);
    let description = format!(
        "Pay electricity bill: {} kWh at {} USD/kWh = {} USD ({} ETH)",
        kwh.normalize(),
        usd_per_kwh.normalize(),
        usd,
        eth.normalize()
    );
    Ok(ExpenseProposal {
        kwh,
        usd_per_kwh,
        eth_usd,
        usd_exact,
        usd,
        eth,
        amount,
        action: Action::SendNative { to: provider, amount },
        description,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Decimal {
        Decimal::from_str(s).unwrap()
    }

    #[test]
    fn monthly_bill_converts_to_sixteen_ten_thousandths() {
        let p = expense_workflow(d("22.73"), d("0.169475"), d("2400"), Address::derive("provider")).unwrap();
        assert_eq!(p.usd, d("3.85"));
        assert_eq!(p.eth, d("0.0016"));
        assert_eq!(p.amount, NativeAmount(1_600_000_000_000_000));
    }

    #[test]
    fn zero_energy_is_an_empty_payment() {
        let err = expense_workflow(Decimal::ZERO, d("0.169475"), d("2400"), Address::derive("p")).unwrap_err();
        assert_eq!(err, CostError::EmptyPayment);
        assert!(expense_workflow(d("1"), d("0.1"), Decimal::ZERO, Address::derive("p")).is_err());
    }

    #[test]
    fn eth_rounds_half_up_at_fourth_decimal() {
        // 0.00015 ETH exactly → 0.0002
        let p = expense_workflow(d("1"), d("0.36"), d("2400"), Address::derive("p")).unwrap();
        assert_eq!(p.eth, d("0.0002"));
    }

    #[test]
    fn uniform_price_fee_is_gas_times_price() {
        let r = report_costs(&GasSchedule::default(), NativeAmount(1_000_000_000), d("2400")).unwrap();
        let propose = r.row(OpKind::Propose).unwrap();
        assert_eq!(propose.fee_eth, d("0.000108168"));
        assert_eq!(propose.fee_usd, d("0.26"));
        assert_eq!(r.rows.len(), OpKind::ALL.len());
        assert_eq!(report_costs(&GasSchedule::default(), NativeAmount(0), d("1")), Err(CostError::ZeroGasPrice));
    }

    #[test]
    fn whole_wei_prices_reproduce_published_fees() {
        for r in reproduce_published_fees() {
            assert!(r.abs_error() <= d("0.000001"), "{}: {}", r.operation, r.abs_error());
            assert!(r.derived_gas_price.0 > 0);
        }
    }

    #[test]
    fn published_gas_matches_default_schedule() {
        let s = GasSchedule::default();
        for row in PUBLISHED_FEES {
            assert_eq!(s.gas(row.operation), row.gas, "{}", row.operation);
        }
    }
}
