//! Applications built on the lists: anonymous asset transfer and blind-signature e-voting.

pub mod anon_at;
pub mod evote;

use thiserror::Error;

pub use anon_at::{choose_leader, pour, verify_pour, AnonAt, AuditEntry, PourTx, Token, TransferReceipt, Wallet, WalletMap};
pub use evote::{unicity_violations, Ballot, EVote};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscretizeError {
    #[error("unit must be positive")]
    ZeroUnit,
    #[error("balance {balance} is not a multiple of {unit}")]
    NotMultiple { balance: u64, unit: u64 },
    #[error("balance {balance} needs {needed} slots of {unit}, only {slots} available")]
    TooFewSlots { balance: u64, unit: u64, needed: u64, slots: usize },
}

/// Splits `balance` into `slots` amounts, each 0 or `unit`, filling the leading slots.
pub fn discretize(balance: u64, unit: u64, slots: usize) -> Result<Vec<u64>, DiscretizeError> {
    if unit == 0 {
        return Err(DiscretizeError::ZeroUnit);
    }
    if !balance.is_multiple_of(unit) {
        return Err(DiscretizeError::NotMultiple { balance, unit });
    }
    let needed = balance / unit;
    if needed > slots as u64 {
        return Err(DiscretizeError::TooFewSlots { balance, unit, needed, slots });
    }
    let mut out = vec![0; slots];
    out[..needed as usize].fill(unit);
    Ok(out)
}
