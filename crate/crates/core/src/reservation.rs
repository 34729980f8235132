//! Fee-bearing space reservations. The fee is forwarded to the DAO treasury by
//! the ledger; this module owns the booking book-keeping.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Address, NativeAmount};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReservationError {
    #[error("booking fee must be exactly {expected:?}, got {attached:?}")]
    IncorrectFee { expected: NativeAmount, attached: NativeAmount },
    #[error("{room} is already booked for {slot} (booking {booking_id})")]
    SlotTaken { room: String, slot: String, booking_id: u64 },
    #[error("booking {0} does not exist")]
    UnknownBooking(u64),
    #[error("not the booking owner")]
    NotBookingOwner,
    #[error("room and slot must be non-empty")]
    EmptyRoomOrSlot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReservationConfig {
    pub booking_fee: NativeAmount,
    /// Return the fee from the treasury when a booking is cancelled.
    #[serde(default)]
    pub refund_on_cancel: bool,
    /// Rooms shown on the twin even before their first booking.
    #[serde(default)]
    pub rooms: Vec<String>,
}

impl Default for ReservationConfig {
    fn default() -> Self {
        Self {
            booking_fee: NativeAmount(10_000_000_000_000_000),
            refund_on_cancel: false,
            rooms: vec!["BFH-201".into(), "BFH-202".into(), "BFH-203".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Booking {
    pub booking_id: u64,
    pub user: Address,
    pub room: String,
    pub slot: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SlotStatus {
    Free,
    Occupied { booking_id: u64 },
}

pub fn canonical(s: &str) -> String {
    s.trim().to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reservations {
    config: ReservationConfig,
    next_id: u64,
    bookings: BTreeMap<u64, Booking>,
    /// Derived (room, slot) index over `bookings`.
    #[serde(skip)]
    by_slot: BTreeMap<(String, String), u64>,
    /// Count of successful `book_room` calls, including later-cancelled ones.
    booked_total: u64,
}

impl Reservations {
    pub fn new(config: ReservationConfig) -> Self {
        Self { config, next_id: 1, bookings: BTreeMap::new(), by_slot: BTreeMap::new(), booked_total: 0 }
    }

    pub fn config(&self) -> &ReservationConfig {
        &self.config
    }

    pub fn booking_fee(&self) -> NativeAmount {
        self.config.booking_fee
    }

    /// Records a booking. The caller moves `attached` to the treasury on success.
    pub fn book_room(
        &mut self,
        user: Address,
        room: &str,
        slot: &str,
        attached: NativeAmount,
    ) -> Result<u64, ReservationError> {
        if attached != self.config.booking_fee {
            return Err(ReservationError::IncorrectFee { expected: self.config.booking_fee, attached });
        }
        let (room, slot) = (canonical(room), canonical(slot));
        if room.is_empty() || slot.is_empty() {
            return Err(ReservationError::EmptyRoomOrSlot);
        }
        if let Some(&booking_id) = self.by_slot.get(&(room.clone(), slot.clone())) {
            return Err(ReservationError::SlotTaken { room, slot, booking_id });
        }
        let booking_id = self.next_id;
        self.next_id += 1;
        self.booked_total += 1;
        self.by_slot.insert((room.clone(), slot.clone()), booking_id);
        self.bookings.insert(booking_id, Booking { booking_id, user, room, slot });
        Ok(booking_id)
    }

    /// Removes a booking owned by `user`; returns it so the caller can refund.
    pub fn cancel_booking(&mut self, user: Address, booking_id: u64) -> Result<Booking, ReservationError> {
        let booking = self.bookings.get(&booking_id).ok_or(ReservationError::UnknownBooking(booking_id))?;
        if booking.user != user {
            return Err(ReservationError::NotBookingOwner);
        }
        let booking = self.bookings.remove(&booking_id).expect("looked up above");
        self.by_slot.remove(&(booking.room.clone(), booking.slot.clone()));
        Ok(booking)
    }

    pub fn booking_status(&self, room: &str, slot: &str) -> SlotStatus {
        match self.by_slot.get(&(canonical(room), canonical(slot))) {
            Some(&booking_id) => SlotStatus::Occupied { booking_id },
            None => SlotStatus::Free,
        }
    }

    pub fn bookings_history(&self, user: &Address) -> Vec<Booking> {
        self.bookings.values().filter(|b| &b.user == user).cloned().collect()
    }

    pub fn live_bookings(&self) -> impl Iterator<Item = &Booking> {
        self.bookings.values()
    }

    pub fn get(&self, booking_id: u64) -> Option<&Booking> {
        self.bookings.get(&booking_id)
    }

    pub fn booked_total(&self) -> u64 {
        self.booked_total
    }

    /// Configured rooms plus any room that currently holds a booking.
    pub fn rooms(&self) -> Vec<String> {
        let mut rooms: Vec<String> = self.config.rooms.iter().map(|r| canonical(r)).collect();
        for b in self.bookings.values() {
            if !rooms.contains(&b.room) {
                rooms.push(b.room.clone());
            }
        }
        rooms
    }
}
