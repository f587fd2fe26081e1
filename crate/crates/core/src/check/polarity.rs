use serde::Serialize;
use thiserror::Error;

use crate::ir::{SessionType, TypeItem};

/// Direction of data flow on a channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Polarity {
    /// Messages flow from the provider to the client.
    Positive,
    /// Messages flow from the client to the provider.
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// Polarity of a single protocol item: positive when the provider sends.
pub fn item_polarity(item: &TypeItem) -> Polarity {
    match item {
        TypeItem::SendVal(_) | TypeItem::SendChoice(_) | TypeItem::End => Polarity::Positive,
        TypeItem::RecvVal(_) | TypeItem::RecvChoice(_) => Polarity::Negative,
    }
}

/// A session starts in the polarity of its first item.
pub fn initial_polarity(ty: &SessionType) -> Polarity {
    ty.items
        .first()
        .map(item_polarity)
        .unwrap_or(Polarity::Positive)
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("position {position} is out of range for a session type of {len} items")]
pub struct PositionOutOfRange {
    pub position: usize,
    pub len: usize,
}

pub fn polarity_at(ty: &SessionType, position: usize) -> Result<Polarity, PositionOutOfRange> {
    ty.items
        .get(position)
        .map(item_polarity)
        .ok_or(PositionOutOfRange {
            position,
            len: ty.items.len(),
        })
}

/// Indices `i` such that a shift is required between item `i - 1` and item `i`.
pub fn shift_boundaries(ty: &SessionType) -> Vec<usize> {
    ty.items
        .windows(2)
        .enumerate()
        .filter(|(_, w)| item_polarity(&w[0]) != item_polarity(&w[1]))
        .map(|(i, _)| i + 1)
        .collect()
}
