use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Fixed-length FIFO of in-transit quantities. The front slot is the one
/// that lands this period; a value pushed now lands `len()` periods later.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DelayLine {
    slots: VecDeque<u32>,
}

impl DelayLine {
    pub fn filled(len: usize, value: u32) -> Self {
        Self { slots: std::iter::repeat_n(value, len).collect() }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Quantity landing this period (zero for an empty line).
    pub fn front(&self) -> u32 {
        self.slots.front().copied().unwrap_or(0)
    }

    /// Drops the front slot and enqueues `incoming` at the back. Returns the dropped value.
    /// On an empty line the value passes straight through.
    pub fn shift(&mut self, incoming: u32) -> u32 {
        if self.slots.is_empty() {
            return incoming;
        }
        let out = self.slots.pop_front().unwrap_or(0);
        self.slots.push_back(incoming);
        out
    }

    pub fn total(&self) -> u64 {
        self.slots.iter().map(|&v| v as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.slots.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lands_after_len_shifts() {
        let mut line = DelayLine::filled(3, 0);
        line.shift(7);
        assert_eq!(line.front(), 0);
        line.shift(0);
        line.shift(0);
        assert_eq!(line.front(), 7);
        assert_eq!(line.len(), 3);
        assert_eq!(line.total(), 7);
    }

    #[test]
    fn empty_line_passes_through() {
        let mut line = DelayLine::filled(0, 4);
        assert_eq!(line.front(), 0);
        assert_eq!(line.shift(5), 5);
        assert!(line.is_empty());
    }
}
