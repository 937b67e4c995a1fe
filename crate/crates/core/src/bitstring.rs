//! Fixed-length binary strings.
//!
//! Position 0 is the leftmost symbol. The packed integer value uses the
//! leftmost symbol as its most significant bit, so integer order matches
//! lexicographic string order and a truth table indexed by value lists
//! inputs in the usual `000…0, 000…1, …` order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest supported string length. Truth tables are materialized eagerly,
/// so `2^MAX_LEN` entries per function bounds memory.
pub const MAX_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitstringError {
    #[error("bitstring length {0} outside 1..={MAX_LEN}")]
    BadLength(usize),
    #[error("value {value} does not fit in {len} bits")]
    Overflow { value: u32, len: usize },
    #[error("invalid character {ch:?} at position {pos}")]
    BadChar { ch: char, pos: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    len: u8,
    value: u32,
}

impl Bitstring {
    pub fn new(value: u32, len: usize) -> Result<Self, BitstringError> {
        if len == 0 || len > MAX_LEN {
            return Err(BitstringError::BadLength(len));
        }
        if value >> len != 0 {
            return Err(BitstringError::Overflow { value, len });
        }
        Ok(Self { len: len as u8, value })
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(0, len).expect("valid length")
    }

    pub fn ones(len: usize) -> Self {
        Self::new(mask(len), len).expect("valid length")
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self, BitstringError> {
        let value = bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
        Self::new(value, bits.len())
    }

    /// Every string of length `len`, in increasing value order.
    pub fn all(len: usize) -> impl ExactSizeIterator<Item = Bitstring> {
        assert!((1..=MAX_LEN).contains(&len), "bitstring length {len}");
        (0..1u32 << len).map(move |value| Bitstring { len: len as u8, value })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Packed value; also the row index of this string in a truth table.
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn bit(&self, pos: usize) -> bool {
        assert!(pos < self.len(), "bit {pos} out of range for length {}", self.len);
        (self.value >> (self.len() - 1 - pos)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(|i| self.bit(i))
    }

    pub fn with_bit(self, pos: usize, on: bool) -> Self {
        let shift = self.len() - 1 - pos;
        let value = if on { self.value | (1 << shift) } else { self.value & !(1 << shift) };
        Self { value, ..self }
    }

    pub fn flip(self, pos: usize) -> Self {
        Self { value: self.value ^ (1 << (self.len() - 1 - pos)), ..self }
    }

    pub fn count_ones(&self) -> usize {
        self.value.count_ones() as usize
    }

    pub fn count_zeros(&self) -> usize {
        self.len() - self.count_ones()
    }

    pub fn is_uniform(&self) -> bool {
        self.value == 0 || self.value == mask(self.len())
    }

    pub fn and(self, other: Self) -> Result<Self, BitstringError> {
        self.check_len(&other)?;
        Ok(Self { value: self.value & other.value, ..self })
    }

    pub fn or(self, other: Self) -> Result<Self, BitstringError> {
        self.check_len(&other)?;
        Ok(Self { value: self.value | other.value, ..self })
    }

    pub fn xor(self, other: Self) -> Result<Self, BitstringError> {
        self.check_len(&other)?;
        Ok(Self { value: self.value ^ other.value, ..self })
    }

    fn check_len(&self, other: &Self) -> Result<(), BitstringError> {
        if self.len != other.len {
            return Err(BitstringError::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(())
    }

    /// Minority-symbol count; equals `len / 2` when 0s and 1s tie.
    pub fn bitdiversity(&self) -> usize {
        self.count_ones().min(self.count_zeros())
    }

    /// Renders the string with `zero`/`one` substituted for 0/1.
    pub fn render(&self, zero: char, one: char) -> String {
        self.bits().map(|b| if b { one } else { zero }).collect()
    }
}

pub(crate) fn mask(len: usize) -> u32 {
    if len >= 32 { u32::MAX } else { (1u32 << len) - 1 }
}

/// Minority-bit count of an output string.
pub fn bitdiversity(y: &Bitstring) -> usize {
    y.bitdiversity()
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render('0', '1'))
    }
}

impl FromStr for Bitstring {
    type Err = BitstringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .enumerate()
            .map(|(pos, ch)| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(BitstringError::BadChar { ch, pos }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_bits(&bits)
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl std::ops::Not for Bitstring {
    type Output = Self;

    fn not(self) -> Self {
        Self { value: !self.value & mask(self.len()), ..self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        let x = b("01010000");
        assert_eq!(x.value(), 0b0101_0000);
        assert_eq!(x.to_string(), "01010000");
        assert!(!x.bit(0));
        assert!(x.bit(1));
        assert!(matches!("0120".parse::<Bitstring>(), Err(BitstringError::BadChar { ch: '2', pos: 2 })));
        assert!(matches!("".parse::<Bitstring>(), Err(BitstringError::BadLength(0))));
    }

    #[test]
    fn bitdiversity_examples() {
        assert_eq!(bitdiversity(&b("00000000")), 0);
        assert_eq!(bitdiversity(&b("10110000")), 3);
        assert_eq!(bitdiversity(&b("11110000")), 4);
    }

    #[test]
    fn all_enumerates_in_order() {
        let all: Vec<_> = Bitstring::all(3).map(|x| x.to_string()).collect();
        assert_eq!(all, ["000", "001", "010", "011", "100", "101", "110", "111"]);
    }

    #[test]
    fn xor_rejects_mixed_lengths() {
        assert!(b("01").xor(b("011")).is_err());
    }

    #[test]
    fn serde_as_string() {
        let json = serde_json::to_string(&b("0110")).unwrap();
        assert_eq!(json, "\"0110\"");
        assert_eq!(serde_json::from_str::<Bitstring>(&json).unwrap(), b("0110"));
    }
}
