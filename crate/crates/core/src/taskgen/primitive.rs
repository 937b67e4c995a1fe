//! The thirty unary bitstring primitives.
//!
//! Half-splitting primitives use `h = len / 2`: the left half is `[0, h)`,
//! the right half is `[len - h, len)`, and for odd lengths the center bit
//! `h` belongs to neither. Primitives that "keep" or "zero" the right half
//! treat the center bit as part of it; swaps and mirrors leave it in place.

use std::fmt;
use std::str::FromStr;

use crate::bitstring::Bitstring;
use crate::taskgen::TaskError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Primitive {
    AlternatingStartOne,
    AlternatingStartZero,
    CenterMask,
    DoubleRotl,
    DoubleRotr,
    EdgeMask,
    FlipBits,
    Identity,
    InvertPrefix,
    InvertSuffix,
    KeepEvenPositions,
    KeepOddPositions,
    LeftHalf,
    Majority,
    MetaConstant,
    Minority,
    MirrorHalf,
    OnesIfPalindrome,
    ParityFill,
    ReverseBits,
    RightHalf,
    Rotl1,
    Rotr1,
    ShiftLeftZero,
    ShiftRightZero,
    SpreadFirstBit,
    SpreadLastBit,
    SwapHalves,
    SwapPairs,
    XorWithS0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveKind {
    FirstStage,
    /// Needs the original input `s0`; only valid after another primitive
    /// (or standalone, where `s0` is the input itself).
    SecondStageOnly,
}

/// Extra inputs a stage may need beyond the string it transforms.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageInputs {
    pub s0: Option<Bitstring>,
    pub constant: Option<Bitstring>,
}

impl Primitive {
    pub const ALL: [Primitive; 30] = [
        Primitive::AlternatingStartOne,
        Primitive::AlternatingStartZero,
        Primitive::CenterMask,
        Primitive::DoubleRotl,
        Primitive::DoubleRotr,
        Primitive::EdgeMask,
        Primitive::FlipBits,
        Primitive::Identity,
        Primitive::InvertPrefix,
        Primitive::InvertSuffix,
        Primitive::KeepEvenPositions,
        Primitive::KeepOddPositions,
        Primitive::LeftHalf,
        Primitive::Majority,
        Primitive::MetaConstant,
        Primitive::Minority,
        Primitive::MirrorHalf,
        Primitive::OnesIfPalindrome,
        Primitive::ParityFill,
        Primitive::ReverseBits,
        Primitive::RightHalf,
        Primitive::Rotl1,
        Primitive::Rotr1,
        Primitive::ShiftLeftZero,
        Primitive::ShiftRightZero,
        Primitive::SpreadFirstBit,
        Primitive::SpreadLastBit,
        Primitive::SwapHalves,
        Primitive::SwapPairs,
        Primitive::XorWithS0,
    ];

    pub fn name(self) -> &'static str {
        use Primitive::*;
        match self {
            AlternatingStartOne => "alternating_start_one",
            AlternatingStartZero => "alternating_start_zero",
            CenterMask => "center_mask",
            DoubleRotl => "double_rotl",
            DoubleRotr => "double_rotr",
            EdgeMask => "edge_mask",
            FlipBits => "flip_bits",
            Identity => "identity",
            InvertPrefix => "invert_prefix",
            InvertSuffix => "invert_suffix",
            KeepEvenPositions => "keep_even_positions",
            KeepOddPositions => "keep_odd_positions",
            LeftHalf => "left_half",
            Majority => "majority",
            MetaConstant => "meta_constant",
            Minority => "minority",
            MirrorHalf => "mirror_half",
            OnesIfPalindrome => "ones_if_palindrome",
            ParityFill => "parity_fill",
            ReverseBits => "reverse_bits",
            RightHalf => "right_half",
            Rotl1 => "rotl1",
            Rotr1 => "rotr1",
            ShiftLeftZero => "shift_left_zero",
            ShiftRightZero => "shift_right_zero",
            SpreadFirstBit => "spread_first_bit",
            SpreadLastBit => "spread_last_bit",
            SwapHalves => "swap_halves",
            SwapPairs => "swap_pairs",
            XorWithS0 => "xor_with_s0",
        }
    }

    pub fn kind(self) -> PrimitiveKind {
        match self {
            Primitive::XorWithS0 => PrimitiveKind::SecondStageOnly,
            _ => PrimitiveKind::FirstStage,
        }
    }

    pub fn apply(self, x: Bitstring, inputs: &StageInputs) -> Result<Bitstring, TaskError> {
        use Primitive::*;
        let n = x.len();
        let h = n / 2;
        if let Some(s0) = inputs.s0 {
            if s0.len() != n {
                return Err(TaskError::LengthMismatch { expected: n, actual: s0.len() });
            }
        }
        let map = |f: &dyn Fn(usize) -> bool| -> Bitstring {
            let bits: Vec<bool> = (0..n).map(f).collect();
            Bitstring::from_bits(&bits).expect("length preserved")
        };
        let fill = |on: bool| if on { Bitstring::ones(n) } else { Bitstring::zeros(n) };
        let out = match self {
            Identity => x,
            FlipBits => !x,
            ReverseBits => map(&|i| x.bit(n - 1 - i)),
            Rotl1 => map(&|i| x.bit((i + 1) % n)),
            Rotr1 => map(&|i| x.bit((i + n - 1) % n)),
            DoubleRotl => map(&|i| x.bit((i + 2) % n)),
            DoubleRotr => map(&|i| x.bit((i + 2 * n - 2) % n)),
            ShiftLeftZero => map(&|i| i + 1 < n && x.bit(i + 1)),
            ShiftRightZero => map(&|i| i > 0 && x.bit(i - 1)),
            SwapPairs => map(&|i| {
                let j = i ^ 1;
                if j < n { x.bit(j) } else { x.bit(i) }
            }),
            SwapHalves => map(&|i| {
                if i < h {
                    x.bit(n - h + i)
                } else if i >= n - h {
                    x.bit(i - (n - h))
                } else {
                    x.bit(i)
                }
            }),
            MirrorHalf => map(&|i| if i >= n - h { x.bit(n - 1 - i) } else { x.bit(i) }),
            LeftHalf => map(&|i| i < h && x.bit(i)),
            RightHalf => map(&|i| i >= h && x.bit(i)),
            InvertPrefix => map(&|i| x.bit(i) ^ (i < h)),
            InvertSuffix => map(&|i| x.bit(i) ^ (i >= h)),
            KeepEvenPositions => map(&|i| i % 2 == 0 && x.bit(i)),
            KeepOddPositions => map(&|i| i % 2 == 1 && x.bit(i)),
            EdgeMask => {
                if n <= 1 {
                    x
                } else {
                    map(&|i| (i == 0 || i == n - 1) && x.bit(i))
                }
            }
            CenterMask => map(&|i| n > 2 && i != 0 && i != n - 1 && x.bit(i)),
            // 1 marks a mismatch against 1010… / 0101…
            AlternatingStartOne => map(&|i| x.bit(i) != (i % 2 == 0)),
            AlternatingStartZero => map(&|i| x.bit(i) != (i % 2 == 1)),
            Majority => fill(2 * x.count_ones() >= n),
            Minority => fill(2 * x.count_ones() < n),
            ParityFill => fill(x.count_ones() % 2 == 1),
            OnesIfPalindrome => fill((0..h).all(|i| x.bit(i) == x.bit(n - 1 - i))),
            SpreadFirstBit => fill(x.bit(0)),
            SpreadLastBit => fill(x.bit(n - 1)),
            MetaConstant => {
                let c = inputs.constant.ok_or(TaskError::MissingConstant)?;
                if c.len() != n {
                    return Err(TaskError::LengthMismatch { expected: n, actual: c.len() });
                }
                c
            }
            XorWithS0 => {
                let s0 = inputs.s0.ok_or(TaskError::MissingOriginal)?;
                x.xor(s0).expect("lengths checked")
            }
        };
        Ok(out)
    }
}

/// Applies a primitive by name. `s0` must be given exactly when the
/// primitive is second-stage-only. `meta_constant` has no free-standing
/// value; build it through a registry instead.
pub fn apply_primitive(name: &str, x: Bitstring, s0: Option<Bitstring>) -> Result<Bitstring, TaskError> {
    let p: Primitive = name.parse()?;
    match (p.kind(), s0) {
        (PrimitiveKind::SecondStageOnly, None) => return Err(TaskError::MissingOriginal),
        (PrimitiveKind::FirstStage, Some(_)) => return Err(TaskError::UnexpectedOriginal(p.name())),
        _ => {}
    }
    p.apply(x, &StageInputs { s0, constant: None })
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Primitive {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Primitive::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| TaskError::UnknownPrimitive(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    fn ap(name: &str, x: &str) -> String {
        apply_primitive(name, b(x), None).unwrap().to_string()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(ap("shift_right_zero", "01010000"), "00101000");
        assert_eq!(ap("identity", "10110101"), "10110101");
        assert_eq!(ap("majority", "11110000"), "11111111");
        assert_eq!(ap("minority", "11110000"), "00000000");
        assert_eq!(ap("flip_bits", "00000000"), "11111111");
        assert_eq!(ap("swap_pairs", "10010011"), "01100011");
    }

    #[test]
    fn descriptions_by_hand() {
        assert_eq!(ap("alternating_start_one", "10101010"), "00000000");
        assert_eq!(ap("alternating_start_zero", "10101010"), "11111111");
        assert_eq!(ap("center_mask", "11111111"), "01111110");
        assert_eq!(ap("edge_mask", "11111111"), "10000001");
        assert_eq!(ap("double_rotl", "11000000"), "00000011");
        assert_eq!(ap("double_rotr", "00000011"), "11000000");
        assert_eq!(ap("rotl1", "10000000"), "00000001");
        assert_eq!(ap("rotr1", "00000001"), "10000000");
        assert_eq!(ap("invert_prefix", "00000000"), "11110000");
        assert_eq!(ap("invert_suffix", "00000000"), "00001111");
        assert_eq!(ap("left_half", "11111111"), "11110000");
        assert_eq!(ap("right_half", "11111111"), "00001111");
        assert_eq!(ap("mirror_half", "11010000"), "11011011");
        assert_eq!(ap("swap_halves", "11010000"), "00001101");
        assert_eq!(ap("ones_if_palindrome", "10011001"), "11111111");
        assert_eq!(ap("ones_if_palindrome", "10011000"), "00000000");
        assert_eq!(ap("parity_fill", "10000000"), "11111111");
        assert_eq!(ap("spread_first_bit", "10000000"), "11111111");
        assert_eq!(ap("spread_last_bit", "10000000"), "00000000");
        assert_eq!(ap("shift_left_zero", "10000001"), "00000010");
        assert_eq!(ap("keep_even_positions", "11111111"), "10101010");
        assert_eq!(ap("keep_odd_positions", "11111111"), "01010101");
        assert_eq!(ap("reverse_bits", "11010000"), "00001011");
    }

    #[test]
    fn odd_length_center_bit() {
        assert_eq!(ap("mirror_half", "10100"), "10101");
        assert_eq!(ap("swap_halves", "10100"), "00110");
        assert_eq!(ap("left_half", "11111"), "11000");
        assert_eq!(ap("right_half", "11111"), "00111");
        assert_eq!(ap("center_mask", "11"), "00");
        assert_eq!(ap("edge_mask", "1"), "1");
        assert_eq!(ap("swap_pairs", "101"), "011");
    }

    #[test]
    fn error_paths() {
        assert!(matches!(apply_primitive("nope", b("0"), None), Err(TaskError::UnknownPrimitive(_))));
        assert!(matches!(apply_primitive("xor_with_s0", b("01"), None), Err(TaskError::MissingOriginal)));
        assert!(matches!(
            apply_primitive("identity", b("01"), Some(b("01"))),
            Err(TaskError::UnexpectedOriginal(_))
        ));
        assert!(matches!(
            apply_primitive("xor_with_s0", b("01"), Some(b("011"))),
            Err(TaskError::LengthMismatch { .. })
        ));
        assert!(matches!(apply_primitive("meta_constant", b("01"), None), Err(TaskError::MissingConstant)));
        assert_eq!(apply_primitive("xor_with_s0", b("0110"), Some(b("0011"))).unwrap(), b("0101"));
    }

    #[test]
    fn names_round_trip() {
        for p in Primitive::ALL {
            assert_eq!(p.name().parse::<Primitive>().unwrap(), p);
        }
        let second: Vec<_> = Primitive::ALL.iter().filter(|p| p.kind() == PrimitiveKind::SecondStageOnly).collect();
        assert_eq!(second, [&Primitive::XorWithS0]);
    }
}
