//! Prompt rendering in digit (linguistic) or nucleotide (genomic) alphabets.
//!
//! A prompt for `n` demonstrations is
//! `enc(x1) enc(f(x1)) SEP … SEP enc(xn) enc(f(xn)) SEP enc(x)` with no
//! whitespace anywhere; the model must continue with `k` symbols.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstring::Bitstring;
use crate::taskgen::TaskFunction;

const LINGUISTIC_ALPHABET: [char; 10] = ['0', '1', '2', '3', '4', '5', '6', '7', '8', '9'];
const GENOMIC_ALPHABET: [char; 4] = ['A', 'T', 'C', 'G'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Linguistic,
    Genomic,
}

impl Modality {
    pub fn alphabet(self) -> &'static [char] {
        match self {
            Modality::Linguistic => &LINGUISTIC_ALPHABET,
            Modality::Genomic => &GENOMIC_ALPHABET,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Linguistic => "linguistic",
            Modality::Genomic => "genomic",
        })
    }
}

impl FromStr for Modality {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linguistic" => Ok(Modality::Linguistic),
            "genomic" => Ok(Modality::Genomic),
            other => Err(EncodingError::UnknownModality(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("unknown modality {0:?}")]
    UnknownModality(String),
    #[error("symbols {zero:?}/{one:?}/{separator:?} must be distinct members of the {modality} alphabet")]
    BadScheme { modality: Modality, zero: char, one: char, separator: char },
    #[error("query {0} also appears as a demonstration")]
    QueryInDemos(Bitstring),
    #[error("demonstration {0} appears more than once")]
    DuplicateDemo(Bitstring),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("unparseable prompt: {0}")]
    Unparseable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodingScheme {
    pub modality: Modality,
    pub zero: char,
    pub one: char,
    pub separator: char,
}

impl EncodingScheme {
    pub fn new(modality: Modality, zero: char, one: char, separator: char) -> Result<Self, EncodingError> {
        let alphabet = modality.alphabet();
        let ok = [zero, one, separator].iter().all(|c| alphabet.contains(c))
            && zero != one
            && zero != separator
            && one != separator;
        if !ok {
            return Err(EncodingError::BadScheme { modality, zero, one, separator });
        }
        Ok(Self { modality, zero, one, separator })
    }

    pub fn encode(&self, x: &Bitstring) -> String {
        x.render(self.zero, self.one)
    }
}

/// Draws zero, one and separator symbols without replacement.
pub fn sample_encoding<R: Rng + ?Sized>(modality: Modality, rng: &mut R) -> EncodingScheme {
    let alphabet = modality.alphabet();
    let picks = index::sample(rng, alphabet.len(), 3);
    let [z, o, s] = [picks.index(0), picks.index(1), picks.index(2)].map(|i| alphabet[i]);
    EncodingScheme::new(modality, z, o, s).expect("distinct alphabet members")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    /// Symbols the model must generate.
    pub expected_length: usize,
}

pub fn encode_trial(
    f: &TaskFunction,
    demos: &[Bitstring],
    query: Bitstring,
    scheme: &EncodingScheme,
) -> Result<Prompt, EncodingError> {
    let k = f.k();
    for x in demos.iter().chain(std::iter::once(&query)) {
        if x.len() != k {
            return Err(EncodingError::LengthMismatch { expected: k, actual: x.len() });
        }
    }
    for (i, x) in demos.iter().enumerate() {
        if demos[..i].contains(x) {
            return Err(EncodingError::DuplicateDemo(*x));
        }
    }
    if demos.contains(&query) {
        return Err(EncodingError::QueryInDemos(query));
    }

    let mut text = String::with_capacity(demos.len() * (2 * k + 1) + k);
    for x in demos {
        text.push_str(&scheme.encode(x));
        text.push_str(&scheme.encode(&f.apply(*x)));
        text.push(scheme.separator);
    }
    text.push_str(&scheme.encode(&query));
    Ok(Prompt { text, expected_length: k })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecodeFailure {
    #[error("completion has {got} symbols, need {need}")]
    Truncated { got: usize, need: usize },
    #[error("symbol {symbol:?} at position {position} is not a bit symbol")]
    InvalidSymbol { position: usize, symbol: char },
    #[error("backend reported: {message}")]
    Remote { message: String },
}

/// Reads the first `k` characters of `text` as a bitstring.
pub fn decode_completion(text: &str, scheme: &EncodingScheme, k: usize) -> Result<Bitstring, DecodeFailure> {
    let mut bits = Vec::with_capacity(k);
    for (position, symbol) in text.chars().take(k).enumerate() {
        if symbol == scheme.zero {
            bits.push(false);
        } else if symbol == scheme.one {
            bits.push(true);
        } else {
            return Err(DecodeFailure::InvalidSymbol { position, symbol });
        }
    }
    if bits.len() < k {
        return Err(DecodeFailure::Truncated { got: bits.len(), need: k });
    }
    Ok(Bitstring::from_bits(&bits).expect("k within bounds"))
}

/// Demonstration pairs and query recovered from a rendered prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPrompt {
    pub demos: Vec<(Bitstring, Bitstring)>,
    pub query: Bitstring,
}

pub fn parse_prompt(text: &str, scheme: &EncodingScheme, k: usize) -> Result<ParsedPrompt, EncodingError> {
    let decode = |s: &str| {
        decode_completion(s, scheme, k).map_err(|e| EncodingError::Unparseable(e.to_string()))
    };
    let mut segments: Vec<&str> = text.split(scheme.separator).collect();
    let query_text = segments.pop().expect("split yields at least one segment");
    if query_text.chars().count() != k {
        return Err(EncodingError::Unparseable(format!("query segment {query_text:?} is not {k} symbols")));
    }
    let query = decode(query_text)?;
    let demos = segments
        .into_iter()
        .map(|seg| {
            let chars: Vec<char> = seg.chars().collect();
            if chars.len() != 2 * k {
                return Err(EncodingError::Unparseable(format!("demo segment {seg:?} is not {} symbols", 2 * k)));
            }
            let input: String = chars[..k].iter().collect();
            let output: String = chars[k..].iter().collect();
            Ok((decode(&input)?, decode(&output)?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParsedPrompt { demos, query })
}
