//! Ulam–Harris labels.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::Error;

/// A particle's ancestry as a word over `{1, 2}`; the root is the empty word.
///
/// Ordering is lexicographic, so a parent sorts before its descendants.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Vec<u8>);

impl Label {
    pub fn root() -> Self {
        Label(Vec::new())
    }

    /// Label of child `digit` (1 or 2).
    pub fn child(&self, digit: u8) -> Self {
        debug_assert!(digit == 1 || digit == 2);
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(digit);
        Label(v)
    }

    pub fn generation(&self) -> usize {
        self.0.len()
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn parent(&self) -> Option<Self> {
        let (_, rest) = self.0.split_last()?;
        Some(Label(rest.to_vec()))
    }

    pub fn is_ancestor_of(&self, other: &Label) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Stream key for this label in a tree seeded by `seed`.
    pub fn stream_key(&self, seed: u64) -> u64 {
        self.0.iter().fold(crate::rng::root_key(seed), |k, &d| crate::rng::child_key(k, d))
    }
}

/// The root prints as `0`; other labels print their digits.
impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "0" {
            return Ok(Label::root());
        }
        s.bytes()
            .map(|b| match b {
                b'1' => Ok(1),
                b'2' => Ok(2),
                _ => Err(Error::DomainError("label digits must be 1 or 2")),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(Label)
    }
}
