use std::fmt;

use super::encoding::{EncodingError, EncodingFunction};

/// A finite family `(σ_1,…,σ_m)` where `σ_k` has width exactly `k`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FamilyPrefix {
    entries: Vec<EncodingFunction>,
}

impl FamilyPrefix {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn new(entries: Vec<EncodingFunction>) -> Result<Self, EncodingError> {
        for (i, e) in entries.iter().enumerate() {
            if e.width() != i as u32 + 1 {
                return Err(EncodingError::UnsupportedWidth(e.width()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[EncodingFunction] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends the next encoding function; its width must be `len() + 1`.
    pub fn extended(&self, next: EncodingFunction) -> Result<Self, EncodingError> {
        if next.width() != self.entries.len() as u32 + 1 {
            return Err(EncodingError::UnsupportedWidth(next.width()));
        }
        let mut entries = self.entries.clone();
        entries.push(next);
        Ok(Self { entries })
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self { entries: self.entries[..len.min(self.entries.len())].to_vec() }
    }

    /// Positional equality on the shared entries.
    pub fn is_prefix_of(&self, other: &FamilyPrefix) -> bool {
        self.entries.len() <= other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a == b)
    }

    pub fn last(&self) -> Option<&EncodingFunction> {
        self.entries.last()
    }
}

impl fmt::Display for FamilyPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("λ");
        }
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        f.write_str(&parts.join(" | "))
    }
}

impl fmt::Debug for FamilyPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}
