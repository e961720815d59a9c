use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use super::BinaryString;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("encoding table for width {width} must have {expected} entries, got {got}")]
    WrongSize { width: u32, expected: usize, got: usize },
    #[error("encoding table is not a bijection on {{0,…,{max}}}")]
    NotBijective { max: u64 },
    #[error("width {0} is not supported")]
    UnsupportedWidth(u32),
    #[error("permutation rank {0} out of range")]
    RankOutOfRange(u128),
}

/// A bijection `σ: {0,…,2^n−1} → {0,1}^n`, stored as an index table.
///
/// `table[x]` is σ(x) read as an n-bit numeral; strings are produced only at
/// I/O boundaries.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EncodingFunction {
    width: u32,
    table: Arc<[u32]>,
}

/// Widths above this are rejected: tables would not fit in memory anyway.
const MAX_WIDTH: u32 = 20;

impl EncodingFunction {
    pub fn new(width: u32, table: Vec<u32>) -> Result<Self, EncodingError> {
        if width == 0 || width > MAX_WIDTH {
            return Err(EncodingError::UnsupportedWidth(width));
        }
        let size = 1usize << width;
        if table.len() != size {
            return Err(EncodingError::WrongSize { width, expected: size, got: table.len() });
        }
        let mut seen = vec![false; size];
        for &v in &table {
            let v = v as usize;
            if v >= size || seen[v] {
                return Err(EncodingError::NotBijective { max: size as u64 - 1 });
            }
            seen[v] = true;
        }
        Ok(Self { width, table: table.into() })
    }

    pub fn identity(width: u32) -> Self {
        Self::new(width, (0..1u32 << width).collect()).expect("identity is a bijection")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn domain_size(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    /// σ(x) as an n-bit numeral.
    pub fn apply(&self, x: u64) -> u32 {
        self.table[x as usize]
    }

    pub fn encode(&self, x: u64) -> BinaryString {
        BinaryString::from_u64(self.apply(x) as u64, self.width as usize)
    }

    pub fn inverse_table(&self) -> Vec<u32> {
        let mut inv = vec![0u32; self.table.len()];
        for (x, &y) in self.table.iter().enumerate() {
            inv[y as usize] = x as u32;
        }
        inv
    }

    /// `π ∘ σ` for a relabelling π of the codomain.
    pub fn relabel(&self, pi: &EncodingFunction) -> EncodingFunction {
        assert_eq!(self.width, pi.width, "relabelling must have the same width");
        let table: Vec<u32> = self.table.iter().map(|&y| pi.apply(y as u64)).collect();
        Self { width: self.width, table: table.into() }
    }

    /// Position of this permutation in lexicographic table order (Lehmer code).
    pub fn rank(&self) -> u128 {
        let n = self.table.len();
        let mut used = vec![false; n];
        let mut rank: u128 = 0;
        for (i, &v) in self.table.iter().enumerate() {
            let smaller_unused = used[..v as usize].iter().filter(|u| !**u).count() as u128;
            rank += smaller_unused * factorial_u128(n - 1 - i);
            used[v as usize] = true;
        }
        rank
    }

    /// The permutation at lexicographic position `rank`. Widths up to 5 only
    /// (ranks must fit in 128 bits).
    pub fn from_rank(width: u32, rank: u128) -> Result<Self, EncodingError> {
        if width == 0 || width > 5 {
            return Err(EncodingError::UnsupportedWidth(width));
        }
        let n = 1usize << width;
        if rank >= factorial_u128(n) {
            return Err(EncodingError::RankOutOfRange(rank));
        }
        let mut pool: Vec<u32> = (0..n as u32).collect();
        let mut rest = rank;
        let mut table = Vec::with_capacity(n);
        for i in 0..n {
            let f = factorial_u128(n - 1 - i);
            let idx = (rest / f) as usize;
            rest %= f;
            table.push(pool.remove(idx));
        }
        Ok(Self { width, table: table.into() })
    }

    /// Every encoding function of the given width in lexicographic table order.
    pub fn all(width: u32) -> Permutations {
        Permutations::new(width)
    }
}

impl fmt::Debug for EncodingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "σ{}{:?}", self.width, &self.table[..])
    }
}

impl fmt::Display for EncodingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.table.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

fn factorial_u128(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Lexicographic enumeration of the permutations of `{0,…,2^width−1}`.
pub struct Permutations {
    width: u32,
    current: Option<Vec<u32>>,
}

impl Permutations {
    fn new(width: u32) -> Self {
        Self { width, current: Some((0..1u32 << width).collect()) }
    }
}

impl Iterator for Permutations {
    type Item = EncodingFunction;

    fn next(&mut self) -> Option<EncodingFunction> {
        let cur = self.current.as_mut()?;
        let out = EncodingFunction { width: self.width, table: cur.as_slice().into() };
        if !next_permutation(cur) {
            self.current = None;
        }
        Some(out)
    }
}

fn next_permutation(v: &mut [u32]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `#Encf_n = (2^n)!`, memoised per width.
pub fn encf_count(width: u32) -> BigUint {
    static CACHE: OnceLock<Mutex<Vec<BigUint>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![BigUint::one()]));
    let mut cache = cache.lock().expect("factorial cache poisoned");
    while cache.len() <= width as usize {
        let w = cache.len() as u32;
        let f: BigUint = (1..=(1u64 << w)).map(BigUint::from).product();
        cache.push(f);
    }
    cache[width as usize].clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_are_factorials() {
        assert_eq!(encf_count(1), BigUint::from(2u32));
        assert_eq!(encf_count(2), BigUint::from(24u32));
        assert_eq!(encf_count(3), BigUint::from(40320u32));
        assert_eq!(EncodingFunction::all(2).count(), 24);
        assert_eq!(EncodingFunction::all(3).count(), 40320);
    }

    #[test]
    fn enumeration_is_lexicographic_and_matches_rank() {
        let all: Vec<_> = EncodingFunction::all(2).collect();
        for (i, e) in all.iter().enumerate() {
            assert_eq!(e.rank(), i as u128);
            assert_eq!(&EncodingFunction::from_rank(2, i as u128).unwrap(), e);
        }
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all[0], EncodingFunction::identity(2));
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(matches!(
            EncodingFunction::new(1, vec![0, 0]),
            Err(EncodingError::NotBijective { .. })
        ));
        assert!(matches!(EncodingFunction::new(1, vec![0]), Err(EncodingError::WrongSize { .. })));
        assert!(EncodingFunction::from_rank(1, 2).is_err());
    }

    #[test]
    fn encode_renders_n_bits() {
        let s = EncodingFunction::new(2, vec![3, 0, 2, 1]).unwrap();
        assert_eq!(s.encode(0).to_string(), "11");
        assert_eq!(s.encode(1).to_string(), "00");
        assert_eq!(s.inverse_table(), vec![1, 3, 2, 0]);
    }
}
