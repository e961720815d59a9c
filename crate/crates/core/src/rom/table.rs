use std::collections::BTreeMap;
use std::fmt::Write;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use super::RomError;
use crate::measure::BinaryString;

/// A function from `{0,1}^{≤q}` to `{0,1}^width`, stored in the
/// strings-as-naturals order `λ, 0, 1, 00, …`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OracleTable {
    n: u64,
    q: u32,
    width: u32,
    values: Vec<BinaryString>,
}

/// `#{0,1}^{≤q} = 2^{q+1} − 1`.
pub fn domain_size(q: u32) -> u64 {
    (1u64 << (q + 1)) - 1
}

impl OracleTable {
    pub fn new(n: u64, q: u32, values: Vec<BinaryString>) -> Result<Self, RomError> {
        if q > 20 {
            return Err(RomError::ParameterOverflow(format!("query depth {q}")));
        }
        let expected = domain_size(q);
        if values.len() as u64 != expected {
            return Err(RomError::TableSize { q, expected, got: values.len() as u64 });
        }
        let width = values[0].len() as u32;
        if let Some(v) = values.iter().find(|v| v.len() as u32 != width) {
            return Err(RomError::BlockLength { n, expected: width as u64, got: v.len() as u64 });
        }
        Ok(Self { n, q, width, values })
    }

    /// The table whose concatenated values form `pattern`.
    pub fn from_pattern(n: u64, q: u32, width: u32, pattern: &BinaryString) -> Result<Self, RomError> {
        let w = width as usize;
        let entries = domain_size(q) as usize;
        if pattern.len() != w * entries {
            return Err(RomError::BlockLength { n, expected: (w * entries) as u64, got: pattern.len() as u64 });
        }
        let values = (0..entries).map(|j| pattern.slice(j * w, (j + 1) * w)).collect();
        Self::new(n, q, values)
    }

    /// The `index`-th table in the order of patterns read as binary numerals.
    pub fn from_index(n: u64, q: u32, width: u32, index: u64) -> Result<Self, RomError> {
        let bits = (width as u64 * domain_size(q)) as usize;
        Self::from_pattern(n, q, width, &BinaryString::from_u64(index, bits))
    }

    /// Number of tables `2^{width · #{0,1}^{≤q}}`.
    pub fn count(q: u32, width: u32) -> BigUint {
        BigUint::one() << (width as u64 * domain_size(q))
    }

    /// Every table for the given shape, refusing more than `cap` of them.
    pub fn all(n: u64, q: u32, width: u32, cap: u64) -> Result<impl Iterator<Item = OracleTable>, RomError> {
        let count = Self::count(q, width);
        let total = count.to_u64().filter(|c| *c <= cap).ok_or_else(|| RomError::TooLarge {
            what: "oracle tables",
            count: count.to_string(),
            cap,
        })?;
        Ok((0..total).map(move |i| Self::from_index(n, q, width, i).expect("shape is valid")))
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn values(&self) -> &[BinaryString] {
        &self.values
    }

    /// `G(input)`; `None` when `|input| > q`.
    pub fn get(&self, input: &BinaryString) -> Option<&BinaryString> {
        if input.len() > self.q as usize {
            return None;
        }
        self.values.get(input.to_natural().to_usize()?)
    }

    /// The concatenation `G(λ) G(0) G(1) … G(1^q)`.
    pub fn pattern(&self) -> BinaryString {
        let mut out = BinaryString::empty();
        for v in &self.values {
            out.extend_from(v);
        }
        out
    }
}

/// Parses tables written as `input -> output` lines. `.n` and `.q` directives
/// set the parameters for the following tables, `---` separates tables.
pub fn parse_tables(text: &str) -> Result<Vec<OracleTable>, RomError> {
    let mut n = 1u64;
    let mut q: Option<u32> = None;
    let mut current: BTreeMap<BinaryString, (usize, BinaryString)> = BTreeMap::new();
    let mut tables = Vec::new();
    let mut last_line = 0;

    let finish = |current: &mut BTreeMap<BinaryString, (usize, BinaryString)>,
                  n: u64,
                  q: Option<u32>,
                  line: usize|
     -> Result<Option<OracleTable>, RomError> {
        if current.is_empty() {
            return Ok(None);
        }
        let q = match q {
            Some(q) => q,
            None => current.keys().map(|k| k.len() as u32).max().unwrap_or(0),
        };
        let mut values = Vec::new();
        for input in BinaryString::up_to_length(q as usize) {
            let (_, v) = current.get(&input).ok_or_else(|| RomError::Parse {
                line,
                message: format!("table has no entry for input {input}"),
            })?;
            values.push(v.clone());
        }
        if current.len() != values.len() {
            let (k, (l, _)) = current.iter().find(|(k, _)| k.len() as u32 > q).expect("extra entry");
            return Err(RomError::Parse { line: *l, message: format!("input {k} is longer than q = {q}") });
        }
        current.clear();
        OracleTable::new(n, q, values).map(Some)
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |message: String| RomError::Parse { line: line_no, message };
        if line == "---" {
            tables.extend(finish(&mut current, n, q, line_no)?);
            continue;
        }
        if let Some(rest) = line.strip_prefix('.') {
            let (key, value) = rest.split_once(char::is_whitespace).ok_or_else(|| perr("directive needs a value".into()))?;
            let value = value.trim();
            match key {
                "n" => n = value.parse().map_err(|_| perr(format!("bad n {value:?}")))?,
                "q" => q = Some(value.parse().map_err(|_| perr(format!("bad q {value:?}")))?),
                _ => return Err(perr(format!("unknown directive .{key}"))),
            }
            continue;
        }
        let (input, output) = line
            .split_once("->")
            .or_else(|| line.split_once('→'))
            .ok_or_else(|| perr("expected `input -> output`".into()))?;
        let input: BinaryString = input.trim().parse().map_err(|_| perr(format!("bad input {:?}", input.trim())))?;
        let output: BinaryString = output.trim().parse().map_err(|_| perr(format!("bad output {:?}", output.trim())))?;
        if current.insert(input.clone(), (line_no, output)).is_some() {
            return Err(perr(format!("duplicate input {input}")));
        }
    }
    tables.extend(finish(&mut current, n, q, last_line)?);
    Ok(tables)
}

pub fn write_tables(tables: &[OracleTable]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push_str("---\n");
        }
        writeln!(out, ".n {}\n.q {}", t.n, t.q).unwrap();
        for (input, value) in BinaryString::up_to_length(t.q as usize).zip(&t.values) {
            writeln!(out, "{input} -> {value}").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_follows_natural_order() {
        let t = OracleTable::from_pattern(1, 1, 2, &"001011".parse().unwrap()).unwrap();
        assert_eq!(t.get(&BinaryString::empty()).unwrap().to_string(), "00");
        assert_eq!(t.get(&"0".parse().unwrap()).unwrap().to_string(), "10");
        assert_eq!(t.get(&"1".parse().unwrap()).unwrap().to_string(), "11");
        assert!(t.get(&"00".parse().unwrap()).is_none());
        assert_eq!(t.pattern().to_string(), "001011");
    }

    #[test]
    fn enumeration_respects_cap() {
        assert_eq!(OracleTable::all(1, 1, 1, 100).unwrap().count(), 8);
        assert!(OracleTable::all(1, 2, 3, 1000).is_err());
        assert_eq!(OracleTable::count(2, 1), BigUint::from(128u32));
    }

    #[test]
    fn text_round_trip() {
        let tables: Vec<_> = OracleTable::all(2, 1, 1, 8).unwrap().collect();
        let text = write_tables(&tables);
        assert_eq!(parse_tables(&text).unwrap(), tables);
        let loose = "# comment\nλ → 1\n1 -> 0\n0 -> 0\n";
        let parsed = parse_tables(loose).unwrap();
        assert_eq!(parsed[0].pattern().to_string(), "100");
        assert!(parse_tables("λ -> 1\n1 -> 0\n").is_err());
        assert!(parse_tables("λ -> 1\n0 -> 00\n1 -> 0\n").is_err());
    }
}
