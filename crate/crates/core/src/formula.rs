//! Molecular formula parsing.
//!
//! Grammar:
//!
//! ```text
//! Formula := (Element Count? | '(' Formula ')' Count?)+
//! Element := uppercase letter followed by at most two lowercase letters
//! Count   := positive decimal integer (default 1)
//! ```
//!
//! Group counts multiply through. Repeated elements are merged, keeping the
//! position of their first appearance.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("empty formula")]
    Empty,
    #[error("unexpected character {found:?} at position {pos}")]
    Unexpected { pos: usize, found: char },
    #[error("unclosed '(' opened at position {pos}")]
    Unclosed { pos: usize },
    #[error("unmatched ')' at position {pos}")]
    Unmatched { pos: usize },
    #[error("empty group at position {pos}")]
    EmptyGroup { pos: usize },
    #[error("count at position {pos} must be positive")]
    ZeroCount { pos: usize },
    #[error("count at position {pos} is too large")]
    Overflow { pos: usize },
}

/// Element counts in order of first appearance. Every count is at least 1 and
/// every symbol appears once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Composition {
    entries: Vec<(String, u32)>,
}

impl Composition {
    pub fn entries(&self) -> &[(String, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, symbol: &str) -> Option<u32> {
        self.entries
            .iter()
            .find(|(s, _)| s == symbol)
            .map(|&(_, n)| n)
    }

    /// Builds a composition from pairs, merging repeats. Zero counts are
    /// dropped.
    pub fn from_pairs<S: Into<String>>(
        pairs: impl IntoIterator<Item = (S, u32)>,
    ) -> Result<Composition, FormulaError> {
        let mut comp = Composition::default();
        for (symbol, n) in pairs {
            if n > 0 {
                comp.add(symbol.into(), n as u64, 0)?;
            }
        }
        Ok(comp)
    }

    fn add(&mut self, symbol: String, n: u64, pos: usize) -> Result<(), FormulaError> {
        match self.entries.iter_mut().find(|(s, _)| *s == symbol) {
            Some((_, count)) => {
                *count = u32::try_from(*count as u64 + n).map_err(|_| FormulaError::Overflow { pos })?;
            }
            None => {
                let n = u32::try_from(n).map_err(|_| FormulaError::Overflow { pos })?;
                self.entries.push((symbol, n));
            }
        }
        Ok(())
    }

    /// Canonical formula string: symbols in stored order, count omitted when 1.
    pub fn canonical_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (symbol, n) in &self.entries {
            f.write_str(symbol)?;
            if *n != 1 {
                write!(f, "{n}")?;
            }
        }
        Ok(())
    }
}

pub fn parse_formula(s: &str) -> Result<Composition, FormulaError> {
    let chars: Vec<char> = s.chars().collect();
    if chars.is_empty() {
        return Err(FormulaError::Empty);
    }
    let mut parser = Parser { chars, pos: 0 };
    let terms = parser.group(None)?;
    let mut comp = Composition::default();
    for (symbol, n, pos) in terms {
        comp.add(symbol, n, pos)?;
    }
    Ok(comp)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

type Term = (String, u64, usize);

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    /// Parses terms until end of input or, inside a group, the closing paren.
    fn group(&mut self, opened_at: Option<usize>) -> Result<Vec<Term>, FormulaError> {
        let mut terms = Vec::new();
        loop {
            match self.peek() {
                None => {
                    if let Some(pos) = opened_at {
                        return Err(FormulaError::Unclosed { pos });
                    }
                    return Ok(terms);
                }
                Some(')') => {
                    if opened_at.is_none() {
                        return Err(FormulaError::Unmatched { pos: self.pos });
                    }
                    return Ok(terms);
                }
                Some('(') => {
                    let open = self.pos;
                    self.pos += 1;
                    let inner = self.group(Some(open))?;
                    // consume ')'
                    self.pos += 1;
                    if inner.is_empty() {
                        return Err(FormulaError::EmptyGroup { pos: open });
                    }
                    let mult = self.count()?.unwrap_or(1);
                    for (symbol, n, pos) in inner {
                        let n = n.checked_mul(mult).ok_or(FormulaError::Overflow { pos })?;
                        terms.push((symbol, n, pos));
                    }
                }
                Some(c) if c.is_ascii_uppercase() => {
                    let start = self.pos;
                    self.pos += 1;
                    while self.pos - start < 3 && self.peek().is_some_and(|c| c.is_ascii_lowercase()) {
                        self.pos += 1;
                    }
                    if self.peek().is_some_and(|c| c.is_ascii_lowercase()) {
                        return Err(FormulaError::Unexpected {
                            pos: self.pos,
                            found: self.peek().unwrap(),
                        });
                    }
                    let symbol: String = self.chars[start..self.pos].iter().collect();
                    let n = self.count()?.unwrap_or(1);
                    terms.push((symbol, n, start));
                }
                Some(found) => {
                    return Err(FormulaError::Unexpected {
                        pos: self.pos,
                        found,
                    })
                }
            }
        }
    }

    fn count(&mut self) -> Result<Option<u64>, FormulaError> {
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(d as u64))
                .filter(|&v| v <= u32::MAX as u64)
                .ok_or(FormulaError::Overflow { pos: start })?;
            self.pos += 1;
        }
        if self.pos == start {
            return Ok(None);
        }
        if value == 0 {
            return Err(FormulaError::ZeroCount { pos: start });
        }
        Ok(Some(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(c: &Composition) -> Vec<(&str, u32)> {
        c.entries().iter().map(|(s, n)| (s.as_str(), *n)).collect()
    }

    #[test]
    fn water() {
        assert_eq!(pairs(&parse_formula("H2O").unwrap()), [("H", 2), ("O", 1)]);
    }

    #[test]
    fn brca2() {
        let c = parse_formula("C16802H26738N4640O5411S121").unwrap();
        assert_eq!(
            pairs(&c),
            [("C", 16802), ("H", 26738), ("N", 4640), ("O", 5411), ("S", 121)]
        );
    }

    #[test]
    fn palladium_alloy() {
        let c = parse_formula("Au2Ca10Ga10Pd76").unwrap();
        assert_eq!(pairs(&c), [("Au", 2), ("Ca", 10), ("Ga", 10), ("Pd", 76)]);
    }

    #[test]
    fn groups_multiply() {
        let c = parse_formula("(CH3)2O").unwrap();
        assert_eq!(pairs(&c), [("C", 2), ("H", 6), ("O", 1)]);
        let c = parse_formula("Ca(OH)2").unwrap();
        assert_eq!(pairs(&c), [("Ca", 1), ("O", 2), ("H", 2)]);
        let c = parse_formula("((CH2)2)3").unwrap();
        assert_eq!(pairs(&c), [("C", 6), ("H", 12)]);
    }

    #[test]
    fn duplicates_merge() {
        let c = parse_formula("CHC").unwrap();
        assert_eq!(pairs(&c), [("C", 2), ("H", 1)]);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_formula(""), Err(FormulaError::Empty));
        assert_eq!(parse_formula("H0O"), Err(FormulaError::ZeroCount { pos: 1 }));
        assert_eq!(parse_formula("(CH3"), Err(FormulaError::Unclosed { pos: 0 }));
        assert_eq!(parse_formula("CH3)"), Err(FormulaError::Unmatched { pos: 3 }));
        assert_eq!(parse_formula("()2"), Err(FormulaError::EmptyGroup { pos: 0 }));
        assert!(matches!(parse_formula("h2o"), Err(FormulaError::Unexpected { pos: 0, .. })));
        assert!(matches!(parse_formula("[13C]"), Err(FormulaError::Unexpected { .. })));
        assert!(matches!(parse_formula("Abcd"), Err(FormulaError::Unexpected { pos: 3, .. })));
        assert!(matches!(parse_formula("H 2"), Err(FormulaError::Unexpected { .. })));
        assert!(matches!(parse_formula("C99999999999"), Err(FormulaError::Overflow { .. })));
        assert!(matches!(
            parse_formula("(C4000000000)2"),
            Err(FormulaError::Overflow { .. })
        ));
    }

    fn symbol() -> impl Strategy<Value = String> {
        "[A-Z][a-z]{0,2}"
    }

    proptest! {
        #[test]
        fn canonical_round_trip(
            raw in prop::collection::vec((symbol(), 1u32..100_000), 1..8)
        ) {
            let comp = Composition::from_pairs(raw).unwrap();
            let again = parse_formula(&comp.canonical_string()).unwrap();
            prop_assert_eq!(again, comp);
        }

        #[test]
        fn counts_never_zero(s in "[A-Z][a-z]?[0-9]{0,3}([A-Z][0-9]{0,2}){0,4}") {
            if let Ok(c) = parse_formula(&s) {
                prop_assert!(c.entries().iter().all(|&(_, n)| n >= 1));
            }
        }
    }
}
