//! Isotope masses and natural abundances per element.
//!
//! Tables are read from a line format, `<Symbol> <mass> <abundance>`, with `#`
//! comments and blank lines ignored. The embedded default table carries NIST
//! isotopic-composition values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use thiserror::Error;

const DEFAULT_TABLE: &str = include_str!("../data/nist_isotopes.txt");

/// Abundances of an element may deviate from 1 by at most this before
/// renormalization.
pub const ABUNDANCE_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: mass must be positive and finite, got {mass}")]
    BadMass { line: usize, mass: f64 },
    #[error("line {line}: abundance must be in (0, 1], got {abundance}")]
    BadAbundance { line: usize, abundance: f64 },
    #[error("line {line}: duplicate isotope {symbol} at mass {mass}")]
    Duplicate {
        line: usize,
        symbol: String,
        mass: f64,
    },
    #[error("abundances of {symbol} sum to {sum}, expected 1")]
    AbundanceSum { symbol: String, sum: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isotope {
    /// Atomic mass in Da.
    pub mass: f64,
    /// Natural abundance as a fraction.
    pub abundance: f64,
}

/// Per-element isotope lists, masses strictly increasing, abundances summing
/// to exactly 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IsotopeTable {
    entries: BTreeMap<String, Vec<Isotope>>,
}

impl IsotopeTable {
    /// The embedded NIST table, parsed once.
    pub fn load_default() -> &'static IsotopeTable {
        static TABLE: OnceLock<IsotopeTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            IsotopeTable::parse(DEFAULT_TABLE).expect("embedded isotope table is valid")
        })
    }

    pub fn parse(text: &str) -> Result<IsotopeTable, TableError> {
        let mut entries: BTreeMap<String, Vec<Isotope>> = BTreeMap::new();
        let mut first_line: BTreeMap<String, usize> = BTreeMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 3 {
                return Err(TableError::Malformed {
                    line,
                    reason: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let symbol = fields[0];
            if !is_element_symbol(symbol) {
                return Err(TableError::Malformed {
                    line,
                    reason: format!("invalid element symbol {symbol:?}"),
                });
            }
            let mass: f64 = fields[1].parse().map_err(|_| TableError::Malformed {
                line,
                reason: format!("invalid mass {:?}", fields[1]),
            })?;
            let abundance: f64 = fields[2].parse().map_err(|_| TableError::Malformed {
                line,
                reason: format!("invalid abundance {:?}", fields[2]),
            })?;
            if !(mass.is_finite() && mass > 0.0) {
                return Err(TableError::BadMass { line, mass });
            }
            if !(abundance > 0.0 && abundance <= 1.0) {
                return Err(TableError::BadAbundance { line, abundance });
            }
            let isotopes = entries.entry(symbol.to_string()).or_default();
            if isotopes.iter().any(|iso| iso.mass == mass) {
                return Err(TableError::Duplicate {
                    line,
                    symbol: symbol.to_string(),
                    mass,
                });
            }
            isotopes.push(Isotope { mass, abundance });
            first_line.entry(symbol.to_string()).or_insert(line);
        }

        for (symbol, isotopes) in entries.iter_mut() {
            isotopes.sort_by(|a, b| a.mass.total_cmp(&b.mass));
            let sum: f64 = isotopes.iter().map(|iso| iso.abundance).sum();
            if (sum - 1.0).abs() > ABUNDANCE_SUM_TOLERANCE {
                return Err(TableError::AbundanceSum {
                    symbol: symbol.clone(),
                    sum,
                });
            }
            if sum != 1.0 {
                for iso in isotopes.iter_mut() {
                    iso.abundance /= sum;
                }
            }
        }
        Ok(IsotopeTable { entries })
    }

    pub fn get(&self, symbol: &str) -> Option<&[Isotope]> {
        self.entries.get(symbol).map(Vec::as_slice)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.entries.contains_key(symbol)
    }

    pub fn elements(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the table in the same line format `parse` reads. Values use the
    /// shortest representation that round-trips.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (symbol, isotopes) in &self.entries {
            for iso in isotopes {
                writeln!(out, "{symbol} {:?} {:?}", iso.mass, iso.abundance).unwrap();
            }
        }
        out
    }
}

fn is_element_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    let rest: Vec<char> = chars.collect();
    rest.len() <= 2 && rest.iter().all(|c| c.is_ascii_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_table_covers_test_molecules() {
        let table = IsotopeTable::load_default();
        for sym in [
            "H", "C", "N", "O", "S", "P", "Xe", "Sn", "Nd", "Dy", "Au", "Ca", "Ga", "Pd",
        ] {
            assert!(table.contains(sym), "missing {sym}");
        }
        assert_eq!(table.get("H").unwrap().len(), 2);
        assert_eq!(table.get("Xe").unwrap().len(), 9);
        assert_eq!(table.get("Sn").unwrap().len(), 10);
    }

    #[test]
    fn default_table_is_normalized_and_sorted() {
        let table = IsotopeTable::load_default();
        let carbon: f64 = table.get("C").unwrap().iter().map(|i| i.abundance).sum();
        assert_eq!(carbon, 1.0);
        for sym in table.elements() {
            let isotopes = table.get(sym).unwrap();
            let sum: f64 = isotopes.iter().map(|i| i.abundance).sum();
            assert!((sum - 1.0).abs() < 1e-15, "{sym}: {sum}");
            assert!(isotopes.windows(2).all(|w| w[0].mass < w[1].mass));
        }
    }

    #[test]
    fn parses_simple_table() {
        let table = IsotopeTable::parse("X 1.0 0.5\nX 2.0 0.5").unwrap();
        let x = table.get("X").unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(x[0].mass, 1.0);
        assert_eq!(x[1].mass, 2.0);
    }

    #[test]
    fn rejects_bad_sum() {
        let err = IsotopeTable::parse("X 1.0 0.4\nX 2.0 0.4").unwrap_err();
        assert!(matches!(err, TableError::AbundanceSum { .. }));
    }

    #[test]
    fn renormalizes_small_deviation() {
        let table = IsotopeTable::parse("X 1.0 0.499999\nX 2.0 0.500002").unwrap();
        let sum: f64 = table.get("X").unwrap().iter().map(|i| i.abundance).sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn comments_blank_lines_and_unsorted_input() {
        let table = IsotopeTable::parse("# header\n\nY 3.0 0.25 # heavy\nY 2.0 0.75\n").unwrap();
        let y = table.get("Y").unwrap();
        assert_eq!(y[0].mass, 2.0);
        assert_eq!(y[1].abundance, 0.25);
    }

    #[test]
    fn error_paths() {
        assert_eq!(
            IsotopeTable::parse("X 1.0\n"),
            Err(TableError::Malformed {
                line: 1,
                reason: "expected 3 fields, found 2".into()
            })
        );
        assert!(matches!(
            IsotopeTable::parse("\nX abc 1.0"),
            Err(TableError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            IsotopeTable::parse("X -1.0 1.0"),
            Err(TableError::BadMass { .. })
        ));
        assert!(matches!(
            IsotopeTable::parse("X 1.0 0.0\nX 2.0 1.0"),
            Err(TableError::BadAbundance { .. })
        ));
        assert!(matches!(
            IsotopeTable::parse("X 1.0 0.5\nX 1.0 0.5"),
            Err(TableError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(
            IsotopeTable::parse("xy 1.0 1.0"),
            Err(TableError::Malformed { .. })
        ));
    }

    #[test]
    fn default_round_trips() {
        let table = IsotopeTable::load_default();
        let again = IsotopeTable::parse(&table.serialize()).unwrap();
        for sym in table.elements() {
            for (x, y) in table.get(sym).unwrap().iter().zip(again.get(sym).unwrap()) {
                assert_eq!(x.mass.to_bits(), y.mass.to_bits());
                assert!(((x.abundance - y.abundance) / x.abundance).abs() <= 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn serialize_round_trip(
            weights in prop::collection::vec(0.01f64..1.0, 1..8),
            base in 1.0f64..200.0,
        ) {
            let total: f64 = weights.iter().sum();
            let mut text = String::new();
            for (i, w) in weights.iter().enumerate() {
                text.push_str(&format!("Zz {} {}\n", base + i as f64 * 1.0033, w / total));
            }
            let table = IsotopeTable::parse(&text).unwrap();
            let again = IsotopeTable::parse(&table.serialize()).unwrap();
            let (a, b) = (table.get("Zz").unwrap(), again.get("Zz").unwrap());
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                prop_assert_eq!(x.mass.to_bits(), y.mass.to_bits());
                prop_assert!(((x.abundance - y.abundance) / x.abundance).abs() <= 1e-15);
            }
        }
    }
}
