//! Brute-force reference: enumerate every isotopologue and sort.

use statrs::function::factorial::ln_binomial;
use thiserror::Error;

use crate::formula::Composition;
use crate::isotope_data::{Isotope, IsotopeTable};
use crate::multinomial::{num_tuples, MultinomialConfig};
use crate::peak::Peak;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("compound has {count} isotopologues, above the enumeration limit of {limit}")]
    LimitExceeded { count: u64, limit: u64 },
    #[error("unknown element {0:?}")]
    UnknownElement(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimit {
    pub max_isotopologues: u64,
}

impl Default for OracleLimit {
    fn default() -> Self {
        OracleLimit {
            max_isotopologues: 10_000_000,
        }
    }
}

/// Every weak composition of `n` into `m` parts, in lexicographic order.
pub fn weak_compositions(n: u32, m: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; m];
    fn rec(pos: usize, remaining: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == current.len() {
            current[pos] = remaining;
            out.push(current.clone());
            return;
        }
        for x in 0..=remaining {
            current[pos] = x;
            rec(pos + 1, remaining - x, current, out);
        }
    }
    if m > 0 {
        rec(0, n, &mut current, &mut out);
    }
    out
}

/// Multinomial log-pmf by the chain rule over conditional binomials, each
/// from `ln_binomial` (log-gamma based). Shares nothing with
/// [`MultinomialConfig::log_pmf`].
pub fn naive_log_pmf(isotopes: &[Isotope], tuple: &[u32]) -> f64 {
    let mut remaining_n: u64 = tuple.iter().map(|&x| x as u64).sum();
    let mut remaining_p = 1.0f64;
    let mut acc = 0.0;
    for (i, (&x, iso)) in tuple.iter().zip(isotopes).enumerate() {
        if i + 1 == tuple.len() {
            // The last isotope takes whatever is left with probability one.
            debug_assert_eq!(x as u64, remaining_n);
            break;
        }
        let q = (iso.abundance / remaining_p).min(1.0);
        acc += ln_binomial(remaining_n, x as u64);
        if x > 0 {
            acc += x as f64 * q.ln();
        }
        let rest = remaining_n - x as u64;
        if rest > 0 {
            acc += rest as f64 * (1.0 - q).ln();
        }
        remaining_n = rest;
        remaining_p -= iso.abundance;
    }
    acc
}

fn lookup<'a>(table: &'a IsotopeTable, symbol: &str) -> Result<&'a [Isotope], OracleError> {
    table
        .get(symbol)
        .ok_or_else(|| OracleError::UnknownElement(symbol.to_string()))
}

/// All isotopologues of `comp`, unsorted.
pub fn enumerate_all(
    comp: &Composition,
    table: &IsotopeTable,
    limit: OracleLimit,
) -> Result<Vec<Peak>, OracleError> {
    let mut count: u64 = 1;
    for (symbol, n) in comp.entries() {
        count = count.saturating_mul(num_tuples(*n, lookup(table, symbol)?.len()));
    }
    if count > limit.max_isotopologues {
        return Err(OracleError::LimitExceeded {
            count,
            limit: limit.max_isotopologues,
        });
    }

    let mut acc = vec![Peak::new(0.0, 0.0)];
    for (symbol, n) in comp.entries() {
        let isotopes = lookup(table, symbol)?;
        let config = MultinomialConfig::from_isotopes(*n, isotopes);
        let element: Vec<Peak> = weak_compositions(*n, isotopes.len())
            .iter()
            .map(|t| Peak::new(config.mass(t), config.log_pmf(t)))
            .collect();
        acc = acc
            .iter()
            .flat_map(|a| element.iter().map(move |b| a.combine(b)))
            .collect();
    }
    Ok(acc)
}

/// The `k` most probable isotopologues, descending; ties in arbitrary order.
pub fn top_k_reference(
    comp: &Composition,
    table: &IsotopeTable,
    k: usize,
    limit: OracleLimit,
) -> Result<Vec<Peak>, OracleError> {
    let mut all = enumerate_all(comp, table, limit)?;
    all.sort_by(|a, b| b.cmp_logp(a));
    all.truncate(k);
    Ok(all)
}

/// Shortest descending prefix whose probabilities sum to at least `p`.
pub fn cumulative_reference(
    comp: &Composition,
    table: &IsotopeTable,
    p: f64,
    limit: OracleLimit,
) -> Result<Vec<Peak>, OracleError> {
    let mut all = enumerate_all(comp, table, limit)?;
    all.sort_by(|a, b| b.cmp_logp(a));
    let mut total = 0.0;
    let mut keep = all.len();
    for (i, peak) in all.iter().enumerate() {
        total += peak.prob();
        if total >= p {
            keep = i + 1;
            break;
        }
    }
    all.truncate(keep);
    Ok(all)
}
