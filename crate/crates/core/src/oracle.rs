//! Exhaustive reference enumerations for small inputs.
//!
//! These scan every subset of the columns (or vertices) directly and share no
//! code with the hypergraph route, so they can check it.

use crate::dualizer::Hypergraph;
use crate::error::{Error, Result};
use crate::miner::RuleSet;
use crate::table::{AttrSet, BinaryTable, Origin, Rule};

pub const MAX_COLUMNS: usize = 16;

fn mask_members(mask: u32, universe: &[usize]) -> Vec<usize> {
    universe
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &c)| c)
        .collect()
}

fn row_has_all(t: &BinaryTable, r: usize, xs: &[usize]) -> bool {
    xs.iter().all(|&c| t.get(r, c))
}

fn holds(t: &BinaryTable, xs: &[usize], b: usize) -> bool {
    (0..t.n_rows()).all(|r| !row_has_all(t, r, xs) || t.get(r, b))
}

fn count(t: &BinaryTable, xs: &[usize]) -> usize {
    (0..t.n_rows()).filter(|&r| row_has_all(t, r, xs)).count()
}

/// Minimal nonempty `X` with `X -> b` holding in every row, `sup(X) > 0` and
/// `sup(X ∪ {b}) >= min_support`, by scanning all subsets of the other columns.
pub fn enumerate_antecedents(t: &BinaryTable, b: usize, min_support: usize) -> Result<RuleSet> {
    if t.n_cols() > MAX_COLUMNS {
        return Err(Error::TooLarge(format!("{} columns (max {MAX_COLUMNS})", t.n_cols())));
    }
    if b >= t.n_cols() {
        return Err(Error::UnknownColumn(format!("#{b}")));
    }
    let others: Vec<usize> = (0..t.n_cols()).filter(|&c| c != b).collect();
    let mut out = RuleSet::new(b);
    if holds(t, &[], b) {
        out.mark_constant_consequent();
        return Ok(out);
    }
    for mask in 1u32..(1 << others.len()) {
        let xs = mask_members(mask, &others);
        if !holds(t, &xs, b) {
            continue;
        }
        let minimal = (0..xs.len()).all(|i| {
            let mut smaller = xs.clone();
            smaller.remove(i);
            !holds(t, &smaller, b)
        });
        if !minimal {
            continue;
        }
        let sup_x = count(t, &xs);
        let mut with_b = xs.clone();
        with_b.push(b);
        let sup_xb = count(t, &with_b);
        if sup_x == 0 || sup_xb < min_support {
            continue;
        }
        out.insert(Rule {
            antecedent: xs.into_iter().collect(),
            consequent: b,
            support: sup_xb,
            antecedent_support: sup_x,
            origin: Origin::FullTable,
        })?;
    }
    Ok(out)
}

/// All minimal transversals of `h` by scanning every vertex subset, sorted.
pub fn enumerate_transversals(h: &Hypergraph) -> Result<Vec<AttrSet>> {
    let vertices: Vec<usize> = h.vertices().iter().collect();
    if vertices.len() > MAX_COLUMNS {
        return Err(Error::TooLarge(format!("{} vertices (max {MAX_COLUMNS})", vertices.len())));
    }
    let edges = h.edges();
    let hits = |xs: &[usize]| edges.iter().all(|e| xs.iter().any(|&v| e.contains(v)));
    let mut out = Vec::new();
    for mask in 0u32..(1 << vertices.len()) {
        let xs = mask_members(mask, &vertices);
        if !hits(&xs) {
            continue;
        }
        let minimal = (0..xs.len()).all(|i| {
            let mut smaller = xs.clone();
            smaller.remove(i);
            !hits(&smaller)
        });
        if minimal {
            out.push(xs.into_iter().collect());
        }
    }
    out.sort();
    Ok(out)
}
