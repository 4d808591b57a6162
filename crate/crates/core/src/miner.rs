//! Sector mining: all minimal implications `X -> b` for one consequent `b`.
//!
//! `X -> b` holds in every row iff `X` contains a 0-attribute of every row
//! where `b` is 0. Taking, for each such row, the set of its 0-attributes as a
//! hyperedge turns "minimal valid antecedents" into "minimal transversals".

use std::borrow::Cow;
use std::collections::BTreeMap;

use crate::bits::BitSet;
use crate::dualizer::{enumerate_transversals, Hypergraph};
use crate::error::{Error, Result};
use crate::table::{AttrSet, BinaryTable, Origin, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectorRequest {
    pub target: usize,
    /// Threshold on the rule support `sup(X ∪ {b})`.
    pub min_support: usize,
    /// Mine for the complement of the target column.
    pub negated: bool,
}

impl SectorRequest {
    pub fn new(target: usize, min_support: usize) -> Self {
        SectorRequest {
            target,
            min_support,
            negated: false,
        }
    }

    pub fn negated(self) -> Self {
        SectorRequest {
            negated: true,
            ..self
        }
    }

    pub fn validate(&self, t: &BinaryTable) -> Result<()> {
        if self.min_support == 0 {
            return Err(Error::InvalidArgument("min_support must be at least 1".into()));
        }
        t.check_column(self.target)
    }
}

/// Rules sharing one consequent, keyed by antecedent.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleSet {
    consequent: usize,
    negated: bool,
    constant_consequent: bool,
    rules: BTreeMap<AttrSet, Rule>,
}

impl RuleSet {
    pub fn new(consequent: usize) -> Self {
        RuleSet {
            consequent,
            negated: false,
            constant_consequent: false,
            rules: BTreeMap::new(),
        }
    }

    pub(crate) fn mark_constant_consequent(&mut self) {
        self.constant_consequent = true;
    }

    pub(crate) fn with_negated(mut self, negated: bool) -> Self {
        self.negated = negated;
        self
    }

    /// An empty set with the same consequent and negation.
    pub fn empty_like(&self) -> Self {
        RuleSet::new(self.consequent).with_negated(self.negated)
    }

    pub fn consequent(&self) -> usize {
        self.consequent
    }

    /// True when the consequent is the complement of the target column.
    pub fn is_negated(&self) -> bool {
        self.negated
    }

    /// Set when the consequent column was constant 1 on the mined table, so
    /// only the (excluded) empty antecedent exists.
    pub fn is_constant_consequent(&self) -> bool {
        self.constant_consequent
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, antecedent: &AttrSet) -> Option<&Rule> {
        self.rules.get(antecedent)
    }

    pub fn contains(&self, antecedent: &AttrSet) -> bool {
        self.rules.contains_key(antecedent)
    }

    /// Rules in lexicographic antecedent order.
    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.rules.values()
    }

    pub fn antecedents(&self) -> impl Iterator<Item = &AttrSet> {
        self.rules.keys()
    }

    /// Inserts or replaces the rule with the same antecedent.
    pub fn insert(&mut self, rule: Rule) -> Result<Option<Rule>> {
        if rule.consequent != self.consequent {
            return Err(Error::ConsequentMismatch(
                format!("#{}", rule.consequent),
                format!("#{}", self.consequent),
            ));
        }
        Ok(self.rules.insert(rule.antecedent.clone(), rule))
    }

    pub fn remove(&mut self, antecedent: &AttrSet) -> Option<Rule> {
        self.rules.remove(antecedent)
    }

    pub(crate) fn retain(&mut self, mut keep: impl FnMut(&Rule) -> bool) {
        self.rules.retain(|_, r| keep(r));
    }

    pub(crate) fn rules_mut(&mut self) -> impl Iterator<Item = &mut Rule> {
        self.rules.values_mut()
    }
}

/// One edge per row lacking `b`: the row's 0-attributes other than `b`.
pub fn build_consequent_hypergraph(t: &BinaryTable, b: usize) -> Result<Hypergraph> {
    t.check_column(b)?;
    if t.n_rows() == 0 {
        return Err(Error::EmptyTable);
    }
    let mut vertices = BitSet::full(t.n_cols());
    vertices.remove(b);
    let edges = (0..t.n_rows())
        .filter(|&r| !t.get(r, b))
        .map(|r| {
            let mut e = t.zeros_of_row(r);
            e.remove(b);
            e
        })
        .collect();
    Ok(Hypergraph::from_bits(vertices, edges))
}

/// Minimal nonempty antecedents `X` with `X -> b` holding on every row of the
/// table (of its negation when requested) and `sup(X ∪ {b}) >= min_support`.
pub fn mine_sector(t: &BinaryTable, req: &SectorRequest) -> Result<RuleSet> {
    req.validate(t)?;
    if t.n_rows() == 0 {
        return Err(Error::EmptyTable);
    }
    let table: Cow<'_, BinaryTable> = if req.negated {
        Cow::Owned(t.negate_column(req.target)?)
    } else {
        Cow::Borrowed(t)
    };
    let b = req.target;
    let h = build_consequent_hypergraph(&table, b)?;
    let mut out = RuleSet::new(b).with_negated(req.negated);
    if h.edge_count() == 0 {
        out.constant_consequent = true;
        return Ok(out);
    }
    if h.has_empty_edge() {
        return Ok(out);
    }

    let target_rows = table.column(b);
    let mut scratch = BitSet::new(table.n_rows());
    let mut found: Vec<AttrSet> = Vec::new();
    enumerate_transversals(
        &h,
        None,
        |partial| {
            scratch.clone_from(target_rows);
            for &c in partial {
                scratch.intersect_with(table.column(c));
            }
            scratch.count() >= req.min_support
        },
        |x| found.push(x.iter().copied().collect()),
    );
    for x in found {
        out.insert(Rule::measure(&table, x, b, Origin::FullTable)?)?;
    }
    Ok(out)
}

/// Single-attribute implications `a -> d` with `sup({a, d}) >= min_support`.
pub fn binary_part(t: &BinaryTable, min_support: usize) -> Vec<Rule> {
    let mut out = Vec::new();
    for a in 0..t.n_cols() {
        let col_a = t.column(a);
        let sup_a = col_a.count();
        if sup_a == 0 || sup_a < min_support {
            continue;
        }
        for d in 0..t.n_cols() {
            if d != a && col_a.is_subset(t.column(d)) {
                out.push(Rule {
                    antecedent: AttrSet::singleton(a),
                    consequent: d,
                    support: sup_a,
                    antecedent_support: sup_a,
                    origin: Origin::FullTable,
                });
            }
        }
    }
    out
}

/// Columns that are all 0 or all 1, with their value.
pub fn constant_columns(t: &BinaryTable) -> Result<Vec<(usize, bool)>> {
    if t.n_rows() == 0 || t.n_cols() == 0 {
        return Err(Error::EmptyTable);
    }
    Ok((0..t.n_cols())
        .filter_map(|c| match t.column(c).count() {
            0 => Some((c, false)),
            n if n == t.n_rows() => Some((c, true)),
            _ => None,
        })
        .collect())
}
