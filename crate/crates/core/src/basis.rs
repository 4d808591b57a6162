//! Rule-set algebra and aggregation against the binary part.
//!
//! A sector rule `Y -> b` dominates `X -> b` when every `y` in `Y` is either in
//! `X` or follows from a single `x` in `X` by a binary rule `x -> y`; then
//! `X -> b` is derivable from `Y -> b` and the binary part. Aggregation keeps
//! only undominated rules. Two rules may dominate each other (for example
//! through an equivalence `a <-> c`); such a pair is kept whole unless one
//! antecedent is a proper subset of the other, in which case the shorter wins.
//! The outcome therefore never depends on column order.

use std::collections::{BTreeMap, BTreeSet};

use crate::bits::BitSet;
use crate::error::{Error, Result};
use crate::miner::RuleSet;
use crate::table::{AttrSet, BinaryTable, Rule};

fn check_consequents(a: &RuleSet, b: &RuleSet) -> Result<()> {
    if a.consequent() != b.consequent() || a.is_negated() != b.is_negated() {
        return Err(Error::ConsequentMismatch(
            format!("#{}{}", a.consequent(), if a.is_negated() { "¬" } else { "" }),
            format!("#{}{}", b.consequent(), if b.is_negated() { "¬" } else { "" }),
        ));
    }
    Ok(())
}

/// Rules of `a` whose antecedent does not appear in `b`.
pub fn diff(a: &RuleSet, b: &RuleSet) -> Result<RuleSet> {
    check_consequents(a, b)?;
    let mut out = a.clone();
    out.retain(|r| !b.contains(&r.antecedent));
    Ok(out)
}

/// Antecedent-level union. On collision the rule with the larger support wins,
/// `a`'s on a tie.
pub fn union(a: &RuleSet, b: &RuleSet) -> Result<RuleSet> {
    check_consequents(a, b)?;
    let mut out = a.clone();
    for r in b.iter() {
        match out.get(&r.antecedent) {
            Some(existing) if existing.support >= r.support => {}
            _ => {
                out.insert(r.clone())?;
            }
        }
    }
    Ok(out)
}

/// `x -> {y : x -> y}` over the binary rules.
#[derive(Clone, Debug, Default)]
pub struct BinaryImplications {
    reach: BTreeMap<usize, BTreeSet<usize>>,
}

impl BinaryImplications {
    pub fn new<'a, I: IntoIterator<Item = &'a Rule>>(rules: I) -> Self {
        let mut reach: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for r in rules {
            if let [a] = r.antecedent.as_slice() {
                reach.entry(*a).or_default().insert(r.consequent);
            }
        }
        BinaryImplications { reach }
    }

    /// `xs` together with everything one binary step away from it.
    pub fn expand(&self, xs: &AttrSet) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = xs.iter().collect();
        for x in xs.iter() {
            if let Some(ys) = self.reach.get(&x) {
                out.extend(ys);
            }
        }
        out
    }

    pub fn dominates(&self, y: &AttrSet, x: &AttrSet) -> bool {
        let reach = self.expand(x);
        y.iter().all(|a| reach.contains(&a))
    }
}

/// Removes every sector rule strictly dominated by another sector rule, or
/// dominated by one whose antecedent is a proper subset of its own.
pub fn aggregate(sector: &RuleSet, binary: &[Rule]) -> RuleSet {
    let bin = BinaryImplications::new(binary);
    let ants: Vec<&AttrSet> = sector.antecedents().collect();
    let n = ants.len();
    let universe = ants
        .iter()
        .filter_map(|a| a.last())
        .chain(bin.reach.values().flat_map(|ys| ys.iter().copied()))
        .max()
        .map_or(0, |m| m + 1);
    let own: Vec<BitSet> = ants.iter().map(|x| BitSet::from_indices(universe, x.iter())).collect();
    let expanded: Vec<BitSet> = ants
        .iter()
        .map(|x| BitSet::from_indices(universe, bin.expand(x)))
        .collect();
    // lacks[a]: rules whose antecedent avoids `a`
    let mut lacks = vec![BitSet::full(n); universe];
    for (i, x) in ants.iter().enumerate() {
        for a in x.iter() {
            lacks[a].remove(i);
        }
    }

    let mut out = sector.clone();
    let all = BitSet::full(n);
    let mut within = BitSet::new(n);
    for (i, x) in ants.iter().enumerate() {
        // rules whose antecedent lies inside the expansion of x
        within.clone_from(&all);
        for a in expanded[i].complement().iter() {
            within.intersect_with(&lacks[a]);
        }
        let dominated = within
            .iter()
            .any(|j| j != i && (!own[i].is_subset(&expanded[j]) || own[j].is_subset(&own[i])));
        if dominated {
            out.remove(x);
        }
    }
    out
}

/// Recomputes support and antecedent support of every rule on `t`.
pub fn annotate(rules: &RuleSet, t: &BinaryTable) -> Result<RuleSet> {
    let mut out = rules.clone();
    for r in out.rules_mut() {
        t.check_column(r.consequent)?;
        let rows = t.rows_with(&r.antecedent)?;
        r.antecedent_support = rows.count();
        r.support = rows.intersection_count(t.column(r.consequent));
    }
    Ok(out)
}

/// A sector together with the binary part it is aggregated against.
#[derive(Clone, Debug)]
pub struct Basis {
    pub sector: RuleSet,
    pub binary: Vec<Rule>,
    pub aggregated: bool,
}

impl Basis {
    pub fn new(sector: RuleSet, binary: Vec<Rule>) -> Self {
        Basis {
            sector,
            binary,
            aggregated: false,
        }
    }

    pub fn aggregate(mut self) -> Self {
        if !self.aggregated {
            self.sector = aggregate(&self.sector, &self.binary);
            self.aggregated = true;
        }
        self
    }
}
