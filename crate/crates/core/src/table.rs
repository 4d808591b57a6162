//! Binary tables: loading, support counting, row deletion and column negation.
//!
//! A table is stored column-major: each column is a bitset over the rows, so
//! the support of an attribute set is the popcount of the AND of its columns.
//! Row identities survive deletion; column positions never change, which lets
//! an [`AttrSet`] built against one table be evaluated on any table derived
//! from it.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Read, Write};

use serde::{Serialize, Serializer};

use crate::bits::BitSet;
use crate::error::{Error, Result};

/// Stable label of a row (1-based position in the original input).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct RowId(pub usize);

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// Attribute label. `negated` marks a column replaced by its complement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColumnLabel {
    pub name: String,
    pub negated: bool,
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬{}", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

/// A set of column positions, kept sorted and deduplicated.
///
/// The derived ordering is lexicographic on the sorted member list.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrSet(Vec<usize>);

impl AttrSet {
    pub fn empty() -> Self {
        AttrSet(Vec::new())
    }

    pub fn singleton(c: usize) -> Self {
        AttrSet(vec![c])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: usize) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_subset(&self, other: &AttrSet) -> bool {
        self.0.iter().all(|c| other.contains(*c))
    }

    pub fn without(&self, c: usize) -> AttrSet {
        AttrSet(self.0.iter().copied().filter(|&x| x != c).collect())
    }

    pub fn with(&self, c: usize) -> AttrSet {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&c) {
            v.insert(pos, c);
        }
        AttrSet(v)
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl FromIterator<usize> for AttrSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        AttrSet(v)
    }
}

impl<const N: usize> From<[usize; N]> for AttrSet {
    fn from(a: [usize; N]) -> Self {
        a.into_iter().collect()
    }
}

impl Serialize for AttrSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Where a rule was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    FullTable,
    /// Mined on the table with these rows removed.
    DeletedSet(Vec<RowId>),
}

/// An association rule `antecedent -> consequent` measured on some table.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub antecedent: AttrSet,
    pub consequent: usize,
    /// Rows holding every attribute of antecedent and consequent.
    pub support: usize,
    /// Rows holding every attribute of the antecedent.
    pub antecedent_support: usize,
    pub origin: Origin,
}

impl Rule {
    /// Measures `antecedent -> consequent` on `t`.
    pub fn measure(
        t: &BinaryTable,
        antecedent: AttrSet,
        consequent: usize,
        origin: Origin,
    ) -> Result<Rule> {
        if antecedent.is_empty() {
            return Err(Error::EmptyAntecedent);
        }
        t.check_column(consequent)?;
        if antecedent.contains(consequent) {
            return Err(Error::ConsequentInAntecedent(t.label(consequent).to_string()));
        }
        let rows = t.rows_with(&antecedent)?;
        let support = rows.intersection_count(&t.columns[consequent]);
        Ok(Rule {
            antecedent_support: rows.count(),
            support,
            antecedent,
            consequent,
            origin,
        })
    }

    /// `support / antecedent_support`, or `None` when the antecedent never occurs.
    pub fn confidence(&self) -> Option<f64> {
        (self.antecedent_support > 0).then(|| self.support as f64 / self.antecedent_support as f64)
    }

    pub fn is_implication(&self) -> bool {
        self.antecedent_support > 0 && self.support == self.antecedent_support
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryTable {
    n_rows: usize,
    columns: Vec<BitSet>,
    row_ids: Vec<RowId>,
    col_labels: Vec<ColumnLabel>,
}

impl BinaryTable {
    /// Builds a table from dense rows. Row ids are `1..=n`, column labels `1..=m`.
    pub fn from_rows<R: AsRef<[u8]>>(n_cols: usize, rows: &[R]) -> Result<Self> {
        let labels = (1..=n_cols).map(|i| i.to_string()).collect();
        Self::from_rows_labeled(labels, rows)
    }

    pub fn from_rows_labeled<R: AsRef<[u8]>>(labels: Vec<String>, rows: &[R]) -> Result<Self> {
        let n_cols = labels.len();
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate column label {l}")));
            }
        }
        let n_rows = rows.len();
        let mut columns = vec![BitSet::new(n_rows); n_cols];
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::Cell {
                    row: r + 1,
                    col: row.len().min(n_cols) + 1,
                    msg: format!("expected {n_cols} entries, found {}", row.len()),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => columns[c].insert(r),
                    other => {
                        return Err(Error::Cell {
                            row: r + 1,
                            col: c + 1,
                            msg: format!("entry {other} is not binary"),
                        })
                    }
                }
            }
        }
        Ok(BinaryTable {
            n_rows,
            columns,
            row_ids: (1..=n_rows).map(RowId).collect(),
            col_labels: labels
                .into_iter()
                .map(|name| ColumnLabel {
                    name,
                    negated: false,
                })
                .collect(),
        })
    }

    /// Reads FIMI transactions: one transaction per line, whitespace-separated
    /// item ids. Columns are the distinct items of the ingested lines, sorted.
    pub fn load_fimi<R: BufRead>(reader: R, max_rows: Option<usize>) -> Result<Self> {
        let mut transactions: Vec<Vec<u64>> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            if max_rows.is_some_and(|m| transactions.len() >= m) {
                break;
            }
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut items = Vec::new();
            for tok in line.split_ascii_whitespace() {
                let id = tok.parse::<u64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("item id {tok:?} is not a non-negative integer"),
                })?;
                items.push(id);
            }
            items.sort_unstable();
            items.dedup();
            transactions.push(items);
        }
        if transactions.is_empty() {
            return Err(Error::EmptyInput);
        }

        let universe: BTreeSet<u64> = transactions.iter().flatten().copied().collect();
        let position: HashMap<u64, usize> =
            universe.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let n_rows = transactions.len();
        let mut columns = vec![BitSet::new(n_rows); universe.len()];
        for (r, items) in transactions.iter().enumerate() {
            for id in items {
                columns[position[id]].insert(r);
            }
        }
        Ok(BinaryTable {
            n_rows,
            columns,
            row_ids: (1..=n_rows).map(RowId).collect(),
            col_labels: universe
                .iter()
                .map(|id| ColumnLabel {
                    name: id.to_string(),
                    negated: false,
                })
                .collect(),
        })
    }

    /// Reads a comma-separated 0/1 matrix.
    pub fn load_csv<R: Read>(reader: R, has_header: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(true)
            .from_reader(reader);
        let mut labels: Option<Vec<String>> = if has_header {
            Some(rdr.headers()?.iter().map(str::to_string).collect())
        } else {
            None
        };
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row_no = i + 1;
            let width = labels.as_ref().map(Vec::len).or(rows.first().map(Vec::len));
            if let Some(w) = width {
                if rec.len() != w {
                    return Err(Error::Cell {
                        row: row_no,
                        col: rec.len().min(w) + 1,
                        msg: format!("ragged row: expected {w} entries, found {}", rec.len()),
                    });
                }
            }
            let mut row = Vec::with_capacity(rec.len());
            for (c, field) in rec.iter().enumerate() {
                row.push(match field {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::Cell {
                            row: row_no,
                            col: c + 1,
                            msg: format!("entry {other:?} is not binary"),
                        })
                    }
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let labels = labels
            .take()
            .unwrap_or_else(|| (1..=rows[0].len()).map(|i| i.to_string()).collect());
        Self::from_rows_labeled(labels, &rows)
    }

    /// Writes the table as CSV with a header of column labels.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.col_labels.iter().map(|l| l.to_string()))?;
        for r in 0..self.n_rows {
            w.write_record((0..self.n_cols()).map(|c| if self.get(r, c) { "1" } else { "0" }))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    pub fn col_labels(&self) -> &[ColumnLabel] {
        &self.col_labels
    }

    pub fn label(&self, c: usize) -> &ColumnLabel {
        &self.col_labels[c]
    }

    /// Rows (by position) holding a 1 in column `c`.
    pub fn column(&self, c: usize) -> &BitSet {
        &self.columns[c]
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.columns[col].contains(row)
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: bool) {
        if value {
            self.columns[col].insert(row)
        } else {
            self.columns[col].remove(row)
        }
    }

    /// Position of the column whose label (ignoring negation) is `name`.
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.col_labels
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn attr_set(&self, names: &[&str]) -> Result<AttrSet> {
        names.iter().map(|n| self.column_index(n)).collect()
    }

    pub fn row_position(&self, id: RowId) -> Result<usize> {
        self.row_ids.binary_search(&id).map_err(|_| Error::UnknownRow(id))
    }

    pub(crate) fn check_column(&self, c: usize) -> Result<()> {
        if c < self.n_cols() {
            Ok(())
        } else {
            Err(Error::UnknownColumn(format!("#{c}")))
        }
    }

    /// Rows (by position) holding every attribute of `xs`.
    pub fn rows_with(&self, xs: &AttrSet) -> Result<BitSet> {
        let mut rows = BitSet::full(self.n_rows);
        for c in xs.iter() {
            self.check_column(c)?;
            rows.intersect_with(&self.columns[c]);
        }
        Ok(rows)
    }

    /// Number of rows with a 1 in every column of `xs`; the empty set is held by every row.
    pub fn support(&self, xs: &AttrSet) -> Result<usize> {
        match xs.as_slice() {
            [] => Ok(self.n_rows),
            [c] => {
                self.check_column(*c)?;
                Ok(self.columns[*c].count())
            }
            [a, b] => {
                self.check_column(*a)?;
                self.check_column(*b)?;
                Ok(self.columns[*a].intersection_count(&self.columns[*b]))
            }
            _ => Ok(self.rows_with(xs)?.count()),
        }
    }

    /// `sup(x ∪ {b}) / sup(x)`; `Ok(None)` when `sup(x) = 0`.
    pub fn confidence(&self, x: &AttrSet, b: usize) -> Result<Option<f64>> {
        self.check_column(b)?;
        if x.contains(b) {
            return Err(Error::ConsequentInAntecedent(self.label(b).to_string()));
        }
        let rows = self.rows_with(x)?;
        let sx = rows.count();
        if sx == 0 {
            return Ok(None);
        }
        Ok(Some(rows.intersection_count(&self.columns[b]) as f64 / sx as f64))
    }

    /// Rows with 1 on all of `x` and 0 at `b`.
    pub fn violating_rows(&self, x: &AttrSet, b: usize) -> Result<BTreeSet<RowId>> {
        self.check_column(b)?;
        if x.contains(b) {
            return Err(Error::ConsequentInAntecedent(self.label(b).to_string()));
        }
        let mut rows = self.rows_with(x)?;
        rows.difference_with(&self.columns[b]);
        Ok(rows.iter().map(|r| self.row_ids[r]).collect())
    }

    /// Copy of the table without `rows`; surviving rows keep their ids.
    pub fn delete_rows(&self, rows: &BTreeSet<RowId>) -> Result<BinaryTable> {
        let mut drop = BitSet::new(self.n_rows);
        for &id in rows {
            drop.insert(self.row_position(id)?);
        }
        let keep: Vec<usize> = (0..self.n_rows).filter(|r| !drop.contains(*r)).collect();
        let columns = self
            .columns
            .iter()
            .map(|col| BitSet::from_indices(keep.len(), keep.iter().enumerate().filter(|(_, &r)| col.contains(r)).map(|(i, _)| i)))
            .collect();
        Ok(BinaryTable {
            n_rows: keep.len(),
            columns,
            row_ids: keep.iter().map(|&r| self.row_ids[r]).collect(),
            col_labels: self.col_labels.clone(),
        })
    }

    /// Copy of the table with column `b` complemented.
    pub fn negate_column(&self, b: usize) -> Result<BinaryTable> {
        self.check_column(b)?;
        let mut t = self.clone();
        t.columns[b] = t.columns[b].complement();
        t.col_labels[b].negated = !t.col_labels[b].negated;
        Ok(t)
    }

    pub fn ones(&self) -> usize {
        self.columns.iter().map(BitSet::count).sum()
    }

    pub fn density(&self) -> Result<f64> {
        let cells = self.n_rows * self.n_cols();
        if cells == 0 {
            return Err(Error::EmptyTable);
        }
        Ok(self.ones() as f64 / cells as f64)
    }

    /// Positions of columns that are 0 in row `r`.
    pub(crate) fn zeros_of_row(&self, r: usize) -> BitSet {
        BitSet::from_indices(
            self.n_cols(),
            (0..self.n_cols()).filter(|&c| !self.columns[c].contains(r)),
        )
    }
}
