//! Raw tabular inputs: silos, tables, columns, and the addressing scheme
//! for columns across silos.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Globally unique column address. Ordered lexicographically by
/// (silo, table, column); that ordering is the canonical one used for
/// edge representation and all deterministic iteration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub silo_id: String,
    pub table_id: String,
    pub column_name: String,
}

impl ColumnRef {
    pub fn new(
        silo_id: impl Into<String>,
        table_id: impl Into<String>,
        column_name: impl Into<String>,
    ) -> Self {
        ColumnRef {
            silo_id: silo_id.into(),
            table_id: table_id.into(),
            column_name: column_name.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.silo_id, self.table_id, self.column_name)
    }
}

/// One column's cells. `None` is a missing cell, distinct from an empty
/// string. Order is preserved for storage but nothing downstream may
/// depend on it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColumnValues {
    pub values: Vec<Option<String>>,
}

impl ColumnValues {
    pub fn new(values: Vec<Option<String>>) -> Self {
        ColumnValues { values }
    }

    pub fn from_strs(values: &[&str]) -> Self {
        ColumnValues {
            values: values.iter().map(|s| Some((*s).to_string())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A table: named columns in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableData {
    pub table_id: String,
    /// (column name, cells); all columns have the same number of cells.
    pub columns: Vec<(String, ColumnValues)>,
}

impl TableData {
    pub fn new(table_id: impl Into<String>) -> Self {
        TableData {
            table_id: table_id.into(),
            columns: Vec::new(),
        }
    }
}

/// A data silo: a set of tables plus the known intra-silo column matches.
/// Matches are unordered pairs of refs that both resolve inside the silo.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Silo {
    pub silo_id: String,
    pub tables: Vec<TableData>,
    pub intra_matches: Vec<(ColumnRef, ColumnRef)>,
}

impl Silo {
    pub fn new(silo_id: impl Into<String>) -> Self {
        Silo {
            silo_id: silo_id.into(),
            tables: Vec::new(),
            intra_matches: Vec::new(),
        }
    }

    /// All column refs of this silo in canonical order.
    pub fn column_refs(&self) -> Vec<ColumnRef> {
        let mut refs: Vec<ColumnRef> = self
            .tables
            .iter()
            .flat_map(|t| {
                t.columns
                    .iter()
                    .map(|(name, _)| ColumnRef::new(&self.silo_id, &t.table_id, name))
            })
            .collect();
        refs.sort();
        refs
    }

    pub fn column_count(&self) -> usize {
        self.tables.iter().map(|t| t.columns.len()).sum()
    }

    /// Looks up a column's values by ref.
    pub fn column(&self, r: &ColumnRef) -> Option<&ColumnValues> {
        if r.silo_id != self.silo_id {
            return None;
        }
        self.tables
            .iter()
            .find(|t| t.table_id == r.table_id)?
            .columns
            .iter()
            .find(|(name, _)| *name == r.column_name)
            .map(|(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_ref_ordering_is_lexicographic() {
        let a = ColumnRef::new("s1", "t1", "a");
        let b = ColumnRef::new("s1", "t1", "b");
        let c = ColumnRef::new("s1", "t2", "a");
        let d = ColumnRef::new("s2", "t0", "a");
        assert!(a < b && b < c && c < d);
    }

    #[test]
    fn column_refs_are_sorted_regardless_of_table_order() {
        let mut silo = Silo::new("s");
        let mut t2 = TableData::new("t2");
        t2.columns.push(("x".into(), ColumnValues::default()));
        let mut t1 = TableData::new("t1");
        t1.columns.push(("z".into(), ColumnValues::default()));
        t1.columns.push(("a".into(), ColumnValues::default()));
        silo.tables.push(t2);
        silo.tables.push(t1);
        let refs = silo.column_refs();
        assert_eq!(refs.len(), 3);
        assert!(refs.windows(2).all(|w| w[0] < w[1]));
    }
}
