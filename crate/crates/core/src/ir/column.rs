use serde::{Deserialize, Serialize};

use crate::field::Fe;

/// What a column holds and who may write it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    /// Private witness values.
    Advice,
    /// Constants fixed when the circuit is compiled.
    Fixed,
    /// Public values supplied by the verifier.
    Instance,
    /// 0/1 gate enables; fixed at compile time.
    Selector,
}

impl ColumnKind {
    pub(crate) fn tag(self) -> u8 {
        match self {
            ColumnKind::Advice => 0,
            ColumnKind::Fixed => 1,
            ColumnKind::Instance => 2,
            ColumnKind::Selector => 3,
        }
    }

    pub(crate) fn from_tag(t: u8) -> Option<ColumnKind> {
        Some(match t {
            0 => ColumnKind::Advice,
            1 => ColumnKind::Fixed,
            2 => ColumnKind::Instance,
            3 => ColumnKind::Selector,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Column {
    pub index: u32,
    pub kind: ColumnKind,
}

/// A single grid cell; `column` is the global column index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellRef {
    pub row: u32,
    pub column: u32,
}

impl CellRef {
    pub fn new(row: u32, column: Column) -> CellRef {
        CellRef { row, column: column.index }
    }
}

const PAGE_BITS: u32 = 12;
const PAGE: usize = 1 << PAGE_BITS;

/// Column storage that only materializes pages that were written.
/// Unwritten cells read as zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PagedColumn {
    pages: Vec<Option<Box<[Fe]>>>,
    len: usize,
}

impl PagedColumn {
    pub fn new() -> PagedColumn {
        PagedColumn::default()
    }

    pub fn from_values(values: &[Fe]) -> PagedColumn {
        let mut c = PagedColumn::new();
        for (i, v) in values.iter().enumerate() {
            c.set(i, *v);
        }
        c
    }

    #[inline]
    pub fn get(&self, row: usize) -> Fe {
        match self.pages.get(row >> PAGE_BITS) {
            Some(Some(p)) => p[row & (PAGE - 1)],
            _ => Fe::ZERO,
        }
    }

    pub fn set(&mut self, row: usize, v: Fe) {
        let page = row >> PAGE_BITS;
        if self.pages.len() <= page {
            self.pages.resize_with(page + 1, || None);
        }
        let p = self.pages[page].get_or_insert_with(|| vec![Fe::ZERO; PAGE].into_boxed_slice());
        p[row & (PAGE - 1)] = v;
        self.len = self.len.max(row + 1);
    }

    /// One past the highest row ever written.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Values of rows `0..len`, dense.
    pub fn to_vec(&self) -> Vec<Fe> {
        (0..self.len).map(|r| self.get(r)).collect()
    }

    pub fn allocated_bytes(&self) -> usize {
        self.pages.iter().flatten().count() * PAGE * core::mem::size_of::<Fe>()
    }
}
