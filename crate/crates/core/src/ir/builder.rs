use std::collections::HashMap;

use bitvec::prelude::*;

use super::column::{CellRef, Column, ColumnKind, PagedColumn};
use super::expression::Expression;
use super::layout::{
    padded_rows, CircuitLayout, CopyConstraintSet, CustomGate, LookupArgument, WitnessGrid,
};
use crate::error::CircuitError;
use crate::field::Fe;

pub const DEFAULT_MAX_DEGREE: u32 = 9;
pub const DEFAULT_BLINDING_ROWS: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LookupId(pub usize);

/// Incrementally assembles a circuit and, alongside it, one witness.
pub struct CircuitBuilder {
    max_degree: u32,
    blinding_rows: u32,
    columns: Vec<Column>,
    local: Vec<u32>,
    advice: Vec<PagedColumn>,
    fixed: Vec<PagedColumn>,
    selectors: Vec<BitVec<u64, Lsb0>>,
    instance_columns: u32,
    instance_next_row: Vec<u32>,
    gates: Vec<CustomGate>,
    gate_reach: Vec<(i32, i32)>,
    lookups: Vec<LookupArgument>,
    copies: Vec<(CellRef, CellRef)>,
    instance_slots: Vec<CellRef>,
    used_rows: u64,
}

impl CircuitBuilder {
    pub fn new(max_degree: u32) -> Result<CircuitBuilder, CircuitError> {
        if max_degree < 3 {
            return Err(CircuitError::DegreeTooSmall(max_degree));
        }
        Ok(CircuitBuilder {
            max_degree,
            blinding_rows: DEFAULT_BLINDING_ROWS,
            columns: Vec::new(),
            local: Vec::new(),
            advice: Vec::new(),
            fixed: Vec::new(),
            selectors: Vec::new(),
            instance_columns: 0,
            instance_next_row: Vec::new(),
            gates: Vec::new(),
            gate_reach: Vec::new(),
            lookups: Vec::new(),
            copies: Vec::new(),
            instance_slots: Vec::new(),
            used_rows: 0,
        })
    }

    pub fn with_blinding_rows(mut self, t: u32) -> CircuitBuilder {
        self.blinding_rows = t;
        self
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn blinding_rows(&self) -> u32 {
        self.blinding_rows
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn used_rows(&self) -> u64 {
        self.used_rows
    }

    pub fn gates(&self) -> &[CustomGate] {
        &self.gates
    }

    pub fn lookups(&self) -> &[LookupArgument] {
        &self.lookups
    }

    fn push_column(&mut self, kind: ColumnKind) -> Column {
        let index = self.columns.len() as u32;
        let local = match kind {
            ColumnKind::Advice => {
                self.advice.push(PagedColumn::new());
                self.advice.len() - 1
            }
            ColumnKind::Fixed => {
                self.fixed.push(PagedColumn::new());
                self.fixed.len() - 1
            }
            ColumnKind::Selector => {
                self.selectors.push(BitVec::new());
                self.selectors.len() - 1
            }
            ColumnKind::Instance => {
                self.instance_columns += 1;
                self.instance_next_row.push(0);
                self.instance_columns as usize - 1
            }
        };
        let c = Column { index, kind };
        self.columns.push(c);
        self.local.push(local as u32);
        c
    }

    pub fn advice_column(&mut self) -> Column {
        self.push_column(ColumnKind::Advice)
    }

    pub fn fixed_column(&mut self) -> Column {
        self.push_column(ColumnKind::Fixed)
    }

    pub fn instance_column(&mut self) -> Column {
        self.push_column(ColumnKind::Instance)
    }

    fn selector_column(&mut self) -> Column {
        self.push_column(ColumnKind::Selector)
    }

    pub fn column(&self, index: u32) -> Option<Column> {
        self.columns.get(index as usize).copied()
    }

    fn touch(&mut self, row: u64) {
        self.used_rows = self.used_rows.max(row + 1);
    }

    fn check_cell(&self, cell: CellRef) -> Result<Column, CircuitError> {
        self.column(cell.column).ok_or(CircuitError::OutOfGrid {
            row: cell.row as i64,
            column: cell.column,
        })
    }

    pub fn assign_advice(&mut self, cell: CellRef, v: Fe) -> Result<(), CircuitError> {
        let col = self.check_cell(cell)?;
        if col.kind != ColumnKind::Advice {
            return Err(CircuitError::WrongColumnKind { column: col.index, detail: "expected advice" });
        }
        self.advice[self.local[col.index as usize] as usize].set(cell.row as usize, v);
        self.touch(cell.row as u64);
        Ok(())
    }

    pub fn assign_fixed(&mut self, cell: CellRef, v: Fe) -> Result<(), CircuitError> {
        let col = self.check_cell(cell)?;
        if col.kind != ColumnKind::Fixed {
            return Err(CircuitError::NotFixedColumn(col.index));
        }
        self.fixed[self.local[col.index as usize] as usize].set(cell.row as usize, v);
        self.touch(cell.row as u64);
        Ok(())
    }

    /// Current value of an advice or fixed cell (zero if unassigned).
    /// Instance cells read as zero here; their values arrive at check time.
    pub fn value(&self, cell: CellRef) -> Fe {
        let Some(col) = self.column(cell.column) else {
            return Fe::ZERO;
        };
        let local = self.local[col.index as usize] as usize;
        match col.kind {
            ColumnKind::Advice => self.advice[local].get(cell.row as usize),
            ColumnKind::Fixed => self.fixed[local].get(cell.row as usize),
            ColumnKind::Selector => {
                let s = &self.selectors[local];
                Fe::from_u64(s.get(cell.row as usize).map(|b| *b).unwrap_or(false) as u64)
            }
            ColumnKind::Instance => Fe::ZERO,
        }
    }

    /// Registers a custom gate over `polys`; each must vanish on every row the
    /// gate is enabled. A dedicated selector column is allocated.
    pub fn add_gate(
        &mut self,
        name: impl Into<String>,
        polys: Vec<Expression>,
    ) -> Result<GateId, CircuitError> {
        let name = name.into();
        if polys.is_empty() {
            return Err(CircuitError::InvalidLookup(format!("gate `{name}` has no polynomials")));
        }
        let mut reach = (0i32, 0i32);
        for p in &polys {
            let degree = p.degree() + 1;
            if degree > self.max_degree {
                return Err(CircuitError::DegreeExceeded { name, degree, max: self.max_degree });
            }
            for q in p.queries() {
                let col = self.column(q.column).ok_or(CircuitError::OutOfGrid {
                    row: q.rotation as i64,
                    column: q.column,
                })?;
                if col.kind == ColumnKind::Selector {
                    return Err(CircuitError::WrongColumnKind {
                        column: col.index,
                        detail: "selectors are applied implicitly",
                    });
                }
                reach = (reach.0.min(q.rotation), reach.1.max(q.rotation));
            }
        }
        let selector = self.selector_column();
        self.gates.push(CustomGate { name, polys, selector });
        self.gate_reach.push(reach);
        Ok(GateId(self.gates.len() - 1))
    }

    pub fn enable_gate(&mut self, gate: GateId, row: u32) -> Result<(), CircuitError> {
        let (lo, hi) = *self.gate_reach.get(gate.0).ok_or(CircuitError::UnknownGate(gate.0))?;
        let sel = self.gates[gate.0].selector;
        if (row as i64) + (lo as i64) < 0 {
            return Err(CircuitError::OutOfGrid { row: row as i64 + lo as i64, column: sel.index });
        }
        self.set_selector(sel, row);
        self.touch(row as u64 + hi.max(0) as u64);
        Ok(())
    }

    pub fn enable_gate_rows(&mut self, gate: GateId, rows: core::ops::Range<u32>) -> Result<(), CircuitError> {
        if rows.is_empty() {
            return Ok(());
        }
        self.enable_gate(gate, rows.start)?;
        let sel = self.gates[gate.0].selector;
        let (_, hi) = self.gate_reach[gate.0];
        let bits = &mut self.selectors[self.local[sel.index as usize] as usize];
        if bits.len() < rows.end as usize {
            bits.resize(rows.end as usize, false);
        }
        bits[rows.start as usize..rows.end as usize].fill(true);
        self.touch(rows.end as u64 - 1 + hi.max(0) as u64);
        Ok(())
    }

    fn set_selector(&mut self, sel: Column, row: u32) {
        let bits = &mut self.selectors[self.local[sel.index as usize] as usize];
        if bits.len() <= row as usize {
            bits.resize(row as usize + 1, false);
        }
        bits.set(row as usize, true);
    }

    /// Registers a lookup of the per-row `inputs` tuple into the table formed by
    /// the given fixed columns. The table's length is the assigned extent of
    /// its columns when the circuit is finalized. A selector is allocated; the
    /// lookup only applies on rows where it is enabled.
    pub fn add_lookup(
        &mut self,
        name: impl Into<String>,
        inputs: Vec<Expression>,
        table: &[Column],
    ) -> Result<LookupId, CircuitError> {
        let name = name.into();
        if inputs.is_empty() {
            return Err(CircuitError::InvalidLookup(format!("lookup `{name}` has no inputs")));
        }
        if inputs.len() != table.len() {
            return Err(CircuitError::InvalidLookup(format!(
                "lookup `{name}` has {} inputs but {} table columns",
                inputs.len(),
                table.len()
            )));
        }
        for c in table {
            match self.column(c.index) {
                Some(col) if col.kind == ColumnKind::Fixed => {}
                _ => return Err(CircuitError::NotFixedColumn(c.index)),
            }
        }
        for e in &inputs {
            if e.degree() + 1 > self.max_degree {
                return Err(CircuitError::DegreeExceeded {
                    name,
                    degree: e.degree() + 1,
                    max: self.max_degree,
                });
            }
            for q in e.queries() {
                if q.rotation != 0 {
                    return Err(CircuitError::InvalidLookup("lookup inputs must not rotate".into()));
                }
                match self.column(q.column) {
                    Some(c) if c.kind != ColumnKind::Selector => {}
                    _ => {
                        return Err(CircuitError::WrongColumnKind {
                            column: q.column,
                            detail: "lookup input must query advice, fixed or instance",
                        })
                    }
                }
            }
        }
        let selector = self.selector_column();
        self.lookups.push(LookupArgument {
            name,
            inputs,
            table: table.to_vec(),
            table_len: 0,
            selector,
            blinding_rows: self.blinding_rows,
        });
        Ok(LookupId(self.lookups.len() - 1))
    }

    pub fn enable_lookup(&mut self, lookup: LookupId, row: u32) -> Result<(), CircuitError> {
        let sel = self.lookups.get(lookup.0).ok_or(CircuitError::UnknownLookup(lookup.0))?.selector;
        self.set_selector(sel, row);
        self.touch(row as u64);
        Ok(())
    }

    pub fn enable_lookup_rows(&mut self, lookup: LookupId, rows: core::ops::Range<u32>) -> Result<(), CircuitError> {
        if rows.is_empty() {
            return Ok(());
        }
        let sel = self.lookups.get(lookup.0).ok_or(CircuitError::UnknownLookup(lookup.0))?.selector;
        let bits = &mut self.selectors[self.local[sel.index as usize] as usize];
        if bits.len() < rows.end as usize {
            bits.resize(rows.end as usize, false);
        }
        bits[rows.start as usize..rows.end as usize].fill(true);
        self.touch(rows.end as u64 - 1);
        Ok(())
    }

    /// Declares that two cells hold equal values.
    pub fn add_copy(&mut self, a: CellRef, b: CellRef) -> Result<(), CircuitError> {
        let ca = self.check_cell(a)?;
        let cb = self.check_cell(b)?;
        for c in [ca, cb] {
            if c.kind == ColumnKind::Selector {
                return Err(CircuitError::WrongColumnKind { column: c.index, detail: "selector in copy" });
            }
        }
        self.touch(a.row.max(b.row) as u64);
        if a != b {
            self.copies.push((a, b));
        }
        Ok(())
    }

    /// Reserves the next row of `column` as a public instance slot.
    pub fn expose_instance(&mut self, column: Column) -> Result<CellRef, CircuitError> {
        let col = self.column(column.index).ok_or(CircuitError::OutOfGrid { row: 0, column: column.index })?;
        if col.kind != ColumnKind::Instance {
            return Err(CircuitError::WrongColumnKind { column: col.index, detail: "expected instance" });
        }
        let local = self.local[col.index as usize] as usize;
        let row = self.instance_next_row[local];
        self.instance_next_row[local] += 1;
        let cell = CellRef::new(row, col);
        self.instance_slots.push(cell);
        self.touch(row as u64);
        Ok(cell)
    }

    pub fn finalize(self) -> CircuitLayout {
        self.finalize_with_witness().0
    }

    pub fn finalize_with_witness(mut self) -> (CircuitLayout, WitnessGrid) {
        let mut max_table = 0u64;
        for l in &mut self.lookups {
            let len = l
                .table
                .iter()
                .map(|c| self.fixed[self.local[c.index as usize] as usize].len())
                .max()
                .unwrap_or(0);
            l.table_len = len as u32;
            max_table = max_table.max(len as u64 + l.blinding_rows as u64);
        }
        let rows = padded_rows(self.used_rows, max_table);
        for s in &mut self.selectors {
            s.resize(rows as usize, false);
        }
        let copies = CopyConstraintSet::from_pairs(&self.copies);
        let layout = CircuitLayout::from_parts(super::layout::LayoutParts {
            rows,
            max_degree: self.max_degree,
            blinding_rows: self.blinding_rows,
            columns: self.columns,
            gates: self.gates,
            lookups: self.lookups,
            copies,
            fixed: self.fixed,
            selectors: self.selectors,
            instance_slots: self.instance_slots,
        });
        let witness = WitnessGrid::from_columns(rows, self.advice);
        (layout, witness)
    }
}

/// Union-find over cells, used to collapse copy pairs into classes.
pub(crate) struct CellUnion {
    index: HashMap<CellRef, u32>,
    cells: Vec<CellRef>,
    parent: Vec<u32>,
}

impl CellUnion {
    pub fn new() -> CellUnion {
        CellUnion { index: HashMap::new(), cells: Vec::new(), parent: Vec::new() }
    }

    fn id(&mut self, c: CellRef) -> u32 {
        if let Some(i) = self.index.get(&c) {
            return *i;
        }
        let i = self.cells.len() as u32;
        self.index.insert(c, i);
        self.cells.push(c);
        self.parent.push(i);
        i
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    pub fn union(&mut self, a: CellRef, b: CellRef) {
        let (ia, ib) = (self.id(a), self.id(b));
        let (ra, rb) = (self.find(ia), self.find(ib));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }

    pub fn classes(mut self) -> Vec<Vec<CellRef>> {
        let n = self.cells.len();
        let mut groups: HashMap<u32, Vec<CellRef>> = HashMap::new();
        for i in 0..n as u32 {
            let r = self.find(i);
            groups.entry(r).or_default().push(self.cells[i as usize]);
        }
        let mut out: Vec<Vec<CellRef>> = groups
            .into_values()
            .filter(|g| g.len() > 1)
            .map(|mut g| {
                g.sort();
                g
            })
            .collect();
        out.sort();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_degree() {
        assert!(matches!(CircuitBuilder::new(2), Err(CircuitError::DegreeTooSmall(2))));
        assert!(CircuitBuilder::new(9).is_ok());
    }

    #[test]
    fn empty_builder_pads_to_one_row() {
        let mut b = CircuitBuilder::new(9).unwrap();
        b.advice_column();
        let layout = b.finalize();
        assert_eq!(layout.rows(), 1);
    }

    #[test]
    fn degree_budget_counts_selector() {
        let mut b = CircuitBuilder::new(5).unwrap();
        let a = b.advice_column();
        let x = Expression::cur(a.index);
        assert!(b.add_gate("deg4", vec![x.clone().pow(4)]).is_ok());
        let err = b.add_gate("deg5", vec![x.pow(5)]).unwrap_err();
        assert!(matches!(err, CircuitError::DegreeExceeded { degree: 6, max: 5, .. }));
    }

    #[test]
    fn negative_rotation_out_of_grid() {
        let mut b = CircuitBuilder::new(9).unwrap();
        let a = b.advice_column();
        let g = b.add_gate("prev", vec![Expression::query(a.index, -1)]).unwrap();
        assert!(matches!(b.enable_gate(g, 0), Err(CircuitError::OutOfGrid { .. })));
        assert!(b.enable_gate(g, 1).is_ok());
    }

    #[test]
    fn positive_rotation_extends_rows() {
        let mut b = CircuitBuilder::new(9).unwrap();
        let a = b.advice_column();
        let g = b.add_gate("next", vec![Expression::next(a.index) - Expression::cur(a.index)]).unwrap();
        b.enable_gate(g, 7).unwrap();
        assert_eq!(b.used_rows(), 9);
        assert_eq!(b.finalize().rows(), 16);
    }

    #[test]
    fn lookup_validation() {
        let mut b = CircuitBuilder::new(9).unwrap();
        let a = b.advice_column();
        let f = b.fixed_column();
        assert!(matches!(b.add_lookup("empty", vec![], &[]), Err(CircuitError::InvalidLookup(_))));
        assert!(matches!(
            b.add_lookup("advice table", vec![Expression::cur(a.index)], &[a]),
            Err(CircuitError::NotFixedColumn(_))
        ));
        assert!(b.add_lookup("ok", vec![Expression::cur(a.index)], &[f]).is_ok());
    }

    #[test]
    fn padding_covers_tables_and_blinding() {
        let mut b = CircuitBuilder::new(9).unwrap();
        let a = b.advice_column();
        let f = b.fixed_column();
        for r in 0..4 {
            b.assign_fixed(CellRef::new(r, f), Fe::from_u64(r as u64)).unwrap();
        }
        b.add_lookup("t", vec![Expression::cur(a.index)], &[f]).unwrap();
        b.assign_advice(CellRef::new(6, a), Fe::ONE).unwrap();
        // 7 used rows, table 4 + 6 blinding = 10 -> 16
        assert_eq!(b.finalize().rows(), 16);
    }

    #[test]
    fn union_find_transitive() {
        let c = |r| CellRef { row: r, column: 0 };
        let mut u = CellUnion::new();
        u.union(c(0), c(1));
        u.union(c(2), c(1));
        u.union(c(5), c(6));
        let classes = u.classes();
        assert_eq!(classes, vec![vec![c(0), c(1), c(2)], vec![c(5), c(6)]]);
    }
}
