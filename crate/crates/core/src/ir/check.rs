use std::collections::{HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::column::{CellRef, ColumnKind};
use super::expression::Query;
use super::layout::{CircuitLayout, WitnessGrid};
use crate::error::CircuitError;
use crate::field::Fe;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Gate,
    Lookup,
    Copy,
    Instance,
    /// A chain segment whose own report is unsatisfied.
    Segment,
    /// Adjacent segment digests disagree.
    Linkage,
    /// The first input digest is not the claimed source digest.
    SourceDigest,
    /// The revealed image does not hash to the last output digest.
    FinalImage,
}

/// `index` is the gate, lookup, copy class, instance slot or segment number,
/// depending on `kind`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: usize,
    pub row: Option<u32>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = serde_json::to_value(self.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        write!(f, "{kind} #{}", self.index)?;
        if let Some(r) = self.row {
            write!(f, " at row {r}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatisfactionReport {
    pub satisfied: bool,
    pub violations: Vec<Violation>,
}

impl SatisfactionReport {
    pub fn from_violations(mut violations: Vec<Violation>) -> SatisfactionReport {
        violations.sort();
        SatisfactionReport { satisfied: violations.is_empty(), violations }
    }

    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }
}

struct Grid<'a> {
    layout: &'a CircuitLayout,
    witness: &'a WitnessGrid,
    instance: HashMap<CellRef, Fe>,
}

impl Grid<'_> {
    #[inline]
    fn cell(&self, column: u32, row: u32) -> Fe {
        let col = self.layout.columns()[column as usize];
        match col.kind {
            ColumnKind::Advice => self.witness.column(self.layout.local_index(column)).get(row as usize),
            ColumnKind::Fixed => self.layout.fixed_value(CellRef { row, column }),
            ColumnKind::Selector => Fe::from_u64(self.layout.selector_enabled(col, row) as u64),
            ColumnKind::Instance => self.instance.get(&CellRef { row, column }).copied().unwrap_or(Fe::ZERO),
        }
    }

    fn query_at(&self, row: u32) -> impl Fn(Query) -> Fe + '_ {
        move |q| self.cell(q.column, (row as i64 + q.rotation as i64) as u32)
    }
}

fn describe(v: Fe) -> String {
    match v.to_i64() {
        Some(x) => x.to_string(),
        None => v.to_hex(),
    }
}

/// Evaluates every constraint of `layout` against one witness and the public
/// instance values (in slot order).
pub fn check_constraints(
    layout: &CircuitLayout,
    witness: &WitnessGrid,
    instance: &[Fe],
) -> Result<SatisfactionReport, CircuitError> {
    if witness.rows() != layout.rows() || witness.num_columns() != layout.num_advice() {
        return Err(CircuitError::DimensionMismatch(format!(
            "witness is {}x{} but the layout needs {}x{}",
            witness.rows(),
            witness.num_columns(),
            layout.rows(),
            layout.num_advice()
        )));
    }
    if instance.len() != layout.instance_slots().len() {
        return Err(CircuitError::DimensionMismatch(format!(
            "{} instance values for {} slots",
            instance.len(),
            layout.instance_slots().len()
        )));
    }
    let grid = Grid {
        layout,
        witness,
        instance: layout.instance_slots().iter().copied().zip(instance.iter().copied()).collect(),
    };
    let mut violations = Vec::new();

    for (g, gate) in layout.gates().iter().enumerate() {
        let rows: Vec<u32> = layout.enabled_rows(gate.selector).collect();
        let found: Vec<Violation> = rows
            .par_iter()
            .flat_map_iter(|&row| {
                let q = grid.query_at(row);
                gate.polys
                    .iter()
                    .enumerate()
                    .filter_map(move |(i, p)| {
                        let v = p.evaluate(&q);
                        (!v.is_zero()).then(|| Violation {
                            kind: ViolationKind::Gate,
                            index: g,
                            row: Some(row),
                            detail: format!("`{}` polynomial {i} evaluates to {}", gate.name, describe(v)),
                        })
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        violations.extend(found);
    }

    let mut tables: HashMap<Vec<u32>, HashSet<Vec<Fe>>> = HashMap::new();
    for (l, lookup) in layout.lookups().iter().enumerate() {
        let key: Vec<u32> = lookup.table.iter().map(|c| c.index).collect();
        let table = tables.entry(key).or_insert_with(|| {
            (0..lookup.table_len)
                .map(|r| lookup.table.iter().map(|c| grid.cell(c.index, r)).collect())
                .collect()
        });
        let table = &*table;
        let rows: Vec<u32> = layout.enabled_rows(lookup.selector).collect();
        let found: Vec<Violation> = rows
            .par_iter()
            .filter_map(|&row| {
                let q = grid.query_at(row);
                let tuple: Vec<Fe> = lookup.inputs.iter().map(|e| e.evaluate(&q)).collect();
                (!table.contains(&tuple)).then(|| {
                    let shown: Vec<String> = tuple.iter().map(|v| describe(*v)).collect();
                    Violation {
                        kind: ViolationKind::Lookup,
                        index: l,
                        row: Some(row),
                        detail: format!("`{}` input ({}) not in table", lookup.name, shown.join(", ")),
                    }
                })
            })
            .collect();
        violations.extend(found);
    }

    let found: Vec<Violation> = layout
        .copies()
        .classes()
        .par_iter()
        .enumerate()
        .filter_map(|(i, class)| {
            let first = grid.cell(class[0].column, class[0].row);
            let bad = class.iter().find(|c| grid.cell(c.column, c.row) != first)?;
            let involves_instance = class
                .iter()
                .any(|c| layout.columns()[c.column as usize].kind == ColumnKind::Instance);
            Some(Violation {
                kind: if involves_instance { ViolationKind::Instance } else { ViolationKind::Copy },
                index: i,
                row: Some(bad.row),
                detail: format!(
                    "c{}[{}] = {} differs from c{}[{}] = {}",
                    bad.column,
                    bad.row,
                    describe(grid.cell(bad.column, bad.row)),
                    class[0].column,
                    class[0].row,
                    describe(first)
                ),
            })
        })
        .collect();
    violations.extend(found);

    Ok(SatisfactionReport::from_violations(violations))
}
