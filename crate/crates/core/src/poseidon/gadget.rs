use super::{permutations, round, PoseidonParams, ROUNDS, WIDTH};
use crate::error::GadgetError;
use crate::field::Fe;
use crate::gadgets::Synthesizer;
use crate::ir::{CellRef, Expression};

/// Custom gates of the hash region: one absorb gate and one gate per round.
pub const HASH_GATES: usize = 1 + ROUNDS;
const COLUMNS: usize = 5;

/// Rows taken by the hash region for `n` input elements.
pub fn hash_region_rows(n: usize) -> u64 {
    1 + (1 + ROUNDS as u64) * permutations(n) as u64
}

fn ensure_gates(sx: &mut Synthesizer) -> Result<(), GadgetError> {
    if sx.hash_gates.is_some() {
        return Ok(());
    }
    let cols: Vec<u32> = (0..COLUMNS).map(|i| sx.advice(i).index).collect();
    let s = |i: usize| Expression::cur(cols[i]);
    let s_next = |i: usize| Expression::next(cols[i]);
    let mut ids = Vec::with_capacity(HASH_GATES);
    ids.push(sx.b.add_gate(
        "poseidon/absorb",
        vec![s_next(0) - s(0), s_next(1) - s(1) - s(3), s_next(2) - s(2) - s(4)],
    )?);
    let p = PoseidonParams::get();
    for r in 0..ROUNDS {
        let rc = p.round_constants(r);
        let full = PoseidonParams::is_full_round(r);
        let sb: Vec<Expression> = (0..WIDTH)
            .map(|j| {
                let x = s(j) + Expression::Constant(rc[j]);
                if full || j == 0 {
                    x.pow(5)
                } else {
                    x
                }
            })
            .collect();
        let polys = (0..WIDTH)
            .map(|i| {
                let mix = Expression::sum_of((0..WIDTH).map(|j| sb[j].clone() * p.mds[i][j]).collect());
                s_next(i) - mix
            })
            .collect();
        ids.push(sx.b.add_gate(format!("poseidon/round{r}"), polys)?);
    }
    sx.hash_gates = Some(ids);
    Ok(())
}

/// Hashes `inputs` in-circuit with the same sponge as
/// [`super::hash_elements`] and returns the digest cell.
///
/// Columns 0..3 of the advice pool hold the state and columns 3..5 the two
/// absorbed elements. Row `b` holds the initial state, and each permutation
/// takes an absorb row followed by one row per round.
pub fn hash_gadget(sx: &mut Synthesizer, inputs: &[CellRef]) -> Result<CellRef, GadgetError> {
    if inputs.is_empty() {
        return Err(GadgetError::EmptyInput);
    }
    sx.ensure_closed()?;
    ensure_gates(sx)?;
    let gates = sx.hash_gates.clone().expect("created above");
    let cols: Vec<_> = (0..COLUMNS).map(|i| sx.advice(i)).collect();
    let base = sx.cursor;
    let zero = sx.zero();
    let tag = sx.constant(Fe::from_u64(inputs.len() as u64))?;

    let mut state = [Fe::from_u64(inputs.len() as u64), Fe::ZERO, Fe::ZERO];
    for (i, src) in [tag, zero, zero].into_iter().enumerate() {
        let cell = CellRef::new(base, cols[i]);
        sx.assign(cell, state[i])?;
        sx.copy(src, cell)?;
    }
    let mut row = base;
    for chunk in inputs.chunks(2) {
        for (k, lane) in [3usize, 4].into_iter().enumerate() {
            let src = chunk.get(k).copied().unwrap_or(zero);
            let v = sx.value(src);
            let cell = CellRef::new(row, cols[lane]);
            sx.assign(cell, v)?;
            sx.copy(src, cell)?;
            state[k + 1] += v;
        }
        sx.b.enable_gate(gates[0], row)?;
        row += 1;
        write_state(sx, &cols, row, &state)?;
        for (r, gate) in gates[1..].iter().enumerate() {
            sx.b.enable_gate(*gate, row)?;
            round(&mut state, r);
            row += 1;
            write_state(sx, &cols, row, &state)?;
        }
    }
    debug_assert_eq!((row - base + 1) as u64, super::hash_region_rows(inputs.len()));
    sx.cursor = row + 1;
    Ok(CellRef::new(row, cols[0]))
}

fn write_state(sx: &mut Synthesizer, cols: &[crate::ir::Column], row: u32, state: &[Fe; WIDTH]) -> Result<(), GadgetError> {
    for i in 0..WIDTH {
        sx.assign(CellRef::new(row, cols[i]), state[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::SynthConfig;
    use crate::ir::{check_constraints, ViolationKind};
    use crate::poseidon::hash_elements;

    #[test]
    fn circuit_matches_native_and_detects_tampering() {
        let inputs: Vec<Fe> = (0..5u64).map(|i| Fe::from_u64(i * 1_000_003 + 7)).collect();
        let mut sx = Synthesizer::new(SynthConfig::default()).unwrap();
        let cells: Vec<CellRef> = inputs.iter().map(|v| sx.free_cell(*v).unwrap()).collect();
        let before = sx.rows_used();
        let d = hash_gadget(&mut sx, &cells).unwrap();
        assert_eq!(sx.rows_used() - before, hash_region_rows(5) as u32);
        assert_eq!(hash_region_rows(5), 3 * 66 + 1);
        assert_eq!(sx.value(d), hash_elements(&inputs).unwrap());
        sx.expose(d).unwrap();
        let mut out = sx.finish().unwrap();
        assert!(check_constraints(&out.layout, &out.witness, &out.instance).unwrap().satisfied);
        out.witness.set(1, before as usize + 40, Fe::from_u64(9));
        let r = check_constraints(&out.layout, &out.witness, &out.instance).unwrap();
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::Gate));
    }
}
