//! Range checks, constant division, hard-coded dot products, clamps and byte
//! packing, laid out by the region synthesizer.

mod chips;
mod synth;

pub use chips::{clamp_u8, ChipKey, QuotientCheck, RegionShape, TableKey, MAX_TABLE_DOMAIN, PACK_BYTES};
pub use synth::{pack_value, SynthConfig, Synthesized, Synthesizer};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::GadgetError;
    use crate::field::Fe;
    use crate::ir::{check_constraints, CellRef, ColumnKind, ViolationKind};

    fn sx() -> Synthesizer {
        Synthesizer::new(SynthConfig::default()).unwrap()
    }

    fn check(s: Synthesized) -> crate::ir::SatisfactionReport {
        check_constraints(&s.layout, &s.witness, &s.instance).unwrap()
    }

    fn fixed_columns(s: &Synthesized) -> usize {
        s.layout.columns().iter().filter(|c| c.kind == ColumnKind::Fixed).count()
    }

    #[test]
    fn range_check_boundaries() {
        for (v, ok) in [(255u64, true), (256, false), (0, true)] {
            let mut s = sx();
            let c = s.free_cell(Fe::from_u64(v)).unwrap();
            s.range_check(c, 8).unwrap();
            assert_eq!(check(s.finish().unwrap()).satisfied, ok, "{v}");
        }
        let mut s = sx();
        let c = s.free_cell(Fe::ONE).unwrap();
        assert_eq!(s.range_check(c, 12), Err(GadgetError::UnsupportedWidth(12)));
    }

    #[test]
    fn range_tables_are_shared() {
        let mut s = sx();
        let a = s.free_cell(Fe::from_u64(3)).unwrap();
        let b = s.free_cell(Fe::from_u64(4)).unwrap();
        s.range_check(a, 8).unwrap();
        s.range_check(b, 8).unwrap();
        let out = s.finish().unwrap();
        // constants + one range table
        assert_eq!(fixed_columns(&out), 2);
        assert!(check(out).satisfied);
    }

    #[test]
    fn div_examples() {
        let mut s = sx();
        let c = s.free_cell(Fe::from_u64(7)).unwrap();
        let (q, r) = s.div_const(c, 2, 8).unwrap();
        assert_eq!((s.value(q), s.value(r)), (Fe::from_u64(3), Fe::ONE));
        let z = s.free_cell(Fe::ZERO).unwrap();
        let (q0, r0) = s.div_const(z, 17, 8).unwrap();
        assert_eq!((s.value(q0), s.value(r0)), (Fe::ZERO, Fe::ZERO));
        let mut out = s.finish().unwrap();
        assert!(check_constraints(&out.layout, &out.witness, &out.instance).unwrap().satisfied);
        // b = 2, r = 3 keeps the gate satisfied but breaks the remainder range.
        let col = out.layout.local_index(q.column);
        out.witness.set(col, q.row as usize, Fe::from_u64(2));
        out.witness.set(out.layout.local_index(r.column), r.row as usize, Fe::from_u64(3));
        let report = check(out);
        assert!(!report.satisfied);
        assert!(report.violations.iter().all(|v| v.kind == ViolationKind::Lookup));
    }

    #[test]
    fn dot_examples() {
        let mut s = sx();
        let xs: Vec<CellRef> = [4u64, 5, 6].iter().map(|v| s.free_cell(Fe::from_u64(*v)).unwrap()).collect();
        let y = s.dot_const(&xs, &[1, 2, 3], 0).unwrap();
        assert_eq!(s.value(y), Fe::from_u64(32));
        let e2 = s.dot_const(&xs, &[0, 1, 0], 0).unwrap();
        assert_eq!(s.value(e2), Fe::from_u64(5));
        let zero = s.dot_const(&xs, &[0, 0, 0], 0).unwrap();
        assert_eq!(s.value(zero), Fe::ZERO);
        assert!(matches!(s.dot_const(&xs, &[1, 2], 0), Err(GadgetError::LengthMismatch { .. })));
        assert!(check(s.finish().unwrap()).satisfied);
    }

    #[test]
    fn clamp_examples() {
        let mut s = sx();
        for (x, want) in [(100i64, 100u64), (300, 255), (-5, 0)] {
            let c = s.free_cell(Fe::from_i64(x)).unwrap();
            let y = s.clamp(c, -1020, 1275).unwrap();
            assert_eq!(s.value(y), Fe::from_u64(want));
        }
        let c = s.free_cell(Fe::ONE).unwrap();
        assert!(matches!(s.clamp(c, 0, 1 << 16), Err(GadgetError::BoundTooWide { .. })));
        let out = s.finish().unwrap();
        // constants + one two-column clamp table
        assert_eq!(fixed_columns(&out), 3);
        assert!(check(out).satisfied);
    }

    #[test]
    fn pack_examples() {
        let mut s = sx();
        let zero = s.free_cell(Fe::ZERO).unwrap();
        let one = s.free_cell(Fe::ONE).unwrap();
        let all_zero = s.pack_bytes(&[zero; 31]).unwrap();
        let mut first = vec![zero; 31];
        first[0] = one;
        let unit = s.pack_bytes(&first).unwrap();
        first.swap(0, 1);
        let weighted = s.pack_bytes(&first).unwrap();
        assert_eq!(s.value(all_zero), Fe::ZERO);
        assert_eq!(s.value(unit), Fe::ONE);
        assert_eq!(s.value(weighted), Fe::from_u64(256));
        assert_eq!(s.pack_bytes(&[zero; 32]), Err(GadgetError::TooManyBytes(32)));
        assert!(check(s.finish().unwrap()).satisfied);
    }

    #[test]
    fn replicated_region_layout() {
        let shape = RegionShape {
            name: "t".into(),
            units: 10,
            chips: vec![(ChipKey::Dot { coeffs: vec![2], offset: 1 }, 1), (ChipKey::Clamp { lo: 0, hi: 400 }, 1)],
        };
        let mut s = sx();
        let inputs: Vec<CellRef> = (0..10).map(|v| s.free_cell(Fe::from_u64(v * 20)).unwrap()).collect();
        let base = s.rows_used();
        s.open_region(&shape, 4).unwrap();
        let mut outs = Vec::new();
        for x in &inputs {
            let d = s.op_dot(0, &[*x]).unwrap();
            outs.push(s.op_clamp(1, d).unwrap());
        }
        assert!(s.op_dot(0, &[inputs[0]]).is_ok(), "filler capacity is usable");
        s.close_region().unwrap();
        assert_eq!(s.rows_used(), base + 3);
        assert_eq!(s.advice_width(), 4 * 2 + 4 * 2);
        for (i, y) in outs.iter().enumerate() {
            assert_eq!(s.value(*y), Fe::from_u64((i as u64 * 40 + 1).min(255)));
            assert_eq!(y.row, base + i as u32 / 4);
        }
        assert!(check(s.finish().unwrap()).satisfied);
    }
}
