mod common;

use common::{random_image, random_transform};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zkimg::cost::{CommitModes, CostConfig, SegmentShape};
use zkimg::gadgets::SynthConfig;
use zkimg::ir::padded_rows;
use zkimg::pipeline::synthesize_segment;
use zkimg::poseidon::hash_region_rows;
use zkimg::TransformSpec;

fn modes(i: usize) -> CommitModes {
    CommitModes { hash_input: i & 1 == 1, hash_output: i & 2 == 2 }
}

/// For random segments and packings, the estimate agrees with the layout the
/// synthesizer actually produces.
#[test]
fn estimate_equals_synthesized_layout() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = CostConfig::default();
    for i in 0..60 {
        let mut dims = (rng.gen_range(1..12), rng.gen_range(1..10));
        let img = random_image(&mut rng, dims.0, dims.1);
        let n = rng.gen_range(1..4);
        let mut ts = Vec::new();
        for _ in 0..n {
            let name = TransformSpec::NAMES[rng.gen_range(0..12)];
            let t = random_transform(&mut rng, name, dims);
            dims = t.output_dims(dims).unwrap();
            ts.push(t);
        }
        let m = modes(i);
        let shape = SegmentShape::new(&ts, img.dims(), m).unwrap();
        let ks: Vec<usize> = match i % 3 {
            0 => shape.baseline_ks(),
            1 => shape.optimize(&cfg).0,
            _ => shape.regions.iter().map(|_| rng.gen_range(1..6)).collect(),
        };
        let est = shape.estimate(&ks, &cfg);
        let built = synthesize_segment(&ts, &img, &ks, m, SynthConfig::default()).unwrap();
        let st = built.circuit.layout.stats();
        let what = format!("{ts:?} {m:?} ks={ks:?}");
        assert_eq!(est.padded_rows, st.rows, "{what}");
        // Table columns count as used in the layout but not in the estimate.
        assert_eq!(est.useful_rows.max(st.max_table_len as u64), st.used_rows, "{what}");
        assert_eq!(est.advice_columns, st.advice_columns, "{what}");
        assert_eq!(est.fixed_columns, st.fixed_with_selectors(), "{what}");
        assert_eq!(est.selector_columns, st.selector_columns, "{what}");
        assert_eq!(est.instance_columns, st.instance_columns, "{what}");
        assert_eq!(est.gate_count, st.gates, "{what}");
        assert_eq!(est.lookup_count, st.lookups, "{what}");
        assert_eq!(est.table_count, st.tables, "{what}");
        assert_eq!(est.estimated_cells, st.cells(), "{what}");
    }
}

#[test]
fn hash_rows_follow_the_permutation_count() {
    // One row for the initial state, then an absorb row and 65 round rows
    // per permutation; each permutation absorbs two elements.
    assert_eq!(hash_region_rows(1), 1 + 66);
    assert_eq!(hash_region_rows(2), 1 + 66);
    assert_eq!(hash_region_rows(3), 1 + 132);
    let s = SegmentShape::new(&[TransformSpec::Blur], (10, 10), CommitModes::BOTH).unwrap();
    let e = s.estimate(&s.baseline_ks(), &CostConfig::default());
    // 300 bytes pack into 10 elements, so each hash takes 5 permutations.
    assert_eq!(e.hash_rows, 2 * (1 + 5 * 66));
}

proptest! {
    #[test]
    fn padded_rows_is_the_least_sufficient_power_of_two(used in 0u64..5_000_000, table in 0u64..300_000) {
        let n = padded_rows(used, table) as u64;
        prop_assert!(n.is_power_of_two());
        prop_assert!(n >= used.max(table).max(1));
        prop_assert!(n == 1 || n / 2 < used.max(table).max(1));
    }

    #[test]
    fn optimizer_never_worse_than_baseline(seed: u64, w in 1u32..80, h in 1u32..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let name = ["rgb2ycbcr", "ycbcr2rgb", "whitebalance", "contrast", "sharpen", "blur"][rng.gen_range(0..6)];
        let t = random_transform(&mut rng, name, (w, h));
        let cfg = CostConfig::default();
        let s = SegmentShape::new(std::slice::from_ref(&t), (w, h), CommitModes::BOTH).unwrap();
        let (ks, opt) = s.optimize(&cfg);
        prop_assert_eq!(&opt, &s.estimate(&ks, &cfg));
        prop_assert!(opt.estimated_cells <= s.estimate(&s.baseline_ks(), &cfg).estimated_cells);
        prop_assert!(opt.padded_rows.is_power_of_two());
    }
}
