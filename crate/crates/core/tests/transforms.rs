mod common;

use std::collections::HashSet;

use common::{random_image, random_transform, reference, synthesize_alone};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zkimg::ir::{CellRef, ColumnKind, Expression};
use zkimg::{check_constraints, CircuitLayout, Image, TransformSpec};

#[test]
fn native_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in TransformSpec::NAMES {
        for _ in 0..40 {
            let (w, h) = (rng.gen_range(1..14), rng.gen_range(1..14));
            let img = random_image(&mut rng, w, h);
            let t = random_transform(&mut rng, name, (w, h));
            assert_eq!(t.apply_native(&img).unwrap(), reference(&t, &img), "{t} on {w}x{h}");
        }
    }
}

#[test]
fn circuit_matches_native() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in TransformSpec::NAMES {
        for _ in 0..4 {
            let (w, h) = (rng.gen_range(1..12), rng.gen_range(1..10));
            let img = random_image(&mut rng, w, h);
            let t = random_transform(&mut rng, name, (w, h));
            let k = rng.gen_range(1..5);
            let (s, _, out) = synthesize_alone(&t, &img, k);
            assert_eq!(out, t.apply_native(&img).unwrap().data(), "{t} k={k}");
            let r = check_constraints(&s.layout, &s.witness, &s.instance).unwrap();
            assert!(r.satisfied, "{t}: {:?}", r.violations.first());
        }
    }
}

/// Cells the layout forces into `[0, 255]`: fixed cells holding a byte,
/// direct lookup inputs whose table column only holds bytes, and anything
/// copy-equal to either.
fn byte_constrained(layout: &CircuitLayout) -> HashSet<CellRef> {
    let mut ok = HashSet::new();
    for l in layout.lookups() {
        for (input, col) in l.inputs.iter().zip(&l.table) {
            let Expression::Query(q) = input else { continue };
            let bytes = (0..l.table_len).all(|row| {
                layout.fixed_value(CellRef { row, column: col.index }).to_u64().is_some_and(|v| v < 256)
            });
            if bytes {
                ok.extend(layout.enabled_rows(l.selector).map(|row| CellRef { row, column: q.column }));
            }
        }
    }
    for class in layout.copies().classes() {
        let fixed_byte = class.iter().any(|c| {
            layout.columns()[c.column as usize].kind == ColumnKind::Fixed
                && layout.fixed_value(*c).to_u64().is_some_and(|v| v < 256)
        });
        if fixed_byte || class.iter().any(|c| ok.contains(c)) {
            ok.extend(class.iter().copied());
        }
    }
    ok
}

#[test]
fn arithmetic_outputs_are_range_constrained() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for name in ["rgb2ycbcr", "ycbcr2rgb", "whitebalance", "contrast", "sharpen", "blur"] {
        let img = random_image(&mut rng, 7, 5);
        let t = random_transform(&mut rng, name, (7, 5));
        let (s, grid, _) = synthesize_alone(&t, &img, 2);
        let ok = byte_constrained(&s.layout);
        for c in &grid.cells {
            assert!(ok.contains(c), "{t}: output cell {c:?} is not range constrained");
        }
    }
}

#[test]
fn copy_transforms_add_no_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for name in TransformSpec::NAMES {
        let t = random_transform(&mut rng, name, (9, 6));
        if !t.is_pure_copy() {
            continue;
        }
        let (s, _, _) = synthesize_alone(&t, &random_image(&mut rng, 9, 6), 1);
        let st = s.layout.stats();
        assert_eq!((st.gates, st.lookups, st.copy_classes), (0, 0, 0), "{t}");
    }
}

#[test]
fn transform_text_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for name in TransformSpec::NAMES {
        for _ in 0..10 {
            let t = random_transform(&mut rng, name, (20, 20));
            let back: TransformSpec = t.to_string().parse().unwrap();
            assert_eq!(back, t);
        }
    }
}

proptest! {
    #[test]
    fn colorspace_round_trip_within_two(r: u8, g: u8, b: u8) {
        let img = Image::new(1, 1, vec![r, g, b]).unwrap();
        let y = TransformSpec::Rgb2YCbCr.apply_native(&img).unwrap();
        let back = TransformSpec::YCbCr2Rgb.apply_native(&y).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            prop_assert!(a.abs_diff(*b) <= 2);
        }
    }

    #[test]
    fn oval_lies_inside_its_rectangle(x in 0u32..6, y in 0u32..6, w in 1u32..10, h in 1u32..10, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = random_image(&mut rng, 16, 16);
        let censor = |oval| {
            let r = format!("censor {} x={x} y={y} w={w} h={h}", if oval { "oval" } else { "rect" });
            r.parse::<TransformSpec>().unwrap().apply_native(&img).unwrap()
        };
        let (oval, rect) = (censor(true), censor(false));
        for ((o, r), i) in oval.data().iter().zip(rect.data()).zip(img.data()) {
            // Every sub-pixel the oval blanks, the rectangle blanks too.
            prop_assert!(o == i || *r == 0);
            prop_assert!(*r == 0 || r == i);
        }
    }

    #[test]
    fn rotations_compose(seed: u64, w in 1u32..9, h in 1u32..9) {
        let img = random_image(&mut ChaCha8Rng::seed_from_u64(seed), w, h);
        let r90 = TransformSpec::Rotate { degrees: 90 };
        let twice = r90.apply_native(&r90.apply_native(&img).unwrap()).unwrap();
        prop_assert_eq!(twice, TransformSpec::Rotate { degrees: 180 }.apply_native(&img).unwrap());
    }
}
