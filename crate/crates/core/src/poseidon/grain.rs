use std::collections::VecDeque;

use super::{PoseidonParams, FULL_ROUNDS, PARTIAL_ROUNDS, WIDTH};
use crate::field::Fe;

const FIELD_BITS: u32 = 254;

struct Grain {
    state: VecDeque<bool>,
}

impl Grain {
    fn new() -> Grain {
        let mut bits = Vec::with_capacity(80);
        let mut push = |v: u64, w: u32| {
            for i in (0..w).rev() {
                bits.push((v >> i) & 1 == 1);
            }
        };
        push(1, 2); // prime field
        push(0, 4); // x^alpha s-box
        push(FIELD_BITS as u64, 12);
        push(WIDTH as u64, 12);
        push(FULL_ROUNDS as u64, 10);
        push(PARTIAL_ROUNDS as u64, 10);
        push((1 << 30) - 1, 30);
        let mut g = Grain { state: bits.into() };
        for _ in 0..160 {
            g.clock();
        }
        g
    }

    fn clock(&mut self) -> bool {
        let s = &self.state;
        let b = s[62] ^ s[51] ^ s[38] ^ s[23] ^ s[13] ^ s[0];
        self.state.pop_front();
        self.state.push_back(b);
        b
    }

    fn bit(&mut self) -> bool {
        loop {
            let keep = self.clock();
            let b = self.clock();
            if keep {
                return b;
            }
        }
    }

    /// Next `FIELD_BITS`-bit integer, most significant bit first.
    fn limbs(&mut self) -> [u64; 4] {
        let mut limbs = [0u64; 4];
        for i in (0..FIELD_BITS).rev() {
            if self.bit() {
                limbs[(i / 64) as usize] |= 1 << (i % 64);
            }
        }
        limbs
    }

    fn field_rejecting(&mut self) -> Fe {
        loop {
            if let Some(x) = Fe::from_canonical_limbs(self.limbs()) {
                return x;
            }
        }
    }
}

pub(super) fn generate() -> PoseidonParams {
    let mut g = Grain::new();
    let round_constants = (0..(FULL_ROUNDS + PARTIAL_ROUNDS) * WIDTH).map(|_| g.field_rejecting()).collect();
    let xy: Vec<Fe> = (0..2 * WIDTH).map(|_| Fe::from_limbs_reduced(g.limbs())).collect();
    let mut mds = [[Fe::ZERO; WIDTH]; WIDTH];
    for (i, row) in mds.iter_mut().enumerate() {
        for (j, m) in row.iter_mut().enumerate() {
            *m = (xy[i] + xy[WIDTH + j]).invert().expect("Cauchy matrix entries are distinct");
        }
    }
    PoseidonParams { round_constants, mds }
}
