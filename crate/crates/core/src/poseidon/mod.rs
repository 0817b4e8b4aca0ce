//! Poseidon over the scalar field with width 3, rate 2, x^5 s-box, 8 full and
//! 57 partial rounds. Constants come from the Grain LFSR generator.

mod gadget;
mod grain;

use once_cell::sync::Lazy;

use crate::error::GadgetError;
use crate::field::Fe;
use crate::gadgets::{pack_value, PACK_BYTES};
use crate::image::Image;

pub use gadget::{hash_gadget, hash_region_rows, HASH_GATES};

pub const WIDTH: usize = 3;
pub const RATE: usize = 2;
pub const FULL_ROUNDS: usize = 8;
pub const PARTIAL_ROUNDS: usize = 57;
pub const ROUNDS: usize = FULL_ROUNDS + PARTIAL_ROUNDS;

pub struct PoseidonParams {
    /// `ROUNDS * WIDTH` constants, round-major.
    pub round_constants: Vec<Fe>,
    pub mds: [[Fe; WIDTH]; WIDTH],
}

impl PoseidonParams {
    pub fn get() -> &'static PoseidonParams {
        static PARAMS: Lazy<PoseidonParams> = Lazy::new(grain::generate);
        &PARAMS
    }

    pub fn is_full_round(round: usize) -> bool {
        round < FULL_ROUNDS / 2 || round >= FULL_ROUNDS / 2 + PARTIAL_ROUNDS
    }

    pub fn round_constants(&self, round: usize) -> &[Fe] {
        &self.round_constants[round * WIDTH..(round + 1) * WIDTH]
    }
}

#[inline]
fn sbox(x: Fe) -> Fe {
    let x2 = x.square();
    x2.square() * x
}

/// One round: add constants, s-box, MDS mix.
pub fn round(state: &mut [Fe; WIDTH], r: usize) {
    let p = PoseidonParams::get();
    let rc = p.round_constants(r);
    let mut s = [Fe::ZERO; WIDTH];
    for i in 0..WIDTH {
        s[i] = state[i] + rc[i];
    }
    if PoseidonParams::is_full_round(r) {
        for x in &mut s {
            *x = sbox(*x);
        }
    } else {
        s[0] = sbox(s[0]);
    }
    for (i, out) in state.iter_mut().enumerate() {
        *out = (0..WIDTH).map(|j| p.mds[i][j] * s[j]).sum();
    }
}

pub fn permute(mut state: [Fe; WIDTH]) -> [Fe; WIDTH] {
    for r in 0..ROUNDS {
        round(&mut state, r);
    }
    state
}

/// Sponge hash: the capacity lane (lane 0) starts at the input length, inputs
/// are zero-padded to an even count and added into lanes 1 and 2, and the
/// digest is lane 0 after the last permutation.
pub fn hash_elements(inputs: &[Fe]) -> Result<Fe, GadgetError> {
    if inputs.is_empty() {
        return Err(GadgetError::EmptyInput);
    }
    let mut state = [Fe::from_u64(inputs.len() as u64), Fe::ZERO, Fe::ZERO];
    for chunk in inputs.chunks(RATE) {
        state[1] += chunk[0];
        state[2] += chunk.get(1).copied().unwrap_or(Fe::ZERO);
        state = permute(state);
    }
    Ok(state[0])
}

/// Sub-pixels packed 31 to an element, little-endian, in raster order.
pub fn pack_image(img: &Image) -> Vec<Fe> {
    img.data().chunks(PACK_BYTES).map(pack_value).collect()
}

pub fn hash_image(img: &Image) -> Fe {
    hash_elements(&pack_image(img)).expect("images are never empty")
}

/// Number of permutations used to hash `n` elements.
pub fn permutations(n: usize) -> usize {
    n.div_ceil(RATE)
}
