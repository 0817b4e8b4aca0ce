//! Big-integer Poseidon written from the parameter definitions alone: its own
//! Grain stream, Cauchy MDS and round schedule.

use num_bigint::BigUint;
use rand::Rng;
use zkimg::Fe;

pub const P: &str = "21888242871839275222246405745257275088548364400416034343698204186575808495617";

pub struct Reference {
    pub p: BigUint,
    rc: Vec<BigUint>,
    mds: Vec<Vec<BigUint>>,
}

fn bits_of(v: u64, n: usize) -> impl Iterator<Item = u8> {
    (0..n).rev().map(move |i| ((v >> i) & 1) as u8)
}

impl Reference {
    pub fn new() -> Reference {
        let p: BigUint = P.parse().unwrap();
        // field=1 (2 bits), sbox=0 (4), n=254 (12), t=3 (12), R_F=8 (10), R_P=57 (10), ones (30)
        let mut reg: Vec<u8> = bits_of(1, 2)
            .chain(bits_of(0, 4))
            .chain(bits_of(254, 12))
            .chain(bits_of(3, 12))
            .chain(bits_of(8, 10))
            .chain(bits_of(57, 10))
            .chain(bits_of(u64::MAX, 30))
            .collect();
        assert_eq!(reg.len(), 80);
        let mut step = move || {
            let nb = reg[62] ^ reg[51] ^ reg[38] ^ reg[23] ^ reg[13] ^ reg[0];
            reg.remove(0);
            reg.push(nb);
            nb
        };
        for _ in 0..160 {
            step();
        }
        let mut filtered = move || loop {
            let a = step();
            let b = step();
            if a == 1 {
                return b;
            }
        };
        let mut integer = || {
            let mut s = String::with_capacity(254);
            for _ in 0..254 {
                s.push(if filtered() == 1 { '1' } else { '0' });
            }
            BigUint::parse_bytes(s.as_bytes(), 2).unwrap()
        };
        let mut rc = Vec::new();
        while rc.len() < 65 * 3 {
            let v = integer();
            if v < p {
                rc.push(v);
            }
        }
        let xs: Vec<BigUint> = (0..6).map(|_| integer() % &p).collect();
        let two = BigUint::from(2u32);
        let mds = (0..3)
            .map(|i| (0..3).map(|j| ((&xs[i] + &xs[3 + j]) % &p).modpow(&(&p - &two), &p)).collect())
            .collect();
        Reference { p, rc, mds }
    }

    pub fn permute(&self, mut s: Vec<BigUint>) -> Vec<BigUint> {
        let five = BigUint::from(5u32);
        for r in 0..65 {
            for (i, x) in s.iter_mut().enumerate() {
                *x = (&*x + &self.rc[3 * r + i]) % &self.p;
            }
            let full = !(4..61).contains(&r);
            for (i, x) in s.iter_mut().enumerate() {
                if full || i == 0 {
                    *x = x.modpow(&five, &self.p);
                }
            }
            s = (0..3)
                .map(|i| (0..3).map(|j| &self.mds[i][j] * &s[j]).sum::<BigUint>() % &self.p)
                .collect();
        }
        s
    }

    pub fn hash(&self, xs: &[BigUint]) -> BigUint {
        let mut s = vec![BigUint::from(xs.len()), BigUint::from(0u32), BigUint::from(0u32)];
        for pair in xs.chunks(2) {
            s[1] = (&s[1] + &pair[0]) % &self.p;
            if let Some(b) = pair.get(1) {
                s[2] = (&s[2] + b) % &self.p;
            }
            s = self.permute(s);
        }
        s.swap_remove(0)
    }
}

pub fn to_big(x: Fe) -> BigUint {
    BigUint::from_bytes_le(&x.to_bytes())
}

/// A uniformly random element together with its integer value.
pub fn random_fe(rng: &mut impl Rng, p: &BigUint) -> (Fe, BigUint) {
    let bytes: [u8; 32] = rng.gen();
    let b = BigUint::from_bytes_le(&bytes) % p;
    let mut le = b.to_bytes_le();
    le.resize(32, 0);
    (Fe::from_bytes(&le.try_into().unwrap()).unwrap(), b)
}
