//! Enumerative coding over balanced (constant-composition) sequences.
//!
//! A frame of `n` symbols from an alphabet of size `m` in which every symbol
//! appears exactly `n/m` times has an exact empirical mean, so the
//! superposition constraint holds per frame rather than on average. The
//! codec maps bit strings to such frames by ranking them in lexicographic
//! order (symbol `0 < 1 < … < m−1`). Counts use exact big integers.

use num_bigint::BigUint;
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{invalid, Result};
use crate::scalar::Real;

fn check_shape(n: usize, m: usize) -> Result<usize> {
    if m == 0 || n == 0 || !n.is_multiple_of(m) {
        return invalid(format!("alphabet size {m} must divide frame length {n}"));
    }
    Ok(n / m)
}

fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Number of sequences with the given symbol counts.
fn multinomial(counts: &[usize]) -> BigUint {
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .fold(factorial(total), |acc, &c| acc / factorial(c))
}

/// `n! / ((n/m)!)^m`.
pub fn type_class_size(n: usize, m: usize) -> Result<BigUint> {
    let k = check_shape(n, m)?;
    Ok(multinomial(&vec![k; m]))
}

/// `⌊log₂ |T|⌋`, read off the exact integer.
pub fn capacity_bits(n: usize, m: usize) -> Result<usize> {
    let size = type_class_size(n, m)?;
    Ok(size.bits() as usize - 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeClassCodec {
    n: usize,
    m: usize,
    class_size: BigUint,
    capacity_bits: usize,
}

impl TypeClassCodec {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        let class_size = type_class_size(n, m)?;
        let capacity_bits = class_size.bits() as usize - 1;
        Ok(Self {
            n,
            m,
            class_size,
            capacity_bits,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn class_size(&self) -> &BigUint {
        &self.class_size
    }

    pub fn capacity_bits(&self) -> usize {
        self.capacity_bits
    }

    /// The `index`-th balanced sequence in lexicographic order.
    pub fn unrank(&self, index: &BigUint) -> Result<Vec<usize>> {
        if index >= &self.class_size {
            return invalid(format!("index {index} out of range for class size {}", self.class_size));
        }
        let mut counts = vec![self.n / self.m; self.m];
        let mut remaining = self.class_size.clone();
        let mut left = self.n;
        let mut idx = index.clone();
        let mut seq = Vec::with_capacity(self.n);
        while left > 0 {
            for s in 0..self.m {
                if counts[s] == 0 {
                    continue;
                }
                // completions after placing s: remaining · counts[s] / left
                let with_s = &remaining * BigUint::from(counts[s]) / BigUint::from(left);
                if idx < with_s {
                    seq.push(s);
                    counts[s] -= 1;
                    remaining = with_s;
                    break;
                }
                idx -= &with_s;
            }
            left -= 1;
        }
        Ok(seq)
    }

    /// Inverse of [`unrank`](Self::unrank).
    pub fn rank(&self, seq: &[usize]) -> Result<BigUint> {
        self.check_composition(seq)?;
        let mut counts = vec![self.n / self.m; self.m];
        let mut remaining = self.class_size.clone();
        let mut left = self.n;
        let mut idx = BigUint::zero();
        for &sym in seq {
            for s in 0..sym {
                if counts[s] > 0 {
                    idx += &remaining * BigUint::from(counts[s]) / BigUint::from(left);
                }
            }
            remaining = &remaining * BigUint::from(counts[sym]) / BigUint::from(left);
            counts[sym] -= 1;
            left -= 1;
        }
        Ok(idx)
    }

    pub fn check_composition(&self, seq: &[usize]) -> Result<()> {
        if seq.len() != self.n {
            return invalid(format!("sequence has length {}, expected {}", seq.len(), self.n));
        }
        let mut counts = vec![0usize; self.m];
        for &s in seq {
            if s >= self.m {
                return invalid(format!("symbol {s} outside alphabet of size {}", self.m));
            }
            counts[s] += 1;
        }
        if counts.iter().any(|&c| c != self.n / self.m) {
            return invalid(format!("sequence is not balanced: counts {counts:?}"));
        }
        Ok(())
    }

    /// Most significant bit first; the length must equal the capacity.
    pub fn encode_bits(&self, bits: &[bool]) -> Result<Vec<usize>> {
        if bits.len() != self.capacity_bits {
            return invalid(format!("expected {} bits, got {}", self.capacity_bits, bits.len()));
        }
        let index = bits
            .iter()
            .fold(BigUint::zero(), |acc, &b| (acc << 1u32) + BigUint::from(b as u8));
        self.unrank(&index)
    }

    pub fn decode_bits(&self, seq: &[usize]) -> Result<Vec<bool>> {
        let index = self.rank(seq)?;
        if index.bits() as usize > self.capacity_bits {
            return invalid("sequence lies outside the encodable prefix of the class");
        }
        Ok((0..self.capacity_bits)
            .rev()
            .map(|i| index.bit(i as u64))
            .collect())
    }
}

/// Free-function form of [`TypeClassCodec::unrank`].
pub fn unrank(index: &BigUint, n: usize, m: usize) -> Result<Vec<usize>> {
    TypeClassCodec::new(n, m)?.unrank(index)
}

/// Rank of a balanced sequence over `m` symbols.
pub fn rank(seq: &[usize], m: usize) -> Result<BigUint> {
    TypeClassCodec::new(seq.len(), m)?.rank(seq)
}

/// `S = (1/M) Σ c_i`.
pub fn target_mean<T: Real>(symbols: &[Complex<T>]) -> Complex<T> {
    let w = T::one() / T::from_usize_lossy(symbols.len());
    symbols.iter().map(|&c| c * w).sum()
}

/// Empirical mean of a sequence, accumulated per symbol so a balanced
/// sequence reproduces [`target_mean`] bit for bit.
pub fn empirical_mean<T: Real>(seq: &[usize], symbols: &[Complex<T>]) -> Complex<T> {
    let mut counts = vec![0usize; symbols.len()];
    for &s in seq {
        counts[s] += 1;
    }
    let n = T::from_usize_lossy(seq.len());
    symbols
        .iter()
        .zip(&counts)
        .map(|(&c, &k)| c * (T::from_usize_lossy(k) / n))
        .sum()
}

/// Bits as upper-case hexadecimal, MSB first, left-padded to whole nibbles.
pub fn bits_to_hex(bits: &[bool]) -> String {
    let pad = (4 - bits.len() % 4) % 4;
    let padded: Vec<bool> = std::iter::repeat_n(false, pad).chain(bits.iter().copied()).collect();
    padded
        .chunks(4)
        .map(|c| {
            let v = c.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
            char::from_digit(v, 16).expect("nibble").to_ascii_uppercase()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn class_sizes() {
        assert_eq!(type_class_size(16, 2).unwrap(), big(12870));
        assert_eq!(type_class_size(2, 2).unwrap(), big(2));
        assert_eq!(type_class_size(16, 4).unwrap(), big(63_063_000));
        assert!(type_class_size(15, 2).is_err());
        assert!(type_class_size(4, 0).is_err());
    }

    #[test]
    fn capacities() {
        assert_eq!(capacity_bits(16, 2).unwrap(), 13);
        assert_eq!(capacity_bits(32, 2).unwrap(), 29);
        assert_eq!(capacity_bits(16, 4).unwrap(), 25);
        assert_eq!(16 - capacity_bits(16, 2).unwrap(), 3);
    }

    #[test]
    fn capacity_below_raw_rate() {
        for (n, m) in [(4, 2), (6, 3), (8, 2), (8, 4), (12, 3), (16, 2), (16, 4), (32, 2), (64, 4)] {
            let raw = n as f64 * (m as f64).log2();
            assert!((capacity_bits(n, m).unwrap() as f64) < raw, "({n},{m})");
        }
    }

    #[test]
    fn small_class_order() {
        let c = TypeClassCodec::new(4, 2).unwrap();
        let all: Vec<Vec<usize>> = (0..6).map(|i| c.unrank(&big(i)).unwrap()).collect();
        assert_eq!(all[0], vec![0, 0, 1, 1]);
        assert_eq!(all[5], vec![1, 1, 0, 0]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert!(c.unrank(&big(6)).is_err());
        assert_eq!(rank(&[0, 0, 1, 1], 2).unwrap(), big(0));
        assert!(rank(&[0, 0, 0, 1], 2).is_err());
        assert_eq!(unrank(&big(5), 4, 2).unwrap(), vec![1, 1, 0, 0]);
    }

    #[test]
    fn exhaustive_roundtrip_16_2() {
        let c = TypeClassCodec::new(16, 2).unwrap();
        let mut prev: Option<Vec<usize>> = None;
        for i in 0..12870u64 {
            let s = c.unrank(&big(i)).unwrap();
            c.check_composition(&s).unwrap();
            assert_eq!(c.rank(&s).unwrap(), big(i));
            if let Some(p) = &prev {
                assert!(p < &s);
            }
            prev = Some(s);
        }
    }

    #[test]
    fn bits_roundtrip() {
        let c = TypeClassCodec::new(16, 2).unwrap();
        assert_eq!(c.encode_bits(&[false; 13]).unwrap(), c.unrank(&big(0)).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let bits: Vec<bool> = (0..13).map(|_| rng.random()).collect();
            let seq = c.encode_bits(&bits).unwrap();
            assert_eq!(c.decode_bits(&seq).unwrap(), bits);
        }
        assert!(c.encode_bits(&[true; 12]).is_err());
        // rank 2^13 is balanced but beyond the encodable prefix
        let outside = c.unrank(&big(1 << 13)).unwrap();
        assert!(c.decode_bits(&outside).is_err());
    }

    #[test]
    fn hex_payload() {
        assert_eq!(bits_to_hex(&[true, false, true, false, true]), "15");
        assert_eq!(bits_to_hex(&[true; 13]), "1FFF");
        assert_eq!(bits_to_hex(&[]), "");
    }

    #[test]
    fn empirical_mean_is_exact_for_codewords() {
        let theta0 = 2.0 * std::f64::consts::PI / 3.0;
        let syms = [Complex::from_polar(1.0, theta0), Complex::from_polar(1.0, -theta0)];
        let s = target_mean(&syms);
        let c = TypeClassCodec::new(16, 2).unwrap();
        for i in 0..12870u64 {
            assert_eq!(empirical_mean(&c.unrank(&big(i)).unwrap(), &syms), s);
        }
        let quad: Vec<Complex<f64>> = (0..4)
            .map(|k| Complex::from_polar(1.0, 0.3 + k as f64 * 1.1))
            .collect();
        let c4 = TypeClassCodec::new(16, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let i = rng.random_range(0..63_063_000u64);
            assert_eq!(empirical_mean(&c4.unrank(&big(i)).unwrap(), &quad), target_mean(&quad));
        }
    }

    proptest! {
        #[test]
        fn roundtrip_sampled_large(idx in 0u64..u64::MAX, m in prop::sample::select(vec![2usize, 4])) {
            let c = TypeClassCodec::new(32, m).unwrap();
            let i = BigUint::from(idx) % c.class_size();
            let s = c.unrank(&i).unwrap();
            prop_assert!(c.check_composition(&s).is_ok());
            prop_assert_eq!(c.rank(&s).unwrap(), i);
        }

        #[test]
        fn rank_order_matches_lex_order(a in 0u64..12870, b in 0u64..12870) {
            let c = TypeClassCodec::new(16, 2).unwrap();
            let (sa, sb) = (c.unrank(&big(a)).unwrap(), c.unrank(&big(b)).unwrap());
            prop_assert_eq!(a.cmp(&b), sa.cmp(&sb));
        }

        #[test]
        fn unrank_inverts_rank_on_shuffles(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s: Vec<usize> = (0..12).map(|t| t % 3).collect();
            for i in (1..s.len()).rev() {
                s.swap(i, rng.random_range(0..=i));
            }
            let c = TypeClassCodec::new(12, 3).unwrap();
            prop_assert_eq!(c.unrank(&c.rank(&s).unwrap()).unwrap(), s);
        }
    }
}
