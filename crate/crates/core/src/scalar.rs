use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the numerical modules are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for literals and sampled randomness.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Wraps an angle into `[-π, π]`.
pub fn wrap_pi<T: Real>(x: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut y = x % two_pi;
    if y > T::PI() {
        y -= two_pi;
    } else if y < -T::PI() {
        y += two_pi;
    }
    y
}

/// `10 log10(x)`.
pub fn db<T: Real>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

pub fn from_db<T: Real>(x: T) -> T {
    T::lit(10.0).powf(x / T::lit(10.0))
}

/// SplitMix64 finaliser; derives independent seed streams from a base seed.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_pi_range() {
        for k in -20..20 {
            let x = k as f64 * 0.7;
            let y = wrap_pi(x);
            assert!((-std::f64::consts::PI..=std::f64::consts::PI).contains(&y));
            assert!(((x - y) / (2.0 * std::f64::consts::PI)).fract().abs() < 1e-9
                || (1.0 - ((x - y) / (2.0 * std::f64::consts::PI)).fract().abs()) < 1e-9);
        }
    }

    #[test]
    fn mix_seed_separates_streams() {
        let a = mix_seed(7, 0);
        let b = mix_seed(7, 1);
        let c = mix_seed(8, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, mix_seed(7, 0));
    }
}
