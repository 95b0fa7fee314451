//! Entropy bookkeeping in thousandths of a bit.

use core::fmt;

use alloc::vec::Vec;

/// log2(10) in micro-bits, for digit-based factors.
const LOG2_10_MICROBITS: u64 = 3_321_928;

/// A rational entropy estimate stored as millibits (1/1000 bit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Entropy(u64);

impl Entropy {
    pub const fn from_millibits(millibits: u64) -> Self {
        Entropy(millibits)
    }

    pub const fn from_bits(bits: u64) -> Self {
        Entropy(bits * 1000)
    }

    /// log2(10^digits), rounded down to the millibit.
    pub const fn decimal_digits(digits: u8) -> Self {
        Entropy(digits as u64 * LOG2_10_MICROBITS / 1000)
    }

    pub const fn millibits(self) -> u64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl core::ops::Add for Entropy {
    type Output = Entropy;
    fn add(self, rhs: Entropy) -> Entropy {
        Entropy(self.0 + rhs.0)
    }
}

impl core::iter::Sum for Entropy {
    fn sum<I: Iterator<Item = Entropy>>(iter: I) -> Entropy {
        iter.fold(Entropy(0), |a, b| a + b)
    }
}

impl fmt::Display for Entropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03} bits", self.0 / 1000, self.0 % 1000)
    }
}

pub const PASSWORD_DEFAULT: Entropy = Entropy::from_bits(40);
pub const RECOVERY_CODE: Entropy = Entropy::from_bits(122);
pub const HMAC_TOKEN: Entropy = Entropy::from_bits(160);

/// Weakest t-subset: since every subset of size t sums t member entropies, the
/// minimum is the sum of the t smallest.
pub fn weakest_subset(entropies: &[Entropy], t: usize) -> Entropy {
    let mut sorted: Vec<Entropy> = entropies.to_vec();
    sorted.sort_unstable();
    sorted.into_iter().take(t).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(entropies: &[Entropy], t: usize) -> Entropy {
        let n = entropies.len();
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == t)
            .map(|m| {
                (0..n)
                    .filter(|i| m & (1 << i) != 0)
                    .map(|i| entropies[i])
                    .sum::<Entropy>()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn default_policy_is_162_bits() {
        let e = [PASSWORD_DEFAULT, RECOVERY_CODE, HMAC_TOKEN];
        assert_eq!(weakest_subset(&e, 2), Entropy::from_bits(162));
    }

    #[test]
    fn six_digit_codes() {
        let otp = Entropy::decimal_digits(6);
        assert_eq!(otp.millibits(), 19_931);
        let e = [otp, otp, PASSWORD_DEFAULT];
        assert!((weakest_subset(&e, 2).bits() - 39.863).abs() < 0.01);
    }

    proptest::proptest! {
        #[test]
        fn matches_subset_enumeration(raw in proptest::collection::vec(0u64..200_000, 1..=8), t_seed: usize) {
            let e: Vec<Entropy> = raw.into_iter().map(Entropy::from_millibits).collect();
            let t = 1 + t_seed % e.len();
            proptest::prop_assert_eq!(weakest_subset(&e, t), brute_force(&e, t));
        }
    }
}
