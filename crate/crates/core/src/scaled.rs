//! Integer views of rational vectors for the exhaustive searches.
//!
//! Searches run over `i128` when every scaled value is small enough that
//! sums and pairwise products cannot overflow, and over `BigInt` otherwise.

use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::BigInt;
use num_traits::{Num, ToPrimitive};

use crate::rational::{common_denominator, Rational};

pub(crate) trait ExactInt: Clone + Ord + Hash + Debug + Num {
    fn from_big(value: &BigInt) -> Self;
    fn to_big(&self) -> BigInt;
}

impl ExactInt for i128 {
    fn from_big(value: &BigInt) -> Self {
        value.to_i128().expect("checked by fits_i128")
    }

    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl ExactInt for BigInt {
    fn from_big(value: &BigInt) -> Self {
        value.clone()
    }

    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

/// Values multiplied by the lcm of their denominators.
pub(crate) struct Scaled {
    pub values: Vec<BigInt>,
    pub denom: BigInt,
}

impl Scaled {
    pub fn new(values: &[Rational]) -> Self {
        let denom = common_denominator(values);
        let values = values.iter().map(|v| v.numer() * (&denom / v.denom())).collect();
        Scaled { values, denom }
    }

    pub fn total(&self) -> BigInt {
        self.values.iter().sum()
    }

    pub fn convert<T: ExactInt>(&self) -> Vec<T> {
        self.values.iter().map(T::from_big).collect()
    }
}

/// True when the given magnitudes stay below 2^60, so any pairwise product
/// of partial sums fits in an `i128`.
pub(crate) fn fits_i128<'a>(magnitudes: impl IntoIterator<Item = &'a BigInt>) -> bool {
    fits_bits(magnitudes, 60)
}

pub(crate) fn fits_bits<'a>(magnitudes: impl IntoIterator<Item = &'a BigInt>, bits: u64) -> bool {
    magnitudes.into_iter().all(|v| v.bits() <= bits)
}
