//! Input/output alphabets and the binary erasure channel kernel.

use std::fmt;

/// Channel output symbol. `Erasure` is printed as `?`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Output {
    Zero,
    Erasure,
    One,
}

impl Output {
    pub const ALL: [Output; 3] = [Output::Zero, Output::Erasure, Output::One];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Output::Zero => 0,
            Output::Erasure => 1,
            Output::One => 2,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Output::Zero => '0',
            Output::Erasure => '?',
            Output::One => '1',
        }
    }

    pub fn from_symbol(c: char) -> Option<Output> {
        match c {
            '0' => Some(Output::Zero),
            '?' => Some(Output::Erasure),
            '1' => Some(Output::One),
            _ => None,
        }
    }

    /// The unerased output produced by input bit `x`.
    #[inline]
    pub fn of_input(x: u8) -> Output {
        if x == 0 {
            Output::Zero
        } else {
            Output::One
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// BEC(eps) transition probability `P(y | x)`.
#[inline]
pub fn bec_prob(eps: f64, x: u8, y: Output) -> f64 {
    match y {
        Output::Erasure => eps,
        y if y == Output::of_input(x) => 1.0 - eps,
        _ => 0.0,
    }
}
