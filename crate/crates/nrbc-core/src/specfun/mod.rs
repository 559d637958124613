//! Modified Bessel functions and the complex zeros of `K_n`, `K_{n+1/2}`.

pub mod complex;
pub mod real;
pub mod zeros;

pub use complex::{bessel_k_complex, bessel_k_half, bessel_k_scaled, ScaledK};
pub use real::{bessel_ik_log, log_bessel_i, log_bessel_k, LogIK};
pub use zeros::{find_zeros, zero_count, zero_sets, ZeroSet, DEFAULT_ZERO_TOL};

use std::fmt;

/// `a = sqrt(t0^2 - 1)` where `t0` is the positive root of `coth t = t`.
/// The zeros of `K_nu` accumulate on a curve meeting the negative real axis
/// near `-a nu`, and `W_n` peaks near `r = a n`.
pub const EYE_A: f64 = 0.662_743_419_349_181_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderKind {
    /// `nu = n`
    Integer,
    /// `nu = n + 1/2`
    HalfInteger,
}

/// Order `nu = n` or `nu = n + 1/2` of a modified Bessel function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BesselOrder {
    pub kind: OrderKind,
    pub n: usize,
}

impl BesselOrder {
    pub const fn integer(n: usize) -> Self {
        BesselOrder { kind: OrderKind::Integer, n }
    }

    pub const fn half(n: usize) -> Self {
        BesselOrder { kind: OrderKind::HalfInteger, n }
    }

    /// Order associated with mode `n` in dimension `d` (2 or 3).
    pub const fn for_dimension(d: u8, n: usize) -> Self {
        if d == 3 {
            Self::half(n)
        } else {
            Self::integer(n)
        }
    }

    pub fn is_half(&self) -> bool {
        self.kind == OrderKind::HalfInteger
    }

    pub fn nu(&self) -> f64 {
        match self.kind {
            OrderKind::Integer => self.n as f64,
            OrderKind::HalfInteger => self.n as f64 + 0.5,
        }
    }

    /// Label used in CSV output.
    pub fn kind_label(&self) -> &'static str {
        match self.kind {
            OrderKind::Integer => "integer",
            OrderKind::HalfInteger => "half",
        }
    }
}

impl fmt::Display for BesselOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OrderKind::Integer => write!(f, "K_{}", self.n),
            OrderKind::HalfInteger => write!(f, "K_{{{}/2}}", 2 * self.n + 1),
        }
    }
}
