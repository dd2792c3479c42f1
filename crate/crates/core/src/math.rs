//! Scalar helpers shared by every module.
//!
//! All transcendental functions go through `libm` so that results do not
//! depend on whether the crate is built with `std`.

use alloc::vec::Vec;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in iter {
        acc.add(x);
    }
    acc.value()
}

/// `k`-th smallest value (0-based), ordering by `total_cmp`.
pub fn order_statistic(values: &[f64], k: usize) -> f64 {
    let mut buf: Vec<f64> = values.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(k, f64::total_cmp);
    *v
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    let n = values.len();
    let mut buf: Vec<f64> = values.to_vec();
    let upper = {
        let (_, v, _) = buf.select_nth_unstable_by(n / 2, f64::total_cmp);
        *v
    };
    if n % 2 == 1 {
        upper
    } else {
        let lower = buf[..n / 2]
            .iter()
            .copied()
            .max_by(f64::total_cmp)
            .unwrap_or(upper);
        0.5 * (lower + upper)
    }
}

/// `⌈p·n⌉`, treating products within rounding noise of an integer as exact.
pub fn ceil_fraction(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    let r = libm::round(x);
    let k = if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        libm::ceil(x)
    };
    (k as usize).clamp(1, n.max(1))
}
