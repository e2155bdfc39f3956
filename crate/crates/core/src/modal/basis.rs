use crate::error::{Error, Result};

/// Which Fourier weight a mode index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Constant,
    Cos(usize),
    Sin(usize),
}

/// Truncated Fourier basis on a circular cross-section: `1`, then
/// `cos(i theta)`, `sin(i theta)` for `i = 1..=n`, giving `N = 2n + 1` modes.
///
/// Modes are traces on the boundary (`rho / eps = 1`) of the harmonic weights
/// `(rho/eps)^i cos(i theta)` and `(rho/eps)^i sin(i theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModalBasis {
    order: usize,
}

impl ModalBasis {
    pub fn new(order: usize) -> Self {
        Self { order }
    }

    /// Highest Fourier order `n`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Total number of modes `N = 2n + 1`.
    pub fn num_modes(&self) -> usize {
        2 * self.order + 1
    }

    pub fn mode(&self, index: usize) -> Result<Mode> {
        if index >= self.num_modes() {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.num_modes(),
            });
        }
        Ok(mode_of(index))
    }

    /// Normalized angular average of `phi_i^2`: 1 for the constant mode and
    /// 1/2 otherwise.
    pub fn orthogonality_constant(&self, index: usize) -> f64 {
        if index == 0 {
            1.0
        } else {
            0.5
        }
    }

    pub fn mode_eval(&self, index: usize, theta: f64) -> Result<f64> {
        Ok(eval_mode(self.mode(index)?, theta))
    }

    /// All `N` mode values at `theta`.
    pub fn eval_all(&self, theta: f64, out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate().take(self.num_modes()) {
            *slot = eval_mode(mode_of(k), theta);
        }
    }

    /// Fourier order of a mode index.
    pub fn frequency(index: usize) -> usize {
        index.div_ceil(2)
    }
}

fn mode_of(index: usize) -> Mode {
    match index {
        0 => Mode::Constant,
        k if k % 2 == 1 => Mode::Cos(k.div_ceil(2)),
        k => Mode::Sin(k / 2),
    }
}

pub(crate) fn eval_mode(mode: Mode, theta: f64) -> f64 {
    match mode {
        Mode::Constant => 1.0,
        Mode::Cos(i) => (i as f64 * theta).cos(),
        Mode::Sin(i) => (i as f64 * theta).sin(),
    }
}
