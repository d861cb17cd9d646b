use crate::index::{for_each_tuple, is_injective};
use crate::{Error, Mode, Result};

/// Label code stored in non-injective cells of a non-partite tensor.
pub const SENTINEL: u32 = u32::MAX;

/// Largest `m^k` a tensor may allocate unless a caller passes its own budget.
pub const DEFAULT_CELL_BUDGET: u128 = 100_000_000;

/// Dense labels over `[m]^k`, row-major with the last coordinate fastest.
///
/// In non-partite mode only injective cells carry labels; every cell with a
/// repeated index holds [`SENTINEL`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTensor {
    mode: Mode,
    k: usize,
    m: usize,
    alphabet: Vec<String>,
    cells: Vec<u32>,
}

pub(crate) fn checked_cells(m: usize, k: usize, budget: u128) -> Result<usize> {
    let mut cells: u128 = 1;
    for _ in 0..k {
        cells = cells.saturating_mul(m as u128);
    }
    if cells > budget {
        return Err(Error::CellBudget { cells, budget });
    }
    Ok(cells as usize)
}

impl LabelTensor {
    /// Fills every labelled cell with `f(alpha)`.
    pub fn from_fn(
        mode: Mode,
        k: usize,
        m: usize,
        alphabet: Vec<String>,
        budget: u128,
        mut f: impl FnMut(&[usize]) -> u32,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("tensor arity must be at least 1".into()));
        }
        let n = checked_cells(m, k, budget)?;
        let mut cells = Vec::with_capacity(n);
        for_each_tuple(m, k, false, |alpha| {
            let label = if mode == Mode::Nonpartite && !is_injective(alpha) { SENTINEL } else { f(alpha) };
            cells.push(label);
        });
        let tensor = Self { mode, k, m, alphabet, cells };
        tensor.validate()?;
        Ok(tensor)
    }

    /// Wraps a row-major cell vector after checking the tensor invariants.
    pub fn from_cells(mode: Mode, k: usize, m: usize, alphabet: Vec<String>, cells: Vec<u32>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("tensor arity must be at least 1".into()));
        }
        let n = checked_cells(m, k, DEFAULT_CELL_BUDGET)?;
        if cells.len() != n {
            return Err(Error::SizeMismatch(format!("{} cells for a {m}^{k} tensor", cells.len())));
        }
        let tensor = Self { mode, k, m, alphabet, cells };
        tensor.validate()?;
        Ok(tensor)
    }

    fn validate(&self) -> Result<()> {
        let y = self.alphabet.len() as u32;
        let mut offset = 0;
        let mut bad = None;
        for_each_tuple(self.m, self.k, false, |alpha| {
            let cell = self.cells[offset];
            offset += 1;
            if bad.is_some() {
                return;
            }
            let diagonal = self.mode == Mode::Nonpartite && !is_injective(alpha);
            let ok = if diagonal { cell == SENTINEL } else { cell < y };
            if !ok {
                bad = Some((alpha.to_vec(), cell));
            }
        });
        match bad {
            Some((alpha, cell)) => {
                Err(Error::InvalidParameter(format!("cell {alpha:?} holds invalid label code {cell}")))
            }
            None => Ok(()),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn offset(&self, alpha: &[usize]) -> usize {
        debug_assert_eq!(alpha.len(), self.k);
        alpha.iter().fold(0, |acc, &a| acc * self.m + a)
    }

    pub fn get(&self, alpha: &[usize]) -> u32 {
        self.cells[self.offset(alpha)]
    }

    /// Counts of each label code over the labelled cells.
    pub fn histogram(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.alphabet.len()];
        for &c in &self.cells {
            if c != SENTINEL {
                counts[c as usize] += 1;
            }
        }
        counts
    }
}
