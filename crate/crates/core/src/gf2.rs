//! Affine systems over F2 with enumeration of the full solution space.

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let w = &mut self.words[i / 64];
        if value {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

/// Equations `row . x = rhs` over F2.
#[derive(Debug, Clone, Default)]
pub struct AffineSystem {
    ncols: usize,
    rows: Vec<(BitRow, bool)>,
}

/// All solutions of a consistent system: `particular + span(kernel)`. The
/// particular solution has every free variable set to 0, and `kernel[i]` is
/// the direction that flips the `i`-th free variable.
#[derive(Debug, Clone)]
pub struct SolutionSpace {
    pub particular: BitRow,
    pub kernel: Vec<BitRow>,
}

impl AffineSystem {
    pub fn new(ncols: usize) -> Self {
        AffineSystem {
            ncols,
            rows: Vec::new(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn push(&mut self, row: BitRow, rhs: bool) {
        debug_assert_eq!(row.len(), self.ncols);
        self.rows.push((row, rhs));
    }

    /// Gauss-Jordan elimination; `None` if the system is inconsistent.
    pub fn solve(&self) -> Option<SolutionSpace> {
        let mut rows = self.rows.clone();
        let mut pivots: Vec<usize> = Vec::new();
        let mut rank = 0;
        for col in 0..self.ncols {
            let Some(p) = (rank..rows.len()).find(|&r| rows[r].0.get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let (pivot_row, pivot_rhs) = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.0.get(col) {
                    row.0.xor_assign(&pivot_row);
                    row.1 ^= pivot_rhs;
                }
            }
            pivots.push(col);
            rank += 1;
        }
        if rows[rank..].iter().any(|(_, rhs)| *rhs) {
            return None;
        }
        let mut particular = BitRow::zeros(self.ncols);
        for (r, &col) in pivots.iter().enumerate() {
            particular.set(col, rows[r].1);
        }
        let mut is_pivot = vec![false; self.ncols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let kernel = (0..self.ncols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut k = BitRow::zeros(self.ncols);
                k.set(free, true);
                for (r, &col) in pivots.iter().enumerate() {
                    if rows[r].0.get(free) {
                        k.set(col, true);
                    }
                }
                k
            })
            .collect();
        Some(SolutionSpace { particular, kernel })
    }
}

impl SolutionSpace {
    /// Number of free variables.
    pub fn dimension(&self) -> usize {
        self.kernel.len()
    }

    /// The solution selected by the free-variable assignment `choice` (bit
    /// `i` drives `kernel[i]`). Choices are enumerated as a binary counter,
    /// so choice 0 is the all-free-zero solution.
    pub fn nth(&self, choice: u128) -> BitRow {
        let mut x = self.particular.clone();
        for (i, k) in self.kernel.iter().enumerate() {
            if i < 128 && (choice >> i) & 1 == 1 {
                x.xor_assign(k);
            }
        }
        x
    }

    /// Total number of solutions, saturating.
    pub fn count(&self) -> u128 {
        if self.kernel.len() >= 127 {
            u128::MAX
        } else {
            1u128 << self.kernel.len()
        }
    }
}
