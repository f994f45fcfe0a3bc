//! Row-major bit-packed boolean matrices over the (OR, AND) semiring.

use std::fmt;

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(WORD);
        Self {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / WORD] >> (c % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / WORD];
        let bit = 1u64 << (c % WORD);
        if v {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    /// Column indices of the set bits of row `r`, ascending.
    pub fn row_ones(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(r).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// Boolean product: `(A*B)[r][c] = OR_t A[r][t] AND B[t][c]`, computed by
    /// OR-ing the rows of `other` selected by each row of `self`.
    ///
    /// Panics on a dimension mismatch; see [`BitMatrix::try_mul`].
    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        self.try_mul(other).expect("dimension mismatch")
    }

    pub fn try_mul(&self, other: &BitMatrix) -> Option<BitMatrix> {
        if self.cols != other.rows {
            return None;
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        let w = out.words;
        for r in 0..self.rows {
            let dst = &mut out.data[r * w..(r + 1) * w];
            for t in self.row_ones(r) {
                for (d, s) in dst.iter_mut().zip(other.row(t)) {
                    *d |= s;
                }
            }
        }
        Some(out)
    }

    /// Diagonal bits of a square matrix.
    pub fn diagonal(&self) -> Vec<bool> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn select_rows(&self, keep: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(keep.len(), self.cols);
        for (i, &r) in keep.iter().enumerate() {
            out.data[i * self.words..(i + 1) * self.words].copy_from_slice(self.row(r));
        }
        out
    }

    pub fn select_cols(&self, keep: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows, keep.len());
        for r in 0..self.rows {
            for (i, &c) in keep.iter().enumerate() {
                if self.get(r, c) {
                    out.set(r, i, true);
                }
            }
        }
        out
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_against_naive() {
        let a = BitMatrix::from_fn(5, 70, |r, c| (r * 7 + c * 3) % 5 == 0);
        let b = BitMatrix::from_fn(70, 9, |r, c| (r + 2 * c) % 11 == 0);
        let p = a.mul(&b);
        for r in 0..5 {
            for c in 0..9 {
                let expect = (0..70).any(|t| a.get(r, t) && b.get(t, c));
                assert_eq!(p.get(r, c), expect);
            }
        }
    }

    #[test]
    fn identity_and_zero() {
        let a = BitMatrix::from_fn(4, 4, |r, c| r <= c);
        assert_eq!(a.mul(&BitMatrix::identity(4)), a);
        assert!(a.mul(&BitMatrix::zeros(4, 3)).is_zero());
        assert!(a.try_mul(&BitMatrix::zeros(3, 3)).is_none());
    }

    #[test]
    fn row_ones_and_selection() {
        let m = BitMatrix::from_fn(3, 130, |r, c| c % (r + 2) == 0);
        let ones: Vec<usize> = m.row_ones(2).collect();
        assert_eq!(ones, (0..130).filter(|c| c % 4 == 0).collect::<Vec<_>>());
        let s = m.select_rows(&[2, 0]).select_cols(&[0, 4, 5]);
        assert_eq!(s.rows(), 2);
        assert!(s.get(0, 0) && s.get(0, 1) && !s.get(0, 2));
        assert!(s.get(1, 0) && s.get(1, 1) && !s.get(1, 2));
    }
}
