//! Exact integer routines: fraction-free determinants and Hermite bases.

use num_bigint::BigInt;

use crate::error::{Error, Result};

/// |det| of a square integer matrix by Bareiss elimination.
///
/// Runs in `i128` with checked arithmetic and restarts in `BigInt` on overflow.
pub fn abs_det(rows: &[Vec<i64>]) -> BigInt {
    match bareiss_i128(rows) {
        Some(d) => BigInt::from(d.unsigned_abs()),
        None => {
            let d = bareiss_big(rows);
            if d < BigInt::from(0) {
                -d
            } else {
                d
            }
        }
    }
}

fn bareiss_i128(rows: &[Vec<i64>]) -> Option<i128> {
    let k = rows.len();
    if k == 0 {
        return Some(1);
    }
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for p in 0..k {
        if a[p][p] == 0 {
            let Some(swap) = (p + 1..k).find(|&r| a[r][p] != 0) else {
                return Some(0);
            };
            a.swap(p, swap);
            sign = -sign;
        }
        for i in p + 1..k {
            for j in p + 1..k {
                let v = a[i][j]
                    .checked_mul(a[p][p])?
                    .checked_sub(a[i][p].checked_mul(a[p][j])?)?;
                a[i][j] = v / prev;
            }
            a[i][p] = 0;
        }
        prev = a[p][p];
    }
    Some(sign * a[k - 1][k - 1])
}

fn bareiss_big(rows: &[Vec<i64>]) -> BigInt {
    let k = rows.len();
    let zero = BigInt::from(0);
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut neg = false;
    let mut prev = BigInt::from(1);
    for p in 0..k {
        if a[p][p] == zero {
            match (p + 1..k).find(|&r| a[r][p] != zero) {
                Some(r) => {
                    a.swap(p, r);
                    neg = !neg;
                }
                None => return zero,
            }
        }
        for i in p + 1..k {
            for j in p + 1..k {
                let v = &a[i][j] * &a[p][p] - &a[i][p] * &a[p][j];
                a[i][j] = v / &prev;
            }
            a[i][p] = zero.clone();
        }
        prev = a[p][p].clone();
    }
    let d = a[k - 1][k - 1].clone();
    if neg {
        -d
    } else {
        d
    }
}

/// Row-style Hermite basis of the lattice spanned by integer vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermiteBasis {
    pub dim: usize,
    /// Echelon rows, pivot entries positive, entries above each pivot reduced mod it.
    pub rows: Vec<Vec<i128>>,
    pub pivots: Vec<usize>,
}

impl HermiteBasis {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Product of pivots; the lattice determinant when full rank.
    pub fn index(&self) -> i128 {
        self.rows
            .iter()
            .zip(&self.pivots)
            .map(|(r, &p)| r[p])
            .product()
    }

    /// Index of this lattice in the integer points of its real span: the gcd
    /// of the maximal minors of the basis.
    pub fn saturation_index(&self) -> Result<i128> {
        let cols: Vec<Vec<i64>> = (0..self.dim)
            .map(|j| {
                self.rows
                    .iter()
                    .map(|r| i64::try_from(r[j]).map_err(|_| overflow()))
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(hermite_basis(&cols, self.rank())?.index())
    }

    /// Integer coordinates of a lattice vector in this basis.
    pub fn coords(&self, v: &[i64]) -> Result<Vec<i64>> {
        let mut c = Vec::with_capacity(self.rank());
        for (k, &p) in self.pivots.iter().enumerate() {
            let mut rem = v[p] as i128;
            for (l, &cl) in c.iter().enumerate() {
                let row: &Vec<i128> = &self.rows[l];
                rem -= cl as i128 * row[p];
            }
            let piv = self.rows[k][p];
            if rem % piv != 0 {
                return Err(Error::Input("vector outside lattice".into()));
            }
            c.push(i64::try_from(rem / piv).map_err(|_| overflow())?);
        }
        // confirm the reconstruction; catches vectors outside the span
        if self.combine(&c)? != v {
            return Err(Error::Input("vector outside lattice span".into()));
        }
        Ok(c)
    }

    pub fn combine(&self, c: &[i64]) -> Result<Vec<i64>> {
        let mut v = vec![0i128; self.dim];
        for (row, &ck) in self.rows.iter().zip(c) {
            for (x, &r) in v.iter_mut().zip(row) {
                *x = x
                    .checked_add(r.checked_mul(ck as i128).ok_or_else(overflow)?)
                    .ok_or_else(overflow)?;
            }
        }
        v.into_iter()
            .map(|x| i64::try_from(x).map_err(|_| overflow()))
            .collect()
    }
}

fn overflow() -> Error {
    Error::Input("integer overflow in lattice reduction".into())
}

/// Hermite basis of the lattice generated by `vecs` (all of length `dim`).
pub fn hermite_basis(vecs: &[Vec<i64>], dim: usize) -> Result<HermiteBasis> {
    let mut m: Vec<Vec<i128>> = vecs
        .iter()
        .filter(|v| v.iter().any(|&x| x != 0))
        .map(|v| v.iter().map(|&x| x as i128).collect())
        .collect();
    let mut rows = Vec::new();
    let mut pivots = Vec::new();
    for col in 0..dim {
        // Euclid on column `col` across the remaining rows
        loop {
            let mut best: Option<usize> = None;
            for (i, r) in m.iter().enumerate() {
                if r[col] != 0 && best.map_or(true, |b| r[col].abs() < m[b][col].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            let mut done = true;
            for i in 0..m.len() {
                if i == b || m[i][col] == 0 {
                    continue;
                }
                let q = m[i][col].div_euclid(m[b][col]);
                for j in col..dim {
                    m[i][j] = m[i][j]
                        .checked_sub(q.checked_mul(m[b][j]).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
                if m[i][col] != 0 {
                    done = false;
                }
            }
            if done {
                let mut piv = m.swap_remove(b);
                if piv[col] < 0 {
                    piv.iter_mut().for_each(|x| *x = -*x);
                }
                rows.push(piv);
                pivots.push(col);
                m.retain(|r| r.iter().any(|&x| x != 0));
                break;
            }
        }
    }
    // reduce entries above pivots
    for k in 0..rows.len() {
        let p = pivots[k];
        for i in 0..k {
            let q = rows[i][p].div_euclid(rows[k][p]);
            if q != 0 {
                for j in p..dim {
                    rows[i][j] = rows[i][j]
                        .checked_sub(q.checked_mul(rows[k][j]).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
            }
        }
    }
    Ok(HermiteBasis { dim, rows, pivots })
}
