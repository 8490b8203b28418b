//! Brute-force cell enumeration and cell-file verification for small instances.

use crate::cells::{CellsFile, MixedCell};
use crate::error::{Error, Result};
use crate::linalg::EPS;
use crate::support::{cell_normalized_volume, validate_system, Lifting, Point, SupportSystem};

/// Largest number of subset tuples the oracle will try.
pub const ORACLE_LIMIT: f64 = 1e7;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub cells: Vec<MixedCell>,
    pub mixed_volume: u128,
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn combinations(len: usize, k: usize, first: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > len {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| first + i as u32).collect());
        let Some(p) = (0..k).rev().find(|&p| idx[p] != p + len - k) else {
            break;
        };
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
    out
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let m = rhs.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |s, x| s.max(x.abs()))
        .max(1.0);
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() <= m as f64 * f64::EPSILON * scale {
            return None;
        }
        a.swap(c, p);
        rhs.swap(c, p);
        for r in c + 1..m {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..m {
                    a[r][k] -= f * a[c][k];
                }
                rhs[r] -= f * rhs[c];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|k| a[r][k] * x[k]).sum();
        x[r] = (rhs[r] - s) / a[r][r];
    }
    Some(x)
}

/// `(λ, ξ)` with `λ_i = a·ξ − b(i, a)` on every label of `blocks`.
fn active_solution(
    sys: &SupportSystem,
    lifting: &Lifting,
    blocks: &[Vec<u32>],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let (n, s) = (sys.n, sys.s());
    let mut a = Vec::with_capacity(n + s);
    let mut rhs = Vec::with_capacity(n + s);
    for (i, b) in blocks.iter().enumerate() {
        for &l in b {
            let mut row = vec![0.0; s + n];
            row[i] = -1.0;
            for (x, &p) in row[s..].iter_mut().zip(sys.point(l as usize)) {
                *x = p as f64;
            }
            a.push(row);
            rhs.push(lifting.values[l as usize]);
        }
    }
    if a.len() != s + n {
        return None;
    }
    let mut x = solve(a, rhs)?;
    let xi = x.split_off(s);
    Some((x, xi))
}

fn dot(p: &Point, xi: &[f64]) -> f64 {
    p.iter().zip(xi).map(|(&a, x)| a as f64 * x).sum()
}

/// Smallest `λ_i − (a·ξ − b)` over inactive points, scaled; `Err` on a tie.
fn min_slack(
    sys: &SupportSystem,
    lifting: &Lifting,
    blocks: &[Vec<u32>],
    lambda: &[f64],
    xi: &[f64],
) -> Result<f64> {
    let off = sys.offsets();
    let margin = sys.n as f64 * EPS;
    let mut worst = f64::INFINITY;
    for (i, b) in blocks.iter().enumerate() {
        for l in off[i]..off[i + 1] {
            if b.contains(&(l as u32)) {
                continue;
            }
            let p = sys.point(l);
            let val = dot(p, xi) - lifting.values[l];
            let scale = 1.0f64.max(lambda[i].abs()).max(val.abs());
            let slack = (lambda[i] - val) / scale;
            if slack.abs() <= margin {
                return Err(Error::Genericity(format!(
                    "label {l} is within the margin of a candidate cell"
                )));
            }
            worst = worst.min(slack);
        }
    }
    Ok(worst)
}

fn block_points<'a>(sys: &'a SupportSystem, blocks: &[Vec<u32>]) -> Vec<Vec<&'a Point>> {
    blocks
        .iter()
        .map(|b| b.iter().map(|&l| sys.point(l as usize)).collect())
        .collect()
}

fn check_tuple(
    sys: &SupportSystem,
    lifting: &Lifting,
    blocks: Vec<Vec<u32>>,
) -> Result<Option<MixedCell>> {
    let volume = match cell_normalized_volume(&block_points(sys, &blocks)) {
        Ok(v) => v,
        Err(Error::DegenerateCell) => return Ok(None),
        Err(e) => return Err(e),
    };
    let Some((lambda0, xi0)) = active_solution(sys, lifting, &blocks) else {
        return Err(Error::Genericity(
            "singular active system for a non-degenerate cell".into(),
        ));
    };
    if min_slack(sys, lifting, &blocks, &lambda0, &xi0)? < 0.0 {
        return Ok(None);
    }
    Ok(Some(MixedCell {
        blocks,
        volume,
        xi0,
        lambda0,
    }))
}

/// Every mixed cell of `lifting`, by trying all subset tuples.
pub fn oracle_enumerate_cells(sys: &SupportSystem, lifting: &Lifting) -> Result<OracleResult> {
    validate_system(sys)?;
    if lifting.values.len() != sys.total_points() {
        return Err(Error::Input("lifting length mismatch".into()));
    }
    let count: f64 = sys
        .supports
        .iter()
        .zip(&sys.multiplicities)
        .map(|(a, &m)| binom(a.len(), m + 1))
        .product();
    if count > ORACLE_LIMIT {
        return Err(Error::InstanceTooLarge(count));
    }
    let off = sys.offsets();
    let combos: Vec<Vec<Vec<u32>>> = sys
        .supports
        .iter()
        .zip(&sys.multiplicities)
        .enumerate()
        .map(|(i, (a, &m))| combinations(a.len(), m + 1, off[i] as u32))
        .collect();
    let total = count as usize;
    let tuple = |mut k: usize| -> Vec<Vec<u32>> {
        combos
            .iter()
            .map(|c| {
                let pick = c[k % c.len()].clone();
                k /= c.len();
                pick
            })
            .collect()
    };
    let cells = run_tuples(total, |k| check_tuple(sys, lifting, tuple(k)))?;
    let mut cells: Vec<MixedCell> = cells.into_iter().flatten().collect();
    cells.sort_by_key(|c| c.labels());
    let mixed_volume = cells.iter().map(|c| c.volume).sum();
    Ok(OracleResult {
        cells,
        mixed_volume,
    })
}

#[cfg(feature = "parallel")]
fn run_tuples<F>(total: usize, f: F) -> Result<Vec<Option<MixedCell>>>
where
    F: Fn(usize) -> Result<Option<MixedCell>> + Sync + Send,
{
    use rayon::prelude::*;
    (0..total)
        .into_par_iter()
        .map(f)
        .filter(|r| !matches!(r, Ok(None)))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_tuples<F>(total: usize, f: F) -> Result<Vec<Option<MixedCell>>>
where
    F: Fn(usize) -> Result<Option<MixedCell>>,
{
    (0..total)
        .map(f)
        .filter(|r| !matches!(r, Ok(None)))
        .collect()
}

/// `ξ` of every mixed cell, in cell order.
pub fn oracle_mixed_vertices(sys: &SupportSystem, lifting: &Lifting) -> Result<Vec<Vec<f64>>> {
    Ok(oracle_enumerate_cells(sys, lifting)?
        .cells
        .into_iter()
        .map(|c| c.xi0)
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub cells: usize,
    pub mixed_volume: u128,
    /// Smallest scaled inequality slack seen.
    pub min_slack: f64,
}

/// Re-derives every cell of `file` from scratch; fails on the first bad one.
pub fn verify_cells(
    sys: &SupportSystem,
    lifting: &Lifting,
    file: &CellsFile,
) -> Result<VerifyReport> {
    validate_system(sys)?;
    let fail = |k: usize, msg: &str| Error::Verification(format!("cell {k}: {msg}"));
    if file.n != sys.n || file.s != sys.s() {
        return Err(Error::Verification(
            "system shape differs from the cells file".into(),
        ));
    }
    if lifting.values.len() != sys.total_points() {
        return Err(Error::Input("lifting length mismatch".into()));
    }
    let off = sys.offsets();
    let mut total = 0u128;
    let mut worst = f64::INFINITY;
    let mut seen = std::collections::BTreeSet::new();
    for (k, c) in file.cells.iter().enumerate() {
        if c.blocks.len() != sys.s() {
            return Err(fail(k, "wrong number of blocks"));
        }
        for (i, b) in c.blocks.iter().enumerate() {
            if b.len() != sys.multiplicities[i] + 1 {
                return Err(fail(k, &format!("block {i} has {} labels", b.len())));
            }
            if b.windows(2).any(|w| w[0] >= w[1])
                || b.iter()
                    .any(|&l| (l as usize) < off[i] || l as usize >= off[i + 1])
            {
                return Err(fail(
                    k,
                    &format!("block {i} labels out of range or unsorted"),
                ));
            }
        }
        if !seen.insert(c.labels()) {
            return Err(fail(k, "duplicate cell"));
        }
        let vol = cell_normalized_volume(&block_points(sys, &c.blocks))
            .map_err(|_| fail(k, "degenerate"))?;
        if vol != c.volume {
            return Err(fail(k, &format!("volume {} but |det| is {vol}", c.volume)));
        }
        let (lambda, xi) = active_solution(sys, lifting, &c.blocks)
            .ok_or_else(|| fail(k, "singular active system"))?;
        let slack = min_slack(sys, lifting, &c.blocks, &lambda, &xi)
            .map_err(|_| fail(k, "inequality within margin"))?;
        if slack < 0.0 {
            return Err(fail(k, "violated inequality"));
        }
        worst = worst.min(slack);
        total += vol;
    }
    if total != file.mixed_volume {
        return Err(Error::Verification(format!(
            "mixed volume field {} but cells sum to {total}",
            file.mixed_volume
        )));
    }
    Ok(VerifyReport {
        cells: file.cells.len(),
        mixed_volume: total,
        min_slack: worst,
    })
}
