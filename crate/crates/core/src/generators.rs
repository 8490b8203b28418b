//! Supports of the standard benchmark families.

use std::collections::BTreeSet;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::support::{Point, SupportSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Cyclic,
    Noon,
    Chandra,
    Katsura,
    Eco,
    Reimer,
    Graphmodel,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "cyclic" => Family::Cyclic,
            "noon" => Family::Noon,
            "chandra" => Family::Chandra,
            "katsura" => Family::Katsura,
            "eco" => Family::Eco,
            "reimer" => Family::Reimer,
            "graphmodel" => Family::Graphmodel,
            _ => return Err(Error::UnsupportedFamily(s.to_string())),
        })
    }
}

impl Family {
    /// Accepted size parameters.
    pub fn range(self) -> (usize, usize) {
        match self {
            Family::Cyclic | Family::Noon | Family::Chandra | Family::Eco => (2, 40),
            Family::Katsura => (1, 40),
            Family::Reimer => (1, 30),
            Family::Graphmodel => (3, 12),
        }
    }
}

fn unit(n: usize, idx: &[usize]) -> Point {
    let mut p = vec![0; n];
    for &i in idx {
        p[i] += 1;
    }
    p
}

fn dedup(pts: impl IntoIterator<Item = Point>) -> Vec<Point> {
    pts.into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn cyclic(n: usize) -> Vec<Vec<Point>> {
    let mut sup: Vec<Vec<Point>> = (1..n)
        .map(|k| {
            (0..n)
                .map(|i| unit(n, &(i..i + k).map(|j| j % n).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    sup.push(vec![vec![1; n], vec![0; n]]);
    sup
}

pub fn noon(n: usize) -> Vec<Vec<Point>> {
    (0..n)
        .map(|i| {
            let mut a: Vec<Point> = (0..n)
                .filter(|&j| j != i)
                .map(|j| unit(n, &[i, j, j]))
                .collect();
            a.push(unit(n, &[i]));
            a.push(vec![0; n]);
            a
        })
        .collect()
}

pub fn chandra(n: usize) -> Vec<Vec<Point>> {
    (0..n)
        .map(|i| {
            let mut a: Vec<Point> = (0..n - 1).map(|j| unit(n, &[i, j])).collect();
            a.push(unit(n, &[i]));
            a.push(vec![0; n]);
            dedup(a)
        })
        .collect()
}

/// Variables `x_0..x_m`; `m` quadratic supports and one linear one.
pub fn katsura(m: usize) -> Vec<Vec<Point>> {
    let n = m + 1;
    let mi = m as i64;
    let mut sup: Vec<Vec<Point>> = (0..m as i64)
        .map(|k| {
            let quad = (-mi..=mi).filter(|&l| (k - l).abs() <= mi).map(|l| {
                unit(
                    n,
                    &[l.unsigned_abs() as usize, (k - l).unsigned_abs() as usize],
                )
            });
            dedup(quad.chain(std::iter::once(unit(n, &[k as usize]))))
        })
        .collect();
    let mut lin: Vec<Point> = (0..n).map(|j| unit(n, &[j])).collect();
    lin.push(vec![0; n]);
    sup.push(lin);
    sup
}

pub fn eco(n: usize) -> Vec<Vec<Point>> {
    let last = n - 1;
    let mut sup: Vec<Vec<Point>> = (1..n)
        .map(|i| {
            let mut a = vec![unit(n, &[i - 1, last])];
            a.extend((1..n - i).map(|j| unit(n, &[j - 1, i + j - 1, last])));
            a.push(vec![0; n]);
            a
        })
        .collect();
    let mut lin: Vec<Point> = (0..last).map(|j| unit(n, &[j])).collect();
    lin.push(vec![0; n]);
    sup.push(lin);
    sup
}

pub fn reimer(n: usize) -> Vec<Vec<Point>> {
    (1..=n)
        .map(|i| {
            let mut a: Vec<Point> = (0..n)
                .map(|j| {
                    let mut p = vec![0; n];
                    p[j] = i as i64 + 1;
                    p
                })
                .collect();
            a.push(vec![0; n]);
            a
        })
        .collect()
}

/// `XY = I` for symmetric `X` supported on the cycle graph with loops and
/// `Y` supported on its complement; one equation per entry `(i, k)`, `i ≤ k`.
pub fn graphmodel(g: usize) -> Vec<Vec<Point>> {
    let edge = |i: usize, j: usize| i == j || (i + 1) % g == j || (j + 1) % g == i;
    let mut var = vec![vec![0usize; g]; g];
    let mut next = 0;
    for i in 0..g {
        for j in i..g {
            var[i][j] = next;
            var[j][i] = next;
            next += 1;
        }
    }
    let n = next;
    let mut sup = Vec::with_capacity(n);
    for i in 0..g {
        for k in i..g {
            let mut a: Vec<Point> = Vec::new();
            for j in (0..g).filter(|&j| edge(i, j)) {
                if edge(j, k) {
                    a.push(unit(n, &[var[i][j]]));
                } else {
                    a.push(unit(n, &[var[i][j], var[j][k]]));
                }
            }
            if i == k {
                a.push(vec![0; n]);
            }
            sup.push(dedup(a));
        }
    }
    sup
}

/// The system of `family` with size parameter `k`.
pub fn generate(family: Family, k: usize) -> Result<SupportSystem> {
    let (lo, hi) = family.range();
    if k < lo || k > hi {
        return Err(Error::Input(format!(
            "{family:?} needs a size in {lo}..={hi}, got {k}"
        )));
    }
    let sup = match family {
        Family::Cyclic => cyclic(k),
        Family::Noon => noon(k),
        Family::Chandra => chandra(k),
        Family::Katsura => katsura(k),
        Family::Eco => eco(k),
        Family::Reimer => reimer(k),
        Family::Graphmodel => graphmodel(k),
    };
    let n = sup[0][0].len();
    SupportSystem::mixed(n, sup)
}

pub fn generate_named(name: &str, k: usize) -> Result<SupportSystem> {
    generate(name.parse()?, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let c = generate(Family::Cyclic, 3).unwrap();
        assert_eq!(
            c.supports[0],
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
        );
        assert_eq!(
            c.supports[1],
            vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]
        );
        assert_eq!(c.supports[2], vec![vec![1, 1, 1], vec![0, 0, 0]]);
        let k = generate(Family::Katsura, 2).unwrap();
        assert_eq!(k.n, 3);
        assert_eq!(k.supports[2].len(), 4);
        assert!(k.supports[0].contains(&vec![2, 0, 0]) && k.supports[0].contains(&vec![1, 0, 0]));
        let g = generate(Family::Graphmodel, 4).unwrap();
        assert_eq!((g.n, g.s()), (10, 10));
        assert_eq!(
            generate(Family::Eco, 4).unwrap().supports[2],
            vec![vec![0, 0, 1, 1], vec![0, 0, 0, 0]]
        );
        assert_eq!(
            generate(Family::Reimer, 2).unwrap().supports[1][0],
            vec![3, 0]
        );
    }

    #[test]
    fn bad_requests() {
        assert!(matches!(
            "foo".parse::<Family>(),
            Err(Error::UnsupportedFamily(_))
        ));
        assert!(generate(Family::Cyclic, 1).is_err());
    }
}
