//! Problem instances, lattice preprocessing, schedules and exact cell volumes.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::lattice::{abs_det, hermite_basis, HermiteBasis};

pub type Point = Vec<i64>;

/// `s` integer supports in `Z^n` with multiplicities summing to `n`.
///
/// Labels are global and 0-based, in concatenation order of the supports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSystem {
    pub n: usize,
    pub supports: Vec<Vec<Point>>,
    pub multiplicities: Vec<usize>,
}

impl SupportSystem {
    pub fn new(n: usize, supports: Vec<Vec<Point>>, multiplicities: Vec<usize>) -> Result<Self> {
        let sys = SupportSystem {
            n,
            supports,
            multiplicities,
        };
        validate_system(&sys)?;
        Ok(sys)
    }

    /// Fully mixed system, `m_i = 1`.
    pub fn mixed(n: usize, supports: Vec<Vec<Point>>) -> Result<Self> {
        let s = supports.len();
        Self::new(n, supports, vec![1; s])
    }

    pub fn s(&self) -> usize {
        self.supports.len()
    }

    pub fn total_points(&self) -> usize {
        self.supports.iter().map(Vec::len).sum()
    }

    /// First label of each block, plus the total as a sentinel.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.s() + 1);
        let mut acc = 0;
        off.push(0);
        for a in &self.supports {
            acc += a.len();
            off.push(acc);
        }
        off
    }

    pub fn block_of_labels(&self) -> Vec<usize> {
        self.supports
            .iter()
            .enumerate()
            .flat_map(|(i, a)| std::iter::repeat(i).take(a.len()))
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.supports.iter().flatten()
    }

    pub fn point(&self, label: usize) -> &Point {
        let mut l = label;
        for a in &self.supports {
            if l < a.len() {
                return &a[l];
            }
            l -= a.len();
        }
        panic!("label {label} out of range")
    }

    /// Affine dimension of each `conv A_i`.
    pub fn dims(&self) -> Result<Vec<usize>> {
        self.supports
            .iter()
            .map(|a| Ok(hermite_basis(&differences(a, &a[0]), self.n)?.rank()))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| {
            lines.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("missing {what}"),
            })
        };
        let (ln, hdr) = next("header")?;
        if hdr.split_whitespace().collect::<Vec<_>>() != ["MVSYS", "1"] {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `MVSYS 1`".into(),
            });
        }
        let n = keyed(next("n")?, "n")?;
        let s = keyed(next("s")?, "s")?;
        let (ln, mline) = next("m")?;
        let mut toks = mline.split_whitespace();
        if toks.next() != Some("m") {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `m`".into(),
            });
        }
        let m: Vec<usize> = toks.map(|t| num(t, ln)).collect::<Result<_>>()?;
        if m.len() != s {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {s} multiplicities"),
            });
        }
        let mut supports = Vec::with_capacity(s);
        for i in 0..s {
            let (ln, sl) = next("support")?;
            let t: Vec<&str> = sl.split_whitespace().collect();
            if t.len() != 3 || t[0] != "support" {
                return Err(Error::Parse {
                    line: ln,
                    msg: "expected `support <i> <#points>`".into(),
                });
            }
            let idx: usize = num(t[1], ln)?;
            if idx != i + 1 {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("support index {idx}, expected {}", i + 1),
                });
            }
            let cnt: usize = num(t[2], ln)?;
            let mut pts = Vec::with_capacity(cnt);
            for _ in 0..cnt {
                let (ln, pl) = next("point")?;
                let p: Point = pl
                    .split_whitespace()
                    .map(|t| num(t, ln))
                    .collect::<Result<_>>()?;
                if p.len() != n {
                    return Err(Error::Parse {
                        line: ln,
                        msg: format!("point has {} coordinates, expected {n}", p.len()),
                    });
                }
                pts.push(p);
            }
            supports.push(pts);
        }
        if let Ok((ln, _)) = next("") {
            return Err(Error::Parse {
                line: ln,
                msg: "trailing content".into(),
            });
        }
        SupportSystem::new(n, supports, m)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "MVSYS 1");
        let _ = writeln!(out, "n {}", self.n);
        let _ = writeln!(out, "s {}", self.s());
        let ms: Vec<String> = self.multiplicities.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(out, "m {}", ms.join(" "));
        for (i, a) in self.supports.iter().enumerate() {
            let _ = writeln!(out, "support {} {}", i + 1, a.len());
            for p in a {
                let cs: Vec<String> = p.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(out, "{}", cs.join(" "));
            }
        }
        out
    }
}

fn keyed(line: (usize, &str), key: &str) -> Result<usize> {
    let (ln, l) = line;
    let t: Vec<&str> = l.split_whitespace().collect();
    if t.len() != 2 || t[0] != key {
        return Err(Error::Parse {
            line: ln,
            msg: format!("expected `{key} <value>`"),
        });
    }
    num(t[1], ln)
}

fn num<T: std::str::FromStr>(t: &str, line: usize) -> Result<T> {
    t.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad number `{t}`"),
    })
}

pub(crate) fn differences(a: &[Point], origin: &Point) -> Vec<Point> {
    a.iter()
        .map(|p| p.iter().zip(origin).map(|(x, o)| x - o).collect())
        .collect()
}

pub fn validate_system(sys: &SupportSystem) -> Result<()> {
    if sys.n == 0 {
        return Err(Error::Input("n must be positive".into()));
    }
    if sys.supports.is_empty() {
        return Err(Error::Input("no supports".into()));
    }
    if sys.multiplicities.len() != sys.s() {
        return Err(Error::Input(format!(
            "{} multiplicities for {} supports",
            sys.multiplicities.len(),
            sys.s()
        )));
    }
    let msum: usize = sys.multiplicities.iter().sum();
    if msum != sys.n {
        return Err(Error::Input(format!(
            "sum of multiplicities {msum} != n = {}",
            sys.n
        )));
    }
    if sys.total_points() > u32::MAX as usize {
        return Err(Error::Input("too many points".into()));
    }
    for (i, a) in sys.supports.iter().enumerate() {
        if a.is_empty() {
            return Err(Error::Input(format!("support {} is empty", i + 1)));
        }
        let mut seen = HashSet::with_capacity(a.len());
        for p in a {
            if p.len() != sys.n {
                return Err(Error::Input(format!(
                    "support {}: point of wrong length",
                    i + 1
                )));
            }
            if !seen.insert(p) {
                return Err(Error::Input(format!(
                    "support {}: duplicate point {p:?}",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

/// Real lifting value per global label.
#[derive(Clone, Debug, PartialEq)]
pub struct Lifting {
    pub values: Vec<f64>,
}

impl Lifting {
    pub fn parse(text: &str, labels: usize) -> Result<Self> {
        let mut values = vec![f64::NAN; labels];
        for (i, l) in text.lines().enumerate() {
            let l = l.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected `label value`".into(),
                });
            }
            let lab: usize = num(t[0], i + 1)?;
            let v: f64 = num(t[1], i + 1)?;
            if lab >= labels {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("label {lab} out of range"),
                });
            }
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "non-finite value".into(),
                });
            }
            values[lab] = v;
        }
        if let Some(l) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Input(format!("lifting misses label {l}")));
        }
        Ok(Lifting { values })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (l, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{l} {v:?}");
        }
        out
    }
}

/// Coordinate change onto the lattice generated by the translated supports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeReduction {
    pub translations: Vec<Point>,
    pub basis: HermiteBasis,
    pub index: u128,
}

impl LatticeReduction {
    /// Original coordinates of a reduced point of block `i`.
    pub fn unreduce(&self, i: usize, c: &[i64]) -> Result<Point> {
        let v = self.basis.combine(c)?;
        Ok(v.iter()
            .zip(&self.translations[i])
            .map(|(x, t)| x + t)
            .collect())
    }
}

pub fn hermite_reduce(sys: &SupportSystem) -> Result<(SupportSystem, LatticeReduction)> {
    validate_system(sys)?;
    let translations: Vec<Point> = sys
        .supports
        .iter()
        .map(|a| a.iter().min().cloned().expect("non-empty"))
        .collect();
    let diffs: Vec<Point> = sys
        .supports
        .iter()
        .zip(&translations)
        .flat_map(|(a, t)| differences(a, t))
        .collect();
    let basis = hermite_basis(&diffs, sys.n)?;
    if basis.rank() < sys.n {
        return Err(Error::RankDeficient {
            rank: basis.rank(),
            n: sys.n,
        });
    }
    let index =
        u128::try_from(basis.index()).map_err(|_| Error::Input("bad lattice index".into()))?;
    let supports = sys
        .supports
        .iter()
        .zip(&translations)
        .map(|(a, t)| {
            differences(a, t)
                .iter()
                .map(|v| basis.coords(v))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let red = SupportSystem {
        n: sys.n,
        supports,
        multiplicities: sys.multiplicities.clone(),
    };
    Ok((
        red,
        LatticeReduction {
            translations,
            basis,
            index,
        },
    ))
}

/// `m_i(d)` for `d = 0..=n`, plus the fill order of the supports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub order: Vec<usize>,
    /// `table[d][i]`, indexed by original block `i`.
    pub table: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn m(&self, d: usize) -> &[usize] {
        &self.table[d]
    }

    /// The block that grows when passing from level `d - 1` to `d`.
    pub fn q(&self, d: usize) -> usize {
        (0..self.table[d].len())
            .find(|&i| self.table[d][i] != self.table[d - 1][i])
            .expect("schedule grows by one block per level")
    }

    pub fn check_invariants(&self, mult: &[usize]) -> bool {
        let n = self.table.len() - 1;
        if self.table[0].iter().any(|&x| x != 0) || self.table[n] != mult {
            return false;
        }
        (1..=n).all(|d| {
            let prev = &self.table[d - 1];
            let cur = &self.table[d];
            cur.iter().sum::<usize>() == d
                && cur.iter().zip(prev).all(|(c, p)| c >= p)
                && cur
                    .iter()
                    .zip(prev)
                    .filter(|(c, p)| *c == &(*p + 1))
                    .count()
                    == 1
        })
    }
}

/// Schedule from precomputed sort keys `(dim, V_i)`; ties fall to `#A_i`, then input order.
pub fn schedule_from_keys(sys: &SupportSystem, dims: &[usize], vols: &[u128]) -> Schedule {
    let mut order: Vec<usize> = (0..sys.s()).collect();
    order.sort_by_key(|&i| (dims[i], vols[i], sys.supports[i].len(), i));
    let n = sys.n;
    let mut table = vec![vec![0usize; sys.s()]; n + 1];
    for (d, row) in table.iter_mut().enumerate() {
        let mut before = 0usize;
        for &i in &order {
            let mi = sys.multiplicities[i];
            row[i] = mi.min(d.saturating_sub(before));
            before += mi;
        }
    }
    Schedule { order, table }
}

/// Schedule with keys from a lower-hull pass under a fixed internal lifting.
pub fn build_schedule(sys: &SupportSystem) -> Result<Schedule> {
    let dims = sys.dims()?;
    let vols = crate::hull::support_volumes(sys, 0x5eed)?;
    Ok(schedule_from_keys(sys, &dims, &vols))
}

/// |det| of the stacked edge matrix of a cell, exactly.
pub fn cell_normalized_volume(blocks: &[Vec<&Point>]) -> Result<u128> {
    let mut rows: Vec<Vec<i64>> = Vec::new();
    for b in blocks {
        let base = b[0];
        for p in &b[1..] {
            rows.push(p.iter().zip(base).map(|(x, y)| x - y).collect());
        }
    }
    let n = rows.first().map_or(0, Vec::len);
    if rows.len() != n {
        return Err(Error::Input(format!("edge matrix is {}x{n}", rows.len())));
    }
    let d = abs_det(&rows);
    if d == BigInt::from(0) {
        return Err(Error::DegenerateCell);
    }
    u128::try_from(&d).map_err(|_| Error::Input("cell volume exceeds 128 bits".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_segments() -> SupportSystem {
        SupportSystem::mixed(
            2,
            vec![vec![vec![0, 0], vec![1, 0]], vec![vec![0, 0], vec![0, 1]]],
        )
        .unwrap()
    }

    #[test]
    fn validate_cases() {
        unit_segments();
        let e = SupportSystem::new(2, vec![vec![vec![0, 0], vec![1, 0]]], vec![1]).unwrap_err();
        assert_eq!(e.kind(), "InputError");
        let e = SupportSystem::mixed(1, vec![vec![vec![0], vec![0]]]).unwrap_err();
        assert!(e.to_string().contains("duplicate"));
    }

    #[test]
    fn reduce_even_segment() {
        let sys = SupportSystem::mixed(1, vec![vec![vec![0], vec![2]]]).unwrap();
        let (red, lr) = hermite_reduce(&sys).unwrap();
        assert_eq!(red.supports[0], vec![vec![0], vec![1]]);
        assert_eq!(lr.index, 2);
    }

    #[test]
    fn reduce_identity_case() {
        let sys = unit_segments();
        let (red, lr) = hermite_reduce(&sys).unwrap();
        assert_eq!(red, sys);
        assert_eq!(lr.index, 1);
    }

    #[test]
    fn reduce_roundtrip() {
        let sys = SupportSystem::mixed(
            2,
            vec![
                vec![vec![1, 1], vec![3, 1], vec![1, 5]],
                vec![vec![-2, 0], vec![0, 2]],
            ],
        )
        .unwrap();
        let (red, lr) = hermite_reduce(&sys).unwrap();
        for (i, (a, r)) in sys.supports.iter().zip(&red.supports).enumerate() {
            assert!(r.contains(&vec![0, 0]));
            for (p, c) in a.iter().zip(r) {
                assert_eq!(&lr.unreduce(i, c).unwrap(), p);
            }
        }
    }

    #[test]
    fn reduce_rank_deficient() {
        let sys = SupportSystem::mixed(
            2,
            vec![vec![vec![0, 0], vec![1, 1]], vec![vec![0, 0], vec![2, 2]]],
        )
        .unwrap();
        assert!(matches!(
            hermite_reduce(&sys),
            Err(Error::RankDeficient { rank: 1, n: 2 })
        ));
    }

    #[test]
    fn schedule_examples() {
        let tri = vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let sys = SupportSystem::mixed(3, vec![tri.clone(), tri.clone(), tri.clone()]).unwrap();
        let sc = build_schedule(&sys).unwrap();
        assert_eq!(sc.m(1), &[1, 0, 0]);
        assert_eq!(sc.m(2), &[1, 1, 0]);
        assert_eq!(sc.m(3), &[1, 1, 1]);

        let sys = SupportSystem::new(3, vec![tri.clone()], vec![3]).unwrap();
        let sc = build_schedule(&sys).unwrap();
        for d in 0..=3 {
            assert_eq!(sc.m(d), &[d]);
        }

        let sys = SupportSystem::new(3, vec![tri.clone(), tri], vec![2, 1]).unwrap();
        let sc = schedule_from_keys(&sys, &[3, 3], &[1, 1]);
        assert_eq!(sc.m(1), &[1, 0]);
        assert_eq!(sc.m(2), &[2, 0]);
        assert_eq!(sc.m(3), &[2, 1]);
        assert!(sc.check_invariants(&[2, 1]));
    }

    #[test]
    fn schedule_orders_by_dim_then_volume() {
        let big = vec![vec![0, 0], vec![3, 0], vec![0, 3]];
        let small = vec![vec![0, 0], vec![1, 0], vec![0, 1]];
        let seg = vec![vec![0, 0], vec![1, 1]];
        let sys = SupportSystem::new(2, vec![big, small, seg], vec![1, 1, 0]).unwrap();
        let sc = build_schedule(&sys).unwrap();
        assert_eq!(sc.order, vec![2, 1, 0]);
        assert_eq!(sc.m(1), &[0, 1, 0]);
    }

    #[test]
    fn volumes() {
        let o = vec![0, 0];
        let e1 = vec![1, 0];
        let e2 = vec![0, 1];
        let e22 = vec![0, 2];
        assert_eq!(
            cell_normalized_volume(&[vec![&o, &e1], vec![&o, &e2]]).unwrap(),
            1
        );
        assert_eq!(cell_normalized_volume(&[vec![&o, &e1, &e2]]).unwrap(), 1);
        assert_eq!(
            cell_normalized_volume(&[vec![&o, &e1], vec![&o, &e22]]).unwrap(),
            2
        );
        assert_eq!(
            cell_normalized_volume(&[vec![&o, &e1], vec![&o, &e1]]).unwrap_err(),
            Error::DegenerateCell
        );
    }

    #[test]
    fn text_roundtrip() {
        let sys = unit_segments();
        let txt = format!("# comment\n{}", sys.to_text());
        assert_eq!(SupportSystem::parse(&txt).unwrap(), sys);
        assert!(SupportSystem::parse("MVSYS 2\n").is_err());
    }

    #[test]
    fn lifting_text() {
        let l = Lifting {
            values: vec![0.25, 0.1],
        };
        assert_eq!(Lifting::parse(&l.to_text(), 2).unwrap(), l);
        assert!(Lifting::parse("0 0.5\n", 2).is_err());
    }
}
