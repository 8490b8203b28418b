//! Mixed cells and the `MVCELLS` text format.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MixedCell {
    /// Active labels per block, increasing.
    pub blocks: Vec<Vec<u32>>,
    /// |det| of the edge matrix in original coordinates.
    pub volume: u128,
    pub xi0: Vec<f64>,
    pub lambda0: Vec<f64>,
}

impl MixedCell {
    pub fn labels(&self) -> Vec<u32> {
        self.blocks.concat()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellsFile {
    pub seed: u64,
    pub n: usize,
    pub s: usize,
    pub index: u128,
    pub mixed_volume: u128,
    pub cells: Vec<MixedCell>,
}

fn floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl CellsFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "MVCELLS 1");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "n {} s {}", self.n, self.s);
        let _ = writeln!(out, "index {}", self.index);
        let _ = writeln!(out, "scaled_mixed_volume {}", self.mixed_volume);
        let _ = writeln!(out, "cells {}", self.cells.len());
        for c in &self.cells {
            let _ = write!(out, "cell {}", c.volume);
            for b in &c.blocks {
                let ls: Vec<String> = b.iter().map(|l| l.to_string()).collect();
                let _ = write!(out, " ; {}", ls.join(" "));
            }
            let _ = writeln!(
                out,
                " ; xi0 {} ; lambda0 {}",
                floats(&c.xi0),
                floats(&c.lambda0)
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let mut field = |key: &str| -> Result<(usize, Vec<String>)> {
            let (i, l) = lines.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("missing `{key}`"),
            })?;
            let t: Vec<String> = l.split_whitespace().map(String::from).collect();
            if t.first().map(String::as_str) != Some(key) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `{key}`"),
                });
            }
            Ok((i + 1, t))
        };
        let (ln, h) = field("MVCELLS")?;
        if h.len() != 2 || h[1] != "1" {
            return Err(Error::Parse {
                line: ln,
                msg: "unsupported version".into(),
            });
        }
        let seed = one(field("seed")?)?;
        let (ln, t) = field("n")?;
        if t.len() != 4 || t[2] != "s" {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `n <n> s <s>`".into(),
            });
        }
        let n: usize = parse_tok(&t[1], ln)?;
        let s: usize = parse_tok(&t[3], ln)?;
        let index = one(field("index")?)?;
        let mixed_volume = one(field("scaled_mixed_volume")?)?;
        let count: usize = one(field("cells")?)?;
        let mut cells = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, t) = field("cell")?;
            let rest = t[1..].join(" ");
            let parts: Vec<&str> = rest.split(';').map(str::trim).collect();
            if parts.len() != s + 3 {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {} `;`-separated fields", s + 3),
                });
            }
            let volume: u128 = parse_tok(parts[0], ln)?;
            let blocks = parts[1..=s]
                .iter()
                .map(|p| {
                    p.split_whitespace()
                        .map(|x| parse_tok(x, ln))
                        .collect::<Result<Vec<u32>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let xi0 = tagged(parts[s + 1], "xi0", n, ln)?;
            let lambda0 = tagged(parts[s + 2], "lambda0", s, ln)?;
            cells.push(MixedCell {
                blocks,
                volume,
                xi0,
                lambda0,
            });
        }
        if let Some((i, _)) = lines.next() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "trailing content".into(),
            });
        }
        Ok(CellsFile {
            seed,
            n,
            s,
            index,
            mixed_volume,
            cells,
        })
    }
}

fn parse_tok<T: std::str::FromStr>(t: &str, line: usize) -> Result<T> {
    t.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value `{t}`"),
    })
}

fn one<T: std::str::FromStr>((ln, t): (usize, Vec<String>)) -> Result<T> {
    if t.len() != 2 {
        return Err(Error::Parse {
            line: ln,
            msg: format!("expected `{} <value>`", t[0]),
        });
    }
    parse_tok(&t[1], ln)
}

fn tagged(p: &str, tag: &str, len: usize, ln: usize) -> Result<Vec<f64>> {
    let mut it = p.split_whitespace();
    if it.next() != Some(tag) {
        return Err(Error::Parse {
            line: ln,
            msg: format!("expected `{tag}`"),
        });
    }
    let v: Vec<f64> = it.map(|x| parse_tok(x, ln)).collect::<Result<_>>()?;
    if v.len() != len {
        return Err(Error::Parse {
            line: ln,
            msg: format!("`{tag}` needs {len} values"),
        });
    }
    Ok(v)
}
