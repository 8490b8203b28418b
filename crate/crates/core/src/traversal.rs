//! Hash-keyed exploration of the lower-facet graph.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{CertifiedInverse, EPS_M};
use crate::pivot::{
    audit_facet, materialize, materialize_with, neighbor_steps, predicted_constants,
    rank_one_successor, shape, start_facet, PivotContext, Step,
};

/// Hash coefficients as 64-bit fixed-point fractions of one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashCoeffs {
    pub h: Vec<u64>,
}

impl HashCoeffs {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        HashCoeffs {
            h: (0..len).map(|_| rng.gen()).collect(),
        }
    }

    pub fn from_reals(h: &[f64]) -> Self {
        HashCoeffs {
            h: h.iter()
                .map(|&x| (x.rem_euclid(1.0) * 2f64.powi(64)) as u64)
                .collect(),
        }
    }

    /// `Σ H_j l_j mod 1`, scaled by `2^64`.
    #[inline]
    pub fn sigma(&self, labels: &[u32]) -> u64 {
        labels.iter().zip(&self.h).fold(0u64, |acc, (&l, &h)| {
            acc.wrapping_add(h.wrapping_mul(l as u64))
        })
    }
}

pub fn hash_facet(h: &HashCoeffs, labels: &[u32]) -> f64 {
    h.sigma(labels) as f64 / 2f64.powi(64)
}

/// Independent 64-bit digest of a label list, stored beside `σ` to detect collisions.
pub fn fingerprint(labels: &[u32]) -> u64 {
    let mut x: u64 = 0xcbf2_9ce4_8422_2325 ^ labels.len() as u64;
    for &l in labels {
        x ^= l as u64;
        x = x.wrapping_mul(0x0000_0100_0000_01b3);
        x ^= x >> 29;
    }
    x ^ (x >> 32)
}

#[derive(Default)]
pub struct VisitedSet {
    map: BTreeMap<u64, u64>,
}

impl VisitedSet {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn contains(&self, sigma: u64, fp: u64) -> Result<bool> {
        match self.map.get(&sigma) {
            None => Ok(false),
            Some(&f) if f == fp => Ok(true),
            Some(_) => Err(Error::HashCollision(sigma)),
        }
    }

    /// `true` when newly inserted.
    pub fn insert(&mut self, sigma: u64, fp: u64) -> Result<bool> {
        match self.map.entry(sigma) {
            Entry::Vacant(v) => {
                v.insert(fp);
                Ok(true)
            }
            Entry::Occupied(o) if *o.get() == fp => Ok(false),
            Entry::Occupied(_) => Err(Error::HashCollision(sigma)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pending {
    pub labels: Box<[u32]>,
    /// Inverse carried over by a rank-one update, if any.
    pub inverse: Option<Box<CertifiedInverse>>,
}

impl Pending {
    pub fn new(labels: Vec<u32>) -> Self {
        Pending {
            labels: labels.into_boxed_slice(),
            inverse: None,
        }
    }
}

/// Pending facets keyed by `σ`; pops the smallest key first.
#[derive(Default)]
pub struct Frontier {
    map: BTreeMap<u64, Pending>,
}

impl Frontier {
    pub fn push(&mut self, sigma: u64, p: Pending) -> Result<()> {
        match self.map.entry(sigma) {
            Entry::Vacant(v) => {
                v.insert(p);
                Ok(())
            }
            Entry::Occupied(o) if o.get().labels == p.labels => Ok(()),
            Entry::Occupied(_) => Err(Error::HashCollision(sigma)),
        }
    }

    pub fn pop(&mut self) -> Option<(u64, Pending)> {
        self.map.pop_first()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraversalOptions {
    pub rank1: bool,
    pub audit: bool,
}

/// A level-`n` quota facet as emitted by the traversal.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCell {
    pub labels: Vec<u32>,
    pub xi0: Vec<f64>,
    pub lambda0: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditSummary {
    pub facets: u64,
    pub max_balancing: f64,
    pub max_consistency: f64,
    pub infeasible: u64,
    /// Largest gap between a pivot's predicted constants and the materialised ones.
    pub max_update_gap: f64,
    pub rank1_updates: u64,
    pub rank1_fallbacks: u64,
    /// Max over updates of `max|B_rank1 − B_fresh| / (10 cond ε_M)`; at most 1 passes.
    pub rank1_worst_ratio: f64,
}

impl AuditSummary {
    pub fn merge(&mut self, o: &AuditSummary) {
        self.facets += o.facets;
        self.max_balancing = self.max_balancing.max(o.max_balancing);
        self.max_consistency = self.max_consistency.max(o.max_consistency);
        self.infeasible += o.infeasible;
        self.max_update_gap = self.max_update_gap.max(o.max_update_gap);
        self.rank1_updates += o.rank1_updates;
        self.rank1_fallbacks += o.rank1_fallbacks;
        self.rank1_worst_ratio = self.rank1_worst_ratio.max(o.rank1_worst_ratio);
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraversalStats {
    /// Expanded facets per level.
    pub v: Vec<u64>,
    pub visited: u64,
    pub cells: u64,
    pub audit: AuditSummary,
}

impl TraversalStats {
    pub fn new(n: usize) -> Self {
        TraversalStats {
            v: vec![0; n + 1],
            ..Default::default()
        }
    }

    pub fn merge(&mut self, o: &TraversalStats) {
        for (a, b) in self.v.iter_mut().zip(&o.v) {
            *a += b;
        }
        self.visited += o.visited;
        self.cells += o.cells;
        self.audit.merge(&o.audit);
    }
}

/// What expanding one facet produced.
pub struct Expansion {
    pub level: usize,
    pub cell: Option<RawCell>,
    pub next: Vec<Pending>,
}

/// Materialise a pending facet, emit it if it is a cell, and list its neighbours.
pub fn expand(
    ctx: &PivotContext,
    opts: &TraversalOptions,
    p: Pending,
    audit: &mut AuditSummary,
) -> Result<Expansion> {
    let labels = p.labels.into_vec();
    let (facet, updated) = match p.inverse {
        Some(inv) => match materialize_with(ctx, labels.clone(), *inv) {
            Ok(f) => (f, true),
            Err(e) if e.is_genericity() => {
                audit.rank1_fallbacks += 1;
                (materialize(ctx, labels)?, false)
            }
            Err(e) => return Err(e),
        },
        None => (materialize(ctx, labels)?, false),
    };
    let n = ctx.cay.n;
    if opts.audit {
        let a = audit_facet(ctx, &facet)?;
        audit.facets += 1;
        audit.max_balancing = audit.max_balancing.max(a.balancing);
        audit.max_consistency = audit.max_consistency.max(a.consistency);
        if !a.feasible {
            audit.infeasible += 1;
        }
    }
    let sh = shape(ctx, &facet)?;
    let cell = if facet.level == n && sh.quota {
        // cell constants come from a fresh inverse so they depend on the labels only
        let fresh;
        let f = if updated {
            fresh = materialize(ctx, facet.active.clone())?;
            &fresh
        } else {
            &facet
        };
        Some(RawCell {
            labels: f.active.clone(),
            xi0: f.xi0.clone(),
            lambda0: f.lambda0.clone(),
        })
    } else {
        None
    };
    let mut next = Vec::new();
    for step in neighbor_steps(ctx, &facet)? {
        let Step::Target(t) = step else { continue };
        let inverse = if opts.rank1 {
            match rank_one_successor(ctx, &facet, &t) {
                Ok(inv) => {
                    audit.rank1_updates += 1;
                    if opts.audit {
                        let fresh = materialize(ctx, t.labels.clone())?;
                        let gap = inv.b.max_abs_diff(fresh.b());
                        let bound = 10.0 * fresh.inverse.cond_estimate * EPS_M;
                        audit.rank1_worst_ratio = audit.rank1_worst_ratio.max(gap / bound);
                    }
                    Some(Box::new(inv))
                }
                Err(e) if e.is_genericity() => {
                    audit.rank1_fallbacks += 1;
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        if opts.audit {
            let fresh = materialize(ctx, t.labels.clone())?;
            let (lam, xi) = predicted_constants(&facet, &t);
            let scale = 1.0f64.max(xi.iter().chain(&lam).fold(0.0, |m, x| m.max(x.abs())));
            let gap = lam
                .iter()
                .zip(&fresh.lambda0)
                .chain(xi.iter().zip(&fresh.xi0))
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / scale;
            audit.max_update_gap = audit.max_update_gap.max(gap);
        }
        next.push(Pending {
            labels: t.labels.into_boxed_slice(),
            inverse,
        });
    }
    Ok(Expansion {
        level: facet.level,
        cell,
        next,
    })
}

/// Serial exploration from the start facet; every mixed cell goes to `sink`.
pub fn all_mixed_cells(
    ctx: &PivotContext,
    h: &HashCoeffs,
    opts: &TraversalOptions,
    sink: &mut dyn FnMut(RawCell),
) -> Result<TraversalStats> {
    let n = ctx.cay.n;
    let mut stats = TraversalStats::new(n);
    let start = start_facet(ctx)?;
    let mut frontier = Frontier::default();
    let mut visited = VisitedSet::default();
    frontier.push(h.sigma(&start.active), Pending::new(start.active))?;
    while let Some((sigma, p)) = frontier.pop() {
        if !visited.insert(sigma, fingerprint(&p.labels))? {
            continue;
        }
        let ex = expand(ctx, opts, p, &mut stats.audit)?;
        stats.v[ex.level] += 1;
        stats.visited += 1;
        if let Some(c) = ex.cell {
            stats.cells += 1;
            sink(c);
        }
        for q in ex.next {
            let s2 = h.sigma(&q.labels);
            if visited.contains(s2, fingerprint(&q.labels))? {
                continue;
            }
            frontier.push(s2, q)?;
        }
    }
    Ok(stats)
}
