//! Cayley system, lower facets and the pivot calculus.
//!
//! Row order of `C_act` for a level-`d` facet: the `s + d` active labels in
//! increasing order, then flag rows `Q_{d+1}..Q_n`. Flag `f` (0-based) thus
//! always sits at row `s + f`, and its right-hand side is `R^{n-f} r_f`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::hull::Skeletons;
use crate::linalg::{
    certify, lu_inverse, refine_report, residual_extended, sherman_morrison, CertifiedInverse,
    SquareMatrix, EPS, EPS_M,
};
use crate::rpoly::{cmp_coeffs, sign_of, RPoly};
use crate::support::{Lifting, Schedule, SupportSystem};

const NONE: u32 = u32::MAX;

/// Rows `[−e_i, a]` with right-hand sides `b(i, a)`.
#[derive(Clone, Debug)]
pub struct CayleySystem {
    pub n: usize,
    pub s: usize,
    pub offsets: Vec<usize>,
    pub block: Vec<u32>,
    pub b: Vec<f64>,
    coords: Vec<i64>,
    sp_off: Vec<usize>,
    sp_idx: Vec<u32>,
    sp_val: Vec<f64>,
    row_norm: Vec<f64>,
}

impl CayleySystem {
    pub fn new(sys: &SupportSystem, lifting: &Lifting) -> Result<Self> {
        let total = sys.total_points();
        if lifting.values.len() != total {
            return Err(Error::Input(format!(
                "lifting has {} values for {total} points",
                lifting.values.len()
            )));
        }
        if lifting.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite lifting value".into()));
        }
        let mut coords = Vec::with_capacity(total * sys.n);
        let mut sp_off = vec![0];
        let mut sp_idx = Vec::new();
        let mut sp_val = Vec::new();
        let mut row_norm = Vec::with_capacity(total);
        for p in sys.points() {
            coords.extend_from_slice(p);
            let mut nrm = 1.0;
            for (k, &x) in p.iter().enumerate() {
                if x != 0 {
                    sp_idx.push(k as u32);
                    sp_val.push(x as f64);
                    nrm += (x as f64).abs();
                }
            }
            sp_off.push(sp_idx.len());
            row_norm.push(nrm);
        }
        Ok(CayleySystem {
            n: sys.n,
            s: sys.s(),
            offsets: sys.offsets(),
            block: sys
                .block_of_labels()
                .into_iter()
                .map(|b| b as u32)
                .collect(),
            b: lifting.values.clone(),
            coords,
            sp_off,
            sp_idx,
            sp_val,
            row_norm,
        })
    }

    pub fn labels(&self) -> usize {
        self.block.len()
    }

    pub fn point(&self, l: u32) -> &[i64] {
        let l = l as usize;
        &self.coords[l * self.n..(l + 1) * self.n]
    }

    fn sparse(&self, l: u32) -> (&[u32], &[f64]) {
        let (a, b) = (self.sp_off[l as usize], self.sp_off[l as usize + 1]);
        (&self.sp_idx[a..b], &self.sp_val[a..b])
    }

    /// Dense row `[−e_i, a]`.
    pub fn row(&self, l: u32) -> Vec<f64> {
        let mut r = vec![0.0; self.s + self.n];
        r[self.block[l as usize] as usize] = -1.0;
        for (k, &x) in self.point(l).iter().enumerate() {
            r[self.s + k] = x as f64;
        }
        r
    }

    fn dot(&self, a: u32, v: &[f64]) -> f64 {
        let (ia, va) = self.sparse(a);
        ia.iter().zip(va).map(|(&k, &x)| x * v[k as usize]).sum()
    }
}

/// Affine flag at infinity: rows `Q_1..Q_n` and scales `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flag {
    pub q: SquareMatrix,
    pub r: Vec<f64>,
}

impl Flag {
    pub fn new(q: SquareMatrix) -> Self {
        let r = vec![1.0; q.n];
        Flag { q, r }
    }
}

/// Shared read-only data for pivoting.
#[derive(Clone, Copy)]
pub struct PivotContext<'a> {
    pub cay: &'a CayleySystem,
    pub flag: &'a Flag,
    pub schedule: &'a Schedule,
    /// `None` means every inactive point is a candidate.
    pub skeletons: Option<&'a Skeletons>,
    pub zero_tol: f64,
}

/// `2 (1 + max d_i)(n + s) ε`.
pub fn zero_tolerance(n: usize, s: usize, max_dim: usize) -> f64 {
    2.0 * (1 + max_dim) as f64 * (n + s) as f64 * EPS
}

/// The a-priori bound with `ε` replaced by the facet's own error level
/// `cond · ε_M`, which certification keeps at or below `ε`.
pub fn facet_zero_tol(ctx: &PivotContext, facet: &LowerFacet) -> f64 {
    ctx.zero_tol * (facet.inverse.cond_estimate * EPS_M / EPS).min(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerFacet {
    pub level: usize,
    pub active: Vec<u32>,
    pub inverse: CertifiedInverse,
    pub lambda0: Vec<f64>,
    pub xi0: Vec<f64>,
}

impl LowerFacet {
    pub fn b(&self) -> &SquareMatrix {
        &self.inverse.b
    }
}

/// Per-block position ranges of a sorted active list.
fn block_ranges(cay: &CayleySystem, active: &[u32]) -> Vec<(usize, usize)> {
    let mut r = vec![(0usize, 0usize); cay.s];
    let mut p = 0;
    for (i, slot) in r.iter_mut().enumerate() {
        let start = p;
        while p < active.len() && cay.block[active[p] as usize] as usize == i {
            p += 1;
        }
        *slot = (start, p);
    }
    r
}

/// Sparse product of `C_act` rows with `B`, as `‖I − C_act B‖∞`.
fn sparse_residual(ctx: &PivotContext, active: &[u32], b: &SquareMatrix) -> f64 {
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let nn = s + n;
    let d = active.len() - s;
    let mut row = vec![0.0; nn];
    let mut worst: f64 = 0.0;
    for p in 0..nn {
        row.iter_mut().for_each(|x| *x = 0.0);
        if p < s + d {
            let l = active[p];
            let i = ctx.cay.block[l as usize] as usize;
            for (x, &y) in row.iter_mut().zip(b.row(i)) {
                *x -= y;
            }
            let (idx, val) = ctx.cay.sparse(l);
            for (&k, &a) in idx.iter().zip(val) {
                for (x, &y) in row.iter_mut().zip(b.row(s + k as usize)) {
                    *x += a * y;
                }
            }
        } else {
            let f = p - s;
            for (k, &qk) in ctx.flag.q.row(f).iter().enumerate() {
                for (x, &y) in row.iter_mut().zip(b.row(s + k)) {
                    *x += qk * y;
                }
            }
        }
        row[p] -= 1.0;
        worst = worst.max(row.iter().map(|x| x.abs()).sum());
    }
    worst
}

fn act_norm(ctx: &PivotContext, active: &[u32]) -> f64 {
    let d = active.len() - ctx.cay.s;
    let cn = active
        .iter()
        .map(|&l| ctx.cay.row_norm[l as usize])
        .fold(0.0, f64::max);
    (d..ctx.cay.n)
        .map(|f| ctx.flag.q.row(f).iter().map(|x| x.abs()).sum::<f64>())
        .fold(cn, f64::max)
}

/// Dense `C_act` for a sorted active list.
pub fn active_matrix(ctx: &PivotContext, active: &[u32]) -> SquareMatrix {
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let d = active.len() - s;
    let mut rows: Vec<Vec<f64>> = active.iter().map(|&l| ctx.cay.row(l)).collect();
    for f in d..n {
        let mut r = vec![0.0; s + n];
        r[s..].copy_from_slice(ctx.flag.q.row(f));
        rows.push(r);
    }
    SquareMatrix::from_rows(&rows)
}

fn check_active(ctx: &PivotContext, active: &[u32]) -> Result<Vec<(usize, usize)>> {
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    if active.len() < s || active.len() > s + n {
        return Err(Error::Input(format!(
            "facet with {} active labels",
            active.len()
        )));
    }
    if active.windows(2).any(|w| w[0] >= w[1])
        || active.iter().any(|&l| l as usize >= ctx.cay.labels())
    {
        return Err(Error::Input(
            "active labels must be strictly increasing and in range".into(),
        ));
    }
    let ranges = block_ranges(ctx.cay, active);
    if ranges.iter().any(|(a, b)| a == b) {
        return Err(Error::Input("facet misses a block".into()));
    }
    Ok(ranges)
}

/// Builds `B = C_act^{-1}` from the inverse of the reduced `n × n` system and certifies it.
fn structured_inverse(
    ctx: &PivotContext,
    active: &[u32],
    ranges: &[(usize, usize)],
) -> Result<CertifiedInverse> {
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let nn = s + n;
    let d = active.len() - s;
    // reduced rows: non-base actives in order, then flags
    let mut m = SquareMatrix::zeros(n);
    let mut mrow = vec![usize::MAX; nn];
    let mut r = 0;
    for &(a, b) in ranges {
        let base = ctx.cay.point(active[a]);
        for p in a + 1..b {
            let pt = ctx.cay.point(active[p]);
            for k in 0..n {
                m.data[r * n + k] = (pt[k] - base[k]) as f64;
            }
            mrow[p] = r;
            r += 1;
        }
    }
    debug_assert_eq!(r, d);
    for f in d..n {
        m.data[r * n..(r + 1) * n].copy_from_slice(ctx.flag.q.row(f));
        mrow[s + f] = r;
        r += 1;
    }
    let minv = lu_inverse(&m)?;
    let mut b = SquareMatrix::zeros(nn);
    let mut xi = vec![0.0; n];
    let mut base_of = vec![usize::MAX; nn];
    for (i, &(a, _)) in ranges.iter().enumerate() {
        base_of[a] = i;
    }
    for j in 0..nn {
        xi.iter_mut().for_each(|x| *x = 0.0);
        if j < s + d && base_of[j] != usize::MAX {
            let (a, e) = ranges[base_of[j]];
            for p in a + 1..e {
                let c = mrow[p];
                for k in 0..n {
                    xi[k] -= minv.data[k * n + c];
                }
            }
        } else {
            let c = mrow[j];
            for k in 0..n {
                xi[k] = minv.data[k * n + c];
            }
        }
        for k in 0..n {
            b.data[(s + k) * nn + j] = xi[k];
        }
        for (i, &(a, _)) in ranges.iter().enumerate() {
            let v = ctx.cay.dot(active[a], &xi) - if j == a { 1.0 } else { 0.0 };
            b.data[i * nn + j] = v;
        }
    }
    let res = sparse_residual(ctx, active, &b);
    let cond = act_norm(ctx, active) * b.norm_inf();
    if res <= crate::linalg::accept_threshold(nn) && cond * EPS_M <= EPS {
        return Ok(CertifiedInverse {
            b,
            cond_estimate: cond,
            refined: false,
        });
    }
    certify(&active_matrix(ctx, active), b, res)
}

/// Constant part of the ansatz: `C_act (λ0, ξ0) = (b_act, 0)`.
fn ansatz(ctx: &PivotContext, active: &[u32], b: &SquareMatrix) -> (Vec<f64>, Vec<f64>) {
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let nn = s + n;
    let mut x = vec![0.0; nn];
    for (p, &l) in active.iter().enumerate() {
        let rhs = ctx.cay.b[l as usize];
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += b.data[r * nn + p] * rhs;
        }
    }
    let xi = x.split_off(s);
    (x, xi)
}

pub fn materialize(ctx: &PivotContext, active: Vec<u32>) -> Result<LowerFacet> {
    let ranges = check_active(ctx, &active)?;
    let inverse = structured_inverse(ctx, &active, &ranges)?;
    finish_facet(ctx, active, inverse)
}

fn finish_facet(
    ctx: &PivotContext,
    active: Vec<u32>,
    inverse: CertifiedInverse,
) -> Result<LowerFacet> {
    let (lambda0, xi0) = ansatz(ctx, &active, &inverse.b);
    Ok(LowerFacet {
        level: active.len() - ctx.cay.s,
        active,
        inverse,
        lambda0,
        xi0,
    })
}

/// Level-0 facet: per block, the lexicographic maximiser of `a·ξ(R) − b(i, a)`.
pub fn start_facet(ctx: &PivotContext) -> Result<LowerFacet> {
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let mut active = Vec::with_capacity(s);
    let mut best_key: Vec<f64> = Vec::new();
    let mut key = vec![0.0; n + 1];
    for i in 0..s {
        let mut best: Option<u32> = None;
        let mut tie = false;
        for l in ctx.cay.offsets[i]..ctx.cay.offsets[i + 1] {
            let l = l as u32;
            // key[n - f] holds the coefficient of R^{n-f}
            for f in 0..n {
                key[n - f] = ctx.flag.r[f] * ctx.cay.dot(l, ctx.flag.q.row(f));
            }
            key[0] = -ctx.cay.b[l as usize];
            match best {
                None => {
                    best = Some(l);
                    best_key = key.clone();
                }
                Some(_) => {
                    match cmp_coeffs(&key, &best_key, EPS) {
                        Ordering::Greater => {
                            best = Some(l);
                            best_key = key.clone();
                            tie = false;
                        }
                        Ordering::Equal => tie = true,
                        Ordering::Less => {}
                    }
                }
            }
        }
        if tie {
            return Err(Error::Genericity(format!(
                "tie for the start vertex of block {i}"
            )));
        }
        active.push(best.expect("non-empty block"));
    }
    materialize(ctx, active)
}

/// A neighbour found by a pivot, before materialisation.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotTarget {
    pub labels: Vec<u32>,
    pub entering: u32,
    /// Column of `B` (row of `C_act`) that leaves.
    pub drop_pos: usize,
    pub t0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Target(PivotTarget),
    Unbounded { drop_pos: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum PivotOutcome {
    Neighbor { facet: LowerFacet, entering: u32 },
    Unbounded,
    Ineligible,
}

/// Facet type relative to the schedule.
#[derive(Clone, Debug)]
pub struct FacetShape {
    pub level: usize,
    pub ranges: Vec<(usize, usize)>,
    pub quota: bool,
    /// Block whose constraints may be dropped within the level.
    pub q: Option<usize>,
}

pub fn shape(ctx: &PivotContext, facet: &LowerFacet) -> Result<FacetShape> {
    let ranges = block_ranges(ctx.cay, &facet.active);
    let d = facet.level;
    let ty: Vec<usize> = ranges.iter().map(|(a, b)| b - a - 1).collect();
    let quota = ty == ctx.schedule.m(d);
    let q = if d == 0 {
        None
    } else {
        let prev = ctx.schedule.m(d - 1);
        let over: Vec<usize> = (0..ctx.cay.s).filter(|&i| ty[i] == prev[i] + 1).collect();
        let valid = (0..ctx.cay.s).all(|i| ty[i] >= prev[i]) && over.len() == 1;
        if !valid {
            return Err(Error::Genericity(format!(
                "facet of type {ty:?} off schedule at level {d}"
            )));
        }
        Some(over[0])
    };
    Ok(FacetShape {
        level: d,
        ranges,
        quota,
        q,
    })
}

/// Candidate rows `w = [−e_i, a] B` over every column, plus the constant value.
struct Candidates {
    labels: Vec<u32>,
    blocks: Vec<u32>,
    /// Only non-adjacent active of block `q`, or `NONE`.
    excl: Vec<u32>,
    val0: Vec<f64>,
    /// `w` restricted to the columns in `cols`, row-major.
    w: Vec<f64>,
    cols: Vec<usize>,
    colpos: Vec<usize>,
}

impl Candidates {
    fn collect(
        ctx: &PivotContext,
        facet: &LowerFacet,
        sh: &FacetShape,
        want_q_partial: bool,
    ) -> Self {
        let cay = ctx.cay;
        let nn = cay.s + cay.n;
        let mut c = Candidates::empty(nn);
        for (i, &(a, e)) in sh.ranges.iter().enumerate() {
            let act = &facet.active[a..e];
            let lo = cay.offsets[i] as u32;
            let hi = cay.offsets[i + 1] as u32;
            match ctx.skeletons {
                None => {
                    for l in lo..hi {
                        if act.binary_search(&l).is_err() {
                            c.push_label(l, i, NONE);
                        }
                    }
                }
                Some(sk) if want_q_partial && sh.q == Some(i) => {
                    for l in lo..hi {
                        if act.binary_search(&l).is_ok() {
                            continue;
                        }
                        let mut miss = NONE;
                        let mut bad = false;
                        for &x in act {
                            if !sk.adjacent(l, x) {
                                if miss != NONE {
                                    bad = true;
                                    break;
                                }
                                miss = x;
                            }
                        }
                        if !bad {
                            c.push_label(l, i, miss);
                        }
                    }
                }
                Some(sk) => {
                    for &l in sk.neighbors(act[0]) {
                        if act.binary_search(&l).is_ok() {
                            continue;
                        }
                        if act[1..].iter().all(|&x| sk.adjacent(l, x)) {
                            c.push_label(l, i, NONE);
                        }
                    }
                }
            }
        }
        // the ratio tests read the drop columns of block q and the flag columns
        let mut cols: Vec<usize> =
            sh.q.map_or(0..0, |q| sh.ranges[q].0..sh.ranges[q].1)
                .collect();
        cols.extend(cay.s + sh.level..nn);
        c.fill(ctx, facet, sh, cols);
        c
    }

    fn empty(nn: usize) -> Self {
        Candidates {
            labels: Vec::new(),
            blocks: Vec::new(),
            excl: Vec::new(),
            val0: Vec::new(),
            w: Vec::new(),
            cols: Vec::new(),
            colpos: vec![usize::MAX; nn],
        }
    }

    fn push_label(&mut self, l: u32, i: usize, excl: u32) {
        self.labels.push(l);
        self.blocks.push(i as u32);
        self.excl.push(excl);
    }

    fn fill(&mut self, ctx: &PivotContext, facet: &LowerFacet, sh: &FacetShape, cols: Vec<usize>) {
        let cay = ctx.cay;
        let (s, n) = (cay.s, cay.n);
        let b = facet.b();
        for (p, &col) in cols.iter().enumerate() {
            self.colpos[col] = p;
        }
        let width = cols.len();
        self.w = Vec::with_capacity(self.labels.len() * width);
        self.val0 = Vec::with_capacity(self.labels.len());
        let mut diff_idx: Vec<u32> = Vec::with_capacity(2 * n);
        let mut diff_val: Vec<f64> = Vec::with_capacity(2 * n);
        for (&l, &i) in self.labels.iter().zip(&self.blocks) {
            let base_pos = sh.ranges[i as usize].0;
            let base = facet.active[base_pos];
            // (a − a_base) · ξ, exact integer difference first
            diff_idx.clear();
            diff_val.clear();
            let (pa, pb) = (cay.point(l), cay.point(base));
            for k in 0..n {
                let dk = pa[k] - pb[k];
                if dk != 0 {
                    diff_idx.push(k as u32);
                    diff_val.push(dk as f64);
                }
            }
            let mut v0 = cay.b[base as usize] - cay.b[l as usize];
            for (&k, &x) in diff_idx.iter().zip(&diff_val) {
                v0 += x * facet.xi0[k as usize];
            }
            self.val0.push(v0);
            for &col in &cols {
                let mut o = if col == base_pos { 1.0 } else { 0.0 };
                for (&k, &x) in diff_idx.iter().zip(&diff_val) {
                    o += x * b.data[(s + k as usize) * b.n + col];
                }
                self.w.push(o);
            }
        }
        self.cols = cols;
    }

    #[inline]
    fn w(&self, c: usize, col: usize) -> f64 {
        self.w[c * self.cols.len() + self.colpos[col]]
    }
}

struct Pick {
    cand: usize,
    t: Vec<f64>,
    eq_tol: f64,
}

/// Minimal positive step among the admitted candidates, for dropping column `col`.
fn select(
    ctx: &PivotContext,
    cands: &Candidates,
    level: usize,
    col: usize,
    ascent: bool,
    zt: f64,
    admit: impl Fn(usize) -> bool,
) -> Result<Option<Pick>> {
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let deg = n - level;
    let mut t = vec![0.0; deg + 1];
    let mut best: Option<Pick> = None;
    let mut tie = false;
    let mut first_sign = 0i8;
    for c in 0..cands.labels.len() {
        if !admit(c) {
            continue;
        }
        let den = cands.w(c, col);
        if den.abs() <= zt {
            continue;
        }
        let v0 = cands.val0[c];
        t[0] = if v0.abs() <= zt { 0.0 } else { v0 / den };
        for l in 1..=deg {
            let f = n - l;
            let num = cands.w(c, s + f) * ctx.flag.r[f];
            t[l] = if num.abs() <= zt { 0.0 } else { num / den };
        }
        let sg = sign_of(&t);
        if ascent {
            if sg == 0 {
                continue;
            }
            if first_sign == 0 {
                first_sign = sg;
            } else if sg != first_sign {
                return Err(Error::Genericity("mixed step signs on ascent".into()));
            }
            if sg < 0 {
                t.iter_mut().for_each(|x| *x = -*x);
            }
        } else if sg <= 0 {
            continue;
        }
        let eq_tol = zt / den.abs();
        match &best {
            None => {
                best = Some(Pick {
                    cand: c,
                    t: t.clone(),
                    eq_tol,
                });
            }
            Some(b) => match cmp_coeffs(&t, &b.t, eq_tol.max(b.eq_tol)) {
                Ordering::Less => {
                    best = Some(Pick {
                        cand: c,
                        t: t.clone(),
                        eq_tol,
                    });
                    tie = false;
                }
                Ordering::Equal => tie = true,
                Ordering::Greater => {}
            },
        }
    }
    if tie {
        return Err(Error::Genericity("tie for the minimal step".into()));
    }
    if ascent && first_sign < 0 {
        if let Some(b) = best.as_mut() {
            b.t.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(best)
}

fn within_target(facet: &LowerFacet, drop_pos: usize, entering: u32, t0: f64) -> PivotTarget {
    let mut labels: Vec<u32> = facet
        .active
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != drop_pos)
        .map(|(_, &l)| l)
        .collect();
    let at = labels.binary_search(&entering).unwrap_err();
    labels.insert(at, entering);
    PivotTarget {
        labels,
        entering,
        drop_pos,
        t0,
    }
}

fn up_target(facet: &LowerFacet, s: usize, entering: u32, t0: f64) -> PivotTarget {
    let mut labels = facet.active.clone();
    let at = labels.binary_search(&entering).unwrap_err();
    labels.insert(at, entering);
    PivotTarget {
        labels,
        entering,
        drop_pos: s + facet.level,
        t0,
    }
}

/// Every pivot out of `facet`: within-level drops of block `q`, then the ascent.
pub fn neighbor_steps(ctx: &PivotContext, facet: &LowerFacet) -> Result<Vec<Step>> {
    let sh = shape(ctx, facet)?;
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let up = sh.quota && sh.level < n;
    let mut out = Vec::new();
    if sh.q.is_none() && !up {
        return Ok(out);
    }
    let cands = Candidates::collect(ctx, facet, &sh, sh.q.is_some());
    let zt = facet_zero_tol(ctx, facet);
    if let Some(q) = sh.q {
        let (a, e) = sh.ranges[q];
        for j in a..e {
            let dropped = facet.active[j];
            let pick = select(ctx, &cands, sh.level, j, false, zt, |c| {
                cands.blocks[c] as usize != q || cands.excl[c] == NONE || cands.excl[c] == dropped
            })?;
            out.push(match pick {
                Some(p) => Step::Target(within_target(facet, j, cands.labels[p.cand], p.t[0])),
                None => Step::Unbounded { drop_pos: j },
            });
        }
    }
    if up {
        let col = s + sh.level;
        let pick = select(ctx, &cands, sh.level, col, true, zt, |c| {
            cands.excl[c] == NONE
        })?;
        out.push(match pick {
            Some(p) => Step::Target(up_target(facet, s, cands.labels[p.cand], p.t[0])),
            None => Step::Unbounded { drop_pos: col },
        });
    }
    Ok(out)
}

fn outcome(ctx: &PivotContext, step: Step) -> Result<PivotOutcome> {
    Ok(match step {
        Step::Target(t) => {
            let entering = t.entering;
            PivotOutcome::Neighbor {
                facet: materialize(ctx, t.labels)?,
                entering,
            }
        }
        Step::Unbounded { .. } => PivotOutcome::Unbounded,
    })
}

pub fn neighbors(ctx: &PivotContext, facet: &LowerFacet) -> Result<Vec<PivotOutcome>> {
    neighbor_steps(ctx, facet)?
        .into_iter()
        .map(|s| outcome(ctx, s))
        .collect()
}

/// Step for dropping active label `j` within the level.
pub fn within_step(ctx: &PivotContext, facet: &LowerFacet, j: u32) -> Result<Option<Step>> {
    let sh = shape(ctx, facet)?;
    let Some(q) = sh.q else { return Ok(None) };
    let (a, e) = sh.ranges[q];
    let Some(pos) = (a..e).find(|&p| facet.active[p] == j) else {
        return Ok(None);
    };
    let cands = Candidates::collect(ctx, facet, &sh, true);
    let pick = select(
        ctx,
        &cands,
        sh.level,
        pos,
        false,
        facet_zero_tol(ctx, facet),
        |c| cands.blocks[c] as usize != q || cands.excl[c] == NONE || cands.excl[c] == j,
    )?;
    Ok(Some(match pick {
        Some(p) => Step::Target(within_target(facet, pos, cands.labels[p.cand], p.t[0])),
        None => Step::Unbounded { drop_pos: pos },
    }))
}

pub fn pivot_within(ctx: &PivotContext, facet: &LowerFacet, j: u32) -> Result<PivotOutcome> {
    match within_step(ctx, facet, j)? {
        None => Ok(PivotOutcome::Ineligible),
        Some(step) => outcome(ctx, step),
    }
}

pub fn up_step(ctx: &PivotContext, facet: &LowerFacet) -> Result<Option<Step>> {
    let sh = shape(ctx, facet)?;
    if !sh.quota || sh.level >= ctx.cay.n {
        return Ok(None);
    }
    let cands = Candidates::collect(ctx, facet, &sh, false);
    let col = ctx.cay.s + sh.level;
    let pick = select(
        ctx,
        &cands,
        sh.level,
        col,
        true,
        facet_zero_tol(ctx, facet),
        |_| true,
    )?;
    Ok(Some(match pick {
        Some(p) => Step::Target(up_target(facet, ctx.cay.s, cands.labels[p.cand], p.t[0])),
        None => Step::Unbounded { drop_pos: col },
    }))
}

pub fn pivot_up(ctx: &PivotContext, facet: &LowerFacet) -> Result<PivotOutcome> {
    match up_step(ctx, facet)? {
        None => Ok(PivotOutcome::Ineligible),
        Some(step) => outcome(ctx, step),
    }
}

/// Scores for dropping row `drop_pos`; `None` marks an ineligible candidate.
pub fn pivot_scores(
    ctx: &PivotContext,
    facet: &LowerFacet,
    drop_pos: usize,
    candidates: &[u32],
) -> Result<Vec<(u32, Option<RPoly>)>> {
    let sh = shape(ctx, facet)?;
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let mut cands = Candidates::empty(s + n);
    for &l in candidates {
        if facet.active.binary_search(&l).is_ok() {
            continue;
        }
        cands.push_label(l, ctx.cay.block[l as usize] as usize, NONE);
    }
    let mut cols = vec![drop_pos];
    cols.extend((s + facet.level..s + n).filter(|&c| c != drop_pos));
    cands.fill(ctx, facet, &sh, cols);
    let deg = n - facet.level;
    let zt = facet_zero_tol(ctx, facet);
    Ok((0..cands.labels.len())
        .map(|c| {
            let den = cands.w(c, drop_pos);
            if den.abs() <= zt {
                return (cands.labels[c], None);
            }
            let mut nums = vec![cands.val0[c]];
            for l in 1..=deg {
                let f = n - l;
                nums.push(cands.w(c, s + f) * ctx.flag.r[f]);
            }
            (cands.labels[c], Some(RPoly::ratio(&nums, den, zt, zt)))
        })
        .collect())
}

/// Downward edge test: dropping `j` has no candidates and leaves the flag half-space.
pub fn pivot_down_check(ctx: &PivotContext, facet: &LowerFacet, j: u32) -> Result<bool> {
    if facet.level == 0 {
        return Ok(false);
    }
    let Some(step) = within_step(ctx, facet, j)? else {
        return Ok(false);
    };
    let Step::Unbounded { drop_pos } = step else {
        return Ok(false);
    };
    let s = ctx.cay.s;
    let f = facet.level - 1;
    let b = facet.b();
    let v: f64 = (0..ctx.cay.n)
        .map(|k| ctx.flag.q.get(f, k) * b.get(s + k, drop_pos))
        .sum();
    Ok(v < -facet_zero_tol(ctx, facet))
}

/// Inverse of the successor's `C_act` by a rank-one update of the parent's.
pub fn rank_one_successor(
    ctx: &PivotContext,
    parent: &LowerFacet,
    t: &PivotTarget,
) -> Result<CertifiedInverse> {
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let nn = s + n;
    let c_old = active_matrix(ctx, &parent.active);
    let new_row = ctx.cay.row(t.entering);
    let mut u = vec![0.0; nn];
    u[t.drop_pos] = 1.0;
    let v: Vec<f64> = c_old
        .row(t.drop_pos)
        .iter()
        .zip(&new_row)
        .map(|(a, b)| a - b)
        .collect();
    let bu = sherman_morrison(parent.b(), &u, &v)?;
    // rows of the updated matrix in parent order; map each to its sorted position
    let mut pos = vec![0usize; nn];
    let mut old_labels: Vec<Option<u32>> = parent.active.iter().map(|&l| Some(l)).collect();
    old_labels.resize(nn, None);
    old_labels[t.drop_pos] = Some(t.entering);
    for (r, lab) in old_labels.iter().enumerate() {
        pos[r] = match lab {
            Some(l) => t.labels.binary_search(l).expect("label of successor"),
            None => r,
        };
    }
    let mut b = SquareMatrix::zeros(nn);
    for i in 0..nn {
        for r in 0..nn {
            b.data[i * nn + pos[r]] = bu.data[i * nn + r];
        }
    }
    // ‖I − C B‖ ≤ 5 ‖C‖ ε_M keeps B within 5 cond ε_M of the exact inverse entrywise,
    // so updates cannot drift along a chain of pivots
    let c = active_matrix(ctx, &t.labels);
    let tight = 5.0 * c.norm_inf() * EPS_M;
    let res = residual_extended(&c, &b).norm_inf();
    if res <= tight {
        return certify(&c, b, res);
    }
    let (b, res) = refine_report(&c, &b);
    if res > tight {
        return Err(Error::IllConditioned(res));
    }
    certify(&c, b, res)
}

pub fn materialize_with(
    ctx: &PivotContext,
    active: Vec<u32>,
    inverse: CertifiedInverse,
) -> Result<LowerFacet> {
    check_active(ctx, &active)?;
    finish_facet(ctx, active, inverse)
}

/// Runtime checks on a visited facet.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FacetAudit {
    /// `‖Σ_{j∈J_q} Δ_jξ‖∞ / max_j ‖Δ_jξ‖∞`.
    pub balancing: f64,
    /// `‖C_act x0 − (b_act, 0)‖∞`.
    pub consistency: f64,
    pub feasible: bool,
}

pub fn audit_facet(ctx: &PivotContext, facet: &LowerFacet) -> Result<FacetAudit> {
    let sh = shape(ctx, facet)?;
    let (s, n) = (ctx.cay.s, ctx.cay.n);
    let nn = s + n;
    let b = facet.b();
    let mut balancing = 0.0;
    if let Some(q) = sh.q {
        let (a, e) = sh.ranges[q];
        let mut sum = vec![0.0; n];
        let mut scale: f64 = 0.0;
        for j in a..e {
            let mut m: f64 = 0.0;
            for k in 0..n {
                let x = -b.get(s + k, j);
                sum[k] += x;
                m = m.max(x.abs());
            }
            scale = scale.max(m);
        }
        let num = sum.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        balancing = if scale > 0.0 { num / scale } else { 0.0 };
    }
    let mut x = facet.lambda0.clone();
    x.extend_from_slice(&facet.xi0);
    let c = active_matrix(ctx, &facet.active);
    let cx = c.mul_vec(&x);
    let mut consistency: f64 = 0.0;
    for (p, v) in cx.iter().enumerate() {
        let rhs = if p < facet.active.len() {
            ctx.cay.b[facet.active[p] as usize]
        } else {
            0.0
        };
        consistency = consistency.max((v - rhs).abs());
    }
    let mut feasible = true;
    let zt = facet_zero_tol(ctx, facet);
    let deg = n - facet.level;
    let mut val = vec![0.0; deg + 1];
    for l in 0..ctx.cay.labels() as u32 {
        if facet.active.binary_search(&l).is_ok() {
            continue;
        }
        let row = ctx.cay.row(l);
        val[0] = row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - ctx.cay.b[l as usize];
        for li in 1..=deg {
            let f = n - li;
            let col = s + f;
            val[li] = ctx.flag.r[f] * (0..nn).map(|r| row[r] * b.get(r, col)).sum::<f64>();
        }
        for v in val.iter_mut() {
            if v.abs() <= zt {
                *v = 0.0;
            }
        }
        if sign_of(&val) >= 0 {
            feasible = false;
            break;
        }
    }
    Ok(FacetAudit {
        balancing,
        consistency,
        feasible,
    })
}

/// Predicted constant part after a pivot: `x0 − t0 · B e_j`.
pub fn predicted_constants(facet: &LowerFacet, t: &PivotTarget) -> (Vec<f64>, Vec<f64>) {
    let b = facet.b();
    let s = facet.lambda0.len();
    let lam = facet
        .lambda0
        .iter()
        .enumerate()
        .map(|(i, &x)| x - t.t0 * b.get(i, t.drop_pos))
        .collect();
    let xi = facet
        .xi0
        .iter()
        .enumerate()
        .map(|(k, &x)| x - t.t0 * b.get(s + k, t.drop_pos))
        .collect();
    (lam, xi)
}
