//! One full run: lifting, lattice reduction, lower hulls, traversal, cell output.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cells::{CellsFile, MixedCell};
use crate::error::{Error, Result};
use crate::hull::{hull_passes, Skeletons};
use crate::lattice::hermite_basis;
use crate::linalg::sample_orthogonal;
use crate::parallel::{run_workers, InProcessTransport};
use crate::pivot::{zero_tolerance, CayleySystem, Flag, PivotContext};
use crate::support::{
    cell_normalized_volume, differences, hermite_reduce, schedule_from_keys, validate_system,
    Lifting, Point, SupportSystem,
};
use crate::traversal::{all_mixed_cells, HashCoeffs, RawCell, TraversalOptions, TraversalStats};

const LIFT: u64 = 1;
const HASH: u64 = 2;
const FLAG: u64 = 3;
const HULL: u64 = 4;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub hnf: bool,
    pub rank1: bool,
    /// Ignore the lower-hull skeletons and try every inactive point.
    pub naive: bool,
    /// Further attempts after a genericity failure. Each draws a fresh
    /// lifting unless one is given, and always a fresh flag and hash.
    pub retries: u32,
    pub audit: bool,
    /// Separate seed for the flag; the lifting seed is used otherwise.
    pub flag_seed: Option<u64>,
    /// Fixed lifting, kept across retries.
    pub lifting: Option<Lifting>,
    pub workers: usize,
    /// Facets each worker expands per round.
    pub batch: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            hnf: true,
            rank1: false,
            naive: false,
            retries: 3,
            audit: false,
            flag_seed: None,
            lifting: None,
            workers: 1,
            batch: 64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    /// Seed the lifting was drawn from (differs from the requested one after a retry).
    pub seed: u64,
    pub attempts: u32,
    pub n: usize,
    pub s: usize,
    pub lifting: Lifting,
    pub index: u128,
    pub reduced_mixed_volume: u128,
    pub mixed_volume: u128,
    pub cells: Vec<MixedCell>,
    pub stats: TraversalStats,
    /// `E_i`, `V_i` and `dim conv A_i` per support.
    pub max_degree: Vec<usize>,
    pub volumes: Vec<u128>,
    pub dims: Vec<usize>,
    pub total_points: usize,
    pub t: f64,
    pub t_prime: f64,
    pub wall: Duration,
}

impl RunReport {
    pub fn cells_file(&self) -> CellsFile {
        CellsFile {
            seed: self.seed,
            n: self.n,
            s: self.s,
            index: self.index,
            mixed_volume: self.mixed_volume,
            cells: self.cells.clone(),
        }
    }

    pub fn sum_e(&self) -> usize {
        self.max_degree.iter().sum()
    }

    /// `key=value` lines for `--stats`.
    pub fn stats_lines(&self) -> Vec<String> {
        let join = |v: Vec<String>| v.join(",");
        vec![
            format!("n={}", self.n),
            format!("points={}", self.total_points),
            format!(
                "E={}",
                join(self.max_degree.iter().map(|x| x.to_string()).collect())
            ),
            format!("sum_E={}", self.sum_e()),
            format!(
                "V={}",
                join(self.volumes.iter().map(|x| x.to_string()).collect())
            ),
            format!(
                "v={}",
                join(self.stats.v.iter().map(|x| x.to_string()).collect())
            ),
            format!("visited={}", self.stats.visited),
            format!("cells={}", self.cells.len()),
            format!("T={:.3e}", self.t),
            format!("T_prime={:.3e}", self.t_prime),
            format!("index={}", self.index),
            format!("reduced_mixed_volume={}", self.reduced_mixed_volume),
            format!("mixed_volume={}", self.mixed_volume),
            format!("seed={}", self.seed),
            format!("attempts={}", self.attempts),
            format!("wall_s={:.3}", self.wall.as_secs_f64()),
        ]
    }
}

fn stream(seed: u64, s: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(s);
    r
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Lifting seed of retry number `attempt`.
pub fn attempt_seed(seed: u64, attempt: u32) -> u64 {
    if attempt == 0 {
        seed
    } else {
        splitmix(seed ^ splitmix(attempt as u64))
    }
}

/// Uniform `[0, 1)` lifting for `labels` points.
pub fn lifting_from_seed(labels: usize, seed: u64) -> Lifting {
    let mut rng = stream(seed, LIFT);
    Lifting {
        values: (0..labels).map(|_| rng.gen()).collect(),
    }
}

/// `(T, T')` with natural logs guarded below by `e`.
pub fn compute_t_stats(
    v: &[u64],
    max_degree: &[usize],
    volumes: &[u128],
    total_points: usize,
    n: usize,
) -> (f64, f64) {
    let ln = |x: f64| x.max(std::f64::consts::E).ln();
    let nn = (n * n) as f64;
    let sv: f64 = v.iter().skip(2).map(|&x| x as f64).sum();
    let se: f64 = max_degree.iter().sum::<usize>() as f64;
    let t = sv * (nn * se + ln(sv));
    let mv = volumes.iter().copied().max().unwrap_or(0) as f64;
    let tp = mv * (nn * total_points as f64 + ln(mv));
    (t, tp)
}

struct Prepared {
    sys: SupportSystem,
    translations: Option<Vec<Point>>,
    basis_rows: Option<Vec<Vec<i128>>>,
    index: u128,
}

fn prepare(sys: &SupportSystem, hnf: bool) -> Result<Option<Prepared>> {
    validate_system(sys)?;
    if hnf {
        return match hermite_reduce(sys) {
            Ok((red, lr)) => Ok(Some(Prepared {
                sys: red,
                translations: Some(lr.translations),
                basis_rows: Some(lr.basis.rows),
                index: lr.index,
            })),
            Err(Error::RankDeficient { .. }) => Ok(None),
            Err(e) => Err(e),
        };
    }
    let diffs: Vec<Point> = sys
        .supports
        .iter()
        .flat_map(|a| differences(a, &a[0]))
        .collect();
    if hermite_basis(&diffs, sys.n)?.rank() < sys.n {
        return Ok(None);
    }
    Ok(Some(Prepared {
        sys: sys.clone(),
        translations: None,
        basis_rows: None,
        index: 1,
    }))
}

struct Attempt {
    raw: Vec<RawCell>,
    stats: TraversalStats,
    max_degree: Vec<usize>,
    volumes: Vec<u128>,
    dims: Vec<usize>,
}

fn attempt(
    sys: &SupportSystem,
    lifting: &Lifting,
    seed: u64,
    flag_seed: u64,
    hash_round: u64,
    opts: &RunOptions,
) -> Result<Attempt> {
    let (n, s) = (sys.n, sys.s());
    let passes = hull_passes(sys, lifting, &mut stream(seed, HULL))?;
    let dims: Vec<usize> = passes.iter().map(|p| p.dim).collect();
    let volumes: Vec<u128> = passes.iter().map(|p| p.volume).collect();
    let max_degree: Vec<usize> = passes.iter().map(|p| p.max_degree).collect();
    let edges: Vec<Vec<(u32, u32)>> = passes.into_iter().map(|p| p.edges).collect();
    let skeletons = Skeletons::new(sys, &edges);
    let schedule = schedule_from_keys(sys, &dims, &volumes);
    let cay = CayleySystem::new(sys, lifting)?;
    let flag = Flag::new(sample_orthogonal(
        &mut stream(flag_seed, FLAG),
        n,
    ));
    let h = HashCoeffs::sample(&mut stream(seed, HASH + 16 * hash_round), n + s);
    let ctx = PivotContext {
        cay: &cay,
        flag: &flag,
        schedule: &schedule,
        skeletons: (!opts.naive).then_some(&skeletons),
        zero_tol: zero_tolerance(n, s, dims.iter().copied().max().unwrap_or(0)),
    };
    let topts = TraversalOptions {
        rank1: opts.rank1,
        audit: opts.audit,
    };
    let (raw, stats) = if opts.workers <= 1 {
        let mut raw = Vec::new();
        let stats = all_mixed_cells(&ctx, &h, &topts, &mut |c| raw.push(c))?;
        raw.sort_by(|a, b| a.labels.cmp(&b.labels));
        (raw, stats)
    } else {
        let transport = InProcessTransport::new(opts.workers);
        run_workers(&ctx, &h, &topts, opts.workers, opts.batch, &transport)?
    };
    Ok(Attempt {
        raw,
        stats,
        max_degree,
        volumes,
        dims,
    })
}

/// Back substitution with the upper-triangular lattice basis: `Bas ξ = ξ_red`.
fn unreduce_xi(rows: &[Vec<i128>], xi_red: &[f64]) -> Vec<f64> {
    let n = xi_red.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut r = xi_red[i];
        for j in i + 1..n {
            r -= rows[i][j] as f64 * x[j];
        }
        x[i] = r / rows[i][i] as f64;
    }
    x
}

fn block_points<'a>(sys: &'a SupportSystem, blocks: &[Vec<u32>]) -> Vec<Vec<&'a Point>> {
    blocks
        .iter()
        .map(|b| b.iter().map(|&l| sys.point(l as usize)).collect())
        .collect()
}

fn to_cells(
    orig: &SupportSystem,
    red: &Prepared,
    raw: Vec<RawCell>,
) -> Result<(Vec<MixedCell>, u128)> {
    let off = orig.offsets();
    let mut reduced_total = 0u128;
    let mut cells = Vec::with_capacity(raw.len());
    for c in raw {
        let mut blocks = vec![Vec::new(); orig.s()];
        for &l in &c.labels {
            let i = off.partition_point(|&o| o <= l as usize) - 1;
            blocks[i].push(l);
        }
        reduced_total += cell_normalized_volume(&block_points(&red.sys, &blocks))?;
        let volume = cell_normalized_volume(&block_points(orig, &blocks))?;
        let (xi0, lambda0) = match (&red.basis_rows, &red.translations) {
            (Some(rows), Some(tr)) => {
                let xi = unreduce_xi(rows, &c.xi0);
                let lam = c
                    .lambda0
                    .iter()
                    .zip(tr)
                    .map(|(l, t)| l + t.iter().zip(&xi).map(|(&a, x)| a as f64 * x).sum::<f64>())
                    .collect();
                (xi, lam)
            }
            _ => (c.xi0, c.lambda0),
        };
        cells.push(MixedCell {
            blocks,
            volume,
            xi0,
            lambda0,
        });
    }
    Ok((cells, reduced_total))
}

/// Draws the random data from `seed` and returns every mixed cell.
pub fn all_mixed_cells_full(
    sys: &SupportSystem,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunReport> {
    let started = Instant::now();
    let (n, s) = (sys.n, sys.s());
    let total_points = sys.total_points();
    if let Some(l) = &opts.lifting {
        if l.values.len() != total_points {
            return Err(Error::Input(format!(
                "lifting has {} values for {} points",
                l.values.len(),
                total_points
            )));
        }
    }
    let Some(prep) = prepare(sys, opts.hnf)? else {
        let lifting = opts
            .lifting
            .clone()
            .unwrap_or_else(|| lifting_from_seed(total_points, seed));
        return Ok(RunReport {
            seed,
            attempts: 0,
            n,
            s,
            lifting,
            index: 0,
            reduced_mixed_volume: 0,
            mixed_volume: 0,
            cells: Vec::new(),
            stats: TraversalStats::new(n),
            max_degree: Vec::new(),
            volumes: Vec::new(),
            dims: sys.dims()?,
            total_points,
            t: 0.0,
            t_prime: 0.0,
            wall: started.elapsed(),
        });
    };
    let mut last_err = None;
    for k in 0..=opts.retries {
        // an explicit lifting stays fixed; only flag, hash and hull streams move
        let eff = attempt_seed(seed, k);
        let flag_seed = opts.flag_seed.map_or(eff, |f| attempt_seed(f, k));
        let lifting = opts
            .lifting
            .clone()
            .unwrap_or_else(|| lifting_from_seed(total_points, eff));
        let mut res = attempt(&prep.sys, &lifting, eff, flag_seed, 0, opts);
        if matches!(res, Err(Error::HashCollision(_))) {
            res = attempt(&prep.sys, &lifting, eff, flag_seed, 1, opts);
        }
        let a = match res {
            Ok(a) => a,
            Err(e) if e.is_genericity() => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let (cells, reduced) = match to_cells(sys, &prep, a.raw) {
            Ok(x) => x,
            Err(e) if e.is_genericity() => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mixed_volume: u128 = cells.iter().map(|c| c.volume).sum();
        debug_assert_eq!(mixed_volume, reduced * prep.index);
        let (t, t_prime) = compute_t_stats(&a.stats.v, &a.max_degree, &a.volumes, total_points, n);
        return Ok(RunReport {
            seed: eff,
            attempts: k + 1,
            n,
            s,
            lifting,
            index: prep.index,
            reduced_mixed_volume: reduced,
            mixed_volume,
            cells,
            stats: a.stats,
            max_degree: a.max_degree,
            volumes: a.volumes,
            dims: a.dims,
            total_points,
            t,
            t_prime,
            wall: started.elapsed(),
        });
    }
    Err(last_err.unwrap_or_else(|| Error::Genericity("no attempt made".into())))
}
