//! Lower hulls of the lifted supports: triangulation, edge skeleton, volume.

use rand::Rng;

use crate::error::Result;
use crate::lattice::{abs_det, hermite_basis};
use crate::linalg::sample_orthogonal;
use crate::pivot::{zero_tolerance, CayleySystem, Flag, PivotContext};
use crate::support::{differences, schedule_from_keys, Lifting, Point, SupportSystem};
use crate::traversal::{all_mixed_cells, HashCoeffs, TraversalOptions};

/// Lower-hull edges of every lifted support, by global label.
#[derive(Clone, Debug, Default)]
pub struct Skeletons {
    nbrs: Vec<Vec<u32>>,
    block_start: Vec<u32>,
    block_len: Vec<u32>,
    block_of: Vec<u32>,
    bits: Vec<Vec<u64>>,
    /// Max vertex degree per support.
    pub degree: Vec<usize>,
}

impl Skeletons {
    pub fn new(sys: &SupportSystem, edges: &[Vec<(u32, u32)>]) -> Self {
        let off = sys.offsets();
        let total = sys.total_points();
        let mut nbrs = vec![Vec::new(); total];
        let mut bits = Vec::with_capacity(sys.s());
        let mut degree = Vec::with_capacity(sys.s());
        for (i, es) in edges.iter().enumerate() {
            let len = off[i + 1] - off[i];
            let mut bm = vec![0u64; (len * len).div_ceil(64)];
            for &(a, b) in es {
                let (la, lb) = (a as usize - off[i], b as usize - off[i]);
                for (x, y) in [(la, lb), (lb, la)] {
                    let bit = x * len + y;
                    if bm[bit / 64] & (1 << (bit % 64)) == 0 {
                        bm[bit / 64] |= 1 << (bit % 64);
                        nbrs[off[i] + x].push((off[i] + y) as u32);
                    }
                }
            }
            bits.push(bm);
            degree.push(
                (off[i]..off[i + 1])
                    .map(|l| nbrs[l].len())
                    .max()
                    .unwrap_or(0),
            );
        }
        for v in nbrs.iter_mut() {
            v.sort_unstable();
        }
        Skeletons {
            nbrs,
            block_start: off[..sys.s()].iter().map(|&x| x as u32).collect(),
            block_len: (0..sys.s()).map(|i| (off[i + 1] - off[i]) as u32).collect(),
            block_of: sys
                .block_of_labels()
                .into_iter()
                .map(|b| b as u32)
                .collect(),
            bits,
            degree,
        }
    }

    pub fn neighbors(&self, l: u32) -> &[u32] {
        &self.nbrs[l as usize]
    }

    /// Labels of one block joined by a lower-hull edge.
    #[inline]
    pub fn adjacent(&self, a: u32, b: u32) -> bool {
        let i = self.block_of[a as usize] as usize;
        if self.block_of[b as usize] as usize != i {
            return false;
        }
        let len = self.block_len[i] as usize;
        let (x, y) = (
            (a - self.block_start[i]) as usize,
            (b - self.block_start[i]) as usize,
        );
        let bit = x * len + y;
        self.bits[i][bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn edge_count(&self) -> usize {
        self.nbrs.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Result of the lower-hull pass on one support.
#[derive(Clone, Debug, PartialEq)]
pub struct HullPass {
    pub dim: usize,
    /// Simplices of the induced triangulation, by global label.
    pub simplices: Vec<Vec<u32>>,
    pub edges: Vec<(u32, u32)>,
    pub max_degree: usize,
    /// Normalized volume against the integer lattice of the affine hull.
    pub volume: u128,
    /// Labels on the lower hull.
    pub hull_points: Vec<u32>,
}

/// Lower hull of `{(a, b(a))}` for the points `pts` with first label `offset`.
pub fn lower_hull_pass<R: Rng + ?Sized>(
    pts: &[Point],
    offset: u32,
    values: &[f64],
    rng: &mut R,
) -> Result<HullPass> {
    let n = pts[0].len();
    let basis = hermite_basis(&differences(pts, &pts[0]), n)?;
    let d = basis.rank();
    if d == 0 {
        return Ok(HullPass {
            dim: 0,
            simplices: vec![vec![offset]],
            edges: Vec::new(),
            max_degree: 0,
            volume: 1,
            hull_points: vec![offset],
        });
    }
    let local: Vec<Point> = differences(pts, &pts[0])
        .iter()
        .map(|v| basis.coords(v))
        .collect::<Result<_>>()?;
    let sub = SupportSystem::new(d, vec![local], vec![d])?;
    let lifting = Lifting {
        values: values.to_vec(),
    };
    let cay = CayleySystem::new(&sub, &lifting)?;
    let flag = Flag::new(sample_orthogonal(rng, d));
    let schedule = schedule_from_keys(&sub, &[d], &[0]);
    let h = HashCoeffs::sample(rng, d + 1);
    let ctx = PivotContext {
        cay: &cay,
        flag: &flag,
        schedule: &schedule,
        skeletons: None,
        zero_tol: zero_tolerance(d, 1, d),
    };
    let mut simplices = Vec::new();
    all_mixed_cells(&ctx, &h, &TraversalOptions::default(), &mut |c| {
        simplices.push(c.labels)
    })?;
    let sat = u128::try_from(basis.saturation_index()?).unwrap_or(u128::MAX);
    let mut volume = 0u128;
    let mut edges = Vec::new();
    let mut on_hull = vec![false; pts.len()];
    for s in simplices.iter_mut() {
        let vs: Vec<&Point> = s.iter().map(|&l| &sub.supports[0][l as usize]).collect();
        let rows: Vec<Vec<i64>> = vs[1..]
            .iter()
            .map(|p| p.iter().zip(vs[0]).map(|(x, y)| x - y).collect())
            .collect();
        volume += u128::try_from(&abs_det(&rows)).unwrap_or(u128::MAX);
        for (a, &x) in s.iter().enumerate() {
            on_hull[x as usize] = true;
            for &y in &s[a + 1..] {
                edges.push((x + offset, y + offset));
            }
        }
        s.iter_mut().for_each(|l| *l += offset);
    }
    volume = volume.saturating_mul(sat);
    edges.sort_unstable();
    edges.dedup();
    let mut deg = vec![0usize; pts.len()];
    for &(a, b) in &edges {
        deg[(a - offset) as usize] += 1;
        deg[(b - offset) as usize] += 1;
    }
    Ok(HullPass {
        dim: d,
        simplices,
        max_degree: deg.into_iter().max().unwrap_or(0),
        edges,
        volume,
        hull_points: (0..pts.len())
            .filter(|&i| on_hull[i])
            .map(|i| i as u32 + offset)
            .collect(),
    })
}

/// Lower-hull passes over all supports of `sys`.
pub fn hull_passes<R: Rng + ?Sized>(
    sys: &SupportSystem,
    lifting: &Lifting,
    rng: &mut R,
) -> Result<Vec<HullPass>> {
    let off = sys.offsets();
    sys.supports
        .iter()
        .enumerate()
        .map(|(i, a)| lower_hull_pass(a, off[i] as u32, &lifting.values[off[i]..off[i + 1]], rng))
        .collect()
}

/// `V_i` for every support, under a lifting drawn from `seed`.
pub fn support_volumes(sys: &SupportSystem, seed: u64) -> Result<Vec<u128>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let lifting = Lifting {
        values: (0..sys.total_points()).map(|_| rng.gen()).collect(),
    };
    Ok(hull_passes(sys, &lifting, &mut rng)?
        .into_iter()
        .map(|h| h.volume)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_points_on_a_line() {
        let pts = vec![vec![0], vec![1], vec![3]];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = lower_hull_pass(&pts, 0, &[0.0, 0.9, 0.3], &mut rng).unwrap();
        assert_eq!(h.hull_points, vec![0, 2]);
        assert_eq!(h.simplices, vec![vec![0, 2]]);
        assert_eq!(h.volume, 3);
        assert_eq!(h.max_degree, 1);
    }

    #[test]
    fn unit_square() {
        let pts = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]];
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = (0..4).map(|_| rng.gen()).collect();
            let h = lower_hull_pass(&pts, 10, &b, &mut rng).unwrap();
            assert_eq!(h.simplices.len(), 2);
            assert_eq!(h.volume, 2);
            assert_eq!(h.max_degree, 3);
            assert_eq!(h.edges.len(), 5);
            // the diagonal is the lower one of the two
            let diag_03 = b[0] + b[3] < b[1] + b[2];
            assert_eq!(h.edges.contains(&(10, 13)), diag_03);
        }
    }

    #[test]
    fn single_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = lower_hull_pass(&[vec![4, 4]], 7, &[0.5], &mut rng).unwrap();
        assert_eq!((h.dim, h.volume, h.max_degree), (0, 1, 0));
        assert!(h.edges.is_empty());
        assert_eq!(h.hull_points, vec![7]);
    }

    #[test]
    fn lower_dimensional_support() {
        // segment of lattice length 2 in Z^3
        let pts = vec![vec![0, 0, 0], vec![1, 1, 0], vec![2, 2, 0]];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = lower_hull_pass(&pts, 0, &[0.1, 0.05, 0.2], &mut rng).unwrap();
        assert_eq!(h.dim, 1);
        assert_eq!(h.volume, 2);
        assert_eq!(h.simplices, vec![vec![0, 1], vec![1, 2]]);
    }
}
