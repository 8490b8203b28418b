#![allow(dead_code)]

use mixcell::generators::{generate, Family};
use mixcell::oracle::oracle_enumerate_cells;
use mixcell::{all_mixed_cells_full, Lifting, MixedCell, RunOptions, SupportSystem};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cyclic3() -> (SupportSystem, Lifting) {
    let e = |v: [i64; 3]| v.to_vec();
    let sys = SupportSystem::mixed(
        3,
        vec![
            vec![e([1, 0, 0]), e([0, 1, 0]), e([0, 0, 1])],
            vec![e([1, 1, 0]), e([1, 0, 1]), e([0, 1, 1])],
            vec![e([1, 1, 1]), e([0, 0, 0])],
        ],
    )
    .unwrap();
    let values = vec![
        0.0681718062929322,
        0.2764482146232536,
        0.4266688073141105,
        0.8654168322306781,
        0.6630347993316177,
        0.2369372029023467,
        0.6575801418616753,
        0.2139433513437121,
    ];
    (sys, Lifting { values })
}

pub const CYCLIC3_CELLS: [([&[u32]; 3], [f64; 3]); 2] = [
    (
        [&[0, 1], &[3, 5], &[6, 7]],
        [
            0.28794667050532442,
            0.49622307883564581,
            -0.34053295882300698,
        ],
    ),
    (
        [&[0, 2], &[4, 5], &[6, 7]],
        [
            0.17041246197535198,
            -0.25568513445391900,
            0.52890946299653028,
        ],
    ),
];

/// Random small system with random multiplicities and a uniform lifting.
pub fn random_instance(seed: u64) -> (SupportSystem, Lifting) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let s = rng.gen_range(1..=n);
    let mut mult = vec![1usize; s];
    for _ in s..n {
        mult[rng.gen_range(0..s)] += 1;
    }
    let mut grid: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..n {
        grid = grid
            .into_iter()
            .flat_map(|p| (0..=3).map(move |x| [p.clone(), vec![x]].concat()))
            .collect();
    }
    let supports: Vec<Vec<Vec<i64>>> = mult
        .iter()
        .map(|&m| {
            let k = rng.gen_range((m + 1).min(grid.len())..=6.min(grid.len()));
            grid.choose_multiple(&mut rng, k).cloned().collect()
        })
        .collect();
    let sys = SupportSystem::new(n, supports, mult).unwrap();
    let values = (0..sys.total_points()).map(|_| rng.gen::<f64>()).collect();
    (sys, Lifting { values })
}

pub fn key(cells: &[MixedCell]) -> Vec<(Vec<Vec<u32>>, u128)> {
    let mut k: Vec<_> = cells.iter().map(|c| (c.blocks.clone(), c.volume)).collect();
    k.sort();
    k
}

/// Engine and oracle disagree on `seed`, or agree.
pub fn oracle_equivalent(seed: u64, opts: &RunOptions) -> Result<(), String> {
    let (sys, lifting) = random_instance(seed);
    let opts = RunOptions {
        lifting: Some(lifting.clone()),
        ..opts.clone()
    };
    let r = all_mixed_cells_full(&sys, 0, &opts)
        .map_err(|e| format!("instance {seed}: engine: {e}"))?;
    let o = oracle_enumerate_cells(&sys, &lifting)
        .map_err(|e| format!("instance {seed}: oracle: {e}"))?;
    if r.mixed_volume != o.mixed_volume || key(&r.cells) != key(&o.cells) {
        return Err(format!(
            "instance {seed}: engine mv {} cells {}, oracle mv {} cells {}",
            r.mixed_volume,
            r.cells.len(),
            o.mixed_volume,
            o.cells.len()
        ));
    }
    Ok(())
}

pub fn invariance_suite() -> Vec<(&'static str, SupportSystem)> {
    vec![
        ("cyclic-7", generate(Family::Cyclic, 7).unwrap()),
        ("noon-7", generate(Family::Noon, 7).unwrap()),
        ("eco-10", generate(Family::Eco, 10).unwrap()),
        ("reimer-6", generate(Family::Reimer, 6).unwrap()),
        ("graphmodel-5", generate(Family::Graphmodel, 5).unwrap()),
    ]
}

pub fn label_sets(cells: &[MixedCell]) -> Vec<Vec<u32>> {
    let mut v: Vec<_> = cells.iter().map(|c| c.labels()).collect();
    v.sort();
    v
}
