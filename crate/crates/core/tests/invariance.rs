mod common;

use common::{invariance_suite, label_sets};
use mixcell::driver::lifting_from_seed;
use mixcell::{all_mixed_cells_full, RunOptions};

#[test]
fn mixed_volume_does_not_depend_on_lifting() {
    for (name, sys) in invariance_suite() {
        let mvs: Vec<u128> = (0..10)
            .map(|seed| {
                all_mixed_cells_full(&sys, seed, &RunOptions::default())
                    .unwrap()
                    .mixed_volume
            })
            .collect();
        assert!(mvs.iter().all(|&v| v == mvs[0]), "{name}: {mvs:?}");
    }
}

#[test]
fn cells_do_not_depend_on_flag() {
    for (name, sys) in invariance_suite() {
        let lifting = lifting_from_seed(sys.total_points(), 7);
        let runs: Vec<Vec<Vec<u32>>> = (0..5)
            .map(|f| {
                let opts = RunOptions {
                    flag_seed: Some(100 + f),
                    lifting: Some(lifting.clone()),
                    ..Default::default()
                };
                label_sets(&all_mixed_cells_full(&sys, 7, &opts).unwrap().cells)
            })
            .collect();
        assert!(runs.iter().all(|r| r == &runs[0]), "{name}");
    }
}
