mod common;

use common::{oracle_equivalent, random_instance};
use mixcell::{all_mixed_cells_full, RunOptions};

const INSTANCES: u64 = 200;

#[test]
fn random_instances_match_oracle() {
    let failures: Vec<String> = (0..INSTANCES)
        .filter_map(|seed| oracle_equivalent(seed, &RunOptions::default()).err())
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn random_instances_match_oracle_without_reduction() {
    let opts = RunOptions {
        hnf: false,
        ..Default::default()
    };
    let failures: Vec<String> = (0..INSTANCES)
        .filter_map(|seed| oracle_equivalent(seed, &opts).err())
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn naive_neighbours_agree() {
    let opts = RunOptions {
        naive: true,
        ..Default::default()
    };
    let failures: Vec<String> = (0..INSTANCES)
        .filter_map(|seed| oracle_equivalent(seed, &opts).err())
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn balancing_holds_on_every_facet() {
    for seed in 0..INSTANCES {
        let (sys, lifting) = random_instance(seed);
        let opts = RunOptions {
            audit: true,
            lifting: Some(lifting),
            ..Default::default()
        };
        let r = all_mixed_cells_full(&sys, 0, &opts).unwrap();
        let a = &r.stats.audit;
        assert!(
            a.max_balancing <= 1e-8,
            "instance {seed}: balancing {}",
            a.max_balancing
        );
        assert_eq!(a.infeasible, 0, "instance {seed}");
        assert!(
            a.max_update_gap <= 1e-8,
            "instance {seed}: update gap {}",
            a.max_update_gap
        );
    }
}

#[test]
fn rank_one_updates_match_fresh_inverses() {
    for seed in 0..INSTANCES {
        let (sys, lifting) = random_instance(seed);
        let base = RunOptions {
            lifting: Some(lifting),
            ..Default::default()
        };
        let fresh = all_mixed_cells_full(&sys, 0, &base).unwrap();
        let r1 = all_mixed_cells_full(
            &sys,
            0,
            &RunOptions {
                rank1: true,
                audit: true,
                ..base
            },
        )
        .unwrap();
        assert!(
            r1.stats.audit.rank1_worst_ratio <= 1.0,
            "instance {seed}: ratio {}",
            r1.stats.audit.rank1_worst_ratio
        );
        assert_eq!(fresh.cells_file(), r1.cells_file(), "instance {seed}");
    }
}
