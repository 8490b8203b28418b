use mixcell::generators::{generate, Family};
use mixcell::{all_mixed_cells_full, RunOptions};

#[test]
fn worker_count_does_not_change_output() {
    let sys = generate(Family::Cyclic, 10).unwrap();
    let run = |workers, batch| {
        let r = all_mixed_cells_full(
            &sys,
            3,
            &RunOptions {
                workers,
                batch,
                ..Default::default()
            },
        )
        .unwrap();
        (r.cells_file().to_text(), r.stats.visited)
    };
    let (one, visited) = run(1, 64);
    assert_eq!(one.lines().nth(4), Some("scaled_mixed_volume 35940"));
    for (workers, batch) in [(2, 64), (4, 64), (8, 64), (4, 1)] {
        let (text, v) = run(workers, batch);
        assert_eq!(text, one, "workers={workers} batch={batch}");
        assert_eq!(v, visited);
    }
}
