use mixcell::lattice::{abs_det, hermite_basis};
use mixcell::support::schedule_from_keys;
use mixcell::{all_mixed_cells_full, CellsFile, RunOptions, SupportSystem};
use num_bigint::BigInt;
use proptest::prelude::*;

fn mult_and_keys() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<u128>)> {
    (1usize..7).prop_flat_map(|s| {
        (
            prop::collection::vec(1usize..4, s),
            prop::collection::vec(0usize..5, s),
            prop::collection::vec(0u128..20, s),
        )
    })
}

proptest! {
    #[test]
    fn schedule_grows_one_block_per_level((mult, dims, vols) in mult_and_keys()) {
        let n: usize = mult.iter().sum();
        let supports = mult.iter().map(|_| vec![vec![0i64; n]]).collect();
        let sys = SupportSystem::new(n, supports, mult.clone()).unwrap();
        let sch = schedule_from_keys(&sys, &dims, &vols);
        prop_assert!(sch.check_invariants(&mult));
        for w in sch.order.windows(2) {
            prop_assert!((dims[w[0]], vols[w[0]], w[0]) <= (dims[w[1]], vols[w[1]], w[1]));
        }
        for d in 1..=n {
            let q = sch.q(d);
            prop_assert_eq!(sch.m(d)[q], sch.m(d - 1)[q] + 1);
        }
    }

    #[test]
    fn hermite_coordinates_roundtrip(vecs in prop::collection::vec(prop::collection::vec(-6i64..7, 3), 1..6)) {
        let b = hermite_basis(&vecs, 3).unwrap();
        for v in &vecs {
            let c = b.coords(v).unwrap();
            prop_assert_eq!(&b.combine(&c).unwrap(), v);
        }
        for (r, &p) in b.rows.iter().zip(&b.pivots) {
            prop_assert!(r[p] > 0);
        }
    }

    #[test]
    fn square_index_is_determinant(vecs in prop::collection::vec(prop::collection::vec(-6i64..7, 3), 3)) {
        let det = abs_det(&vecs);
        let b = hermite_basis(&vecs, 3).unwrap();
        if det != BigInt::from(0) {
            prop_assert_eq!(BigInt::from(b.index()), det);
        } else {
            prop_assert!(b.rank() < 3);
        }
    }
}

#[test]
fn cells_text_roundtrip() {
    let sys = mixcell::generators::generate(mixcell::generators::Family::Cyclic, 5).unwrap();
    let f = all_mixed_cells_full(&sys, 9, &RunOptions::default())
        .unwrap()
        .cells_file();
    assert_eq!(CellsFile::parse(&f.to_text()).unwrap(), f);
}
