mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_dilate, brute_erode, noisy_map, random_grid, PLUS};
use tmrrt::gridmap::{dilate_free, erode_free, postprocess_merged, CellState, StructuringElement, POSTPROCESS_ITERATIONS};

#[test]
fn erode_dilate_postprocess_match_brute_force_on_500_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let plus = StructuringElement::ellipse3();
    let square = StructuringElement::square3();
    for case in 0..500 {
        let g = random_grid(&mut rng, 16);
        let iters = case % 4;
        assert_eq!(erode_free(&g, &plus, iters), brute_erode(&g, &PLUS, iters), "erode, case {case}");
        assert_eq!(dilate_free(&g, &plus, iters), brute_dilate(&g, &PLUS, iters), "dilate, case {case}");
        assert_eq!(
            erode_free(&g, &square, 1),
            brute_erode(&g, square.offsets(), 1),
            "square erode, case {case}"
        );
        let expected = brute_dilate(&brute_erode(&g, &PLUS, POSTPROCESS_ITERATIONS), &PLUS, POSTPROCESS_ITERATIONS);
        assert_eq!(postprocess_merged(&g), expected, "postprocess, case {case}");
    }
}

#[test]
fn postprocess_strips_thin_leaks_from_noisy_map() {
    let (g, room) = noisy_map();
    let out = postprocess_merged(&g);
    for (i, c) in out.cells().iter().enumerate() {
        if *c == CellState::Free {
            assert!(room[i], "free cell {:?} outside the room survived", out.cell_of(i));
        }
        if g.cells()[i] == CellState::Occupied {
            assert_eq!(*c, CellState::Occupied);
        }
    }
    // the room body itself stays free
    let centre = out.index_of(tmrrt::gridmap::CellIndex::new(30, 30));
    assert_eq!(out.cells()[centre], CellState::Free);
    let kept = out.count(CellState::Free) as f64;
    let before = room.iter().filter(|r| **r).count() as f64;
    assert!(kept / before > 0.9, "postprocess kept only {kept} of {before} room cells");
}
