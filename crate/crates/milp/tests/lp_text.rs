mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ruc_milp::*;

fn examples() -> Vec<LinearProgram> {
    let mut knap = LinearProgram::new(Sense::Maximize).with_name("knapsack");
    let a = knap.add_binary("a", 5.0);
    let b = knap.add_binary("b", 4.0);
    knap.add_row("weight", vec![(a, 3.0), (b, 2.0)], RowSense::Le, 4.0);

    let mut root = LinearProgram::new(Sense::Minimize).with_name("root");
    let a = root.add_binary("a", 1.0);
    let b = root.add_binary("b", 2.0);
    root.add_row("cover", vec![(a, 1.0), (b, 1.0)], RowSense::Ge, 1.0);

    let mut mixed = LinearProgram::new(Sense::Minimize).with_name("mixed");
    let x = mixed.add_var("flow", f64::NEG_INFINITY, f64::INFINITY, -0.1);
    let z = mixed.add_binary("open", 7.25);
    mixed.add_row("link", vec![(x, 1.0), (z, -1e4)], RowSense::Le, 0.0);
    mixed.add_row("demand", vec![(x, 1.0)], RowSense::Eq, 3.5e-7);
    vec![knap, root, mixed]
}

#[test]
fn round_trip_reproduces_examples() {
    for lp in examples() {
        let text = write_lp_text(&lp);
        let back = parse_lp_text(&text).unwrap();
        assert_eq!(back, lp);
        assert_eq!(write_lp_text(&back), text);
    }
}

#[test]
fn text_is_stable() {
    let lp = &examples()[0];
    let text = write_lp_text(lp);
    assert_eq!(
        text,
        "\\ Problem: knapsack\nMaximize\n obj: + 5 a + 4 b\nSubject To\n weight: + 3 a + 2 b <= 4\nBounds\n 0 <= a <= 1\n 0 <= b <= 1\nBinaries\n a\n b\nEnd\n"
    );
}

#[test]
fn malformed_text_names_line() {
    let err = parse_lp_text("Minimize\n obj: + 1 x\nSubject To\n c1: + 1 x ?? 3\nBounds\n 0 <= x <= 1\nEnd\n").unwrap_err();
    assert!(matches!(err, MilpError::Parse { line: 4, .. }));
}

proptest! {
    #[test]
    fn random_programs_round_trip(seed in 0u64..10_000, nb in 0usize..4, nc in 1usize..5, m in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = support::random_milp(&mut rng, nb, nc, m);
        let back = parse_lp_text(&write_lp_text(&lp)).unwrap();
        prop_assert_eq!(back, lp);
    }
}
