use proptest::prelude::*;

use super::*;
use crate::instances;
use crate::space::{Metric, PointRecord};

/// Nearest-other distance within `p` by scanning; infinite for a lone point.
fn oracle_local_scale(space: &SpaceInstance, x: usize, p: &[usize]) -> f64 {
    p.iter()
        .filter(|&&y| y != x)
        .map(|&y| space.dist(x, y))
        .fold(f64::INFINITY, f64::min)
}

/// Derived-set membership by scanning: a neighbour within the fixed scale,
/// or a nearest neighbour packed more than `m` times more tightly.
fn oracle_limit_point(space: &SpaceInstance, x: usize, p: &[usize], policy: ScalePolicy) -> bool {
    let lx = oracle_local_scale(space, x, p);
    match policy {
        ScalePolicy::Fixed(s) => lx < s,
        ScalePolicy::Adaptive(m) => {
            lx.is_finite()
                && lx > 0.0
                && p.iter()
                    .filter(|&&y| y != x && space.dist(x, y) == lx)
                    .any(|&y| m * oracle_local_scale(space, y, p) < lx)
        }
    }
}

/// Literal pointwise definition with plain loops and a pairwise gap scan.
fn oracle_step(
    space: &SpaceInstance,
    kind: DerivationKind,
    f: &[f64],
    eps: f64,
    p: &[usize],
    policy: ScalePolicy,
) -> Vec<usize> {
    p.iter()
        .copied()
        .filter(|&x| {
            if !oracle_limit_point(space, x, p, policy) {
                return false;
            }
            let radius = match policy {
                ScalePolicy::Fixed(s) => s,
                ScalePolicy::Adaptive(m) => {
                    let ls = p
                        .iter()
                        .filter(|&&y| y != x)
                        .map(|&y| space.dist(x, y))
                        .fold(f64::INFINITY, f64::min);
                    if !ls.is_finite() {
                        return false;
                    }
                    m * ls
                }
            };
            let ball: Vec<usize> = p
                .iter()
                .copied()
                .filter(|&y| space.dist(x, y) < radius)
                .collect();
            match kind {
                DerivationKind::D => ball
                    .iter()
                    .any(|&a| ball.iter().any(|&b| (f[a] - f[b]).abs() >= eps)),
                DerivationKind::G => ball.iter().any(|&b| (f[x] - f[b]).abs() >= eps),
            }
        })
        .collect()
}

fn oracle_trace(
    space: &SpaceInstance,
    f: &[f64],
    eps: f64,
    p: &[usize],
    policy: ScalePolicy,
) -> (Vec<Vec<usize>>, bool) {
    let mut levels = vec![p.to_vec()];
    loop {
        let cur = levels.last().unwrap().clone();
        if cur.is_empty() {
            return (levels, true);
        }
        let next = oracle_step(space, DerivationKind::D, f, eps, &cur, policy);
        if next == cur {
            return (levels, false);
        }
        levels.push(next);
    }
}

fn line_space(coords: &[f64]) -> SpaceInstance {
    let points = (0..coords.len())
        .map(|id| PointRecord { id, label: None })
        .collect();
    let metric = Metric::euclidean(coords.iter().map(|&c| vec![c]).collect()).unwrap();
    SpaceInstance::new("line", 1e-3, points, metric).unwrap()
}

#[test]
fn oscillation_examples() {
    let space = instances::sequence_instance(4).unwrap();
    let c = ScalarField::constant(space.all(), 2.5).unwrap();
    assert_eq!(osc_on_set(&c, &space.all()).unwrap(), 0.0);
    let f = ScalarField::from_pairs(&space, [(0, 0.0), (1, 0.3), (2, 1.0)]).unwrap();
    let a = SubsetMask::from_ids(&space, [0, 1, 2]).unwrap();
    assert_eq!(osc_on_set(&f, &a).unwrap(), 1.0);
    assert_eq!(
        osc_on_set(&f, &SubsetMask::from_ids(&space, [1]).unwrap()).unwrap(),
        0.0
    );
    assert!(osc_on_set(&f, &space.all()).is_err());
}

#[test]
fn osc_at_point_on_the_sequence_fixture() {
    let space = instances::sequence_instance(10).unwrap();
    let ind = instances::indicator(&space, 0).unwrap();
    assert_eq!(
        osc_at_point(&space, &ind, 0, &space.all(), 0.15).unwrap(),
        1.0
    );
    assert_eq!(
        osc_at_point(&space, &ind, 3, &space.all(), 0.01).unwrap(),
        0.0
    );
    let only_zero = SubsetMask::from_ids(&space, [0]).unwrap();
    assert_eq!(
        osc_at_point(&space, &ind, 5, &only_zero, 0.01).unwrap(),
        0.0
    );
    assert!(osc_at_point(&space, &ind, 0, &space.all(), 0.0).is_err());
}

#[test]
fn ex1_function_is_locally_constant_on_y_at_small_scale() {
    let inst = instances::generate("cantor:8").unwrap();
    let (space, y, f) = (
        &inst.space,
        inst.subset("Y").unwrap(),
        inst.field("f").unwrap(),
    );
    // Head 1010...1 of length 7 followed by zeros.
    let head: Vec<u8> = (0..7).map(|i| if i % 2 == 0 { 1 } else { 0 }).collect();
    let p = instances::CantorPoint::new(&head, 0).unwrap();
    let x = space
        .metric()
        .cantor_points()
        .unwrap()
        .iter()
        .position(|q| *q == p)
        .unwrap();
    assert_eq!(
        osc_at_point(space, f, x, y, space.resolution()).unwrap(),
        0.0
    );
    // A wider ball sees different block parities.
    assert!(osc_at_point(space, f, x, y, 0.3).unwrap() > 0.0);
}

#[test]
fn d_step_examples() {
    let space = instances::sequence_instance(10).unwrap();
    let all = space.all();
    let c = ScalarField::constant(all.clone(), 1.0).unwrap();
    assert!(d_step(&space, &c, 0.1, &all, ScalePolicy::adaptive())
        .unwrap()
        .is_empty());

    let ind = instances::indicator(&space, 0).unwrap();
    let got = d_step(&space, &ind, 0.5, &all, ScalePolicy::adaptive()).unwrap();
    let expected = oracle_step(
        &space,
        DerivationKind::D,
        ind.raw(),
        0.5,
        &all.ids(),
        ScalePolicy::adaptive(),
    );
    assert_eq!(got.ids(), expected);
    // The far point 1 sees 0 inside its ball but is not a limit point.
    assert_eq!(got.ids(), vec![0]);

    assert!(d_step(&space, &ind, 2.5, &all, ScalePolicy::adaptive())
        .unwrap()
        .is_empty());
}

#[test]
fn g_step_examples() {
    let space = instances::sequence_instance(10).unwrap();
    let all = space.all();
    let ind = instances::indicator(&space, 0).unwrap();
    let g = g_step(&space, &ind, 0.5, &all, ScalePolicy::adaptive()).unwrap();
    let d = d_step(&space, &ind, 0.5, &all, ScalePolicy::adaptive()).unwrap();
    assert!(g.is_subset(&d).unwrap());

    // Single outlier at 0.5 among evenly spaced points. Under a fixed scale
    // it and its close neighbours qualify; the adaptive policy finds no limit
    // points on an even grid.
    let coords: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
    let line = line_space(&coords);
    let f = ScalarField::from_fn(line.all(), |x| if x == 5 { 1.0 } else { 0.0 }).unwrap();
    let fixed = ScalePolicy::Fixed(0.15);
    let g = g_step(&line, &f, 0.5, &line.all(), fixed).unwrap();
    let expected = oracle_step(
        &line,
        DerivationKind::G,
        f.raw(),
        0.5,
        &line.all().ids(),
        fixed,
    );
    assert_eq!(g.ids(), expected);
    assert_eq!(g.ids(), vec![4, 5, 6]);
    assert!(g_step(&line, &f, 0.5, &line.all(), ScalePolicy::adaptive())
        .unwrap()
        .is_empty());
}

#[test]
fn iterate_examples() {
    let space = instances::sequence_instance(10).unwrap();
    let all = space.all();
    let c = ScalarField::constant(all.clone(), 0.0).unwrap();
    let t = iterate(
        &space,
        DerivationKind::D,
        &c,
        0.5,
        &all,
        ScalePolicy::adaptive(),
        None,
    )
    .unwrap();
    assert_eq!(t.terminal, TraceTerminal::Emptied(1));
    assert_eq!(t.index(), IndexValue::Finite(1));

    // The indicator of the limit point: the oracle decides the trace.
    let ind = instances::indicator(&space, 0).unwrap();
    let t = iterate(
        &space,
        DerivationKind::D,
        &ind,
        0.5,
        &all,
        ScalePolicy::adaptive(),
        None,
    )
    .unwrap();
    let (levels, emptied) =
        oracle_trace(&space, ind.raw(), 0.5, &all.ids(), ScalePolicy::adaptive());
    assert_eq!(
        t.levels.iter().map(SubsetMask::ids).collect::<Vec<_>>(),
        levels
    );
    assert!(emptied);
    assert_eq!(t.terminal, TraceTerminal::Emptied(2));
    assert_eq!(t.level_sizes(), vec![11, 1, 0]);

    // Two interleaved grids closer than the fixed scale never thin out.
    let coords: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
    let line = line_space(&coords);
    let f = ScalarField::from_fn(line.all(), |x| (x % 2) as f64).unwrap();
    let t = iterate(
        &line,
        DerivationKind::D,
        &f,
        0.5,
        &line.all(),
        ScalePolicy::Fixed(0.2),
        None,
    )
    .unwrap();
    assert_eq!(t.terminal, TraceTerminal::Saturated(0));
    assert_eq!(t.index(), IndexValue::Saturated);

    // An even grid has no adaptive limit points at all.
    let t = iterate(
        &line,
        DerivationKind::D,
        &f,
        0.5,
        &line.all(),
        ScalePolicy::adaptive(),
        Some(1),
    )
    .unwrap();
    assert_eq!(t.terminal, TraceTerminal::Emptied(1));
    let t = iterate(
        &line,
        DerivationKind::D,
        &f,
        0.5,
        &line.all(),
        ScalePolicy::Fixed(0.2),
        Some(1),
    )
    .unwrap();
    assert_eq!(t.terminal, TraceTerminal::Saturated(0));
}

#[test]
fn index_profile_examples() {
    let inst = instances::generate("ordinal:1").unwrap();
    let space = &inst.space;
    let c = ScalarField::constant(space.all(), 3.0).unwrap();
    let prof = index_profile(
        space,
        &c,
        &space.all(),
        ScalePolicy::adaptive(),
        &dyadic_grid(),
    )
    .unwrap();
    assert!(prof
        .entries
        .iter()
        .all(|e| e.index == IndexValue::Finite(1)));

    let ind = inst.field("indicator").unwrap();
    let prof = index_profile(space, ind, &space.all(), ScalePolicy::adaptive(), &[0.5]).unwrap();
    assert_eq!(prof.entries[0].index, IndexValue::Finite(2));
    assert_eq!(prof.max_finite(), Some(2));

    assert!(index_profile(space, ind, &space.all(), ScalePolicy::adaptive(), &[]).is_err());
    assert!(index_profile(
        space,
        ind,
        &space.all(),
        ScalePolicy::adaptive(),
        &[0.1, 0.2]
    )
    .is_err());
}

#[test]
fn union_law_fails_on_the_boundary_witness_configuration() {
    // y = 0 sees its only witness w = 0.5 inside Q; z is far away.
    let line = line_space(&[0.0, 0.5, 10.0]);
    let f = ScalarField::from_fn(line.all(), |x| if x == 1 { 1.0 } else { 0.0 }).unwrap();
    let zero = ScalarField::constant(line.all(), 0.0).unwrap();
    let p = SubsetMask::from_ids(&line, [0, 2]).unwrap();
    let q = SubsetMask::from_ids(&line, [1]).unwrap();
    let report = kl_inclusion_check(
        &line,
        &f,
        &zero,
        0.5,
        &line.all(),
        ScalePolicy::Fixed(0.6),
        3,
        Some((&p, &q)),
    )
    .unwrap();
    assert!(report.violations_of(Law::UnionSplit) >= 1);
    assert_eq!(report.hard_violations(), 0);
}

#[test]
fn zero_summand_reduces_the_sum_law_to_antitonicity() {
    let inst = instances::generate("sequence:10").unwrap();
    let f = inst.field("f").unwrap();
    let zero = ScalarField::constant(inst.space.all(), 0.0).unwrap();
    let report = kl_inclusion_check(
        &inst.space,
        f,
        &zero,
        0.5,
        &inst.space.all(),
        ScalePolicy::adaptive(),
        4,
        None,
    )
    .unwrap();
    assert_eq!(report.violations_of(Law::SumSplit), 0);
}

/// Seeded field with values on the 1/1024 lattice so sums are exact.
fn lattice_field(space: &SpaceInstance, seed: u64) -> ScalarField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    ScalarField::from_fn(space.all(), |_| {
        rng.gen_range(-1024i32..=1024) as f64 / 1024.0
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn steps_match_the_oracle(seed in 0u64..10_000, n in 2usize..60, eps_k in 1u32..8, adaptive in any::<bool>()) {
        let space = instances::random_instance(seed, n, 2).unwrap();
        let f = lattice_field(&space, seed + 1);
        let eps = eps_k as f64 / 8.0;
        let policy = if adaptive { ScalePolicy::adaptive() } else { ScalePolicy::Fixed(0.2) };
        for kind in [DerivationKind::D, DerivationKind::G] {
            let got = step(&space, kind, &f, eps, &space.all(), policy).unwrap();
            prop_assert_eq!(got.ids(), oracle_step(&space, kind, f.raw(), eps, &space.all().ids(), policy));
        }
    }

    #[test]
    fn traces_decrease_and_terminate(seed in 0u64..10_000, n in 2usize..120, eps_k in 1u32..8) {
        let space = instances::random_instance(seed, n, 2).unwrap();
        let f = lattice_field(&space, seed);
        for policy in [ScalePolicy::adaptive(), ScalePolicy::Fixed(0.15)] {
            for kind in [DerivationKind::D, DerivationKind::G] {
                let t = iterate(&space, kind, &f, eps_k as f64 / 8.0, &space.all(), policy, None).unwrap();
                prop_assert!(!matches!(t.terminal, TraceTerminal::Truncated(_)));
                prop_assert!(t.levels.len() <= n + 2);
                for w in t.levels.windows(2) {
                    prop_assert!(w[1].is_subset(&w[0]).unwrap() && w[1] != w[0]);
                }
            }
        }
    }

    #[test]
    fn epsilon_antitone_and_scale_monotone(seed in 0u64..10_000, n in 2usize..80) {
        let space = instances::random_instance(seed, n, 2).unwrap();
        let f = lattice_field(&space, seed ^ 77);
        let all = space.all();
        for kind in [DerivationKind::D, DerivationKind::G] {
            for policy in [ScalePolicy::adaptive(), ScalePolicy::Fixed(0.2)] {
                let big = step(&space, kind, &f, 0.75, &all, policy).unwrap();
                let small = step(&space, kind, &f, 0.25, &all, policy).unwrap();
                prop_assert!(big.is_subset(&small).unwrap());
            }
            let narrow = step(&space, kind, &f, 0.5, &all, ScalePolicy::Fixed(0.1)).unwrap();
            let wide = step(&space, kind, &f, 0.5, &all, ScalePolicy::Fixed(0.3)).unwrap();
            prop_assert!(narrow.is_subset(&wide).unwrap());
        }
    }

    #[test]
    fn fixed_scale_steps_are_set_monotone(seed in 0u64..10_000, n in 4usize..80) {
        let space = instances::random_instance(seed, n, 2).unwrap();
        let f = lattice_field(&space, seed ^ 5);
        let q = space.all();
        let p = SubsetMask::from_ids(&space, (0..n).filter(|i| (i * 31 + seed as usize) % 3 != 0)).unwrap();
        let dp = d_step(&space, &f, 0.5, &p, ScalePolicy::Fixed(0.25)).unwrap();
        let dq = d_step(&space, &f, 0.5, &q, ScalePolicy::Fixed(0.25)).unwrap();
        prop_assert!(dp.is_subset(&dq).unwrap());
    }

    #[test]
    fn hard_inclusion_laws_hold(seed in 0u64..10_000, n in 2usize..100, eps_k in 1u32..6) {
        let space = instances::random_instance(seed, n, 2).unwrap();
        let f = lattice_field(&space, 2 * seed);
        let g = lattice_field(&space, 2 * seed + 1);
        let eps = eps_k as f64 / 8.0;
        for policy in [ScalePolicy::Fixed(0.2), ScalePolicy::adaptive()] {
            let report = kl_inclusion_check(&space, &f, &g, eps, &space.all(), policy, 6, None).unwrap();
            prop_assert_eq!(report.hard_violations(), 0, "{:?}", report.failed_hard());
        }
    }
}
