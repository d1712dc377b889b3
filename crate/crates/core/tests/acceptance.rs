//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use osc_core::derivations::{
    default_grid, index_profile, iterate, kl_inclusion_check, osc_at_point, DerivationKind,
    IndexValue, Law,
};
use osc_core::extend::{
    glue_extension, iterated_extension, layered_extension, limsup_extension, retract_report,
    scattered_extension, Diagnostics, ExtensionReport, Method, DEFAULT_MAX_LAYERS,
};
use osc_core::{
    instances, Error, ErrorClass, Instance, ScalarField, ScalePolicy, SpaceInstance, SubsetMask,
};

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>, details: Vec<String>) -> Self {
        Verdict {
            pass,
            summary: summary.into(),
            details,
        }
    }
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Every valid shipped fixture with its `Y` and `f`, sorted by name.
fn shipped_fixtures() -> Vec<(String, Instance)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .filter_map(|p| {
            let name = p.file_stem()?.to_string_lossy().into_owned();
            let inst = Instance::load(&p).ok()?;
            inst.field("f").ok()?;
            Some((name, inst))
        })
        .collect()
}

/// `Y` and `f` of a fixture; `Y` defaults to the domain of `f`.
fn y_and_f(inst: &Instance) -> (SubsetMask, ScalarField) {
    let f = inst.field("f").expect("fixture field f").clone();
    let y = inst
        .subset("Y")
        .cloned()
        .unwrap_or_else(|_| f.domain().clone());
    let f = f.restrict(&y).expect("f covers Y");
    (y, f)
}

/// Seeded field with values on the 1/1024 lattice so sums stay exact.
fn lattice_field(domain: SubsetMask, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScalarField::from_fn(domain, |_| rng.gen_range(-1024i32..=1024) as f64 / 1024.0)
        .expect("finite")
}

fn random_subset(space: &SpaceInstance, seed: u64, keep: f64) -> SubsetMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<usize> = (0..space.len()).filter(|_| rng.gen_bool(keep)).collect();
    if ids.is_empty() {
        ids.push(0);
    }
    SubsetMask::from_ids(space, ids).expect("valid ids")
}

fn index_str(v: &IndexValue) -> String {
    v.to_string()
}

fn line_coordinate(space: &SpaceInstance, x: usize) -> f64 {
    space.metric().coords(x).expect("points on a line")[0]
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut hard = 0usize;
    let mut soft = [0usize; 3];
    let mut checked = 0usize;
    for seed in 0..200u64 {
        let n = 10 + (seed as usize * 37) % 191;
        let space = instances::random_instance(1000 + seed, n, 2).expect("random instance");
        let f = lattice_field(space.all(), 2 * seed);
        let g = lattice_field(space.all(), 2 * seed + 1);
        let eps = (1 + seed % 5) as f64 / 8.0;
        for policy in [ScalePolicy::Fixed(0.2), ScalePolicy::adaptive()] {
            let report = kl_inclusion_check(&space, &f, &g, eps, &space.all(), policy, n + 2, None)
                .expect("inclusion check");
            checked += report.checks.len();
            hard += report.hard_violations();
            for check in report.checks.iter().filter(|c| !c.hard) {
                let slot = match check.law {
                    Law::UnionSplit => 0,
                    Law::IteratedSumSplit => 1,
                    _ => 2,
                };
                soft[slot] += check.violations.len();
            }
        }
    }
    details.push(format!(
        "200 instances, both policies, {checked} law checks: hard violations {hard}; soft violations: union {}, iterated sum {}, adaptive deep sandwich {}",
        soft[0], soft[1], soft[2]
    ));

    let union =
        Instance::load(fixtures_dir().join("union-adversarial.json")).expect("union fixture");
    let (f, zero) = (union.field("f").unwrap(), union.field("zero").unwrap());
    let (p, q) = (union.subset("P").unwrap(), union.subset("Q").unwrap());
    let report = kl_inclusion_check(
        &union.space,
        f,
        zero,
        0.5,
        &union.space.all(),
        ScalePolicy::Fixed(0.6),
        3,
        Some((p, q)),
    )
    .expect("inclusion check");
    let union_violations = report.violations_of(Law::UnionSplit);
    details.push(format!(
        "adversarial 3-point fixture: union law violations {union_violations} (need >= 1)"
    ));
    let elapsed = start.elapsed();
    details.push(format!("runtime {elapsed:.2?} (budget 60 s)"));
    let pass = hard == 0 && union_violations >= 1 && elapsed < Duration::from_secs(60);
    Verdict::new(
        pass,
        "exact inclusion laws hold; union law soft check fires on the adversarial fixture",
        details,
    )
}

/// Independent trace: minimal distances, nearest-neighbour ties and ball
/// oscillation computed directly from the distance function.
fn oracle_index(space: &SpaceInstance, f: &[f64], eps: f64, multiplier: f64) -> Option<usize> {
    let mut level: Vec<usize> = (0..space.len()).collect();
    for step in 1..=space.len() + 1 {
        let nearest = |x: usize, set: &[usize]| -> f64 {
            let mut best = f64::INFINITY;
            for &z in set {
                if z != x {
                    best = best.min(space.dist(x, z));
                }
            }
            best
        };
        let mut next = Vec::new();
        for &x in &level {
            let lx = nearest(x, &level);
            if !lx.is_finite() || lx <= 0.0 {
                continue;
            }
            let mut limit = false;
            for &z in &level {
                if z != x && space.dist(x, z) == lx && multiplier * nearest(z, &level) < lx {
                    limit = true;
                }
            }
            if !limit {
                continue;
            }
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &z in &level {
                if space.dist(x, z) < multiplier * lx {
                    lo = lo.min(f[z]);
                    hi = hi.max(f[z]);
                }
            }
            if hi - lo >= eps {
                next.push(x);
            }
        }
        if next.is_empty() {
            return Some(step);
        }
        if next.len() == level.len() {
            return None;
        }
        level = next;
    }
    None
}

fn ac2() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    for k in 1..=3usize {
        let inst = instances::generate(&format!("ordinal:{k}")).expect("ordinal instance");
        let space = &inst.space;
        for (name, gating) in [("indicator", true), ("rank_parity", false)] {
            let f = inst.field(name).expect("field");
            let trace = iterate(
                space,
                DerivationKind::D,
                f,
                0.5,
                &space.all(),
                ScalePolicy::adaptive(),
                None,
            )
            .expect("trace");
            let oracle = oracle_index(space, f.raw(), 0.5, 3.0);
            let library = trace.index().finite();
            let agrees = library == oracle;
            let exact = library == Some(k + 1);
            if gating {
                pass &= agrees && exact;
            } else {
                pass &= agrees;
            }
            details.push(format!(
                "k={k} {name:<11} index {} (oracle {:?}, want {}{}) levels {:?}",
                index_str(&trace.index()),
                oracle,
                k + 1,
                if gating { "" } else { ", companion" },
                trace.level_sizes()
            ));
        }
    }
    Verdict::new(
        pass,
        "ordinal apex indicator has index exactly k+1 at eps 0.5, matching an independent oracle",
        details,
    )
}

fn ac3() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    let policy = ScalePolicy::adaptive();
    let mut contract_failures = 0;
    let mut saturated = 0;
    for seed in 0..50u64 {
        let n = 20 + (seed as usize * 13) % 130;
        let space = instances::random_instance(5000 + seed, n, 2).expect("random instance");
        let y = random_subset(&space, seed, 0.6);
        let f = lattice_field(y.clone(), 77 + seed);
        let eps = [0.5, 0.25, 0.125, 1.0 / 3.0, 1.0 / 9.0][seed as usize % 5];
        match glue_extension(&space, &y, &f, eps, policy) {
            Ok(report) => {
                let Diagnostics::Glue {
                    prepatch_norm,
                    f_norm,
                    prepatch_error,
                    ..
                } = report.diagnostics
                else {
                    unreachable!("glue diagnostics")
                };
                if !(prepatch_norm <= f_norm && prepatch_error <= eps) {
                    contract_failures += 1;
                    details.push(format!("seed {seed}: norm {prepatch_norm} vs {f_norm}, error {prepatch_error} vs {eps}"));
                }
            }
            Err(Error::Saturated { .. }) => saturated += 1,
            Err(e) => {
                contract_failures += 1;
                details.push(format!("seed {seed}: {e}"));
            }
        }
    }
    pass &= contract_failures == 0 && saturated == 0;
    details.push(format!(
        "50 random instances: contract failures {contract_failures}, saturated traces {saturated}"
    ));

    let mut exceptions = Vec::new();
    let mut runs = 0;
    for (name, inst) in shipped_fixtures() {
        let (y, f) = y_and_f(&inst);
        for eps in [0.5, 0.25, 0.125, 1.0 / 3.0, 1.0 / 9.0] {
            match glue_extension(&inst.space, &y, &f, eps, policy) {
                Ok(report) => {
                    let Diagnostics::Glue { alpha, .. } = report.diagnostics else {
                        unreachable!("glue diagnostics")
                    };
                    let trace = iterate(
                        &inst.space,
                        DerivationKind::D,
                        &report.field,
                        2.0 * eps,
                        &inst.space.all(),
                        policy,
                        None,
                    )
                    .expect("trace");
                    runs += 1;
                    if !trace.index().at_most(alpha + 1) {
                        exceptions.push(format!(
                            "{name} eps {eps:.4}: index {} > alpha+1 = {}",
                            trace.index(),
                            alpha + 1
                        ));
                    }
                }
                Err(e) => exceptions.push(format!("{name} eps {eps:.4}: {e}")),
            }
        }
    }
    pass &= exceptions.is_empty();
    details.push(format!(
        "shipped fixtures: {runs} glue runs, exceptions {}",
        exceptions.len()
    ));
    details.extend(exceptions);
    Verdict::new(
        pass,
        "glue contracts are exact and the glued field's index at 2 eps is at most alpha+1",
        details,
    )
}

fn ac4() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    for (name, inst) in shipped_fixtures() {
        let (y, f) = y_and_f(&inst);
        match iterated_extension(&inst.space, &y, &f, ScalePolicy::adaptive(), 10) {
            Ok(report) => {
                let Diagnostics::Iterated { rounds } = &report.diagnostics else {
                    unreachable!("iterated diagnostics")
                };
                let bad: Vec<usize> = rounds
                    .iter()
                    .filter(|r| r.residual_after > (-(r.round as f64)).exp2())
                    .map(|r| r.round)
                    .collect();
                pass &= bad.is_empty() && rounds.len() == 10;
                let last = rounds.last().map_or(f64::NAN, |r| r.residual_after);
                details.push(format!(
                    "{name}: {} rounds, final residual {last:.3e}, rounds over bound {bad:?}",
                    rounds.len()
                ));
            }
            Err(e) => {
                pass = false;
                details.push(format!("{name}: {e}"));
            }
        }
    }
    Verdict::new(
        pass,
        "iterated residuals stay within 2^-n for n <= 10 on every fixture",
        details,
    )
}

fn cantor_fixture(depth: usize) -> Instance {
    Instance::load(fixtures_dir().join(format!("cantor-{depth}.json"))).expect("cantor fixture")
}

fn ac5() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    for depth in [6, 8, 10, 12] {
        let inst = cantor_fixture(depth);
        let (y, f) = y_and_f(&inst);
        let start = Instant::now();
        match layered_extension(
            &inst.space,
            &y,
            &f,
            ScalePolicy::adaptive(),
            DEFAULT_MAX_LAYERS,
        ) {
            Ok(report) => {
                let elapsed = start.elapsed();
                let profile = index_profile(
                    &inst.space,
                    &report.field,
                    &inst.space.all(),
                    ScalePolicy::adaptive(),
                    &default_grid(),
                )
                .expect("profile");
                let bounded = profile.entries.iter().all(|e| e.index.at_most(3));
                let quiet = report.assertion_log.is_empty();
                let timely = depth != 12 || elapsed < Duration::from_secs(300);
                pass &= bounded && quiet && timely;
                let Diagnostics::Layered {
                    layers,
                    lemma_checks,
                    ..
                } = &report.diagnostics
                else {
                    unreachable!("layered diagnostics")
                };
                details.push(format!(
                    "depth {depth}: indices {:?}, {} layers, {lemma_checks} layer-bound checks, failures {}, {elapsed:.2?}",
                    profile.entries.iter().map(|e| index_str(&e.index)).collect::<Vec<_>>(),
                    layers.len(),
                    report.assertion_log.len()
                ));
            }
            Err(e) => {
                pass = false;
                details.push(format!("depth {depth}: {e}"));
            }
        }
    }
    Verdict::new(
        pass,
        "layered extension of the block-parity function has index <= 3 on the full grid",
        details,
    )
}

fn ac6() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    let grid: Vec<f64> = (1..=4).map(|j| 3f64.powi(-j)).collect();
    let mut columns: Vec<Vec<IndexValue>> = Vec::new();
    for depth in [6, 8, 10, 12] {
        let inst = cantor_fixture(depth);
        let (y, f) = y_and_f(&inst);
        let report = match limsup_extension(&inst.space, &y, &f) {
            Ok(r) => r,
            Err(e) => {
                details.push(format!("depth {depth}: {e}"));
                return Verdict::new(false, "limsup extension index grows with depth", details);
            }
        };
        let profile = index_profile(
            &inst.space,
            &report.field,
            &inst.space.all(),
            ScalePolicy::adaptive(),
            &grid,
        )
        .expect("profile");
        let column: Vec<IndexValue> = profile.entries.iter().map(|e| e.index).collect();
        if depth >= 8 {
            pass &= column.iter().all(|v| !v.at_most(2));
        }
        details.push(format!(
            "depth {depth}: indices at 3^-1..3^-4 {:?}, level sizes {:?}",
            column.iter().map(index_str).collect::<Vec<_>>(),
            profile
                .entries
                .iter()
                .map(|e| e.level_sizes.clone())
                .collect::<Vec<_>>()
        ));
        columns.push(column);
    }
    let rank = |v: &IndexValue| match v {
        IndexValue::Finite(n) => *n,
        _ => usize::MAX,
    };
    for j in 0..grid.len() {
        let nondecreasing = columns.windows(2).all(|w| rank(&w[0][j]) <= rank(&w[1][j]));
        pass &= nondecreasing;
    }
    let depth8: Vec<usize> = columns[1].iter().take(3).map(rank).collect();
    details.push(format!(
        "depth 8 at 1/3, 1/9, 1/27: {depth8:?} (strictly increasing: {})",
        depth8.windows(2).all(|w| w[0] < w[1])
    ));
    Verdict::new(
        pass,
        "limsup extension index at 3^-j is >= 3 from depth 8 and nondecreasing in depth",
        details,
    )
}

fn ac7() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    let policy = ScalePolicy::adaptive();
    let grid = default_grid();
    for k in 1..=3usize {
        let inst = instances::generate(&format!("ordinal:{k}")).expect("ordinal instance");
        let space = &inst.space;
        let all = space.all();
        let mut worst = 0usize;
        let mut over = 0usize;
        let mut discontinuous = 0usize;
        for seed in 0..20u64 {
            let y = random_subset(space, 900 + seed, 0.7);
            let f = ScalarField::from_fn(y.clone(), |x| (3.0 * line_coordinate(space, x)).sin())
                .expect("finite");
            let report = match scattered_extension(space, &y, &f, policy) {
                Ok(r) => r,
                Err(e) => {
                    pass = false;
                    details.push(format!("k={k} seed {seed}: {e}"));
                    continue;
                }
            };
            let profile =
                index_profile(space, &report.field, &all, policy, &grid).expect("profile");
            for e in &profile.entries {
                match e.index {
                    IndexValue::Finite(n) => worst = worst.max(n),
                    _ => worst = usize::MAX,
                }
                if !e.index.at_most(2) {
                    over += 1;
                }
            }
            // Oscillation at each Y point along the dyadic scales down to the resolution.
            let finest = space.resolution().log2().floor() as i32;
            for p in y.iter() {
                let oscs: Vec<f64> = (0..=-finest)
                    .map(|j| {
                        osc_at_point(space, &report.field, p, &all, (-(j as f64)).exp2())
                            .expect("osc")
                    })
                    .collect();
                let settles = oscs.last() == Some(&0.0) && oscs.windows(2).all(|w| w[1] <= w[0]);
                if !settles {
                    discontinuous += 1;
                }
            }
        }
        pass &= over == 0 && discontinuous == 0;
        let baseline =
            ScalarField::from_fn(all.clone(), |x| (3.0 * line_coordinate(space, x)).sin())
                .expect("finite");
        let base_profile = index_profile(space, &baseline, &all, policy, &grid).expect("profile");
        details.push(format!(
            "k={k}: worst index {}, grid entries above 2: {over}, Y points not settling: {discontinuous}; \
             continuous sin(3x) on all of X for comparison: {:?}",
            if worst == usize::MAX { "SATURATED".to_string() } else { worst.to_string() },
            base_profile.entries.iter().map(|e| index_str(&e.index)).collect::<Vec<_>>()
        ));
    }
    Verdict::new(
        pass,
        "scattered extension has index <= 2 and settles at every point of Y",
        details,
    )
}

fn run_method(
    method: Method,
    inst: &Instance,
    y: &SubsetMask,
    f: &ScalarField,
) -> osc_core::Result<ExtensionReport> {
    let space = &inst.space;
    let policy = ScalePolicy::adaptive();
    match method {
        Method::Glue => glue_extension(space, y, f, 0.125, policy),
        Method::Iterated => iterated_extension(space, y, f, policy, 10),
        Method::Layered => layered_extension(space, y, f, policy, DEFAULT_MAX_LAYERS),
        Method::Limsup => limsup_extension(space, y, f),
        Method::Scattered => scattered_extension(space, y, f, policy),
        Method::Retract => retract_report(space, y, f),
    }
}

fn ac8() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    for (name, inst) in shipped_fixtures() {
        let (y, f) = y_and_f(&inst);
        let mut cells = Vec::new();
        for method in Method::ALL {
            let cell = match run_method(method, &inst, &y, &f) {
                Ok(report) => {
                    let exact = y.iter().all(|p| {
                        report.field.get(p).map(f64::to_bits) == f.get(p).map(f64::to_bits)
                    });
                    let total = report.field.domain().len() == inst.space.len();
                    let bounded = match &report.diagnostics {
                        Diagnostics::Layered {
                            patch_bound_violations,
                            ..
                        } => *patch_bound_violations == 0,
                        _ => true,
                    };
                    pass &= exact && total && bounded;
                    let tag = if exact && total && bounded {
                        "ok"
                    } else {
                        "FAIL"
                    };
                    format!("{method}={tag}")
                }
                Err(e) if e.class() == ErrorClass::Precondition => format!("{method}=n/a"),
                Err(e) => {
                    pass = false;
                    format!("{method}=ERROR({e})")
                }
            };
            cells.push(cell);
        }
        details.push(format!("{name}: {}", cells.join(" ")));
    }
    details.push("n/a marks a refused precondition, e.g. retract onto a subset that is not closed at resolution".into());
    Verdict::new(
        pass,
        "every method restricts to f on Y bit for bit; layered patches within the geometric bound",
        details,
    )
}

fn ac9() -> Verdict {
    let space = instances::random_instance(9, 20_000, 2).expect("random instance");
    let f = ScalarField::from_fn(space.all(), |x| {
        let c = space.metric().coords(x).expect("euclidean");
        (6.0 * c[0]).sin() * (4.0 * c[1]).cos()
    })
    .expect("finite");
    let grid: Vec<f64> = (1..=8).map(|j| (-(j as f64)).exp2()).collect();
    let start = Instant::now();
    let profile =
        index_profile(&space, &f, &space.all(), ScalePolicy::adaptive(), &grid).expect("profile");
    let elapsed = start.elapsed();
    let details = vec![format!(
        "20000 points, 8 epsilons: {elapsed:.2?} (budget 10 s), indices {:?}",
        profile
            .entries
            .iter()
            .map(|e| index_str(&e.index))
            .collect::<Vec<_>>()
    )];
    Verdict::new(
        elapsed < Duration::from_secs(10),
        "index profile on 20000 points finishes within 10 s",
        details,
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
    ];
    let mut failed = Vec::new();
    for (id, run) in criteria {
        let verdict = run();
        println!(
            "{id} {} {}",
            if verdict.pass { "PASS" } else { "FAIL" },
            verdict.summary
        );
        for line in &verdict.details {
            println!("    {line}");
        }
        if !verdict.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {}", failed.join(", "));
        std::process::exit(1);
    }
}
