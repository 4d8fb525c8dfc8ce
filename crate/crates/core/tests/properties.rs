use proptest::prelude::*;
use thermstack::model::{AttachSide, Block, Floorplan, Layer, PackageModel, Stack};
use thermstack::pipeline::simulate;
use thermstack::placement::{optimize_anneal, peak_objective, BlockSpec, Placement, PlacementProblem, Schedule, Slot};
use thermstack::{GridSpec, SolveOptions};

const SIDE: f64 = 0.008;
const N: usize = 8;

fn opts() -> SolveOptions<f64> {
    SolveOptions::with_tolerance(1e-12)
}

fn single(blocks: Vec<Block<f64>>, side: AttachSide) -> Stack<f64> {
    let package = PackageModel { attach_side: side, ..PackageModel::default() };
    Stack::new(vec![Layer::silicon("die", Floorplan::with_blocks(SIDE, SIDE, blocks))], package).unwrap()
}

fn lattice_block(name: &str, ix: usize, iy: usize, power: f64) -> Block<f64> {
    let c = SIDE / 4.0;
    Block::new(name, ix as f64 * c, iy as f64 * c, c, c, power)
}

fn field(stack: &Stack<f64>) -> Vec<f64> {
    simulate(stack, GridSpec::square(N).unwrap(), opts()).unwrap().field.values
}

fn side() -> impl Strategy<Value = AttachSide> {
    prop_oneof![Just(AttachSide::Top), Just(AttachSide::Bottom)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn excess_scales_linearly(ix in 0usize..4, iy in 0usize..4, p in 0.1..80.0f64, alpha in 0.1..20.0f64, s in side()) {
        let amb = PackageModel::<f64>::default().ambient;
        let a = field(&single(vec![lattice_block("b", ix, iy, p)], s));
        let b = field(&single(vec![lattice_block("b", ix, iy, alpha * p)], s));
        let peak = a.iter().fold(0.0f64, |m, t| m.max(t - amb));
        for (ta, tb) in a.iter().zip(&b) {
            prop_assert!(((tb - amb) - alpha * (ta - amb)).abs() <= 1e-6 * alpha * peak);
        }
    }

    #[test]
    fn superposition(p in 0.1..50.0f64, q in 0.1..50.0f64) {
        let amb = PackageModel::<f64>::default().ambient;
        let both = field(&single(vec![lattice_block("a", 0, 0, p), lattice_block("b", 3, 2, q)], AttachSide::Top));
        let only_a = field(&single(vec![lattice_block("a", 0, 0, p), lattice_block("b", 3, 2, 0.0)], AttachSide::Top));
        let only_b = field(&single(vec![lattice_block("a", 0, 0, 0.0), lattice_block("b", 3, 2, q)], AttachSide::Top));
        let peak = both.iter().fold(0.0f64, |m, t| m.max(t - amb));
        for i in 0..both.len() {
            prop_assert!(((both[i] - amb) - (only_a[i] - amb) - (only_b[i] - amb)).abs() <= 1e-6 * peak);
        }
    }

    #[test]
    fn more_power_never_cools(p in 0.1..50.0f64, extra in 0.1..50.0f64, ix in 0usize..4, iy in 0usize..4) {
        let base = field(&single(vec![lattice_block("b", ix, iy, p)], AttachSide::Top));
        let hot = field(&single(vec![lattice_block("b", ix, iy, p + extra)], AttachSide::Top));
        for (a, b) in base.iter().zip(&hot) {
            prop_assert!(b >= a);
        }
        let amb = PackageModel::<f64>::default().ambient;
        prop_assert!(base.iter().all(|&t| t > amb));
    }

    #[test]
    fn mirrored_floorplan_mirrors_field(ix in 0usize..4, iy in 0usize..4, p in 1.0..50.0f64) {
        let a = field(&single(vec![lattice_block("b", ix, iy, p)], AttachSide::Top));
        let b = field(&single(vec![lattice_block("b", 3 - ix, iy, p)], AttachSide::Top));
        let lateral = N * N;
        for c in 0..a.len() - 1 {
            let (slab, rest) = (c / lateral, c % lateral);
            let (x, y) = (rest % N, rest / N);
            let m = slab * lateral + y * N + (N - 1 - x);
            prop_assert!((a[c] - b[m]).abs() <= 1e-6);
        }
    }

    #[test]
    fn energy_balance(p in 0.1..80.0f64, q in 0.0..80.0f64, s in side()) {
        let stack = Stack::new(
            vec![
                Layer::silicon("bottom", Floorplan::with_blocks(SIDE, SIDE, vec![lattice_block("a", 1, 1, p)])),
                Layer::tim("tim", SIDE, SIDE),
                Layer::silicon("top", Floorplan::with_blocks(SIDE, SIDE, vec![lattice_block("b", 2, 3, q)])),
            ],
            PackageModel { attach_side: s, ..PackageModel::default() },
        )
        .unwrap();
        let sim = simulate(&stack, GridSpec::square(N).unwrap(), opts()).unwrap();
        let out = sim.system.package_flux(&sim.field.values);
        prop_assert!((out - (p + q)).abs() <= 1e-6 * (p + q));
    }

    #[test]
    fn uniform_slab_matches_series_resistance(power in 1.0..100.0f64, k in 5.0..400.0f64, r in 0.02..1.0f64) {
        let mut layer = Layer::silicon("die", Floorplan::with_blocks(SIDE, SIDE, vec![Block::new("all", 0.0, 0.0, SIDE, SIDE, power)]));
        layer.material.conductivity = k;
        let package = PackageModel { convection_resistance: r, ..PackageModel::default() };
        let stack = Stack::new(vec![layer.clone()], package.clone()).unwrap();
        let sim = simulate(&stack, GridSpec::square(N).unwrap(), opts()).unwrap();
        let area = SIDE * SIDE;
        let dz = layer.thickness / layer.nz as f64;
        let top = package.ambient
            + power * (r + dz / 2.0 / (k * area)
                + package.spreader_thickness / (package.spreader_conductivity * area)
                + package.sink_thickness / (package.sink_conductivity * area));
        let nz = layer.nz;
        let mut expected = vec![top; nz];
        for i in (0..nz - 1).rev() {
            expected[i] = expected[i + 1] + power * (i + 1) as f64 / nz as f64 * dz / (k * area);
        }
        for (c, t) in sim.field.values[..sim.mesh.cell_count()].iter().enumerate() {
            let e = expected[c / (N * N)];
            prop_assert!((t - e).abs() <= 5e-3 * (e - package.ambient));
        }
    }
}

fn placement_problem() -> PlacementProblem {
    let template = Stack::new(vec![Layer::silicon("die", Floorplan::new(SIDE, SIDE))], PackageModel::default()).unwrap();
    let blocks = vec![
        BlockSpec { name: "a".into(), width: SIDE / 4.0, height: SIDE / 4.0, power: 20.0 },
        BlockSpec { name: "b".into(), width: SIDE / 4.0, height: SIDE / 4.0, power: 10.0 },
    ];
    let mut p = PlacementProblem::new(&template, blocks, vec![0], SIDE / 4.0).unwrap();
    p.grid = GridSpec::square(N).unwrap();
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn objective_is_symmetry_invariant(a in (0usize..4, 0usize..4), b in (0usize..4, 0usize..4)) {
        prop_assume!(a != b);
        let p = placement_problem();
        let slot = |(ix, iy): (usize, usize)| Slot { layer: 0, iy, ix };
        let mirror = |(ix, iy): (usize, usize)| (iy, 3 - ix);
        let x = Placement { slots: vec![slot(a), slot(b)] };
        let y = Placement { slots: vec![slot(mirror(a)), slot(mirror(b))] };
        prop_assert_eq!(p.canonical(&x), p.canonical(&y));
        let g = GridSpec::square(N).unwrap();
        let (ox, oy) = (peak_objective(&p, &x, g).unwrap(), peak_objective(&p, &y, g).unwrap());
        prop_assert!((ox - oy).abs() <= 1e-9, "{} vs {}", ox, oy);
    }

    #[test]
    fn best_so_far_never_rises(seed in 0u64..1000) {
        let p = placement_problem();
        let schedule = Schedule { epochs: 4, moves_per_epoch: 8, ..Schedule::default() };
        let r = optimize_anneal(&p, seed, schedule).unwrap();
        prop_assert!(p.is_valid(&r.best));
        for w in r.trace.entries.windows(2) {
            prop_assert!(w[1].best_k <= w[0].best_k);
        }
        for e in &r.trace.entries {
            prop_assert!(e.best_k <= e.objective_k);
        }
        let again = optimize_anneal(&p, seed, schedule).unwrap();
        prop_assert_eq!(r.trace, again.trace);
    }
}
