//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Exits non-zero when a criterion outside
//! [`EXPECTED_RED`] fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thermstack::io::{render_ppm_auto, write_report, ReportFormat};
use thermstack::mesh::{assemble, discretize, power_vector, stack_powers};
use thermstack::model::{AttachSide, Block, Floorplan, Layer, Material, PackageModel, Stack};
use thermstack::pipeline::simulate;
use thermstack::placement::{optimize_anneal, optimize_exhaustive, BlockSpec, PlacementProblem, Schedule};
use thermstack::scenarios::{reference_tables, scenario, ScenarioId, DIE, PROCESSOR, PROCESSOR_POWER, SCENARIO_TOLERANCE};
use thermstack::solver::{solve_dense, solve_steady};
use thermstack::{GridSpec, SolveOptions};

/// Criteria known to fail with the calibrated model; see the decisions ledger.
const EXPECTED_RED: &[u32] = &[16];

const TABLES_BUDGET: Duration = Duration::from_secs(60);
const ZERO_POWER_TOL_K: f64 = 1e-9;
const ENERGY_TOL_REL: f64 = 1e-3;
const DENSE_TOL_K: f64 = 1e-6;
const RANDOM_STACKS: usize = 20;
const LINEARITY_TOL_REL: f64 = 1e-6;
const SLAB_TOL_REL: f64 = 5e-3;
const ROTATION_TOL_K: f64 = 1e-6;
const CONVERGENCE_TOL_REL: f64 = 1e-2;
const ANNEAL_SEEDS: u64 = 10;
const ANNEAL_MIN_HITS: usize = 9;
const ANNEAL_EXCESS_TOL: f64 = 1e-2;
/// SHA-256 of the 2d-corners layer map rendered at 64×64.
const CORNERS_PPM_SHA256: &str = "d1d5fdfcea39cbfc88f4082113ae1b0e1ba90b6e921baf6fec620a25f8c58364";

const TIGHT: f64 = 1e-13;

type Outcome = thermstack::Result<(bool, String)>;

fn tight() -> SolveOptions<f64> {
    SolveOptions { rel_tol: TIGHT, max_iter: Some(100_000) }
}

fn grid(n: usize) -> GridSpec {
    GridSpec::square(n).unwrap()
}

fn check_table(names: &[&str], checks: &[thermstack::scenarios::Check]) -> (bool, String) {
    let picked: Vec<_> = checks.iter().filter(|c| names.iter().any(|n| c.name.contains(n))).collect();
    let ok = !picked.is_empty() && picked.iter().all(|c| c.passed);
    let detail = picked
        .iter()
        .map(|c| format!("{}{}: {}", if c.passed { "" } else { "[x] " }, c.name, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

fn excess(values: &[f64], ambient: f64) -> Vec<f64> {
    values.iter().map(|t| t - ambient).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn with_powers(stack: &Stack<f64>, f: impl Fn(usize, &Block<f64>) -> f64) -> Stack<f64> {
    let mut s = stack.clone();
    for (l, layer) in s.layers.iter_mut().enumerate() {
        for b in &mut layer.floorplan.blocks {
            b.power = f(l, b);
        }
    }
    s
}

fn energy() -> Outcome {
    let mut worst: f64 = 0.0;
    for id in ScenarioId::ALL {
        let sim = scenario(id)?.simulate(None)?;
        let injected = sim.system.total_source();
        let out = sim.system.package_flux(&sim.field.values);
        worst = worst.max(((out - injected) / injected).abs());
    }
    Ok((worst <= ENERGY_TOL_REL, format!("worst relative imbalance {worst:.3e} (limit {ENERGY_TOL_REL:e})")))
}

fn zero_power() -> Outcome {
    let mut worst: f64 = 0.0;
    for id in ScenarioId::ALL {
        let s = scenario(id)?;
        let stack = with_powers(&s.stack, |_, _| 0.0);
        let sim = simulate(&stack, s.grid, SolveOptions::default())?;
        let amb = stack.package.ambient;
        worst = worst.max(sim.field.values.iter().map(|t| (t - amb).abs()).fold(0.0, f64::max));
    }
    Ok((worst <= ZERO_POWER_TOL_K, format!("max |T - ambient| = {worst:.3e} K over all scenarios")))
}

fn random_stack(rng: &mut ChaCha8Rng) -> thermstack::Result<(Stack<f64>, GridSpec)> {
    let side = rng.gen_range(0.004..0.02);
    let n_layers = rng.gen_range(1..=3);
    // blocks sit on a lattice the grid refines, so every block owns cells
    let lattice = rng.gen_range(2..=4);
    let mut layers = Vec::new();
    for l in 0..n_layers {
        let mut fp = Floorplan::new(side, side);
        let cell = side / lattice as f64;
        let mut used = Vec::new();
        for b in 0..rng.gen_range(0..=3) {
            let slot = (rng.gen_range(0..lattice), rng.gen_range(0..lattice));
            if used.contains(&slot) {
                continue;
            }
            used.push(slot);
            fp.blocks.push(Block::new(
                format!("b{b}"),
                slot.0 as f64 * cell,
                slot.1 as f64 * cell,
                cell,
                cell,
                rng.gen_range(0.5..40.0),
            ));
        }
        let k = rng.gen_range(0.5..200.0);
        layers.push(Layer {
            name: format!("l{l}"),
            material: Material::new(format!("m{l}"), k, 1.75e6)?,
            thickness: rng.gen_range(2e-5..5e-4),
            floorplan: fp,
            nz: rng.gen_range(1..=3),
        });
    }
    let package = PackageModel {
        convection_resistance: rng.gen_range(0.05..1.0),
        attach_side: if rng.gen_bool(0.5) { AttachSide::Top } else { AttachSide::Bottom },
        ..PackageModel::default()
    };
    let n = lattice * rng.gen_range(1..=3);
    let m = lattice * rng.gen_range(1..=3);
    Ok((Stack::new(layers, package)?, GridSpec::new(n, m)?))
}

fn dense_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    for _ in 0..RANDOM_STACKS {
        let (stack, g) = random_stack(&mut rng)?;
        let mesh = discretize(&stack, g)?;
        let source = power_vector(&mesh, &stack_powers(&stack))?;
        let system = assemble(&mesh, &stack.package)?.with_source(source)?;
        largest = largest.max(system.dim());
        let cg = solve_steady(&system, SolveOptions::with_tolerance(SCENARIO_TOLERANCE))?;
        let dense = solve_dense(&system)?;
        worst = worst.max(max_abs_diff(&cg.values, &dense.values));
    }
    Ok((
        worst <= DENSE_TOL_K,
        format!("{RANDOM_STACKS} stacks up to {largest} unknowns, max |CG - dense| = {worst:.3e} K"),
    ))
}

fn linearity() -> Outcome {
    let base = scenario(ScenarioId::Direct3d)?.stack;
    let g = grid(32);
    let amb = base.package.ambient;
    let e1 = excess(&simulate(&base, g, tight())?.field.values, amb);
    let scale = e1.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 2.0, 10.0] {
        let s = with_powers(&base, |_, b| alpha * b.power);
        let ea = excess(&simulate(&s, g, tight())?.field.values, amb);
        let scaled: Vec<f64> = e1.iter().map(|v| alpha * v).collect();
        worst = worst.max(max_abs_diff(&ea, &scaled) / (alpha * scale));
    }
    let bottom = with_powers(&base, |l, b| if l == 0 { b.power } else { 0.0 });
    let top = with_powers(&base, |l, b| if l == 0 { 0.0 } else { b.power });
    let eb = excess(&simulate(&bottom, g, tight())?.field.values, amb);
    let et = excess(&simulate(&top, g, tight())?.field.values, amb);
    let sum: Vec<f64> = eb.iter().zip(&et).map(|(a, b)| a + b).collect();
    let superposition = max_abs_diff(&sum, &e1) / scale;
    Ok((
        worst <= LINEARITY_TOL_REL && superposition <= LINEARITY_TOL_REL,
        format!("scaling error {worst:.3e}, superposition error {superposition:.3e} (relative to peak excess)"),
    ))
}

fn slab() -> Outcome {
    let power = 30.0;
    let fp = Floorplan::with_blocks(DIE, DIE, vec![Block::new("heater", 0.0, 0.0, DIE, DIE, power)]);
    let stack = Stack::new(vec![Layer::silicon("layer0", fp)], PackageModel::default())?;
    let sim = simulate(&stack, grid(32), tight())?;
    let layer = &stack.layers[0];
    let pkg = &stack.package;
    let area = DIE * DIE;
    let k = layer.material.conductivity;
    let nz = layer.nz;
    let dz = layer.thickness / nz as f64;
    // top slab: half cell, spreader, sink base and convection carry the full power
    let mut analytic = vec![0.0; nz];
    analytic[nz - 1] = pkg.ambient
        + power
            * (pkg.convection_resistance
                + dz / 2.0 / (k * area)
                + pkg.spreader_thickness / (pkg.spreader_conductivity * area)
                + pkg.sink_thickness / (pkg.sink_conductivity * area));
    for i in (0..nz - 1).rev() {
        analytic[i] = analytic[i + 1] + power * (i + 1) as f64 / nz as f64 * dz / (k * area);
    }
    let per_slab = sim.mesh.lateral_count();
    let mut worst: f64 = 0.0;
    for (c, t) in sim.field.values[..sim.mesh.cell_count()].iter().enumerate() {
        let a = analytic[c / per_slab];
        worst = worst.max((t - a).abs() / (a - pkg.ambient));
    }
    Ok((
        worst <= SLAB_TOL_REL,
        format!("max deviation {:.3e} of excess (limit {SLAB_TOL_REL:e}), bottom {:.4} K", worst, analytic[0]),
    ))
}

/// Quarter turn counter-clockwise about the die centre.
fn rotate(stack: &Stack<f64>) -> Stack<f64> {
    let mut s = stack.clone();
    for layer in &mut s.layers {
        let w = layer.floorplan.die_width;
        for b in &mut layer.floorplan.blocks {
            *b = Block::new(b.name.clone(), w - (b.y + b.height), b.x, b.height, b.width, b.power);
        }
    }
    s
}

/// Largest difference between `rotated` and the quarter-turned `field` over all cells.
fn rotation_error(field: &[f64], rotated: &[f64], n: usize, slabs: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for s in 0..slabs {
        for iy in 0..n {
            for ix in 0..n {
                let (rx, ry) = (n - 1 - iy, ix);
                let a = field[s * n * n + iy * n + ix];
                let b = rotated[s * n * n + ry * n + rx];
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

fn symmetry() -> Outcome {
    let n = 64;
    let corners = scenario(ScenarioId::Corners2d)?.simulate(Some(grid(n)))?;
    let self_err = rotation_error(&corners.field.values, &corners.field.values, n, corners.mesh.slabs.len());
    let mut turned_err: f64 = 0.0;
    for id in [ScenarioId::Single2d, ScenarioId::Direct3d] {
        let base = scenario(id)?.stack;
        let a = simulate(&base, grid(n), tight())?;
        let b = simulate(&rotate(&base), grid(n), tight())?;
        turned_err = turned_err.max(rotation_error(&a.field.values, &b.field.values, n, a.mesh.slabs.len()));
    }
    Ok((
        self_err <= ROTATION_TOL_K && turned_err <= ROTATION_TOL_K,
        format!("2d-corners self-rotation {self_err:.3e} K, rotated floorplans {turned_err:.3e} K"),
    ))
}

fn convergence() -> Outcome {
    let mut worst: (f64, &str) = (0.0, "");
    for id in ScenarioId::ALL {
        let s = scenario(id)?;
        let amb = s.stack.package.ambient;
        let coarse = s.simulate(Some(grid(64)))?.peak();
        let fine = s.simulate(Some(grid(128)))?.peak();
        let rel = (fine - coarse).abs() / (coarse - amb);
        if rel > worst.0 {
            worst = (rel, id.as_str());
        }
    }
    Ok((
        worst.0 < CONVERGENCE_TOL_REL,
        format!("largest 64->128 peak change {:.3e} of excess ({})", worst.0, worst.1),
    ))
}

fn processor_specs() -> Vec<BlockSpec> {
    (0..4)
        .map(|i| BlockSpec { name: format!("cpu{i}"), width: PROCESSOR, height: PROCESSOR, power: PROCESSOR_POWER })
        .collect()
}

fn anneal_hits(problem: &PlacementProblem, best_k: f64) -> thermstack::Result<usize> {
    let amb = problem.template.package.ambient;
    let mut hits = 0;
    for seed in 0..ANNEAL_SEEDS {
        let r = optimize_anneal(problem, seed, Schedule::default())?;
        if (r.best_objective_k - best_k) / (best_k - amb) <= ANNEAL_EXCESS_TOL {
            hits += 1;
        }
    }
    Ok(hits)
}

fn optimizer() -> Outcome {
    let flat = Stack::new(vec![Layer::silicon("layer0", Floorplan::new(DIE, DIE))], PackageModel::default())?;
    let p2 = PlacementProblem::new(&flat, processor_specs(), vec![0], PROCESSOR)?;
    let r2 = optimize_exhaustive(&p2)?;
    let best_d = p2.min_center_distance(&r2.best);
    let max_d = r2.evaluated.iter().map(|e| p2.min_center_distance(&e.placement)).fold(0.0, f64::max);
    let corner_family = best_d >= max_d - 1e-12;
    let coarse2 = r2.best_coarse().map_or(f64::NAN, |e| e.objective_k);
    let hits2 = anneal_hits(&p2, coarse2)?;

    let stacked = scenario(ScenarioId::Direct3d)?.stack;
    let mut p3 = PlacementProblem::new(&stacked, processor_specs(), vec![0, 2], PROCESSOR)?;
    p3.max_per_layer = Some(2);
    let r3 = optimize_exhaustive(&p3)?;
    let disjoint = p3.vertically_disjoint(&r3.best);
    let coarse3 = r3.best_coarse().map_or(f64::NAN, |e| e.objective_k);
    let hits3 = anneal_hits(&p3, coarse3)?;

    let ok = corner_family && disjoint && hits2 >= ANNEAL_MIN_HITS && hits3 >= ANNEAL_MIN_HITS;
    Ok((
        ok,
        format!(
            "2d best {:?} {:.4} K, min distance {:.4} m vs max {:.4} m (corner family: {corner_family}); \
             3d best {:?} {:.4} K vertically disjoint: {disjoint}; anneal within {:.0}%: 2d {hits2}/{ANNEAL_SEEDS}, 3d {hits3}/{ANNEAL_SEEDS}",
            r2.best.slots.iter().map(|s| (s.ix, s.iy)).collect::<Vec<_>>(),
            r2.best_objective_k,
            best_d,
            max_d,
            r3.best.slots.iter().map(|s| (s.layer, s.ix, s.iy)).collect::<Vec<_>>(),
            r3.best_objective_k,
            ANNEAL_EXCESS_TOL * 100.0
        ),
    ))
}

fn artifacts() -> thermstack::Result<(String, String, Vec<u8>, String)> {
    let r = scenario(ScenarioId::Corners2d)?.run(None)?;
    let json = write_report(&r, ReportFormat::Json)?;
    let csv = write_report(&r, ReportFormat::Csv)?;
    let ppm = render_ppm_auto(&r.field[0].map)?;
    let flat = Stack::new(vec![Layer::silicon("layer0", Floorplan::new(DIE, DIE))], PackageModel::default())?;
    let p = PlacementProblem::new(&flat, processor_specs()[..2].to_vec(), vec![0], PROCESSOR)?;
    let schedule = Schedule { epochs: 5, moves_per_epoch: 10, ..Schedule::default() };
    let trace = optimize_anneal(&p, 7, schedule)?.trace.to_csv();
    Ok((json, csv, ppm, trace))
}

fn determinism() -> Outcome {
    let a = artifacts()?;
    let b = artifacts()?;
    let same = a == b;
    let digest: String = Sha256::digest(&a.2).iter().map(|b| format!("{b:02x}")).collect();
    let golden = digest == CORNERS_PPM_SHA256;
    Ok((same && golden, format!("repeat runs identical: {same}; corners PPM sha256 {digest} (pinned: {golden})")))
}

fn main() {
    let mut results: Vec<(u32, bool, String)> = Vec::new();
    let mut record = |id: u32, outcome: Outcome| {
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("{} criterion {id:>2}: {detail}", if ok { "PASS" } else { "FAIL" });
        results.push((id, ok, detail));
    };

    let start = Instant::now();
    let tables = reference_tables(None);
    let elapsed = start.elapsed();
    match tables {
        Ok(doc) => {
            let c = &doc.checks;
            record(1, Ok(check_table(&["lowest"], c)));
            record(2, Ok(check_table(&["2d peak ordering"], c)));
            record(3, Ok(check_table(&["2d-single peak", "2d-adjacent peak", "2d-diagonal peak", "2d-corners peak"], c)));
            record(4, Ok(check_table(&["layer gap"], c)));
            record(5, Ok(check_table(&["hotter than indirect", "indirect pair"], c)));
            record(6, Ok(check_table(&["TIM between"], c)));
            record(7, Ok(check_table(&["layer0-only peak"], c)));
            record(8, Ok((elapsed < TABLES_BUDGET, format!("tables took {elapsed:.2?} (budget {TABLES_BUDGET:?})"))));
        }
        Err(e) => {
            for id in 1..=8 {
                record(id, Ok((false, format!("error: {e}"))));
            }
        }
    }
    record(9, zero_power());
    record(10, energy());
    record(11, dense_oracle());
    record(12, linearity());
    record(13, slab());
    record(14, symmetry());
    record(15, convergence());
    record(16, optimizer());
    record(17, determinism());

    let mut unexpected = 0;
    for (id, ok, _) in &results {
        let red = EXPECTED_RED.contains(id);
        if !ok && !red {
            unexpected += 1;
        }
        if *ok && red {
            println!("note: criterion {id} is listed as expected red but passed");
        }
    }
    let passed = results.iter().filter(|r| r.1).count();
    println!("{passed}/{} criteria pass; expected red: {EXPECTED_RED:?}", results.len());
    if unexpected > 0 {
        eprintln!("{unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
}
