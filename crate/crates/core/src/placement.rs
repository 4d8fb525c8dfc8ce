//! Lattice placement search for processor blocks: exhaustive enumeration modulo die symmetry
//! and simulated annealing, both scored by the peak temperature of a full solve.

use std::collections::HashMap;
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::OptimizeSection;
use crate::model::{Block, GridSpec, Stack};
use crate::pipeline::simulate;
use crate::scenarios::SCENARIO_TOLERANCE;
use crate::solver::SolveOptions;

/// Largest number of symmetry-distinct candidates [`optimize_exhaustive`] evaluates.
pub const CANDIDATE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub power: f64,
}

/// Lattice position of one block. Field order gives the `(layer, y, x)` tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Slot {
    /// Index into the stack's layers.
    pub layer: usize,
    pub iy: usize,
    pub ix: usize,
}

/// One slot per problem block, in block order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Placement {
    pub slots: Vec<Slot>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub t0_k: f64,
    pub cooling: f64,
    pub epochs: usize,
    pub moves_per_epoch: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { t0_k: 20.0, cooling: 0.9, epochs: 50, moves_per_epoch: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Symmetry {
    swap: bool,
    flip_x: bool,
    flip_y: bool,
}

#[derive(Debug, Clone)]
pub struct PlacementProblem {
    /// Stack whose candidate layers are re-populated for every placement.
    pub template: Stack<f64>,
    pub blocks: Vec<BlockSpec>,
    /// Layers blocks may be placed on, ascending.
    pub layers: Vec<usize>,
    pub step: f64,
    /// Grid for the search objective.
    pub grid: GridSpec,
    /// Grid for re-scoring the best exhaustive candidates.
    pub rescore_grid: GridSpec,
    pub rescore_top: usize,
    pub max_per_layer: Option<usize>,
    /// Per block: largest lattice index in x and y.
    span: Vec<(usize, usize)>,
    /// Groups of interchangeable blocks (same size and power), by first occurrence.
    classes: Vec<Vec<usize>>,
    symmetries: Vec<Symmetry>,
}

fn lattice_count(extent: f64, step: f64) -> Option<usize> {
    let n = extent / step;
    let r = n.round();
    ((n - r).abs() <= 1e-9 * n.max(1.0) && r >= 0.0).then_some(r as usize)
}

impl PlacementProblem {
    pub fn new(template: &Stack<f64>, blocks: Vec<BlockSpec>, layers: Vec<usize>, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::invalid("placement step must be positive"));
        }
        let (w, h) = (template.die_width(), template.die_height());
        let (nx, ny) = match (lattice_count(w, step), lattice_count(h, step)) {
            (Some(nx), Some(ny)) => (nx, ny),
            _ => return Err(Error::invalid(format!("step {step} m does not divide the {w} x {h} m die"))),
        };
        let mut layers = layers;
        layers.sort_unstable();
        layers.dedup();
        if layers.is_empty() && !blocks.is_empty() {
            return Err(Error::invalid("no candidate layer for placement"));
        }
        if let Some(&l) = layers.iter().find(|&&l| l >= template.layers.len()) {
            return Err(Error::OutOfRange(format!("layer {l} of {}", template.layers.len())));
        }
        let mut span = Vec::new();
        for b in &blocks {
            if !(b.width > 0.0 && b.height > 0.0) || b.width > w * (1.0 + 1e-12) || b.height > h * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("block `{}` does not fit on the die", b.name)));
            }
            if b.power < 0.0 {
                return Err(Error::invalid(format!("block `{}` has negative power", b.name)));
            }
            let fx = ((w - b.width) / step + 1e-9).floor() as usize;
            let fy = ((h - b.height) / step + 1e-9).floor() as usize;
            span.push((fx.min(nx), fy.min(ny)));
        }

        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (i, b) in blocks.iter().enumerate() {
            let same = |c: &Vec<usize>| {
                let o = &blocks[c[0]];
                o.width == b.width && o.height == b.height && o.power == b.power
            };
            match classes.iter_mut().find(|c| same(c)) {
                Some(c) => c.push(i),
                None => classes.push(vec![i]),
            }
        }

        // a flip maps the lattice onto itself when every block's reflected origin is a lattice point
        let on_lattice = |extent: f64, size: f64| lattice_count(extent - size, step).is_some();
        let flip_x = blocks.iter().all(|b| on_lattice(w, b.width));
        let flip_y = blocks.iter().all(|b| on_lattice(h, b.height));
        let swap = nx == ny && (w - h).abs() <= 1e-12 * w && blocks.iter().all(|b| b.width == b.height);
        let mut symmetries = Vec::new();
        for s in [false, true] {
            for fx in [false, true] {
                for fy in [false, true] {
                    if (!s || swap) && (!fx || flip_x) && (!fy || flip_y) {
                        symmetries.push(Symmetry { swap: s, flip_x: fx, flip_y: fy });
                    }
                }
            }
        }

        let mut template = template.clone();
        for &l in &layers {
            template.layers[l].floorplan.blocks.clear();
        }
        Ok(PlacementProblem {
            template,
            blocks,
            layers,
            step,
            grid: GridSpec::square(32)?,
            rescore_grid: GridSpec::default(),
            rescore_top: 5,
            max_per_layer: None,
            span,
            classes,
            symmetries,
        })
    }

    /// Problem described by a problem file: every block found in the stack's floorplans is
    /// placed, on the layers that carry blocks in the file.
    pub fn from_config(stack: &Stack<f64>, grid: GridSpec, opt: &OptimizeSection) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut layers = Vec::new();
        for (li, layer) in stack.layers.iter().enumerate() {
            let mut any = false;
            for b in layer.floorplan.blocks.iter().filter(|b| !b.is_background()) {
                blocks.push(BlockSpec { name: b.name.clone(), width: b.width, height: b.height, power: b.power });
                any = true;
            }
            if any {
                layers.push(li);
            }
        }
        let step = match opt.step_m {
            Some(s) => s,
            None => blocks
                .iter()
                .map(|b| b.width.min(b.height))
                .fold(f64::INFINITY, f64::min),
        };
        if !step.is_finite() {
            return Err(Error::config("[optimize]", "no blocks to place and no step_m"));
        }
        let mut problem = PlacementProblem::new(stack, blocks, layers, step)?;
        problem.grid = GridSpec::new(opt.objective_nx.unwrap_or(32), opt.objective_ny.unwrap_or(32))?;
        problem.rescore_grid = grid;
        problem.rescore_top = opt.rescore_top.unwrap_or(5).max(1);
        problem.max_per_layer = opt.max_per_layer;
        Ok(problem)
    }

    /// Lower-left corner of a slot in metres.
    pub fn origin(&self, slot: Slot) -> (f64, f64) {
        (slot.ix as f64 * self.step, slot.iy as f64 * self.step)
    }

    fn in_range(&self, block: usize, slot: Slot) -> bool {
        let (mx, my) = self.span[block];
        slot.ix <= mx && slot.iy <= my && self.layers.binary_search(&slot.layer).is_ok()
    }

    fn overlaps(&self, a: usize, sa: Slot, b: usize, sb: Slot) -> bool {
        if sa.layer != sb.layer {
            return false;
        }
        let eps = 1e-12 * self.template.die_width().max(self.template.die_height());
        let (ax, ay) = self.origin(sa);
        let (bx, by) = self.origin(sb);
        let (ba, bb) = (&self.blocks[a], &self.blocks[b]);
        ax < bx + bb.width - eps && bx < ax + ba.width - eps && ay < by + bb.height - eps && by < ay + ba.height - eps
    }

    /// In-die, on a candidate layer, no same-layer overlap and within `max_per_layer`.
    pub fn is_valid(&self, p: &Placement) -> bool {
        if p.slots.len() != self.blocks.len() {
            return false;
        }
        for (i, &s) in p.slots.iter().enumerate() {
            if !self.in_range(i, s) {
                return false;
            }
            for (j, &t) in p.slots.iter().enumerate().skip(i + 1) {
                if self.overlaps(i, s, j, t) {
                    return false;
                }
            }
        }
        match self.max_per_layer {
            Some(m) => self.layers.iter().all(|&l| p.slots.iter().filter(|s| s.layer == l).count() <= m),
            None => true,
        }
    }

    /// Stack with the placement's blocks on their layers.
    pub fn stack_for(&self, p: &Placement) -> Result<Stack<f64>> {
        if !self.is_valid(p) {
            return Err(Error::invalid("placement overlaps, leaves the die or exceeds a layer limit"));
        }
        let mut stack = self.template.clone();
        for (b, &s) in self.blocks.iter().zip(&p.slots) {
            let (x, y) = self.origin(s);
            stack.layers[s.layer]
                .floorplan
                .blocks
                .push(Block::new(b.name.clone(), x, y, b.width, b.height, b.power));
        }
        stack.validate()?;
        Ok(stack)
    }

    fn transform(&self, block: usize, s: Slot, g: Symmetry) -> Slot {
        let (mx, my) = self.span[block];
        let ix = if g.flip_x { mx - s.ix } else { s.ix };
        let iy = if g.flip_y { my - s.iy } else { s.iy };
        let (ix, iy) = if g.swap { (iy, ix) } else { (ix, iy) };
        Slot { layer: s.layer, iy, ix }
    }

    /// Sorts the slots within every class of interchangeable blocks.
    fn normalized(&self, mut slots: Vec<Slot>) -> Placement {
        for class in &self.classes {
            let mut held: Vec<Slot> = class.iter().map(|&b| slots[b]).collect();
            held.sort_unstable();
            for (&b, s) in class.iter().zip(held) {
                slots[b] = s;
            }
        }
        Placement { slots }
    }

    /// Smallest image of the placement under the die symmetries and block interchange.
    pub fn canonical(&self, p: &Placement) -> Placement {
        self.symmetries
            .iter()
            .map(|&g| {
                let slots = p.slots.iter().enumerate().map(|(b, &s)| self.transform(b, s, g)).collect();
                self.normalized(slots)
            })
            .min()
            .unwrap_or_else(|| p.clone())
    }

    pub fn symmetry_count(&self) -> usize {
        self.symmetries.len()
    }

    /// Smallest distance between block centres (infinite for fewer than two blocks).
    pub fn min_center_distance(&self, p: &Placement) -> f64 {
        let centre = |i: usize| {
            let (x, y) = self.origin(p.slots[i]);
            (x + self.blocks[i].width / 2.0, y + self.blocks[i].height / 2.0)
        };
        let mut best = f64::INFINITY;
        for i in 0..p.slots.len() {
            for j in i + 1..p.slots.len() {
                let (a, b) = (centre(i), centre(j));
                best = best.min(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt());
            }
        }
        best
    }

    /// True when blocks on different layers share no footprint area.
    pub fn vertically_disjoint(&self, p: &Placement) -> bool {
        let mut flat = p.clone();
        for s in &mut flat.slots {
            s.layer = 0;
        }
        (0..p.slots.len()).all(|i| {
            (i + 1..p.slots.len()).all(|j| p.slots[i].layer == p.slots[j].layer || !self.overlaps(i, flat.slots[i], j, flat.slots[j]))
        })
    }

    fn candidate_slots(&self, block: usize) -> Vec<Slot> {
        let (mx, my) = self.span[block];
        let mut out = Vec::new();
        for &layer in &self.layers {
            for iy in 0..=my {
                for ix in 0..=mx {
                    out.push(Slot { layer, iy, ix });
                }
            }
        }
        out
    }
}

/// Global peak temperature of the placement solved on `grid`.
pub fn peak_objective(problem: &PlacementProblem, placement: &Placement, grid: GridSpec) -> Result<f64> {
    let stack = problem.stack_for(placement)?;
    let sim = simulate(&stack, grid, SolveOptions::with_tolerance(SCENARIO_TOLERANCE))?;
    Ok(sim.peak())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub placement: Placement,
    pub objective_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub best: Placement,
    /// Objective of `best` on the re-scoring grid.
    pub best_objective_k: f64,
    /// Every symmetry-distinct candidate with its objective on the search grid, in
    /// enumeration order.
    pub evaluated: Vec<Evaluation>,
    /// Top candidates re-scored on the fine grid, best first.
    pub rescored: Vec<Evaluation>,
}

impl ExhaustiveResult {
    /// Lowest search-grid objective.
    pub fn best_coarse(&self) -> Option<&Evaluation> {
        self.evaluated
            .iter()
            .min_by(|a, b| a.objective_k.total_cmp(&b.objective_k).then_with(|| a.placement.cmp(&b.placement)))
    }
}

fn enumerate(problem: &PlacementProblem) -> Result<Vec<Placement>> {
    let raw_limit = CANDIDATE_LIMIT * problem.symmetry_count();
    let mut out = Vec::new();
    let mut raw = 0usize;
    let mut slots = vec![Slot { layer: 0, iy: 0, ix: 0 }; problem.blocks.len()];

    // choose an ascending combination of slots for each class in turn
    fn recurse(
        p: &PlacementProblem,
        class: usize,
        member: usize,
        start: usize,
        choices: &[Vec<Slot>],
        slots: &mut Vec<Slot>,
        placed: &mut Vec<usize>,
        raw: &mut usize,
        raw_limit: usize,
        out: &mut Vec<Placement>,
    ) -> Result<()> {
        if class == p.classes.len() {
            *raw += 1;
            if *raw > raw_limit {
                return Err(Error::SearchSpace { limit: CANDIDATE_LIMIT });
            }
            let cand = Placement { slots: slots.clone() };
            if (p.max_per_layer.is_none() || p.is_valid(&cand)) && p.canonical(&cand) == cand {
                out.push(cand);
                if out.len() > CANDIDATE_LIMIT {
                    return Err(Error::SearchSpace { limit: CANDIDATE_LIMIT });
                }
            }
            return Ok(());
        }
        let members = &p.classes[class];
        if member == members.len() {
            return recurse(p, class + 1, 0, 0, choices, slots, placed, raw, raw_limit, out);
        }
        let b = members[member];
        let list = &choices[class];
        let remaining = members.len() - member - 1;
        for k in start..list.len().saturating_sub(remaining) {
            let s = list[k];
            if placed.iter().any(|&o| p.overlaps(b, s, o, slots[o])) {
                continue;
            }
            slots[b] = s;
            placed.push(b);
            recurse(p, class, member + 1, k + 1, choices, slots, placed, raw, raw_limit, out)?;
            placed.pop();
        }
        Ok(())
    }

    let choices: Vec<Vec<Slot>> = problem.classes.iter().map(|c| problem.candidate_slots(c[0])).collect();
    recurse(problem, 0, 0, 0, &choices, &mut slots, &mut Vec::new(), &mut raw, raw_limit, &mut out)?;
    Ok(out)
}

/// Evaluates every valid lattice placement up to die symmetry on the search grid, re-scores
/// the best `rescore_top` on the fine grid and returns the best; ties go to the smallest
/// `(layer, y, x)` tuple sequence.
pub fn optimize_exhaustive(problem: &PlacementProblem) -> Result<ExhaustiveResult> {
    let candidates = enumerate(problem)?;
    if candidates.is_empty() {
        return Err(Error::NoInitialPlacement);
    }
    let evaluated = candidates
        .into_par_iter()
        .map(|placement| {
            let objective_k = peak_objective(problem, &placement, problem.grid)?;
            Ok(Evaluation { placement, objective_k })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<&Evaluation> = evaluated.iter().collect();
    order.sort_by(|a, b| a.objective_k.total_cmp(&b.objective_k).then_with(|| a.placement.cmp(&b.placement)));
    let mut rescored = order
        .iter()
        .take(problem.rescore_top)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|e| {
            Ok(Evaluation {
                placement: e.placement.clone(),
                objective_k: peak_objective(problem, &e.placement, problem.rescore_grid)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rescored.sort_by(|a, b| a.objective_k.total_cmp(&b.objective_k).then_with(|| a.placement.cmp(&b.placement)));
    let best = rescored[0].clone();
    Ok(ExhaustiveResult { best: best.placement, best_objective_k: best.objective_k, evaluated, rescored })
}

/// One evaluated proposal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub placement_hash: u64,
    pub objective_k: f64,
    pub accepted: bool,
    pub best_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace {
    pub seed: u64,
    pub entries: Vec<TraceEntry>,
}

impl SearchTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,placement_hash,objective_K,accepted,best_K\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{:016x},{},{},{}",
                e.iteration, e.placement_hash, e.objective_k, e.accepted as u8, e.best_k
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult {
    pub best: Placement,
    pub best_objective_k: f64,
    pub trace: SearchTrace,
}

/// FNV-1a over the slot indices.
pub fn placement_hash(p: &Placement) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for s in &p.slots {
        for v in [s.layer, s.iy, s.ix] {
            for byte in (v as u64).to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}

/// Each block in order on the first free slot in `(layer, y, x)` order.
pub fn initial_placement(problem: &PlacementProblem) -> Result<Placement> {
    let mut slots: Vec<Slot> = Vec::new();
    for b in 0..problem.blocks.len() {
        let found = problem.candidate_slots(b).into_iter().find(|&s| {
            let mut trial = Placement { slots: slots.clone() };
            trial.slots.push(s);
            let partial = (0..trial.slots.len()).all(|i| {
                (i + 1..trial.slots.len()).all(|j| !problem.overlaps(i, trial.slots[i], j, trial.slots[j]))
            });
            let per_layer = problem
                .max_per_layer
                .is_none_or(|m| trial.slots.iter().filter(|t| t.layer == s.layer).count() <= m);
            partial && per_layer
        });
        slots.push(found.ok_or(Error::NoInitialPlacement)?);
    }
    Ok(Placement { slots })
}

enum Move {
    Translate,
    Swap,
    Layer,
}

/// Metropolis annealing over lattice placements. Moves translate one block by one lattice
/// step, swap two non-interchangeable blocks or move a block to another candidate layer.
/// Invalid proposals are discarded without a trace entry.
pub fn optimize_anneal(problem: &PlacementProblem, seed: u64, schedule: Schedule) -> Result<AnnealResult> {
    if !(schedule.t0_k > 0.0) || !(schedule.cooling > 0.0 && schedule.cooling <= 1.0) {
        return Err(Error::invalid("schedule needs t0 > 0 and cooling in (0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: HashMap<Placement, f64> = HashMap::new();
    let mut score = |p: &Placement| -> Result<f64> {
        let key = problem.canonical(p);
        if let Some(&v) = cache.get(&key) {
            return Ok(v);
        }
        let v = peak_objective(problem, p, problem.grid)?;
        cache.insert(key, v);
        Ok(v)
    };

    let mut current = initial_placement(problem)?;
    let mut current_k = score(&current)?;
    let mut best = current.clone();
    let mut best_k = current_k;
    let mut trace = SearchTrace {
        seed,
        entries: vec![TraceEntry {
            iteration: 0,
            placement_hash: placement_hash(&current),
            objective_k: current_k,
            accepted: true,
            best_k,
        }],
    };

    let n = problem.blocks.len();
    let swappable: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !problem.classes.iter().any(|c| c.contains(&i) && c.contains(&j)))
        .collect();
    let mut moves = vec![Move::Translate];
    if !swappable.is_empty() {
        moves.push(Move::Swap);
    }
    if problem.layers.len() > 1 {
        moves.push(Move::Layer);
    }

    let mut temperature = schedule.t0_k;
    let mut iteration = 0;
    for _ in 0..schedule.epochs {
        for _ in 0..schedule.moves_per_epoch {
            iteration += 1;
            if n == 0 {
                continue;
            }
            let mut next = current.clone();
            match moves[rng.gen_range(0..moves.len())] {
                Move::Translate => {
                    let b = rng.gen_range(0..n);
                    let s = &mut next.slots[b];
                    match rng.gen_range(0..4) {
                        0 => s.ix = s.ix.wrapping_add(1),
                        1 => s.ix = s.ix.wrapping_sub(1),
                        2 => s.iy = s.iy.wrapping_add(1),
                        _ => s.iy = s.iy.wrapping_sub(1),
                    }
                }
                Move::Swap => {
                    let (i, j) = swappable[rng.gen_range(0..swappable.len())];
                    next.slots.swap(i, j);
                }
                Move::Layer => {
                    let b = rng.gen_range(0..n);
                    let others: Vec<usize> =
                        problem.layers.iter().copied().filter(|&l| l != next.slots[b].layer).collect();
                    next.slots[b].layer = others[rng.gen_range(0..others.len())];
                }
            }
            if !problem.is_valid(&next) {
                continue;
            }
            let next_k = score(&next)?;
            let next_hash = placement_hash(&next);
            let delta = next_k - current_k;
            let accepted = delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp();
            if accepted {
                current = next;
                current_k = next_k;
                if current_k < best_k {
                    best = current.clone();
                    best_k = current_k;
                }
            }
            trace.entries.push(TraceEntry {
                iteration,
                placement_hash: next_hash,
                objective_k: next_k,
                accepted,
                best_k,
            });
        }
        temperature *= schedule.cooling;
    }
    Ok(AnnealResult { best, best_objective_k: best_k, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Floorplan, Layer, PackageModel};

    fn flat_problem(count: usize, size: f64, step: f64) -> PlacementProblem {
        let stack = Stack::new(vec![Layer::silicon("layer0", Floorplan::new(0.016, 0.016))], PackageModel::default()).unwrap();
        let blocks = (0..count)
            .map(|i| BlockSpec { name: format!("cpu{i}"), width: size, height: size, power: 50.9 })
            .collect();
        let mut p = PlacementProblem::new(&stack, blocks, vec![0], step).unwrap();
        p.grid = GridSpec::square(8).unwrap();
        p.rescore_grid = GridSpec::square(16).unwrap();
        p
    }

    #[test]
    fn one_block_two_by_two_lattice() {
        let p = flat_problem(1, 0.008, 0.008);
        assert_eq!(p.symmetry_count(), 8);
        let r = optimize_exhaustive(&p).unwrap();
        assert_eq!(r.evaluated.len(), 1);
        assert_eq!(r.best.slots, vec![Slot { layer: 0, iy: 0, ix: 0 }]);
    }

    #[test]
    fn empty_problem_is_ambient() {
        let p = flat_problem(0, 0.004, 0.004);
        let v = peak_objective(&p, &Placement { slots: vec![] }, GridSpec::square(4).unwrap()).unwrap();
        assert!((v - 318.15).abs() < 1e-9);
    }

    #[test]
    fn symmetric_images_share_objective() {
        let p = flat_problem(2, 0.004, 0.004);
        let a = Placement { slots: vec![Slot { layer: 0, iy: 0, ix: 0 }, Slot { layer: 0, iy: 1, ix: 2 }] };
        let g = Symmetry { swap: true, flip_x: true, flip_y: false };
        let b = Placement { slots: a.slots.iter().enumerate().map(|(i, &s)| p.transform(i, s, g)).collect() };
        assert_eq!(p.canonical(&a), p.canonical(&b));
        let (va, vb) = (peak_objective(&p, &a, p.grid).unwrap(), peak_objective(&p, &b, p.grid).unwrap());
        assert!((va - vb).abs() < 1e-9, "{va} vs {vb}");
    }

    #[test]
    fn reduced_enumeration_count() {
        // two identical 4 mm blocks on a 4x4 lattice: 120 pairs, 21 orbits under the dihedral group
        let p = flat_problem(2, 0.004, 0.004);
        assert_eq!(enumerate(&p).unwrap().len(), 21);
    }

    #[test]
    fn validity_rules() {
        let mut p = flat_problem(2, 0.004, 0.004);
        let overlap = Placement { slots: vec![Slot { layer: 0, iy: 0, ix: 0 }; 2] };
        assert!(!p.is_valid(&overlap));
        let outside = Placement { slots: vec![Slot { layer: 0, iy: 0, ix: 0 }, Slot { layer: 0, iy: 0, ix: 4 }] };
        assert!(!p.is_valid(&outside));
        p.max_per_layer = Some(1);
        assert!(matches!(initial_placement(&p), Err(Error::NoInitialPlacement)));
    }

    #[test]
    fn guard_trips_on_large_space() {
        let p = flat_problem(6, 0.001, 0.001);
        assert!(matches!(enumerate(&p), Err(Error::SearchSpace { .. })));
    }

    #[test]
    fn bad_step_is_rejected() {
        let stack = Stack::new(vec![Layer::silicon("l", Floorplan::new(0.016, 0.016))], PackageModel::default()).unwrap();
        assert!(PlacementProblem::new(&stack, vec![], vec![0], 0.005).is_err());
        assert!(PlacementProblem::new(&stack, vec![], vec![0], 0.0).is_err());
    }

    #[test]
    fn anneal_is_deterministic_and_monotone() {
        let p = flat_problem(2, 0.004, 0.004);
        let schedule = Schedule { epochs: 5, moves_per_epoch: 10, ..Schedule::default() };
        let a = optimize_anneal(&p, 3, schedule).unwrap();
        let b = optimize_anneal(&p, 3, schedule).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.entries.windows(2).all(|w| w[1].best_k <= w[0].best_k));
        assert!(p.is_valid(&a.best));
        assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    }
}
