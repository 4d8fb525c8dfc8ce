//! Geometry, materials, layer stacks and the package.
//!
//! All quantities are SI: metres, watts, kelvin. Blocks are axis-aligned rectangles given by
//! their lower-left corner.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two rectangles overlap only when their common area exceeds this (m²). Shared edges are fine.
pub const OVERLAP_TOLERANCE: f64 = 1e-15;

/// Prefix of the auto-generated zero-power blocks that tile uncovered die area.
pub const BACKGROUND_PREFIX: &str = "_bg";

pub const SILICON_CONDUCTIVITY: f64 = 100.0;
pub const SILICON_HEAT_CAPACITY: f64 = 1.75e6;
pub const SILICON_THICKNESS: f64 = 1.5e-4;
pub const TIM_CONDUCTIVITY: f64 = 4.0;
pub const TIM_HEAT_CAPACITY: f64 = 4.0e6;
pub const TIM_THICKNESS: f64 = 2.0e-5;
pub const SILICON_NZ: usize = 4;
pub const TIM_NZ: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Material<S> {
    pub name: String,
    /// W/(m·K)
    pub conductivity: S,
    /// J/(m³·K); carried for transient models, unused in steady state.
    pub heat_capacity: S,
}

impl<S: Scalar> Material<S> {
    pub fn new(name: impl Into<String>, conductivity: S, heat_capacity: S) -> Result<Self> {
        let name = name.into();
        if !(conductivity > S::zero()) || !(heat_capacity > S::zero()) {
            return Err(Error::invalid(format!(
                "material `{name}` needs positive conductivity and heat capacity"
            )));
        }
        Ok(Material { name, conductivity, heat_capacity })
    }

    pub fn silicon() -> Self {
        Material {
            name: "silicon".into(),
            conductivity: S::of(SILICON_CONDUCTIVITY),
            heat_capacity: S::of(SILICON_HEAT_CAPACITY),
        }
    }

    /// Epoxy-resin bonding layer between stacked dies.
    pub fn epoxy_tim() -> Self {
        Material {
            name: "epoxy".into(),
            conductivity: S::of(TIM_CONDUCTIVITY),
            heat_capacity: S::of(TIM_HEAT_CAPACITY),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block<S> {
    pub name: String,
    pub x: S,
    pub y: S,
    pub width: S,
    pub height: S,
    pub power: S,
}

impl<S: Scalar> Block<S> {
    pub fn new(name: impl Into<String>, x: S, y: S, width: S, height: S, power: S) -> Self {
        Block { name: name.into(), x, y, width, height, power }
    }

    pub fn right(&self) -> S {
        self.x + self.width
    }

    pub fn top(&self) -> S {
        self.y + self.height
    }

    pub fn area(&self) -> S {
        self.width * self.height
    }

    pub fn is_background(&self) -> bool {
        self.name.starts_with(BACKGROUND_PREFIX)
    }

    /// Area shared with the rectangle `[x0, x1] × [y0, y1]`.
    pub fn overlap_with_rect(&self, x0: S, y0: S, x1: S, y1: S) -> S {
        let w = self.right().min(x1) - self.x.max(x0);
        let h = self.top().min(y1) - self.y.max(y0);
        if w > S::zero() && h > S::zero() {
            w * h
        } else {
            S::zero()
        }
    }

    pub fn overlap_area(&self, other: &Block<S>) -> S {
        self.overlap_with_rect(other.x, other.y, other.right(), other.top())
    }

    pub fn contains_point(&self, px: S, py: S) -> bool {
        px > self.x && px < self.right() && py > self.y && py < self.top()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Floorplan<S> {
    pub die_width: S,
    pub die_height: S,
    pub blocks: Vec<Block<S>>,
}

impl<S: Scalar> Floorplan<S> {
    pub fn new(die_width: S, die_height: S) -> Self {
        Floorplan { die_width, die_height, blocks: Vec::new() }
    }

    pub fn with_blocks(die_width: S, die_height: S, blocks: Vec<Block<S>>) -> Self {
        Floorplan { die_width, die_height, blocks }
    }

    pub fn die_area(&self) -> S {
        self.die_width * self.die_height
    }

    pub fn block(&self, name: &str) -> Option<&Block<S>> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn total_power(&self) -> S {
        crate::scalar::ordered_sum(self.blocks.iter().map(|b| b.power))
    }

    /// Blocks with strictly positive power.
    pub fn processors(&self) -> impl Iterator<Item = &Block<S>> {
        self.blocks.iter().filter(|b| b.power > S::zero())
    }

    /// Same blocks with every power set to zero.
    pub fn unpowered(&self) -> Self {
        let mut fp = self.clone();
        for b in &mut fp.blocks {
            b.power = S::zero();
        }
        fp
    }
}

/// A problem found by [`validate_floorplan`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    NonPositiveDie,
    NonPositiveDimension { block: String },
    NegativePower { block: String },
    OutOfDie { block: String },
    DuplicateName { name: String },
    /// `first` sorts before `second`; area in m², printed for humans.
    Overlap { first: String, second: String, area: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveDie => write!(f, "die dimensions must be positive"),
            Violation::NonPositiveDimension { block } => {
                write!(f, "block `{block}` has a nonpositive width or height")
            }
            Violation::NegativePower { block } => write!(f, "block `{block}` has negative power"),
            Violation::OutOfDie { block } => write!(f, "block `{block}` extends outside the die"),
            Violation::DuplicateName { name } => write!(f, "block name `{name}` is used more than once"),
            Violation::Overlap { first, second, area } => {
                write!(f, "blocks `{first}` and `{second}` overlap by {area} m²")
            }
        }
    }
}

/// Lists every violation; an empty list means the floorplan is valid. The result is sorted,
/// so block order does not affect it.
pub fn validate_floorplan<S: Scalar>(fp: &Floorplan<S>) -> Vec<Violation> {
    let mut out = BTreeSet::new();
    let zero = S::zero();
    if !(fp.die_width > zero) || !(fp.die_height > zero) {
        out.insert(Violation::NonPositiveDie);
    }
    let slack = S::of(1e-12) * fp.die_width.max(fp.die_height).abs();
    let mut seen = BTreeSet::new();
    for b in &fp.blocks {
        if !seen.insert(b.name.as_str()) {
            out.insert(Violation::DuplicateName { name: b.name.clone() });
        }
        if !(b.width > zero) || !(b.height > zero) {
            out.insert(Violation::NonPositiveDimension { block: b.name.clone() });
        }
        if b.power < zero || b.power.is_nan() {
            out.insert(Violation::NegativePower { block: b.name.clone() });
        }
        if b.x < -slack
            || b.y < -slack
            || b.right() > fp.die_width + slack
            || b.top() > fp.die_height + slack
        {
            out.insert(Violation::OutOfDie { block: b.name.clone() });
        }
    }
    let tol = S::of(OVERLAP_TOLERANCE);
    for (i, a) in fp.blocks.iter().enumerate() {
        for b in &fp.blocks[i + 1..] {
            let area = a.overlap_area(b);
            if area > tol {
                let (first, second) = if a.name <= b.name { (a, b) } else { (b, a) };
                out.insert(Violation::Overlap {
                    first: first.name.clone(),
                    second: second.name.clone(),
                    area: format!("{:e}", area.as_f64()),
                });
            }
        }
    }
    out.into_iter().collect()
}

fn ensure_valid<S: Scalar>(fp: &Floorplan<S>) -> Result<()> {
    let violations = validate_floorplan(fp);
    if violations.is_empty() {
        Ok(())
    } else {
        let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
        Err(Error::InvalidFloorplan(text.join("; ")))
    }
}

/// Sorted coordinates with near-duplicates (closer than `eps`) collapsed.
fn breakpoints<S: Scalar>(mut values: Vec<S>, eps: S) -> Vec<S> {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    let mut out: Vec<S> = Vec::with_capacity(values.len());
    for v in values {
        match out.last() {
            Some(&last) if v - last <= eps => {}
            _ => out.push(v),
        }
    }
    out
}

/// Appends zero-power background blocks (`_bg0`, `_bg1`, ...) so that blocks tile the die.
///
/// The uncovered area is cut along every block edge, merged into maximal horizontal runs,
/// and runs with identical x-extent in consecutive rows are merged vertically.
pub fn fill_background<S: Scalar>(fp: &Floorplan<S>) -> Result<Floorplan<S>> {
    ensure_valid(fp)?;
    let (w, h) = (fp.die_width, fp.die_height);
    let eps = S::of(1e-12) * w.max(h);
    let clamp = |v: S, hi: S| v.max(S::zero()).min(hi);
    let mut xs = vec![S::zero(), w];
    let mut ys = vec![S::zero(), h];
    for b in &fp.blocks {
        xs.push(clamp(b.x, w));
        xs.push(clamp(b.right(), w));
        ys.push(clamp(b.y, h));
        ys.push(clamp(b.top(), h));
    }
    let xs = breakpoints(xs, eps);
    let ys = breakpoints(ys, eps);
    let half = S::of(0.5);

    // (x0, x1, y0, y1) of open rectangles, keyed by their column range
    let mut open: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut done: Vec<(usize, usize, usize, usize)> = Vec::new();
    for j in 0..ys.len() - 1 {
        let cy = (ys[j] + ys[j + 1]) * half;
        let mut runs = Vec::new();
        let mut start = None;
        for i in 0..xs.len() - 1 {
            let cx = (xs[i] + xs[i + 1]) * half;
            let covered = fp.blocks.iter().any(|b| b.contains_point(cx, cy));
            match (covered, start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    runs.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, xs.len() - 1));
        }
        let mut next_open = Vec::new();
        for (a, b) in runs {
            if let Some(pos) = open.iter().position(|r| r.0 == a && r.1 == b) {
                let r = open.remove(pos);
                next_open.push((r.0, r.1, r.2, j + 1));
            } else {
                next_open.push((a, b, j, j + 1));
            }
        }
        done.append(&mut open);
        open = next_open;
    }
    done.append(&mut open);
    done.sort_by_key(|r| (r.2, r.0));

    let mut out = fp.clone();
    for (k, (x0, x1, y0, y1)) in done.into_iter().enumerate() {
        out.blocks.push(Block::new(
            format!("{BACKGROUND_PREFIX}{k}"),
            xs[x0],
            ys[y0],
            xs[x1] - xs[x0],
            ys[y1] - ys[y0],
            S::zero(),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttachSide {
    Top,
    Bottom,
}

impl std::str::FromStr for AttachSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top" => Ok(AttachSide::Top),
            "bottom" => Ok(AttachSide::Bottom),
            other => Err(Error::invalid(format!("attach_side must be top or bottom, got `{other}`"))),
        }
    }
}

impl fmt::Display for AttachSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttachSide::Top => "top",
            AttachSide::Bottom => "bottom",
        })
    }
}

/// Heat-removal path on one face of the stack: spreader and sink base conduct vertically over
/// the die footprint into a common sink node, which convects to ambient.
#[derive(Debug, Clone, PartialEq)]
pub struct PackageModel<S> {
    pub ambient: S,
    /// Sink-to-ambient resistance (K/W).
    pub convection_resistance: S,
    pub spreader_thickness: S,
    pub spreader_conductivity: S,
    pub sink_thickness: S,
    pub sink_conductivity: S,
    pub attach_side: AttachSide,
}

impl<S: Scalar> Default for PackageModel<S> {
    fn default() -> Self {
        PackageModel {
            ambient: S::of(318.15),
            convection_resistance: S::of(0.12),
            spreader_thickness: S::of(1.0e-3),
            spreader_conductivity: S::of(400.0),
            sink_thickness: S::of(2.5e-3),
            sink_conductivity: S::of(400.0),
            attach_side: AttachSide::Top,
        }
    }
}

impl<S: Scalar> PackageModel<S> {
    pub fn validate(&self) -> Result<()> {
        let zero = S::zero();
        let ok = self.ambient > zero
            && self.convection_resistance > zero
            && self.spreader_thickness >= zero
            && self.sink_thickness >= zero
            && self.spreader_conductivity > zero
            && self.sink_conductivity > zero;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("package parameters out of range"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<S> {
    pub name: String,
    pub material: Material<S>,
    pub thickness: S,
    /// Blocks of this layer; uncovered area is background of the layer material at 0 W.
    pub floorplan: Floorplan<S>,
    /// Number of cell slabs across the thickness.
    pub nz: usize,
}

impl<S: Scalar> Layer<S> {
    pub fn silicon(name: impl Into<String>, floorplan: Floorplan<S>) -> Self {
        Layer {
            name: name.into(),
            material: Material::silicon(),
            thickness: S::of(SILICON_THICKNESS),
            floorplan,
            nz: SILICON_NZ,
        }
    }

    pub fn tim(name: impl Into<String>, die_width: S, die_height: S) -> Self {
        Layer {
            name: name.into(),
            material: Material::epoxy_tim(),
            thickness: S::of(TIM_THICKNESS),
            floorplan: Floorplan::new(die_width, die_height),
            nz: TIM_NZ,
        }
    }
}

/// Layers ordered bottom (index 0) to top, plus the package.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack<S> {
    pub layers: Vec<Layer<S>>,
    pub package: PackageModel<S>,
}

impl<S: Scalar> Stack<S> {
    pub fn new(layers: Vec<Layer<S>>, package: PackageModel<S>) -> Result<Self> {
        let stack = Stack { layers, package };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .layers
            .first()
            .ok_or_else(|| Error::invalid("a stack needs at least one layer"))?;
        let (w, h) = (first.floorplan.die_width, first.floorplan.die_height);
        for layer in &self.layers {
            if !(layer.thickness > S::zero()) || layer.nz == 0 {
                return Err(Error::invalid(format!(
                    "layer `{}` needs positive thickness and nz ≥ 1",
                    layer.name
                )));
            }
            if layer.floorplan.die_width != w || layer.floorplan.die_height != h {
                return Err(Error::invalid(format!(
                    "layer `{}` die size differs from layer `{}`",
                    layer.name, first.name
                )));
            }
            ensure_valid(&layer.floorplan)
                .map_err(|e| Error::InvalidFloorplan(format!("layer `{}`: {e}", layer.name)))?;
        }
        self.package.validate()
    }

    pub fn die_width(&self) -> S {
        self.layers[0].floorplan.die_width
    }

    pub fn die_height(&self) -> S {
        self.layers[0].floorplan.die_height
    }

    pub fn total_power(&self) -> S {
        crate::scalar::ordered_sum(self.layers.iter().map(|l| l.floorplan.total_power()))
    }

    /// Copy with every layer background-filled.
    pub fn filled(&self) -> Result<Self> {
        let mut out = self.clone();
        for layer in &mut out.layers {
            if !layer.floorplan.blocks.iter().any(Block::is_background) {
                layer.floorplan = fill_background(&layer.floorplan)?;
            }
        }
        Ok(out)
    }
}

/// Lateral cell counts of a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid(format!("grid must be at least 2x2, got {nx}x{ny}")));
        }
        Ok(GridSpec { nx, ny })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nx: 64, ny: 64 }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.nx, self.ny)
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// Parses `NXxNY`, e.g. `64x64`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::invalid(format!("grid must look like 64x64, got `{s}`")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("grid must look like 64x64, got `{s}`")))
        };
        GridSpec::new(parse(a)?, parse(b)?)
    }
}
