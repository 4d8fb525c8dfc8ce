//! Observables computed from a solved field: block and layer statistics, global extremes,
//! layer gaps and lateral slices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Scalar;
use crate::solver::TemperatureField;

/// Lateral grid of temperatures, `values[iy * nx + ix]`, `iy = 0` at the bottom edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2d {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl Grid2d {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    /// `(min, max)` of the values; `None` when empty.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub name: String,
    pub layer: String,
    #[serde(rename = "power_W")]
    pub power_w: f64,
    #[serde(rename = "min_K")]
    pub min_k: f64,
    #[serde(rename = "max_K")]
    pub max_k: f64,
    #[serde(rename = "avg_K")]
    pub avg_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range3 {
    #[serde(rename = "min_K")]
    pub min_k: f64,
    #[serde(rename = "max_K")]
    pub max_k: f64,
    #[serde(rename = "avg_K")]
    pub avg_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    pub name: String,
    #[serde(rename = "min_K")]
    pub min_k: f64,
    #[serde(rename = "max_K")]
    pub max_k: f64,
    #[serde(rename = "avg_K")]
    pub avg_k: f64,
    /// Aggregate over the layer's blocks with positive power.
    pub processors: Option<Range3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    #[serde(rename = "value_K")]
    pub value_k: f64,
    pub cell: usize,
    pub layer: String,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub peak: Location,
    pub lowest: Location,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub unknowns: usize,
    pub iterations: usize,
    pub residual: f64,
}

/// Reference value next to the computed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCheck {
    pub observable: String,
    #[serde(rename = "reference_K")]
    pub reference_k: f64,
    #[serde(rename = "computed_K")]
    pub computed_k: f64,
    #[serde(rename = "delta_K")]
    pub delta_k: f64,
    pub source: String,
    pub note: Option<String>,
}

/// Per-layer column maximum over the layer's slabs, kept so maps can be re-rendered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMap {
    pub layer: String,
    pub map: Grid2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalReport {
    pub scenario: Option<String>,
    pub grid: String,
    #[serde(rename = "ambient_K")]
    pub ambient_k: f64,
    pub solver: SolverStats,
    pub peak: Location,
    pub lowest: Location,
    pub layers: Vec<LayerStats>,
    pub blocks: Vec<BlockStats>,
    pub references: Vec<ReferenceCheck>,
    pub field: Vec<LayerMap>,
}

impl ThermalReport {
    pub fn layer(&self, name: &str) -> Option<&LayerStats> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn block(&self, layer: &str, name: &str) -> Option<&BlockStats> {
        self.blocks.iter().find(|b| b.layer == layer && b.name == name)
    }
}

fn check_len<S: Scalar>(field: &TemperatureField<S>, mesh: &Mesh<S>) -> Result<()> {
    if field.values.len() < mesh.cell_count() {
        return Err(Error::DimensionMismatch { expected: mesh.unknowns(), found: field.values.len() });
    }
    Ok(())
}

struct Acc {
    min: f64,
    max: f64,
    weighted: f64,
    volume: f64,
}

impl Acc {
    fn new() -> Self {
        Acc { min: f64::INFINITY, max: f64::NEG_INFINITY, weighted: 0.0, volume: 0.0 }
    }

    fn add(&mut self, t: f64, v: f64) {
        self.min = self.min.min(t);
        self.max = self.max.max(t);
        self.weighted += t * v;
        self.volume += v;
    }

    fn merge(&mut self, o: &Acc) {
        self.min = self.min.min(o.min);
        self.max = self.max.max(o.max);
        self.weighted += o.weighted;
        self.volume += o.volume;
    }

    fn finish(&self) -> Option<Range3> {
        (self.volume > 0.0).then(|| Range3 {
            min_k: self.min,
            max_k: self.max,
            avg_k: (self.weighted / self.volume).clamp(self.min, self.max),
        })
    }
}

/// One accumulator per block of each layer, over the cells the block owns.
fn block_accumulators<S: Scalar>(field: &TemperatureField<S>, mesh: &Mesh<S>) -> Vec<Vec<Acc>> {
    let nxy = mesh.lateral_count();
    let cell_area = (mesh.dx * mesh.dy).as_f64();
    (0..mesh.layer_count())
        .map(|layer| {
            let mut accs: Vec<Acc> = mesh.blocks(layer).iter().map(|_| Acc::new()).collect();
            for slab in mesh.layer_slabs(layer) {
                let v = cell_area * mesh.slabs[slab].dz.as_f64();
                for lateral in 0..nxy {
                    let t = field.values[slab * nxy + lateral].as_f64();
                    accs[mesh.owner(layer, lateral)].add(t, v);
                }
            }
            accs
        })
        .collect()
}

/// Min, max and volume-weighted average over each block's cells, in layer then floorplan
/// order. Blocks that own no cell are omitted.
pub fn block_stats<S: Scalar>(field: &TemperatureField<S>, mesh: &Mesh<S>, include_background: bool) -> Result<Vec<BlockStats>> {
    check_len(field, mesh)?;
    let accs = block_accumulators(field, mesh);
    let mut out = Vec::new();
    for (layer, layer_accs) in accs.iter().enumerate() {
        for (block, acc) in mesh.blocks(layer).iter().zip(layer_accs) {
            if block.is_background() && !include_background {
                continue;
            }
            if let Some(r) = acc.finish() {
                out.push(BlockStats {
                    name: block.name.clone(),
                    layer: mesh.layer_name(layer).to_string(),
                    power_w: block.power.as_f64(),
                    min_k: r.min_k,
                    max_k: r.max_k,
                    avg_k: r.avg_k,
                });
            }
        }
    }
    Ok(out)
}

pub fn layer_stats<S: Scalar>(field: &TemperatureField<S>, mesh: &Mesh<S>) -> Result<Vec<LayerStats>> {
    check_len(field, mesh)?;
    let accs = block_accumulators(field, mesh);
    let mut out = Vec::new();
    for (layer, layer_accs) in accs.iter().enumerate() {
        let mut all = Acc::new();
        let mut procs = Acc::new();
        for (block, acc) in mesh.blocks(layer).iter().zip(layer_accs) {
            if acc.volume == 0.0 {
                continue;
            }
            all.merge(acc);
            if block.power > S::zero() {
                procs.merge(acc);
            }
        }
        let r = all.finish().ok_or(Error::EmptyField)?;
        out.push(LayerStats {
            name: mesh.layer_name(layer).to_string(),
            min_k: r.min_k,
            max_k: r.max_k,
            avg_k: r.avg_k,
            processors: procs.finish(),
        });
    }
    Ok(out)
}

fn location<S: Scalar>(field: &TemperatureField<S>, mesh: &Mesh<S>, cell: usize) -> Location {
    let c = mesh.cell(cell);
    Location {
        value_k: field.values[cell].as_f64(),
        cell,
        layer: mesh.layer_name(c.layer).to_string(),
        x_m: c.center[0].as_f64(),
        y_m: c.center[1].as_f64(),
        z_m: c.center[2].as_f64(),
    }
}

/// Peak and lowest cell temperatures (the sink node is excluded); ties go to the lowest flat
/// index.
pub fn global_extremes<S: Scalar>(field: &TemperatureField<S>, mesh: &Mesh<S>) -> Result<Extremes> {
    check_len(field, mesh)?;
    let n = mesh.cell_count();
    if n == 0 {
        return Err(Error::EmptyField);
    }
    let (mut hi, mut lo) = (0, 0);
    for i in 1..n {
        let t = field.values[i];
        if t > field.values[hi] {
            hi = i;
        }
        if t < field.values[lo] {
            lo = i;
        }
    }
    Ok(Extremes { peak: location(field, mesh, hi), lowest: location(field, mesh, lo) })
}

/// Processor peak of `layer_a` minus processor peak of `layer_b`.
pub fn layer_gap(report: &ThermalReport, layer_a: &str, layer_b: &str) -> Result<f64> {
    let peak = |name: &str| -> Result<f64> {
        let layer = report
            .layer(name)
            .ok_or_else(|| Error::OutOfRange(format!("no layer `{name}`")))?;
        layer
            .processors
            .map(|p| p.max_k)
            .ok_or_else(|| Error::invalid(format!("layer `{name}` has no processor blocks")))
    };
    Ok(peak(layer_a)? - peak(layer_b)?)
}

/// Lateral temperatures of slab `z_index` within `layer`.
pub fn slice<S: Scalar>(field: &TemperatureField<S>, mesh: &Mesh<S>, layer: usize, z_index: usize) -> Result<Grid2d> {
    check_len(field, mesh)?;
    if layer >= mesh.layer_count() {
        return Err(Error::OutOfRange(format!("layer {layer} of {}", mesh.layer_count())));
    }
    let slabs = mesh.layer_slabs(layer);
    if z_index >= slabs.len() {
        return Err(Error::OutOfRange(format!("z index {z_index} of {} in layer {layer}", slabs.len())));
    }
    let nxy = mesh.lateral_count();
    let start = (slabs.start + z_index) * nxy;
    Ok(Grid2d {
        nx: mesh.nx,
        ny: mesh.ny,
        values: field.values[start..start + nxy].iter().map(|v| v.as_f64()).collect(),
    })
}

/// Column maximum over all slabs of a layer.
pub fn layer_map<S: Scalar>(field: &TemperatureField<S>, mesh: &Mesh<S>, layer: usize) -> Result<Grid2d> {
    let mut out = slice(field, mesh, layer, 0)?;
    for z in 1..mesh.layer_slabs(layer).len() {
        let s = slice(field, mesh, layer, z)?;
        for (a, b) in out.values.iter_mut().zip(s.values) {
            *a = a.max(b);
        }
    }
    Ok(out)
}

/// Report without reference values.
pub fn build_report<S: Scalar>(
    field: &TemperatureField<S>,
    mesh: &Mesh<S>,
    ambient: S,
    scenario: Option<&str>,
) -> Result<ThermalReport> {
    let ext = global_extremes(field, mesh)?;
    let field_maps = (0..mesh.layer_count())
        .map(|l| Ok(LayerMap { layer: mesh.layer_name(l).to_string(), map: layer_map(field, mesh, l)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThermalReport {
        scenario: scenario.map(str::to_string),
        grid: format!("{}x{}", mesh.nx, mesh.ny),
        ambient_k: ambient.as_f64(),
        solver: SolverStats {
            unknowns: field.values.len(),
            iterations: field.iterations,
            residual: field.residual.as_f64(),
        },
        peak: ext.peak,
        lowest: ext.lowest,
        layers: layer_stats(field, mesh)?,
        blocks: block_stats(field, mesh, false)?,
        references: Vec::new(),
        field: field_maps,
    })
}
