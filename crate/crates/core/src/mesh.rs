//! Finite-volume discretisation of a stack and assembly of the steady system `G·T = P`.
//!
//! Cells are laid out slab by slab from the bottom of the stack; within a slab the lateral
//! index is `iy * nx + ix`. The unknown after the last cell is the heat-sink node shared by
//! every cell on the package face.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::io::PowerMap;
use crate::model::{AttachSide, Block, GridSpec, PackageModel, Stack};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Slab<S> {
    pub layer: usize,
    pub iz: usize,
    pub z_bottom: S,
    pub dz: S,
    pub conductivity: S,
}

#[derive(Debug, Clone)]
pub struct Mesh<S> {
    pub nx: usize,
    pub ny: usize,
    pub dx: S,
    pub dy: S,
    pub die_width: S,
    pub die_height: S,
    pub slabs: Vec<Slab<S>>,
    pub package_side: AttachSide,
    layer_slabs: Vec<Range<usize>>,
    layer_names: Vec<String>,
    material_names: Vec<String>,
    blocks: Vec<Vec<Block<S>>>,
    /// per layer, per lateral cell: index into `blocks[layer]`
    owners: Vec<Vec<usize>>,
    /// per layer, per block: lateral cells it overlaps with the overlap area
    coverage: Vec<Vec<Vec<(usize, S)>>>,
}

/// Geometry and ownership of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell<'a, S> {
    pub index: usize,
    pub slab: usize,
    pub layer: usize,
    pub iz: usize,
    pub ix: usize,
    pub iy: usize,
    pub center: [S; 3],
    pub size: [S; 3],
    pub conductivity: S,
    pub material: &'a str,
    pub block: &'a str,
}

impl<S: Scalar> Mesh<S> {
    pub fn lateral_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_count(&self) -> usize {
        self.slabs.len() * self.lateral_count()
    }

    /// Cells plus the sink node.
    pub fn unknowns(&self) -> usize {
        self.cell_count() + 1
    }

    pub fn sink_node(&self) -> usize {
        self.cell_count()
    }

    pub fn layer_count(&self) -> usize {
        self.layer_slabs.len()
    }

    pub fn layer_name(&self, layer: usize) -> &str {
        &self.layer_names[layer]
    }

    /// Slab indices of a layer, bottom to top.
    pub fn layer_slabs(&self, layer: usize) -> Range<usize> {
        self.layer_slabs[layer].clone()
    }

    pub fn blocks(&self, layer: usize) -> &[Block<S>] {
        &self.blocks[layer]
    }

    /// Index into [`Mesh::blocks`] of the block owning a lateral cell.
    pub fn owner(&self, layer: usize, lateral: usize) -> usize {
        self.owners[layer][lateral]
    }

    pub fn coverage(&self, layer: usize, block: usize) -> &[(usize, S)] {
        &self.coverage[layer][block]
    }

    pub fn index(&self, slab: usize, ix: usize, iy: usize) -> usize {
        slab * self.lateral_count() + iy * self.nx + ix
    }

    pub fn package_slab(&self) -> usize {
        match self.package_side {
            AttachSide::Top => self.slabs.len() - 1,
            AttachSide::Bottom => 0,
        }
    }

    pub fn cell(&self, index: usize) -> Cell<'_, S> {
        assert!(index < self.cell_count(), "cell index out of range");
        let slab = index / self.lateral_count();
        let lateral = index % self.lateral_count();
        let (ix, iy) = (lateral % self.nx, lateral / self.nx);
        let s = &self.slabs[slab];
        let half = S::of(0.5);
        Cell {
            index,
            slab,
            layer: s.layer,
            iz: s.iz,
            ix,
            iy,
            center: [
                self.dx * (S::of(ix as f64) + half),
                self.dy * (S::of(iy as f64) + half),
                s.z_bottom + s.dz * half,
            ],
            size: [self.dx, self.dy, s.dz],
            conductivity: s.conductivity,
            material: &self.material_names[s.layer],
            block: &self.blocks[s.layer][self.owners[s.layer][lateral]].name,
        }
    }
}

/// Splits the stack into `nx·ny` columns and `nz` slabs per layer and assigns every lateral
/// cell to the block with the largest footprint overlap (lowest block index on ties).
/// Floorplans are background-filled first when needed.
pub fn discretize<S: Scalar>(stack: &Stack<S>, grid: GridSpec) -> Result<Mesh<S>> {
    let grid = GridSpec::new(grid.nx, grid.ny)?;
    let stack = stack.filled()?;
    stack.validate()?;
    let (w, h) = (stack.die_width(), stack.die_height());
    let dx = w / S::of(grid.nx as f64);
    let dy = h / S::of(grid.ny as f64);
    if !(dx > S::zero()) || !(dy > S::zero()) {
        return Err(Error::invalid("grid spacing must be positive"));
    }

    let mut slabs = Vec::new();
    let mut layer_slabs = Vec::new();
    let mut z = S::zero();
    for (li, layer) in stack.layers.iter().enumerate() {
        let dz = layer.thickness / S::of(layer.nz as f64);
        let start = slabs.len();
        for iz in 0..layer.nz {
            slabs.push(Slab {
                layer: li,
                iz,
                z_bottom: z + dz * S::of(iz as f64),
                dz,
                conductivity: layer.material.conductivity,
            });
        }
        z += layer.thickness;
        layer_slabs.push(start..slabs.len());
    }

    let lateral = grid.nx * grid.ny;
    let mut owners = Vec::new();
    let mut coverage = Vec::new();
    for layer in &stack.layers {
        let blocks = &layer.floorplan.blocks;
        let mut best = vec![(S::zero(), usize::MAX); lateral];
        let mut per_block = Vec::with_capacity(blocks.len());
        for (bi, block) in blocks.iter().enumerate() {
            let cells = overlapping_cells(block, dx, dy, grid);
            for &(cell, area) in &cells {
                if area > best[cell].0 {
                    best[cell] = (area, bi);
                }
            }
            per_block.push(cells);
        }
        if let Some(cell) = best.iter().position(|b| b.1 == usize::MAX) {
            return Err(Error::invalid(format!(
                "layer `{}`: cell {cell} is not covered by any block",
                layer.name
            )));
        }
        let owner: Vec<usize> = best.into_iter().map(|b| b.1).collect();
        for (bi, block) in blocks.iter().enumerate() {
            if block.power > S::zero() && !owner.contains(&bi) {
                let half = S::of(0.5);
                let has_center = per_block[bi].iter().any(|&(c, _)| {
                    let cx = dx * (S::of((c % grid.nx) as f64) + half);
                    let cy = dy * (S::of((c / grid.nx) as f64) + half);
                    block.contains_point(cx, cy)
                });
                if !has_center {
                    return Err(Error::GridTooCoarse(block.name.clone()));
                }
            }
        }
        owners.push(owner);
        coverage.push(per_block);
    }

    Ok(Mesh {
        nx: grid.nx,
        ny: grid.ny,
        dx,
        dy,
        die_width: w,
        die_height: h,
        slabs,
        package_side: stack.package.attach_side,
        layer_slabs,
        layer_names: stack.layers.iter().map(|l| l.name.clone()).collect(),
        material_names: stack.layers.iter().map(|l| l.material.name.clone()).collect(),
        blocks: stack.layers.iter().map(|l| l.floorplan.blocks.clone()).collect(),
        owners,
        coverage,
    })
}

fn overlapping_cells<S: Scalar>(block: &Block<S>, dx: S, dy: S, grid: GridSpec) -> Vec<(usize, S)> {
    let span = |lo: S, hi: S, d: S, n: usize| {
        let a = (lo / d).floor().to_usize().unwrap_or(0).min(n);
        let b = (hi / d).ceil().to_usize().unwrap_or(n).min(n);
        a..b
    };
    let mut out = Vec::new();
    for iy in span(block.y, block.top(), dy, grid.ny) {
        let y0 = dy * S::of(iy as f64);
        for ix in span(block.x, block.right(), dx, grid.nx) {
            let x0 = dx * S::of(ix as f64);
            let area = block.overlap_with_rect(x0, y0, x0 + dx, y0 + dy);
            if area > S::zero() {
                out.push((iy * grid.nx + ix, area));
            }
        }
    }
    out
}

/// Conductance of two half-cells in series across a shared face of area `area`.
pub fn series_conductance<S: Scalar>(k_a: S, d_a: S, k_b: S, d_b: S, area: S) -> S {
    S::one() / (d_a / (k_a * area) + d_b / (k_b * area))
}

/// Conductance between two face-adjacent cells.
pub fn face_conductance<S: Scalar>(mesh: &Mesh<S>, a: usize, b: usize) -> Result<S> {
    let n = mesh.cell_count();
    if a >= n || b >= n {
        return Err(Error::OutOfRange(format!("cell {} of {n}", a.max(b))));
    }
    let (ca, cb) = (mesh.cell(a), mesh.cell(b));
    let d = |p: usize, q: usize| p.abs_diff(q);
    let half = S::of(0.5);
    let (area, da, db) = match (d(ca.ix, cb.ix), d(ca.iy, cb.iy), d(ca.slab, cb.slab)) {
        (1, 0, 0) => (ca.size[1] * ca.size[2], ca.size[0] * half, cb.size[0] * half),
        (0, 1, 0) => (ca.size[0] * ca.size[2], ca.size[1] * half, cb.size[1] * half),
        (0, 0, 1) => (ca.size[0] * ca.size[1], ca.size[2] * half, cb.size[2] * half),
        _ => return Err(Error::NotAdjacent(a, b)),
    };
    Ok(series_conductance(ca.conductivity, da, cb.conductivity, db, area))
}

/// Conductance from a package-face cell to the sink node: the half cell, spreader and sink
/// base in series over the cell footprint.
pub fn package_conductance<S: Scalar>(package: &PackageModel<S>, k_cell: S, dz: S, area: S) -> S {
    let r = dz * S::of(0.5) / (k_cell * area)
        + package.spreader_thickness / (package.spreader_conductivity * area)
        + package.sink_thickness / (package.sink_conductivity * area);
    S::one() / r
}

/// Assembled steady-state system. `rhs = source + boundary`.
#[derive(Debug, Clone)]
pub struct SparseSystem<S> {
    pub matrix: CsrMatrix<S>,
    /// Injected power per unknown (W).
    pub source: Vec<S>,
    /// Ambient coupling: `ambient / convection_resistance` on the sink node, zero elsewhere.
    pub boundary: Vec<S>,
    pub ambient: S,
    pub sink_node: usize,
    /// `(cell, conductance to sink node)` for every package-face cell.
    pub package_links: Vec<(usize, S)>,
    /// Sink node to ambient (W/K).
    pub convection_conductance: S,
}

impl<S: Scalar> SparseSystem<S> {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn rhs(&self) -> Vec<S> {
        self.source.iter().zip(&self.boundary).map(|(s, b)| *s + *b).collect()
    }

    pub fn with_source(mut self, source: Vec<S>) -> Result<Self> {
        if source.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: source.len() });
        }
        self.source = source;
        Ok(self)
    }

    pub fn total_source(&self) -> S {
        crate::scalar::ordered_sum(self.source.iter().copied())
    }

    /// Heat flowing from the package face into the sink node (W).
    pub fn package_flux(&self, values: &[S]) -> S {
        let sink = values[self.sink_node];
        crate::scalar::ordered_sum(self.package_links.iter().map(|&(c, g)| g * (values[c] - sink)))
    }

    /// Heat leaving the sink node to ambient (W).
    pub fn ambient_flux(&self, values: &[S]) -> S {
        self.convection_conductance * (values[self.sink_node] - self.ambient)
    }
}

/// Builds the conductance matrix: interior faces couple neighbours, lateral die faces and the
/// face opposite the package are adiabatic, package-face cells couple to the sink node and the
/// sink node to ambient. The source vector starts at zero.
pub fn assemble<S: Scalar>(mesh: &Mesh<S>, package: &PackageModel<S>) -> Result<SparseSystem<S>> {
    package.validate()?;
    let (nx, ny) = (mesh.nx, mesh.ny);
    let nxy = mesh.lateral_count();
    let ncells = mesh.cell_count();
    let sink = mesh.sink_node();
    let half = S::of(0.5);
    let pkg_slab = mesh.package_slab();
    let cell_area = mesh.dx * mesh.dy;

    let mut rows: Vec<Vec<(usize, S)>> = Vec::with_capacity(ncells + 1);
    let mut links = Vec::with_capacity(nxy);
    for i in 0..ncells {
        let slab_i = i / nxy;
        let lateral = i % nxy;
        let (ix, iy) = (lateral % nx, lateral / nx);
        let s = &mesh.slabs[slab_i];
        let k = s.conductivity;
        let gx = series_conductance(k, mesh.dx * half, k, mesh.dx * half, mesh.dy * s.dz);
        let gy = series_conductance(k, mesh.dy * half, k, mesh.dy * half, mesh.dx * s.dz);
        let vert = |other: usize| {
            let o = &mesh.slabs[other];
            series_conductance(k, s.dz * half, o.conductivity, o.dz * half, cell_area)
        };

        // neighbours in ascending column order
        let mut nbrs: Vec<(usize, S)> = Vec::with_capacity(7);
        if slab_i > 0 {
            nbrs.push((i - nxy, vert(slab_i - 1)));
        }
        if iy > 0 {
            nbrs.push((i - nx, gy));
        }
        if ix > 0 {
            nbrs.push((i - 1, gx));
        }
        let split = nbrs.len();
        if ix + 1 < nx {
            nbrs.push((i + 1, gx));
        }
        if iy + 1 < ny {
            nbrs.push((i + nx, gy));
        }
        if slab_i + 1 < mesh.slabs.len() {
            nbrs.push((i + nxy, vert(slab_i + 1)));
        }
        if slab_i == pkg_slab {
            let g = package_conductance(package, k, s.dz, cell_area);
            links.push((i, g));
            nbrs.push((sink, g));
        }
        let mut diag = S::zero();
        for &(_, g) in &nbrs {
            diag += g;
        }
        let mut row = Vec::with_capacity(nbrs.len() + 1);
        row.extend(nbrs[..split].iter().map(|&(c, g)| (c, -g)));
        row.push((i, diag));
        row.extend(nbrs[split..].iter().map(|&(c, g)| (c, -g)));
        rows.push(row);
    }

    let convection = S::one() / package.convection_resistance;
    let mut sink_row: Vec<(usize, S)> = links.iter().map(|&(c, g)| (c, -g)).collect();
    let mut diag = S::zero();
    for &(_, g) in &links {
        diag += g;
    }
    sink_row.push((sink, diag + convection));
    rows.push(sink_row);

    let mut boundary = vec![S::zero(); ncells + 1];
    boundary[sink] = package.ambient * convection;
    Ok(SparseSystem {
        matrix: CsrMatrix::from_rows(rows),
        source: vec![S::zero(); ncells + 1],
        boundary,
        ambient: package.ambient,
        sink_node: sink,
        package_links: links,
        convection_conductance: convection,
    })
}

/// Distributes block powers over cells: each block's power is split over the cells its
/// footprint overlaps, proportionally to overlap area, and uniformly over the layer's slabs.
/// `powers[layer]` names blocks of that layer; missing blocks get 0 W.
pub fn power_vector<S: Scalar>(mesh: &Mesh<S>, powers: &[PowerMap<S>]) -> Result<Vec<S>> {
    if powers.len() != mesh.layer_count() {
        return Err(Error::DimensionMismatch { expected: mesh.layer_count(), found: powers.len() });
    }
    let mut p = vec![S::zero(); mesh.unknowns()];
    let nxy = mesh.lateral_count();
    for (layer, map) in powers.iter().enumerate() {
        let blocks = mesh.blocks(layer);
        let slabs = mesh.layer_slabs(layer);
        let nz = S::of(slabs.len() as f64);
        for (name, &watts) in map.iter() {
            let bi = blocks
                .iter()
                .position(|b| b.name == *name)
                .ok_or_else(|| Error::UnknownBlock(name.clone()))?;
            if watts < S::zero() {
                return Err(Error::invalid(format!("block `{name}` has negative power")));
            }
            if watts == S::zero() {
                continue;
            }
            let cells = mesh.coverage(layer, bi);
            let covered = crate::scalar::ordered_sum(cells.iter().map(|c| c.1));
            if !(covered > S::zero()) {
                return Err(Error::GridTooCoarse(name.clone()));
            }
            for &(lateral, area) in cells {
                let share = watts * area / covered / nz;
                for slab in slabs.clone() {
                    p[slab * nxy + lateral] += share;
                }
            }
        }
    }
    Ok(p)
}

/// Block powers as carried by the stack's floorplans, one map per layer.
pub fn stack_powers<S: Scalar>(stack: &Stack<S>) -> Vec<PowerMap<S>> {
    stack.layers.iter().map(|l| PowerMap::from_floorplan(&l.floorplan)).collect()
}
