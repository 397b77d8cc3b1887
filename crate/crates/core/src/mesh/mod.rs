//! Cartesian domain split into meshblocks with ghost layers.

mod array;
mod boundary;
mod snapshot;

pub use array::{Array3, Array4, SliceWriter, Writer4};
pub use boundary::{
    buffer_len, exchange_ghosts, exchange_stage, pack_boundary, unpack_boundary, BoundaryBuffer, BoundaryError, FaceId, Side,
};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotError};

use thiserror::Error;

use crate::exec::{Executor, LoopBounds};
use crate::real::Real;

/// Conserved variable slots in `u`.
pub const IDN: usize = 0;
pub const IM1: usize = 1;
pub const IM2: usize = 2;
pub const IM3: usize = 3;
pub const IEN: usize = 4;
pub const IB1: usize = 5;
pub const IB2: usize = 6;
pub const IB3: usize = 7;
/// Primitive slots in `w` (density, B slots shared with `u`).
pub const IV1: usize = 1;
pub const IV2: usize = 2;
pub const IV3: usize = 3;
pub const IPR: usize = 4;
pub const NVAR: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("dimension {dim}: {cells} global cells are not a multiple of the {block}-cell meshblock")]
    NotDivisible { dim: usize, cells: usize, block: usize },
    #[error("dimension {dim}: cell counts must be positive")]
    ZeroCells { dim: usize },
    #[error("ghost width {0} is below the 2 layers needed by the reconstruction stencil")]
    GhostWidth(usize),
    #[error("domain extent in dimension {dim} must be positive and finite, got {value}")]
    Extent { dim: usize, value: f64 },
    #[error("adiabatic index must exceed 1, got {0}")]
    Gamma(f64),
    #[error("CFL number must lie in (0, 1), got {0}")]
    Cfl(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshConfig {
    /// Global active cells per dimension.
    pub nx: [usize; 3],
    /// Meshblock active cells per dimension.
    pub mb: [usize; 3],
    pub ng: usize,
    /// Physical extents; the domain is `[0, extent)` in each dimension.
    pub extent: [f64; 3],
    pub gamma: f64,
    pub cfl: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { nx: [16; 3], mb: [16; 3], ng: 2, extent: [1.0; 3], gamma: 5.0 / 3.0, cfl: 0.3 }
    }
}

impl MeshConfig {
    /// Cube of `n` cells in a single block with unit extent.
    pub fn cube(n: usize) -> Self {
        MeshConfig { nx: [n; 3], mb: [n; 3], ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        for d in 0..3 {
            if self.nx[d] == 0 || self.mb[d] == 0 {
                return Err(MeshError::ZeroCells { dim: d + 1 });
            }
            if self.nx[d] % self.mb[d] != 0 {
                return Err(MeshError::NotDivisible { dim: d + 1, cells: self.nx[d], block: self.mb[d] });
            }
            if !(self.extent[d] > 0.0 && self.extent[d].is_finite()) {
                return Err(MeshError::Extent { dim: d + 1, value: self.extent[d] });
            }
        }
        if self.ng < 2 {
            return Err(MeshError::GhostWidth(self.ng));
        }
        if !(self.gamma > 1.0) {
            return Err(MeshError::Gamma(self.gamma));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(MeshError::Cfl(self.cfl));
        }
        Ok(())
    }

    pub fn block_grid(&self) -> [usize; 3] {
        [self.nx[0] / self.mb[0], self.nx[1] / self.mb[1], self.nx[2] / self.mb[2]]
    }

    pub fn dx(&self) -> [f64; 3] {
        [self.extent[0] / self.nx[0] as f64, self.extent[1] / self.nx[1] as f64, self.extent[2] / self.nx[2] as f64]
    }

    pub fn active_cells(&self) -> usize {
        self.nx.iter().product()
    }
}

/// Staggered face-centered magnetic field.
///
/// `b1` has one extra entry along `i`, `b2` along `j`, `b3` along `k`; index
/// `i` of `b1` is the lower x1 face of cell `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField<T> {
    pub b1: Array3<T>,
    pub b2: Array3<T>,
    pub b3: Array3<T>,
}

impl<T: Real> FaceField<T> {
    pub fn zeros(n: [usize; 3]) -> Self {
        FaceField {
            b1: Array3::zeros(n[2], n[1], n[0] + 1),
            b2: Array3::zeros(n[2], n[1] + 1, n[0]),
            b3: Array3::zeros(n[2] + 1, n[1], n[0]),
        }
    }

    pub fn component(&self, d: usize) -> &Array3<T> {
        match d {
            0 => &self.b1,
            1 => &self.b2,
            _ => &self.b3,
        }
    }

    pub fn component_mut(&mut self, d: usize) -> &mut Array3<T> {
        match d {
            0 => &mut self.b1,
            1 => &mut self.b2,
            _ => &mut self.b3,
        }
    }

    pub fn copy_from(&mut self, o: &FaceField<T>) {
        self.b1.copy_from(&o.b1);
        self.b2.copy_from(&o.b2);
        self.b3.copy_from(&o.b3);
    }
}

/// Conserved cell data plus face fields: everything the exchange moves.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState<T> {
    pub u: Array4<T>,
    pub b: FaceField<T>,
}

impl<T: Real> FieldState<T> {
    pub fn zeros(n: [usize; 3]) -> Self {
        FieldState { u: Array4::zeros(NVAR, n[2], n[1], n[0]), b: FaceField::zeros(n) }
    }

    pub fn copy_from(&mut self, o: &FieldState<T>) {
        self.u.copy_from(&o.u);
        self.b.copy_from(&o.b);
    }
}

/// Which of a block's two field states an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// State at the start of the step (and the final result).
    Main,
    /// Predictor (half-step) state.
    Half,
}

/// Index geometry of a block, detached from its field storage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockGeom {
    /// First active index per dimension, `[is, js, ks]`.
    pub lo: [usize; 3],
    /// One past the last active index, `[ie, je, ke]`.
    pub hi: [usize; 3],
    /// Total cells per dimension including ghosts.
    pub ncells: [usize; 3],
    pub dx: [f64; 3],
}

impl BlockGeom {
    pub fn active(&self) -> LoopBounds {
        bounds_ijk(self.lo, self.hi)
    }

    pub fn full(&self) -> LoopBounds {
        LoopBounds::extent(self.ncells[2], self.ncells[1], self.ncells[0])
    }
}

#[derive(Clone, Debug)]
pub struct MeshBlock<T> {
    /// Position in the block grid.
    pub coords: [usize; 3],
    /// Global index of the first active cell per dimension.
    pub offset: [usize; 3],
    pub is: usize,
    pub ie: usize,
    pub js: usize,
    pub je: usize,
    pub ks: usize,
    pub ke: usize,
    /// Total cells per dimension including ghosts, `(n1, n2, n3)`.
    pub ncells: [usize; 3],
    pub dx: [f64; 3],
    pub ng: usize,
    pub state: FieldState<T>,
    pub half: FieldState<T>,
    /// Primitives `(rho, v1, v2, v3, p, B1, B2, B3)` over the whole block.
    pub w: Array4<T>,
}

impl<T: Real> MeshBlock<T> {
    fn new(cfg: &MeshConfig, coords: [usize; 3]) -> Self {
        let ng = cfg.ng;
        let n = [cfg.mb[0] + 2 * ng, cfg.mb[1] + 2 * ng, cfg.mb[2] + 2 * ng];
        MeshBlock {
            coords,
            offset: [coords[0] * cfg.mb[0], coords[1] * cfg.mb[1], coords[2] * cfg.mb[2]],
            is: ng,
            ie: ng + cfg.mb[0],
            js: ng,
            je: ng + cfg.mb[1],
            ks: ng,
            ke: ng + cfg.mb[2],
            ncells: n,
            dx: cfg.dx(),
            ng,
            state: FieldState::zeros(n),
            half: FieldState::zeros(n),
            w: Array4::zeros(NVAR, n[2], n[1], n[0]),
        }
    }

    pub fn active(&self) -> LoopBounds {
        LoopBounds::new((self.ks, self.ke), (self.js, self.je), (self.is, self.ie))
    }

    pub fn full(&self) -> LoopBounds {
        LoopBounds::extent(self.ncells[2], self.ncells[1], self.ncells[0])
    }

    pub fn active_cells(&self) -> usize {
        self.active().len()
    }

    pub fn geom(&self) -> BlockGeom {
        BlockGeom { lo: self.lo(), hi: self.hi(), ncells: self.ncells, dx: self.dx }
    }

    /// First active index per dimension, `[is, js, ks]`.
    pub fn lo(&self) -> [usize; 3] {
        [self.is, self.js, self.ks]
    }

    /// One past the last active index per dimension, `[ie, je, ke]`.
    pub fn hi(&self) -> [usize; 3] {
        [self.ie, self.je, self.ke]
    }

    /// Active start and end (exclusive) along dimension `d`.
    pub fn active_range(&self, d: usize) -> (usize, usize) {
        match d {
            0 => (self.is, self.ie),
            1 => (self.js, self.je),
            _ => (self.ks, self.ke),
        }
    }

    pub fn fields(&self, stage: Stage) -> &FieldState<T> {
        match stage {
            Stage::Main => &self.state,
            Stage::Half => &self.half,
        }
    }

    pub fn fields_mut(&mut self, stage: Stage) -> &mut FieldState<T> {
        match stage {
            Stage::Main => &mut self.state,
            Stage::Half => &mut self.half,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mesh<T> {
    pub cfg: MeshConfig,
    pub nblocks: [usize; 3],
    /// Blocks ordered with the x1 block coordinate fastest.
    pub blocks: Vec<MeshBlock<T>>,
    pub time: f64,
    pub cycle: u64,
}

/// Decomposes the domain into zero-initialized meshblocks.
pub fn build_mesh<T: Real>(cfg: &MeshConfig) -> Result<Mesh<T>, MeshError> {
    cfg.validate()?;
    let nb = cfg.block_grid();
    let mut blocks = Vec::with_capacity(nb.iter().product());
    for b3 in 0..nb[2] {
        for b2 in 0..nb[1] {
            for b1 in 0..nb[0] {
                blocks.push(MeshBlock::new(cfg, [b1, b2, b3]));
            }
        }
    }
    Ok(Mesh { cfg: cfg.clone(), nblocks: nb, blocks, time: 0.0, cycle: 0 })
}

impl<T: Real> Mesh<T> {
    pub fn block_index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.nblocks[1] + c[1]) * self.nblocks[0] + c[0]
    }

    /// Periodic neighbor of block `b` one step along `dim` (`-1` or `+1`).
    pub fn neighbor(&self, b: usize, dim: usize, step: isize) -> usize {
        let mut c = self.blocks[b].coords;
        let n = self.nblocks[dim] as isize;
        c[dim] = ((c[dim] as isize + step).rem_euclid(n)) as usize;
        self.block_index(c)
    }

    pub fn active_cells(&self) -> usize {
        self.cfg.active_cells()
    }

    /// Converts every field to another scalar type (exact for widening).
    pub fn convert<U: Real>(&self) -> Mesh<U> {
        fn conv4<T: Real, U: Real>(a: &Array4<T>) -> Array4<U> {
            let (v, n3, n2, n1) = a.dims();
            let mut out = Array4::zeros(v, n3, n2, n1);
            for (o, x) in out.as_mut_slice().iter_mut().zip(a.as_slice()) {
                *o = U::of(x.as_f64());
            }
            out
        }
        fn conv3<T: Real, U: Real>(a: &Array3<T>) -> Array3<U> {
            let (n3, n2, n1) = a.dims();
            let mut out = Array3::zeros(n3, n2, n1);
            for (o, x) in out.as_mut_slice().iter_mut().zip(a.as_slice()) {
                *o = U::of(x.as_f64());
            }
            out
        }
        fn conv_state<T: Real, U: Real>(s: &FieldState<T>) -> FieldState<U> {
            FieldState {
                u: conv4(&s.u),
                b: FaceField { b1: conv3(&s.b.b1), b2: conv3(&s.b.b2), b3: conv3(&s.b.b3) },
            }
        }
        Mesh {
            cfg: self.cfg.clone(),
            nblocks: self.nblocks,
            blocks: self
                .blocks
                .iter()
                .map(|b| MeshBlock {
                    coords: b.coords,
                    offset: b.offset,
                    is: b.is,
                    ie: b.ie,
                    js: b.js,
                    je: b.je,
                    ks: b.ks,
                    ke: b.ke,
                    ncells: b.ncells,
                    dx: b.dx,
                    ng: b.ng,
                    state: conv_state(&b.state),
                    half: conv_state(&b.half),
                    w: conv4(&b.w),
                })
                .collect(),
            time: self.time,
            cycle: self.cycle,
        }
    }
}

/// Discrete divergence of the face field in one cell.
#[inline]
pub fn cell_divergence<T: Real>(b: &FaceField<T>, dx: [f64; 3], k: usize, j: usize, i: usize) -> f64 {
    (b.b1.get(k, j, i + 1).as_f64() - b.b1.get(k, j, i).as_f64()) / dx[0]
        + (b.b2.get(k, j + 1, i).as_f64() - b.b2.get(k, j, i).as_f64()) / dx[1]
        + (b.b3.get(k + 1, j, i).as_f64() - b.b3.get(k, j, i).as_f64()) / dx[2]
}

/// Loop bounds from per-dimension `[i, j, k]` ranges.
pub fn bounds_ijk(lo: [usize; 3], hi: [usize; 3]) -> LoopBounds {
    LoopBounds::new((lo[2], hi[2]), (lo[1], hi[1]), (lo[0], hi[0]))
}

/// Largest `|div B|` over all active cells.
pub fn max_divergence_b<T: Real>(exec: &Executor, mesh: &Mesh<T>) -> f64 {
    mesh.blocks
        .iter()
        .map(|blk| {
            exec.par_reduce(
                blk.active(),
                0.0f64,
                |k, j, i| cell_divergence(&blk.state.b, blk.dx, k, j, i).abs(),
                f64::max,
            )
        })
        .fold(0.0, f64::max)
}

/// Adds two (sum, error) pairs with an error-free transformation, so the
/// result does not depend on the combination order to working precision.
#[inline]
fn two_sum_pair(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let s = a.0 + b.0;
    let bb = s - a.0;
    let err = (a.0 - (s - bb)) + (b.0 - bb);
    (s, a.1 + b.1 + err)
}

/// Volume sums of each conserved cell variable over the active domain,
/// accumulated with compensated summation.
pub fn conserved_totals<T: Real>(exec: &Executor, mesh: &Mesh<T>) -> [f64; NVAR] {
    let mut tot = [0.0; NVAR];
    for blk in &mesh.blocks {
        let vol = blk.dx[0] * blk.dx[1] * blk.dx[2];
        let u = &blk.state.u;
        let s = exec.par_reduce(
            blk.active(),
            [(0.0f64, 0.0f64); NVAR],
            |k, j, i| std::array::from_fn(|v| (u.get(v, k, j, i).as_f64(), 0.0)),
            |a, b| std::array::from_fn(|v| two_sum_pair(a[v], b[v])),
        );
        for v in 0..NVAR {
            tot[v] += (s[v].0 + s[v].1) * vol;
        }
    }
    tot
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_blocks() {
        let cfg = MeshConfig { nx: [64; 3], mb: [32; 3], ..Default::default() };
        let m: Mesh<f64> = build_mesh(&cfg).unwrap();
        assert_eq!(m.blocks.len(), 8);
        for b in &m.blocks {
            assert_eq!(b.active_cells(), 32 * 32 * 32);
            assert_eq!(b.state.u.dims(), (8, 36, 36, 36));
            assert_eq!(b.state.b.b1.dims(), (36, 36, 37));
            assert_eq!(b.state.b.b2.dims(), (36, 37, 36));
            assert_eq!(b.state.b.b3.dims(), (37, 36, 36));
            assert!(b.state.u.as_slice().iter().all(|&x| x == 0.0));
            assert_eq!(b.dx, [1.0 / 64.0; 3]);
        }
    }

    #[test]
    fn identity_decomposition() {
        let m: Mesh<f64> = build_mesh(&MeshConfig::cube(16)).unwrap();
        assert_eq!(m.blocks.len(), 1);
        assert_eq!(m.neighbor(0, 0, -1), 0);
    }

    #[test]
    fn indivisible_is_rejected() {
        let cfg = MeshConfig { nx: [48, 32, 32], mb: [32; 3], ..Default::default() };
        assert_eq!(
            build_mesh::<f64>(&cfg).unwrap_err(),
            MeshError::NotDivisible { dim: 1, cells: 48, block: 32 }
        );
    }

    #[test]
    fn thin_ghosts_rejected() {
        let cfg = MeshConfig { ng: 1, ..Default::default() };
        assert_eq!(build_mesh::<f64>(&cfg).unwrap_err(), MeshError::GhostWidth(1));
    }

    #[test]
    fn neighbors_wrap() {
        let cfg = MeshConfig { nx: [32, 16, 16], mb: [8, 8, 16], ..Default::default() };
        let m: Mesh<f64> = build_mesh(&cfg).unwrap();
        assert_eq!(m.nblocks, [4, 2, 1]);
        let b = m.block_index([0, 1, 0]);
        assert_eq!(m.blocks[m.neighbor(b, 0, -1)].coords, [3, 1, 0]);
        assert_eq!(m.blocks[m.neighbor(b, 1, 1)].coords, [0, 0, 0]);
        assert_eq!(m.neighbor(b, 2, 1), b);
    }

    fn set_faces(m: &mut Mesh<f64>, f: impl Fn(usize, [usize; 3]) -> f64) {
        for blk in &mut m.blocks {
            for d in 0..3 {
                let a = blk.state.b.component_mut(d);
                let (n3, n2, n1) = a.dims();
                for k in 0..n3 {
                    for j in 0..n2 {
                        for i in 0..n1 {
                            a.set(k, j, i, f(d, [i, j, k]));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn divergence_of_uniform_and_ramp() {
        let exec = Executor::serial();
        let mut m: Mesh<f64> = build_mesh(&MeshConfig::cube(8)).unwrap();
        set_faces(&mut m, |d, _| [0.3, -1.2, 2.5][d]);
        assert_eq!(max_divergence_b(&exec, &m), 0.0);
        let dx = m.cfg.dx()[0];
        let slope = 3.0;
        set_faces(&mut m, |d, idx| if d == 0 { slope * idx[0] as f64 * dx } else { 0.0 });
        assert!((max_divergence_b(&exec, &m) - slope).abs() < 1e-12);
    }
}
