//! Periodic ghost exchange through flat boundary buffers.
//!
//! A buffer for face `(dim, side)` holds, in this order, the 8 conserved cell
//! variables followed by the `b1`, `b2`, `b3` face fields. Each component
//! covers its own index box, flattened `k-j-i` with `i` fastest:
//!
//! * along `dim`: `ng` layers. Cell data and tangential faces take the `ng`
//!   active layers next to the face. The normal face component takes the
//!   `ng` faces shifted one outward on the high side, so the face shared with
//!   the upper neighbor is written into that neighbor (the lower block owns
//!   it) and never the other way round.
//! * along dimensions swept before `dim`: the full extent including ghosts,
//!   which fills edge and corner ghosts by the `x1, x2, x3` sweep order.
//! * along dimensions swept after `dim`: the active range.
//!
//! Face fields span one extra entry along their own staggered direction.

use thiserror::Error;

use super::{FieldState, Mesh, MeshBlock, Stage, NVAR};
use crate::exec::{Executor, LoopBounds};
use crate::mesh::array::SliceWriter;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

/// One of the six block faces; `dim` is 0-based (0 = x1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FaceId {
    pub dim: usize,
    pub side: Side,
}

impl FaceId {
    pub fn new(dim: usize, side: Side) -> Self {
        assert!(dim < 3, "dimension index {dim} out of range");
        FaceId { dim, side }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundaryError {
    #[error("buffer for {face:?} has {got} values, expected {expected}")]
    Length { face: FaceId, expected: usize, got: usize },
    #[error("buffer was packed for {packed:?} but unpacked into {target:?}")]
    Orientation { packed: FaceId, target: FaceId },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryBuffer<T> {
    /// Face the data was packed from.
    pub face: FaceId,
    pub data: Vec<T>,
}

const NCOMP: usize = NVAR + 3;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Pack,
    Unpack,
}

/// Index box of component `comp` (0..8 cell vars, 8..11 face fields) for one
/// face in one role.
fn component_box<T: Real>(blk: &MeshBlock<T>, face: FaceId, role: Role, comp: usize) -> LoopBounds {
    let ng = blk.ng;
    let d = face.dim;
    let normal = if comp >= NVAR { Some(comp - NVAR) } else { None };
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for e in 0..3 {
        let (s, en) = blk.active_range(e);
        let stagger = usize::from(normal == Some(e));
        if e == d {
            let shift = stagger;
            let (a, b) = match (role, face.side) {
                (Role::Pack, Side::Low) => (s, s + ng),
                (Role::Pack, Side::High) => (en - ng, en),
                (Role::Unpack, Side::Low) => (s - ng, s),
                (Role::Unpack, Side::High) => (en, en + ng),
            };
            lo[e] = a + shift;
            hi[e] = b + shift;
        } else if e < d {
            lo[e] = 0;
            hi[e] = blk.ncells[e] + stagger;
        } else {
            lo[e] = s;
            hi[e] = en + stagger;
        }
    }
    LoopBounds::new((lo[2], hi[2]), (lo[1], hi[1]), (lo[0], hi[0]))
}

/// Number of values in a buffer for `face` of `blk`.
pub fn buffer_len<T: Real>(blk: &MeshBlock<T>, face: FaceId) -> usize {
    (0..NCOMP).map(|c| component_box(blk, face, Role::Pack, c).len()).sum()
}

fn pack_state<T: Real>(exec: &Executor, blk: &MeshBlock<T>, fs: &FieldState<T>, face: FaceId) -> BoundaryBuffer<T> {
    let mut data = vec![T::zero(); buffer_len(blk, face)];
    let writer = SliceWriter::new(&mut data);
    let mut offset = 0;
    for comp in 0..NCOMP {
        let bx = component_box(blk, face, Role::Pack, comp);
        let (nj, ni) = (bx.nj(), bx.ni());
        let w = &writer;
        let base = offset;
        if comp < NVAR {
            exec.par_for(bx, |k, j, i| {
                let idx = base + ((k - bx.ks) * nj + (j - bx.js)) * ni + (i - bx.is);
                // SAFETY: the local index is a bijection of (k, j, i) within the box.
                unsafe { w.write(idx, fs.u.get(comp, k, j, i)) };
            });
        } else {
            let arr = fs.b.component(comp - NVAR);
            exec.par_for(bx, |k, j, i| {
                let idx = base + ((k - bx.ks) * nj + (j - bx.js)) * ni + (i - bx.is);
                // SAFETY: as above.
                unsafe { w.write(idx, arr.get(k, j, i)) };
            });
        }
        offset += bx.len();
    }
    exec.note_traffic(offset as u64, offset as u64, T::BYTES);
    BoundaryBuffer { face, data }
}

fn boxes<T: Real>(blk: &MeshBlock<T>, face: FaceId, role: Role) -> [LoopBounds; NCOMP] {
    std::array::from_fn(|c| component_box(blk, face, role, c))
}

fn unpack_state<T: Real>(
    exec: &Executor,
    boxes: &[LoopBounds; NCOMP],
    fs: &mut FieldState<T>,
    face: FaceId,
    buf: &BoundaryBuffer<T>,
) -> Result<(), BoundaryError> {
    let expected: usize = boxes.iter().map(LoopBounds::len).sum();
    if buf.data.len() != expected {
        return Err(BoundaryError::Length { face, expected, got: buf.data.len() });
    }
    if buf.face.dim != face.dim || buf.face.side == face.side {
        return Err(BoundaryError::Orientation { packed: buf.face, target: face });
    }
    let mut offset = 0;
    for (comp, bx) in boxes.iter().copied().enumerate() {
        let (nj, ni) = (bx.nj(), bx.ni());
        let base = offset;
        let data = &buf.data;
        if comp < NVAR {
            let w = fs.u.writer();
            exec.par_for(bx, |k, j, i| {
                let idx = base + ((k - bx.ks) * nj + (j - bx.js)) * ni + (i - bx.is);
                // SAFETY: each (k, j, i) of the ghost box is written once.
                unsafe { w.write(comp, k, j, i, data[idx]) };
            });
        } else {
            let w = fs.b.component_mut(comp - NVAR).writer();
            exec.par_for(bx, |k, j, i| {
                let idx = base + ((k - bx.ks) * nj + (j - bx.js)) * ni + (i - bx.is);
                // SAFETY: as above.
                unsafe { w.write3(k, j, i, data[idx]) };
            });
        }
        offset += bx.len();
    }
    exec.note_traffic(offset as u64, offset as u64, T::BYTES);
    Ok(())
}

/// Packs the layers adjacent to `face` from the block's main state.
pub fn pack_boundary<T: Real>(exec: &Executor, blk: &MeshBlock<T>, face: FaceId) -> BoundaryBuffer<T> {
    pack_state(exec, blk, &blk.state, face)
}

/// Writes `buf` into the ghost layers behind `face` of the main state.
///
/// `buf` must come from the opposite face of the neighbor (or of the block
/// itself when it is its own periodic neighbor).
pub fn unpack_boundary<T: Real>(
    exec: &Executor,
    blk: &mut MeshBlock<T>,
    face: FaceId,
    buf: &BoundaryBuffer<T>,
) -> Result<(), BoundaryError> {
    let bx = boxes(blk, face, Role::Unpack);
    unpack_state(exec, &bx, &mut blk.state, face, buf)
}

/// Fills every ghost cell of the main state from its periodic image.
pub fn exchange_ghosts<T: Real>(exec: &Executor, mesh: &mut Mesh<T>) {
    exchange_stage(exec, mesh, Stage::Main);
}

/// Exchange on either field state of every block.
pub fn exchange_stage<T: Real>(exec: &Executor, mesh: &mut Mesh<T>, stage: Stage) {
    for d in 0..3 {
        let bufs: Vec<(BoundaryBuffer<T>, BoundaryBuffer<T>)> = mesh
            .blocks
            .iter()
            .map(|b| {
                let fs = b.fields(stage);
                (pack_state(exec, b, fs, FaceId::new(d, Side::Low)), pack_state(exec, b, fs, FaceId::new(d, Side::High)))
            })
            .collect();
        for bi in 0..mesh.blocks.len() {
            let lower = mesh.neighbor(bi, d, -1);
            let upper = mesh.neighbor(bi, d, 1);
            let blk = &mut mesh.blocks[bi];
            let lo_box = boxes(blk, FaceId::new(d, Side::Low), Role::Unpack);
            let hi_box = boxes(blk, FaceId::new(d, Side::High), Role::Unpack);
            let fs = blk.fields_mut(stage);
            unpack_state(exec, &lo_box, fs, FaceId::new(d, Side::Low), &bufs[lower].1)
                .expect("buffers packed from congruent blocks");
            unpack_state(exec, &hi_box, fs, FaceId::new(d, Side::High), &bufs[upper].0)
                .expect("buffers packed from congruent blocks");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshConfig, IDN};

    fn ramp_mesh(cfg: &MeshConfig) -> Mesh<f64> {
        let mut m: Mesh<f64> = build_mesh(cfg).unwrap();
        for blk in &mut m.blocks {
            let (is, ie, js, je, ks, ke) = (blk.is, blk.ie, blk.js, blk.je, blk.ks, blk.ke);
            let off = blk.offset;
            for v in 0..NVAR {
                for k in ks..ke {
                    for j in js..je {
                        for i in is..ie {
                            let g = [off[0] + i - is, off[1] + j - js, off[2] + k - ks];
                            blk.state.u.set(v, k, j, i, (v * 1_000_000 + g[2] * 10_000 + g[1] * 100 + g[0]) as f64);
                        }
                    }
                }
            }
            for d in 0..3 {
                let (ks, ke, js, je, is, ie) = (blk.ks, blk.ke, blk.js, blk.je, blk.is, blk.ie);
                let a = blk.state.b.component_mut(d);
                let st = [usize::from(d == 0), usize::from(d == 1), usize::from(d == 2)];
                for k in ks..ke + st[2] {
                    for j in js..je + st[1] {
                        for i in is..ie + st[0] {
                            let g = [off[0] + i - is, off[1] + j - js, off[2] + k - ks];
                            a.set(k, j, i, -((d * 1_000_000 + g[2] * 10_000 + g[1] * 100 + g[0]) as f64) - 1.0);
                        }
                    }
                }
            }
        }
        m
    }

    #[test]
    fn ramp_low_face_holds_first_layers() {
        let exec = Executor::serial();
        let mut m: Mesh<f64> = build_mesh(&MeshConfig::cube(8)).unwrap();
        let blk = &mut m.blocks[0];
        for k in 0..12 {
            for j in 0..12 {
                for i in 0..12 {
                    blk.state.u.set(IDN, k, j, i, i as f64);
                }
            }
        }
        let buf = pack_boundary(&exec, blk, FaceId::new(0, Side::Low));
        let rho = &buf.data[..2 * 8 * 8];
        for (n, &x) in rho.iter().enumerate() {
            assert_eq!(x, (blk.is + n % 2) as f64);
        }
    }

    #[test]
    fn uniform_field_packs_uniform() {
        let exec = Executor::serial();
        let mut m: Mesh<f64> = build_mesh(&MeshConfig::cube(4)).unwrap();
        m.blocks[0].state.u.fill(1.0);
        for side in [Side::Low, Side::High] {
            for d in 0..3 {
                let buf = pack_boundary(&exec, &m.blocks[0], FaceId::new(d, side));
                let ncell = buf.data.len() - (0..3).map(|c| component_box(&m.blocks[0], buf.face, Role::Pack, NVAR + c).len()).sum::<usize>();
                assert!(buf.data[..ncell].iter().all(|&x| x == 1.0));
            }
        }
    }

    #[test]
    fn round_trip_onto_scratch_block() {
        let exec = Executor::serial();
        let cfg = MeshConfig::cube(6);
        let src = ramp_mesh(&cfg);
        for d in 0..3 {
            let mut dst: Mesh<f64> = build_mesh(&cfg).unwrap();
            let blk = &src.blocks[0];
            // High pack of the source feeds the low ghosts of its upper image.
            let buf = pack_boundary(&exec, blk, FaceId::new(d, Side::High));
            unpack_boundary(&exec, &mut dst.blocks[0], FaceId::new(d, Side::Low), &buf).unwrap();
            let up = component_box(blk, FaceId::new(d, Side::Low), Role::Unpack, IDN);
            let from = component_box(blk, FaceId::new(d, Side::High), Role::Pack, IDN);
            let shift = [from.is - up.is, from.js - up.js, from.ks - up.ks];
            for v in 0..NVAR {
                for k in up.ks..up.ke {
                    for j in up.js..up.je {
                        for i in up.is..up.ie {
                            assert_eq!(
                                dst.blocks[0].state.u.get(v, k, j, i),
                                blk.state.u.get(v, k + shift[2], j + shift[1], i + shift[0])
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let exec = Executor::serial();
        let mut m: Mesh<f64> = build_mesh(&MeshConfig::cube(4)).unwrap();
        let mut buf = pack_boundary(&exec, &m.blocks[0], FaceId::new(1, Side::High));
        buf.data.pop();
        let err = unpack_boundary(&exec, &mut m.blocks[0], FaceId::new(1, Side::Low), &buf).unwrap_err();
        assert!(matches!(err, BoundaryError::Length { .. }));
    }

    /// Every ghost cell must equal the active cell at its periodic image.
    fn check_periodic_images(m: &Mesh<f64>) {
        let nx = m.cfg.nx;
        let lookup = |g: [usize; 3], v: usize| -> f64 {
            let bc = [g[0] / m.cfg.mb[0], g[1] / m.cfg.mb[1], g[2] / m.cfg.mb[2]];
            let b = &m.blocks[m.block_index(bc)];
            b.state.u.get(v, b.ks + g[2] - b.offset[2], b.js + g[1] - b.offset[1], b.is + g[0] - b.offset[0])
        };
        for blk in &m.blocks {
            let n = blk.ncells;
            for k in 0..n[2] {
                for j in 0..n[1] {
                    for i in 0..n[0] {
                        let g = [
                            (blk.offset[0] as isize + i as isize - blk.is as isize).rem_euclid(nx[0] as isize) as usize,
                            (blk.offset[1] as isize + j as isize - blk.js as isize).rem_euclid(nx[1] as isize) as usize,
                            (blk.offset[2] as isize + k as isize - blk.ks as isize).rem_euclid(nx[2] as isize) as usize,
                        ];
                        for v in 0..NVAR {
                            assert_eq!(blk.state.u.get(v, k, j, i), lookup(g, v), "block {:?} cell ({k},{j},{i})", blk.coords);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn single_block_images_itself() {
        let exec = Executor::serial();
        let mut m = ramp_mesh(&MeshConfig::cube(6));
        exchange_ghosts(&exec, &mut m);
        let b = &m.blocks[0];
        assert_eq!(b.state.u.get(IDN, b.ks, b.js, b.is - 1), b.state.u.get(IDN, b.ks, b.js, b.ie - 1));
        check_periodic_images(&m);
    }

    #[test]
    fn multi_block_brute_force_images() {
        let cfg = MeshConfig { nx: [12, 8, 8], mb: [4, 4, 8], ..Default::default() };
        for workers in [1, 3] {
            let exec = Executor::new(crate::exec::LoopPolicy::new(crate::exec::LoopPattern::Flat1d, workers)).unwrap();
            let mut m = ramp_mesh(&cfg);
            exchange_ghosts(&exec, &mut m);
            check_periodic_images(&m);
        }
    }

    #[test]
    fn shared_normal_face_owned_by_lower_block() {
        let exec = Executor::serial();
        let cfg = MeshConfig { nx: [8, 4, 4], mb: [4, 4, 4], ..Default::default() };
        let mut m = ramp_mesh(&cfg);
        // Make the upper block's copy of the shared face disagree.
        let (ks, js, is) = (m.blocks[1].ks, m.blocks[1].js, m.blocks[1].is);
        m.blocks[1].state.b.b1.set(ks, js, is, 12345.0);
        exchange_ghosts(&exec, &mut m);
        let lower = &m.blocks[0];
        assert_eq!(m.blocks[1].state.b.b1.get(ks, js, is), lower.state.b.b1.get(ks, js, lower.ie));
    }

    #[test]
    fn tangential_faces_follow_cells() {
        let exec = Executor::serial();
        let cfg = MeshConfig { nx: [8, 8, 4], mb: [4, 4, 4], ..Default::default() };
        let mut m = ramp_mesh(&cfg);
        exchange_ghosts(&exec, &mut m);
        // b2 in the low x1 ghost column equals b2 of the last active column of the lower neighbor.
        let b = &m.blocks[m.block_index([1, 0, 0])];
        let lo = &m.blocks[m.block_index([0, 0, 0])];
        for j in b.js..=b.je {
            assert_eq!(b.state.b.b2.get(b.ks, j, b.is - 1), lo.state.b.b2.get(lo.ks, j, lo.ie - 1));
        }
    }
}
