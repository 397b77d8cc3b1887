//! Two-stage van Leer (VL2) integrator with constrained transport.
//!
//! Stage 1 builds donor-cell interface states from the primitives at `t`,
//! solves the Riemann problems and advances a copy of `(u, B_face)` by
//! `dt/2` into the block's `half` state. After a ghost exchange and an EOS
//! sweep on the half state, stage 2 reconstructs the half-step primitives
//! with PLM and advances the original state by the full `dt`. Both stages
//! write into `half`; the corrector result is swapped into `state`, so no
//! kernel ever overwrites its own input.
//!
//! Face-flux arrays store, per face, `rho, m1, m2, m3, E` in global order,
//! then the two tangential field fluxes of the rotated frame
//! ([`FLX_BT1`], [`FLX_BT2`]) and the CT upwind weight ([`FLX_W`]).

use thiserror::Error;

use super::ct::{cell_emf, ct_emf, ct_update_face_b, face_to_center_b, EmfAverage};
use super::eos::{cons_to_prim, fast_speed, ConsState, EosError, PrimState};
use super::reconstruct::plm_face;
use super::riemann::{hlle_flux, roe_flux, Prim1d, RiemannSolver};
use crate::exec::{decode_flat_index, Executor, LoopBounds};
use crate::mesh::{
    bounds_ijk, exchange_stage, Array3, Array4, BlockGeom, Mesh, MeshBlock, Stage, IB1, IDN, IEN, IM1, IPR, IV1, NVAR,
};
use crate::real::{half, Real};

pub const FLX_BT1: usize = 5;
pub const FLX_BT2: usize = 6;
pub const FLX_W: usize = 7;

/// Interface-state construction of one stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reconstruction {
    DonorCell,
    Plm,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverOptions {
    pub riemann: RiemannSolver,
    pub emf: EmfAverage,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("unphysical state after the {stage} stage in block {block} at global cell {cell:?}: {source}")]
    Unphysical {
        stage: &'static str,
        block: usize,
        /// Global `(i, j, k)` of the cell; ghost cells may fall outside the domain.
        cell: [isize; 3],
        source: EosError,
    },
}

/// Scratch arrays shared by all blocks (blocks are updated one at a time).
#[derive(Clone, Debug)]
pub struct Workspace<T> {
    pub wl: Array4<T>,
    pub wr: Array4<T>,
    pub flux: [Array4<T>; 3],
    /// Cell-centered `v x B`.
    pub ecc: Array4<T>,
    pub emf: [Array3<T>; 3],
}

impl<T: Real> Workspace<T> {
    pub fn new(ncells: [usize; 3]) -> Self {
        let [n1, n2, n3] = ncells;
        Workspace {
            wl: Array4::zeros(NVAR, n3, n2, n1),
            wr: Array4::zeros(NVAR, n3, n2, n1),
            flux: std::array::from_fn(|_| Array4::zeros(NVAR, n3, n2, n1)),
            ecc: Array4::zeros(3, n3, n2, n1),
            emf: std::array::from_fn(|_| Array3::zeros(n3, n2, n1)),
        }
    }

    pub fn for_mesh(mesh: &Mesh<T>) -> Self {
        Self::new(mesh.blocks[0].ncells)
    }
}

/// Faces along `d` whose fluxes the CT update needs: all faces of the active
/// cells along `d`, widened by one cell on each side transversely.
pub fn flux_bounds(g: &BlockGeom, d: usize) -> LoopBounds {
    let mut lo = g.lo.map(|s| s - 1);
    lo[d] = g.lo[d];
    bounds_ijk(lo, g.hi.map(|e| e + 1))
}

#[derive(Clone, Copy)]
struct Strides {
    var: usize,
    dim: [usize; 3],
}

fn strides<T: Copy>(a: &Array4<T>) -> Strides {
    let (_, n3, n2, n1) = a.dims();
    Strides { var: n3 * n2 * n1, dim: [1, n1, n1 * n2] }
}

/// Left and right primitive states on the `d`-faces of [`flux_bounds`].
///
/// The normal field slot is left untouched; the Riemann solver takes the
/// face-centered value instead.
pub fn reconstruct<T: Real>(
    exec: &Executor,
    g: &BlockGeom,
    w: &Array4<T>,
    d: usize,
    order: Reconstruction,
    wl: &mut Array4<T>,
    wr: &mut Array4<T>,
) {
    let bx = flux_bounds(g, d);
    let st = strides(w);
    let s = st.dim[d];
    let src = w.as_slice();
    let (lw, rw) = (wl.writer(), wr.writer());
    exec.par_for(bx, |k, j, i| {
        let c = w.index(0, k, j, i);
        for v in (0..NVAR).filter(|&v| v != IB1 + d) {
            let o = v * st.var + c;
            let (l, r) = match order {
                Reconstruction::DonorCell => (src[o - s], src[o]),
                Reconstruction::Plm => plm_face([src[o - 2 * s], src[o - s], src[o], src[o + s]]),
            };
            // SAFETY: slot `o` belongs to this face only.
            unsafe {
                lw.write_flat(o, l);
                rw.write_flat(o, r);
            }
        }
    });
    let n = bx.len() as u64;
    exec.note_traffic(7 * n, 14 * n, T::BYTES);
}

/// Interface fluxes on the `d`-faces of [`flux_bounds`].
///
/// The CT weight is `1/2 + clamp(1024 dt F_rho / (dx (rho_l + rho_r)), -1/2, 1/2)`,
/// i.e. 1 for flow in `+d` and 0 for flow in `-d` except near stagnation.
#[allow(clippy::too_many_arguments)]
pub fn riemann_fluxes<T: Real>(
    exec: &Executor,
    g: &BlockGeom,
    wl: &Array4<T>,
    wr: &Array4<T>,
    bface: &Array3<T>,
    d: usize,
    gamma: f64,
    solver: RiemannSolver,
    dt: f64,
    flux: &mut Array4<T>,
) {
    let bx = flux_bounds(g, d);
    let st = strides(wl);
    let (t1, t2) = ((d + 1) % 3, (d + 2) % 3);
    let (ls, rs) = (wl.as_slice(), wr.as_slice());
    let gam = T::of(gamma);
    let scale = T::of(1024.0 * dt / g.dx[d]);
    let h = half::<T>();
    let out = flux.writer();
    exec.par_for(bx, |k, j, i| {
        let c = wl.index(0, k, j, i);
        let load = |a: &[T]| Prim1d {
            rho: a[IDN * st.var + c],
            vn: a[(IV1 + d) * st.var + c],
            vt1: a[(IV1 + t1) * st.var + c],
            vt2: a[(IV1 + t2) * st.var + c],
            p: a[IPR * st.var + c],
            bt1: a[(IB1 + t1) * st.var + c],
            bt2: a[(IB1 + t2) * st.var + c],
        };
        let (l, r) = (load(ls), load(rs));
        let bn = bface.get(k, j, i);
        let f = match solver {
            RiemannSolver::Roe => roe_flux(&l, &r, bn, gam),
            RiemannSolver::Hlle => hlle_flux(&l, &r, bn, gam),
        };
        let v = (scale * f[0] / (l.rho + r.rho)).max(-h).min(h);
        let slots = [IDN, IM1 + d, IM1 + t1, IM1 + t2, IEN, FLX_BT1, FLX_BT2];
        // SAFETY: slot `c` of each component belongs to this face only.
        unsafe {
            for (n, &slot) in slots.iter().enumerate() {
                out.write_flat(slot * st.var + c, f[n]);
            }
            out.write_flat(FLX_W * st.var + c, h + v);
        }
    });
    let n = bx.len() as u64;
    exec.note_traffic(15 * n, 8 * n, T::BYTES);
}

/// `out = base - dt * div(F)` for density, momentum and energy over the
/// active cells. Field slots are left for [`face_to_center_b`].
pub fn integrate_cells<T: Real>(
    exec: &Executor,
    g: &BlockGeom,
    base: &Array4<T>,
    flux: &[Array4<T>; 3],
    dt: f64,
    out: &mut Array4<T>,
) {
    let bx = g.active();
    let st = strides(base);
    let rdx = [T::of(dt / g.dx[0]), T::of(dt / g.dx[1]), T::of(dt / g.dx[2])];
    let src = base.as_slice();
    let fx = [flux[0].as_slice(), flux[1].as_slice(), flux[2].as_slice()];
    let w = out.writer();
    exec.par_for(bx, |k, j, i| {
        let c = base.index(0, k, j, i);
        for v in IDN..=IEN {
            let o = v * st.var + c;
            let div = (fx[0][o + st.dim[0]] - fx[0][o]) * rdx[0]
                + (fx[1][o + st.dim[1]] - fx[1][o]) * rdx[1]
                + (fx[2][o + st.dim[2]] - fx[2][o]) * rdx[2];
            // SAFETY: slot `o` belongs to this cell only.
            unsafe { w.write_flat(o, src[o] - div) };
        }
    });
    let n = bx.len() as u64;
    exec.note_traffic(20 * n, 5 * n, T::BYTES);
}

/// Primitives from conserved variables over the whole block.
///
/// On failure returns the first offending cell in `k-j-i` order, which does
/// not depend on the loop policy.
pub fn cons_to_prim_block<T: Real>(
    exec: &Executor,
    g: &BlockGeom,
    u: &Array4<T>,
    gamma: f64,
    w: &mut Array4<T>,
) -> Result<(), ((usize, usize, usize), EosError)> {
    let bx = g.full();
    let gam = T::of(gamma);
    let out = w.writer();
    let load = |k, j, i| ConsState {
        rho: u.get(IDN, k, j, i),
        m: [u.get(IM1, k, j, i), u.get(IM1 + 1, k, j, i), u.get(IM1 + 2, k, j, i)],
        e: u.get(IEN, k, j, i),
        b: [u.get(IB1, k, j, i), u.get(IB1 + 1, k, j, i), u.get(IB1 + 2, k, j, i)],
    };
    let bad = exec.par_reduce(
        bx,
        usize::MAX,
        |k, j, i| match cons_to_prim(&load(k, j, i), gam) {
            Ok(p) => {
                let vals = [p.rho, p.v[0], p.v[1], p.v[2], p.p, p.b[0], p.b[1], p.b[2]];
                for (v, x) in vals.into_iter().enumerate() {
                    // SAFETY: one write per component of this cell.
                    unsafe { out.write(v, k, j, i, x) };
                }
                usize::MAX
            }
            Err(_) => (k * bx.nj() + j) * bx.ni() + i,
        },
        usize::min,
    );
    let n = bx.len() as u64;
    exec.note_traffic(8 * n, 8 * n, T::BYTES);
    if bad == usize::MAX {
        return Ok(());
    }
    let (k, j, i) = decode_flat_index(bad, bx.nj(), bx.ni());
    let err = cons_to_prim(&load(k, j, i), gam).expect_err("cell flagged by the reduction");
    Err(((k, j, i), err))
}

fn global_cell<T>(blk: &MeshBlock<T>, (k, j, i): (usize, usize, usize)) -> [isize; 3] {
    let loc = [i, j, k];
    std::array::from_fn(|d| blk.offset[d] as isize + loc[d] as isize - blk.ng as isize)
}

/// EOS sweep over every block of one stage, under the `eos` region.
pub fn update_primitives<T: Real>(
    exec: &Executor,
    mesh: &mut Mesh<T>,
    stage: Stage,
    tag: &'static str,
) -> Result<(), SolverError> {
    let gamma = mesh.cfg.gamma;
    exec.region("eos", || {
        for (bi, blk) in mesh.blocks.iter_mut().enumerate() {
            let g = blk.geom();
            let u = match stage {
                Stage::Main => &blk.state.u,
                Stage::Half => &blk.half.u,
            };
            if let Err((cell, source)) = cons_to_prim_block(exec, &g, u, gamma, &mut blk.w) {
                return Err(SolverError::Unphysical { stage: tag, block: bi, cell: global_cell(blk, cell), source });
            }
        }
        Ok(())
    })
}

/// `CFL * min(dx_d / (|v_d| + c_f,d))` over active cells and dimensions.
pub fn compute_dt<T: Real>(exec: &Executor, mesh: &Mesh<T>) -> f64 {
    let gam = T::of(mesh.cfg.gamma);
    let mut dt_min = f64::INFINITY;
    for blk in &mesh.blocks {
        let w = &blk.w;
        let dx = blk.dx.map(T::of);
        let bx = blk.active();
        let m = exec.par_reduce(
            bx,
            T::infinity(),
            |k, j, i| {
                let p = PrimState {
                    rho: w.get(IDN, k, j, i),
                    v: [w.get(IV1, k, j, i), w.get(IV1 + 1, k, j, i), w.get(IV1 + 2, k, j, i)],
                    p: w.get(IPR, k, j, i),
                    b: [w.get(IB1, k, j, i), w.get(IB1 + 1, k, j, i), w.get(IB1 + 2, k, j, i)],
                };
                let mut m = T::infinity();
                for d in 0..3 {
                    m = m.min(dx[d] / (p.v[d].abs() + fast_speed(&p, gam, d)));
                }
                m
            },
            |a, b| a.min(b),
        );
        exec.note_traffic(8 * bx.len() as u64, 0, T::BYTES);
        dt_min = dt_min.min(m.as_f64());
    }
    mesh.cfg.cfl * dt_min
}

fn stage_block<T: Real>(
    exec: &Executor,
    blk: &mut MeshBlock<T>,
    ws: &mut Workspace<T>,
    opts: &SolverOptions,
    gamma: f64,
    dt: f64,
    order: Reconstruction,
    input: Stage,
) {
    let g = blk.geom();
    for d in 0..3 {
        exec.region("reconstruct", || reconstruct(exec, &g, &blk.w, d, order, &mut ws.wl, &mut ws.wr));
        let bface = blk.fields(input).b.component(d);
        exec.region("riemann", || {
            riemann_fluxes(exec, &g, &ws.wl, &ws.wr, bface, d, gamma, opts.riemann, dt, &mut ws.flux[d])
        });
    }
    exec.region("ct_emf", || {
        cell_emf(exec, &g, &blk.w, &mut ws.ecc);
        ct_emf(exec, &g, &ws.flux, &ws.ecc, &mut ws.emf, opts.emf);
    });
    let (state, out) = (&blk.state, &mut blk.half);
    exec.region("integrate", || {
        integrate_cells(exec, &g, &state.u, &ws.flux, dt, &mut out.u);
        ct_update_face_b(exec, &g, &state.b, &mut out.b, &ws.emf, dt);
    });
    exec.region("face_to_center", || face_to_center_b(exec, &g, out));
}

/// One VL2 step of size `dt`. Requires current ghosts and primitives of the
/// main state and leaves both current.
pub fn vl2_step<T: Real>(
    exec: &Executor,
    mesh: &mut Mesh<T>,
    ws: &mut Workspace<T>,
    opts: &SolverOptions,
    dt: f64,
) -> Result<(), SolverError> {
    let gamma = mesh.cfg.gamma;
    for blk in mesh.blocks.iter_mut() {
        stage_block(exec, blk, ws, opts, gamma, 0.5 * dt, Reconstruction::DonorCell, Stage::Main);
    }
    exec.region("boundary", || exchange_stage(exec, mesh, Stage::Half));
    update_primitives(exec, mesh, Stage::Half, "predictor")?;
    for blk in mesh.blocks.iter_mut() {
        stage_block(exec, blk, ws, opts, gamma, dt, Reconstruction::Plm, Stage::Half);
        std::mem::swap(&mut blk.state, &mut blk.half);
    }
    exec.region("boundary", || exchange_stage(exec, mesh, Stage::Main));
    update_primitives(exec, mesh, Stage::Main, "corrector")
}

/// Cell-centered fields, ghosts and primitives of the main state from its
/// active conserved variables and face fields.
pub fn prepare_state<T: Real>(exec: &Executor, mesh: &mut Mesh<T>) -> Result<(), SolverError> {
    exec.region("face_to_center", || {
        for blk in mesh.blocks.iter_mut() {
            let g = blk.geom();
            face_to_center_b(exec, &g, &mut blk.state);
        }
    });
    exec.region("boundary", || exchange_stage(exec, mesh, Stage::Main));
    update_primitives(exec, mesh, Stage::Main, "initial")
}

/// Integrator with its scratch storage.
#[derive(Clone, Debug)]
pub struct Solver<T> {
    pub opts: SolverOptions,
    ws: Workspace<T>,
}

impl<T: Real> Solver<T> {
    pub fn new(mesh: &Mesh<T>, opts: SolverOptions) -> Self {
        Solver { opts, ws: Workspace::for_mesh(mesh) }
    }

    pub fn step(&mut self, exec: &Executor, mesh: &mut Mesh<T>, dt: f64) -> Result<(), SolverError> {
        vl2_step(exec, mesh, &mut self.ws, &self.opts, dt)
    }

    /// One cycle under the `cycle` region: a new `dt` (region `new_dt`),
    /// shortened to land exactly on `t_end` if given, then a VL2 step.
    /// Advances `mesh.time` and `mesh.cycle`; returns the `dt` taken.
    pub fn cycle(&mut self, exec: &Executor, mesh: &mut Mesh<T>, t_end: Option<f64>) -> Result<f64, SolverError> {
        exec.region("cycle", || {
            let mut dt = exec.region("new_dt", || compute_dt(exec, mesh));
            let mut lands = false;
            if let Some(t_end) = t_end {
                if mesh.time + dt >= t_end {
                    dt = t_end - mesh.time;
                    lands = true;
                }
            }
            self.step(exec, mesh, dt)?;
            mesh.time = if lands { t_end.unwrap_or(mesh.time + dt) } else { mesh.time + dt };
            mesh.cycle += 1;
            Ok(dt)
        })
    }

    /// Cycles until `t_end` or until `max_cycles` cycles have run.
    pub fn run_until(
        &mut self,
        exec: &Executor,
        mesh: &mut Mesh<T>,
        t_end: f64,
        max_cycles: Option<u64>,
    ) -> Result<u64, SolverError> {
        let mut n = 0;
        while mesh.time < t_end && max_cycles.is_none_or(|m| n < m) {
            self.cycle(exec, mesh, Some(t_end))?;
            n += 1;
        }
        Ok(n)
    }
}
