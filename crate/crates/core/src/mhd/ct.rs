//! Constrained transport: edge EMFs from face fluxes and the staggered
//! induction update.
//!
//! The electric field is `eps = v x B`, so `dB/dt = curl eps`. Edge
//! component `c` lives on edges parallel to axis `c`, at the lower faces of
//! the cell in the two other axes `a = (c + 1) % 3`, `b = (c + 2) % 3`. Array
//! index `(k, j, i)` of an edge array is that of the cell whose lower edge it
//! is.

use super::integrator::{FLX_BT1, FLX_BT2, FLX_W};
use crate::exec::{Executor, LoopBounds};
use crate::mesh::{bounds_ijk, Array3, Array4, BlockGeom, FaceField, FieldState, IB1, IV1};
use crate::real::{half, Real};

/// How face electric fields are averaged onto edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmfAverage {
    /// Contact-mode upwinding of the cell-centered field gradients.
    #[default]
    Upwind,
    /// Plain mean of the four adjacent face values.
    Arithmetic,
}

impl std::str::FromStr for EmfAverage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "upwind" => Ok(EmfAverage::Upwind),
            "arithmetic" | "mean" => Ok(EmfAverage::Arithmetic),
            other => Err(format!("unknown EMF average `{other}` (expected upwind or arithmetic)")),
        }
    }
}

/// Edge values around one corner.
///
/// Index 0 is the lower neighbor and 1 the upper one: `ea[0]` is the
/// `a`-face value at `b - 1`, `eb[0]` the `b`-face value at `a - 1`,
/// `cc[nb][na]` the cell-centered field of the cell offset by `nb - 1` in `b`
/// and `na - 1` in `a`. `wa`, `wb` are the upwind weights of the `a`- and
/// `b`-faces in the same positions as `ea`, `eb`: 1 selects the lower cell.
#[derive(Clone, Copy, Debug, Default)]
pub struct CornerStencil<T> {
    pub ea: [T; 2],
    pub eb: [T; 2],
    pub cc: [[T; 2]; 2],
    pub wa: [T; 2],
    pub wb: [T; 2],
}

#[inline(always)]
pub fn corner_emf<T: Real>(s: &CornerStencil<T>, mode: EmfAverage) -> T {
    let q = T::of(0.25);
    let faces = (s.eb[0] + s.eb[1]) + (s.ea[0] + s.ea[1]);
    if mode == EmfAverage::Arithmetic {
        return q * faces;
    }
    let one = T::one();
    let cc = &s.cc;
    let d_l2 = (one - s.wa[0]) * (s.eb[1] - cc[0][1]) + s.wa[0] * (s.eb[0] - cc[0][0]);
    let d_r2 = (one - s.wa[1]) * (s.eb[1] - cc[1][1]) + s.wa[1] * (s.eb[0] - cc[1][0]);
    let d_l1 = (one - s.wb[0]) * (s.ea[1] - cc[1][0]) + s.wb[0] * (s.ea[0] - cc[0][0]);
    let d_r1 = (one - s.wb[1]) * (s.ea[1] - cc[1][1]) + s.wb[1] * (s.ea[0] - cc[0][1]);
    q * (faces + ((d_l1 + d_r1) + (d_l2 + d_r2)))
}

#[inline(always)]
pub(crate) fn dn(d: usize, (k, j, i): (usize, usize, usize)) -> (usize, usize, usize) {
    match d {
        0 => (k, j, i - 1),
        1 => (k, j - 1, i),
        _ => (k - 1, j, i),
    }
}

#[inline(always)]
pub(crate) fn up(d: usize, (k, j, i): (usize, usize, usize)) -> (usize, usize, usize) {
    match d {
        0 => (k, j, i + 1),
        1 => (k, j + 1, i),
        _ => (k + 1, j, i),
    }
}

/// Cell-centered `v x B` over the cells bordering the block's active edges.
pub fn cell_emf<T: Real>(exec: &Executor, g: &BlockGeom, w: &Array4<T>, ecc: &mut Array4<T>) {
    let lo = g.lo.map(|s| s - 1);
    let hi = g.hi.map(|e| e + 1);
    let bx = bounds_ijk(lo, hi);
    let out = ecc.writer();
    exec.par_for(bx, |k, j, i| {
        let v = [w.get(IV1, k, j, i), w.get(IV1 + 1, k, j, i), w.get(IV1 + 2, k, j, i)];
        let b = [w.get(IB1, k, j, i), w.get(IB1 + 1, k, j, i), w.get(IB1 + 2, k, j, i)];
        // SAFETY: one write per component of this cell.
        unsafe {
            out.write(0, k, j, i, v[1] * b[2] - v[2] * b[1]);
            out.write(1, k, j, i, v[2] * b[0] - v[0] * b[2]);
            out.write(2, k, j, i, v[0] * b[1] - v[1] * b[0]);
        }
    });
    exec.note_traffic(6 * bx.len() as u64, 3 * bx.len() as u64, T::BYTES);
}

/// Edge range of component `c`: active along `c`, both bounding faces along
/// the other two axes.
pub fn edge_bounds(g: &BlockGeom, c: usize) -> LoopBounds {
    let lo = g.lo;
    let mut hi = g.hi;
    for (d, h) in hi.iter_mut().enumerate() {
        if d != c {
            *h += 1;
        }
    }
    bounds_ijk(lo, hi)
}

/// Face range of component `d`: both bounding faces along `d`, active along
/// the other two axes.
pub fn face_bounds(g: &BlockGeom, d: usize) -> LoopBounds {
    let mut hi = g.hi;
    hi[d] += 1;
    bounds_ijk(g.lo, hi)
}

/// Edge EMFs of a block from the three face-flux arrays.
///
/// `flux[d]` holds the interface fluxes of the `d`-faces; its `FLX_BT1` and
/// `FLX_BT2` slots carry `eps_t2` and `-eps_t1` for that face, `FLX_W` the
/// upwind weight. `ecc` must come from [`cell_emf`].
pub fn ct_emf<T: Real>(
    exec: &Executor,
    g: &BlockGeom,
    flux: &[Array4<T>; 3],
    ecc: &Array4<T>,
    emf: &mut [Array3<T>; 3],
    mode: EmfAverage,
) {
    for (c, out) in emf.iter_mut().enumerate() {
        let (a, b) = ((c + 1) % 3, (c + 2) % 3);
        let bx = edge_bounds(g, c);
        let w = out.writer();
        let (fa, fb) = (&flux[a], &flux[b]);
        exec.par_for(bx, |k, j, i| {
            let p = (k, j, i);
            let pb = dn(b, p);
            let pa = dn(a, p);
            let pab = dn(a, pb);
            let get = |arr: &Array4<T>, v: usize, (k, j, i): (usize, usize, usize)| arr.get(v, k, j, i);
            let s = CornerStencil {
                ea: [get(fa, FLX_BT1, pb), get(fa, FLX_BT1, p)],
                eb: [-get(fb, FLX_BT2, pa), -get(fb, FLX_BT2, p)],
                cc: [[get(ecc, c, pab), get(ecc, c, pb)], [get(ecc, c, pa), get(ecc, c, p)]],
                wa: [get(fa, FLX_W, pb), get(fa, FLX_W, p)],
                wb: [get(fb, FLX_W, pa), get(fb, FLX_W, p)],
            };
            // SAFETY: one write per edge.
            unsafe { w.write3(k, j, i, corner_emf(&s, mode)) };
        });
        exec.note_traffic(7 * bx.len() as u64, bx.len() as u64, T::BYTES);
    }
}

/// `out = base + dt * curl(emf)` on every face bounding an active cell.
///
/// Each face changes by the signed sum of its four edge EMFs divided by the
/// transverse cell sizes, times `dt`.
pub fn ct_update_face_b<T: Real>(
    exec: &Executor,
    g: &BlockGeom,
    base: &FaceField<T>,
    out: &mut FaceField<T>,
    emf: &[Array3<T>; 3],
    dt: f64,
) {
    for d in 0..3 {
        let (a, b) = ((d + 1) % 3, (d + 2) % 3);
        let bx = face_bounds(g, d);
        let (ia, ib) = (T::of(dt / g.dx[a]), T::of(dt / g.dx[b]));
        let src = base.component(d);
        let w = out.component_mut(d).writer();
        let (eb, ea) = (&emf[b], &emf[a]);
        exec.par_for(bx, |k, j, i| {
            let p = (k, j, i);
            let (ka, ja, iia) = up(a, p);
            let (kb, jb, iib) = up(b, p);
            let curl_a = (eb.get(ka, ja, iia) - eb.get(k, j, i)) * ia;
            let curl_b = (ea.get(kb, jb, iib) - ea.get(k, j, i)) * ib;
            // SAFETY: one write per face.
            unsafe { w.write3(k, j, i, src.get(k, j, i) + (curl_a - curl_b)) };
        });
        exec.note_traffic(3 * bx.len() as u64, bx.len() as u64, T::BYTES);
    }
}

/// Cell-centered field as the mean of the two bounding faces, over the
/// active cells of `fs`.
pub fn face_to_center_b<T: Real>(exec: &Executor, g: &BlockGeom, fs: &mut FieldState<T>) {
    let bx = g.active();
    let h = half::<T>();
    let out = fs.u.writer();
    let b = &fs.b;
    exec.par_for(bx, |k, j, i| {
        for d in 0..3 {
            let f = b.component(d);
            let (ku, ju, iu) = up(d, (k, j, i));
            // SAFETY: one write per component of this cell.
            unsafe { out.write(IB1 + d, k, j, i, h * (f.get(k, j, i) + f.get(ku, ju, iu))) };
        }
    });
    exec.note_traffic(6 * bx.len() as u64, 3 * bx.len() as u64, T::BYTES);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, max_divergence_b, Mesh, MeshBlock, MeshConfig, NVAR};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh(n: usize) -> Mesh<f64> {
        build_mesh(&MeshConfig::cube(n)).unwrap()
    }

    fn emf_arrays(blk: &MeshBlock<f64>) -> [Array3<f64>; 3] {
        let n = blk.ncells;
        std::array::from_fn(|_| Array3::zeros(n[2], n[1], n[0]))
    }

    fn flux_arrays(blk: &MeshBlock<f64>) -> [Array4<f64>; 3] {
        let n = blk.ncells;
        std::array::from_fn(|_| Array4::zeros(NVAR, n[2], n[1], n[0]))
    }

    #[test]
    fn uniform_face_fields_give_uniform_edges() {
        let exec = Executor::serial();
        let m = mesh(4);
        let blk = &m.blocks[0];
        let e = [0.3, -1.7, 2.9];
        let mut flux = flux_arrays(blk);
        for (d, f) in flux.iter_mut().enumerate() {
            let (t1, t2) = ((d + 1) % 3, (d + 2) % 3);
            let (n3, n2, n1) = (f.dims().1, f.dims().2, f.dims().3);
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        f.set(FLX_BT1, k, j, i, e[t2]);
                        f.set(FLX_BT2, k, j, i, -e[t1]);
                        f.set(FLX_W, k, j, i, ((k * 7 + j * 3 + i) % 5) as f64 / 4.0);
                    }
                }
            }
        }
        let mut ecc = Array4::zeros(3, blk.ncells[2], blk.ncells[1], blk.ncells[0]);
        let cells = blk.ncells.iter().product::<usize>();
        for (n, x) in ecc.as_mut_slice().iter_mut().enumerate() {
            *x = e[n / cells];
        }
        for mode in [EmfAverage::Upwind, EmfAverage::Arithmetic] {
            let mut emf = emf_arrays(blk);
            ct_emf(&exec, &blk.geom(), &flux, &ecc, &mut emf, mode);
            for c in 0..3 {
                let bx = edge_bounds(&blk.geom(), c);
                for k in bx.ks..bx.ke {
                    for j in bx.js..bx.je {
                        for i in bx.is..bx.ie {
                            assert_eq!(emf[c].get(k, j, i), e[c], "mode {mode:?}, component {c}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_and_uniform_emf_leave_faces() {
        let exec = Executor::serial();
        let m = mesh(4);
        let blk = &m.blocks[0];
        let mut base = blk.state.b.clone();
        for (n, x) in base.b2.as_mut_slice().iter_mut().enumerate() {
            *x = (n as f64 * 0.37).sin();
        }
        let mut emf = emf_arrays(blk);
        let mut out = base.clone();
        ct_update_face_b(&exec, &blk.geom(), &base, &mut out, &emf, 0.1);
        assert_eq!(out, base);
        for (c, e) in emf.iter_mut().enumerate() {
            e.fill(c as f64 + 0.25);
        }
        ct_update_face_b(&exec, &blk.geom(), &base, &mut out, &emf, 0.1);
        assert_eq!(out, base);
    }

    #[test]
    fn single_edge_moves_four_faces() {
        let exec = Executor::serial();
        let m = mesh(4);
        let blk = &m.blocks[0];
        let mut emf = emf_arrays(blk);
        // eps3 on the edge at the lower x1 and x2 faces of cell (3, 3, 3)
        emf[2].set(3, 3, 3, 1.0);
        let base = blk.state.b.clone();
        let mut out = base.clone();
        let dt = 0.5;
        ct_update_face_b(&exec, &blk.geom(), &base, &mut out, &emf, dt);
        let dx = blk.dx[0];
        assert_eq!(out.b1.get(3, 3, 3), -dt / dx);
        assert_eq!(out.b1.get(3, 2, 3), dt / dx);
        assert_eq!(out.b2.get(3, 3, 3), dt / dx);
        assert_eq!(out.b2.get(3, 3, 2), -dt / dx);
        let moved = out.b1.as_slice().iter().chain(out.b2.as_slice()).chain(out.b3.as_slice()).filter(|x| **x != 0.0);
        assert_eq!(moved.count(), 4);
    }

    #[test]
    fn random_emf_preserves_divergence() {
        let exec = Executor::serial();
        let mut m = mesh(8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = m.blocks[0].ncells;
        let emf: [Array3<f64>; 3] = std::array::from_fn(|_| {
            let mut a = Array3::zeros(n[2], n[1], n[0]);
            a.as_mut_slice().iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
            a
        });
        // a divergence-free start: uniform field plus a random curl
        let blk = &m.blocks[0];
        let mut base = blk.state.b.clone();
        base.b1.fill(0.7);
        base.b2.fill(-0.2);
        base.b3.fill(1.1);
        let before = {
            m.blocks[0].state.b = base.clone();
            max_divergence_b(&exec, &m)
        };
        let blk = &m.blocks[0];
        let mut out = base.clone();
        ct_update_face_b(&exec, &blk.geom(), &base, &mut out, &emf, 0.05);
        m.blocks[0].state.b = out;
        let after = max_divergence_b(&exec, &m);
        assert_eq!(before, 0.0);
        assert!(after <= 1e-13, "{after}");
        // the update is not trivial
        assert_ne!(m.blocks[0].state.b, base);
    }

    #[test]
    fn face_to_center_averages() {
        let exec = Executor::serial();
        let mut m = mesh(4);
        let blk = &mut m.blocks[0];
        let dx = blk.dx[0];
        let (n3, n2, n1) = blk.state.b.b1.dims();
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    blk.state.b.b1.set(k, j, i, 2.0 * i as f64 * dx);
                }
            }
        }
        blk.state.b.b2.fill(0.5);
        let geom = blk.geom();
        face_to_center_b(&exec, &geom, &mut blk.state);
        for i in blk.is..blk.ie {
            assert!((blk.state.u.get(IB1, 3, 3, i) - 2.0 * (i as f64 + 0.5) * dx).abs() < 1e-15);
            assert_eq!(blk.state.u.get(IB1 + 1, 3, 3, i), 0.5);
            assert_eq!(blk.state.u.get(IB1 + 2, 3, 3, i), 0.0);
        }
    }
}
