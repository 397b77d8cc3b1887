//! Linear fast magnetosonic wave on a periodic box.
//!
//! The eigenvector is not hand-coded: the 1-D flux Jacobian of the
//! background is built with complex-step differentiation (exact to rounding),
//! its largest eigenvalue is the right-going fast speed, and the matching
//! right eigenvector is the null vector of `A - lambda I` from an SVD.
//!
//! Face fields come from a vector potential sampled on cell edges, so the
//! initial field is divergence-free to rounding. The exact solution at time
//! `t` is discretized the same way as the initial state, so the error at
//! `t = 0` vanishes.

use std::f64::consts::PI;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;

use nalgebra::SMatrix;
use num_complex::Complex64;
use num_traits::Num;
use thiserror::Error;

use super::eos::{prim_to_cons, PrimState};
use super::integrator::prepare_state;
use crate::exec::Executor;
use crate::mesh::{build_mesh, Mesh, MeshConfig, IB1, IDN, IEN, IM1, NVAR};
use crate::real::Real;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum WaveError {
    #[error("wavevector must be nonzero")]
    ZeroWavevector,
    #[error("background has no real fast eigen-speed: {0}")]
    NoFastMode(String),
}

/// Linear-wave problem parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveSetup {
    /// Background state. Velocity and field components are given in the wave
    /// frame `(n, t1, t2)`, not along the grid axes.
    pub background: PrimState<f64>,
    /// Wave periods per domain length along each axis.
    pub wavevector: [i32; 3],
    pub amplitude: f64,
}

impl Default for WaveSetup {
    fn default() -> Self {
        let s = 1.0 / (4.0 * PI).sqrt();
        WaveSetup {
            background: PrimState { rho: 1.0, v: [0.0; 3], p: 0.6, b: [s, 2f64.sqrt() * s, 0.5 * s] },
            wavevector: [1, 0, 0],
            amplitude: 1e-6,
        }
    }
}

/// Analytic ideal-MHD flux of the conserved 1-D state
/// `(rho, m_n, m_t1, m_t2, E, B_t1, B_t2)`, generic so it can be evaluated on
/// complex numbers.
pub fn conserved_flux<S>(q: &[S; 7], bn: S, gamma: S) -> [S; 7]
where
    S: Num + Copy + From<f64>,
{
    let h = S::from(0.5);
    let [rho, mn, mt1, mt2, e, bt1, bt2] = *q;
    let (vn, vt1, vt2) = (mn / rho, mt1 / rho, mt2 / rho);
    let b2 = bn * bn + bt1 * bt1 + bt2 * bt2;
    let p = (gamma - S::one()) * (e - h * (mn * vn + mt1 * vt1 + mt2 * vt2) - h * b2);
    let pt = p + h * b2;
    let vb = vn * bn + vt1 * bt1 + vt2 * bt2;
    [
        mn,
        mn * vn + pt - bn * bn,
        mn * vt1 - bn * bt1,
        mn * vt2 - bn * bt2,
        (e + pt) * vn - bn * vb,
        bt1 * vn - bn * vt1,
        bt2 * vn - bn * vt2,
    ]
}

/// Conserved 1-D state of a wave-frame primitive state and its normal field.
pub fn wave_frame_state(w: &PrimState<f64>, gamma: f64) -> ([f64; 7], f64) {
    let c = prim_to_cons(w, gamma);
    ([c.rho, c.m[0], c.m[1], c.m[2], c.e, c.b[1], c.b[2]], c.b[0])
}

/// `dF/dU` by complex-step differentiation.
pub fn flux_jacobian(q: &[f64; 7], bn: f64, gamma: f64) -> SMatrix<f64, 7, 7> {
    const H: f64 = 1e-30;
    let mut a = SMatrix::<f64, 7, 7>::zeros();
    for j in 0..7 {
        let mut qc = q.map(Complex64::from);
        qc[j].im = H;
        let f = conserved_flux(&qc, Complex64::from(bn), Complex64::from(gamma));
        for i in 0..7 {
            a[(i, j)] = f[i].im / H;
        }
    }
    a
}

/// Largest eigenvalue of the flux Jacobian and its right eigenvector,
/// scaled to unit density component.
pub fn fast_eigenpair(q: &[f64; 7], bn: f64, gamma: f64) -> Result<(f64, [f64; 7]), WaveError> {
    let a = flux_jacobian(q, bn, gamma);
    let ev = a.complex_eigenvalues();
    let top = ev.iter().max_by(|x, y| x.re.total_cmp(&y.re)).expect("7 eigenvalues");
    let scale = a.norm().max(1.0);
    if !top.re.is_finite() || top.im.abs() > 1e-8 * scale {
        return Err(WaveError::NoFastMode(format!("leading eigenvalue {top}")));
    }
    let lambda = top.re;
    let shifted = a - SMatrix::<f64, 7, 7>::identity() * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (n, _) = svd.singular_values.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("7 values");
    let r: [f64; 7] = std::array::from_fn(|c| v_t[(n, c)]);
    if r[0].abs() < 1e-12 {
        return Err(WaveError::NoFastMode("eigenvector has no density component".into()));
    }
    Ok((lambda, r.map(|x| x / r[0])))
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Exact-solution descriptor of an initialized wave.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveSolution {
    pub setup: WaveSetup,
    pub gamma: f64,
    pub nx: [usize; 3],
    pub dx: [f64; 3],
    /// Wavevector in radians per unit length.
    pub k: [f64; 3],
    /// Unit wave normal and tangential frame vectors.
    pub frame: [[f64; 3]; 3],
    /// Fast eigen-speed along the normal (includes background advection).
    pub speed: f64,
    /// Eigenvector in wave-frame conserved variables, unit density component.
    pub eigenvector: [f64; 7],
    u0: [f64; 8],
    du: [f64; 8],
    b0: [f64; 3],
    /// Amplitude of the vector-potential perturbation per unit `sin(phase)`.
    da: [f64; 3],
}

impl WaveSolution {
    pub fn new(setup: WaveSetup, nx: [usize; 3], extent: [f64; 3], gamma: f64) -> Result<Self, WaveError> {
        if setup.wavevector == [0; 3] {
            return Err(WaveError::ZeroWavevector);
        }
        let k: [f64; 3] = std::array::from_fn(|d| 2.0 * PI * setup.wavevector[d] as f64 / extent[d]);
        let kmag = dot(k, k).sqrt();
        let n = k.map(|x| x / kmag);
        let t1 = {
            let c = cross([0.0, 0.0, 1.0], n);
            let m = dot(c, c).sqrt();
            if m < 1e-12 {
                [1.0, 0.0, 0.0]
            } else {
                c.map(|x| x / m)
            }
        };
        let t2 = cross(n, t1);
        let frame = [n, t1, t2];
        let to_global = |a: [f64; 3]| -> [f64; 3] { std::array::from_fn(|d| a[0] * n[d] + a[1] * t1[d] + a[2] * t2[d]) };

        let (q, bn) = wave_frame_state(&setup.background, gamma);
        let (speed, r) = fast_eigenpair(&q, bn, gamma)?;
        let amp = setup.amplitude;

        let m0 = to_global([q[1], q[2], q[3]]);
        let b0 = to_global([bn, q[5], q[6]]);
        let u0 = [q[0], m0[0], m0[1], m0[2], q[4], b0[0], b0[1], b0[2]];
        let dm = to_global([r[1], r[2], r[3]]);
        let db = to_global([0.0, r[5], r[6]]);
        let du = [r[0], dm[0], dm[1], dm[2], r[4], db[0], db[1], db[2]].map(|x| amp * x);
        // curl(sin(phase) a) = cos(phase) k x a = cos(phase) dB for this a
        let da = to_global([0.0, r[6], -r[5]]).map(|x| amp * x / kmag);

        let dx: [f64; 3] = std::array::from_fn(|d| extent[d] / nx[d] as f64);
        Ok(WaveSolution { setup, gamma, nx, dx, k, frame, speed, eigenvector: r, u0, du, b0, da })
    }

    pub fn kmag(&self) -> f64 {
        dot(self.k, self.k).sqrt()
    }

    /// Time for the wave to travel one wavelength.
    pub fn period(&self) -> f64 {
        2.0 * PI / (self.speed.abs() * self.kmag())
    }

    fn wrap(&self, g: [i64; 3]) -> [f64; 3] {
        std::array::from_fn(|d| g[d].rem_euclid(self.nx[d] as i64) as f64)
    }

    /// Phase at a point given in cell units (`x_d = pos_d * dx_d`).
    fn phase(&self, pos: [f64; 3], t: f64) -> f64 {
        let mut ph = -self.speed * self.kmag() * t;
        for d in 0..3 {
            ph += self.k[d] * pos[d] * self.dx[d];
        }
        ph
    }

    /// Vector potential component `c` on the edge of direction `c` at the
    /// lower corner of global cell `g`.
    fn potential(&self, c: usize, g: [i64; 3], t: f64) -> f64 {
        let mut pos = self.wrap(g);
        pos[c] += 0.5;
        self.da[c] * self.phase(pos, t).sin()
    }

    /// Field on the lower `d`-face of global cell `g`.
    pub fn face_field(&self, d: usize, g: [i64; 3], t: f64) -> f64 {
        let (a, b) = ((d + 1) % 3, (d + 2) % 3);
        let step = |g: [i64; 3], e: usize| {
            let mut h = g;
            h[e] += 1;
            h
        };
        // B_d = d_a A_b - d_b A_a
        let curl = (self.potential(b, step(g, a), t) - self.potential(b, g, t)) / self.dx[a]
            - (self.potential(a, step(g, b), t) - self.potential(a, g, t)) / self.dx[b];
        self.b0[d] + curl
    }

    /// Exact cell values of all 8 conserved variables; the field is the mean
    /// of the two exact face values.
    pub fn cell_state(&self, g: [i64; 3], t: f64) -> [f64; 8] {
        let ph = self.phase(self.wrap(g).map(|x| x + 0.5), t).cos();
        let mut u: [f64; 8] = std::array::from_fn(|v| self.u0[v] + self.du[v] * ph);
        for d in 0..3 {
            let mut up = g;
            up[d] += 1;
            u[IB1 + d] = 0.5 * (self.face_field(d, g, t) + self.face_field(d, up, t));
        }
        u
    }
}

fn global_index(offset: [usize; 3], ng: usize, (k, j, i): (usize, usize, usize)) -> [i64; 3] {
    let loc = [i, j, k];
    std::array::from_fn(|d| offset[d] as i64 + loc[d] as i64 - ng as i64)
}

/// Sets every cell and face of `mesh`, ghosts included, to the wave at
/// `t = 0` and resets the clock.
pub fn init_linear_wave<T: Real>(mesh: &mut Mesh<T>, setup: WaveSetup) -> Result<WaveSolution, WaveError> {
    let sol = WaveSolution::new(setup, mesh.cfg.nx, mesh.cfg.extent, mesh.cfg.gamma)?;
    mesh.time = 0.0;
    mesh.cycle = 0;
    for blk in &mut mesh.blocks {
        let (offset, ng) = (blk.offset, blk.ng);
        for d in 0..3 {
            let f = blk.state.b.component_mut(d);
            let (n3, n2, n1) = f.dims();
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        let g = global_index(offset, ng, (k, j, i));
                        f.set(k, j, i, T::of(sol.face_field(d, g, 0.0)));
                    }
                }
            }
        }
        let [n1, n2, n3] = blk.ncells;
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    let u = sol.cell_state(global_index(offset, ng, (k, j, i)), 0.0);
                    for (v, x) in u.into_iter().enumerate() {
                        blk.state.u.set(v, k, j, i, T::of(x));
                    }
                }
            }
        }
    }
    Ok(sol)
}

/// Builds a mesh, initializes the wave and brings ghosts and primitives up
/// to date, ready for the first cycle.
pub fn linear_wave_problem<T: Real>(
    exec: &Executor,
    cfg: &MeshConfig,
    setup: WaveSetup,
) -> Result<(Mesh<T>, WaveSolution), crate::Error> {
    let mut mesh = build_mesh(cfg)?;
    let sol = init_linear_wave(&mut mesh, setup)?;
    prepare_state(exec, &mut mesh)?;
    Ok((mesh, sol))
}

/// Mean absolute error per conserved variable and `sqrt(sum L1^2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct L1Errors {
    pub per_var: [f64; NVAR],
    pub combined: f64,
}

impl L1Errors {
    pub fn from_sums(sums: [f64; NVAR], ncells: usize) -> Self {
        let per_var = sums.map(|s| s / ncells as f64);
        let combined = per_var.iter().map(|x| x * x).sum::<f64>().sqrt();
        L1Errors { per_var, combined }
    }
}

/// L1 errors of the active cells against the exact wave at time `t`.
pub fn l1_error<T: Real>(mesh: &Mesh<T>, sol: &WaveSolution, t: f64) -> L1Errors {
    let mut sums = [0.0; NVAR];
    for blk in &mesh.blocks {
        let bx = blk.active();
        for k in bx.ks..bx.ke {
            for j in bx.js..bx.je {
                for i in bx.is..bx.ie {
                    let exact = sol.cell_state(global_index(blk.offset, blk.ng, (k, j, i)), t);
                    for v in 0..NVAR {
                        sums[v] += (blk.state.u.get(v, k, j, i).as_f64() - exact[v]).abs();
                    }
                }
            }
        }
    }
    L1Errors::from_sums(sums, mesh.active_cells())
}

pub const ERRORS_CSV_HEADER: &str = "resolution,cycles,L1_rho,L1_m1,L1_m2,L1_m3,L1_E,L1_B1,L1_B2,L1_B3,L1_combined";

/// Appends one row to an `errors.csv`, writing the header first if the file
/// is new or empty.
pub fn append_errors_csv(path: &Path, resolution: usize, cycles: u64, e: &L1Errors) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if f.metadata()?.len() == 0 {
        writeln!(f, "{ERRORS_CSV_HEADER}")?;
    }
    let mut row = format!("{resolution},{cycles}");
    for x in e.per_var.iter().chain([&e.combined]) {
        row.push_str(&format!(",{x:e}"));
    }
    writeln!(f, "{row}")
}

// Slot order used by `cell_state`.
const _: () = assert!(IDN == 0 && IM1 == 1 && IEN == 4 && IB1 == 5);
