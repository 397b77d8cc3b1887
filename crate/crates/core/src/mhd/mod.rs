//! Adiabatic ideal MHD: EOS, Riemann solvers, reconstruction, constrained
//! transport and the VL2 integrator.

pub mod ct;
pub mod eos;
pub mod integrator;
pub mod reconstruct;
pub mod riemann;
pub mod wave;

pub use ct::{ct_emf, ct_update_face_b, face_to_center_b, EmfAverage};
pub use eos::{cons_to_prim, fast_speed, prim_to_cons, ConsState, EosError, PrimState};
pub use integrator::{compute_dt, prepare_state, vl2_step, Reconstruction, Solver, SolverError, SolverOptions};
pub use reconstruct::{mc_slope, plm_face, plm_line, plm_line_prim};
pub use riemann::{flux_1d, hlle_fallback_count, hlle_flux, roe_flux, Prim1d, RiemannSolver, NFLUX};
pub use wave::{append_errors_csv, init_linear_wave, linear_wave_problem, l1_error, L1Errors, WaveError, WaveSetup, WaveSolution};
