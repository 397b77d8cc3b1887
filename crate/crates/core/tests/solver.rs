use pmhd_core::exec::{count_kernel_ops, measure, Executor, LoopPattern, LoopPolicy};
use pmhd_core::mesh::{conserved_totals, max_divergence_b, MeshConfig, Snapshot, IDN, IEN, IM1};
use pmhd_core::mhd::integrator::flux_bounds;
use pmhd_core::mhd::riemann::{roe_flux, Prim1d};
use pmhd_core::mhd::{compute_dt, linear_wave_problem, PrimState, Solver, SolverOptions, WaveSetup};
use pmhd_core::{Counted, Real};

fn oblique(amplitude: f64) -> WaveSetup {
    WaveSetup {
        background: PrimState { rho: 1.0, v: [0.4, -0.3, 0.2], p: 0.6, b: [0.5, 0.4, -0.3] },
        wavevector: [1, 1, 1],
        amplitude,
    }
}

fn run<T: Real>(exec: &Executor, cfg: &MeshConfig, setup: WaveSetup, cycles: u64) -> pmhd_core::mesh::Mesh<T> {
    let (mut mesh, _) = linear_wave_problem::<T>(exec, cfg, setup).unwrap();
    let mut solver = Solver::new(&mesh, SolverOptions::default());
    for _ in 0..cycles {
        solver.cycle(exec, &mut mesh, None).unwrap();
    }
    mesh
}

#[test]
fn totals_are_conserved_over_100_cycles() {
    let exec = Executor::serial();
    let cfg = MeshConfig::cube(32);
    let (mut mesh, _) = linear_wave_problem::<f64>(&exec, &cfg, oblique(1e-2)).unwrap();
    let before = conserved_totals(&exec, &mesh);
    let mut solver = Solver::new(&mesh, SolverOptions::default());
    for _ in 0..100 {
        solver.cycle(&exec, &mut mesh, None).unwrap();
    }
    let after = conserved_totals(&exec, &mesh);
    for v in [IDN, IM1, IM1 + 1, IM1 + 2, IEN] {
        let drift = (after[v] - before[v]).abs() / before[v].abs();
        assert!(drift <= 1e-13, "variable {v}: {} -> {} ({drift:e})", before[v], after[v]);
    }
}

#[test]
fn all_policies_give_identical_fields() {
    let cfg = MeshConfig::cube(16);
    let serial = Executor::serial();
    let reference = run::<f64>(&serial, &cfg, oblique(1e-3), 10);
    let snap = Snapshot::from_mesh(&reference);
    let (dt0, div0, tot0) = (compute_dt(&serial, &reference), max_divergence_b(&serial, &reference), conserved_totals(&serial, &reference));
    for pattern in LoopPattern::ALL_DEFAULT {
        for workers in [1, 3] {
            let exec = Executor::new(LoopPolicy::new(pattern, workers)).unwrap();
            let mesh = run::<f64>(&exec, &cfg, oblique(1e-3), 10);
            assert!(Snapshot::from_mesh(&mesh).bitwise_eq(&snap), "{pattern} x{workers}");
            assert_eq!(compute_dt(&exec, &mesh), dt0);
            assert_eq!(max_divergence_b(&exec, &mesh), div0);
            let tot = conserved_totals(&exec, &mesh);
            for v in 0..tot.len() {
                let scale = tot0[v].abs().max(1e-300);
                assert!((tot[v] - tot0[v]).abs() / scale <= 1e-14, "{pattern} x{workers} var {v}");
            }
        }
    }
}

#[test]
fn decomposition_does_not_change_result() {
    let exec = Executor::serial();
    let one = MeshConfig::cube(32);
    let eight = MeshConfig { mb: [16; 3], ..one.clone() };
    let a = run::<f64>(&exec, &one, oblique(1e-3), 10);
    let b = run::<f64>(&exec, &eight, oblique(1e-3), 10);
    assert_eq!(b.blocks.len(), 8);
    assert_eq!(a.time, b.time);
    let diff = Snapshot::from_mesh(&a).max_rel_diff(&Snapshot::from_mesh(&b));
    assert!(diff <= 1e-13, "{diff:e}");
}

#[test]
fn counting_run_is_bitwise_equal() {
    let cfg = MeshConfig::cube(8);
    let plain = run::<f64>(&Executor::serial(), &cfg, oblique(1e-3), 3);
    let exec = Executor::serial();
    exec.profiler().set_counting(true);
    let counted = run::<Counted>(&exec, &cfg, oblique(1e-3), 3);
    assert!(Snapshot::from_mesh(&counted).bitwise_eq(&Snapshot::from_mesh(&plain)));
    let ops = count_kernel_ops(&exec.profiler().report(), "riemann").unwrap();
    assert!(ops.flops > 0 && ops.bytes > 0);
}

#[test]
fn riemann_tally_is_per_face_count_times_faces() {
    let setup = WaveSetup { amplitude: 0.0, ..oblique(0.0) };
    let cfg = MeshConfig::cube(8);
    let exec = Executor::serial();
    let (mut mesh, _) = linear_wave_problem::<Counted>(&exec, &cfg, setup).unwrap();
    let mut solver = Solver::new(&mesh, SolverOptions::default());
    let dt = compute_dt(&exec, &mesh);
    exec.profiler().reset();
    exec.profiler().set_counting(true);
    solver.step(&exec, &mut mesh, dt).unwrap();
    let ops = count_kernel_ops(&exec.profiler().report(), "riemann").unwrap();

    // one interface by hand: the Roe flux plus the four operations of the
    // contact-upwind weight
    let w = setup.background;
    let g = mesh.blocks[0].geom();
    let mut expected = 0;
    for d in 0..3 {
        let (t1, t2) = ((d + 1) % 3, (d + 2) % 3);
        let c = |x: f64| Counted(x);
        let p = Prim1d {
            rho: c(w.rho),
            vn: c(w.v[d]),
            vt1: c(w.v[t1]),
            vt2: c(w.v[t2]),
            p: c(w.p),
            bt1: c(w.b[t1]),
            bt2: c(w.b[t2]),
        };
        let (_, one) = measure(|| roe_flux(&p, &p, c(w.b[d]), c(5.0 / 3.0)));
        let faces = flux_bounds(&g, d).len() as u64;
        expected += 2 * faces * (one.flops() + 4);
    }
    assert_eq!(ops.flops, expected);
}
