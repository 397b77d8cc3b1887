mod support;

use pmhd_core::mhd::riemann::{flux_1d, hlle_flux, roe_flux, Prim1d};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::roe_oracle::{oracle, random_state, rel_err, roe_state, GAMMA};

#[test]
fn roe_matches_numerical_eigendecomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let (l, r) = (random_state(&mut rng), random_state(&mut rng));
        let bn = rng.gen_range(-2.0..2.0);
        if roe_state(&l, &r, bn).p <= 0.0 {
            continue;
        }
        let (want, diss) = oracle(&l, &r, bn);
        let got = roe_flux(&l, &r, bn, GAMMA);
        let e = rel_err(&got, &want, diss);
        assert!(e <= 1e-10, "pair {n}: rel err {e:e}\n l={l:?}\n r={r:?}\n bn={bn}\n got={got:?}\n want={want:?}");
        worst = worst.max(e);
        n += 1;
    }
    println!("worst relative error over 1000 pairs: {worst:e}");
}

#[test]
fn fixed_oblique_pair_matches_oracle() {
    let l = Prim1d { rho: 1.08, vn: 1.2, vt1: 0.01, vt2: 0.5, p: 0.95, bt1: 3.6, bt2: 2.0 };
    let r = Prim1d { rho: 1.0, vn: 0.0, vt1: 0.0, vt2: 0.0, p: 1.0, bt1: 4.0, bt2: 2.0 };
    let bn = 2.0;
    let (want, diss) = oracle(&l, &r, bn);
    let got = roe_flux(&l, &r, bn, GAMMA);
    assert!(rel_err(&got, &want, diss) <= 1e-10, "{got:?} vs {want:?}");
}

#[test]
fn equal_states_give_physical_flux_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let w = random_state(&mut rng);
        let bn = rng.gen_range(-2.0..2.0);
        let f = flux_1d(&w, bn, GAMMA);
        assert_eq!(roe_flux(&w, &w, bn, GAMMA), f);
        assert_eq!(hlle_flux(&w, &w, bn, GAMMA), f);
    }
}

#[test]
fn static_contact_has_no_mass_flux() {
    let l = Prim1d { rho: 1.0, vn: 0.0, vt1: 0.0, vt2: 0.0, p: 1.0, bt1: 0.0, bt2: 0.0 };
    let r = Prim1d { rho: 0.125, ..l };
    let f = roe_flux(&l, &r, 0.0, GAMMA);
    assert_eq!(f[0], 0.0);
    let (want, _) = oracle(&l, &r, 0.0);
    assert!(want[0].abs() < 1e-14);
    assert!((f[1] - 1.0).abs() < 1e-14);
}
