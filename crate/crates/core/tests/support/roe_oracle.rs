//! Independent Roe-flux oracle: Roe average recomputed here, Jacobian by
//! complex step, `|A|` from a numerical eigendecomposition.

use nalgebra::{SMatrix, SVector};
use pmhd_core::mhd::riemann::Prim1d;
use pmhd_core::mhd::wave::{conserved_flux, flux_jacobian};
use rand::Rng;

type M7 = SMatrix<f64, 7, 7>;
type V7 = SVector<f64, 7>;

pub const GAMMA: f64 = 5.0 / 3.0;

pub fn cons(w: &Prim1d<f64>, bn: f64) -> [f64; 7] {
    let v2 = w.vn * w.vn + w.vt1 * w.vt1 + w.vt2 * w.vt2;
    let b2 = bn * bn + w.bt1 * w.bt1 + w.bt2 * w.bt2;
    let e = w.p / (GAMMA - 1.0) + 0.5 * w.rho * v2 + 0.5 * b2;
    [w.rho, w.rho * w.vn, w.rho * w.vt1, w.rho * w.vt2, e, w.bt1, w.bt2]
}

pub fn roe_state(l: &Prim1d<f64>, r: &Prim1d<f64>, bn: f64) -> Prim1d<f64> {
    let (ql, qr) = (cons(l, bn), cons(r, bn));
    let (a, b) = (l.rho.sqrt(), r.rho.sqrt());
    let wavg = |x: f64, y: f64| (a * x + b * y) / (a + b);
    let hl = (ql[4] + l.p + 0.5 * (bn * bn + l.bt1 * l.bt1 + l.bt2 * l.bt2)) / l.rho;
    let hr = (qr[4] + r.p + 0.5 * (bn * bn + r.bt1 * r.bt1 + r.bt2 * r.bt2)) / r.rho;
    let rho = a * b;
    let (vn, vt1, vt2) = (wavg(l.vn, r.vn), wavg(l.vt1, r.vt1), wavg(l.vt2, r.vt2));
    let h = wavg(hl, hr);
    let bt1 = (b * l.bt1 + a * r.bt1) / (a + b);
    let bt2 = (b * l.bt2 + a * r.bt2) / (a + b);
    let p = (GAMMA - 1.0) / GAMMA
        * (rho * h - 0.5 * rho * (vn * vn + vt1 * vt1 + vt2 * vt2) - (bn * bn + bt1 * bt1 + bt2 * bt2));
    Prim1d { rho, vn, vt1, vt2, p, bt1, bt2 }
}

/// `R |Lambda| R^-1` from eigenvalues of `a` and SVD null spaces of `a - lambda I`.
/// Eigenvalues closer than `tol` share one null space.
fn abs_matrix(a: &M7) -> M7 {
    let mut lam: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
    lam.sort_by(f64::total_cmp);
    let tol = 1e-7 * a.norm();
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for l in lam {
        match clusters.last_mut() {
            Some(c) if l - c[c.len() - 1] < tol => c.push(l),
            _ => clusters.push(vec![l]),
        }
    }
    let mut r = M7::zeros();
    let mut mags = V7::zeros();
    let mut col = 0;
    for c in &clusters {
        let l = c.iter().sum::<f64>() / c.len() as f64;
        let svd = (a - M7::identity() * l).svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..7).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        for &n in order.iter().take(c.len()) {
            for i in 0..7 {
                r[(i, col)] = vt[(n, i)];
            }
            mags[col] = l.abs();
            col += 1;
        }
    }
    assert_eq!(col, 7);
    let rinv = r.try_inverse().expect("complete eigenbasis");
    r * M7::from_diagonal(&mags) * rinv
}

pub fn oracle(l: &Prim1d<f64>, r: &Prim1d<f64>, bn: f64) -> ([f64; 7], f64) {
    let avg = roe_state(l, r, bn);
    let a = flux_jacobian(&cons(&avg, bn), bn, GAMMA);
    let absa = abs_matrix(&a);
    let (ql, qr) = (cons(l, bn), cons(r, bn));
    let du = V7::from_fn(|i, _| qr[i] - ql[i]);
    let diss = absa * du;
    let fl = conserved_flux(&ql, bn, GAMMA);
    let fr = conserved_flux(&qr, bn, GAMMA);
    (std::array::from_fn(|i| 0.5 * (fl[i] + fr[i]) - 0.5 * diss[i]), diss.amax())
}

pub fn random_state(rng: &mut impl Rng) -> Prim1d<f64> {
    Prim1d {
        rho: rng.gen_range(0.2..5.0),
        vn: rng.gen_range(-2.0..2.0),
        vt1: rng.gen_range(-2.0..2.0),
        vt2: rng.gen_range(-2.0..2.0),
        p: rng.gen_range(0.1..5.0),
        bt1: rng.gen_range(-2.0..2.0),
        bt2: rng.gen_range(-2.0..2.0),
    }
}

pub fn rel_err(got: &[f64; 7], want: &[f64; 7], diss: f64) -> f64 {
    let num = got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = got.iter().map(|x| x.abs()).fold(diss, f64::max).max(1.0);
    num / scale
}
