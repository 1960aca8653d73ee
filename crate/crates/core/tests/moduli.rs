use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use yoccoz::mask::{Grid, RegionMask};
use yoccoz::moduli::*;
use yoccoz::Complex64;

const O: Complex64 = Complex64::new(0.0, 0.0);

fn analytic(ratio: f64) -> f64 {
    ratio.ln() / (2.0 * PI)
}

#[test]
fn round_annuli_at_512() {
    for ratio in [1.5, E, 4.0, 10.0] {
        let t = std::time::Instant::now();
        let a = AnnularRegion::round(O, 1.0, ratio, 512).unwrap();
        let mu = solve_modulus(&a).unwrap().modulus.as_f64();
        let err = (mu - analytic(ratio)).abs() / analytic(ratio);
        eprintln!("R/r={ratio}: mu={mu} err={err:.4} in {:?}", t.elapsed());
        assert!(err <= 0.02);
    }
}

#[test]
fn square_frame_self_convergence() {
    let frame = |n: usize| {
        let g = Grid::square(1.0 + 2.0 / n as f64, n + 4).unwrap();
        let outer = RegionMask::from_fn(g, |z| z.re.abs() < 1.0 && z.im.abs() < 1.0);
        let inner = RegionMask::from_fn(g, |z| z.re.abs() <= 0.5 && z.im.abs() <= 0.5);
        solve_modulus(&AnnularRegion::new(&outer, &inner).unwrap())
            .unwrap()
            .modulus
            .as_f64()
    };
    let (coarse, fine) = (frame(128), frame(512));
    // first-order convergence in pixel size
    let extrapolated = fine + (fine - coarse) / 3.0;
    eprintln!("coarse {coarse} fine {fine} extrapolated {extrapolated}");
    assert!((fine - extrapolated).abs() / extrapolated <= 0.02);
}

#[test]
fn covering_round_and_eccentric() {
    let round = AnnularRegion::round(O, 2f64.sqrt(), 2.0, 256).unwrap();
    let c = covering_check(&round, 2).unwrap();
    eprintln!("round {c:?}");
    assert!((c.ratio / 2.0 - 1.0).abs() <= 0.03);
    let id = covering_check(&round, 1).unwrap();
    assert!((id.ratio - 1.0).abs() <= 0.01, "{id:?}");

    let g = Grid::square(2.05, 300).unwrap();
    let outer = RegionMask::from_fn(g, |z| (z.re / 2.0).powi(2) + (z.im / 1.4).powi(2) < 1.0);
    let inner = RegionMask::from_fn(g, |z| (z.re / 0.5).powi(2) + (z.im / 0.8).powi(2) <= 1.0);
    let ecc = covering_check(&AnnularRegion::new(&outer, &inner).unwrap(), 2).unwrap();
    eprintln!("eccentric {ecc:?}");
    assert!((ecc.ratio / 2.0 - 1.0).abs() <= 0.03);
}

#[test]
fn groetzsch_superadditivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let big_r = rng.gen_range(3.0..8.0);
        let m = rng.gen_range(1.3..big_r / 1.3);
        let whole = solve_modulus(&AnnularRegion::round(O, 1.0, big_r, 256).unwrap()).unwrap();
        let g = Grid::square(big_r * (1.0 + 4.0 / 256.0), 256).unwrap();
        let inner_part = {
            let outer = RegionMask::from_fn(g, |z| z.norm() < m);
            let inner = RegionMask::from_fn(g, |z| z.norm() <= 1.0);
            solve_modulus(&AnnularRegion::new(&outer, &inner).unwrap()).unwrap()
        };
        let outer_part = {
            let outer = RegionMask::from_fn(g, |z| z.norm() < big_r);
            let inner = RegionMask::from_fn(g, |z| z.norm() <= m);
            solve_modulus(&AnnularRegion::new(&outer, &inner).unwrap()).unwrap()
        };
        let (w, a, b) = (whole.modulus.as_f64(), inner_part.modulus.as_f64(), outer_part.modulus.as_f64());
        assert!(w >= (a + b) * (1.0 - 0.03), "R={big_r} m={m}: {w} < {a} + {b}");
    }
}

fn two_blobs(rng: &mut ChaCha8Rng, g: Grid) -> (RegionMask, RegionMask) {
    let outer = RegionMask::from_fn(g, |z| z.norm() < 1.0);
    loop {
        let blobs: Vec<(Complex64, f64)> = (0..2)
            .map(|_| {
                let r = rng.gen_range(0.05..0.3);
                let rho = rng.gen_range(0.0..0.95 - r);
                (Complex64::from_polar(rho, rng.gen_range(0.0..2.0 * PI)), r)
            })
            .collect();
        let inner = RegionMask::from_fn(g, |z| blobs.iter().any(|&(c, r)| (z - c).norm() <= r));
        if !inner.is_empty() {
            return (outer, inner);
        }
    }
}

#[test]
fn isoperimetric_random_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Grid::square(1.02, 96).unwrap();
    for k in 0..100 {
        let (outer, inner) = two_blobs(&mut rng, g);
        let c = isoperimetric_check(&AnnularRegion::new(&outer, &inner).unwrap()).unwrap();
        assert!(c.holds, "case {k}: {c:?}");
    }
}

#[test]
fn isoperimetric_limit_case() {
    let g = Grid::square(1.05, 128).unwrap();
    let outer = RegionMask::from_fn(g, |z| z.norm() < 1.0);
    let shrunk = RegionMask::from_fn(g, |z| z.norm() < 1.0 - 2.0 * g.dx);
    let c = isoperimetric_check(&AnnularRegion::new(&outer, &shrunk).unwrap()).unwrap();
    eprintln!("{c:?}");
    assert!(c.holds);
}

#[test]
fn monotone_in_inner_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = Grid::square(1.02, 96).unwrap();
    for _ in 0..10 {
        let (outer, small) = two_blobs(&mut rng, g);
        let extra = Complex64::from_polar(rng.gen_range(0.0..0.6), rng.gen_range(0.0..2.0 * PI));
        let big = RegionMask::from_fn(g, |z| small.contains(z) || (z - extra).norm() <= 0.2);
        let mu_small = solve_modulus(&AnnularRegion::new(&outer, &small).unwrap()).unwrap();
        let mu_big = solve_modulus(&AnnularRegion::new(&outer, &big).unwrap()).unwrap();
        assert!(mu_big.modulus.as_f64() <= mu_small.modulus.as_f64() + 1e-3);
    }
}

#[test]
fn concentric_nest_partial_sums() {
    let annuli: Vec<AnnularRegion> = (0..4)
        .map(|n| {
            let r_out = (-(n as f64)).exp();
            AnnularRegion::round(O, r_out / E, r_out, 256).unwrap()
        })
        .collect();
    let sums = partial_sums(&annuli).unwrap();
    for (k, s) in sums.iter().enumerate() {
        let expect = (k + 1) as f64 / (2.0 * PI);
        eprintln!("{s:?} expect {expect}");
        assert!((s.sum - expect).abs() / expect <= 0.02);
    }
}
