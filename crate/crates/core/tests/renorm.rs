use std::sync::OnceLock;

use yoccoz::dynamics::{airplane_parameter, fixed_points};
use yoccoz::puzzle::{build_puzzle, PuzzleComplex, PuzzleConfig};
use yoccoz::renorm::*;
use yoccoz::{Complex64, Error};

fn airplane() -> &'static PuzzleComplex {
    static P: OnceLock<PuzzleComplex> = OnceLock::new();
    P.get_or_init(|| {
        let p = fixed_points(airplane_parameter()).unwrap();
        let cfg = PuzzleConfig { depth: 8, resolution: 1024, boundary_arcs: false, ..Default::default() };
        build_puzzle(&p, &cfg).unwrap()
    })
}

fn plm() -> GeneralizedPLM {
    let pz = airplane();
    build_first_return_plm(pz, select_level(pz, 100).unwrap(), 100).unwrap()
}

#[test]
fn airplane_first_return_map() {
    let pz = airplane();
    let g = plm();
    assert_eq!(g.pieces.len(), 1);
    assert_eq!(g.pieces[0].degree, 2);
    assert_eq!(g.pieces[0].return_time, 3);
    assert_eq!(g.pieces[0].level, g.level + 3);
    assert!(g.returns.iter().enumerate().all(|(i, &m)| m == 3 * (i + 1)));
    assert!(plm_orbit_check(&g, 100));
    let checks = validate(&g, pz).unwrap();
    assert!(checks.disjoint && checks.contained && checks.unique_critical && checks.orbit_ok);
}

#[test]
fn airplane_cantor_diagnostics_plateau() {
    let levels = cantor_diagnostics(&plm(), 4).unwrap();
    for w in levels.windows(2) {
        assert!(w[1].area <= w[0].area);
    }
    // the small Julia set keeps the diameters away from zero
    assert!(levels[4].max_diameter > 0.1 * levels[0].max_diameter);
}

#[test]
fn returns_are_increasing() {
    let r = returns_to_critical_piece(airplane(), 4, 30).unwrap();
    assert!(r.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn no_returns_for_minus_two() {
    let p = fixed_points(Complex64::new(-2.0, 0.0)).unwrap();
    let cfg = PuzzleConfig { depth: 6, resolution: 1024, boundary_arcs: false, ..Default::default() };
    let pz = build_puzzle(&p, &cfg).unwrap();
    for n in 2..=6 {
        assert_eq!(returns_to_critical_piece(&pz, n, 50).unwrap(), Vec::<usize>::new());
        assert!(matches!(build_first_return_plm(&pz, n, 50), Err(Error::NoReturns { .. })));
    }
}

#[test]
fn degenerate_annulus_is_rejected() {
    assert!(!annulus_nondegenerate(airplane(), 1));
    assert!(matches!(
        build_first_return_plm(airplane(), 1, 50),
        Err(Error::AnnulusDegenerate { level: 1 })
    ));
}

fn corrupted(f: impl FnOnce(&mut GeneralizedPLM)) -> Result<PlmChecks, Violation> {
    let mut g = plm();
    f(&mut g);
    validate(&g, airplane())
}

#[test]
fn each_violation_is_detected() {
    let dup = corrupted(|g| {
        let mut copy = g.pieces[0].clone();
        copy.degree = 1;
        g.pieces.push(copy);
    });
    assert!(matches!(dup, Err(Violation::Disjointness { .. })), "{dup:?}");

    let outside = corrupted(|g| {
        let pz = airplane();
        let level = g.pieces[0].level;
        let far = pz
            .pieces(level)
            .iter()
            .find(|p| pz.ancestor(level, p.id, g.level) != g.critical_id)
            .unwrap();
        g.pieces[0].mask = far.mask.clone();
    });
    assert!(matches!(outside, Err(Violation::Containment { .. })), "{outside:?}");

    let no_critical = corrupted(|g| g.pieces[0].degree = 1);
    assert!(matches!(no_critical, Err(Violation::UniqueCritical { degree_two: 0 })));

    let late = corrupted(|g| g.pieces[0].return_time = 6);
    assert!(matches!(late, Err(Violation::IntermediatePiece { step: 3, .. })), "{late:?}");

    let early = corrupted(|g| g.pieces[0].return_time = 2);
    assert!(matches!(early, Err(Violation::OrbitConsistency { .. })), "{early:?}");

    let level = corrupted(|g| g.pieces[0].level += 1);
    assert!(matches!(level, Err(Violation::LevelMismatch { .. })), "{level:?}");
}

#[test]
fn deleted_piece_breaks_the_orbit() {
    let mut g = plm();
    g.pieces.clear();
    assert!(!plm_orbit_check(&g, 10));
}
