use krphase::heterodyne::ideal_scan;
use krphase::io::{load_grid, save_grid};
use krphase::metrics::compare_real;
use krphase::phasespace::{
    characteristic_from_kr, damped_characteristic, direct_wigner, kr_conjugate, kr_from_conjugate, marginals,
    q_from_characteristic, sharpened_characteristic, wigner_from_kr,
};
use krphase::{apply_obstruction, make_gaussian, Field, Grid1D, LOConfig, PsGrid, RegSpec, ScanConfig, UnitMode};
use proptest::prelude::*;

fn beam(n: usize, sigma: f64, radius: f64, center: f64) -> Field {
    beam_on(n, 16.0, sigma, radius, center)
}

fn beam_on(n: usize, extent: f64, sigma: f64, radius: f64, center: f64) -> Field {
    let g = Grid1D::new(n, extent, UnitMode::Dimensionless).unwrap();
    make_gaussian(g, sigma, radius, center).unwrap()
}

fn radius() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(f64::INFINITY),
        (4.0f64..60.0),
        (-60.0f64..-4.0),
    ]
}

fn integral(g: &PsGrid) -> f64 {
    g.integral().re
}

fn bitwise_eq(a: &PsGrid, b: &PsGrid) -> bool {
    a.values()
        .iter()
        .zip(b.values())
        .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn kr_and_wigner_marginals_agree(sigma in 0.8f64..1.4, r in radius(), c in -1.0f64..1.0) {
        let f = beam(256, sigma, r, c);
        let mk = marginals(&kr_conjugate(&f).unwrap());
        let mw = marginals(&direct_wigner(&f).unwrap());
        prop_assert!(compare_real(&mw.position, &mk.position).rel_l2 < 1e-6);
        prop_assert!(compare_real(&mw.momentum, &mk.momentum).rel_l2 < 1e-6);
    }

    #[test]
    fn obstructed_marginals_agree_up_to_edge_discretization(
        sigma in 0.8f64..1.4,
        c in -1.0f64..1.0,
        hole in 0.1f64..0.6,
    ) {
        let f = apply_obstruction(&beam(256, sigma, f64::INFINITY, c), hole).unwrap();
        let mk = marginals(&kr_conjugate(&f).unwrap());
        let mw = marginals(&direct_wigner(&f).unwrap());
        prop_assert!(compare_real(&mw.position, &mk.position).rel_l2 < 1e-12);
        // hard edges put energy at the band edge, where the Wigner x-sum aliases
        prop_assert!(compare_real(&mw.momentum, &mk.momentum).rel_l2 < 2e-3);
    }

    #[test]
    fn both_wigner_paths_agree(sigma in 0.8f64..1.4, r in radius(), c in -1.0f64..1.0) {
        let f = beam(128, sigma, r, c);
        let a = direct_wigner(&f).unwrap();
        let b = wigner_from_kr(&kr_conjugate(&f).unwrap()).unwrap();
        let linf = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(linf < 1e-6, "linf {linf:e}");
    }

    #[test]
    fn kr_vanishes_where_the_field_does(hole in 0.05f64..2.0, c in -0.5f64..0.5) {
        let f = apply_obstruction(&beam(256, 1.0, f64::INFINITY, c), hole).unwrap();
        let krc = kr_conjugate(&f).unwrap();
        for (row, a) in krc.values().outer_iter().zip(f.amplitudes()) {
            if a.norm() == 0.0 {
                prop_assert!(row.iter().all(|v| v.norm() == 0.0));
            }
        }
    }

    #[test]
    fn conjugation_is_an_involution(sigma in 0.8f64..1.4, r in radius(), c in -1.0f64..1.0) {
        let krc = kr_conjugate(&beam(128, sigma, r, c)).unwrap();
        let k = kr_from_conjugate(&krc).unwrap();
        prop_assert_eq!(&kr_from_conjugate(&k).unwrap(), &krc);
        let (a, b) = (marginals(&k), marginals(&krc));
        prop_assert_eq!(a.position, b.position);
        prop_assert_eq!(a.momentum, b.momentum);
    }

    #[test]
    fn q_is_nonnegative_and_normalized(sigma in 0.8f64..1.4, r in radius(), s in 0.6f64..1.6) {
        // the damped characteristic function must also decay inside the grid
        let f = beam_on(256, 16.0 * sigma.max(s), sigma, r, 0.0);
        let krc = kr_conjugate(&f).unwrap();
        let q = q_from_characteristic(&characteristic_from_kr(&krc).unwrap(), s).unwrap();
        let peak = q.peak();
        prop_assert!(q.values().iter().all(|v| v.re >= -1e-8 * peak));
        prop_assert!((integral(&q) - 1.0).abs() < 1e-6);
        prop_assert!((integral(&direct_wigner(&f).unwrap()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn damping_twice_undoes_one_sharpening(sigma in 0.8f64..1.4, s in 0.7f64..1.3) {
        let m = characteristic_from_kr(&kr_conjugate(&beam(128, sigma, f64::INFINITY, 0.0)).unwrap()).unwrap();
        let reg = RegSpec { floor: 0.0, taper_samples: 0, kernel_cap: None };
        let m_p = sharpened_characteristic(&m, s, &reg).unwrap();
        let m_q = damped_characteristic(&m, s).unwrap();
        let twice = damped_characteristic(&damped_characteristic(&m_p, s).unwrap(), s).unwrap();
        let err = twice.values().iter().zip(m_q.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-8, "err {err:e}");
    }

    #[test]
    fn binary_round_trip_is_bitwise(sigma in 0.8f64..1.4, r in radius(), c in -1.0f64..1.0) {
        let krc = kr_conjugate(&beam(64, sigma, r, c)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        save_grid(&krc, &path).unwrap();
        let back: PsGrid = load_grid(&path).unwrap();
        prop_assert!(bitwise_eq(&krc, &back));
    }
}

#[test]
fn obstructed_momentum_marginal_converges_with_grid_density() {
    let err = |n: usize| {
        let g = Grid1D::new(n, 13.6, UnitMode::Millimeters).unwrap();
        let f = apply_obstruction(&make_gaussian(g, 0.85, f64::INFINITY, 0.0).unwrap(), 0.5).unwrap();
        let mk = marginals(&kr_conjugate(&f).unwrap());
        let mw = marginals(&direct_wigner(&f).unwrap());
        compare_real(&mw.momentum, &mk.momentum).rel_l2
    };
    let (coarse, fine, finest) = (err(512), err(1024), err(4096));
    assert!(fine < coarse / 3.0 && finest < fine / 10.0, "{coarse:e} {fine:e} {finest:e}");
    assert!(finest < 1e-5);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let f = apply_obstruction(&beam(512, 1.0, 20.0, 0.2), 0.3).unwrap();
    let cfg = LOConfig::lab(UnitMode::Dimensionless).with_ratio(1.0, 4.0);
    let scan = ScanConfig::symmetric(3.0, 9, 3.0, 9);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let krc = kr_conjugate(&f).unwrap();
            (
                wigner_from_kr(&krc).unwrap(),
                characteristic_from_kr(&krc).unwrap(),
                ideal_scan(&f, &cfg, &scan).unwrap(),
            )
        })
    };
    let (a, b) = (run(1), run(4));
    assert!(bitwise_eq(&a.0, &b.0));
    assert!(bitwise_eq(&a.1, &b.1));
    assert!(bitwise_eq(&a.2, &b.2));
}
