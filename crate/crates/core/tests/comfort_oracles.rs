//! PMV against an independent transcription that iterates in normalised
//! Kelvin units, the clothing temperature against plain bisection, and the
//! PWA surrogate against brute-force region membership.

use dmpc_core::comfort::{
    fit_pwa, pmv_exact, solve_clothing_temperature, vapor_pressure, ComfortParams, PmvInputs, Rect, CLO,
};
use proptest::prelude::*;

/// Transcription of the PMV routine in the classic normalised form: the
/// clothing temperature is iterated as `t_cl/100` in Kelvin.
fn transcribed_pmv(ta: f64, tr: f64, p: &ComfortParams) -> f64 {
    let m = p.metabolic_rate;
    let mw = m - p.mechanical_work;
    let icl = p.clothing;
    let pa = p.humidity * 6.1094 * (17.625 * ta / (ta + 243.04)).exp() * 1e-3;
    let fcl = if icl <= 0.078 { 1.0 + 1.29 * icl } else { 1.05 + 0.645 * icl };
    let hcf = 12.1 * p.air_speed.sqrt();
    let taa = ta + 273.0;
    let tra = tr + 273.0;
    let p1 = icl * fcl;
    let p2 = p1 * 3.96;
    let p3 = p1 * 100.0;
    let p4 = p1 * taa;
    let p5 = 308.7 - 0.0275 * mw + p2 * (tra / 100.0).powi(4);
    let mut xn = (taa + (35.5 - ta) / (3.5 * (6.45 * icl + 0.1))) / 100.0;
    let mut xf = xn;
    let mut hc = hcf;
    for _ in 0..10_000 {
        xf = (xf + xn) / 2.0;
        let hcn = 2.38 * (100.0 * xf - taa).abs().powf(0.25);
        hc = hcf.max(hcn);
        xn = (p5 + p4 * hc - p2 * xf.powi(4)) / (100.0 + p3 * hc);
        if (xn - xf).abs() < 1e-16 {
            break;
        }
    }
    let tcl = 100.0 * xn - 273.0;
    let hl1 = 3.05 * (5.733 - 0.007 * mw - pa);
    let hl2 = 0.42 * (mw - 58.15);
    let hl3 = 0.0173 * m * (5.867 - pa);
    let hl4 = 0.0014 * m * (34.0 - ta);
    let hl5 = 3.96 * fcl * (xn.powi(4) - (tra / 100.0).powi(4));
    let hl6 = fcl * hc * (tcl - ta);
    let ts = 0.303 * (-0.036 * m).exp() + 0.028;
    ts * (mw - hl1 - hl2 - hl3 - hl4 - hl5 - hl6)
}

fn bisect_tcl(ta: f64, tr: f64, p: &ComfortParams) -> f64 {
    let fcl = if p.clothing <= 0.078 { 1.0 + 1.29 * p.clothing } else { 1.05 + 0.645 * p.clothing };
    let g = |t: f64| {
        let hc = (2.38 * (t - ta).abs().powf(0.25)).max(12.1 * p.air_speed.sqrt());
        t - (35.7 - 0.0275 * (p.metabolic_rate - p.mechanical_work)
            - p.clothing
                * (3.96e-8 * fcl * ((t + 273.0).powi(4) - (tr + 273.0).powi(4)) + fcl * hc * (t - ta)))
    };
    let (mut lo, mut hi) = (-50.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn vapor_pressure_keeps_the_printed_scale() {
    let want = 0.5 * 6.1094 * (17.625f64 * 25.0 / 268.04).exp() * 1e-3;
    assert!((vapor_pressure(25.0, 0.5) - want).abs() <= 1e-15 * want);
}

#[test]
fn pmv_matches_transcription_on_reference_points() {
    for p in [ComfortParams::summer(), ComfortParams::winter()] {
        for (ta, tr) in [(22.0, 22.0), (26.0, 26.0), (30.0, 24.0), (24.0, 30.0), (28.5, 29.5)] {
            let got = pmv_exact(&PmvInputs::new(ta, tr), &p).unwrap();
            let want = transcribed_pmv(ta, tr, &p);
            assert!((got - want).abs() < 1e-10, "({ta},{tr}) {got} vs {want}");
        }
    }
}

#[test]
fn heavy_clothing_still_converges() {
    // Large insulation makes the damped iteration expansive; the bisection
    // fallback must take over.
    let p = ComfortParams { clothing: 2.0 * CLO, metabolic_rate: 80.0, ..ComfortParams::summer() };
    let s = solve_clothing_temperature(&PmvInputs::new(18.0, 16.0), &p).unwrap();
    assert!(s.residual < 1e-8);
    assert!((s.t_cl - bisect_tcl(18.0, 16.0, &p)).abs() < 1e-8);
}

#[test]
fn summer_fit_meets_accuracy_targets() {
    let m = fit_pwa(&ComfortParams::summer(), Rect::square(22.0, 30.0), (26.0, 26.0)).unwrap();
    assert!(m.report.mae <= 0.02, "mae {}", m.report.mae);
    assert!(m.report.max_abs_err <= 0.1, "max {}", m.report.max_abs_err);
    assert_eq!(m.report.grid_size, 400);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn clothing_temperature_agrees_with_bisection(
        ta in 10.0f64..40.0,
        tr in 10.0f64..40.0,
        clo in 0.0f64..1.5,
        met in 46.0f64..120.0,
        v in 0.05f64..1.0,
    ) {
        let p = ComfortParams { clothing: clo * CLO, metabolic_rate: met, air_speed: v, ..ComfortParams::summer() };
        let s = solve_clothing_temperature(&PmvInputs::new(ta, tr), &p).unwrap();
        prop_assert!(s.residual < 1e-8);
        prop_assert!((s.t_cl - bisect_tcl(ta, tr, &p)).abs() < 1e-8);
    }

    #[test]
    fn pmv_matches_transcription(ta in 15.0f64..35.0, tr in 15.0f64..35.0, winter in any::<bool>()) {
        let p = if winter { ComfortParams::winter() } else { ComfortParams::summer() };
        let got = pmv_exact(&PmvInputs::new(ta, tr), &p).unwrap();
        prop_assert!((got - transcribed_pmv(ta, tr, &p)).abs() < 1e-10);
    }

    #[test]
    fn pmv_increases_with_temperature(ta in 15.0f64..35.0, tr in 15.0f64..35.0, d in 0.01f64..2.0) {
        let p = ComfortParams::summer();
        let base = pmv_exact(&PmvInputs::new(ta, tr), &p).unwrap();
        prop_assert!(pmv_exact(&PmvInputs::new(ta + d, tr), &p).unwrap() > base);
        prop_assert!(pmv_exact(&PmvInputs::new(ta, tr + d), &p).unwrap() > base);
    }

    #[test]
    fn region_lookup_matches_brute_force(ta in 0.0f64..50.0, tr in 0.0f64..50.0) {
        let m = fit_pwa(&ComfortParams::summer(), Rect::square(22.0, 30.0), (26.0, 26.0)).unwrap();
        let r = m.region_of(ta, tr);
        let hits: Vec<usize> = (0..4).filter(|&i| m.region_extent(i).contains(ta, tr)).collect();
        prop_assert!(hits.contains(&r));
        prop_assert_eq!(r, hits[0]);
        prop_assert_eq!(m.evaluate(&PmvInputs::new(ta, tr)).extrapolated, !m.domain.contains(ta, tr));
    }
}
