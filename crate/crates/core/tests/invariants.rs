use expdyn_core::boxcount::{box_count, box_count_shifted};
use expdyn_core::coding::ExternalAddress;
use expdyn_core::dynamics::eval_map;
use expdyn_core::induced::{branch_steps, induced_apply, negative_geometry};
use expdyn_core::invariant::{lambda_membership, sample_lambda_set, ThinSetSpec, Window};
use expdyn_core::math::PI;
use expdyn_core::rays::trace_ray;
use expdyn_core::ComplexValue;
use proptest::prelude::*;

fn strip() -> ThinSetSpec {
    ThinSetSpec::strip(0.0, PI).unwrap()
}

proptest! {
    #[test]
    fn membership_is_forward_invariant(x in -2.0f64..8.0, y in 0.0f64..PI, n in 2usize..8) {
        let z = ComplexValue::new(x, y);
        let here = lambda_membership(ComplexValue::ONE, &strip(), z, n).unwrap();
        if here.is_member() && here.undecided_at.is_none() {
            if let Ok(fz) = eval_map(ComplexValue::ONE, z) {
                let there = lambda_membership(ComplexValue::ONE, &strip(), fz, n - 1).unwrap();
                prop_assert!(there.is_member());
            }
        }
    }

    #[test]
    fn real_half_line_always_survives(x in 0.0f64..50.0, n in 1usize..30) {
        prop_assert!(lambda_membership(ComplexValue::ONE, &strip(), ComplexValue::real(x), n).unwrap().is_member());
    }
}

#[test]
fn box_slopes_are_stable_under_half_cell_shifts() {
    let scales: Vec<f64> = (2..=8).map(|k| 2f64.powi(-k)).collect();
    let segment: Vec<ComplexValue> = (0..10_000).map(|i| ComplexValue::new(i as f64 / 10_000.0, 0.3)).collect();
    let mut square = Vec::new();
    for i in 0..256 {
        for j in 0..256 {
            square.push(ComplexValue::new(i as f64 / 256.0, j as f64 / 256.0));
        }
    }
    let w = Window::new(20.0, 0.0, 40.0, PI).unwrap();
    let survivors = sample_lambda_set(ComplexValue::ONE, &strip(), w, 128, 128, 6).unwrap().survivors();
    let coarse: Vec<f64> = (-1..=4).map(|k| 2f64.powi(-k)).collect();
    for (pts, eps) in [(&segment, &scales), (&square, &scales), (&survivors, &coarse)] {
        let a = box_count(pts, eps).unwrap().slope;
        let b = box_count_shifted(pts, eps, 0.5).unwrap().slope;
        assert!((a - b).abs() < 0.1, "{a} vs {b}");
    }
}

#[test]
fn two_induced_steps_match_the_recorded_branches() {
    let g = negative_geometry(ComplexValue::ONE, 1.0, 3, 2, 40).unwrap().with_threshold(2).unwrap();
    for z in [ComplexValue::new(2.3, 1e-3), ComplexValue::new(2.9, 0.01), ComplexValue::new(2.1, 0.0)] {
        let (p1, n1) = induced_apply(&g, &strip(), z).unwrap();
        let w1 = p1.native.unwrap();
        let (p2, n2) = induced_apply(&g, &strip(), w1).unwrap();
        let (steps, image) = branch_steps(&g, &strip(), z, 2).unwrap();
        assert_eq!(steps.iter().map(|s| s.iterates()).collect::<Vec<_>>(), vec![n1, n2]);
        let w2 = p2.native.unwrap();
        assert!(image.dist(w2) <= 1e-9 * w2.norm().max(1.0), "{image:?} vs {w2:?}");
    }
}

#[test]
fn rays_move_right_under_the_map() {
    let ts: Vec<f64> = (0..=12).map(|i| 4.0 + 0.5 * i as f64).collect();
    for text in ["0...const", "1,-1...period", "2,0,-3...period"] {
        let s: ExternalAddress = text.parse().unwrap();
        let ray = trace_ray(ComplexValue::ONE, &s, &ts, 20, 1e-10).unwrap();
        for p in &ray.samples {
            let fz = eval_map(ComplexValue::ONE, p.point).unwrap();
            assert!(fz.re > p.point.re, "{text} at t={}", p.t);
        }
    }
}

#[test]
fn negative_bounds_shrink_with_level() {
    let delta = 0.5;
    let g = negative_geometry(ComplexValue::ONE, 1.0, 2, 2, 40).unwrap().with_threshold(10).unwrap();
    let b3 = g.ln_negative_bound(&strip(), 3, delta).unwrap();
    let b4 = g.ln_negative_bound(&strip(), 4, delta).unwrap();
    let ln_beta4 = g.balls.iter().find(|b| b.level == 4).unwrap().center.log_modulus.to_f64().unwrap();
    assert!(b4 <= b3 - delta / 8.0 * ln_beta4, "{b3} {b4}");
}
