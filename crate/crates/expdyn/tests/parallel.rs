use expdyn::formats::{render_bytes, Palette, Reading};
use expdyn::parallel::{sample_lambda_set_with, trace_ray_with};
use expdyn_core::coding::ExternalAddress;
use expdyn_core::invariant::{sample_lambda_set, ThinSetSpec, Window};
use expdyn_core::rays::trace_ray;
use expdyn_core::ComplexValue;
use std::f64::consts::PI;

fn strip() -> ThinSetSpec {
    ThinSetSpec::strip(0.0, PI).unwrap()
}

#[test]
fn field_does_not_depend_on_workers() {
    let w = Window::new(-1.0, -0.5, 5.0, 3.5).unwrap();
    let serial = sample_lambda_set(ComplexValue::ONE, &strip(), w, 48, 40, 7).unwrap();
    for threads in [1, 3, 8] {
        let par = sample_lambda_set_with(threads, ComplexValue::ONE, &strip(), w, 48, 40, 7).unwrap();
        assert_eq!(par, serial, "{threads} workers");
    }
}

#[test]
fn ray_does_not_depend_on_workers() {
    let s: ExternalAddress = "1,-2,0...period".parse().unwrap();
    let ts: Vec<f64> = (0..30).map(|i| 2.0 + 0.25 * i as f64).collect();
    let serial = trace_ray(ComplexValue::ONE, &s, &ts, 20, 1e-10).unwrap();
    for threads in [1, 4] {
        let par = trace_ray_with(threads, ComplexValue::ONE, &s, &ts, 20, 1e-10).unwrap();
        assert_eq!(par, serial);
    }
}

#[test]
fn parallel_ray_rejects_what_serial_rejects() {
    let s = ExternalAddress::constant(0);
    assert!(trace_ray_with(2, ComplexValue::ONE, &s, &[3.0, 2.0], 10, 1e-10).is_err());
    assert!(trace_ray_with(2, ComplexValue::ONE, &s, &[-1.0, 2.0], 10, 1e-10).is_err());
    assert!(trace_ray_with(2, ComplexValue::ONE, &s, &[1.0, 2.0], 0, 1e-10).is_err());
}

#[test]
fn real_axis_survives_in_the_rendering() {
    let w = Window::new(0.0, 0.0, 4.0, PI).unwrap();
    let field = sample_lambda_set_with(2, ComplexValue::ONE, &strip(), w, 33, 17, 8).unwrap();
    let top = field.survivor_value();
    assert!(field.conservative[..field.nx].iter().all(|d| *d == top));
    let image = render_bytes(&field, Reading::Conservative, Palette::Gray);
    let header = format!("P5\n{} {}\n255\n", field.nx, field.ny);
    let bottom_row = &image[header.len()..header.len() + field.nx];
    assert!(bottom_row.iter().all(|b| *b == 255));
    assert_eq!(image, render_bytes(&field, Reading::Conservative, Palette::Gray));
}
