//! Mittag-Leffler evaluation against the high-precision series table in `data/`.

use proptest::prelude::*;
use subdiff::fracderiv::mittag_leffler;

fn table() -> Vec<(f64, f64, f64)> {
    include_str!("data/mittag_leffler_series.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

#[test]
fn agrees_with_series_on_unit_window() {
    let rows: Vec<_> = table().into_iter().filter(|r| (-5.0..=5.0).contains(&r.1)).collect();
    assert!(rows.len() > 500);
    for (alpha, z, reference) in rows {
        let got = mittag_leffler(alpha, z).unwrap();
        assert!((got - reference).abs() <= 1e-9 * reference.abs().max(1.0), "E_{alpha}({z}) = {got}, table {reference}");
    }
}

#[test]
fn agrees_with_series_far_out_on_negative_axis() {
    for (alpha, z, reference) in table().into_iter().filter(|r| r.1 < -5.0) {
        let got = mittag_leffler(alpha, z).unwrap();
        assert!((got - reference).abs() <= 1e-9, "E_{alpha}({z}) = {got}, table {reference}");
    }
}

proptest! {
    #[test]
    fn negative_axis_values_lie_in_unit_interval_and_decrease(alpha in 0.05f64..1.0, x in 0.0f64..200.0, dx in 1e-3f64..5.0) {
        let a = mittag_leffler(alpha, -x).unwrap();
        let b = mittag_leffler(alpha, -x - dx).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0, "{a}");
        prop_assert!(b <= a + 1e-12, "{b} > {a}");
    }
}
