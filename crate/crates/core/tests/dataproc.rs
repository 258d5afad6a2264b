use proptest::prelude::*;

use foamfit::dataproc::csv::{load_dataset, parse_curve_csv, write_curve_csv, write_dataset};
use foamfit::dataproc::{cycle_average, reduce, AveragingPolicy, Geometry, RawRecording, Trace};
use foamfit::{builtin_dataset, Curve, LoadingMode};

fn monotone_curve() -> impl Strategy<Value = Curve> {
    proptest::collection::vec((1e-3f64..1.0, -1e3f64..1e3), 1..40).prop_map(|steps| {
        let mut x = 0.0;
        let (xs, ys) = steps
            .into_iter()
            .map(|(dx, y)| {
                x += dx;
                (x, y)
            })
            .unzip();
        Curve::new(xs, ys).unwrap()
    })
}

proptest! {
    #[test]
    fn curve_csv_is_lossless(c in monotone_curve()) {
        prop_assert_eq!(parse_curve_csv(&write_curve_csv(&c)).unwrap(), c);
    }

    #[test]
    fn averaging_identical_cycles_gives_the_cycle(c in monotone_curve()) {
        prop_assume!(c.len() >= 2);
        let avg = cycle_average(&[c.clone(), c.clone()], AveragingPolicy::Shear).unwrap();
        let shift = c.interpolate(avg.x[0].max(0.0).min(*c.x.last().unwrap())).unwrap();
        for (x, y) in avg.x.iter().zip(&avg.y) {
            let want = c.interpolate(*x).unwrap() - shift;
            prop_assert!((y - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn segments_split_at_reversals(n in 2usize..20, cycles in 1usize..4) {
        let mut x = Vec::new();
        for _ in 0..cycles {
            x.extend((0..n).map(|i| i as f64));
            x.extend((1..n - 1).rev().map(|i| i as f64));
        }
        x.push(0.0);
        let y = x.clone();
        let segs = Trace { x, y }.segments().unwrap();
        prop_assert_eq!(segs.len(), 2 * cycles);
        prop_assert!(segs.iter().all(|s| s.len() == n));
    }
}

#[test]
fn builtin_datasets_round_trip_through_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["leap", "turbo"] {
        let d = builtin_dataset(name).unwrap();
        let sub = dir.path().join(name);
        write_dataset(&d, &sub).unwrap();
        assert_eq!(load_dataset(sub.to_str().unwrap()).unwrap(), d);
        assert_eq!(
            load_dataset(sub.join("dataset.txt").to_str().unwrap()).unwrap(),
            d
        );
    }
}

#[test]
fn shear_reduction_by_hand() {
    let g = Geometry::Shear {
        radius: 10.0,
        height: 5.0,
    };
    let rec = RawRecording::new(g, vec![0.0, 1.0], vec![0.0, 100.0], vec![0.0, 0.05]).unwrap();
    let t = reduce(&rec).unwrap();
    assert_eq!(t.x, vec![0.0, 0.1]);
    // 2 * 100 N mm / (pi * 1000 mm^3) in kPa
    let want = 200.0 / (std::f64::consts::PI * 1000.0) * 1000.0;
    assert!((t.y[1] - want).abs() < 1e-12);
}

#[test]
fn compression_reduction_uses_current_height() {
    let g = Geometry::Compression {
        area: 100.0,
        height: 20.0,
    };
    let rec = RawRecording::new(g, vec![0.0, 1.0], vec![0.0, -50.0], vec![20.0, 15.0]).unwrap();
    let t = reduce(&rec).unwrap();
    assert_eq!(t.x, vec![1.0, 0.75]);
    assert_eq!(t.y, vec![0.0, -500.0]);
    assert_eq!(rec.mode(), LoadingMode::UniaxialCompression);
}
