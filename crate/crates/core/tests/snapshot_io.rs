mod common;

use coefid::data::io::{read_snapshots, snapshots_csv, write_snapshots};
use coefid::data::DerivativeEstimates;
use coefid::BoxDomain;

use common::{manufactured, smooth_1d, smooth_2d};

#[test]
fn binary_round_trip_is_lossless() {
    let cases = [
        manufactured(&BoxDomain::interval(-1.0, 2.0).unwrap(), 17, 1, &[0.0, 0.3, 0.7], smooth_1d),
        manufactured(&BoxDomain::square(-1.0, 1.0).unwrap(), 6, 5, &[0.1, 0.2], smooth_2d),
    ];
    for (s, d) in cases {
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &s, Some(&d)).unwrap();
        let (s2, d2) = read_snapshots(buf.as_slice()).unwrap();
        assert_eq!(s, s2);
        assert_eq!(d, d2);

        // Without derivatives only the state comes back.
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &s, None).unwrap();
        let (s3, d3) = read_snapshots(buf.as_slice()).unwrap();
        assert_eq!(s, s3);
        assert_eq!(d3, DerivativeEstimates::default());
    }
}

#[test]
fn corrupt_input_is_a_format_error() {
    let (s, d) = manufactured(&BoxDomain::interval(0.0, 1.0).unwrap(), 5, 1, &[0.0], smooth_1d);
    let mut buf = Vec::new();
    write_snapshots(&mut buf, &s, Some(&d)).unwrap();
    for cut in [0, 7, 20, buf.len() - 1] {
        let err = read_snapshots(&buf[..cut]).unwrap_err();
        assert_eq!(err.exit_code(), 5, "cut at {cut}");
    }
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(read_snapshots(bad.as_slice()).is_err());
}

#[test]
fn csv_has_one_row_per_observation_with_full_precision() {
    let (s, _) = manufactured(&BoxDomain::square(0.0, 1.0).unwrap(), 3, 2, &[0.0, 0.5], smooth_2d);
    let csv = snapshots_csv(&s);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,y,u,kind"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * (9 + s.boundary.len()));
    let first: Vec<&str> = rows[0].split(',').collect();
    let u: f64 = first[3].parse().unwrap();
    assert_eq!(u, s.interior_values[0][0]);
    assert_eq!(first[4], "interior");
}
