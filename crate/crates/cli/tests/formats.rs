use gravinv::io::{self, CompareRow, DataSet};
use gravinv_core::{IterationRecord, Mesh, StationSet, VisitCounts};

fn awkward_values(n: usize) -> Vec<f64> {
    let specials = [
        0.0,
        -0.0,
        1.0 / 3.0,
        -2.0 / 7.0,
        f64::MIN_POSITIVE,
        5e-324,
        f64::MAX,
        1e-300,
        0.1 + 0.2,
        123456789.123456789,
    ];
    (0..n)
        .map(|i| {
            let base = specials[i % specials.len()];
            let v = base * if i % 3 == 0 { 1.0 } else { 1.0 + i as f64 * 1e-9 };
            if v.is_finite() {
                v
            } else {
                base
            }
        })
        .collect()
}

fn same_bits(a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.to_bits(), y.to_bits(), "{x:e} vs {y:e}");
    }
}

#[test]
fn model_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = Mesh::new([3, 4, 5], [50.0, 40.0, 25.0], [10.0, -20.0, 0.0]).unwrap();
    let model = awkward_values(mesh.len());
    let path = tmp.path().join("model.csv");
    io::write_model(&path, &mesh, &model).unwrap();
    same_bits(&io::read_model(&path, &mesh).unwrap(), &model);
    let other = Mesh::new([2, 4, 5], [50.0, 40.0, 25.0], [0.0; 3]).unwrap();
    assert!(io::read_model(&path, &other).is_err());
}

#[test]
fn data_and_station_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let v = awkward_values(30);
    let points: Vec<[f64; 3]> = (0..10).map(|i| [v[i], v[i + 10], -v[i + 20].abs()]).collect();
    let stations = StationSet::new(points).unwrap();
    let data = DataSet {
        stations: stations.clone(),
        gz: v[..10].to_vec(),
        std: v[10..20].iter().map(|x| x.abs()).collect(),
    };
    let path = tmp.path().join("data.csv");
    io::write_data(&path, &data).unwrap();
    let back = io::read_data(&path).unwrap();
    same_bits(&back.gz, &data.gz);
    same_bits(&back.std, &data.std);
    for (a, b) in back.stations.points().iter().zip(stations.points()) {
        same_bits(a, b);
    }
    let path = tmp.path().join("stations.csv");
    io::write_stations(&path, &stations).unwrap();
    assert_eq!(io::read_stations(&path).unwrap(), stations);
}

#[test]
fn log_spectrum_compare_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let v = awkward_values(12);
    let records: Vec<IterationRecord> = (0..3)
        .map(|k| IterationRecord {
            iteration: k + 1,
            alpha: v[k],
            chi2: v[k + 3],
            relative_error: (k != 1).then_some(v[k + 6]),
            seconds: v[k + 9].abs(),
            sigma: vec![],
            visits: VisitCounts::default(),
            upre: None,
            model: None,
        })
        .collect();
    let path = tmp.path().join("log.csv");
    io::write_log(&path, &records).unwrap();
    let back = io::read_log(&path).unwrap();
    for (r, b) in records.iter().zip(&back) {
        assert_eq!(b.iter, r.iteration);
        assert_eq!(b.alpha.to_bits(), r.alpha.to_bits());
        assert_eq!(b.chi2.to_bits(), r.chi2.to_bits());
        assert_eq!(b.re.map(f64::to_bits), r.relative_error.map(f64::to_bits));
        assert_eq!(b.seconds.to_bits(), r.seconds.to_bits());
    }

    let path = tmp.path().join("spectrum.csv");
    io::write_spectrum(&path, &v).unwrap();
    same_bits(&io::read_spectrum(&path).unwrap(), &v);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("1,"));

    let rows = vec![
        CompareRow { solver: "rsvd".into(), subspace: 300, re: Some(v[2]), k: 9, seconds: 1.5 },
        CompareRow { solver: "lsqr".into(), subspace: 300, re: None, k: 50, seconds: v[9] },
    ];
    let path = tmp.path().join("compare.csv");
    io::write_compare(&path, &rows).unwrap();
    assert_eq!(io::read_compare(&path).unwrap(), rows);
}

#[test]
fn wrong_header_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("stations.csv");
    std::fs::write(&path, "x,y,z\n1,2,3\n").unwrap();
    assert!(io::read_stations(&path).is_err());
    std::fs::write(&path, "x_m,y_m,z_m\n1,oops,3\n").unwrap();
    let err = io::read_stations(&path).unwrap_err();
    assert!(format!("{err:#}").contains("oops"));
}

#[test]
fn seventeen_significant_digits() {
    assert_eq!(io::fmt(1.0 / 3.0), "3.3333333333333331e-1");
    assert_eq!(io::fmt(0.0), "0.0000000000000000e0");
}
