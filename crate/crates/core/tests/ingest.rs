use std::fmt::Write as _;
use std::fs;

use chrono::NaiveDate;
use proptest::prelude::*;
use tvsobolev::error::Error;
use tvsobolev::ingest::{cumulative_to_new, load_matrix_dataset, parse_jhu, parse_jhu_reader, DateWindow};
use tvsobolev::tv_signal::LabeledSignal;
use tvsobolev::{JhuLayout, TvSignal};

const USA: &str = "\
UID,iso2,iso3,code3,FIPS,Admin2,Province_State,Country_Region,Lat,Long_,Combined_Key,1/22/20,1/23/20,1/24/20
84001001,US,USA,840,1001.0,Autauga,Alabama,US,32.53952745,-86.64408227,\"Autauga, Alabama, US\",0,2,2
84080001,US,USA,840,,Out of AL,Alabama,US,0.0,0.0,\"Out of AL, Alabama, US\",0,0,0
84001003,US,USA,840,1003.0,Baldwin,Alabama,US,30.72774991,-87.72207058,\"Baldwin, Alabama, US\",1,1,4
";

#[test]
fn two_row_file_round_trips_field_by_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("global.csv");
    fs::write(
        &path,
        "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20,1/24/20\n\
         ,Alpha,10.5,-20.25,0,1,3\n\
         Beta Province,Gamma,-33.75,151.125,7,7,12\n",
    )
    .unwrap();
    let t = parse_jhu(&path, JhuLayout::Global, None).unwrap();
    assert_eq!(t.layout, JhuLayout::Global);
    assert_eq!(t.rows.len(), 2);
    assert!(t.dropped.is_empty());
    assert_eq!(t.rows[0].label, "Alpha");
    assert_eq!((t.rows[0].latitude, t.rows[0].longitude), (10.5, -20.25));
    assert_eq!(t.rows[0].counts, vec![0.0, 1.0, 3.0]);
    assert_eq!(t.rows[1].label, "Beta Province, Gamma");
    assert_eq!((t.rows[1].latitude, t.rows[1].longitude), (-33.75, 151.125));
    assert_eq!(t.rows[1].counts, vec![7.0, 7.0, 12.0]);
    let d = |day| NaiveDate::from_ymd_opt(2020, 1, day).unwrap();
    assert_eq!(t.dates, vec![d(22), d(23), d(24)]);

    let ds = cumulative_to_new(&t, false).unwrap();
    assert_eq!(ds.signal.as_slice(), &[0.0, 7.0, 1.0, 0.0, 2.0, 5.0]);
    assert_eq!(ds.time_labels, vec!["2020-01-22", "2020-01-23", "2020-01-24"]);
    assert_eq!(ds.provenance.rows_read, 2);
}

#[test]
fn usa_layout_uses_combined_key_and_logs_exclusions() {
    let t = parse_jhu_reader(USA.as_bytes(), "usa.csv", JhuLayout::Usa, None).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert_eq!(t.rows[0].label, "Autauga, Alabama, US");
    assert_eq!(t.rows[1].longitude, -87.72207058);
    assert_eq!(t.dropped.len(), 1);
    assert_eq!(t.dropped[0].label, "Out of AL, Alabama, US");
    assert_eq!(t.dropped[0].line, 3);
    let ds = cumulative_to_new(&t, true).unwrap();
    assert_eq!(ds.provenance.dropped.len(), 1);
    assert_eq!(ds.provenance.rows_read, 3);
}

#[test]
fn differencing_examples() {
    let text = "Province/State,Country/Region,Lat,Long,1/1/20,1/2/20,1/3/20,1/4/20\n,A,1,1,0,1,3,3\n,B,2,2,5,4,4,4\n";
    let t = parse_jhu_reader(text.as_bytes(), "x", JhuLayout::Global, None).unwrap();
    let raw = cumulative_to_new(&t, false).unwrap();
    let row = |ds: &tvsobolev::Dataset, i| (0..4).map(|k| ds.signal.get(i, k)).collect::<Vec<f64>>();
    assert_eq!(row(&raw, 0), vec![0.0, 1.0, 2.0, 0.0]);
    assert_eq!(row(&raw, 1), vec![5.0, -1.0, 0.0, 0.0]);
    let clamped = cumulative_to_new(&t, true).unwrap();
    assert_eq!(row(&clamped, 1), vec![5.0, 0.0, 0.0, 0.0]);
    assert_eq!(clamped.provenance.clamped_cells, 1);
    assert!(clamped.provenance.differenced && clamped.provenance.clamp_negative);
}

#[test]
fn single_date_cannot_be_differenced() {
    let text = "Province/State,Country/Region,Lat,Long,1/1/20\n,A,1,1,0\n,B,2,2,1\n";
    let t = parse_jhu_reader(text.as_bytes(), "x", JhuLayout::Global, None).unwrap();
    assert!(cumulative_to_new(&t, true).is_err());
}

#[test]
fn non_numeric_count_names_the_cell() {
    let text = "Province/State,Country/Region,Lat,Long,1/1/20,1/2/20\n,A,1,1,0,1\n,B,2,2,x7,4\n";
    match parse_jhu_reader(text.as_bytes(), "bad.csv", JhuLayout::Global, None) {
        Err(Error::Cell { path, row, column, header, value }) => {
            assert_eq!((path.as_str(), row, column), ("bad.csv", 3, 4));
            assert_eq!(header, "1/1/20");
            assert_eq!(value, "x7");
        }
        other => panic!("expected a cell error, got {other:?}"),
    }
}

#[test]
fn malformed_header_reports_line() {
    let text = "Country,Lat,Long,1/1/20\nA,1,1,0\n";
    let err = parse_jhu_reader(text.as_bytes(), "h.csv", JhuLayout::Global, None).unwrap_err();
    assert!(err.to_string().contains("h.csv"), "{err}");
    let text = "Province/State,Country/Region,Lat,Long,1/1/20,1/3/20\n,A,1,1,0,0\n";
    let err = parse_jhu_reader(text.as_bytes(), "g.csv", JhuLayout::Global, None).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
}

#[test]
fn window_must_be_covered() {
    let text = "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20\n,A,1,1,0,0\n";
    let err = parse_jhu_reader(text.as_bytes(), "w", JhuLayout::Global, Some(DateWindow::early_pandemic()));
    assert!(err.is_err());
}

#[test]
fn matrix_dataset_loads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let values = dir.path().join("values.csv");
    let coords = dir.path().join("coords.csv");
    fs::write(&values, "node,d1,d2,d3\nn0,1.5,2,-3\nn1,0,1e-3,4.25\n").unwrap();
    fs::write(&coords, "label,latitude,longitude\nn0,10,20\nn1,-5.5,100.25\n").unwrap();
    let ds = load_matrix_dataset(&values, &coords).unwrap();
    assert_eq!(ds.signal, TvSignal::from_vec(2, 3, vec![1.5, 0.0, 2.0, 1e-3, -3.0, 4.25]).unwrap());
    assert_eq!(ds.nodes.coords(), &[(10.0, 20.0), (-5.5, 100.25)]);
    assert_eq!(ds.nodes.labels(), &["n0".to_string(), "n1".to_string()]);
    assert_eq!(ds.time_labels, vec!["d1", "d2", "d3"]);
    assert!(!ds.provenance.differenced);

    fs::write(&coords, "label,latitude,longitude\nn0,10,20\n").unwrap();
    assert!(matches!(load_matrix_dataset(&values, &coords), Err(Error::DimensionMismatch(_))));

    fs::write(&coords, "label,latitude,longitude\nn0,10,20\nn1,-5.5,100.25\n").unwrap();
    fs::write(&values, "node,d1,d2,d3\nn0,1.5,2,-3\nn1,0,abc,4.25\n").unwrap();
    let err = load_matrix_dataset(&values, &coords).unwrap_err();
    assert!(err.to_string().contains("abc"), "{err}");
}

#[test]
fn coords_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let values = dir.path().join("v.csv");
    let coords = dir.path().join("c.csv");
    fs::write(&values, "node,a,b\np,1,2\nq,3,4\n").unwrap();
    fs::write(&coords, "label,latitude,longitude\np,0.1,0.2\nq,0.30000000000000004,-179.99999999999997\n").unwrap();
    let ds = load_matrix_dataset(&values, &coords).unwrap();
    let mut buf = Vec::new();
    ds.write_coords_csv(&mut buf).unwrap();
    fs::write(&coords, buf).unwrap();
    assert_eq!(load_matrix_dataset(&values, &coords).unwrap().nodes.coords(), ds.nodes.coords());
}

fn jhu_text(counts: &[Vec<u32>]) -> String {
    let m = counts[0].len();
    let mut s = String::from("Province/State,Country/Region,Lat,Long");
    let start = NaiveDate::from_ymd_opt(2020, 1, 22).unwrap();
    for t in 0..m {
        let d = start + chrono::Duration::days(t as i64);
        write!(s, ",{}", d.format("%-m/%-d/%y")).unwrap();
    }
    s.push('\n');
    for (i, row) in counts.iter().enumerate() {
        write!(s, ",P{i},{},{}", 1 + i, 2 + i).unwrap();
        for c in row {
            write!(s, ",{c}").unwrap();
        }
        s.push('\n');
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn telescoping_sum(rows in prop::collection::vec(prop::collection::vec(0u32..100_000, 2..30), 1..8)) {
        let m = rows[0].len();
        let counts: Vec<Vec<u32>> = rows.iter().map(|r| r.iter().cycle().take(m).copied().collect()).collect();
        let text = jhu_text(&counts);
        let t = parse_jhu_reader(text.as_bytes(), "p", JhuLayout::Global, None).unwrap();
        if counts.len() < 2 {
            return Ok(());
        }
        let ds = cumulative_to_new(&t, false).unwrap();
        prop_assert!(ds.signal.is_finite());
        for (i, row) in counts.iter().enumerate() {
            let total: f64 = (0..m).map(|k| ds.signal.get(i, k)).sum();
            prop_assert_eq!(total, row[m - 1] as f64);
            prop_assert_eq!(ds.nodes.labels()[i].clone(), format!("P{i}"));
        }
    }

    #[test]
    fn clamping_never_leaves_negatives(rows in prop::collection::vec(prop::collection::vec(0u32..50, 3), 2..6)) {
        let t = parse_jhu_reader(jhu_text(&rows).as_bytes(), "p", JhuLayout::Global, None).unwrap();
        let ds = cumulative_to_new(&t, true).unwrap();
        prop_assert!(ds.signal.as_slice().iter().all(|&v| v >= 0.0));
        let raw = cumulative_to_new(&t, false).unwrap();
        let negatives = raw.signal.as_slice().iter().filter(|&&v| v < 0.0).count();
        prop_assert_eq!(ds.provenance.clamped_cells, negatives);
    }

    #[test]
    fn signal_csv_round_trips_bit_exact(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 6)) {
        let labeled = LabeledSignal {
            signal: TvSignal::from_vec(2, 3, values).unwrap(),
            node_labels: vec!["a".into(), "b, c".into()],
            time_labels: vec!["t0".into(), "t1".into(), "t2".into()],
        };
        let mut buf = Vec::new();
        labeled.write_csv(&mut buf).unwrap();
        let back = LabeledSignal::<f64>::read_csv(buf.as_slice(), "mem").unwrap();
        let bits = |s: &TvSignal<f64>| s.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.signal), bits(&labeled.signal));
        prop_assert_eq!(back.node_labels, labeled.node_labels);
        prop_assert_eq!(back.time_labels, labeled.time_labels);
    }
}
