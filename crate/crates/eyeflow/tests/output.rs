use eyeflow::output::{matrix_market, matrix_market_vector, write_probe_csv, PROBE_HEADER};
use eyeflow_core::linsolve::CsrMatrix;
use eyeflow_core::postproc::ProbeSample;
use proptest::prelude::*;

fn sample(s: f64, pressure: Option<f64>) -> ProbeSample {
    ProbeSample { s, x: 0.012 - s, y: 0.0, temperature: 309.5 - s, speed: 1e-5 * s, pressure_mmhg: pressure }
}

#[test]
fn probe_csv_parses_back() {
    let samples = [sample(0.0, None), sample(1e-3, Some(15.25)), sample(2.4e-2, Some(-0.1))];
    let mut buf = Vec::new();
    write_probe_csv(&samples, &mut buf).unwrap();
    let mut r = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(r.headers().unwrap(), &csv::StringRecord::from(PROBE_HEADER.to_vec()));
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for (row, s) in rows.iter().zip(&samples) {
        let f = |i: usize| row[i].parse::<f64>().unwrap();
        assert_eq!([f(0), f(1), f(2), f(3), f(4)], [s.s, s.x, s.y, s.temperature, s.speed]);
        assert_eq!(row[5].parse::<f64>().ok(), s.pressure_mmhg);
    }
    assert_eq!(&rows[0][5], "");
}

#[test]
fn empty_probe_is_header_only() {
    let mut buf = Vec::new();
    write_probe_csv(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "s,x,y,T_K,umag_mps,p_mmHg\n");
}

/// Parse a coordinate Matrix Market file into (rows, cols, triplets).
fn read_coordinate(text: &str) -> (usize, usize, Vec<(usize, usize, f64)>) {
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "%%MatrixMarket matrix coordinate real general");
    let mut lines = lines.skip_while(|l| l.starts_with('%'));
    let h: Vec<usize> = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    let t: Vec<(usize, usize, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].parse::<usize>().unwrap() - 1, f[1].parse::<usize>().unwrap() - 1, f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(t.len(), h[2]);
    (h[0], h[1], t)
}

#[test]
fn matrix_market_small() {
    let a = CsrMatrix::from_dense(2, 3, &[1.0, 0.0, -2.5, 0.0, 3.0, 0.0]);
    let text = matrix_market(&a, "two lines\nof comment");
    assert!(text.contains("% two lines\n% of comment\n2 3 "));
    let (m, n, t) = read_coordinate(&text);
    assert_eq!((m, n), (2, 3));
    assert_eq!(CsrMatrix::from_triplets(m, n, &t).to_dense(), a.to_dense());
    let v = matrix_market_vector(&[1.5, -0.0, 1e-300], "r");
    assert_eq!(v, "%%MatrixMarket matrix array real general\n% r\n3 1\n1.5e0\n-0e0\n1e-300\n");
}

proptest! {
    #[test]
    fn matrix_market_round_trip(
        m in 1usize..8, n in 1usize..8,
        entries in proptest::collection::vec((0usize..8, 0usize..8, -1e6f64..1e6), 0..40),
    ) {
        let t: Vec<(usize, usize, f64)> = entries.into_iter().filter(|e| e.0 < m && e.1 < n).collect();
        let a = CsrMatrix::from_triplets(m, n, &t);
        let (rm, rn, rt) = read_coordinate(&matrix_market(&a, "p"));
        prop_assert_eq!((rm, rn), (m, n));
        let b = CsrMatrix::from_triplets(rm, rn, &rt);
        prop_assert_eq!(b.to_dense(), a.to_dense());
        prop_assert_eq!(b.nnz(), a.nnz());
    }
}
