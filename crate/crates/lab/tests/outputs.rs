use rehearsal_lab::metrics::{steps_nondecreasing, write_csv};
use rehearsal_lab::{emit_csv, emit_svg, format_g9, Chart, MetricsRow, RetentionMatrix, Series};
use tempfile::TempDir;

#[test]
fn nine_significant_digits() {
    // Expected strings from C printf("%.9g").
    let cases = [
        (1.0 / 3.0, "0.333333333"),
        (2.0 / 3.0, "0.666666667"),
        (-1.0 / 3.0, "-0.333333333"),
        (123456789.0, "123456789"),
        (1234567890.0, "1.23456789e+09"),
        (0.0001, "0.0001"),
        (1.234567891e-05, "1.23456789e-05"),
        (1e-5, "1e-05"),
        (100.0, "100"),
        (0.1 + 0.2, "0.3"),
        (1e22, "1e+22"),
        (-44.0, "-44"),
        (9.9999999999, "10"),
        (0.5, "0.5"),
        (2f64.powi(-30), "9.31322575e-10"),
        (0.0, "0"),
    ];
    for (v, want) in cases {
        assert_eq!(format_g9(v), want, "{v:e}");
    }
    assert_eq!(format_g9(f64::NAN), "nan");
    assert_eq!(format_g9(f64::NEG_INFINITY), "-inf");
}

fn rows() -> Vec<MetricsRow> {
    vec![
        MetricsRow::new("r:a", 0, 0, Some(0), 10, "eval_return", -8.0),
        MetricsRow::new("r:a", 0, 0, None, 10, "footprint", 3497.0),
        MetricsRow::new("r,b", 1, 1, Some(1), 20, "eval_return", 1.0 / 3.0),
    ]
}

#[test]
fn zero_rows_give_header_only() {
    let mut out = Vec::new();
    write_csv(&[], &mut out).unwrap();
    assert_eq!(out, b"run,seed,phase,task,step,metric,value\n");
}

#[test]
fn csv_layout() {
    let mut out = Vec::new();
    write_csv(&rows(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(
        text,
        "run,seed,phase,task,step,metric,value\n\
         r:a,0,0,0,10,eval_return,-8\n\
         r:a,0,0,,10,footprint,3497\n\
         \"r,b\",1,1,1,20,eval_return,0.333333333\n"
    );
}

#[test]
fn same_rows_twice_give_identical_files() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_csv(&rows(), &a).unwrap();
    emit_csv(&rows(), &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn unwritable_path_is_io_error() {
    let err = emit_csv(&rows(), std::path::Path::new("/nonexistent-dir/x.csv")).unwrap_err();
    assert!(matches!(err, rehearsal_lab::LabError::Io(_)), "{err:?}");
}

#[test]
fn step_order_check() {
    assert!(steps_nondecreasing(&rows()));
    let mut r = rows();
    r.push(MetricsRow::new("r:a", 0, 0, None, 5, "late", 0.0));
    assert!(!steps_nondecreasing(&r));
}

fn chart() -> Chart {
    Chart {
        title: "Forgetting <T=3>".into(),
        x_label: "memory capacity".into(),
        y_label: "average forgetting".into(),
        series: vec![
            Series {
                label: "fifo".into(),
                points: vec![(16.0, 44.0), (256.0, 30.0)],
            },
            Series {
                label: "flat".into(),
                points: vec![(16.0, 1.0), (256.0, 1.0)],
            },
        ],
    }
}

#[test]
fn svg_is_deterministic_and_labelled() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    emit_svg(&chart(), &a).unwrap();
    emit_svg(&chart(), &b).unwrap();
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("<svg"));
    assert!(text.trim_end().ends_with("</svg>"));
    assert!(text.contains(">memory capacity</text>"));
    assert!(text.contains(">average forgetting</text>"));
    assert!(text.contains("Forgetting &lt;T=3&gt;"));
    assert_eq!(text.matches("<circle").count(), 4);
    // Series are drawn in input order.
    assert!(text.find(">fifo<").unwrap() < text.find(">flat<").unwrap());
}

#[test]
fn empty_chart_still_renders() {
    let c = Chart {
        series: vec![],
        ..chart()
    };
    assert!(c.render().contains("</svg>"));
}

#[test]
fn single_task_has_no_forgetting() {
    let mut r = RetentionMatrix::new();
    r.push_phase(vec![-8.0]).unwrap();
    assert_eq!(r.average_forgetting(), 0.0);
    assert_eq!(RetentionMatrix::new().average_forgetting(), 0.0);
}

#[test]
fn forgetting_is_diagonal_minus_final_row() {
    let mut r = RetentionMatrix::new();
    r.push_phase(vec![-8.0]).unwrap();
    r.push_phase(vec![-50.0, -4.0]).unwrap();
    r.push_phase(vec![-20.0, -50.0, -6.0]).unwrap();
    // ((-8 - -20) + (-4 - -50)) / 2
    assert_eq!(r.average_forgetting(), 29.0);
    assert_eq!(r.get(1, 0), Some(-50.0));
    assert_eq!(r.get(0, 1), None);
}

#[test]
fn retention_rows_must_be_lower_triangular() {
    let mut r = RetentionMatrix::new();
    assert!(r.push_phase(vec![1.0, 2.0]).is_err());
    r.push_phase(vec![1.0]).unwrap();
    assert!(r.push_phase(vec![1.0]).is_err());
}
