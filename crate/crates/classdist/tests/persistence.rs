use chrono::{DateTime, Utc};
use classdist::aggregate::{
    class_summaries, export_csv, format_g17, parse_csv, render_csv, CsvRow,
};
use classdist::simulate::{self, SimulationPlan};
use classdist::{Classroom, SessionConfig, Store, StoreOptions};
use classdist_core::{EstimateReport, Statistic};
use proptest::prelude::*;

fn config() -> SessionConfig {
    let mut c = SessionConfig::new("persist", "tok");
    c.sample_sizes = vec![5, 30, 100];
    c
}

#[test]
fn submissions_and_revisions_survive_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    let (id, csv, rev) = {
        let classroom = Classroom::new(Store::open(&path).unwrap());
        let id = classroom.create_session(config()).unwrap();
        let plan = SimulationPlan { students: 12, seed: 3, noise: 0.0 };
        simulate::run(&classroom, &id, &plan).unwrap();
        simulate::run(&classroom, &id, &plan).unwrap();
        (id.clone(), export_csv(&classroom, &id).unwrap(), classroom.revision(&id).unwrap())
    };
    let reopened = Classroom::new(Store::open(&path).unwrap());
    assert_eq!(export_csv(&reopened, &id).unwrap(), csv);
    assert_eq!(reopened.revision(&id).unwrap(), rev);
    reopened.store().compact().unwrap();
    drop(reopened);
    let compacted = Classroom::new(Store::open_read_only(&path).unwrap());
    assert_eq!(export_csv(&compacted, &id).unwrap(), csv);
    assert_eq!(parse_csv(&csv).unwrap().len(), 36);
}

#[test]
fn unsynced_writes_are_still_visible_after_drop() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    let options = StoreOptions { sync: false, ..StoreOptions::default() };
    let id = {
        let classroom = Classroom::new(Store::open_with(&path, options).unwrap());
        let id = classroom.create_session(config()).unwrap();
        let data = classroom.assign_dataset(&id, "x", 30).unwrap();
        let report = EstimateReport::from_data(&data.values).unwrap();
        assert!(classroom.submit(&id, "x", report).unwrap().accepted);
        id
    };
    let again = Classroom::new(Store::open(&path).unwrap());
    assert_eq!(again.submissions(&id, Some(30)).unwrap().len(), 1);
}

#[test]
fn summaries_share_bin_edges() {
    let classroom = Classroom::new(Store::in_memory());
    let id = classroom.create_session(config()).unwrap();
    simulate::run(&classroom, &id, &SimulationPlan { students: 200, seed: 1, noise: 0.0 }).unwrap();
    for estimator in [Statistic::Mean, Statistic::Median] {
        let all = class_summaries(&classroom, &id, estimator, None).unwrap();
        assert_eq!(all.len(), 3);
        for s in &all {
            assert_eq!(s.histogram.bin_edges, all[0].histogram.bin_edges);
            assert_eq!(s.histogram.counts.iter().sum::<u64>() as usize, 200);
            assert!((s.histogram.mass() - 1.0).abs() < 1e-12);
        }
        let spread: Vec<f64> = all.iter().map(|s| s.empirical_se.unwrap()).collect();
        assert!(spread.windows(2).all(|w| w[1] < w[0]), "{estimator}: {spread:?}");
    }
}

fn arb_row() -> impl Strategy<Value = CsvRow> {
    let finite = any::<f64>().prop_filter("finite", |x| x.is_finite());
    (
        "[a-z0-9 ,\"é-]{1,12}",
        2usize..10_000,
        finite.clone(),
        finite.clone().prop_map(f64::abs),
        finite,
        0i64..4_000_000_000,
        0u32..1_000_000_000,
    )
        .prop_map(|(student_id, n, mean, mean_error, median, secs, nanos)| CsvRow {
            student_id,
            n,
            mean,
            mean_error,
            median,
            submitted_at: DateTime::<Utc>::from_timestamp(secs, nanos).unwrap(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn g17_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = format_g17(x);
        prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{}", text);
    }

    #[test]
    fn csv_round_trips(rows in prop::collection::vec(arb_row(), 0..20)) {
        let text = render_csv(&rows);
        let parsed = parse_csv(&text).unwrap();
        prop_assert_eq!(parsed.len(), rows.len());
        for (a, b) in parsed.iter().zip(&rows) {
            prop_assert_eq!(&a.student_id, &b.student_id);
            prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
            prop_assert_eq!(a.mean_error.to_bits(), b.mean_error.to_bits());
            prop_assert_eq!(a.median.to_bits(), b.median.to_bits());
            prop_assert_eq!(a.submitted_at, b.submitted_at);
        }
        prop_assert_eq!(render_csv(&parsed), text);
    }
}
