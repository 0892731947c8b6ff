use egosenti::datamodel::{DatasetManifest, Event, ImageEntry, Stream};
use egosenti::segmentation::{
    apply_manifest_boundaries, boundary_f1, cosine_distance, segment_ranges, segment_stream,
    SegmentationParams,
};
use egosenti::Error;
use proptest::prelude::*;

fn params(tau: f64) -> SegmentationParams {
    SegmentationParams {
        merge_threshold: tau,
        min_event_size: 1,
    }
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("i{i}")).collect()
}

fn vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..40)
}

proptest! {
    #[test]
    fn segments_tile_the_stream(vs in vectors(), tau in 0.0f64..2.0) {
        let ranges = segment_ranges(&vs, &params(tau)).unwrap();
        prop_assert_eq!(ranges[0].start, 0);
        prop_assert_eq!(ranges.last().unwrap().end, vs.len());
        for w in ranges.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
        }
        prop_assert!(ranges.iter().all(|r| !r.is_empty()));
    }

    #[test]
    fn event_count_is_monotone_in_tau(vs in vectors(), mut taus in prop::collection::vec(0.0f64..2.0, 10)) {
        taus.sort_by(f64::total_cmp);
        let counts: Vec<usize> = taus
            .iter()
            .map(|&t| segment_ranges(&vs, &params(t)).unwrap().len())
            .collect();
        prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{:?}", counts);
    }

    #[test]
    fn max_threshold_yields_one_event(vs in vectors()) {
        prop_assert_eq!(segment_ranges(&vs, &params(2.0)).unwrap().len(), 1);
    }

    #[test]
    fn distance_is_symmetric_and_bounded(
        a in prop::collection::vec(-5.0f64..5.0, 4),
        b in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        let d = cosine_distance(&a, &b);
        prop_assert!((0.0..=2.0).contains(&d));
        prop_assert!((d - cosine_distance(&b, &a)).abs() < 1e-12);
        if a.iter().any(|&x| x != 0.0) {
            prop_assert!(cosine_distance(&a, &a) < 1e-12);
        }
    }

    #[test]
    fn f1_of_a_segmentation_with_itself_is_one(vs in vectors(), tau in 0.0f64..2.0) {
        let events = segment_stream("s", &ids(vs.len()), &vs, &params(tau)).unwrap();
        prop_assert_eq!(boundary_f1(&events, &events, 0).unwrap(), 1.0);
    }
}

/// Piecewise-constant stream over orthogonal centroids: the planted
/// boundary is the only one.
#[test]
fn two_orthogonal_blocks_split_at_the_plant() {
    for split in 1..10 {
        let vs: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                if i < split {
                    vec![2.0, 0.0]
                } else {
                    vec![0.0, 0.5]
                }
            })
            .collect();
        for tau in [0.0, 0.5, 0.99] {
            let ranges = segment_ranges(&vs, &params(tau)).unwrap();
            assert_eq!(ranges, vec![0..split, split..10], "tau {tau}");
        }
        assert_eq!(segment_ranges(&vs, &params(1.0)).unwrap(), vec![0..10]);
    }
}

#[test]
fn merge_ties_resolve_to_the_earliest_pair() {
    // a b a: both neighbour pairs sit at distance 1; the first pair merges
    // first, then the merged centroid is closer to the last point.
    let vs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    assert_eq!(segment_ranges(&vs, &params(1.0)).unwrap(), vec![0..3]);
    assert_eq!(
        segment_ranges(&vs, &params(0.5)).unwrap(),
        vec![0..1, 1..2, 2..3]
    );
}

#[test]
fn short_segments_are_kept_for_later_filtering() {
    let vs: Vec<Vec<f64>> = (0..9)
        .map(|i| {
            if i < 3 {
                vec![1.0, 0.0]
            } else {
                vec![0.0, 1.0]
            }
        })
        .collect();
    let p = SegmentationParams {
        merge_threshold: 0.5,
        min_event_size: 6,
    };
    let events = segment_stream("day", &ids(9), &vs, &p).unwrap();
    assert_eq!(events.len(), 2);
    assert_eq!(events[0].event_id, "day-e0000");
    assert_eq!(events[1].image_ids, ids(9)[3..].to_vec());
}

#[test]
fn constant_stream_is_one_event() {
    let vs = vec![vec![0.3, -0.2, 0.9]; 15];
    for tau in [1e-9, 0.3, 1.0] {
        assert_eq!(segment_ranges(&vs, &params(tau)).unwrap(), vec![0..15]);
    }
}

#[test]
fn parameters_are_validated() {
    let vs = vec![vec![1.0]];
    for tau in [-0.1, 2.1, f64::NAN] {
        assert!(matches!(
            segment_ranges(&vs, &params(tau)),
            Err(Error::InvalidParameter(_))
        ));
    }
    let empty: Vec<Vec<f64>> = Vec::new();
    assert!(matches!(
        segment_ranges(&empty, &params(0.3)),
        Err(Error::EmptyStream)
    ));
}

fn manifest(events: Vec<(&str, std::ops::Range<usize>)>) -> DatasetManifest {
    let stream = Stream {
        stream_id: "s".into(),
        images: (0..12)
            .map(|i| ImageEntry {
                image_id: format!("i{i}"),
                timestamp: 10 * i as u64,
            })
            .collect(),
    };
    let events = events
        .into_iter()
        .map(|(id, r)| Event {
            event_id: id.into(),
            stream_id: "s".into(),
            image_ids: r.map(|i| format!("i{i}")).collect(),
            label: None,
        })
        .collect();
    DatasetManifest::new(vec![stream], events)
}

#[test]
fn manifest_boundaries_pass_through_in_order() {
    let m = manifest(vec![("a", 0..6), ("b", 6..12)]);
    let events = apply_manifest_boundaries(&m).unwrap();
    assert_eq!(events.len(), 2);
    assert_eq!(events[0].event_id, "a");
}

#[test]
fn out_of_order_manifest_events_are_rejected() {
    let m = manifest(vec![("b", 6..12), ("a", 0..6)]);
    assert!(matches!(
        apply_manifest_boundaries(&m),
        Err(Error::NonContiguous(_))
    ));
    assert!(matches!(
        apply_manifest_boundaries(&manifest(vec![])),
        Err(Error::NoBoundaries)
    ));
}

#[test]
fn f1_with_slack() {
    let m = manifest(vec![("a", 0..6), ("b", 6..12)]);
    let truth = m.events.clone();
    let shifted = manifest(vec![("a", 0..5), ("b", 5..12)]).events;
    assert_eq!(boundary_f1(&shifted, &truth, 0).unwrap(), 0.0);
    assert_eq!(boundary_f1(&shifted, &truth, 1).unwrap(), 1.0);
    let extra = manifest(vec![("a", 0..3), ("b", 3..6), ("c", 6..12)]).events;
    // precision 1/2, recall 1
    assert!((boundary_f1(&extra, &truth, 0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
}
