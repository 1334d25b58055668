use std::collections::HashMap;

use nucseg::evaluate::{evaluate, EvalReport};
use nucseg::voxel::Volume;
use proptest::prelude::*;

const SIZE: [usize; 3] = [6, 5, 4];
const N: usize = 6 * 5 * 4;

fn labels() -> impl Strategy<Value = Volume<u32>> {
    prop::collection::vec(prop_oneof![3 => Just(0u32), 1 => 1u32..6], N)
        .prop_map(|d| Volume::new(SIZE, [1.0; 3], d).unwrap())
}

fn counts(r: &EvalReport) -> [usize; 4] {
    [r.added.count, r.missed.count, r.merged.count, r.split.count]
}

/// True if some truth nucleus overlaps two predicted objects equally and
/// more than anything else.
fn has_tied_plurality(pred: &Volume<u32>, truth: &Volume<u32>) -> bool {
    let mut overlap: HashMap<u32, HashMap<u32, usize>> = HashMap::new();
    for (&t, &p) in truth.data().iter().zip(pred.data()) {
        if t != 0 {
            *overlap.entry(t).or_default().entry(p).or_default() += 1;
        }
    }
    overlap.values().any(|row| {
        let best = row.values().copied().max().unwrap_or(0);
        row.iter().filter(|&(&p, &n)| p != 0 && n == best).count() > 1
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        max_global_rejects: 1 << 20,
        ..ProptestConfig::default()
    })]

    #[test]
    fn self_comparison_is_error_free(t in labels()) {
        let r = evaluate(&t, &t).unwrap();
        prop_assert_eq!(r.total_errors(), 0);
        prop_assert_eq!(r.gt_count, r.predicted_count);
    }

    #[test]
    fn relabelling_predictions_changes_nothing(
        pred in labels(),
        truth in labels(),
        shift in 1u32..1000,
    ) {
        // Ties go to the smaller id, so a truth nucleus split evenly between
        // two objects is matched by id order; relabelling may change that.
        prop_assume!(!has_tied_plurality(&pred, &truth));
        // Reversing and shifting ids is a bijection that also flips id order.
        let relabelled = pred.map(|l| if l == 0 { 0 } else { 2000 - shift - l });
        let a = evaluate(&pred, &truth).unwrap();
        let b = evaluate(&relabelled, &truth).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn object_in_background_adds_one(
        pred in labels(),
        truth in labels(),
        at in 0usize..N,
    ) {
        let mut truth = truth;
        truth.data_mut()[at] = 0;
        let mut with_extra = pred.clone();
        with_extra.data_mut()[at] = 9999;
        // The voxel no longer belongs to its former object, which must keep others.
        let before = pred.data()[at];
        prop_assume!(before == 0 || pred.data().iter().filter(|&&l| l == before).count() > 1);
        let mut pred_cleared = pred.clone();
        pred_cleared.data_mut()[at] = 0;
        let a = evaluate(&pred_cleared, &truth).unwrap();
        let b = evaluate(&with_extra, &truth).unwrap();
        prop_assert_eq!(b.added.count, a.added.count + 1);
        prop_assert_eq!(b.predicted_count, a.predicted_count + 1);
        prop_assert_eq!(&counts(&b)[1..], &counts(&a)[1..]);
    }

    #[test]
    fn percentages_are_of_the_truth_count(pred in labels(), truth in labels()) {
        let r = evaluate(&pred, &truth).unwrap();
        for c in [r.added, r.missed, r.merged, r.split] {
            let want = if r.gt_count == 0 { 0.0 } else { 100.0 * c.count as f64 / r.gt_count as f64 };
            prop_assert!((c.percent - want).abs() < 1e-12);
        }
    }
}

#[test]
fn report_serializes_to_json() {
    let t = Volume::new([4, 1, 1], [1.0; 3], vec![1, 1, 2, 2]).unwrap();
    let p = Volume::new([4, 1, 1], [1.0; 3], vec![5, 5, 5, 5]).unwrap();
    let r = evaluate(&p, &t).unwrap();
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["merged"]["count"], 1);
    assert_eq!(json["merged"]["percent"], 50.0);
    let back: EvalReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, r);
}
