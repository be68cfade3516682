#![allow(clippy::excessive_precision)]

//! Reference values computed at 50 significant digits by
//! `tests/oracle/high_precision.py`, independent of this crate.

use linkdcm::diagnostics::{direct_elasticity, predict_levels};
use linkdcm::estimator::{FittedModel, ModelKind};
use linkdcm::ingest::{Attribute, FrameRow, ModelFrame, RowKey};
use linkdcm::mnl::{choice_probabilities, log_likelihood, probabilities, utilities_from, MnlParams, UtilityVector};
use linkdcm::ordered_logit::{ol_class_probs, ol_index_from, ol_log_likelihood, OlParams};
use linkdcm::Level;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
}

fn frame() -> ModelFrame<f64> {
    let rows = [
        ([0.25, 0.5, 0.75, 0.0], false, false, Level::Low),
        ([0.9, 0.1, 0.8, 1.0], true, false, Level::Medium),
        ([0.6, 0.3, 0.95, 0.3333333333333333], false, true, Level::High),
        ([0.05, 0.9, 0.2, 0.6666666666666666], false, false, Level::Low),
        ([0.7, 0.45, 0.55, 1.0], false, true, Level::Medium),
    ];
    ModelFrame::new(
        rows.iter()
            .enumerate()
            .map(|(i, &(attributes, prev_medium, prev_high, chosen))| FrameRow {
                key: RowKey { scenario: 1, link_number: 1, time: i as i64 + 1 },
                attributes,
                prev_medium,
                prev_high,
                chosen,
            })
            .collect(),
    )
    .unwrap()
}

const MNL_PROBS: [[f64; 3]; 5] = [
    [0.9587705999981069452261652, 0.04118820128478399339320665, 0.00004119871710906138062812381],
    [0.002710709173288196910438787, 0.9106970435482435986043392, 0.08659224727846820448522198],
    [0.0584097668977526868436963, 0.8279751296261636496215096, 0.1136151034760836635347941],
    [0.9980578196914666245419713, 0.00194218030428412028654546, 4.249255171483213735356367e-12],
    [0.02971211886688054046711192, 0.9702511982486070608288686, 0.00003668288451239870401947172],
];

#[test]
fn mnl_utilities_at_unit_attributes() {
    let v = utilities_from(&MnlParams::reference(), &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    for (got, want) in v.0.iter().zip([22.0, 31.68, 21.02]) {
        assert!(close(*got, want, 1e-12), "{got} vs {want}");
    }
}

#[test]
fn softmax_at_extreme_utilities() {
    let p = choice_probabilities(&UtilityVector([700.0, 0.0, -700.0])).unwrap();
    assert_eq!(p.0[0], 1.0);
    assert!(close(p.0[1], 9.859676543759770856705373e-305, 1e-12));
    // below the smallest subnormal
    assert_eq!(p.0[2], 0.0);
}

#[test]
fn mnl_probabilities_on_reference_frame() {
    let f = frame();
    for (row, want) in f.rows().iter().zip(MNL_PROBS) {
        let p = probabilities(&MnlParams::reference(), row).unwrap();
        for (g, w) in p.0.iter().zip(want) {
            assert!(close(*g, w, 1e-12), "{g} vs {w}");
        }
    }
}

#[test]
fn mnl_log_likelihood_on_reference_frame() {
    let ll = log_likelihood(&MnlParams::reference(), &frame()).unwrap();
    assert!(close(ll, -2.342731601916348226358348, 1e-12), "{ll}");
}

#[test]
fn ol_index_and_probabilities() {
    let u = ol_index_from(&OlParams::reference(), &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    assert!(close(u, 16.93, 1e-12));
    let p = ol_class_probs(1.0, 0.5, 2.0).unwrap();
    let want = [0.3775406687981454353610994, 0.3535179098318594438900598, 0.2689414213699951207488408];
    for (g, w) in p.0.iter().zip(want) {
        assert!(close(*g, w, 1e-12), "{g} vs {w}");
    }
}

#[test]
fn ol_log_likelihood_on_reference_frame() {
    let ll = ol_log_likelihood(&OlParams::reference(), &frame()).unwrap();
    assert!(close(ll, -13.49967847594425977356991, 1e-12), "{ll}");
}

#[test]
fn reference_predictions_match_oracle_argmax() {
    let model = FittedModel::fixed(ModelKind::Mnl, MnlParams::<f64>::reference().to_vec()).unwrap();
    let levels = predict_levels(&model, &frame()).unwrap();
    assert_eq!(levels, vec![Level::Low, Level::Medium, Level::Medium, Level::Low, Level::Medium]);
}

#[test]
fn medium_speed_elasticities() {
    let model = FittedModel::fixed(ModelKind::Mnl, MnlParams::<f64>::reference().to_vec()).unwrap();
    let e = direct_elasticity(&model, &frame(), Level::Medium, Attribute::LinkSpeed).unwrap();
    let want = [
        3.283930410599614822628267,
        1.101105453050156429208497,
        1.414044434472934800111191,
        0.6836696064915653776037164,
        0.28529100879585828665115,
    ];
    for (g, w) in e.values.iter().zip(want) {
        assert!(close(*g, w, 1e-12), "{g} vs {w}");
    }
    assert_eq!(e.coefficient, 13.7);
}

#[test]
fn single_precision_agrees_with_oracle() {
    let f = frame().cast::<f32>();
    let ll = log_likelihood(&MnlParams::<f32>::reference(), &f).unwrap();
    assert!(close(f64::from(ll), -2.342731601916348226358348, 1e-5), "{ll}");
}
