use std::path::Path;

use magstark::config::{parse_config, RunConfig};
use magstark::error::Error;
use magstark::io::{read_results, write_results};
use magstark::sweep::{RowStatus, SweepRow};
use proptest::prelude::*;

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_default_config_is_the_default() {
    let text = std::fs::read_to_string(configs().join("default.json")).unwrap();
    let cfg = parse_config(&text).unwrap();
    assert_eq!(cfg, RunConfig::default());
    let written: serde_json::Value = serde_json::to_value(&cfg).unwrap();
    let shipped: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(written, shipped);
}

#[test]
fn linearity_config_parses() {
    let text = std::fs::read_to_string(configs().join("b-linearity.json")).unwrap();
    let cfg = parse_config(&text).unwrap();
    assert_eq!(cfg.b_list, vec![0.75, 1.0, 1.25]);
    assert_eq!(cfg.fix_p, Some(2.0));
}

#[test]
fn serialised_config_round_trips() {
    let mut cfg = RunConfig {
        f_list: vec![0.3, 0.4],
        ..RunConfig::default()
    };
    cfg.field.translation = Some(0.25);
    cfg.checks.a2 = false;
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(parse_config(&text).unwrap(), cfg);
}

#[test]
fn wrong_types_are_parse_errors() {
    assert!(matches!(
        parse_config(r#"{"basis": {"nx": "thirty"}}"#),
        Err(Error::Parse { .. })
    ));
    assert!(matches!(
        parse_config(r#"{"b_policy": "sometimes"}"#),
        Err(Error::Parse { .. })
    ));
}

fn status() -> impl Strategy<Value = RowStatus> {
    prop_oneof![
        Just(RowStatus::Ok),
        Just(RowStatus::Unresolved),
        Just(RowStatus::NotFound)
    ]
}

fn float() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => any::<f64>().prop_filter("finite", |x| x.is_finite()),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NAN),
    ]
}

prop_compose! {
    fn row()(
        fl in proptest::collection::vec(float(), 11),
        nx in 1usize..60,
        ny in 1usize..60,
        status in status(),
    ) -> SweepRow {
        SweepRow {
            electric: fl[0],
            magnetic: fl[1],
            translation: fl[2],
            nx,
            ny,
            e_alpha: fl[3],
            re_e: fl[4],
            im_e: fl[5],
            gamma: fl[6],
            tau: fl[7],
            delta_b: fl[8],
            delta_n: fl[9],
            continuum_gap: fl[10],
            status,
        }
    }
}

fn bits(r: &SweepRow) -> [u64; 11] {
    [
        r.electric,
        r.magnetic,
        r.translation,
        r.e_alpha,
        r.re_e,
        r.im_e,
        r.gamma,
        r.tau,
        r.delta_b,
        r.delta_n,
        r.continuum_gap,
    ]
    .map(|x| {
        if x.is_nan() {
            f64::NAN.to_bits()
        } else {
            x.to_bits()
        }
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_lossless(rows in proptest::collection::vec(row(), 0..12)) {
        let mut buf = Vec::new();
        write_results(&rows, &mut buf).unwrap();
        let back = read_results(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(bits(a), bits(b));
            prop_assert_eq!((a.nx, a.ny, a.status), (b.nx, b.ny, b.status));
        }
    }
}
