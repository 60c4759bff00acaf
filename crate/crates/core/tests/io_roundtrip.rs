use microcavity::io::{PlotTable, RunConfig};
use proptest::prelude::*;

fn finite_or_nan() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
        1 => Just(f64::NAN),
    ]
}

proptest! {
    #[test]
    fn table_text_round_trips_byte_for_byte(
        rows in prop::collection::vec(prop::collection::vec(finite_or_nan(), 3), 0..20),
        note in "[a-z0-9 =._-]{0,30}",
    ) {
        let mut table = PlotTable::new(["a", "b", "c"]);
        table.set_meta("note", &note);
        for r in rows {
            table.push_row(r).unwrap();
        }
        let text = table.to_csv_string().unwrap();
        let back = PlotTable::parse(&text).unwrap();
        prop_assert_eq!(back.to_csv_string().unwrap(), text);
        for (x, y) in back.rows.iter().flatten().zip(table.rows.iter().flatten()) {
            prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
        }
    }

    #[test]
    fn config_json_round_trips(air_gap in 1e-6f64..20e-6, roughness in 0.0f64..1e-9) {
        let mut cfg = RunConfig::reference();
        cfg.air_gap_m = air_gap;
        cfg.rms_roughness_m = roughness;
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn malformed_rows_are_rejected() {
    assert!(PlotTable::parse("a,b\n1,2\n3\n").unwrap_err().is_input_error());
    assert!(PlotTable::parse("a,b\n1,x\n").unwrap_err().is_input_error());
}
