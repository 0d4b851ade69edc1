//! Property tests over randomly drawn parameter vectors and data.

use proptest::prelude::*;

use vesfit_core::data_io::{generate, ingest, write_csv, ColumnMap, SynthConfig};
use vesfit_core::production::{
    eval_ces, eval_ves, eval_ves_intensive, factor_prices, hl_to_ves, ves_to_hl, CesParams,
    VesParams,
};

fn ves_params() -> impl Strategy<Value = VesParams> {
    (
        0.05f64..20.0,  // efficiency
        0.02f64..0.98,  // distribution
        prop_oneof![0.05f64..3.0, -0.9f64..-0.05], // substitution, both signs
        0.0f64..4.0,    // intensity
    )
        .prop_map(|(a, d, r, m)| VesParams::new(a, d, r, m).unwrap())
}

/// Parameter vectors inside the invertible region s/rho > 0.
fn invertible_params() -> impl Strategy<Value = VesParams> {
    (0.05f64..20.0, 0.02f64..0.98, 0.1f64..3.0, 0.0f64..0.95).prop_map(|(a, d, r, frac)| {
        let mu = frac * r / (1.0 + r);
        VesParams::new(a, d, r, mu).unwrap()
    })
}

proptest! {
    #[test]
    fn homogeneous_of_degree_one(p in ves_params(), k in 0.1f64..10.0, l in 0.1f64..10.0) {
        let base = eval_ves(&p, k, l).unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let scaled = eval_ves(&p, lambda * k, lambda * l).unwrap();
            prop_assert!(((scaled - lambda * base) / (lambda * base)).abs() <= 1e-12);
        }
    }

    #[test]
    fn ces_is_the_zero_intensity_case(
        a in 0.1f64..10.0,
        d in 0.05f64..0.95,
        r in 0.05f64..3.0,
        k in 0.1f64..10.0,
        l in 0.1f64..10.0,
    ) {
        let v = VesParams::new(a, d, r, 0.0).unwrap();
        let c = CesParams::new(a, d, r).unwrap();
        let lhs = eval_ves(&v, k, l).unwrap();
        let rhs = eval_ces(&c, k, l).unwrap();
        prop_assert!(((lhs - rhs) / rhs).abs() <= 1e-12);
    }

    #[test]
    fn output_exhausts_factor_payments(p in ves_params(), x in 0.05f64..20.0) {
        let y = eval_ves_intensive(&p, x).unwrap();
        let fp = factor_prices(&p, x).unwrap();
        prop_assert!(((fp.wage + fp.rental * x - y) / y).abs() <= 1e-10);
        // The rental is provably positive on the rho > 0 branch (and for
        // plain CES); with rho < 0 and mu > 0 output diverges at X -> 0 and
        // the capital margin can flip sign.
        if p.substitution() > 0.0 || p.intensity() == 0.0 {
            prop_assert!(fp.rental > 0.0);
        }
    }

    #[test]
    fn coefficient_forms_round_trip(p in invertible_params()) {
        let h = ves_to_hl(&p).unwrap();
        let back = hl_to_ves(&h).unwrap();
        prop_assert!(((back.efficiency() - p.efficiency()) / p.efficiency()).abs() <= 1e-10);
        prop_assert!((back.distribution() - p.distribution()).abs() <= 1e-10);
        prop_assert!((back.substitution() - p.substitution()).abs() <= 1e-10);
        prop_assert!((back.intensity() - p.intensity()).abs() <= 1e-10);
    }

    #[test]
    fn log_wage_relation_holds_on_model_data(p in invertible_params(), x in 0.1f64..10.0) {
        let h = ves_to_hl(&p).unwrap();
        let y = eval_ves_intensive(&p, x).unwrap();
        let w = factor_prices(&p, x).unwrap().wage;
        prop_assert!(w > 0.0);
        let resid = y.ln()
            - h.scale().ln()
            - h.wage_elasticity() * w.ln()
            - h.intensity_elasticity() * x.ln();
        prop_assert!(resid.abs() <= 1e-8);
    }

    #[test]
    fn generated_rows_survive_a_csv_round_trip(
        seed in any::<u64>(),
        n in 1usize..60,
        noise in 0.0f64..0.3,
        wages in any::<bool>(),
    ) {
        let mut cfg = SynthConfig::new(VesParams::new(1.3, 0.4, 0.9, 0.6).unwrap(), n, seed);
        cfg.noise_sd = noise;
        cfg.competitive_wages = wages;
        let records = generate(&cfg).unwrap().records;
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let (back, report) = ingest(&buf[..], &ColumnMap::default()).unwrap();
        prop_assert!(report.is_empty());
        prop_assert_eq!(back, records);
    }
}
