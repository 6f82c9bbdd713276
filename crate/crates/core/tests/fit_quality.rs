use nova_core::fit::{extract_pwl, fit_direct, fit_mlp, MlpApproximator, TrainConfig};
use nova_core::func::{FunctionId, Interval};
use nova_core::pwl::error_metrics;
use proptest::prelude::*;

const SAMPLES: usize = 4096;

// max |error| of the direct fit on a 4096-point grid, recorded at first build
const DIRECT_BASELINES: [(FunctionId, usize, f64); 6] = [
    (FunctionId::Exp, 16, 0.0012957639842027247),
    (FunctionId::Gelu, 16, 0.0028755957125220083),
    (FunctionId::Sigmoid, 16, 0.0016960595585061577),
    (FunctionId::Exp, 8, 0.005474392663034851),
    (FunctionId::Gelu, 8, 0.009550648679685185),
    (FunctionId::Sigmoid, 8, 0.007349985072414966),
];

fn direct_error(f: FunctionId, b: usize) -> f64 {
    let d = f.default_domain();
    let p = fit_direct(f, b, d, SAMPLES).unwrap();
    assert!(p.len() <= b);
    error_metrics(&p, f, d, SAMPLES).unwrap().max_abs_error
}

#[test]
fn direct_fit_does_not_regress() {
    for (f, b, baseline) in DIRECT_BASELINES {
        let e = direct_error(f, b);
        assert!(e <= baseline * (1.0 + 1e-9), "{f} B={b}: {e} > {baseline}");
    }
}

#[test]
fn mlp_within_three_times_oracle() {
    for (f, b, _) in DIRECT_BASELINES {
        let d = f.default_domain();
        let oracle = direct_error(f, b);
        for seed in 0..3 {
            let mlp = fit_mlp(f, b, d, &TrainConfig { seed, ..TrainConfig::default() }).unwrap();
            let pwl = extract_pwl(&mlp, f, d).unwrap();
            assert!(pwl.len() <= b);
            assert_eq!(pwl.breakpoints()[0], d.lo);
            let e = error_metrics(&pwl, f, d, SAMPLES).unwrap().max_abs_error;
            assert!(e <= 3.0 * oracle, "{f} B={b} seed {seed}: {e} vs oracle {oracle}");
        }
    }
}

#[test]
fn more_breakpoints_never_worse() {
    for f in [FunctionId::Exp, FunctionId::Gelu, FunctionId::Sigmoid, FunctionId::Tanh] {
        assert!(direct_error(f, 16) <= direct_error(f, 8));
    }
}

fn mlp() -> impl Strategy<Value = MlpApproximator> {
    (1usize..=16)
        .prop_flat_map(|h| {
            (
                prop::collection::vec(prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], h),
                prop::collection::vec(-4.0f64..4.0, h),
                prop::collection::vec(-2.0f64..2.0, h),
                -1.0f64..1.0,
            )
        })
        .prop_map(|(w, b, v, c)| MlpApproximator::new(w, b, v, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn extraction_matches_network(m in mlp()) {
        let domain = Interval::new(-5.0, 5.0).unwrap();
        let pwl = extract_pwl(&m, FunctionId::Identity, domain).unwrap();
        prop_assert!(pwl.len() <= m.hidden_size());
        // below the first breakpoint the clamp rule applies instead
        let start = pwl.breakpoints()[0].max(domain.lo);
        for x in Interval::new(start, domain.hi.max(start + 1e-9)).unwrap().grid(10_000) {
            let (want, got) = (m.eval(x), pwl.eval(x));
            prop_assert!((want - got).abs() <= 1e-9 * (1.0 + want.abs()), "x={} {} vs {}", x, want, got);
        }
        prop_assert!(pwl.max_discontinuity() <= 1e-6);
    }
}
