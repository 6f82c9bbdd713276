//! NOVA, both LUT baselines and direct quantized evaluation agree bit for
//! bit on random PWLs, formats, topologies and input batches.

use nova_core::fixed::FixedPointFormat;
use nova_core::func::{FunctionId, Interval};
use nova_core::lut::{simulate_lut, LutConfig};
use nova_core::noc::{simulate_approximation, NovaNocConfig};
use nova_core::pwl::PiecewiseLinearFn;
use proptest::prelude::*;

fn format() -> impl Strategy<Value = FixedPointFormat> {
    (4u32..=24, any::<bool>())
        .prop_flat_map(|(total, signed)| (Just(total), 0..total, Just(signed)))
        .prop_map(|(t, f, s)| FixedPointFormat::new(t, f, s).unwrap())
}

fn pwl() -> impl Strategy<Value = PiecewiseLinearFn> {
    (1usize..=16)
        .prop_flat_map(|b| {
            (
                prop::collection::btree_set(-4000i32..4000, b),
                prop::collection::vec(-4.0f64..4.0, b),
                prop::collection::vec(-4.0f64..4.0, b),
            )
        })
        .prop_map(|(ds, a, c)| {
            let d: Vec<f64> = ds.into_iter().map(|v| v as f64 / 500.0).collect();
            let domain = Interval::new(d[0], d[d.len() - 1] + 1.0).unwrap();
            PiecewiseLinearFn::new(FunctionId::Identity, domain, d, a, c).unwrap()
        })
}

#[derive(Debug)]
struct Topology {
    routers: usize,
    neurons: usize,
    lanes_per_cycle: usize,
    active: Vec<usize>,
}

fn topology() -> impl Strategy<Value = Topology> {
    (1usize..=10, 1usize..=12)
        .prop_flat_map(|(routers, neurons)| {
            (
                Just(routers),
                Just(neurons),
                1..=neurons,
                prop::collection::vec(0..=neurons, routers),
            )
        })
        .prop_map(|(routers, neurons, lanes_per_cycle, active)| Topology {
            routers,
            neurons,
            lanes_per_cycle,
            active,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn three_way_bit_equality(
        pwl in pwl(),
        fmt in format(),
        topo in topology(),
        seed in prop::collection::vec(-12.0f64..12.0, 120),
    ) {
        let inputs: Vec<Vec<f64>> = topo
            .active
            .iter()
            .enumerate()
            .map(|(r, &n)| (0..n).map(|l| seed[(r * 12 + l) % seed.len()]).collect())
            .collect();
        let cfg = NovaNocConfig {
            num_routers: topo.routers,
            neurons_per_router: topo.neurons,
            lanes_per_cycle: topo.lanes_per_cycle,
            ..NovaNocConfig::default()
        }
        .mapped_for(&pwl);
        let nova = simulate_approximation(&cfg, &pwl, &inputs, &fmt).unwrap();
        let bank_bytes = pwl.len() * 2 * fmt.word_bytes();
        let per_neuron = LutConfig { bank_bytes, ..LutConfig::per_neuron(topo.neurons, 1000.0) };
        let per_core = LutConfig { bank_bytes, ..LutConfig::per_core(topo.neurons, topo.lanes_per_cycle, 1000.0) };
        let a = simulate_lut(&per_neuron, &pwl, &inputs, &fmt).unwrap();
        let b = simulate_lut(&per_core, &pwl, &inputs, &fmt).unwrap();
        for (r, row) in inputs.iter().enumerate() {
            for (l, &x) in row.iter().enumerate() {
                let want = pwl.eval_quantized(x, &fmt);
                prop_assert_eq!(nova.outputs[r][l], want, "nova r{} l{} x{}", r, l, x);
                prop_assert_eq!(a.outputs[r][l], want);
                prop_assert_eq!(b.outputs[r][l], want);
            }
        }
        let lookups: usize = topo.active.iter().sum();
        prop_assert_eq!(a.total_reads, lookups);
        prop_assert_eq!(b.total_reads, lookups);
        // same issue rate, same pipelined finish
        prop_assert_eq!(b.base_cycles, nova.total_base_cycles);
    }
}
