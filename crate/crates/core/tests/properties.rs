mod common;

use hetnet_comp::controller::{comp_links, read_comp_trace, verify_cadence, write_comp_trace, DecisionSource, TraceRow};
use hetnet_comp::geometry::{build_scenario, drop_ues, ScenarioLabel};
use hetnet_comp::link::{Cqi, CqiTable, HARQ_BLER_TARGET};
use hetnet_comp::mac::{deliver, pf_schedule, StreamGrant, ThroughputLedger};
use hetnet_comp::metrics::percentile;
use hetnet_comp::propagation::{LinkTable, N_PRB};
use hetnet_comp::runner::ConfigFile;
use hetnet_comp::svm::{grid_search_cv, train, Dataset, HyperGrid, KernelFamily, KernelSpec, SmoParams, SvmModel};
use proptest::prelude::*;

fn cqi() -> impl Strategy<Value = Cqi> {
    (1i64..=15).prop_map(|c| Cqi::new(c).unwrap())
}

fn dataset(max: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec(((-3.0..3.0f64, -3.0..3.0f64), any::<bool>()), 2..max).prop_map(|rows| {
        let mut x: Vec<[f64; 2]> = rows.iter().map(|((a, b), _)| [*a, *b]).collect();
        let mut y: Vec<bool> = rows.iter().map(|(_, l)| *l).collect();
        y[0] = true;
        y[1] = false;
        // keep the two forced rows apart so the problem is not degenerate
        x[1][0] += 0.01;
        Dataset::new(x, y).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serving_cell_has_the_strongest_rsrp(seed in any::<u64>(), b in any::<bool>()) {
        let label = if b { ScenarioLabel::B } else { ScenarioLabel::A };
        let scenario = build_scenario(label, seed);
        prop_assert_eq!(scenario.cells.len(), if b { 32 } else { 6 });
        let ues = drop_ues(&scenario, 60, seed).unwrap();
        prop_assert_eq!(ues.len(), 60);
        let links = LinkTable::build(&scenario, &ues, seed);
        for ue in &ues {
            let best = links.get(ue.serving_cell, ue.id).rsrp_dbm;
            for cell in 0..scenario.cells.len() {
                prop_assert!(links.get(cell, ue.id).rsrp_dbm <= best);
            }
        }
    }

    #[test]
    fn bler_is_a_probability_decreasing_in_snr(a in -30.0..40.0f64, b in -30.0..40.0f64, c in cqi()) {
        let t = CqiTable::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (p_lo, p_hi) = (t.bler(lo, c), t.bler(hi, c));
        prop_assert!((0.0..=1.0).contains(&p_lo) && (0.0..=1.0).contains(&p_hi));
        prop_assert!(p_hi <= p_lo);
        if hi > lo && p_lo < 1.0 {
            prop_assert!(p_hi < p_lo);
        }
    }

    #[test]
    fn reported_cqi_meets_the_harq_target(snr in -6.0..40.0f64) {
        let t = CqiTable::default();
        let c = t.snr_to_cqi(snr);
        if snr >= t.threshold(c) {
            prop_assert!(t.bler(snr, c) <= HARQ_BLER_TARGET);
        }
    }

    #[test]
    fn pf_assigns_every_prb_to_a_candidate(
        rates in prop::collection::vec(0.0..40_000.0f64, 0..12),
        history in prop::collection::vec(0.0..40_000.0f64, 12),
        tti in 0usize..100,
    ) {
        let mut ledger = ThroughputLedger::new(12);
        for (ue, bits) in history.iter().enumerate() {
            ledger.record(ue, *bits);
        }
        ledger.end_tti(&history);
        let cands: Vec<(usize, f64)> = rates.iter().copied().enumerate().collect();
        let alloc = pf_schedule(tti, 0, &cands, &ledger);
        let grants = alloc.grants();
        let total: usize = grants.iter().map(|g| g.1).sum();
        prop_assert_eq!(total, if cands.is_empty() { 0 } else { N_PRB });
        prop_assert!(grants.iter().all(|(ue, _)| *ue < cands.len()));
    }

    #[test]
    fn delivered_bits_vanish_only_without_prbs_or_success(prbs in 0usize..=50, c in cqi(), bler in 0.0..=1.0f64) {
        let bits = deliver(&CqiTable::default(), &[StreamGrant { prbs, cqi: c, bler }]);
        prop_assert!(bits >= 0.0);
        prop_assert_eq!(bits == 0.0, prbs == 0 || bler == 1.0);
    }

    #[test]
    fn ledger_totals_never_decrease(bits in prop::collection::vec(0.0..1e5f64, 1..50)) {
        let mut ledger = ThroughputLedger::new(1);
        let mut last = 0.0;
        for b in bits {
            ledger.record(0, b);
            ledger.end_tti(&[b]);
            prop_assert!(ledger.cumulative_bits(0) >= last);
            last = ledger.cumulative_bits(0);
            prop_assert!(ledger.average_rate(0).is_some());
        }
    }

    #[test]
    fn edge_never_exceeds_peak(mut v in prop::collection::vec(0.0..100.0f64, 1..200)) {
        v.sort_by(f64::total_cmp);
        let edge = percentile(&v, 5.0).unwrap();
        let peak = percentile(&v, 95.0).unwrap();
        prop_assert!(v[0] <= edge && edge <= peak && peak <= v[v.len() - 1]);
    }

    #[test]
    fn comp_is_all_or_nothing(seed in any::<u64>(), enabled in any::<bool>()) {
        let scenario = build_scenario(ScenarioLabel::A, seed);
        let ues = drop_ues(&scenario, 60, seed).unwrap();
        let links = LinkTable::build(&scenario, &ues, seed);
        let streams: Vec<usize> = ues
            .iter()
            .map(|u| comp_links(&links, &scenario.cooperating_set, u.id, u.serving_cell, enabled).len())
            .collect();
        let want = if enabled { 2 } else { 1 };
        prop_assert!(streams.iter().all(|&s| s == want));
    }

    #[test]
    fn trace_roundtrip_keeps_cadence(t_comp in 1usize..6, states in prop::collection::vec(any::<bool>(), 1..30)) {
        let rows: Vec<TraceRow> = (0..states.len() * t_comp)
            .map(|tti| TraceRow {
                tti,
                state: states[tti / t_comp] as u8,
                source: DecisionSource::BaselineRule,
                err: None,
            })
            .collect();
        let mut buf = Vec::new();
        write_comp_trace(&mut buf, &rows).unwrap();
        let back = read_comp_trace(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &rows);
        prop_assert_eq!(verify_cadence(&back, t_comp).unwrap(), states.len());
    }

    #[test]
    fn config_parser_never_panics(text in ".{0,200}") {
        let _ = ConfigFile::parse(&text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trained_models_are_feasible(data in dataset(20), c in prop::sample::select(vec![0.1, 1.0, 10.0])) {
        let fit = train(&data, KernelSpec::gaussian(1.0), c, false, &SmoParams::default()).unwrap();
        prop_assert!(fit.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        let eq: f64 = fit.alpha.iter().zip(&data.y).map(|(a, &y)| if y { *a } else { -a }).sum();
        prop_assert!(eq.abs() <= 1e-6);
        prop_assert!(fit.kkt.satisfied());
    }

    #[test]
    fn prediction_ignores_training_row_order(data in dataset(16), rot in 0usize..16) {
        let n = data.len();
        let order: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let shuffled = data.subset(&order);
        let params = SmoParams { tol: 1e-10, max_iterations: 1_000_000 };
        let a = train(&data, KernelSpec::linear(1.0), 1.0, false, &params).unwrap();
        let b = train(&shuffled, KernelSpec::linear(1.0), 1.0, false, &params).unwrap();
        for x in &data.x {
            prop_assert!((a.model.decision_function(x) - b.model.decision_function(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn grid_search_is_reproducible(data in dataset(30), seed in any::<u64>()) {
        let grid = HyperGrid {
            c_values: vec![1.0, 10.0],
            scales: vec![0.5, 1.0],
            kernels: vec![KernelFamily::Linear, KernelFamily::Gaussian],
            normalize: vec![false, true],
        };
        let a = grid_search_cv(&data, 3, &grid, &mut common::rng(seed), &SmoParams::default());
        let b = grid_search_cv(&data, 3, &grid, &mut common::rng(seed), &SmoParams::default());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn model_json_roundtrips(data in dataset(12)) {
        let fit = train(&data, KernelSpec::polynomial(2, 1.0), 1.0, true, &SmoParams::default());
        if let Ok(fit) = fit {
            let back = SvmModel::from_json(&fit.model.to_json()).unwrap();
            prop_assert_eq!(back, fit.model);
        }
    }
}
