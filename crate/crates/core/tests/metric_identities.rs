use d2d_core::analytic::IncidentPowerDistribution;
use d2d_core::metrics::{
    analytic_metrics, coverage_backscatter, energy_outage_mode, energy_outage_protocol,
    prob_backscatter_ptp, prob_backscatter_stp, throughput_htt, AnalyticEvaluator, Mode,
};
use d2d_core::{validate, NetworkParams, Protocol, Repulsion, ValidatedParams};

fn params_with(edit: impl FnOnce(&mut NetworkParams)) -> ValidatedParams {
    let mut p = NetworkParams::table_one();
    edit(&mut p);
    validate(p).unwrap()
}

#[test]
fn outage_forms_agree_with_assembled_metrics() {
    let v = params_with(|_| {});
    let dist = IncidentPowerDistribution::new(&v);
    let eval = AnalyticEvaluator::new(&v, &dist);
    for protocol in Protocol::ALL {
        let m = eval.protocol_metrics(protocol).unwrap();
        let literal = energy_outage_protocol(&dist, &v, protocol).unwrap();
        assert!((m.o - literal).abs() < 1e-12, "{protocol}: {} vs {literal}", m.o);
        assert!(m.converged(), "{protocol}: {:?}", m.issues);
    }
    let o_h = energy_outage_mode(&dist, &v, Mode::Htt).unwrap();
    assert_eq!(prob_backscatter_ptp(&dist, &v).unwrap(), o_h);
    assert_eq!(
        prob_backscatter_stp(&dist, &v).unwrap(),
        coverage_backscatter(&dist, &v).unwrap()
    );
}

#[test]
fn pure_modes_reduce_to_single_mode_quantities() {
    let v = params_with(|_| {});
    let dist = IncidentPowerDistribution::new(&v);
    let bs = analytic_metrics(&v, &dist, Protocol::PureBackscatter).unwrap();
    let htt = analytic_metrics(&v, &dist, Protocol::PureHtt).unwrap();
    assert_eq!((bs.b, htt.b), (1.0, 0.0));
    assert_eq!(bs.o, energy_outage_mode(&dist, &v, Mode::Backscatter).unwrap());
    assert_eq!(htt.o, energy_outage_mode(&dist, &v, Mode::Htt).unwrap());
    assert_eq!(bs.c, coverage_backscatter(&dist, &v).unwrap());
    assert!((bs.t - v.backscatter_rate * bs.c).abs() < 1e-9);
    assert!((htt.t - throughput_htt(&dist, &v).unwrap()).abs() < 1e-6 * htt.t);
    assert!(bs.o < htt.o);
}

#[test]
fn outage_ignores_the_interferer_field() {
    let reference: Vec<f64> = {
        let v = params_with(|p| p.set("zeta_B", 0.0, false).unwrap());
        let dist = IncidentPowerDistribution::new(&v);
        [Protocol::Ptp, Protocol::PureBackscatter, Protocol::PureHtt]
            .iter()
            .map(|&pr| energy_outage_protocol(&dist, &v, pr).unwrap())
            .collect()
    };
    for factor in [1.0, 4.0] {
        let v = params_with(|p| p.set("zeta_B", factor * p.density_a, false).unwrap());
        let dist = IncidentPowerDistribution::new(&v);
        for (i, pr) in [Protocol::Ptp, Protocol::PureBackscatter, Protocol::PureHtt]
            .iter()
            .enumerate()
        {
            let o = energy_outage_protocol(&dist, &v, *pr).unwrap();
            assert!((o - reference[i]).abs() <= 1e-9, "{pr}: {o} vs {}", reference[i]);
        }
    }
}

#[test]
fn no_energy_sources_means_certain_outage() {
    let v = params_with(|p| p.set("zeta_A", 0.0, false).unwrap());
    let dist = IncidentPowerDistribution::new(&v);
    for protocol in Protocol::ALL {
        let m = analytic_metrics(&v, &dist, protocol).unwrap();
        assert_eq!((m.o, m.c, m.t), (1.0, 0.0, 0.0), "{protocol}");
    }
}

#[test]
fn stronger_repulsion_lowers_outage() {
    let outage = |repulsion: Repulsion, mode: Mode| {
        let v = params_with(|p| p.repulsion = repulsion);
        energy_outage_mode(&IncidentPowerDistribution::new(&v), &v, mode).unwrap()
    };
    for mode in [Mode::Backscatter, Mode::Htt] {
        let ginibre = outage(Repulsion::GINIBRE, mode);
        let half = outage(Repulsion::Ginibre { kappa: 2 }, mode);
        let poisson = outage(Repulsion::Poisson, mode);
        assert!(ginibre < half && half < poisson, "{mode:?}: {ginibre} {half} {poisson}");
    }
}

#[test]
fn more_sources_lower_outage_per_mode() {
    let mut last = [1.0, 1.0];
    for zeta in [0.005, 0.01, 0.02, 0.04] {
        let v = params_with(|p| p.set("zeta_A", zeta, true).unwrap());
        let dist = IncidentPowerDistribution::new(&v);
        for (i, mode) in [Mode::Backscatter, Mode::Htt].into_iter().enumerate() {
            let o = energy_outage_mode(&dist, &v, mode).unwrap();
            assert!(o < last[i], "{mode:?} at {zeta}");
            last[i] = o;
        }
    }
}

#[test]
fn unreachable_thresholds_remove_coverage() {
    let v = params_with(|p| p.snr_threshold_b = 1e30);
    let dist = IncidentPowerDistribution::new(&v);
    assert!(coverage_backscatter(&dist, &v).unwrap() < 1e-12);
}

#[test]
fn zero_bandwidth_gives_zero_throughput() {
    let narrow = params_with(|p| p.bandwidth = 0.0);
    let dist = IncidentPowerDistribution::new(&narrow);
    assert_eq!(throughput_htt(&dist, &narrow).unwrap(), 0.0);
}

#[test]
fn strict_flag_changes_only_the_literal_forms() {
    let plain = params_with(|_| {});
    let strict = params_with(|p| p.strict_appendix = true);
    let (d1, d2) = (
        IncidentPowerDistribution::new(&plain),
        IncidentPowerDistribution::new(&strict),
    );
    let (a, b) = (
        AnalyticEvaluator::new(&plain, &d1),
        AnalyticEvaluator::new(&strict, &d2),
    );
    assert_eq!(
        a.energy_outage(Mode::Htt).unwrap(),
        b.energy_outage(Mode::Htt).unwrap()
    );
    assert_eq!(
        a.backscatter_success().unwrap(),
        b.backscatter_success().unwrap()
    );
    let weaker = b.interference_laplace(1e4).unwrap();
    let stronger = a.interference_laplace(1e4).unwrap();
    assert!(weaker > stronger, "{weaker} vs {stronger}");
}
