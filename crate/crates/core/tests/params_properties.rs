use d2d_core::params::{ParamError, UnitStyle};
use d2d_core::{normalize_config, validate, NetworkParams, RawConfig, Repulsion};
use proptest::prelude::*;

const NUMERIC_KEYS: &[&str] = &[
    "zeta_A", "l_A", "l_B", "P_A", "P_B", "mu", "R", "d", "sigma2", "W", "omega", "beta",
    "varrho", "delta", "lambda", "theta", "m", "tau_B", "tau_H", "rho_B", "rho_H", "T_B",
];

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn arb_params() -> impl Strategy<Value = NetworkParams> {
    (
        (1e-4..0.2f64, 0.0..2.0f64, 0.05..1.0f64, 0.05..1.0f64),
        (1e-3..10.0f64, 1e-3..10.0f64, 2.1..6.0f64, 1.0..100.0f64, 0.5..20.0f64),
        (-150.0..-80.0f64, 1e3..1e8f64),
        (0.05..0.95f64, 0.05..1.0f64, 0.05..0.95f64, 0.05..1.0f64),
        (1e-3..10.0f64, 0.1..10.0f64, 1u32..6, prop_oneof![Just(0u32), 1u32..8]),
        (-20.0..20.0f64, -60.0..0.0f64, 1e-7..1e-5f64, 1.1..50.0f64, 0.0..1e5f64),
    )
        .prop_map(|(dens, link, noise, eff, fading, thr)| {
            let mut p = NetworkParams::table_one();
            p.density_a = dens.0;
            p.load_a = dens.2;
            p.load_b = dens.3;
            p.power_a = link.0;
            p.power_b = link.1;
            p.path_loss = link.2;
            p.window_radius = link.3;
            p.distance = link.4;
            p.bandwidth = noise.1;
            p.noise_power = d2d_core::params::psd_dbm_per_hz_to_watts(noise.0, noise.1);
            p.harvest_fraction = eff.0;
            p.rf_dc_efficiency = eff.1;
            p.rectified_fraction = eff.2;
            p.backscatter_efficiency = eff.3;
            p.link_fading_rate = fading.0;
            p.ambient_fading_mean = fading.1;
            p.nakagami_m = f64::from(fading.2);
            p.repulsion = match fading.3 {
                0 => Repulsion::Poisson,
                k => Repulsion::Ginibre { kappa: k },
            };
            p.snr_threshold_b = d2d_core::params::db_to_linear(thr.0);
            p.sinr_threshold_h = d2d_core::params::db_to_linear(thr.1);
            p.circuit_power_b = thr.2;
            p.circuit_power_h = thr.2 * thr.3;
            p.backscatter_rate = thr.4;
            p.set_interference_ratio(dens.1);
            p
        })
}

fn assert_fields_close(a: &NetworkParams, b: &NetworkParams, tol: f64) {
    for key in NUMERIC_KEYS.iter().chain(&["zeta_B", "xi"]) {
        let (x, y) = (a.get(key).unwrap(), b.get(key).unwrap());
        assert!(rel_close(x, y, tol), "{key}: {x} vs {y}");
    }
    assert_eq!(a.repulsion, b.repulsion);
    assert_eq!(a.strict_appendix, b.strict_appendix);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn si_rendering_round_trips_exactly(p in arb_params()) {
        let back = normalize_config(&p.to_raw(UnitStyle::Si)).unwrap();
        assert_fields_close(&p, &back, 1e-15);
    }

    #[test]
    fn decibel_rendering_round_trips(p in arb_params()) {
        let back = normalize_config(&p.to_raw(UnitStyle::Decibel)).unwrap();
        assert_fields_close(&p, &back, 1e-12);
    }

    #[test]
    fn normalization_is_idempotent(p in arb_params()) {
        let once = normalize_config(&p.to_raw(UnitStyle::Decibel)).unwrap();
        let twice = normalize_config(&once.to_raw(UnitStyle::Si)).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn rendered_text_parses_back(p in arb_params()) {
        let raw = p.to_raw(UnitStyle::Si);
        prop_assert_eq!(RawConfig::parse(&raw.render()).unwrap(), raw);
    }

    #[test]
    fn generated_params_validate(p in arb_params()) {
        prop_assert!(validate(p).is_ok());
    }

    #[test]
    fn set_then_get_returns_value(
        key in proptest::sample::select(NUMERIC_KEYS),
        value in 0.01..0.99f64,
    ) {
        let mut p = NetworkParams::table_one();
        p.set(key, value, true).unwrap();
        prop_assert_eq!(p.get(key).unwrap(), value);
    }

    #[test]
    fn holding_xi_rescales_interferer_density(zeta in 1e-4..0.1f64, xi in 0.0..2.0f64) {
        let mut p = NetworkParams::table_one();
        p.set("xi", xi, true).unwrap();
        p.set("zeta_A", zeta, true).unwrap();
        prop_assert!(rel_close(p.interference_ratio, xi, 1e-12) || xi == 0.0);
        prop_assert!(rel_close(p.active_density_b(), xi * p.active_density_a(), 1e-12));
        prop_assert!(validate(p).is_ok());
    }

    #[test]
    fn negative_density_is_rejected(zeta in -1.0..-1e-9f64) {
        let mut p = NetworkParams::table_one();
        p.density_a = zeta;
        match validate(p) {
            Err(ParamError::Invalid(v)) => prop_assert!(v.iter().any(|x| x.key == "zeta_A")),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }
}

#[test]
fn all_violations_are_reported_together() {
    let mut p = NetworkParams::table_one();
    p.density_a = -1.0;
    p.path_loss = 1.5;
    p.circuit_power_b = 1.0;
    let Err(ParamError::Invalid(v)) = validate(p) else {
        panic!("expected violations");
    };
    let keys: Vec<_> = v.iter().map(|x| x.key).collect();
    for key in ["zeta_A", "mu", "rho_B"] {
        assert!(keys.contains(&key), "{key} missing from {keys:?}");
    }
}

#[test]
fn reference_config_matches_table_one() {
    let text = "\
zeta_A = 0.02
xi = 0.2
l_A = 1
l_B = 1
alpha = -1
P_A_dbm = 23.0103
P_B_w = 0.2
mu = 4
R_m = 30
d_m = 5
W_hz = 1e6
sigma2_dbm_per_hz = -120
omega = 0.5
beta = 0.3
varrho = 0.625
delta = 1
lambda = 1
theta = 1
m = 1
tau_B_db = 5
tau_H_db = -40
rho_B_w = 8.9e-6
rho_H_w = 113e-6
T_B_bps = 1e3
";
    let p = normalize_config(&RawConfig::parse(text).unwrap()).unwrap();
    let reference = NetworkParams::table_one();
    assert!(rel_close(p.power_a, 0.2, 1e-5));
    let mut p = p;
    p.power_a = reference.power_a;
    assert_fields_close(&p, &reference, 1e-12);
}

#[test]
fn config_errors_are_specific() {
    let base = NetworkParams::table_one().to_raw(UnitStyle::Si);
    let mut both = base.clone();
    both.set("xi", 0.2);
    assert!(matches!(normalize_config(&both), Err(ParamError::Conflict(..))));

    let mut unknown = base.clone();
    unknown.set("gamma", 1);
    assert!(matches!(normalize_config(&unknown), Err(ParamError::UnknownKey(k)) if k == "gamma"));

    let mut kappa = base.clone();
    kappa.set("alpha", -0.3);
    assert!(matches!(normalize_config(&kappa), Err(ParamError::NonIntegerKappa { .. })));

    let mut range = base;
    range.set("omega", 1.5);
    assert!(matches!(normalize_config(&range), Err(ParamError::OutOfRange { .. })));

    assert!(matches!(
        RawConfig::parse("a = 1\na = 2"),
        Err(ParamError::DuplicateKey(_))
    ));
}
