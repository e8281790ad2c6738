use slabww::config::{Config, Overrides};
use slabww_core::{BoundaryKind, PopulationTarget, RunMode};

const MINIMAL: &str = r#"
[mesh]
x_min = 0.0
x_max = 4.0
cells = 8

[material]
sigma_t = 1.0
sigma_s = 0.5
sigma_f = 0.2
nu_f = 2.5

[time]
t_end = 2.0
steps = 4

[source]
position = 2.0

[run]
mode = "ww-losm-be"
histories = 400
"#;

#[test]
fn defaults_fill_in() {
    let spec = Config::parse(MINIMAL).unwrap().to_spec().unwrap();
    assert_eq!(spec.mode, RunMode::WwLosmBe);
    assert_eq!((spec.n_batches, spec.seed, spec.filter_k), (20, 1, 2));
    assert_eq!(spec.population_target, PopulationTarget::Count(400));
    assert_eq!(spec.windows.rho, 2.5);
    assert_eq!(spec.left, BoundaryKind::Reflective);
    assert_eq!(spec.material.layers(), 5);
    assert_eq!(spec.speed, 1.0);
}

#[test]
fn boundaries_and_targets() {
    let text = format!(
        "{MINIMAL}population_target = \"none\"\n\n[boundary]\nleft = \"vacuum\"\nright = {{ kind = \"incident\", current = -0.25, p = 0.1 }}\n"
    );
    let spec = Config::parse(&text).unwrap().to_spec().unwrap();
    assert_eq!(spec.population_target, PopulationTarget::None);
    assert_eq!(spec.left, BoundaryKind::Vacuum);
    assert_eq!(spec.right, BoundaryKind::Incident { current: -0.25, p: 0.1 });
}

#[test]
fn overrides_apply() {
    let mut c = Config::parse(MINIMAL).unwrap();
    c.apply(&Overrides {
        mode: Some(RunMode::Analog),
        seed: Some(9),
        histories: Some(1000),
        filter_k: Some(0),
        rho: Some(4.0),
    });
    let spec = c.to_spec().unwrap();
    assert_eq!((spec.mode, spec.seed, spec.n_histories, spec.filter_k), (RunMode::Analog, 9, 1000, 0));
    assert_eq!(spec.windows.rho, 4.0);
    assert_eq!(spec.population_target, PopulationTarget::Count(1000));
}

#[test]
fn rejects_bad_input() {
    assert!(Config::parse("[mesh]\nx_min = 0").is_err());
    assert!(Config::parse(&MINIMAL.replace("ww-losm-be", "ww-magic")).unwrap().to_spec().is_err());
    assert!(Config::parse(&format!("{MINIMAL}typo_field = 3\n")).is_err());
    assert!(Config::parse(&MINIMAL.replace("sigma_t = 1.0", "sigma_t = 0.1")).unwrap().to_spec().is_err());
    assert!(Config::parse(&MINIMAL.replace("position = 2.0", "position = 9.0")).unwrap().to_spec().is_err());
    let bad_target = format!("{MINIMAL}population_target = \"lots\"\n");
    assert!(Config::parse(&bad_target).unwrap().to_spec().is_err());
}

#[test]
fn preset_is_the_benchmark() {
    let spec = Config::azurv1_impulse().to_spec().unwrap();
    assert_eq!((spec.cells(), spec.steps()), (201, 20));
    assert_eq!(spec.time.dt(1), 0.5);
    assert_eq!(spec.n_histories, 100_000);
}
