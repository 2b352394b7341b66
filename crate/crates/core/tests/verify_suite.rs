use qdamp::dynamics::GridSpec;
use qdamp::verify::{criterion, CheckResult, SuiteConfig};

#[test]
fn coarse_grid_fails_norm_laws_with_expected_values() {
    let config = SuiteConfig { grid: GridSpec::new(-60.0, 60.0, 256).unwrap(), ..SuiteConfig::default() };
    let report = criterion(2).unwrap().run(&config);
    assert!(!report.pass);
    assert_eq!(report.checks.len(), 3);
    let m1 = &report.checks[0];
    assert_eq!(m1.name, "02_norm_laws.model1.norm_ratio");
    assert!(!m1.pass);
    assert!((m1.expected - 0.6_f64.exp()).abs() < 1e-15);
    assert!(m1.diagnostic.as_deref().unwrap().contains("truncation"));
}

#[test]
fn default_norm_laws_pass() {
    let report = criterion(2).unwrap().run(&SuiteConfig::default());
    assert!(report.pass, "{:?}", report.checks);
}

#[test]
fn cheap_criteria_are_deterministic() {
    let config = SuiteConfig { seed: 7, ..SuiteConfig::default() };
    for id in [1, 3, 6, 7] {
        let a = criterion(id).unwrap().run(&config);
        let b = criterion(id).unwrap().run(&config);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn seed_changes_random_draws() {
    let a = criterion(3).unwrap().run(&SuiteConfig { seed: 1, ..SuiteConfig::default() });
    let b = criterion(3).unwrap().run(&SuiteConfig { seed: 2, ..SuiteConfig::default() });
    let det = |r: &qdamp::verify::CriterionReport| -> CheckResult {
        r.checks.iter().find(|c| c.name.ends_with("determinant_rel")).unwrap().clone()
    };
    assert_ne!(det(&a).measured.to_bits(), det(&b).measured.to_bits());
    assert!(a.pass && b.pass);
}
