use std::path::PathBuf;

use approx::assert_abs_diff_eq;
use mmwave_mc::ca::CcManagerPolicy;
use mmwave_mc::channel::LosModel;
use mmwave_mc::error::Error;
use mmwave_mc::rlc::RlcMode;
use mmwave_mc::scenario::{parse_config, parse_config_str, Mobility, Placement, ScenarioFile};

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

const TWO_CC: &str = r#"
duration_s = 1.0
master_seed = 3
carriers = [
  { cc_id = 0, center_freq_ghz = 39.75, bandwidth_mhz = 500, is_primary = true },
  { cc_id = 1, center_freq_ghz = 40.25, bandwidth_mhz = 500 },
]
"#;

fn violations(text: &str) -> Vec<String> {
    match parse_config_str(text) {
        Err(Error::Validation(v)) => v,
        other => panic!("expected validation failure, got {other:?}"),
    }
}

#[test]
fn contiguous_two_carrier_example_is_valid() {
    let cfg = parse_config_str(TWO_CC).unwrap();
    assert_eq!(cfg.carriers.len(), 2);
    assert_abs_diff_eq!(cfg.r_cc().unwrap(), 1.0);
    assert_abs_diff_eq!(cfg.total_bandwidth_mhz(), 1000.0);
    assert_eq!(cfg.seed(), 3);
    assert!(cfg.validate().unwrap().is_empty());
}

#[test]
fn overlapping_carriers_are_rejected() {
    let v = violations(
        r#"
duration_s = 1.0
carriers = [
  { cc_id = 0, center_freq_ghz = 39.8, bandwidth_mhz = 500, is_primary = true },
  { cc_id = 1, center_freq_ghz = 40.2, bandwidth_mhz = 500 },
]
"#,
    );
    assert!(v.iter().any(|m| m.contains("overlaps")), "{v:?}");
}

#[test]
fn missing_seed_defaults_to_one_with_a_warning() {
    let cfg = parse_config_str(&TWO_CC.replace("master_seed = 3", "")).unwrap();
    assert_eq!(cfg.master_seed, None);
    assert_eq!(cfg.seed(), 1);
    let warnings = cfg.validate().unwrap();
    assert!(warnings.iter().any(|w| w.contains("master_seed")), "{warnings:?}");
}

#[test]
fn every_violation_is_reported_at_once() {
    let v = violations(
        r#"
duration_s = -1.0
cc_manager = "greedy"
rlc_mode = "tm"
carriers = [
  { cc_id = 0, center_freq_ghz = 39.8, bandwidth_mhz = 500, is_primary = true },
  { cc_id = 1, center_freq_ghz = 40.2, bandwidth_mhz = 500 },
]
"#,
    );
    assert!(v.iter().any(|m| m.contains("duration_s")), "{v:?}");
    assert!(v.iter().any(|m| m.contains("greedy")), "{v:?}");
    assert!(v.iter().any(|m| m.contains("tm")), "{v:?}");
    assert!(v.iter().any(|m| m.contains("overlaps")), "{v:?}");
}

#[test]
fn dual_connectivity_without_lte_carrier_is_rejected() {
    let v = violations(&format!(
        "{TWO_CC}\nrlc_mode = \"am\"\n[dc]\nmmwave_cells = [{{ id = 1 }}]\n"
    ));
    assert!(v.iter().any(|m| m.contains("LTE carrier")), "{v:?}");
}

#[test]
fn reconfiguration_must_keep_the_primary() {
    let v = violations(&format!("{TWO_CC}\n[[reconfigurations]]\nat_s = 0.1\ncarriers = [1]\n"));
    assert!(v.iter().any(|m| m.contains("primary")), "{v:?}");
    let ok = parse_config_str(&format!("{TWO_CC}\n[[reconfigurations]]\nat_s = 0.1\ncarriers = [0]\n"));
    assert!(ok.is_ok());
}

#[test]
fn unknown_keys_are_errors() {
    assert!(parse_config_str(&format!("{TWO_CC}\nduraton = 2\n")).is_err());
}

#[test]
fn sweep_and_variants_expand_to_labelled_points() {
    let file = ScenarioFile::parse(&format!(
        "{TWO_CC}\n[sweep]\ndistance_m = [50, 100]\n[[variants]]\nname = \"a\"\n[[variants]]\nname = \"b\"\nn_runs = 3\n"
    ))
    .unwrap();
    let pts = file.expand().unwrap();
    let labels: Vec<_> = pts.iter().map(|p| p.label.as_str()).collect();
    assert_eq!(labels, ["a/d50", "a/d100", "b/d50", "b/d100"]);
    assert_eq!(pts[3].config.n_runs, 3);
    assert_eq!(pts[0].config.n_runs, 1);
    assert_eq!(
        pts[1].config.placement,
        Placement::Fixed {
            distance_m: 100.0,
            angle_deg: 0.0
        }
    );
}

#[test]
fn single_point_parser_refuses_sweeps() {
    assert!(parse_config_str(&format!("{TWO_CC}\n[sweep]\ndistance_m = [50, 100]\n")).is_err());
}

#[test]
fn shipped_same_bandwidth_scenario_encodes_the_example() {
    let file = ScenarioFile::load(scenarios_dir().join("ca-same-bandwidth.toml")).unwrap();
    let pts = file.expand().unwrap();
    assert_eq!(pts.len(), 8 * 3);
    for p in &pts {
        let c = &p.config;
        assert_eq!(c.channel.los_model, LosModel::Nlos);
        assert_eq!((c.channel.bs_antenna_elements, c.channel.ue_antenna_elements), (64, 16));
        assert_eq!(c.rlc_mode, RlcMode::Sm);
        assert_eq!(c.n_runs, 20);
        assert_abs_diff_eq!(c.duration_s, 1.0);
        assert_abs_diff_eq!(c.total_bandwidth_mhz(), 1000.0);
        assert!([50.0, 100.0, 150.0].contains(&p.distance_m.unwrap()));
    }
    let freqs = |variant: &str| -> Vec<f64> {
        let p = pts.iter().find(|p| p.variant.as_deref() == Some(variant)).unwrap();
        p.config.carriers.iter().map(|c| c.center_freq_ghz).collect()
    };
    assert_eq!(freqs("contiguous-2cc"), [39.75, 40.25]);
    assert_eq!(freqs("contiguous-1cc"), [40.0]);
    assert_eq!(freqs("noncontiguous-2cc"), [32.5, 73.0]);
    assert_eq!(freqs("noncontiguous-1cc"), [73.0]);
    let blocked = pts
        .iter()
        .find(|p| p.variant.as_deref() == Some("contiguous-2cc-blockage"))
        .unwrap();
    assert!(blocked.config.blockage_enabled(1) && !blocked.config.blockage_enabled(0));
}

#[test]
fn shipped_diff_bandwidth_scenario_encodes_the_example() {
    let file = ScenarioFile::load(scenarios_dir().join("ca-diff-bandwidth.toml")).unwrap();
    let pts = file.expand().unwrap();
    let ratios: Vec<f64> = pts.iter().map(|p| p.config.r_cc().unwrap()).collect();
    for (r, want) in ratios.iter().zip([0.5, 0.25, 0.125]) {
        assert_abs_diff_eq!(*r, want, epsilon = 0.002);
    }
    for p in &pts {
        let c = &p.config;
        assert_abs_diff_eq!(c.total_bandwidth_mhz(), 1000.0);
        assert_eq!(c.cc_manager, CcManagerPolicy::BandwidthAware);
        let lo = c.carriers.iter().map(|c| c.spectrum_ghz().0).fold(f64::INFINITY, f64::min);
        let hi = c.carriers.iter().map(|c| c.spectrum_ghz().1).fold(0.0, f64::max);
        assert!(lo >= 39.5 - 1e-9 && hi <= 40.5 + 1e-9, "{lo}..{hi}");
        assert_eq!(
            c.placement,
            Placement::Uniform {
                max_distance_m: 150.0,
                min_distance_m: 0.0
            }
        );
        assert!(matches!(c.mobility, Mobility::RandomWalk { speed_mps, .. } if speed_mps == 1.0));
    }
}

#[test]
fn every_shipped_scenario_parses() {
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let file = ScenarioFile::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!file.expand().unwrap().is_empty());
        }
    }
    assert!(parse_config(scenarios_dir().join("dc-fallback.toml")).is_ok());
}
