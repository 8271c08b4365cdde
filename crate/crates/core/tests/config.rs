use facetflow::harness::{self, parse_config, parse_config_for, Command, ConfigError, RunConfig, Scenario, DEFAULT_SEED};

fn key_of(text: &str) -> String {
    match parse_config(text) {
        Ok(_) => panic!("accepted:\n{text}"),
        Err(e) => e.key_name().unwrap_or_else(|| panic!("no key in {e}")).to_string(),
    }
}

#[test]
fn misspelled_section_is_named() {
    let key = key_of("scenario = \"prox\"\n[forcign]\nc = 3.0\n");
    assert_eq!(key, "forcign");
}

#[test]
fn unknown_keys_are_named_in_every_family() {
    let cases = [
        ("scenario = \"prox\"\n[grid]\nnn = 4\n", "grid.nn"),
        ("scenario = \"prox\"\n[forcing]\ncc = 1.0\n", "forcing.cc"),
        ("scenario = \"prox\"\n[initial]\nradious = 0.5\n", "initial.radious"),
        ("scenario = \"prox\"\n[prox]\ntoll = 1e-9\n", "prox.toll"),
        ("scenario = \"prox_properties\"\n[properties]\nshift = 3\n", "properties.shift"),
        ("scenario = \"explicit1d\"\n[time]\nt_end = 0.1\n", "time.t_end"),
        ("scenario = \"explicit1d\"\n[facet1d]\nell = 0.8\n", "facet1d.ell"),
        ("scenario = \"nonexistence\"\n[certificate]\nmargn = 0.1\n", "certificate.margn"),
        ("scenario = \"lip_bound\"\n[regularization]\nmm = 4\n", "regularization.mm"),
        ("scenario = \"lip_bound\"\n[mobility]\nslope = 2.0\n", "mobility.slope"),
        ("scenario = \"lip_bound\"\n[scheme]\ncfl = 0.5\n", "scheme.cfl"),
        ("scenario = \"lip_bound\"\n[checks]\nfactr = 1.05\n", "checks.factr"),
        ("scenario = \"lip_bound\"\n[output]\npng = true\n", "output.png"),
        ("scenario = \"ordered_pairs\"\n[pairs]\ncount = 3\n", "pairs.count"),
    ];
    for (text, want) in cases {
        assert_eq!(key_of(text), want, "{text}");
    }
}

#[test]
fn bad_values_are_named() {
    assert_eq!(key_of("scenario = \"explicit1d\"\n[time]\nT = -1.0\n"), "time.T");
    assert_eq!(key_of("scenario = \"nope\"\n"), "scenario");
    assert_eq!(key_of("scenario = \"prox\"\n[grid]\nn = \"many\"\n"), "grid.n");
}

#[test]
fn section_outside_the_scenario_is_rejected() {
    match parse_config("scenario = \"prox\"\n[pairs]\ncases = 3\n") {
        Err(ConfigError::Unused { scenario, key }) => {
            assert_eq!(scenario, Scenario::Prox);
            assert_eq!(key, "pairs");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn scenario_must_match_the_command() {
    let err = parse_config_for("scenario = \"wulff_shrink\"\n", Command::Prox).unwrap_err();
    assert_eq!(err.key_name(), Some("scenario"));
    assert_eq!(parse_config_for("", Command::Facet1d).unwrap().scenario, Command::Facet1d.default_scenario());
}

#[test]
fn syntax_errors_are_reported() {
    assert!(matches!(parse_config("scenario = \n"), Err(ConfigError::Syntax(_))));
}

#[test]
fn user_values_override_defaults() {
    let cfg = parse_config("scenario = \"lip_bound\"\nseed = 7\n[grid]\nn = 64\n").unwrap();
    assert_eq!(cfg.seed, 7);
    let (n, _, _) = cfg.grid.as_ref().unwrap().resolve().unwrap();
    assert_eq!(n, 64);
    assert_eq!(RunConfig::defaults(Scenario::LipBound, DEFAULT_SEED).seed, DEFAULT_SEED);
}

#[test]
fn resolved_config_round_trips() {
    for name in ["prox", "prox_properties", "facet1d", "explicit1d", "nonexistence", "evolve", "wulff_shrink", "lip_bound", "ordered_pairs"] {
        let scenario = Scenario::from_name(name).unwrap();
        let cfg = RunConfig::defaults(scenario, 99);
        let again = parse_config(&cfg.to_toml()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(cfg, again, "{name}");
    }
}

#[test]
fn seed_override_wins() {
    let cfg = harness::load("scenario = \"prox\"\nseed = 3\n", Command::Prox, Some(11)).unwrap();
    assert_eq!(cfg.seed, 11);
}
