use std::path::PathBuf;

use rehearsal_core::nn::Activation;
use rehearsal_lab::config::{suggest_key, DataSource, ExperimentKind, MemoryKind, KEYS};
use rehearsal_lab::{parse_config, parse_str, ExperimentConfig, LabError};

fn config_error(text: &str) -> (usize, String) {
    match parse_str(text) {
        Err(LabError::Config { line, message }) => (line, message),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn empty_file_gives_defaults() {
    let cfg = parse_str("").unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(cfg.experiment, ExperimentKind::PseudoRehearsal);
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.seeds, 5);
    assert_eq!(cfg.memory_kinds, vec![MemoryKind::None, MemoryKind::Fifo, MemoryKind::Generative]);
    assert_eq!(cfg.sweep_capacities, vec![16, 256]);
    assert_eq!(cfg.tasks.goals, vec![(4, 4), (2, 2), (4, 0)]);
    assert_eq!(cfg.vae.lambda, 1.0);
    assert_eq!(cfg.vae.activation, Activation::Tanh);
    assert_eq!(cfg.data.source, DataSource::Synthetic);
    assert_eq!(cfg.data.phases, vec![vec![0, 1, 2]]);
    assert!(!cfg.unsupervised);
}

#[test]
fn comments_blank_lines_and_whitespace() {
    let cfg = parse_str("# header\n\n  vae.lambda = 1.0   # trailing\nseed=7\n").unwrap();
    assert_eq!(cfg.vae.lambda, 1.0);
    assert_eq!(cfg.seed, 7);
}

#[test]
fn dotted_keys_set_nested_fields() {
    let text = "vae.lambda = 0.25\nvae.hidden = 8,4\nagent.hidden = 16\ndata.phases = 0,1;2\ntasks.goals = 1,2;3,4\n\
                separation.mode = unsupervised\nvae.activation = relu\n";
    let cfg = parse_str(text).unwrap();
    assert_eq!(cfg.vae.lambda, 0.25);
    assert_eq!(cfg.vae.hidden, vec![8, 4]);
    assert_eq!(cfg.agent.hidden, vec![16]);
    assert_eq!(cfg.data.phases, vec![vec![0, 1], vec![2]]);
    assert_eq!(cfg.tasks.goals, vec![(1, 2), (3, 4)]);
    assert!(cfg.unsupervised);
    assert_eq!(cfg.vae.activation, Activation::Relu);
}

#[test]
fn misspelled_key_names_line_and_suggests() {
    let (line, msg) = config_error("vae.lambdaa = 1.0\n");
    assert_eq!(line, 1);
    assert!(msg.contains("`vae.lambda`"), "{msg}");
    assert!(msg.contains("valid keys"), "{msg}");
    assert_eq!(suggest_key("agent.gama"), Some("agent.gamma"));
    assert_eq!(suggest_key("completely.unrelated.thing"), None);
}

#[test]
fn errors_report_their_line() {
    assert_eq!(config_error("seed = 1\n\n# c\nseeds = many\n").0, 4);
    assert_eq!(config_error("seed = 1\nnot an assignment\n").0, 2);
    assert_eq!(config_error("memory.kinds = fifo,lru\n").0, 1);
    assert_eq!(config_error("tasks.goals = 1,2,3\n").0, 1);
    assert_eq!(config_error("tasks.permute = yes\n").0, 1);
}

#[test]
fn cross_field_problems_are_config_errors() {
    assert_eq!(config_error("seeds = 0\n").0, 0);
    assert_eq!(config_error("tasks.count = 1\n").0, 0);
    let (_, msg) = config_error("experiment = forgetting_sweep\nsweep.task_counts = 4\n");
    assert!(msg.contains("goals"), "{msg}");
    assert_eq!(config_error("experiment = latent_separation\ndata.source = idx\n").0, 0);
}

#[test]
fn every_key_is_settable_to_its_default() {
    let text: String = KEYS
        .iter()
        .filter(|(_, d, _)| !d.is_empty())
        .map(|(k, d, _)| format!("{k} = {d}\n"))
        .collect();
    assert_eq!(parse_str(&text).unwrap(), ExperimentConfig::default());
    let mut names: Vec<&str> = KEYS.iter().map(|(k, _, _)| *k).collect();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), KEYS.len());
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 6);
}

#[test]
fn missing_config_file_is_an_input_error() {
    let err = parse_config(std::path::Path::new("/nonexistent/lab.cfg")).unwrap_err();
    assert!(matches!(err, LabError::Input { .. }));
    assert_eq!(err.exit_code(), 2);
}
