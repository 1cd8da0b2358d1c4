use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use glcb::agent::{GlcbConfig, RewardMode};
use glcb::envs::{RewardKind, TaskSpec};
use glcb::harness::{
    assign_ranks, execute, mean_stderr, parse_seeds, prepare, rank_table, read_steps, run, step_file, summarize,
    GlcbParams, ModeName, PolicySpec, RunConfig, SummaryRow, SUMMARY_FILE,
};
use glcb::GlcbError;

fn row(algorithm: &str, task: &str, mean: f64) -> SummaryRow {
    SummaryRow {
        algorithm: algorithm.into(),
        task: task.into(),
        seeds: 1,
        mean_cum_reward: mean,
        stderr: 0.0,
        rank: 0,
    }
}

#[test]
fn mean_and_standard_error() {
    assert_eq!(mean_stderr(&[4.0, 6.0]).unwrap(), (5.0, 1.0));
    assert_eq!(mean_stderr(&[3.5]).unwrap(), (3.5, 0.0));
    assert!(mean_stderr(&[]).is_err());
}

#[test]
fn ranking_conventions() {
    let mut rows = vec![row("a", "x", 10.0), row("b", "x", 5.0)];
    assign_ranks(&mut rows).unwrap();
    assert_eq!(rows.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![1, 2]);

    let mut rows = vec![row("a", "x", 7.0), row("b", "x", 7.0), row("c", "x", 1.0)];
    assign_ranks(&mut rows).unwrap();
    assert_eq!(rows.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![1, 1, 3]);

    // ranks (1, 1, 2) for "a" over three tasks
    let rows = vec![
        row("a", "x", 3.0),
        row("b", "x", 2.0),
        row("a", "y", 9.0),
        row("b", "y", 1.0),
        row("a", "z", 0.0),
        row("b", "z", 4.0),
    ];
    let table = rank_table(&rows).unwrap();
    assert!((table.mean_rank["a"] - 4.0 / 3.0).abs() < 1e-12);
    assert!((table.mean_rank["b"] - 5.0 / 3.0).abs() < 1e-12);
    assert_eq!(table.sorted_algorithms(), vec!["a", "b"]);
    let shown = table.to_string();
    assert!(shown.contains("1.33") && shown.contains("1.67"), "{shown}");

    let dup = vec![row("a", "x", 1.0), row("a", "x", 2.0)];
    assert!(matches!(rank_table(&dup), Err(GlcbError::DuplicateEntry { .. })));
}

#[test]
fn seed_ranges() {
    assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
    assert_eq!(parse_seeds("2..=4").unwrap(), vec![2, 3, 4]);
    assert_eq!(parse_seeds("1,5,9").unwrap(), vec![1, 5, 9]);
    assert!(parse_seeds("3..3").is_err());
    assert!(parse_seeds("a..b").is_err());
    assert!(parse_seeds("").is_err());
}

const TOML_CONFIG: &str = r#"
seeds = [1, 2, 3]
horizon = 50
out = "results"

[[tasks]]
name = "wheel"
wheel = { delta = 0.9 }

[[policies]]
kind = "glcb"
label = "glcb-fast"
ucb_exploration_bonus = 0.2
number_of_hyperplanes_per_unit = 3
bias_scale = 0.01
initial_learning_rate = 0.5
learning_rate_decay_parameter = 0.02
initial_switching_rate = 2.0
switching_rate_decay_parameter = 0.3
tree_depth = 2
gln_network_shape = [8, 1]

[[policies]]
kind = "uniform"
"#;

#[test]
fn config_keys_follow_hyperparameter_names() {
    let cfg = RunConfig::from_toml(TOML_CONFIG).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.seeds, vec![1, 2, 3]);
    assert_eq!(cfg.tasks[0].wheel.delta, 0.9);
    let PolicySpec::Glcb(p) = &cfg.policies[0] else {
        panic!()
    };
    let resolved = p
        .resolve(
            "wheel",
            2,
            RewardKind::Continuous {
                r_min: 0.0,
                r_max: 10.0,
            },
        )
        .unwrap();
    assert_eq!(resolved.exploration_c, 0.2);
    assert_eq!(resolved.planes_per_unit, 3);
    assert_eq!(resolved.bias_scale, 0.01);
    assert_eq!((resolved.lr_init, resolved.lr_decay), (0.5, 0.02));
    assert_eq!((resolved.switching_init, resolved.switching_decay), (2.0, 0.3));
    assert_eq!(resolved.gln.layer_widths, vec![8, 1]);
    assert_eq!(
        resolved.mode,
        RewardMode::Continuous {
            depth: 2,
            r_min: 0.0,
            r_max: 10.0
        }
    );
    assert_eq!(cfg.policies[1].label(), "uniform");

    let json = serde_json::to_string(&cfg).unwrap();
    assert_eq!(RunConfig::from_json(&json).unwrap(), cfg);
    assert_eq!(RunConfig::new(cfg.tasks.clone(), cfg.policies.clone()).seeds.len(), 20);
}

#[test]
fn unset_keys_take_per_mode_defaults() {
    let p = GlcbParams::default();
    assert_eq!(
        p.resolve("t", 4, RewardKind::Bernoulli).unwrap(),
        GlcbConfig::bernoulli(4)
    );
    assert_eq!(
        p.resolve(
            "t",
            2,
            RewardKind::Continuous {
                r_min: 0.0,
                r_max: 10.0
            }
        )
        .unwrap(),
        GlcbConfig::continuous(2, 0.0, 10.0)
    );
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(RunConfig::from_toml("tasks = []\npolicies = []\nbogus = 1").is_err());
    assert!(RunConfig::from_toml("[[tasks]]\nname='wheel'\n[[policies]]\nkind='glcb'\nlearning_rate=1").is_err());
    assert!(RunConfig::from_toml("[[tasks]]\nname='wheel'\n[[policies]]\nkind='sarsa'").is_err());

    let base = RunConfig::new(vec![TaskSpec::named("wheel")], vec![PolicySpec::uniform()]);
    let mut c = base.clone();
    c.seeds = vec![1, 1];
    assert!(c.validate().is_err());
    let mut c = base.clone();
    c.seeds.clear();
    assert!(c.validate().is_err());
    let mut c = base.clone();
    c.policies.push(PolicySpec::uniform());
    assert!(c.validate().is_err());
    let mut c = base.clone();
    c.horizon = Some(0);
    assert!(c.validate().is_err());

    let mut c = base.clone();
    c.policies = vec![PolicySpec::Glcb(GlcbParams {
        mode: Some(ModeName::Bernoulli),
        ..Default::default()
    })];
    assert!(matches!(prepare(&c), Err(GlcbError::PolicyMismatch { .. })));
    let mut c = base;
    c.tasks = vec![TaskSpec::named("two_context")];
    c.policies = vec![PolicySpec::Glcb(GlcbParams {
        mode: Some(ModeName::Continuous),
        ..Default::default()
    })];
    assert!(matches!(prepare(&c), Err(GlcbError::PolicyMismatch { .. })));
}

fn statlog_like(dir: &Path, rows: usize) -> PathBuf {
    let path = dir.join("statlog.csv");
    let mut f = fs::File::create(&path).unwrap();
    writeln!(f, "f1,f2,f3,kind,label").unwrap();
    for i in 0..rows {
        let label = i % 7 + 1;
        writeln!(
            f,
            "{},{},{},{},{}",
            label as f64 + (i % 11) as f64 * 0.1,
            (i * 37 % 101) as f64,
            (label * 3) as f64 - (i % 5) as f64 * 0.2,
            ["a", "b"][i % 2],
            label
        )
        .unwrap();
    }
    path
}

fn statlog_spec(path: &Path) -> TaskSpec {
    let mut s = TaskSpec::named("statlog").with_path(path);
    s.categorical_columns = vec!["kind".into()];
    s
}

#[test]
fn uniform_on_seven_classes_scores_one_seventh() {
    let dir = tempfile::tempdir().unwrap();
    let spec = statlog_spec(&statlog_like(dir.path(), 6000));
    let cfg = RunConfig::new(vec![spec], vec![PolicySpec::uniform()]);
    let episodes = execute(&cfg).unwrap();
    assert_eq!(episodes.len(), 20);
    assert!(episodes.iter().all(|e| e.records.len() == 5000));
    let mean = episodes.iter().map(|e| e.total_reward()).sum::<f64>() / 20.0;
    let expected = 5000.0 / 7.0;
    assert!((mean - expected).abs() < 0.05 * expected, "{mean}");
}

fn small_run(dir: &Path, out: &str, parallelism: usize) -> RunConfig {
    let mut cfg = RunConfig::new(
        vec![TaskSpec::named("two_context"), statlog_spec(&statlog_like(dir, 300))],
        vec![
            PolicySpec::Glcb(GlcbParams {
                gln_network_shape: Some(vec![6, 1]),
                ..Default::default()
            }),
            PolicySpec::uniform(),
            PolicySpec::linear_ts(),
        ],
    );
    cfg.seeds = vec![3, 4, 5];
    cfg.horizon = Some(120);
    cfg.out = dir.join(out);
    cfg.parallelism = Some(parallelism);
    cfg
}

#[test]
fn run_writes_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_run(dir.path(), "out", 2);
    let output = run(&cfg).unwrap();
    assert_eq!(output.summary.len(), 6);
    let path = step_file(&cfg.out, "glcb", "statlog", 4);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("seed,t,action,reward,cum_reward,optimal_reward\n"));
    let records = read_steps(&path).unwrap();
    assert_eq!(records.len(), 120);
    let mut prev = 0.0;
    let mut cum = 0.0;
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r.t, i as u64 + 1);
        assert_eq!(r.seed, 4);
        cum += r.reward;
        assert_eq!(r.cum_reward, cum);
        let regret = prev + (r.optimal_reward - r.reward);
        assert!(regret >= prev);
        prev = regret;
    }
    let summary = fs::read_to_string(cfg.out.join(SUMMARY_FILE)).unwrap();
    assert!(summary.starts_with("algorithm,task,seeds,mean_cum_reward,stderr,rank\n"));
    assert!(cfg.out.join("regret.csv").is_file());
    assert!(cfg.out.join("manifest.json").is_file());
}

#[test]
fn reruns_are_byte_identical_and_parallelism_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_run(dir.path(), "a", 1);
    let b = small_run(dir.path(), "b", 8);
    let sa = run(&a).unwrap().summary;
    let sb = run(&b).unwrap().summary;
    assert_eq!(sa, sb);
    for alg in ["glcb", "uniform", "linear_ts"] {
        for task in ["two_context", "statlog"] {
            for seed in [3, 4, 5] {
                let fa = fs::read(step_file(&a.out, alg, task, seed)).unwrap();
                let fb = fs::read(step_file(&b.out, alg, task, seed)).unwrap();
                assert_eq!(fa, fb, "{alg}/{task}/{seed}");
            }
        }
    }
    assert_eq!(
        fs::read(a.out.join(SUMMARY_FILE)).unwrap(),
        fs::read(b.out.join(SUMMARY_FILE)).unwrap()
    );
}

#[test]
fn horizon_override_and_missing_seed_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(vec![TaskSpec::named("wheel")], vec![PolicySpec::uniform()]);
    cfg.seeds = vec![0, 1];
    cfg.horizon = Some(10);
    cfg.out = dir.path().join("run");
    run(&cfg).unwrap();
    assert_eq!(
        read_steps(&step_file(&cfg.out, "uniform", "wheel", 1)).unwrap().len(),
        10
    );
    assert_eq!(summarize(&cfg.out).unwrap().len(), 1);
    fs::remove_file(step_file(&cfg.out, "uniform", "wheel", 1)).unwrap();
    assert!(matches!(summarize(&cfg.out), Err(GlcbError::Missing(_))));
    assert!(summarize(dir.path()).is_err());
}
