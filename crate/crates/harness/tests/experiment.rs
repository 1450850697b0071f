use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fs;
use std::path::Path;

use deepc_core::plant::{NoiseModel, NoiseSource};
use deepc_harness::collect::collect_initial_data;
use deepc_harness::export::{episode_file_name, COSTS_HEADER};
use deepc_harness::monte_carlo::summarize;
use deepc_harness::reference::{build_reference, ReferenceSchedule};
use deepc_harness::seeds::{run_seeds, stream_rng, COLLECTION_STREAM, NOISE_STREAM};
use deepc_harness::{export_results, run_episode, run_monte_carlo, stage_cost, MonteCarlo, ScenarioConfig, Strategy};

/// Full scenario compressed to `len` samples; segments of 5 samples each.
fn short_config(len: usize, runs: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        episode_length: len,
        runs,
        master_seed: 11,
        ..Default::default()
    };
    cfg.reference.ramp_up = 0.05;
    cfg.reference.hold = 0.05;
    cfg.reference.ramp_down = 0.05;
    cfg.validate().unwrap();
    cfg
}

fn collected_last_input(cfg: &ScenarioConfig, seed: u64) -> [f64; 2] {
    let mut noise = NoiseSource::with_stream(&NoiseModel { bound: cfg.noise.bound, seed }, NOISE_STREAM);
    let c = collect_initial_data(
        &cfg.plant,
        cfg.dt,
        cfg.substeps,
        cfg.data_collection.steps,
        cfg.data_collection.input_bound,
        cfg.depth(),
        &mut stream_rng(seed, COLLECTION_STREAM),
        &mut noise,
    )
    .unwrap();
    let u = c.run.inputs();
    [u[(0, u.ncols() - 1)], u[(1, u.ncols() - 1)]]
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in [dir.to_path_buf(), dir.join("episodes")] {
        let mut names: Vec<_> = fs::read_dir(&sub).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for p in names.into_iter().filter(|p| p.is_file()) {
            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
        }
    }
    out
}

#[test]
fn shipped_config_is_the_default_scenario() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/two_link.toml");
    assert_eq!(ScenarioConfig::load(&path).unwrap(), ScenarioConfig::default());
}

#[test]
fn default_reference_waypoints() {
    let r = build_reference(&ReferenceSchedule::default(), 0.01, 1000).unwrap();
    assert_eq!(r.len(), 1000);
    assert_eq!((r[0][0], r[0][1]), (-PI, 0.0));
    assert!((r[150][0] + 3.0 * FRAC_PI_4).abs() < 1e-15 && (r[150][1] - FRAC_PI_4).abs() < 1e-15);
    for k in 300..650 {
        assert_eq!((r[k][0], r[k][1]), (-FRAC_PI_2, FRAC_PI_2));
    }
    assert!((r[800][0] + FRAC_PI_4).abs() < 1e-15);
    for k in 950..1000 {
        assert_eq!((r[k][0], r[k][1]), (0.0, 0.0));
    }
    // Ramps move by a constant increment per sample.
    let step = PI / 2.0 / 300.0;
    for k in 1..300 {
        assert!((r[k][0] - r[k - 1][0] - step).abs() < 1e-14);
    }
}

#[test]
fn collection_yields_forty_two_bounded_windows() {
    let cfg = ScenarioConfig::default();
    let seed = run_seeds(0, 1)[0];
    let mut noise = NoiseSource::with_stream(&NoiseModel { bound: 1e-3, seed }, NOISE_STREAM);
    let c = collect_initial_data(&cfg.plant, 0.01, 10, 55, 0.25, 14, &mut stream_rng(seed, COLLECTION_STREAM), &mut noise)
        .unwrap();
    assert_eq!(c.run.len(), 55);
    assert_eq!(c.dataset.len(), 42);
    assert!(c.run.inputs().iter().all(|u| u.abs() <= 0.25));
    // The first sample is the lower equilibrium plus noise.
    let y0 = c.run.outputs().column(0);
    assert!((y0[0] + PI).abs() <= 1e-3 && y0[1].abs() <= 1e-3);
    // Window j starts at sample j of the run.
    for (j, t) in c.dataset.trajectories().iter().enumerate() {
        assert_eq!(t.inputs(), &c.run.inputs().columns(j, 14).into_owned());
    }
}

#[test]
fn logged_costs_add_up_and_respect_bounds() {
    let cfg = short_config(40, 1);
    let ccfg = cfg.controller_config();
    let seed = run_seeds(cfg.master_seed, 1)[0];
    for s in Strategy::ALL {
        let ep = run_episode(&cfg, s, 0, seed).unwrap();
        assert!(!ep.failed());
        assert_eq!(ep.steps.len(), 40);
        let mut prev = collected_last_input(&cfg, seed);
        let mut total = 0.0;
        for st in &ep.steps {
            let c = stage_cost(&ccfg, &st.output, &st.reference, &st.input, &prev);
            assert!((c - st.stage_cost).abs() <= 1e-12 * c.max(1.0));
            total += c;
            for i in 0..2 {
                assert!(st.input[i].abs() <= ccfg.u_max);
                assert!((st.input[i] - prev[i]).abs() <= ccfg.du_max + 1e-12);
            }
            prev = st.input;
        }
        assert!((total - ep.j_tot).abs() <= 1e-10 * ep.j_tot.max(1.0), "{s}: {total} vs {}", ep.j_tot);
        match s {
            Strategy::Pm => assert_eq!(ep.decisions.len(), 40),
            Strategy::Au => assert!(ep.steps.iter().all(|st| st.accepted == Some(true))),
            Strategy::Nu => assert!(ep.steps.iter().all(|st| st.accepted.is_none() && st.excitation == [0.0; 2])),
        }
    }
}

#[test]
fn strategies_share_noise_and_initial_data() {
    let cfg = short_config(20, 1);
    let seed = run_seeds(cfg.master_seed, 1)[0];
    let eps: Vec<_> = Strategy::ALL.iter().map(|&s| run_episode(&cfg, s, 0, seed).unwrap()).collect();
    // Identical first measurement and first OCP input; AU then adds excitation.
    for e in &eps[1..] {
        assert_eq!(e.steps[0].output, eps[0].steps[0].output);
        assert_eq!(e.steps[0].ocp_input, eps[0].steps[0].ocp_input);
    }
    // The noise sample is the output minus the true angle, whatever the path.
    for k in 0..20 {
        let noise = |i: usize| {
            let s = &eps[i].steps[k];
            [s.output[0] - s.theta[0], s.output[1] - s.theta[1]]
        };
        for i in 1..3 {
            let (a, b) = (noise(0), noise(i));
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn three_strategies_ten_runs_give_thirty_rows() {
    let cfg = short_config(20, 10);
    let mc = run_monte_carlo(&cfg, 4).unwrap();
    assert_eq!(mc.episodes.len(), 30);
    let dir = tempfile::tempdir().unwrap();
    export_results(&cfg, &mc, dir.path()).unwrap();
    let costs = fs::read_to_string(dir.path().join("costs.csv")).unwrap();
    let lines: Vec<&str> = costs.lines().collect();
    assert_eq!(lines[0], COSTS_HEADER.join(","));
    assert_eq!(lines.len(), 31);
    // Run i uses the same seed in every strategy.
    for i in 0..10 {
        let seeds: Vec<&str> = (0..3).map(|s| lines[1 + 10 * s + i].split(',').nth(2).unwrap()).collect();
        assert!(seeds.iter().all(|s| *s == seeds[0]));
    }
    for s in Strategy::ALL {
        assert!(dir.path().join("episodes").join(episode_file_name(s.as_str(), 9)).is_file());
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
}

#[test]
fn reruns_and_worker_counts_are_byte_identical() {
    let cfg = short_config(60, 3);
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, workers) in dirs.iter().zip([1, 1, 3]) {
        let mc = run_monte_carlo(&cfg, workers).unwrap();
        export_results(&cfg, &mc, dir.path()).unwrap();
    }
    let first = read_all(dirs[0].path());
    assert_eq!(first.len(), 5 + 9);
    for d in &dirs[1..] {
        assert_eq!(read_all(d.path()), first);
    }
}

#[test]
fn exported_config_reproduces_the_run() {
    let cfg = short_config(20, 2);
    let dir = tempfile::tempdir().unwrap();
    let mc = run_monte_carlo(&cfg, 1).unwrap();
    export_results(&cfg, &mc, dir.path()).unwrap();
    let again = ScenarioConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(again, cfg);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let seeds: Vec<u64> = manifest["seeds"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(seeds, run_seeds(11, 2));
}

#[test]
fn empty_results_export_headers_only() {
    let cfg = short_config(20, 1);
    let mc = MonteCarlo {
        seeds: Vec::new(),
        episodes: Vec::new(),
        summaries: Vec::new(),
    };
    let dir = tempfile::tempdir().unwrap();
    export_results(&cfg, &mc, dir.path()).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("costs.csv")).unwrap(), COSTS_HEADER.join(",") + "\n");
    assert_eq!(fs::read_to_string(dir.path().join("decisions.csv")).unwrap().lines().count(), 1);
    assert_eq!(fs::read_dir(dir.path().join("episodes")).unwrap().count(), 0);
}

#[test]
fn single_run_summary_is_degenerate() {
    let mut cfg = short_config(20, 1);
    cfg.restrict_to(Strategy::Nu);
    let mc = run_monte_carlo(&cfg, 1).unwrap();
    let s = &mc.summaries[0];
    let j = mc.episodes[0].j_tot;
    assert_eq!(s.samples, vec![j]);
    for v in [s.median, s.lower_quartile, s.upper_quartile, s.min, s.max] {
        assert_eq!(v, j);
    }
}

#[test]
fn failed_episodes_are_counted_not_summarized() {
    let cfg = short_config(20, 2);
    let mut mc = run_monte_carlo(&cfg, 1).unwrap();
    mc.episodes[0].failure = Some("forced".into());
    let summaries = summarize(&cfg.strategies, &mc.episodes);
    assert_eq!(summaries[0].failed, 1);
    assert_eq!(summaries[0].samples, vec![mc.episodes[1].j_tot]);
}
