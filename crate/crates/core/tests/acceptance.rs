//! Exit criteria for the whole system, one test per criterion. Each test
//! writes a `criterion N: PASS|FAIL` line to stderr, bypassing the harness
//! capture so the lines show up in a plain `cargo test` run.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use neurocoevo::coevo::{
    aggregate, aggregate_am, aggregate_gm, aggregate_hm, aggregate_wm, wm_weights, CoevoConfig, RunState,
    WM_WEIGHTS,
};
use neurocoevo::cppn::{feed_forward, topological_order, validate_genome, Cppn, CppnError, Innovation, NodeId};
use neurocoevo::decoder::{
    classify, decode_controller_with, decode_morphology_with, Cell, ControllerMap, Dims, VoxelGrid,
};
use neurocoevo::experiment::{csv_reader, read_gen_log, ConfigDocument};
use neurocoevo::neat::{reproduce, speciate, EvolutionConfig, Population};
use neurocoevo::robustness::Summary;
use neurocoevo::sim::{build_lattice, simulate_displacement, SimParams, Simulator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{enclosed_body, random_acyclic_genome, recursive_eval, relative_error, single_voxel};

fn report(criterion: u32, title: &str, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "criterion {criterion:>2}: {verdict} {title} ({:.2} s) {detail}",
        elapsed.as_secs_f64()
    );
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed < Duration::from_secs(secs)
}

fn preset() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets/desk.json")
}

fn desk_config() -> CoevoConfig {
    ConfigDocument::load(Some(&preset()), &[]).unwrap().run_config()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_neurocoevo"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "neurocoevo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn criterion_01_weighted_mean_exactness() {
    let start = Instant::now();
    let row = wm_weights(3).unwrap();
    let wm = aggregate_wm(&[10.0, 5.0, 2.0], row).unwrap();
    let worst_row = WM_WEIGHTS
        .iter()
        .map(|(_, w)| (w.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = (wm - 6.9).abs() <= 1e-12 && worst_row <= 1e-12 && within(elapsed, 1);
    report(
        1,
        "aggregation exactness",
        pass,
        elapsed,
        &format!("wm={wm} worst_row_sum_error={worst_row:e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_mean_inequalities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut constant_lists = 0;
    for case in 0..10_000 {
        let len = rng.random_range(2..=10);
        let deltas: Vec<f64> = if case % 10 == 0 {
            constant_lists += 1;
            vec![10f64.powf(rng.random_range(-4.0..0.0)); len]
        } else {
            (0..len).map(|_| 10f64.powf(rng.random_range(-4.0..0.0))).collect()
        };
        let (am, gm, hm) = (aggregate_am(&deltas), aggregate_gm(&deltas), aggregate_hm(&deltas));
        let tol = 1e-9 * am;
        let constant = deltas.iter().all(|&d| d == deltas[0]);
        let ordered = hm <= gm + tol && gm <= am + tol;
        let equality = (am - gm).abs() <= tol && (gm - hm).abs() <= tol;
        if !ordered || equality != constant {
            failures.push(format!("{deltas:?}: am={am} gm={gm} hm={hm}"));
        }
        for &(n, row) in &WM_WEIGHTS {
            let sample: Vec<f64> = deltas.iter().cycle().take(n).copied().collect();
            let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = sample.iter().copied().fold(0.0, f64::max);
            let wm = aggregate_wm(&sample, row).unwrap();
            if wm < lo - 1e-9 * hi || wm > hi + 1e-9 * hi {
                failures.push(format!("WM n={n} {sample:?}: {wm} outside [{lo}, {hi}]"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && within(elapsed, 5);
    report(
        2,
        "mean-inequality property suite",
        pass,
        elapsed,
        &format!("10000 lists ({constant_lists} constant), {} violations", failures.len()),
    );
    assert!(pass, "{:?}", &failures[..failures.len().min(5)]);
}

/// A CPPN stand-in that answers every query with the same outputs.
struct Fixed(Vec<f64>, usize);

impl Cppn for Fixed {
    fn num_inputs(&self) -> usize {
        self.1
    }
    fn num_outputs(&self) -> usize {
        self.0.len()
    }
    fn query(&self, _: &[f64]) -> Result<Vec<f64>, CppnError> {
        Ok(self.0.clone())
    }
}

#[test]
fn criterion_03_decoder_thresholds() {
    let start = Instant::now();
    let dims = Dims::new(3, 2, 2);
    let cases = [
        ((0.5, 0.5), Cell::Contractile),
        ((-0.5, -0.5), Cell::Contractile),
        ((0.5, 0.4999), Cell::Passive),
        ((0.5, -0.4999), Cell::Passive),
        ((0.4999, 0.9), Cell::Empty),
        ((-0.4999, 0.9), Cell::Empty),
    ];
    let mut failures = Vec::new();
    for ((nu, m), want) in cases {
        let grid = decode_morphology_with(&Fixed(vec![nu, m], 3), dims).unwrap();
        if grid != VoxelGrid::filled(dims, want) || classify(nu, m) != want {
            failures.push(format!("(nu={nu}, m={m}) should give {want:?}"));
        }
    }
    let body = enclosed_body(Dims::new(4, 3, 3), &[(1, 1, 1), (2, 1, 1)]);
    for (raw, want) in [(10.0, TAU), (-10.0, -TAU), (1.0, 1.0)] {
        let ctrl: ControllerMap = decode_controller_with(&Fixed(vec![raw], 4), &body).unwrap();
        if ctrl.len() != 2 || ctrl.phases.values().any(|&p| p != want) {
            failures.push(format!("raw phase {raw} should give {want}, got {:?}", ctrl.phases));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && within(elapsed, 1);
    report(3, "decoder threshold conformance", pass, elapsed, &failures.join("; "));
    assert!(pass);
}

#[test]
fn criterion_04_cppn_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut points = 0;
    for _ in 0..1000 {
        let g = random_acyclic_genome(&mut rng, 15);
        assert!(g.nodes.len() <= 15 && validate_genome(&g).is_empty());
        for _ in 0..5 {
            let inputs: Vec<f64> = (0..g.num_inputs).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let fast = feed_forward(&g, &inputs).unwrap();
            let slow = recursive_eval(&g, &inputs);
            for (a, b) in fast.iter().zip(&slow) {
                worst = worst.max(relative_error(*a, *b));
            }
            points += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && within(elapsed, 10);
    report(
        4,
        "CPPN oracle equivalence",
        pass,
        elapsed,
        &format!("1000 genomes, {points} queries, worst relative error {worst:e}"),
    );
    assert!(pass);
}

fn dummy_fitness(g: &neurocoevo::cppn::Genome) -> f64 {
    (g.connections.iter().filter(|c| c.enabled).count() % 5) as f64
}

#[test]
fn criterion_05_neat_structural_invariants() {
    let start = Instant::now();
    let cfg = EvolutionConfig::default();
    assert_eq!(cfg.population_size, 25);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pop = Population::new(3, 2, &cfg, &mut rng);
    let mut failures: Vec<String> = Vec::new();
    let mut owner: HashMap<Innovation, (NodeId, NodeId)> = HashMap::new();
    let mut removed_total = 0;

    for generation in 0..50 {
        if pop.genomes.len() != 25 {
            failures.push(format!("gen {generation}: population size {}", pop.genomes.len()));
        }
        for g in &pop.genomes {
            let violations = validate_genome(g);
            if !violations.is_empty() || topological_order(g).is_err() {
                failures.push(format!("gen {generation}: invalid genome {violations:?}"));
            }
            for c in &g.connections {
                let pair = *owner.entry(c.innovation).or_insert((c.from, c.to));
                if pair != (c.from, c.to) {
                    failures.push(format!("innovation {} names {pair:?} and {:?}", c.innovation, (c.from, c.to)));
                }
            }
        }
        for g in pop.genomes.iter_mut() {
            g.fitness = Some(dummy_fitness(g));
        }
        speciate(&mut pop, &cfg).unwrap();
        let stagnant: BTreeSet<u64> = pop
            .species
            .iter()
            .filter(|s| s.stagnation(pop.generation) > cfg.max_stagnation)
            .map(|s| s.id)
            .collect();
        let species_before = pop.species.len();
        let first_new = pop.registry.next_innovation();
        let rep = reproduce(&mut pop, &cfg, &mut rng).unwrap();

        let removed: BTreeSet<u64> = rep.removed_species.iter().copied().collect();
        let expected_removed = if stagnant.len() == species_before { stagnant.len() - 1 } else { stagnant.len() };
        if !removed.is_subset(&stagnant) || removed.len() != expected_removed {
            failures.push(format!("gen {generation}: stagnant {stagnant:?} but removed {removed:?}"));
        }
        if rep.quotas.iter().any(|(id, _)| removed.contains(id)) {
            failures.push(format!("gen {generation}: removed species still reproduced"));
        }
        removed_total += removed.len();

        let mut novel: BTreeMap<(NodeId, NodeId), BTreeSet<Innovation>> = BTreeMap::new();
        for g in &pop.genomes {
            for c in g.connections.iter().filter(|c| c.innovation >= first_new) {
                novel.entry((c.from, c.to)).or_default().insert(c.innovation);
            }
        }
        for (pair, ids) in novel {
            if ids.len() != 1 {
                failures.push(format!("gen {generation}: {pair:?} received innovations {ids:?}"));
            }
        }
    }
    if pop.genomes.len() != 25 {
        failures.push(format!("final population size {}", pop.genomes.len()));
    }
    if removed_total == 0 {
        failures.push("no species ever exceeded the stagnation limit".into());
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && within(elapsed, 30);
    report(
        5,
        "NEAT structural invariants",
        pass,
        elapsed,
        &format!("50 generations, {removed_total} stagnant species removed, {} violations", failures.len()),
    );
    assert!(pass, "{:?}", &failures[..failures.len().min(5)]);
}

#[test]
fn criterion_06_simulator_invariants() {
    let start = Instant::now();
    let params = SimParams::default();
    let body = enclosed_body(Dims::new(5, 3, 3), &[(1, 1, 1), (2, 1, 1), (3, 1, 1)]);
    let ctrl = ControllerMap {
        phases: body.contractile_cells().into_iter().zip([0.0, 1.5, 3.0]).collect(),
    };

    // anchored nodes under a full second of actuation
    let mut sim = Simulator::new(&body, &ctrl, &params).unwrap();
    let anchored: Vec<usize> = (0..sim.lattice().node_count()).filter(|&n| sim.lattice().anchored[n]).collect();
    let initial: Vec<_> = anchored.iter().map(|&n| sim.positions()[n]).collect();
    for _ in 0..params.sim.steps() {
        sim.step().unwrap();
    }
    let anchored_moved = anchored.iter().zip(&initial).filter(|(&n, p)| sim.positions()[n] != **p).count();

    // quiescence
    let mut still = params.clone();
    still.actuation.volumetric_amplitude = 0.0;
    still.sim.gravity = [0.0; 3];
    let quiet_delta = simulate_displacement(&body, &ctrl, &still).unwrap();
    let quiet_ok = quiet_delta < 1e-9 * params.material.voxel_size;

    // kinetic energy after actuation stops, damping on
    let mut sim = Simulator::new(&body, &ctrl, &params).unwrap();
    for _ in 0..2500 {
        sim.step().unwrap();
    }
    sim.set_actuation(false);
    let mut energy = vec![sim.kinetic_energy()];
    for _ in 0..7500 {
        sim.step().unwrap();
        energy.push(sim.kinetic_energy());
    }
    let rises: Vec<f64> = energy
        .windows(2)
        .filter(|w| w[1] > w[0] * (1.0 + 1e-9))
        .map(|w| (w[1] - w[0]) / w[0])
        .collect();
    let worst_rise = rises.iter().copied().fold(0.0, f64::max);
    let ke_ok = rises.is_empty();

    let single = build_lattice(&single_voxel(Cell::Passive), &params.material).unwrap();
    let single_ok = single.node_count() == 8 && single.spring_count() == 28;

    let elapsed = start.elapsed();
    let pass = anchored_moved == 0 && quiet_ok && ke_ok && single_ok && within(elapsed, 30);
    report(
        6,
        "simulator physical invariants",
        pass,
        elapsed,
        &format!(
            "anchored_moved={anchored_moved}/{} quiescent_delta={quiet_delta:e} \
             ke_increases={}/{} worst_relative_ke_rise={worst_rise:e} single_voxel={}n/{}s",
            anchored.len(),
            rises.len(),
            energy.len() - 1,
            single.node_count(),
            single.spring_count()
        ),
    );
    assert!(anchored_moved == 0, "anchored nodes moved");
    assert!(quiet_ok, "quiescent body drifted by {quiet_delta}");
    assert!(single_ok, "single voxel lattice");
    assert!(
        ke_ok,
        "kinetic energy rose in {} of {} damped steps after the actuation cutoff (worst relative rise {worst_rise:e})",
        rises.len(),
        energy.len() - 1
    );
}

#[test]
fn criterion_07_evaluation_bookkeeping() {
    let start = Instant::now();
    let cfg = CoevoConfig { pop_size: 25, n_collaborators: 2, ..desk_config() };
    let mut state = RunState::initialize(&cfg).unwrap();
    let mut worst = 0.0f64;
    let mut check = |state: &RunState| {
        for r in &state.last_records {
            let again = aggregate(state.config.aggregation, &r.deltas).unwrap();
            worst = worst.max((again - r.aptitude).abs());
        }
        state.last_records.len()
    };
    let bootstrap_records = check(&state);
    let before = state.simulations;
    state.advance().unwrap();
    let issued = state.simulations - before;
    let records = check(&state);
    let elapsed = start.elapsed();
    let pass = issued == 50 && records == 25 && bootstrap_records == 25 && worst <= 1e-12 && within(elapsed, 120);
    report(
        7,
        "evaluation bookkeeping",
        pass,
        elapsed,
        &format!("simulations={issued} records={records} worst_aggregation_error={worst:e}"),
    );
    assert!(pass);
}

struct DeskSweep {
    dir: PathBuf,
    elapsed: Duration,
}

fn desk_sweep() -> &'static DeskSweep {
    static SWEEP: OnceLock<DeskSweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let dir = scratch("desk_sweep");
        let start = Instant::now();
        cli(&["sweep", "--spec", preset().to_str().unwrap(), "--out", dir.to_str().unwrap(), "--deterministic", "-q"]);
        DeskSweep { dir, elapsed: start.elapsed() }
    })
}

#[test]
fn criterion_08_desk_evolution_efficacy() {
    let sweep = desk_sweep();
    let mut improved = 0;
    let mut monotone = true;
    let mut lines = Vec::new();
    for t in 0..5 {
        let log = read_gen_log(&sweep.dir.join(format!("n2_WM/trial_{t:02}/gen_log.csv"))).unwrap();
        assert_eq!(log.len(), 20);
        let first = log[0].best_aptitude.max(log[0].champion_aptitude);
        let last = log[log.len() - 1].champion_aptitude;
        if last > first {
            improved += 1;
        }
        monotone &= log.windows(2).all(|w| w[0].champion_aptitude <= w[1].champion_aptitude);
        lines.push(format!("{first:.3e}->{last:.3e}"));
    }
    let pass = improved >= 4 && monotone && within(sweep.elapsed, 600);
    report(
        8,
        "desk-scale evolution efficacy",
        pass,
        sweep.elapsed,
        &format!("improved {improved}/5 [{}] monotone={monotone}", lines.join(", ")),
    );
    assert!(pass);
}

fn write_sim_config(dir: &Path) -> PathBuf {
    let path = dir.join("sim.json");
    fs::write(&path, serde_json::to_string(&desk_config().sim_params()).unwrap()).unwrap();
    path
}

#[test]
fn criterion_09_determinism() {
    let start = Instant::now();
    let root = scratch("determinism");
    let preset = preset();
    let runs: Vec<PathBuf> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = root.join(name);
            cli(&["evolve", "--config", preset.to_str().unwrap(), "--out", out.to_str().unwrap(), "--deterministic", "-q"]);
            out
        })
        .collect();
    let mut differing = Vec::new();
    for file in ["gen_log.csv", "champion_sam.json", "champion_ctrl.json"] {
        if fs::read(runs[0].join(file)).unwrap() != fs::read(runs[1].join(file)).unwrap() {
            differing.push(file.to_string());
        }
    }

    let morph = runs[0].join("champion_morphology.json");
    let sim = write_sim_config(&root);
    let batteries: Vec<PathBuf> = ["ra", "rb"]
        .iter()
        .map(|name| {
            let out = root.join(name);
            cli(&[
                "robustness",
                "--morphology",
                morph.to_str().unwrap(),
                "--count",
                "100",
                "--seed",
                "9",
                "--sim-config",
                sim.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--deterministic",
            ]);
            out
        })
        .collect();
    for file in ["robustness.csv", "summary.json"] {
        if fs::read(batteries[0].join(file)).unwrap() != fs::read(batteries[1].join(file)).unwrap() {
            differing.push(format!("robustness {file}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = differing.is_empty() && within(elapsed, 300);
    report(9, "determinism", pass, elapsed, &format!("differing files: {differing:?}"));
    assert!(pass);
}

#[derive(serde::Deserialize)]
struct Row {
    scenario_id: usize,
    delta_yz: f64,
}

#[test]
fn criterion_10_robustness_battery_shape() {
    let sweep = desk_sweep();
    let start = Instant::now();
    let root = scratch("robustness_1000");
    let morph = sweep.dir.join("n2_WM/trial_00/champion_morphology.json");
    let sim = write_sim_config(&root);
    let out = root.join("battery");
    cli(&[
        "robustness",
        "--morphology",
        morph.to_str().unwrap(),
        "--count",
        "1000",
        "--sim-config",
        sim.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    let rows: Vec<Row> = csv_reader(fs::File::open(out.join("robustness.csv")).unwrap())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    let summary: Summary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let ids_ok = rows.iter().enumerate().all(|(i, r)| r.scenario_id == i);
    let mut values: Vec<f64> = rows.iter().map(|r| r.delta_yz).collect();
    let finite = values.iter().all(|v| v.is_finite());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let median = (values[n / 2 - 1] + values[n / 2]) / 2.0;
    let matches = summary.min == values[0] && summary.max == values[n - 1] && summary.median == median;
    let elapsed = start.elapsed();
    let pass = n == 1000 && ids_ok && finite && matches && within(elapsed, 300);
    report(
        10,
        "robustness battery shape",
        pass,
        elapsed,
        &format!(
            "{n} values, finite={finite}, min={} median={} max={} blowups={}",
            summary.min, summary.median, summary.max, summary.blowup_count
        ),
    );
    assert!(pass);
}
