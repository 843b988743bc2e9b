//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! lines are always printed.

use std::cell::Cell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use leadoff::coeffs::load_coefficients;
use leadoff::config::load_generator_config;
use leadoff::kernel_file::parse_kernel;
use leadoff::text::state_label;
use leadoff_core::game::{Entry, GameBuilder, StochasticGame};
use leadoff_core::models::{Matchup, ModelKind, ModelSet, OutcomeDistribution, PlayContext, Role, SyntheticPlayers};
use leadoff_core::sim::{monte_carlo_value, two_foot_rule_report, GeneratorConfig, GroundTruth, RolloutPolicy};
use leadoff_core::solver::{
    evaluate_mixed_runner_direct, policy_iteration, solve, solve_one_player, PitcherPolicy, Solution, SolveOptions,
};
use leadoff_core::state::{BaseState, GameState, PitcherAction, PlayState, RunnerOutcome, NUM_STATES};
use leadoff_core::transitions::{assemble_kernel, AssemblyOptions, ConditionalRows, KernelMode, TransitionKernel};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn runner(cases: u32) -> TestRunner {
    let cfg = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

struct Fixture {
    models: ModelSet,
    generator: GeneratorConfig,
    rows: ConditionalRows,
}

fn fixture_data() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let generator = load_generator_config(&fixture("generator.json")).unwrap();
        Fixture {
            models: load_coefficients(&fixture("coeffs.json")).unwrap(),
            rows: ConditionalRows::collect(&GroundTruth::new(generator.pitch.clone()).unwrap()).unwrap(),
            generator,
        }
    })
}

fn truth(mode: KernelMode) -> TransitionKernel {
    let f = fixture_data();
    let opts = AssemblyOptions { grid: f.generator.grid, ..AssemblyOptions::new(mode) };
    let mut k = assemble_kernel(&f.rows, &f.models, &opts).unwrap();
    k.game.certify(50).unwrap();
    k
}

fn two_player() -> &'static (TransitionKernel, Solution) {
    static K: OnceLock<(TransitionKernel, Solution)> = OnceLock::new();
    K.get_or_init(|| {
        let k = truth(KernelMode::TwoPlayer);
        let sol = solve(&k.game, &SolveOptions::default()).unwrap();
        (k, sol)
    })
}

fn one_player() -> &'static (TransitionKernel, Solution) {
    static K: OnceLock<(TransitionKernel, Solution)> = OnceLock::new();
    K.get_or_init(|| {
        let k = truth(KernelMode::OnePlayer);
        let sol = solve_one_player(&k.game, &SolveOptions::default()).unwrap();
        (k, sol)
    })
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- 1: brute force on small random games ----

/// Dense Gaussian elimination with partial pivoting.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            let pivot = a[c].clone();
            for (x, y) in a[r].iter_mut().zip(&pivot).skip(c) {
                *x -= f * y;
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// `rows[s][a][p]` = list of (successor, prob, reward); the last state is terminal.
type SmallGame = Vec<Vec<Vec<Vec<(usize, f64, f64)>>>>;

fn small_game() -> impl Strategy<Value = SmallGame> {
    (2usize..=6).prop_flat_map(|n| {
        let state = (1usize..=3).prop_flat_map(move |k| {
            let row = (proptest::collection::vec(0.0..1.0f64, n), proptest::collection::vec(0u8..4, n));
            proptest::collection::vec(proptest::collection::vec(row, 2), k)
        });
        proptest::collection::vec(state, n - 1).prop_map(move |states| {
            states
                .into_iter()
                .map(|actions| {
                    actions
                        .into_iter()
                        .map(|rows| {
                            rows.into_iter()
                                .map(|(w, r)| {
                                    // keep at least a quarter of the mass on the terminal state
                                    let mut w = w;
                                    let others: f64 = w[..n - 1].iter().sum();
                                    w[n - 1] = w[n - 1].max(others / 3.0).max(0.05);
                                    let total: f64 = w.iter().sum();
                                    (0..n).map(|j| (j, w[j] / total, if j + 1 == n { 0.0 } else { r[j] as f64 })).collect()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
    })
}

fn build_small(g: &SmallGame) -> StochasticGame {
    let n = g.len() + 1;
    let mut b = GameBuilder::new(n, n - 1);
    for state in g {
        let block = state
            .iter()
            .map(|a| a.iter().map(|row| row.iter().map(|&(j, p, r)| Entry::new(j, p, r)).collect()).collect())
            .collect();
        b.push_state(block).unwrap();
    }
    b.push_state(vec![vec![vec![Entry::new(n - 1, 1.0, 0.0)]]]).unwrap();
    let mut game = b.build().unwrap();
    game.certify(50).unwrap();
    game
}

/// Statewise max over runner policies of the statewise min over pitcher
/// policies, every pair evaluated exactly.
fn brute_force(g: &SmallGame) -> Vec<f64> {
    let m = g.len();
    let mut best = vec![f64::NEG_INFINITY; m];
    let n_runner: usize = g.iter().map(|s| s.len()).product();
    for mut code in 0..n_runner {
        let sigma: Vec<usize> = g
            .iter()
            .map(|s| {
                let a = code % s.len();
                code /= s.len();
                a
            })
            .collect();
        let mut worst = vec![f64::INFINITY; m];
        for tau in 0..(1usize << m) {
            let mut a = vec![vec![0.0; m]; m];
            let mut r = vec![0.0; m];
            for s in 0..m {
                a[s][s] += 1.0;
                for &(j, p, rew) in &g[s][sigma[s]][(tau >> s) & 1] {
                    r[s] += p * rew;
                    if j < m {
                        a[s][j] -= p;
                    }
                }
            }
            for (w, v) in worst.iter_mut().zip(gauss(a, r)) {
                *w = w.min(v);
            }
        }
        for (b, w) in best.iter_mut().zip(worst) {
            *b = b.max(w);
        }
    }
    best
}

fn brute_force_equivalence() -> Outcome {
    let gap = Cell::new(0.0f64);
    let games = Cell::new(0u32);
    let opts = SolveOptions { tol: 1e-13, max_iters: 100_000 };
    let result = runner(24).run(&small_game(), |g| {
        let sol = solve(&build_small(&g), &opts).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let oracle = brute_force(&g);
        let d = oracle.iter().zip(&sol.values.0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        gap.set(gap.get().max(d));
        games.set(games.get() + 1);
        prop_assert!(d <= 1e-9, "value iteration {:?} vs brute force {:?}", sol.values.0, oracle);
        Ok(())
    });
    let detail = format!("{} games, max gap {:.2e}", games.get(), gap.get());
    match result {
        Ok(()) => check(games.get() >= 20, detail),
        Err(e) => Err(format!("{detail}: {e}")),
    }
}

// ---- 2-5: the full synthetic kernel ----

fn vi_matches_pi() -> Outcome {
    let (k, vi) = two_player();
    let (pi, trajectory) = policy_iteration(&k.game, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let gap = vi.values.sup_distance(&pi.values);
    let drop = trajectory
        .windows(2)
        .flat_map(|w| w[0].0.iter().zip(&w[1].0).map(|(a, b)| a - b))
        .fold(0.0, f64::max);
    check(
        gap <= 1e-8 && drop <= 1e-9,
        format!("max gap {gap:.2e}, {} rounds, largest value drop {drop:.2e}", trajectory.len()),
    )
}

fn monte_carlo_cross_check() -> Outcome {
    let (k, sol) = two_player();
    let mc = monte_carlo_value(&k.game, 0, RolloutPolicy::Pure(&sol.runner, &sol.pitcher), 1_000_000, 7)
        .map_err(|e| e.to_string())?;
    let z = (mc.mean - sol.values.get(0)) / mc.std_error;
    check(
        z.abs() <= 3.0 && mc.truncated == 0,
        format!("MC {:.4} +/- {:.4} vs DP {:.4}, z = {z:.2}", mc.mean, mc.std_error, sol.values.get(0)),
    )
}

fn geometric_convergence() -> Outcome {
    let (k, sol) = two_player();
    let h = k.game.certificate().map_err(|e| e.to_string())?;
    let rate = sol.report.decay_rate.ok_or("no decay rate fitted")?;
    let limit = h.rho.powf(1.0 / h.horizon as f64) + 0.05;
    check(rate <= limit, format!("decay {rate:.4} <= {limit:.4} (rho {:.3e}, m {})", h.rho, h.horizon))
}

fn dominance_chain() -> Outcome {
    let (_, two) = two_player();
    let (k1, one) = one_player();
    let behavior = fixture_data().generator.behavior_policy(k1).map_err(|e| e.to_string())?;
    let b = evaluate_mixed_runner_direct(&k1.game, &behavior, &PitcherPolicy::first(&k1.game)).map_err(|e| e.to_string())?;
    let (v1, v2, vb) = (one.values.get(0), two.values.get(0), b.get(0));
    check(
        v1 - v2 >= -1e-9 && v2 - vb >= -1e-9,
        format!("one-player {v1:.4} >= two-player {v2:.4} >= behavioral {vb:.4}"),
    )
}

// ---- 6 ----

fn two_foot_direction() -> Outcome {
    let (k, sol) = one_player();
    let report = two_foot_rule_report(&k.grid, &sol.runner).map_err(|e| e.to_string())?;
    let mean = report.mean_increment();
    check(
        report.non_decreasing() && mean > 0.0 && mean < 5.0,
        format!(
            "non-decreasing {}, mean increments {:.2} and {:.2} ft",
            report.non_decreasing(),
            report.mean_increments[0],
            report.mean_increments[1]
        ),
    )
}

// ---- 7 ----

fn normalization_sweep() -> Outcome {
    let f = fixture_data();
    let kernels = [&two_player().0, &one_player().0];
    let effects = proptest::collection::vec(-3.0..3.0f64, 12);
    let probe = (0usize..NUM_STATES, 0usize..201, 0usize..2, effects);
    let mut rng = runner(1);
    let (mut worst_dist, mut worst_row, mut dists) = (0.0f64, 0.0f64, 0u32);
    for _ in 0..10_000 {
        let (s, lead, which, fx) = probe.new_tree(&mut rng).unwrap().current();
        let k = kernels[which];
        let acts = k.game.runner_actions(s);
        let a = acts.start + lead % acts.len();
        for row in k.game.pitcher_rows(a) {
            let total: f64 = k.game.row_entries(row).map(|e| e.prob).sum();
            worst_row = worst_row.max((total - 1.0).abs());
        }
        if let Some(p) = GameState::from_index(s).and_then(GameState::as_play).filter(|p| p.has_agency()) {
            let mut synth = SyntheticPlayers::default();
            for (i, x) in fx.into_iter().enumerate() {
                synth.set_effect(ModelKind::ALL[i / 3], Role::ALL[i % 3], x);
            }
            let matchup = Matchup::average().with_synthetic(synth);
            let probs = f.models.probabilities(&PlayContext::new(p, &matchup), k.grid.value(lead)).map_err(|e| e.to_string())?;
            let phi = probs.pickoff_attempt;
            for d in [
                OutcomeDistribution::two_player(&probs, PitcherAction::Pitch).map_err(|e| e.to_string())?,
                OutcomeDistribution::two_player(&probs, PitcherAction::Pickoff).map_err(|e| e.to_string())?,
                OutcomeDistribution::mixed(&probs, phi),
            ] {
                let arr = d.as_array();
                if arr.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(format!("probability outside [0, 1] at {}", state_label(GameState::Play(p))));
                }
                worst_dist = worst_dist.max((arr.iter().sum::<f64>() - 1.0).abs());
                dists += 1;
            }
        }
    }
    check(
        worst_dist <= 1e-12 && worst_row <= 1e-10,
        format!("10000 probes, {dists} distributions off by <= {worst_dist:.1e}, rows off by <= {worst_row:.1e}"),
    )
}

// ---- 8 and 10 go through the command-line tool ----

fn leadoff(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_leadoff")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Result<(), String> {
    let out = leadoff(args);
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn start_value(solution: &Path) -> Result<f64, String> {
    let text = std::fs::read_to_string(solution).map_err(|e| e.to_string())?;
    let line = text.lines().find(|l| l.starts_with("0 b000/c0-0/d0/o0 ")).ok_or("no start state line")?;
    line.split(' ').nth(2).unwrap().parse().map_err(|e| format!("{e}"))
}

fn pipeline_closure() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |n: &str| dir.path().join(n).display().to_string();
    let (cfg, coeffs) = (fixture("generator.json").display().to_string(), fixture("coeffs.json").display().to_string());
    run_ok(&["generate", "--config", &cfg, "--coeffs", &coeffs, "--innings", "100000", "--out", &p("plays.csv")])?;
    let build = |src: &[&str], out: &str| -> Result<(), String> {
        let mut args = vec!["build-transitions"];
        args.extend_from_slice(src);
        args.extend_from_slice(&["--coeffs", &coeffs, "--mode", "two-player", "--out", out]);
        run_ok(&args)
    };
    build(&["--plays", &p("plays.csv")], &p("est.kernel"))?;
    build(&["--ground-truth", &cfg], &p("true.kernel"))?;
    run_ok(&["solve", "--kernel", &p("est.kernel"), "--out", &p("est.sol")])?;
    run_ok(&["solve", "--kernel", &p("true.kernel"), "--out", &p("true.sol")])?;
    let est = start_value(Path::new(&p("est.sol")))?;
    let tru = start_value(Path::new(&p("true.sol")))?;
    check((est - tru).abs() <= 0.01, format!("estimated {est:.4} vs ground truth {tru:.4}, gap {:.4}", (est - tru).abs()))
}

// ---- 9 ----

fn third_disengagement_rule() -> Outcome {
    let f = fixture_data();
    let k = &two_player().0;
    let mut checked = 0;
    for s in 0..NUM_STATES {
        let Some(p) = GameState::from_index(s).and_then(GameState::as_play) else { continue };
        if !p.has_agency() || p.disengagements() != 2 {
            continue;
        }
        // runner moves up to second, count and outs unchanged, fresh disengagements
        let advanced = GameState::Play(PlayState::new(BaseState::new(false, true, false), p.count, 0, p.outs()).unwrap()).index();
        let cond = &f.rows.agency(p, RunnerOutcome::PickoffFail).entries;
        if cond.len() != 1 || cond[0].0.index() != advanced || cond[0].1 != 1.0 {
            return Err(format!("failed pickoff at {} goes to {cond:?}", state_label(GameState::Play(p))));
        }
        for (lead, a) in k.game.runner_actions(s).enumerate() {
            let probs = f.models.probabilities(&PlayContext::new(p, &Matchup::average()), k.grid.value(lead)).unwrap();
            let fail = OutcomeDistribution::two_player(&probs, PitcherAction::Pickoff)
                .unwrap()
                .iter()
                .find(|x| x.0 == RunnerOutcome::PickoffFail)
                .map_or(0.0, |x| x.1);
            let row = k.row_id(a, PitcherAction::Pickoff);
            let mass: f64 = k.game.row_entries(row).filter(|e| e.to as usize == advanced).map(|e| e.prob).sum();
            if mass != fail {
                return Err(format!("{}: mass {mass} on the advanced state, expected {fail}", state_label(GameState::Play(p))));
            }
            checked += 1;
        }
    }
    check(checked > 0, format!("{checked} (state, lead) pickoff rows at d=2"))
}

// ---- 10 ----

fn halting_refusal() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |n: &str| dir.path().join(n).display().to_string();
    let (cfg, coeffs) = (fixture("generator.json").display().to_string(), fixture("coeffs.json").display().to_string());
    let grid = "0:20:2";
    run_ok(&["build-transitions", "--ground-truth", &cfg, "--coeffs", &coeffs, "--mode", "two-player", "--grid", grid, "--out", &p("good.kernel")])?;
    run_ok(&["solve", "--kernel", &p("good.kernel"), "--out", &p("good.sol")])?;

    // a no-agency state that loops on itself forever
    let trap = (0..NUM_STATES).find(|&s| state_label(GameState::from_index(s).unwrap()) == "b010/c1-0/d0/o0").unwrap();
    let text = std::fs::read_to_string(p("good.kernel")).map_err(|e| e.to_string())?;
    let prefix = format!("{trap} 0 0 ");
    let bad: String = text
        .lines()
        .map(|l| if l.starts_with(&prefix) { format!("{prefix}{trap}:1\n") } else { format!("{l}\n") })
        .collect();
    if bad == text {
        return Err("no row rewritten".into());
    }
    std::fs::write(p("bad.kernel"), &bad).map_err(|e| e.to_string())?;

    let mut file = parse_kernel(&bad, Path::new("bad.kernel")).map_err(|e| e.to_string())?;
    let refused_lib = file.kernel.game.certify(50).is_err()
        && file.kernel.game.halting_report().is_none_or(|h| h.rho >= 1.0 - 1e-12);
    let solvers_decline = solve(&file.kernel.game, &SolveOptions::default()).is_err()
        && policy_iteration(&file.kernel.game, &SolveOptions::default()).is_err();
    let codes: Vec<i32> = [
        vec!["solve", "--kernel", &p("bad.kernel"), "--out", &p("x.sol")],
        vec!["solve", "--kernel", &p("bad.kernel"), "--method", "pi", "--out", &p("y.sol")],
        vec!["simulate", "--kernel", &p("bad.kernel"), "--solution", &p("good.sol"), "--innings", "100", "--out", &p("r.txt")],
    ]
    .iter()
    .map(|a| leadoff(a).status.code().unwrap_or(-1))
    .collect();
    check(
        refused_lib && solvers_decline && codes.iter().all(|&c| c == 4),
        format!("library refused {refused_lib}, solvers decline {solvers_decline}, exit codes {codes:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("brute-force equivalence", brute_force_equivalence),
        ("value iteration matches policy iteration", vi_matches_pi),
        ("Monte Carlo covers the DP value", monte_carlo_cross_check),
        ("geometric convergence", geometric_convergence),
        ("dominance chain", dominance_chain),
        ("two-foot direction", two_foot_direction),
        ("normalization sweep", normalization_sweep),
        ("pipeline closure", pipeline_closure),
        ("third-disengagement rule", third_disengagement_rule),
        ("halting refusal", halting_refusal),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} ({secs:.1}s)", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} ({secs:.1}s)", i + 1)
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
