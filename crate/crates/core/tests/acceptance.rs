//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{example1, example2, random_instance};
use d2d_idnc::conflict_graph::{
    build_higher_layer, build_lower_layer, build_two_layer, EdgeReason, Transmitter,
};
use d2d_idnc::engine::validate_plan;
use d2d_idnc::harness::{run_trials, ErasureConfig, ExperimentConfig, SweepVariable};
use d2d_idnc::mis::{brute_force_mis, independence_number, is_independent, DEFAULT_VERTEX_CEILING};
use d2d_idnc::netcam_wp::completion_bounds;
use d2d_idnc::{BitSet, ConflictGraph, MisSolver, SchedulerKind, TopologyKind, Vertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn bs(p: usize) -> Vertex {
    Vertex::bs(p - 1)
}

fn ue(u: usize, p: usize) -> Vertex {
    Vertex::user(u - 1, p - 1)
}

fn edge_set(g: &ConflictGraph) -> BTreeSet<(Vertex, Vertex)> {
    g.edges()
        .into_iter()
        .map(|(a, b)| {
            let (x, y) = (g.vertex(a), g.vertex(b));
            (x.min(y), x.max(y))
        })
        .collect()
}

fn pair(a: Vertex, b: Vertex) -> (Vertex, Vertex) {
    (a.min(b), a.max(b))
}

fn example1_completion_times() -> Verdict {
    let (s, c) = example1();
    let solver = MisSolver::default();
    let expected = [
        (SchedulerKind::UncodedBs, 4),
        (SchedulerKind::CellularOnlyIdnc, 2),
        (SchedulerKind::OptIdnc, 1),
        (SchedulerKind::NetcamWp, 1),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, want) in expected {
        let got = kind.run(&s, &c, &solver).map(|r| r.completion_time);
        ok &= matches!(got, Ok(t) if t == want);
        parts.push(format!(
            "{kind}={}",
            got.map_or_else(|e| e.to_string(), |t| t.to_string())
        ));
    }
    verdict(ok, parts.join(" "))
}

fn example2_graphs() -> Verdict {
    let (s, c) = example2();
    let hi = build_higher_layer(&s);
    let lo = build_lower_layer(&s, &c).unwrap();
    let two = build_two_layer(&s, &c).unwrap();
    let mut failures = Vec::new();

    if hi.vertices() != [bs(1), bs(2), bs(3)]
        || edge_set(&hi) != BTreeSet::from([pair(bs(1), bs(3))])
    {
        failures.push("higher layer");
    }
    let lo_vertices: BTreeSet<Vertex> = lo.vertices().iter().copied().collect();
    if lo_vertices != BTreeSet::from([ue(2, 1), ue(2, 3), ue(1, 2), ue(3, 2)]) {
        failures.push("lower-layer vertices");
    }
    let lo_edges = edge_set(&lo);
    let listed = [
        pair(ue(2, 1), ue(2, 3)),
        pair(ue(2, 1), ue(1, 2)),
        pair(ue(1, 2), ue(2, 1)),
        pair(ue(1, 2), ue(2, 3)),
        pair(ue(3, 2), ue(2, 1)),
        pair(ue(3, 2), ue(2, 3)),
    ];
    if !listed.iter().all(|e| lo_edges.contains(e)) {
        failures.push("listed lower-layer edges");
    }
    let extra = pair(ue(1, 2), ue(3, 2));
    let extra_ok = lo_edges.contains(&extra)
        && lo.edge_reasons(
            lo.index_of(&extra.0).unwrap(),
            lo.index_of(&extra.1).unwrap(),
        ) == [EdgeReason::C2];
    if !extra_ok {
        failures.push("congestion edge (u1:p2, u3:p2)");
    }
    let redundancy: BTreeSet<_> = two
        .edges()
        .into_iter()
        .filter(|&(a, b)| two.edge_reasons(a, b).contains(&EdgeReason::Redundancy))
        .map(|(a, b)| pair(two.vertex(a), two.vertex(b)))
        .collect();
    let expected_redundancy = BTreeSet::from([
        pair(bs(1), ue(2, 1)),
        pair(bs(2), ue(1, 2)),
        pair(bs(2), ue(3, 2)),
        pair(bs(3), ue(2, 3)),
    ]);
    if redundancy != expected_redundancy {
        failures.push("redundancy edges");
    }
    let distinct_listed: BTreeSet<_> = listed.into_iter().collect();
    let detail = format!(
        "higher {}v/{}e, lower {}v/{}e ({} listed + 1 congestion), two-layer {}v/{}e, redundancy {}",
        hi.len(),
        hi.edge_count(),
        lo.len(),
        lo.edge_count(),
        distinct_listed.len(),
        two.len(),
        two.edge_count(),
        redundancy.len()
    );
    if failures.is_empty() {
        verdict(true, detail)
    } else {
        verdict(
            false,
            format!("{detail}; mismatched: {}", failures.join(", ")),
        )
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> ConflictGraph {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|_| rng.gen_bool(density))
        .collect();
    ConflictGraph::from_edges(n, &edges, EdgeReason::InadmissibleBs).unwrap()
}

fn mis_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x315);
    let densities = [0.1, 0.3, 0.6];
    let solver = MisSolver::default();
    let (mut size_match, mut set_match, mut independent) = (0, 0, 0);
    let total = 500;
    for i in 0..total {
        let n = rng.gen_range(8..=18);
        let g = random_graph(&mut rng, n, densities[i % 3]);
        let bk = solver.solve(&g).unwrap();
        let oracle = brute_force_mis(&g).unwrap();
        if bk.count() == oracle.count() && independence_number(&g) == oracle.count() {
            size_match += 1;
        }
        if bk == oracle {
            set_match += 1;
        }
        if is_independent(&g, &bk) {
            independent += 1;
        }
    }
    verdict(
        size_match == total && independent == total,
        format!("cardinality {size_match}/{total}, independent {independent}/{total}, identical sets {set_match}/{total}"),
    )
}

fn adjacency_masks(g: &ConflictGraph) -> Vec<u32> {
    (0..g.len())
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, b| m | 1 << b))
        .collect()
}

fn mask_set(n: usize, mask: u32) -> BitSet {
    BitSet::from_indices(n, (0..n).filter(|&b| mask & (1 << b) != 0))
}

fn sets_match_plans() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e0);
    let kinds = [
        TopologyKind::FullyConnected,
        TopologyKind::RandomUniform {
            edge_probability: 0.3,
        },
        TopologyKind::RandomUniform {
            edge_probability: 0.6,
        },
    ];
    let total = 200;
    let (mut ok_instances, mut subsets, mut augmentations, mut max_v) = (0, 0u64, 0u64, 0);
    let mut first_failure = None;
    for i in 0..total {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=5);
        let erasure = rng.gen_range(0.1..0.6);
        let (s, c) = random_instance(n, m, kinds[i % 3], erasure, rng.gen());
        let g = build_two_layer(&s, &c).unwrap();
        let v = g.len();
        max_v = max_v.max(v);
        assert!(v <= 31, "instance too large to enumerate");
        let adj = adjacency_masks(&g);
        let mut good = true;
        for mask in 0u32..(1u32 << v) {
            subsets += 1;
            let indep = (0..v).all(|x| mask & (1 << x) == 0 || adj[x] & mask == 0);
            let plan = g.plan_of(&mask_set(v, mask));
            if indep != validate_plan(&plan, &s, &c).passed() {
                good = false;
                first_failure.get_or_insert(format!("instance {i}: subset {mask:#b} plan {plan}"));
                break;
            }
            if !indep {
                continue;
            }
            for x in (0..v).filter(|&x| mask & (1 << x) == 0) {
                augmentations += 1;
                let grown_indep = adj[x] & mask == 0;
                let mut grown = plan.clone();
                let vx = g.vertex(x);
                match vx.transmitter {
                    Transmitter::Bs => {
                        grown.bs_code.insert(vx.packet);
                    }
                    Transmitter::User(u) => {
                        grown.d2d_codes.entry(u).or_default().insert(vx.packet);
                    }
                }
                if grown_indep != validate_plan(&grown, &s, &c).passed() {
                    good = false;
                    first_failure
                        .get_or_insert(format!("instance {i}: augmenting {vx} onto {plan}"));
                }
            }
            if !good {
                break;
            }
        }
        if good {
            ok_instances += 1;
        }
    }
    let mut detail = format!(
        "{ok_instances}/{total} instances, {subsets} subsets and {augmentations} augmentations checked, largest graph {max_v} vertices"
    );
    if let Some(f) = first_failure {
        detail.push_str(&format!("; first failure {f}"));
    }
    verdict(ok_instances == total, detail)
}

struct PairedRun {
    lower: usize,
    upper: usize,
    opt: usize,
    netcam: usize,
    uncoded: usize,
    cellular: usize,
    slot_dominance: bool,
}

fn paired_instances() -> Vec<(usize, usize, PairedRun)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e3);
    let kinds = [
        TopologyKind::FullyConnected,
        TopologyKind::RandomUniform {
            edge_probability: 0.1,
        },
        TopologyKind::RandomUniform {
            edge_probability: 0.3,
        },
        TopologyKind::RandomUniform {
            edge_probability: 0.6,
        },
    ];
    let solver = MisSolver::default();
    (0..500)
        .map(|i| {
            let n = rng.gen_range(1..=12);
            let m = rng.gen_range(1..=20);
            let erasure = rng.gen_range(0.1..0.5);
            let (s, c) = random_instance(n, m, kinds[i % kinds.len()], erasure, rng.gen());
            let b = completion_bounds(&s, &c).unwrap();
            let run = |k: SchedulerKind| k.run(&s, &c, &solver).unwrap();
            let opt = run(SchedulerKind::OptIdnc);
            let cellular = run(SchedulerKind::CellularOnlyIdnc);
            // Every state either joint or cellular-only scheduling visits:
            // the joint graph's independence number dominates the cellular
            // graph's, which dominates the single uncoded packet.
            let mut slot_dominance = true;
            for traj in [&opt, &cellular] {
                let mut state = s.clone();
                for slot in &traj.slots {
                    let two = build_two_layer(&state, &c).unwrap();
                    let hi = build_higher_layer(&state);
                    let a2 = independence_number(&two);
                    let a1 = independence_number(&hi);
                    slot_dominance &= a2 >= a1 && a1 >= 1;
                    state = slot.outcome.new_state.clone();
                }
            }
            (
                n,
                m,
                PairedRun {
                    lower: b.lower,
                    upper: b.upper,
                    opt: opt.completion_time,
                    netcam: run(SchedulerKind::NetcamWp).completion_time,
                    uncoded: run(SchedulerKind::UncodedBs).completion_time,
                    cellular: cellular.completion_time,
                    slot_dominance,
                },
            )
        })
        .collect()
}

fn completion_bounds_hold(runs: &[(usize, usize, PairedRun)]) -> Verdict {
    let below = runs.iter().filter(|(_, _, r)| r.netcam < r.lower).count();
    let above: Vec<_> = runs.iter().filter(|(_, _, r)| r.netcam > r.upper).collect();
    let opt_above = runs.iter().filter(|(_, _, r)| r.opt > r.upper).count();
    let worst = above
        .iter()
        .max_by_key(|(_, _, r)| r.netcam - r.upper)
        .map(|(n, m, r)| format!("; worst N={n} M={m} T={} upper={}", r.netcam, r.upper))
        .unwrap_or_default();
    verdict(
        below == 0 && above.is_empty(),
        format!(
            "{} instances: {below} below lower, {} above upper (opt-idnc above upper on {opt_above}){worst}",
            runs.len(),
            above.len()
        ),
    )
}

fn scheduler_dominance(runs: &[(usize, usize, PairedRun)]) -> Verdict {
    let total = runs.len();
    let slot_ok = runs.iter().filter(|(_, _, r)| r.slot_dominance).count();
    let ordered = runs
        .iter()
        .filter(|(_, _, r)| r.opt <= r.cellular && r.cellular <= r.uncoded)
        .count();
    let inversions: Vec<String> = runs
        .iter()
        .filter(|(_, _, r)| !(r.opt <= r.cellular && r.cellular <= r.uncoded))
        .take(5)
        .map(|(n, m, r)| {
            format!(
                "N={n} M={m} opt={} cell={} unc={}",
                r.opt, r.cellular, r.uncoded
            )
        })
        .collect();
    let pass = slot_ok == total && ordered * 100 >= total * 99;
    let mut detail =
        format!("per-slot dominance {slot_ok}/{total}, end-to-end ordering {ordered}/{total}");
    if !inversions.is_empty() {
        detail.push_str(&format!("; inversions: {}", inversions.join(", ")));
    }
    verdict(pass, detail)
}

fn trend_config(
    sweep: SweepVariable,
    values: Vec<usize>,
    fixed: usize,
    topology: TopologyKind,
) -> ExperimentConfig {
    ExperimentConfig {
        sweep,
        values,
        fixed,
        trials: 500,
        schedulers: vec![SchedulerKind::OptIdnc, SchedulerKind::NetcamWp],
        master_seed: 0,
        topology,
        erasure: ErasureConfig {
            erasure_probability: 0.25,
        },
        vertex_ceiling: DEFAULT_VERTEX_CEILING,
    }
}

fn trends() -> Verdict {
    let full = run_trials(&trend_config(
        SweepVariable::NPackets,
        vec![10, 15, 20, 25, 30],
        10,
        TopologyKind::FullyConnected,
    ))
    .unwrap();
    let mut gap_ok = true;
    let mut gaps = Vec::new();
    for &m in &full.config.values {
        let opt = full.row(m, SchedulerKind::OptIdnc).unwrap();
        let heur = full.row(m, SchedulerKind::NetcamWp).unwrap();
        let (o, h) = (
            opt.mean_t.unwrap_or(f64::NAN),
            heur.mean_t.unwrap_or(f64::NAN),
        );
        let ok = opt.excluded == 0 && heur.excluded == 0 && h < 1.10 * o;
        gap_ok &= ok;
        gaps.push(format!("M={m}: {:+.2}%", (h / o - 1.0) * 100.0));
    }

    let inter = run_trials(&trend_config(
        SweepVariable::NUsers,
        vec![6, 8, 10, 12],
        25,
        TopologyKind::default(),
    ))
    .unwrap();
    let mut trend_ok = true;
    let mut series = Vec::new();
    for kind in [SchedulerKind::OptIdnc, SchedulerKind::NetcamWp] {
        let means: Vec<f64> = inter
            .config
            .values
            .iter()
            .map(|&n| inter.row(n, kind).unwrap().mean_t.unwrap_or(f64::NAN))
            .collect();
        trend_ok &= means.windows(2).all(|w| w[1] >= w[0]);
        let shown: Vec<String> = means.iter().map(|x| format!("{x:.3}")).collect();
        series.push(format!("{kind} [{}]", shown.join(", ")));
    }
    verdict(
        gap_ok && trend_ok,
        format!(
            "heuristic vs optimal gap {}; intermittent mean T over N=6,8,10,12: {}",
            gaps.join(" "),
            series.join("; ")
        ),
    )
}

fn bench_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(
        &cfg,
        "sweep = \"n_users\"\nvalues = [4, 6, 8]\nfixed = 10\ntrials = 60\nmaster_seed = 42\n\
         [topology]\nkind = \"random_uniform\"\nedge_probability = 0.3\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "4"].iter().enumerate() {
        let csv = dir.path().join(format!("run{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_d2d-idnc"))
            .args([
                "bench",
                "--config",
                cfg.to_str().unwrap(),
                "--out-csv",
                csv.to_str().unwrap(),
                "--jobs",
                jobs,
            ])
            .status()
            .unwrap();
        if !status.success() {
            return verdict(false, format!("bench exited with {status}"));
        }
        outputs.push(std::fs::read(csv).unwrap());
    }
    verdict(
        outputs[0] == outputs[1],
        format!("{} bytes per run, --jobs 1 vs --jobs 4", outputs[0].len()),
    )
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(u32, &str, Duration, Verdict)> = Vec::new();

    let timed = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        (id, name, t.elapsed(), v)
    };

    results.push(timed(
        1,
        "example 1 completion times",
        &mut example1_completion_times,
    ));
    results.push(timed(
        2,
        "example 2 graph reproduction",
        &mut example2_graphs,
    ));
    results.push(timed(3, "MIS oracle equivalence", &mut mis_oracle));
    results.push(timed(
        4,
        "independent sets vs feasible plans",
        &mut sets_match_plans,
    ));
    let t = Instant::now();
    let shared = paired_instances();
    let setup = t.elapsed();
    let mut r5 = timed(5, "heuristic completion bounds", &mut || {
        completion_bounds_hold(&shared)
    });
    r5.2 += setup;
    results.push(r5);
    results.push(timed(6, "scheduler dominance", &mut || {
        scheduler_dominance(&shared)
    }));
    results.push(timed(7, "trend reproduction", &mut trends));
    results.push(timed(8, "bench determinism", &mut bench_determinism));

    let limits = [1.0, 1.0, 60.0, 120.0, 120.0, 120.0, 600.0, 600.0];
    let mut failed = 0;
    for (id, name, elapsed, v) in &results {
        let limit = limits[*id as usize - 1];
        let in_time = elapsed.as_secs_f64() < limit;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id} [{name}]: {} ({}; {:.2}s of {limit:.0}s)",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
