//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p zonecut --test acceptance`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use zonecut::fitness::{count_acls, count_firewalls, ConstraintParams, Objective, UtilityProblem};
use zonecut::fwgen::{audit_counts, emit_utility, parse_config_text, render_config_text, Addressing, FlowTable};
use zonecut::grid::{compute_lodf, Bus, GridModel, Line, Weights};
use zonecut::nsga2::{self, bitflip_mutation, crowding_distance, non_dominated_sort, GaParams, Individual, MutationRate, Problem};
use zonecut::pipeline::{emit_solution, optimize_system, write_emit, write_results, RunConfig};
use zonecut::reporting::{compare_baselines, spearman, write_report, Picker, Report};
use zonecut::system::{SynthSpec, TopologyShape};
use zonecut::topology::{decompose, Chromosome, Clustering, Node, NodeKind, SubstationProfile, UtilityGraph};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn sub_id(i: usize) -> String {
    format!("S{i:02}")
}

/// UCC plus `n - 1` substations with the given edges over node indices
/// (index 0 is the UCC).
fn graph_from(n: usize, pairs: &[(usize, usize)], rng: &mut impl Rng) -> UtilityGraph {
    let id = |i: usize| if i == 0 { "UCC".to_string() } else { sub_id(i) };
    let mut nodes = vec![Node { id: id(0), kind: NodeKind::Ucc, profile: None }];
    for i in 1..n {
        let profile = SubstationProfile::new(rng.gen_range(0..6), rng.gen_range(0..5), rng.gen_range(0..4), rng.gen_range(0..3));
        nodes.push(Node { id: id(i), kind: NodeKind::Substation, profile: Some(profile) });
    }
    let edges: Vec<(String, String)> = pairs.iter().map(|&(a, b)| (id(a), id(b))).collect();
    UtilityGraph::new("U1", nodes, &edges).expect("valid graph")
}

fn connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in pairs {
            for (x, y) in [(a, b), (b, a)] {
                if x == v && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Random spanning tree plus extra distinct edges, `edges` in total.
fn random_pairs(n: usize, edges: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut set = BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        set.insert((u, v));
    }
    let max = n * (n - 1) / 2;
    while set.len() < edges.min(max) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    set.into_iter().collect()
}

// ---------------------------------------------------------------- C1

fn reference_rows() -> Outcome {
    let rows = [(8, 6, 12, 101), (7, 9, 14, 117), (6, 12, 16, 133), (7, 15, 20, 165), (2, 18, 18, 149), (15, 21, 34, 277)];
    let mut got = Vec::new();
    for (n1, n_sg, f1, f2) in rows {
        let mut subgraphs = vec![(0..n1).collect::<Vec<usize>>()];
        subgraphs.extend((0..n_sg - 1).map(|i| vec![n1 + i]));
        let c = Clustering { subgraphs, m_u: 1 };
        let pair = (count_firewalls(&c).map_err(|e| e.to_string())?, count_acls(&c).map_err(|e| e.to_string())?);
        check(pair == (f1, f2), format!("N_1={n1}, N_sg={n_sg}: got {pair:?}, want ({f1},{f2})"))?;
        got.push(format!("({},{})", pair.0, pair.1));
    }
    Ok(got.join(" "))
}

// ---------------------------------------------------------------- C2

fn acl_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_sg = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=30);
        let max_edges = (n * (n - 1) / 2).min(3 * n);
        let e = rng.gen_range(n - 1..=max_edges);
        let g = graph_from(n, &random_pairs(n, e, &mut rng), &mut rng);
        let density = rng.gen_range(0.0..=1.0);
        let c = Chromosome::from_bits((0..g.edge_count()).map(|_| rng.gen_bool(density)).collect());
        let cl = decompose(&g, &c).map_err(|e| e.to_string())?;
        let f1 = count_firewalls(&cl).map_err(|e| e.to_string())?;
        let f2 = count_acls(&cl).map_err(|e| e.to_string())?;
        check(f2 == 8 * f1 + 5, format!("F1={f1} F2={f2} on chromosome {c}"))?;
        max_sg = max_sg.max(cl.n_sg());
    }
    Ok(format!("10000 clusterings, n_sg up to {max_sg}"))
}

// ---------------------------------------------------------------- C3

fn emission_matches(g: &UtilityGraph, cl: &Clustering, render: bool) -> Result<(), String> {
    let cfgs = emit_utility(g, cl, &Addressing::new(1).unwrap(), &FlowTable::builtin()).map_err(|e| e.to_string())?;
    let audit = audit_counts(&cfgs, cl).map_err(|e| e.to_string())?;
    let f1 = count_firewalls(cl).unwrap();
    let f2 = count_acls(cl).unwrap();
    check(audit.clean && audit.mismatches.is_empty(), format!("audit not clean: {audit:?}"))?;
    let substation_side = cfgs.len() as u32 - 1;
    let lines: u32 = cfgs.iter().map(|c| c.acl_entries.len() as u32).sum();
    check(substation_side == f1 && lines == f2, format!("emitted ({substation_side},{lines}) vs ({f1},{f2})"))?;
    if render {
        let parsed: usize = cfgs
            .iter()
            .map(|c| render_config_text(c).map(|t| parse_config_text(&t).access_list_lines))
            .sum::<Result<usize, _>>()
            .map_err(|e| e.to_string())?;
        check(parsed as u32 == f2, format!("rendered {parsed} access-list lines vs {f2}"))?;
    }
    Ok(())
}

/// Restricted growth strings: every set partition of `n` elements.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut a = vec![0usize; n];
    fn rec(i: usize, max: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == a.len() {
            out.push(a.clone());
            return;
        }
        for v in 0..=max + 1 {
            a[i] = v;
            rec(i + 1, max.max(v), a, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut a, &mut out);
    }
    out
}

fn emission_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // every clustering any graph of <= 8 nodes can induce is a set
    // partition of its nodes, all of which K_n realizes
    let mut partitions = 0usize;
    for n in 2..=8 {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let g = graph_from(n, &pairs, &mut rng);
        let parts = set_partitions(n);
        parts.par_iter().try_for_each(|p| {
            let k = p.iter().max().unwrap() + 1;
            let groups: Vec<Vec<String>> = (0..k)
                .map(|b| (0..n).filter(|&v| p[v] == b).map(|v| g.nodes()[v].id.clone()).collect())
                .collect();
            let cl = Clustering::from_ids(&g, &groups).map_err(|e| e.to_string())?;
            emission_matches(&g, &cl, true)
        })?;
        partitions += parts.len();
    }

    // every connected graph on <= 5 nodes, every chromosome
    let mut decoded = 0usize;
    for n in 2..=5 {
        let all: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for mask in 1u32..(1 << all.len()) {
            let pairs: Vec<_> = all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
            if !connected(n, &pairs) {
                continue;
            }
            let g = graph_from(n, &pairs, &mut rng);
            let e = g.edge_count();
            (0..1u64 << e).into_par_iter().try_for_each(|m| {
                let cl = decompose(&g, &Chromosome::from_mask(m, e)).map_err(|e| e.to_string())?;
                emission_matches(&g, &cl, false)
            })?;
            decoded += 1 << e;
        }
    }

    // random graphs on 6-8 nodes, every chromosome
    for _ in 0..24 {
        let n = rng.gen_range(6..=8);
        let e = rng.gen_range(n - 1..=12);
        let g = graph_from(n, &random_pairs(n, e, &mut rng), &mut rng);
        let e = g.edge_count();
        (0..1u64 << e).into_par_iter().try_for_each(|m| {
            let cl = decompose(&g, &Chromosome::from_mask(m, e)).map_err(|e| e.to_string())?;
            emission_matches(&g, &cl, m % 64 == 0)
        })?;
        decoded += 1 << e;
    }
    Ok(format!("{partitions} set partitions (n<=8) + {decoded} graph/chromosome pairs, zero mismatches"))
}

// ---------------------------------------------------------------- C4

fn random_grid(subs: &[String], rng: &mut impl Rng) -> GridModel {
    let n = subs.len();
    let buses: Vec<Bus> = (0..n).map(|i| Bus { id: format!("B{i}"), slack: i == 0 }).collect();
    let mut pairs = random_pairs(n, n + rng.gen_range(0..=n), rng);
    // a duplicate line keeps some outages non-islanding
    pairs.push(pairs[0]);
    let lines = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| Line {
            id: format!("L{i}"),
            from: format!("B{a}"),
            to: format!("B{b}"),
            x: Some(rng.gen_range(0.05..1.0)),
            from_sub: subs[a].clone(),
            to_sub: subs[b].clone(),
        })
        .collect();
    GridModel::new(buses, lines).expect("valid grid")
}

type Point = Vec<u64>;

fn key(v: &[f64]) -> Point {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Feasible Pareto set of all `2^E` chromosomes, by pairwise comparison.
fn brute_front(p: &UtilityProblem) -> BTreeSet<Point> {
    let e = p.chromosome_len();
    let feasible: Vec<Vec<f64>> = (0..1u64 << e)
        .into_par_iter()
        .map(|m| p.evaluate(&Chromosome::from_mask(m, e)))
        .filter(|f| f.violation == 0.0)
        .map(|f| f.objectives)
        .collect();
    let weakly_better = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y) && a != b;
    feasible
        .par_iter()
        .filter(|x| !feasible.iter().any(|y| weakly_better(y, x)))
        .map(|x| key(x))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let subsets: [&[Objective]; 4] = [
        &[Objective::F1, Objective::F2],
        &[Objective::F1, Objective::F3],
        &[Objective::F3, Objective::F4],
        &Objective::ALL,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut graphs = 0;
    let mut largest = 0;
    let mut failures = Vec::new();
    while graphs < 50 {
        let n = rng.gen_range(4..=9);
        let e = rng.gen_range(n - 1..=12);
        let g = graph_from(n, &random_pairs(n, e, &mut rng), &mut rng);
        let subs: Vec<String> = g.substations().map(|v| g.nodes()[v].id.clone()).collect();
        let table = compute_lodf(&random_grid(&subs, &mut rng)).map_err(|e| e.to_string())?;
        for (s, objs) in subsets.iter().enumerate() {
            let p = UtilityProblem::new(g.clone(), &table, Weights::default(), ConstraintParams::default(), objs.to_vec())
                .map_err(|e| e.to_string())?;
            let truth = brute_front(&p);
            let params = GaParams { population_size: 200, max_generations: 100, seed: graphs * 10 + s as u64, ..GaParams::default() };
            let front = nsga2::run(&p, &params).map_err(|e| e.to_string())?;
            let got: BTreeSet<Point> = front.members.iter().filter(|m| m.is_feasible()).map(|m| key(&m.objectives)).collect();
            largest = largest.max(truth.len());
            if got != truth {
                failures.push(format!(
                    "graph {graphs} ({} edges) {objs:?}: engine {} points, truth {}, missing {}, extra {}",
                    g.edge_count(),
                    got.len(),
                    truth.len(),
                    truth.difference(&got).count(),
                    got.difference(&truth).count()
                ));
            }
        }
        graphs += 1;
    }
    check(failures.is_empty(), failures.join("; "))?;
    Ok(format!("{graphs} graphs x 4 objective subsets, largest true front {largest}"))
}

// ---------------------------------------------------------------- C5

fn oracle_dominates(a: &Individual, b: &Individual) -> bool {
    let fa = a.violation == 0.0;
    let fb = b.violation == 0.0;
    if fa != fb {
        return fa;
    }
    if !fa {
        return a.violation < b.violation;
    }
    let no_worse = (0..a.objectives.len()).all(|i| a.objectives[i] <= b.objectives[i]);
    let better = (0..a.objectives.len()).any(|i| a.objectives[i] < b.objectives[i]);
    no_worse && better
}

fn oracle_fronts(pop: &[Individual]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..pop.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> =
            remaining.iter().copied().filter(|&i| !remaining.iter().any(|&j| oracle_dominates(&pop[j], &pop[i]))).collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn oracle_crowding(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut d = vec![0.0; n];
    for m in 0..points[0].len() {
        // stable insertion sort: equal values keep their positions
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 1..n {
            let mut j = i;
            while j > 0 && points[idx[j - 1]][m] > points[idx[j]][m] {
                idx.swap(j - 1, j);
                j -= 1;
            }
        }
        let span = points[idx[n - 1]][m] - points[idx[0]][m];
        if span == 0.0 {
            continue;
        }
        d[idx[0]] = f64::INFINITY;
        d[idx[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            if d[idx[w]] != f64::INFINITY {
                d[idx[w]] += (points[idx[w + 1]][m] - points[idx[w - 1]][m]) / span;
            }
        }
    }
    d
}

fn sort_and_crowding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fronts_seen = 0;
    for trial in 0..1000 {
        let size = rng.gen_range(1..=50);
        let dim = rng.gen_range(2..=4);
        let pop: Vec<Individual> = (0..size)
            .map(|_| {
                let objectives = (0..dim).map(|_| f64::from(rng.gen_range(0..8)) * 0.5).collect();
                let violation = if rng.gen_bool(0.7) { 0.0 } else { f64::from(rng.gen_range(1..4)) };
                Individual::new(Chromosome::zeros(1), objectives, violation)
            })
            .collect();
        let got = non_dominated_sort(&pop).map_err(|e| e.to_string())?;
        let want = oracle_fronts(&pop);
        check(got == want, format!("population {trial}: fronts differ"))?;
        for front in &got {
            let pts: Vec<Vec<f64>> = front.iter().map(|&i| pop[i].objectives.clone()).collect();
            let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
            let cd = crowding_distance(&refs);
            check(cd == oracle_crowding(&pts), format!("population {trial}: crowding differs"))?;
            fronts_seen += 1;
        }
    }
    Ok(format!("1000 populations, {fronts_seen} fronts, exact match"))
}

// ---------------------------------------------------------------- C6

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
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

/// DC line flows for injection `p`, skipping line `skip`; `None` if the
/// remaining network is disconnected.
fn dc_flows(n: usize, lines: &[(usize, usize, f64)], slack: usize, p: &[f64], skip: Option<usize>) -> Option<Vec<f64>> {
    let active: Vec<(usize, usize)> =
        lines.iter().enumerate().filter(|&(i, _)| Some(i) != skip).map(|(_, &(a, b, _))| (a, b)).collect();
    if !connected_buses(n, &active) {
        return None;
    }
    let others: Vec<usize> = (0..n).filter(|&b| b != slack).collect();
    let pos = |b: usize| others.iter().position(|&o| o == b);
    let mut bm = vec![vec![0.0; n - 1]; n - 1];
    for (i, &(a, b, x)) in lines.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let y = 1.0 / x;
        if let Some(i) = pos(a) {
            bm[i][i] += y;
        }
        if let Some(j) = pos(b) {
            bm[j][j] += y;
        }
        if let (Some(i), Some(j)) = (pos(a), pos(b)) {
            bm[i][j] -= y;
            bm[j][i] -= y;
        }
    }
    let rhs: Vec<f64> = others.iter().map(|&b| p[b]).collect();
    let theta_r = solve(bm, rhs);
    let theta = |b: usize| pos(b).map_or(0.0, |i| theta_r[i]);
    Some(lines.iter().map(|&(a, b, x)| (theta(a) - theta(b)) / x).collect())
}

fn connected_buses(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for &(a, b) in pairs {
            if seen[a] != seen[b] {
                seen[a] = true;
                seen[b] = true;
                changed = true;
            }
        }
    }
    seen.iter().all(|&s| s)
}

fn lodf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut worst_slack: f64 = 0.0;
    let mut checked = 0;
    let mut islands = 0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let subs: Vec<String> = (0..n).map(sub_id).collect();
        let grid = random_grid(&subs, &mut rng);
        let raw: Vec<(usize, usize, f64)> = grid
            .lines()
            .iter()
            .map(|l| (l.from[1..].parse().unwrap(), l.to[1..].parse().unwrap(), l.x.unwrap()))
            .collect();
        let table = compute_lodf(&grid).map_err(|e| e.to_string())?;
        let m = raw.len();
        for k in 0..m {
            let mut p = vec![0.0; n];
            p[raw[k].0] += 1.0;
            p[raw[k].1] -= 1.0;
            let before = dc_flows(n, &raw, grid.slack(), &p, None).unwrap();
            match dc_flows(n, &raw, grid.slack(), &p, Some(k)) {
                None => {
                    islands += 1;
                    check(table.outage(k).is_err(), format!("line {k} islands but was not flagged"))?;
                }
                Some(after) => {
                    for l in (0..m).filter(|&l| l != k) {
                        let want = (after[l] - before[l]) / before[k];
                        let got = table.factor(l, k).map_err(|e| e.to_string())?;
                        worst = worst.max((got - want).abs());
                        checked += 1;
                    }
                }
            }
        }
        for s in 0..n {
            let other = compute_lodf(&grid.with_slack(s)).map_err(|e| e.to_string())?;
            for (a, b) in table.all_factors().iter().zip(other.all_factors()) {
                worst_slack = worst_slack.max((a - b).abs());
            }
        }
    }
    check(worst <= 1e-6, format!("max deviation {worst:e} > 1e-6"))?;
    check(worst_slack <= 1e-9, format!("slack dependence {worst_slack:e} > 1e-9"))?;
    Ok(format!("{checked} factors, max error {worst:.1e}, {islands} islanding outages, slack spread {worst_slack:.1e}"))
}

// ---------------------------------------------------------------- C7

fn fixture() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/example37.json")
}

fn trade_off() -> Outcome {
    let config = RunConfig { topology: Some(fixture()), ..RunConfig::default() };
    let system = config.resolve_system().map_err(|e| e.to_string())?;
    let docs = optimize_system(&system, &config).map_err(|e| e.to_string())?;
    let sols = &docs[0].solutions;
    let n_sg: Vec<f64> = sols.iter().map(|s| s.n_sg as f64).collect();
    let f1: Vec<f64> = sols.iter().map(|s| f64::from(s.objectives.f1)).collect();
    let f3: Vec<f64> = sols.iter().map(|s| s.objectives.f3).collect();
    let r3 = spearman(&n_sg, &f3).ok_or("n_sg or F3 constant across the front")?;
    let r1 = spearman(&n_sg, &f1).ok_or("n_sg or F1 constant across the front")?;
    check(r3 > 0.0 && r1 > 0.0, format!("rho(n_sg,F3)={r3:.3} rho(n_sg,F1)={r1:.3}"))?;
    Ok(format!("{} solutions, rho(n_sg,F3)={r3:.3}, rho(n_sg,F1)={r1:.3}", sols.len()))
}

// ---------------------------------------------------------------- C8

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn full_run(config: &RunConfig, dir: &Path) -> Result<(), String> {
    let system = config.resolve_system().map_err(|e| e.to_string())?;
    let docs = optimize_system(&system, config).map_err(|e| e.to_string())?;
    write_results(&dir.join("results"), &docs).map_err(|e| e.to_string())?;
    for d in &docs {
        let out = emit_solution(d, &Picker::Knee, &FlowTable::builtin()).map_err(|e| e.to_string())?;
        write_emit(&dir.join("configs").join(&d.utility), &out).map_err(|e| e.to_string())?;
    }
    let report = Report::from_results(&docs, &Picker::MinCost).map_err(|e| e.to_string())?;
    write_report(&dir.join("report"), &report).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let config = RunConfig {
        synth: Some(SynthSpec { utilities: 3, subs: 12, topology: TopologyShape::Hybrid, edge_prob: 0.2, seed: 11 }),
        ga: GaParams { population_size: 60, max_generations: 40, seed: 5, ..GaParams::default() },
        ..RunConfig::default()
    };
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    full_run(&config, a.path())?;
    let serial = RunConfig { parallelism: Some(1), ..config.clone() };
    full_run(&serial, b.path())?;
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    check(!sa.is_empty() && sa == sb, "outputs differ between runs")?;
    let bytes: usize = sa.iter().map(|(_, b)| b.len()).sum();
    Ok(format!("{} files, {bytes} bytes identical (parallel vs serial)", sa.len()))
}

// ---------------------------------------------------------------- C9

fn baseline_direction() -> Outcome {
    let config = RunConfig {
        synth: Some(SynthSpec { utilities: 10, subs: 15, topology: TopologyShape::Hybrid, edge_prob: 0.15, seed: 7 }),
        ..RunConfig::default()
    };
    let system = config.resolve_system().map_err(|e| e.to_string())?;
    let docs = optimize_system(&system, &config).map_err(|e| e.to_string())?;
    let c = compare_baselines(&system.utilities, &docs, &Picker::MinCost).map_err(|e| e.to_string())?;
    check(
        c.clustered_f1 <= c.hybrid_unclustered_f1 && c.clustered_f2 <= c.hybrid_unclustered_f2,
        format!("{c:?}"),
    )?;
    Ok(format!(
        "F1 {} -> {} ({:.1}%), F2 {} -> {} ({:.1}%)",
        c.hybrid_unclustered_f1,
        c.clustered_f1,
        c.f1_reduction_vs_hybrid_pct,
        c.hybrid_unclustered_f2,
        c.clustered_f2,
        c.f2_reduction_vs_hybrid_pct
    ))
}

// ---------------------------------------------------------------- C10

fn mutation_stats() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let c = Chromosome::zeros(100);
    let p = MutationRate::INVERSE_LENGTH.probability(100);
    let flips: usize = (0..10_000).map(|_| bitflip_mutation(&c, p, &mut rng).count_ones()).sum();
    let mean = flips as f64 / 10_000.0;
    check((mean - 1.0).abs() <= 0.1, format!("mean flips {mean:.4}"))?;
    Ok(format!("mean flips {mean:.4}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 10] = [
        ("reference-count-rows", reference_rows, Some(Duration::from_secs(1))),
        ("acl-identity-f2-eq-8f1-plus-5", acl_identity, None),
        ("emission-analytic-identity", emission_identity, Some(Duration::from_secs(120))),
        ("nsga2-oracle-equivalence", oracle_equivalence, Some(Duration::from_secs(300))),
        ("sort-and-crowding-oracles", sort_and_crowding, None),
        ("lodf-oracle-and-slack-invariance", lodf_oracle, None),
        ("trade-off-direction-37-substations", trade_off, None),
        ("determinism-byte-identical", determinism, None),
        ("baseline-direction-10-utilities", baseline_direction, None),
        ("mutation-statistics", mutation_stats, None),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
