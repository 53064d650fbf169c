//! Acceptance gate. Prints one PASS or FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{binary_count, bundled, corpus, data_dir, enumerate, Instance};
use gridshed::milp::{BackendRegistry, MilpBackend, ReferenceBackend, SolveOptions};
use gridshed::mld::{
    area_heuristic, prune_dead_islands, run_heuristic_pipeline, solve_mld, transmission_heuristic,
    ForcedOffSet, HeuristicKind, DEAD_ISLAND_MW,
};
use gridshed::network::ComponentRef;
use gridshed::ops::{evaluate_plan, solve_ops, OpsConfig, ShutoffPlan};
use gridshed::pareto::{
    alpha_grid, standard_operation, sweep, threshold_grid, Method, TradeoffPoint,
};
use gridshed::risk::area_risk_total;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;
const AREA_THRESHOLD: f64 = 30.0;
const ORACLE_ALPHAS: [f64; 5] = [0.0, 0.1, 0.5, 0.9, 1.0];
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const SOLVE_BUDGET: Duration = Duration::from_secs(5);

struct Verdict {
    name: &'static str,
    failures: Vec<String>,
    detail: String,
}

impl Verdict {
    fn new(name: &'static str) -> Self {
        Verdict {
            name,
            failures: Vec::new(),
            detail: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn print(&self) -> bool {
        let pass = self.failures.is_empty();
        println!(
            "{} {}: {}",
            if pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        );
        for f in self.failures.iter().take(10) {
            println!("    {f}");
        }
        if self.failures.len() > 10 {
            println!("    ... {} more", self.failures.len() - 10);
        }
        pass
    }
}

/// Every plan produced along the way, labelled for the audit.
#[derive(Default)]
struct Plans(Vec<(String, usize, ShutoffPlan)>);

impl Plans {
    fn add(&mut self, label: String, instance: usize, plan: &ShutoffPlan) {
        self.0.push((label, instance, plan.clone()));
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn tight(alpha: f64) -> OpsConfig {
    OpsConfig::new(alpha).with_options(SolveOptions::tight())
}

fn oracle_equivalence(
    corpus: &[Instance],
    plans: &mut Plans,
    solve_times: &mut Vec<(String, Duration)>,
) -> Verdict {
    let mut v = Verdict::new("oracle equivalence");
    let start = Instant::now();
    let small: Vec<usize> = (0..corpus.len())
        .filter(|&i| binary_count(&corpus[i].network) <= 12)
        .collect();
    let names: Vec<&str> = small.iter().map(|&i| corpus[i].name.as_str()).collect();
    v.check(small.len() >= 10, || {
        format!("only {} networks with at most 12 binaries", small.len())
    });
    for required in ["triangle", "five_bus"] {
        v.check(names.contains(&required), || {
            format!("{required} missing from the corpus")
        });
    }
    let mut worst: f64 = 0.0;
    let mut solves = 0;
    for &i in &small {
        let inst = &corpus[i];
        for alpha in ORACLE_ALPHAS {
            let (plan, t) =
                timed(|| solve_ops(&inst.network, &inst.risk, &tight(alpha), &ReferenceBackend));
            solve_times.push((format!("{} ops α={alpha}", inst.name), t));
            solves += 1;
            let oracle = enumerate(&inst.network, &inst.risk, alpha, &BTreeSet::new());
            match plan {
                Ok(plan) => {
                    let gap = (plan.objective - oracle.objective).abs();
                    worst = worst.max(gap);
                    v.check(gap <= TOL, || {
                        format!(
                            "{} ops α={alpha}: solver {} enumeration {}",
                            inst.name, plan.objective, oracle.objective
                        )
                    });
                    plans.add(format!("{} ops α={alpha}", inst.name), i, &plan);
                }
                Err(e) => v.check(false, || format!("{} ops α={alpha}: {e}", inst.name)),
            }
        }
        let first_line = inst.network.lines()[0].id;
        for forced in [BTreeSet::new(), BTreeSet::from([('l', first_line)])] {
            let set = ForcedOffSet::new(
                &inst.network,
                forced.iter().map(|&(_, id)| ComponentRef::line(id)),
            )
            .unwrap();
            let (plan, t) = timed(|| {
                solve_mld(
                    &inst.network,
                    &inst.risk,
                    &set,
                    &ReferenceBackend,
                    &SolveOptions::tight(),
                )
            });
            solve_times.push((format!("{} mld {forced:?}", inst.name), t));
            solves += 1;
            let oracle = enumerate(&inst.network, &inst.risk, 0.0, &forced);
            match plan {
                Ok(plan) => {
                    let gap = (plan.objective - oracle.objective).abs();
                    worst = worst.max(gap);
                    v.check(gap <= TOL, || {
                        format!(
                            "{} mld {forced:?}: solver {} enumeration {}",
                            inst.name, plan.objective, oracle.objective
                        )
                    });
                    plans.add(format!("{} mld {forced:?}", inst.name), i, &plan);
                }
                Err(e) => v.check(false, || format!("{} mld {forced:?}: {e}", inst.name)),
            }
        }
    }
    let elapsed = start.elapsed();
    v.check(elapsed < ORACLE_BUDGET, || {
        format!("took {elapsed:.1?}, budget {ORACLE_BUDGET:?}")
    });
    v.detail = format!(
        "{} networks, {solves} solves, max |solver - enumeration| {worst:.2e}, {:.1} s including enumeration",
        small.len(),
        elapsed.as_secs_f64()
    );
    v
}

fn alpha_endpoints(
    corpus: &[Instance],
    plans: &mut Plans,
    solve_times: &mut Vec<(String, Duration)>,
) -> Verdict {
    let mut v = Verdict::new("alpha endpoints");
    let mut worst: f64 = 0.0;
    let mut strict = 0;
    for (i, inst) in corpus.iter().enumerate() {
        let (zero, t0) =
            timed(|| solve_ops(&inst.network, &inst.risk, &tight(0.0), &ReferenceBackend));
        let (mld, t1) = timed(|| {
            solve_mld(
                &inst.network,
                &inst.risk,
                &ForcedOffSet::empty(),
                &ReferenceBackend,
                &SolveOptions::tight(),
            )
        });
        let (one, t2) =
            timed(|| solve_ops(&inst.network, &inst.risk, &tight(1.0), &ReferenceBackend));
        solve_times.push((format!("{} ops α=0", inst.name), t0));
        solve_times.push((format!("{} mld", inst.name), t1));
        solve_times.push((format!("{} ops α=1", inst.name), t2));
        let (zero, mld, one) = match (zero, mld, one) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            (a, b, c) => {
                v.check(false, || {
                    format!("{}: {:?} {:?} {:?}", inst.name, a.err(), b.err(), c.err())
                });
                continue;
            }
        };
        let gap = (zero.d_tot - mld.d_tot).abs();
        worst = worst.max(gap);
        v.check(gap <= TOL, || {
            format!(
                "{}: α=0 serves {} MW, unrestricted delivery {} MW",
                inst.name, zero.d_tot, mld.d_tot
            )
        });
        let positive = inst.risk.entries().iter().all(|e| e.value > 0.0);
        if positive {
            strict += 1;
            v.check(one.r_fire <= TOL && one.d_tot <= TOL, || {
                format!(
                    "{}: α=1 leaves r_fire {} and d_tot {}",
                    inst.name, one.r_fire, one.d_tot
                )
            });
        }
        plans.add(format!("{} ops α=0", inst.name), i, &zero);
        plans.add(format!("{} mld", inst.name), i, &mld);
        plans.add(format!("{} ops α=1", inst.name), i, &one);
    }
    v.detail = format!(
        "{} networks, max |α=0 load - delivery| {worst:.2e} MW, {strict} all-positive networks de-energize at α=1",
        corpus.len()
    );
    v
}

fn performance(corpus: &[Instance], solve_times: &[(String, Duration)]) -> Verdict {
    let mut v = Verdict::new("reference backend performance");
    let eligible: BTreeSet<&str> = corpus
        .iter()
        .filter(|i| i.network.buses().len() <= 20)
        .map(|i| i.name.as_str())
        .collect();
    let mut slowest = (String::new(), Duration::ZERO);
    let mut counted = 0;
    for (label, t) in solve_times {
        let name = label.split(' ').next().unwrap();
        if !eligible.contains(name) {
            continue;
        }
        counted += 1;
        v.check(*t < SOLVE_BUDGET, || format!("{label} took {t:.2?}"));
        if *t > slowest.1 {
            slowest = (label.clone(), *t);
        }
    }
    v.check(counted > 0, || "no eligible solves".into());
    v.detail = format!(
        "{counted} solves on {} networks up to 20 buses, slowest {} at {:.3} s",
        eligible.len(),
        slowest.0,
        slowest.1.as_secs_f64()
    );
    v
}

struct BundledRun {
    inst: Instance,
    standard: ShutoffPlan,
    ops: Vec<TradeoffPoint>,
    transmission: Vec<TradeoffPoint>,
    area: TradeoffPoint,
    elapsed: Duration,
}

fn bundled_run() -> Result<BundledRun, String> {
    let inst = bundled();
    let name = BackendRegistry::default_name();
    let backend = BackendRegistry::with_defaults()
        .get(name)
        .map_err(|e| e.to_string())?;
    let backend: &dyn MilpBackend = backend.as_ref();
    let options = SolveOptions::tight();
    let start = Instant::now();
    let standard = standard_operation(&inst.network, &inst.risk, backend, &options)
        .map_err(|e| e.to_string())?;
    let ops = sweep(
        &inst.network,
        &inst.risk,
        Method::Ops,
        Some(&alpha_grid()),
        backend,
        &options,
    )
    .map_err(|e| e.to_string())?
    .points;
    let grid = threshold_grid(&inst.network, &inst.risk, HeuristicKind::Transmission);
    let transmission = sweep(
        &inst.network,
        &inst.risk,
        Method::Transmission,
        Some(&grid),
        backend,
        &options,
    )
    .map_err(|e| e.to_string())?
    .points;
    let area = run_heuristic_pipeline(
        &inst.network,
        &inst.risk,
        HeuristicKind::Area,
        AREA_THRESHOLD,
        backend,
        &options,
    )
    .map(|p| TradeoffPoint::from_plan(Method::Area, AREA_THRESHOLD, p))
    .map_err(|e| e.to_string())?;
    Ok(BundledRun {
        inst,
        standard,
        ops,
        transmission,
        area,
        elapsed: start.elapsed(),
    })
}

fn monotonicity(run: &BundledRun) -> Verdict {
    let mut v = Verdict::new("alpha sweep monotonicity");
    v.check(run.ops.len() == 101, || {
        format!("{} points instead of 101", run.ops.len())
    });
    for p in run.ops.iter().filter(|p| !p.is_ok()) {
        v.check(false, || format!("α={}: {}", p.parameter, p.status));
    }
    for w in run.ops.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        v.check(b.r_fire <= a.r_fire + TOL, || {
            format!(
                "r_fire rises from {} at α={} to {} at α={}",
                a.r_fire, a.parameter, b.r_fire, b.parameter
            )
        });
        v.check(b.d_tot <= a.d_tot + TOL, || {
            format!(
                "d_tot rises from {} at α={} to {} at α={}",
                a.d_tot, a.parameter, b.d_tot, b.parameter
            )
        });
    }
    let (first, last) = (&run.ops[0], &run.ops[run.ops.len() - 1]);
    v.detail = format!(
        "{} points, r_fire {:.3} -> {:.3}, d_tot {:.1} -> {:.1} MW",
        run.ops.len(),
        first.r_fire,
        last.r_fire,
        first.d_tot,
        last.d_tot
    );
    v
}

fn weakly_covers(a: &TradeoffPoint, b: &TradeoffPoint) -> bool {
    a.d_tot >= b.d_tot - TOL && a.r_fire <= b.r_fire + TOL
}

fn strictly_dominates(a: &TradeoffPoint, b: &TradeoffPoint) -> bool {
    weakly_covers(a, b) && (a.d_tot > b.d_tot + TOL || a.r_fire < b.r_fire - TOL)
}

fn dominance(run: &BundledRun) -> Verdict {
    let mut v = Verdict::new("dominance over heuristics");
    let ok_ops: Vec<&TradeoffPoint> = run.ops.iter().filter(|p| p.is_ok()).collect();
    let ok_tx: Vec<&TradeoffPoint> = run.transmission.iter().filter(|p| p.is_ok()).collect();
    for p in run.transmission.iter().filter(|p| !p.is_ok()) {
        v.check(false, || {
            format!("transmission threshold {}: {}", p.parameter, p.status)
        });
    }
    for t in &ok_tx {
        v.check(ok_ops.iter().any(|o| weakly_covers(o, t)), || {
            format!(
                "transmission threshold {} ({:.3}, {:.1} MW) is not covered by any OPS point",
                t.parameter, t.r_fire, t.d_tot
            )
        });
    }
    let area = &run.area;
    let by_ops = ok_ops.iter().find(|o| strictly_dominates(o, area));
    let by_tx = ok_tx.iter().find(|t| strictly_dominates(t, area));
    v.check(by_ops.is_some(), || {
        format!(
            "area point ({:.3}, {:.1} MW) not dominated by OPS",
            area.r_fire, area.d_tot
        )
    });
    v.check(by_tx.is_some(), || {
        format!(
            "area point ({:.3}, {:.1} MW) not dominated by the transmission sweep",
            area.r_fire, area.d_tot
        )
    });
    let describe = |p: Option<&&TradeoffPoint>| {
        p.map_or("none".to_string(), |p| {
            format!(
                "{}={} ({:.3}, {:.1} MW)",
                p.method, p.parameter, p.r_fire, p.d_tot
            )
        })
    };
    v.detail = format!(
        "{} transmission points covered by {} OPS points; area point ({:.3}, {:.1} MW) dominated by {} and {}",
        ok_tx.len(),
        ok_ops.len(),
        area.r_fire,
        area.d_tot,
        describe(by_ops),
        describe(by_tx)
    );
    v
}

fn qualitative_shape(run: &BundledRun) -> Verdict {
    let mut v = Verdict::new("low-alpha risk reduction");
    let standard_risk = run.standard.r_fire;
    let demand = run.inst.network.total_demand_mw();
    let best = run
        .ops
        .iter()
        .filter(|p| p.is_ok() && p.parameter <= 0.05 && p.d_tot >= 0.95 * demand)
        .min_by(|a, b| a.r_fire.total_cmp(&b.r_fire));
    let golden: serde_json::Value =
        std::fs::read_to_string(data_dir().join("golden").join("rts73_shape.json"))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or(serde_json::Value::Null);
    let expected = golden["risk_fraction"].as_f64();
    v.check(expected.is_some(), || {
        "golden shape file missing or malformed".into()
    });
    match best {
        None => v.check(false, || {
            "no OPS point with α ≤ 0.05 serves 95% of demand".into()
        }),
        Some(p) => {
            let fraction = p.r_fire / standard_risk;
            v.check(fraction <= 0.55, || {
                format!("best risk fraction {fraction:.4} exceeds 0.55")
            });
            if let Some(e) = expected {
                v.check((fraction - e).abs() <= 0.05, || {
                    format!("risk fraction {fraction:.4} is not within 0.05 of golden {e:.4}")
                });
            }
            v.detail = format!(
                "α={} keeps {:.1}% of standard risk ({:.3} of {:.3}) while serving {:.2}% of demand; golden {}",
                p.parameter,
                100.0 * fraction,
                p.r_fire,
                standard_risk,
                100.0 * p.d_tot / demand,
                expected.map_or("absent".into(), |e| format!("{:.1}%", 100.0 * e))
            );
        }
    }
    v
}

fn heuristic_monotonicity(corpus: &[Instance], run: Option<&BundledRun>) -> Verdict {
    let mut v = Verdict::new("heuristic monotonicity");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut instances: Vec<&Instance> = corpus.iter().collect();
    if let Some(run) = run {
        instances.push(&run.inst);
    }
    let mut checks = 0;
    for inst in instances {
        let line_top = inst.risk.max_line_risk() * 1.1 + 1.0;
        let area_top = inst
            .network
            .areas()
            .iter()
            .map(|a| area_risk_total(&inst.risk, &inst.network, a.id).unwrap_or(0.0))
            .fold(0.0, f64::max)
            * 1.1
            + 1.0;
        for _ in 0..50 {
            let (a, b) = (rng.gen_range(0.0..line_top), rng.gen_range(0.0..line_top));
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let ok = transmission_heuristic(&inst.network, &inst.risk, hi)
                .is_subset(&transmission_heuristic(&inst.network, &inst.risk, lo));
            v.check(ok, || {
                format!(
                    "{} transmission: set at {hi} not inside set at {lo}",
                    inst.name
                )
            });
            let (a, b) = (rng.gen_range(0.0..area_top), rng.gen_range(0.0..area_top));
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let ok = area_heuristic(&inst.network, &inst.risk, hi).is_subset(&area_heuristic(
                &inst.network,
                &inst.risk,
                lo,
            ));
            v.check(ok, || {
                format!("{} area: set at {hi} not inside set at {lo}", inst.name)
            });
            checks += 2;
        }
    }
    v.detail = format!("{checks} seeded threshold pairs, 50 per heuristic per network");
    v
}

fn island_pruning(corpus: &[Instance], run: Option<&BundledRun>, plans: &mut Plans) -> Verdict {
    let mut v = Verdict::new("dead island pruning");
    let mut checked = 0;
    let mut check = |v: &mut Verdict, label: &str, inst: &Instance, pruned: &ShutoffPlan| {
        checked += 1;
        match evaluate_plan(&inst.network, &inst.risk, pruned) {
            Ok(ev) => {
                for island in &ev.islands {
                    let served: f64 = island
                        .loads
                        .iter()
                        .filter_map(|id| pruned.loads.iter().find(|d| d.id == *id))
                        .map(|d| d.served_mw)
                        .sum();
                    v.check(served > DEAD_ISLAND_MW, || {
                        format!("{label}: island {:?} serves {served} MW", island.buses)
                    });
                }
            }
            Err(e) => v.check(false, || format!("{label}: {e}")),
        }
        let again = prune_dead_islands(&inst.network, &inst.risk, pruned);
        v.check(again.to_json(false) == pruned.to_json(false), || {
            format!("{label}: pruning is not idempotent")
        });
    };
    for (i, inst) in corpus.iter().enumerate() {
        let top = inst.risk.max_line_risk();
        for k in 0..=4 {
            let threshold = top * f64::from(k) / 4.0;
            for kind in [HeuristicKind::Transmission, HeuristicKind::Area] {
                let label = format!("{} {kind} {threshold:.3}", inst.name);
                match run_heuristic_pipeline(
                    &inst.network,
                    &inst.risk,
                    kind,
                    threshold,
                    &ReferenceBackend,
                    &SolveOptions::tight(),
                ) {
                    Ok(plan) => {
                        check(&mut v, &label, inst, &plan);
                        plans.add(label, i, &plan);
                    }
                    Err(e) => v.check(false, || format!("{label}: {e}")),
                }
            }
        }
    }
    if let Some(run) = run {
        for p in run.transmission.iter().chain(std::iter::once(&run.area)) {
            if let Some(plan) = &p.plan {
                check(
                    &mut v,
                    &format!("bundled {}={}", p.method, p.parameter),
                    &run.inst,
                    plan,
                );
            }
        }
    }
    v.detail =
        format!("{checked} pruned heuristic plans, none with an energized island serving 0 MW");
    v
}

fn audit_one(
    v: &mut Verdict,
    label: &str,
    inst: &Instance,
    plan: &ShutoffPlan,
    worst: &mut (f64, f64),
) {
    match evaluate_plan(&inst.network, &inst.risk, plan) {
        Ok(ev) => {
            worst.0 = worst.0.max(ev.max_balance_residual_mw);
            worst.1 = worst.1.max(ev.max_limit_violation_mw);
            v.check(ev.is_feasible(), || format!("{label}: {:?}", ev.violations));
            v.check(ev.max_balance_residual_mw <= TOL, || {
                format!("{label}: balance residual {}", ev.max_balance_residual_mw)
            });
            v.check(ev.max_limit_violation_mw <= TOL, || {
                format!("{label}: limit violation {}", ev.max_limit_violation_mw)
            });
        }
        Err(e) => v.check(false, || format!("{label}: {e}")),
    }
    for line in plan.lines.iter().filter(|l| !l.on) {
        v.check(line.flow_mw == 0.0, || {
            format!("{label}: dead line {} carries {} MW", line.id, line.flow_mw)
        });
    }
}

fn feasibility_audit(corpus: &[Instance], run: Option<&BundledRun>, plans: &Plans) -> Verdict {
    let mut v = Verdict::new("feasibility audit");
    let mut worst = (0.0, 0.0);
    let mut audited = 0;
    for (label, i, plan) in &plans.0 {
        audit_one(&mut v, label, &corpus[*i], plan, &mut worst);
        audited += 1;
    }
    if let Some(run) = run {
        audit_one(
            &mut v,
            "bundled standard",
            &run.inst,
            &run.standard,
            &mut worst,
        );
        audited += 1;
        for p in run
            .ops
            .iter()
            .chain(&run.transmission)
            .chain(std::iter::once(&run.area))
        {
            if let Some(plan) = &p.plan {
                audit_one(
                    &mut v,
                    &format!("bundled {}={}", p.method, p.parameter),
                    &run.inst,
                    plan,
                    &mut worst,
                );
                audited += 1;
            }
        }
    }
    v.detail = format!(
        "{audited} plans, max balance residual {:.2e} MW, max limit violation {:.2e} MW",
        worst.0, worst.1
    );
    v
}

fn main() {
    let corpus = corpus();
    let mut plans = Plans::default();
    let mut solve_times = Vec::new();
    let mut verdicts = vec![
        oracle_equivalence(&corpus, &mut plans, &mut solve_times),
        alpha_endpoints(&corpus, &mut plans, &mut solve_times),
    ];
    verdicts.push(performance(&corpus, &solve_times));

    let run = bundled_run();
    match &run {
        Ok(run) => {
            eprintln!(
                "bundled sweeps finished in {:.1} s",
                run.elapsed.as_secs_f64()
            );
            verdicts.push(monotonicity(run));
            verdicts.push(dominance(run));
            verdicts.push(qualitative_shape(run));
        }
        Err(e) => {
            for name in [
                "alpha sweep monotonicity",
                "dominance over heuristics",
                "low-alpha risk reduction",
            ] {
                let mut v = Verdict::new(name);
                v.check(false, || format!("bundled run failed: {e}"));
                v.detail = "bundled run failed".into();
                verdicts.push(v);
            }
        }
    }
    let run = run.ok();
    verdicts.push(heuristic_monotonicity(&corpus, run.as_ref()));
    verdicts.push(island_pruning(&corpus, run.as_ref(), &mut plans));
    verdicts.push(feasibility_audit(&corpus, run.as_ref(), &plans));

    let mut all = true;
    for v in &verdicts {
        all &= v.print();
    }
    let failed = verdicts.iter().filter(|v| !v.failures.is_empty()).count();
    println!(
        "{} of {} criteria passed",
        verdicts.len() - failed,
        verdicts.len()
    );
    if !all {
        std::process::exit(1);
    }
}
