use std::fmt::Write as _;
use std::sync::Arc;

use filtra_core::filtration::Filtration;
use filtra_core::lattice::leak_detect;
use filtra_core::sigma::{verify_axioms, DEFAULT_ENUMERATION_CAP};
use filtra_core::{
    AxiomVerdict, ContinuousWalkModel, Event, IntervalSet, LatticeModel, LeakVerdict, NestingVerdict, OutcomeSpace,
    Policy, RandomVariable, SigmaAlgebra, TradingMdp,
};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::cli::{
    Cli, Command, ConeArgs, EnumerateArgs, Format, LatticeArgs, MeasurableArgs, PolicyArgs, PolicyCommand,
    PolicyKindArg, SimulateArgs, VerifyArgs,
};
use crate::error::{CliError, Result};
use crate::formats::{
    event_from_json, event_to_json, interval_set_to_json, markov_policy_to_json, policy_from_json, read_json,
    sigma_from_json, variable_from_json, ActionJson, PolicyTableJson, SigmaJson, StageJson, VariableJson,
};

/// What a successful run prints, and its exit code (0 ok, 1 violation).
#[derive(Debug, Default)]
pub struct Report {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

pub fn run(cli: &Cli) -> Result<Report> {
    let f = cli.format;
    match &cli.command {
        Command::Enumerate(a) => enumerate(a, f.unwrap_or(Format::Text)),
        Command::Verify(a) => verify(a, f.unwrap_or(Format::Json)),
        Command::Measurable(a) => measurable(a, f.unwrap_or(Format::Text)),
        Command::Policy(c) => policy(c, f.unwrap_or(Format::Json)),
        Command::Cone(a) => cone(a, f.unwrap_or(Format::Csv)),
        Command::Simulate(a) => simulate(a, f.unwrap_or(Format::Csv)),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Resolved flags, defaults included, as echoed at the top of every output.
fn config(command: &str, format: Format, args: &impl Serialize) -> Value {
    let mut v = serde_json::to_value(args).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.insert("command".into(), command.into());
        m.insert("format".into(), json!(format));
    }
    v
}

fn json_output(cfg: Value, body: Value) -> String {
    let mut out = Map::new();
    out.insert("config".into(), cfg);
    if let Value::Object(m) = body {
        out.extend(m);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(out)).expect("json values serialize");
    s.push('\n');
    s
}

fn echo(cfg: &Value) -> String {
    format!("# config {cfg}\n")
}

fn count_json(count: Option<u128>, atoms: usize) -> Value {
    match count.and_then(|c| u64::try_from(c).ok()) {
        Some(c) => json!(c),
        None => json!(format!("2^{atoms}")),
    }
}

fn prefix_stage(space: &Arc<OutcomeSpace>, t: usize) -> SigmaAlgebra {
    SigmaAlgebra::from_keys(space, |p| space.prefix_index(p, t))
}

fn lattice_model(a: &LatticeArgs) -> Result<LatticeModel> {
    Ok(LatticeModel::new(a.s0, a.u, a.d, a.horizon)?.with_up_probability(a.p)?)
}

fn enumerate(a: &EnumerateArgs, format: Format) -> Result<Report> {
    let cfg = config("enumerate", format, a);
    let space = OutcomeSpace::new(a.space.horizon, &a.space.alphabet)?;
    if a.t > space.horizon() {
        return Err(usage(format!("--t {} exceeds horizon {}", a.t, space.horizon())));
    }
    let stage = prefix_stage(&space, a.t);
    let count = stage.member_count();
    let listed = a.force || count.is_some_and(|c| c <= a.cap);
    let members = if listed { Some(stage.enumerate_members()?) } else { None };
    let count_text = count.map_or_else(|| format!("2^{}", stage.num_atoms()), |c| c.to_string());

    let mut report = Report::default();
    if !listed {
        report.stderr = format!("listing suppressed: {count_text} members exceed --cap {}; pass --force\n", a.cap);
    }
    report.stdout = match format {
        Format::Json => json_output(
            cfg,
            json!({
                "t": a.t,
                "atoms": stage.num_atoms(),
                "count": count_json(count, stage.num_atoms()),
                "members": members.as_ref().map(|m| m.iter().map(event_to_json).collect::<Vec<_>>()),
            }),
        ),
        Format::Text => {
            let mut s = echo(&cfg);
            let _ = writeln!(s, "F_{} ({} atoms): {count_text} subsets", a.t, stage.num_atoms());
            for e in members.iter().flatten() {
                let _ = writeln!(s, "{e}");
            }
            s
        }
        Format::Csv => {
            let mut s = echo(&cfg);
            let _ = writeln!(s, "# count {count_text}");
            s.push_str("index,size,members\n");
            for (i, e) in members.iter().flatten().enumerate() {
                let _ = writeln!(s, "{i},{},{}", e.len(), e.path_strings().join(";"));
            }
            s
        }
    };
    Ok(report)
}

fn axiom_violation(stage: usize, v: &AxiomVerdict) -> Value {
    let (name, witness): (&str, Vec<&Event>) = match v {
        AxiomVerdict::Ok => ("ok", vec![]),
        AxiomVerdict::MissingUniverse => ("missing_universe", vec![]),
        AxiomVerdict::NotClosedComplement(e) => ("not_closed_complement", vec![e]),
        AxiomVerdict::NotClosedUnion(a, b) => ("not_closed_union", vec![a, b]),
    };
    json!({
        "stage": stage,
        "verdict": name,
        "witness": witness.into_iter().map(event_to_json).collect::<Vec<_>>(),
    })
}

fn verify(a: &VerifyArgs, format: Format) -> Result<Report> {
    let cfg = config("verify", format, a);
    let space = OutcomeSpace::new(a.space.horizon, &a.space.alphabet)?;
    let mut algebras = Vec::new();
    let mut rows = Vec::new();
    let mut violation: Option<Value> = None;

    let stages: Vec<StageJson> = match &a.stages {
        Some(path) => read_json(path)?,
        None => Filtration::natural(&space)
            .stages()
            .iter()
            .map(|s| StageJson::Atoms {
                atoms: s.atoms().iter().map(event_to_json).collect(),
            })
            .collect(),
    };
    if stages.is_empty() {
        return Err(usage("a filtration needs at least one stage"));
    }
    for (i, stage) in stages.iter().enumerate() {
        let (algebra, verdict) = match stage {
            StageJson::Atoms { atoms } => {
                let algebra = sigma_from_json(&space, &SigmaJson { atoms: atoms.clone() })?;
                let verdict = if algebra.num_atoms() <= DEFAULT_ENUMERATION_CAP {
                    Some(verify_axioms(&space, &algebra.enumerate_members()?)?)
                } else {
                    None
                };
                (algebra, verdict)
            }
            StageJson::Members { members } => {
                let events = members
                    .iter()
                    .map(|m| event_from_json(&space, m))
                    .collect::<Result<Vec<_>>>()?;
                let verdict = verify_axioms(&space, &events)?;
                (SigmaAlgebra::generate(&space, &events)?, Some(verdict))
            }
        };
        rows.push(json!({
            "stage": i,
            "atoms": algebra.num_atoms(),
            "axioms": if verdict.is_some() { "checked" } else { "skipped" },
        }));
        if let Some(v) = verdict.filter(|v| !v.is_ok()) {
            violation = Some(axiom_violation(i, &v));
            break;
        }
        algebras.push(algebra);
    }
    if violation.is_none() {
        if let NestingVerdict::Violated { t, atom } = Filtration::from_stages(&space, algebras)?.verify_nesting() {
            violation = Some(json!({
                "stage": t,
                "verdict": "not_nested",
                "witness": [event_to_json(&atom)],
            }));
        }
    }

    let ok = violation.is_none();
    let stdout = match format {
        Format::Json => json_output(cfg, json!({ "ok": ok, "stages": rows, "violation": violation })),
        Format::Text | Format::Csv => {
            let mut s = echo(&cfg);
            if format == Format::Csv {
                s.push_str("stage,atoms,axioms\n");
            }
            for r in &rows {
                if format == Format::Csv {
                    let _ = writeln!(s, "{},{},{}", r["stage"], r["atoms"], r["axioms"].as_str().unwrap_or(""));
                } else {
                    let _ = writeln!(s, "stage {}: atoms={}, axioms {}", r["stage"], r["atoms"], r["axioms"].as_str().unwrap_or(""));
                }
            }
            match &violation {
                None => s.push_str(if format == Format::Csv { "# ok\n" } else { "ok\n" }),
                Some(v) => {
                    let witness: Vec<String> = v["witness"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .map(|w| {
                            let paths: Vec<&str> = w.as_array().into_iter().flatten().filter_map(|p| p.as_str()).collect();
                            if paths.is_empty() { "∅".to_string() } else { format!("{{{}}}", paths.join(",")) }
                        })
                        .collect();
                    let lead = if format == Format::Csv { "# " } else { "" };
                    let _ = writeln!(
                        s,
                        "{lead}violation at stage {}: {}({})",
                        v["stage"],
                        v["verdict"].as_str().unwrap_or(""),
                        witness.join(", ")
                    );
                }
            }
            s
        }
    };
    Ok(Report {
        stdout,
        stderr: String::new(),
        code: if ok { 0 } else { 1 },
    })
}

fn measurable(a: &MeasurableArgs, format: Format) -> Result<Report> {
    let cfg = config("measurable", format, a);
    let model = lattice_model(&a.lattice)?;
    let lp = model.build_price_process()?;
    let space = lp.space.clone();
    let horizon = model.horizon;
    if a.t > horizon {
        return Err(usage(format!("--t {} exceeds horizon {horizon}", a.t)));
    }
    let target = &a.target;
    let (label, x): (String, RandomVariable) = if let Some(k) = target.price {
        if k > horizon {
            return Err(usage(format!("--price {k} exceeds horizon {horizon}")));
        }
        (format!("S_{k}"), lp.prices.at(k).clone())
    } else if let Some(path) = &target.variable {
        let json: VariableJson = read_json(path)?;
        ("X".into(), variable_from_json(&space, &json)?)
    } else if let Some(path) = &target.policy {
        let table: PolicyTableJson = read_json(path)?;
        if a.t >= horizon {
            return Err(usage(format!("decisions exist only for t < {horizon}")));
        }
        let policy = policy_from_json(&table);
        let values = (0..space.num_paths())
            .map(|p| Ok(policy.action(&model, a.t, &space.path_symbols(p))?.position()))
            .collect::<Result<Vec<_>>>()?;
        (format!("x_{}", a.t), RandomVariable::new(&space, values)?)
    } else if let Some(c) = target.constant {
        ("c".into(), RandomVariable::constant(&space, c)?)
    } else {
        return Err(usage("one of --price, --variable, --policy, --constant is required"));
    };

    let stage = prefix_stage(&space, a.t);
    let witness = x.measurability_witness(&stage)?;
    let stdout = match format {
        Format::Json => json_output(
            cfg,
            json!({
                "variable": label,
                "t": a.t,
                "measurable": witness.is_none(),
                "witness": witness.map(|w| json!({
                    "atom": event_to_json(&stage.atom(w.atom)),
                    "first": { "path": space.path_string(w.first_path), "value": w.first_value },
                    "second": { "path": space.path_string(w.second_path), "value": w.second_value },
                })),
            }),
        ),
        Format::Text | Format::Csv => {
            let mut s = echo(&cfg);
            if format == Format::Csv {
                s.push_str("variable,t,measurable,atom,first_path,first_value,second_path,second_value\n");
                match &witness {
                    None => {
                        let _ = writeln!(s, "{label},{},true,,,,,", a.t);
                    }
                    Some(w) => {
                        let _ = writeln!(
                            s,
                            "{label},{},false,{},{},{},{},{}",
                            a.t,
                            stage.atom(w.atom).path_strings().join(";"),
                            space.path_string(w.first_path),
                            w.first_value,
                            space.path_string(w.second_path),
                            w.second_value
                        );
                    }
                }
            } else {
                match &witness {
                    None => s.push_str("true\n"),
                    Some(w) => {
                        let _ = writeln!(
                            s,
                            "false\natom {}: {label}({}) = {}, {label}({}) = {}",
                            stage.atom(w.atom),
                            space.path_string(w.first_path),
                            w.first_value,
                            space.path_string(w.second_path),
                            w.second_value
                        );
                    }
                }
            }
            s
        }
    };
    Ok(Report {
        stdout,
        stderr: String::new(),
        code: if witness.is_none() { 0 } else { 1 },
    })
}

fn resolve_policy(a: &PolicyArgs, mdp: &TradingMdp) -> Result<Policy> {
    if let Some(path) = &a.table {
        let table: PolicyTableJson = read_json(path)?;
        return Ok(policy_from_json(&table));
    }
    Ok(match a.kind {
        PolicyKindArg::AlwaysLong => Policy::always_long(),
        PolicyKindArg::AlwaysFlat => Policy::always_flat(),
        PolicyKindArg::Prescient => Policy::prescient_next_up(),
        PolicyKindArg::Optimal => mdp.optimal_adapted_value()?.1,
    })
}

fn policy(cmd: &PolicyCommand, format: Format) -> Result<Report> {
    let (name, a) = match cmd {
        PolicyCommand::Eval(a) => ("policy eval", a),
        PolicyCommand::Leak(a) => ("policy leak", a),
        PolicyCommand::Optimal(a) => ("policy optimal", a),
    };
    let cfg = config(name, format, a);
    let model = lattice_model(&a.lattice)?;
    let mdp = TradingMdp::new(model.clone(), a.rho)?;
    let mut code = 0;
    let (body, text, csv) = match cmd {
        PolicyCommand::Eval(_) => {
            let policy = resolve_policy(a, &mdp)?;
            match a.samples {
                Some(n) => {
                    let est = mdp.monte_carlo_value(&policy, n, a.seed)?;
                    (
                        json!({ "value": est.mean, "standard_error": est.standard_error, "samples": est.samples }),
                        format!("value {} (standard error {}, {} samples)\n", est.mean, est.standard_error, est.samples),
                        format!("value,standard_error,samples\n{},{},{}\n", est.mean, est.standard_error, est.samples),
                    )
                }
                None => {
                    let v = mdp.evaluate_policy_exact(&policy)?;
                    (json!({ "value": v }), format!("value {v}\n"), format!("value,standard_error,samples\n{v},,\n"))
                }
            }
        }
        PolicyCommand::Optimal(_) => {
            let (v, policy) = mdp.optimal_adapted_value()?;
            let table = markov_policy_to_json(&model, &policy)?;
            let mut text = format!("value {v}\n");
            let mut csv = String::from("t,state,action\n");
            if let PolicyTableJson::Markov { entries } = &table {
                for e in entries {
                    let action = if e.action == ActionJson::Long { "long" } else { "flat" };
                    let _ = writeln!(text, "t={} S={} {action}", e.t, e.state);
                    let _ = writeln!(csv, "{},{},{action}", e.t, e.state);
                }
            }
            let _ = writeln!(csv, "# value {v}");
            (json!({ "value": v, "policy": table }), text, csv)
        }
        PolicyCommand::Leak(_) => {
            let policy = resolve_policy(a, &mdp)?;
            let space = model.space()?;
            let verdict = leak_detect(&model, &Filtration::natural(&space), &policy)?;
            let leak = match &verdict {
                LeakVerdict::Adapted => Value::Null,
                LeakVerdict::Leak { t, atom, actions } => {
                    code = 1;
                    json!({
                        "t": t,
                        "atom": event_to_json(atom),
                        "actions": [ActionJson::from(actions.0), ActionJson::from(actions.1)],
                    })
                }
            };
            let csv = match &verdict {
                LeakVerdict::Adapted => "adapted,t,atom,first,second\ntrue,,,,\n".to_string(),
                LeakVerdict::Leak { t, atom, actions } => format!(
                    "adapted,t,atom,first,second\nfalse,{t},{},{},{}\n",
                    atom.path_strings().join(";"),
                    actions.0,
                    actions.1
                ),
            };
            (json!({ "adapted": verdict.is_adapted(), "leak": leak }), format!("{verdict}\n"), csv)
        }
    };
    let stdout = match format {
        Format::Json => json_output(cfg, body),
        Format::Text => echo(&cfg) + &text,
        Format::Csv => echo(&cfg) + &csv,
    };
    Ok(Report {
        stdout,
        stderr: String::new(),
        code,
    })
}

fn cone(a: &ConeArgs, format: Format) -> Result<Report> {
    let cfg = config("cone", format, a);
    let model = ContinuousWalkModel::new(a.s0, a.d, a.u, a.horizon)?;
    let events = a
        .events
        .iter()
        .map(|e| {
            if e.t > a.horizon {
                return Err(usage(format!("event time {} exceeds horizon {}", e.t, a.horizon)));
            }
            // the universe is the cone at t, widened to hold every piece
            let cone = model.cone_bounds(e.t)?;
            let lo = e.pieces.iter().map(|p| p.lo).fold(cone.lo, f64::min);
            let hi = e.pieces.iter().map(|p| p.hi).fold(cone.hi, f64::max);
            Ok((e.t, IntervalSet::new((lo, hi), e.pieces.clone())?))
        })
        .collect::<Result<Vec<_>>>()?;
    let fig = model.emit_cone_figure_data(a.seed, &events)?;

    let stdout = match format {
        Format::Json => json_output(
            cfg,
            json!({
                "path": fig.path_rows.iter().map(|r| json!({
                    "t": r.t, "price": r.price, "cone_low": r.cone_low, "cone_high": r.cone_high,
                })).collect::<Vec<_>>(),
                "events": fig.event_rows.iter().map(|r| json!({
                    "t": r.t, "set": interval_set_to_json(&r.set), "price": r.price, "contains": r.contains,
                })).collect::<Vec<_>>(),
            }),
        ),
        Format::Csv => {
            let mut s = echo(&cfg);
            s.push_str("t,price,cone_low,cone_high\n");
            for r in &fig.path_rows {
                let _ = writeln!(s, "{},{},{},{}", r.t, r.price, r.cone_low, r.cone_high);
            }
            for (i, r) in fig.event_rows.iter().enumerate() {
                let _ = writeln!(s, "\n# event {} at t={}: {}", i + 1, r.t, r.set);
                s.push_str("t,lo,lo_closed,hi,hi_closed,price,contains\n");
                for p in r.set.pieces() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        r.t, p.lo, p.lo_closed, p.hi, p.hi_closed, r.price, r.contains
                    );
                }
            }
            s
        }
        Format::Text => {
            let mut s = echo(&cfg);
            for r in &fig.path_rows {
                let _ = writeln!(s, "t={} price={} cone=[{}, {}]", r.t, r.price, r.cone_low, r.cone_high);
            }
            for r in &fig.event_rows {
                let verdict = if r.contains { "inside" } else { "outside" };
                let _ = writeln!(s, "event t={} {}: price {} {verdict}", r.t, r.set, r.price);
            }
            s
        }
    };
    Ok(Report {
        stdout,
        ..Report::default()
    })
}

fn simulate(a: &SimulateArgs, format: Format) -> Result<Report> {
    let cfg = config("simulate", format, a);
    let lp = lattice_model(&a.lattice)?.build_price_process()?;
    let horizon = lp.space.horizon();
    // sample i is drawn with seed + i so any single row can be regenerated
    let samples: Vec<(String, Vec<f64>)> = (0..a.paths)
        .map(|i| {
            let p = lp.measure.sample_path(a.seed.wrapping_add(i as u64));
            let prices = (0..=horizon).map(|t| lp.prices.at(t).value(p)).collect();
            (lp.space.path_string(p), prices)
        })
        .collect();
    let stdout = match format {
        Format::Json => json_output(
            cfg,
            json!({
                "samples": samples.iter().enumerate().map(|(i, (path, prices))| json!({
                    "sample": i, "path": path, "prices": prices,
                })).collect::<Vec<_>>(),
            }),
        ),
        Format::Csv => {
            let mut s = echo(&cfg);
            s.push_str("sample,path,t,price\n");
            for (i, (path, prices)) in samples.iter().enumerate() {
                for (t, price) in prices.iter().enumerate() {
                    let _ = writeln!(s, "{i},{path},{t},{price}");
                }
            }
            s
        }
        Format::Text => {
            let mut s = echo(&cfg);
            for (path, prices) in &samples {
                let shown: Vec<String> = prices.iter().map(|p| p.to_string()).collect();
                let _ = writeln!(s, "{path}: {}", shown.join(" "));
            }
            s
        }
    };
    Ok(Report {
        stdout,
        ..Report::default()
    })
}
