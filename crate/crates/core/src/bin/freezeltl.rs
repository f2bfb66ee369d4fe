//! Command-line front end.
//!
//! Exit codes: 0 positive verdict or success, 1 definitive negative verdict,
//! 2 search limits exhausted, 3 usage or parse error. Arguments naming an
//! input accept either a file path or the text itself.

use clap::{Parser, Subcommand};
use freezeltl::hierarchy::{
    build_hardy_ncs, build_minsky_ncs, flat_decode_hardy_config, flat_hardy_config, hardy, MinskyMachine, Ordinal,
};
use freezeltl::linearize::linearize;
use freezeltl::logic::{bounded_sat, models, parse, SatResult, SearchLimits};
use freezeltl::ltl2ncs::{default_alphabet, translate};
use freezeltl::ncs::{cover, reachable, step_rule, Config, CoverLimits, CoverResult, Ncs, Rule, Step};
use freezeltl::ncs2ltl::{self, LossyRun};
use freezeltl::pcp::{self, PcpInstance};
use freezeltl::pcs::encode_config;
use freezeltl::{DataWord, Formula, QuasiOrder, Sym};
use itertools::Itertools;
use serde_json::{json, Value};
use std::error::Error;
use std::path::Path;
use std::process::ExitCode;

type Res<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(
    name = "freezeltl",
    version,
    about = "Freeze LTL on data words and nested counter systems"
)]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the searches.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Does the word satisfy the formula at its first position?
    Eval {
        #[arg(long)]
        order: String,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        word: String,
    },
    /// Search for a short model.
    Sat {
        #[arg(long)]
        order: String,
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, default_value_t = 200_000)]
        max_nodes: usize,
    },
    /// Is the order a tree order? Prints a witness triple otherwise.
    OrderCheck {
        #[arg(long)]
        order: String,
    },
    /// Translate to an equisatisfiable formula over a linear order.
    Linearize {
        #[arg(long)]
        order: String,
        #[arg(long)]
        formula: String,
        /// Comma-separated letters; defaults to those of the formula, or `a`.
        #[arg(long, value_delimiter = ',')]
        alphabet: Vec<String>,
    },
    /// Successors of a configuration, under one rule or all of them.
    NcsRun {
        #[arg(long)]
        ncs: String,
        #[arg(long)]
        config: String,
        #[arg(long)]
        rule: Option<String>,
    },
    /// Coverability of a target configuration.
    NcsCover {
        #[arg(long)]
        ncs: String,
        #[arg(long)]
        start: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 100_000)]
        max_configs: usize,
        #[arg(long)]
        no_prune: bool,
        /// Write the covering run to this file.
        #[arg(long)]
        emit_run: Option<String>,
    },
    /// Satisfiability through the translation to an NCS.
    Ltl2ncs {
        #[arg(long)]
        order: String,
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 100_000)]
        max_configs: usize,
        /// Print rule instances met within this many configurations.
        #[arg(long, num_args = 0..=1, default_missing_value = "200")]
        emit_rules: Option<usize>,
    },
    /// Print the formula whose models encode covering runs.
    Ncs2ltl {
        #[arg(long)]
        ncs: String,
        #[arg(long)]
        start: String,
        #[arg(long)]
        end: String,
    },
    /// Encode a run written by `ncs-cover --emit-run`.
    EncodeRun {
        #[arg(long)]
        ncs: String,
        #[arg(long)]
        start: String,
        #[arg(long)]
        end: String,
        #[arg(long)]
        run: String,
    },
    /// Formula for a PCP instance; with --solution, also its encoding.
    PcpGen {
        #[arg(long)]
        instance: String,
        /// 1-based tile indices.
        #[arg(long)]
        solution: Option<String>,
        #[arg(long)]
        bounded_until: bool,
    },
    /// Value of the Hardy function H^alpha(n).
    HardyEval {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
    },
    /// Explore the Hardy gadget from the configuration for (alpha, n).
    HardyNcs {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 2_000_000)]
        max_configs: usize,
    },
    /// Run coverability on the NCS simulating a Minsky machine.
    MinskyNcs {
        #[arg(long)]
        machine: String,
        #[arg(long, default_value = "1")]
        alpha: String,
        #[arg(long, default_value_t = 400_000)]
        max_configs: usize,
    },
    /// Channel word of a configuration.
    PcsEncode {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        config: String,
    },
}

struct Out {
    code: u8,
    text: String,
    json: Value,
}

fn out(code: u8, text: String, json: Value) -> Res<Out> {
    Ok(Out { code, text, json })
}

fn input(arg: &str) -> Res<String> {
    let p = Path::new(arg);
    if p.is_file() {
        Ok(std::fs::read_to_string(p)?)
    } else {
        Ok(arg.to_string())
    }
}

fn order(arg: &str) -> Res<QuasiOrder> {
    Ok(QuasiOrder::from_spec(&input(arg)?)?)
}

fn formula(arg: &str, q: &QuasiOrder) -> Res<Formula> {
    Ok(parse(input(arg)?.trim(), None, q)?)
}

fn config(arg: &str) -> Res<Config> {
    Ok(Config::parse(input(arg)?.trim())?)
}

fn ncs(arg: &str) -> Res<Ncs> {
    Ok(Ncs::parse(&input(arg)?)?)
}

fn word_text(w: &DataWord, q: &QuasiOrder) -> String {
    w.display(q).to_string()
}

// run traces: `start C` then `step RULE @ PATH => C`, PATH `-` when empty

fn write_run(start: &Config, run: &[(Step, Config)]) -> String {
    let mut s = format!("start {start}\n");
    for (st, c) in run {
        let path = if st.path.is_empty() {
            "-".to_string()
        } else {
            st.path.iter().join(",")
        };
        s.push_str(&format!("step {} @ {path} => {c}\n", st.rule));
    }
    s
}

fn read_run(text: &str) -> Res<(Config, Vec<(Step, Config)>)> {
    let mut start = None;
    let mut steps = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(c) = line.strip_prefix("start ") {
            start = Some(Config::parse(c.trim())?);
        } else if let Some(rest) = line.strip_prefix("step ") {
            let (rule, rest) = rest.split_once(" @ ").ok_or("step line needs ` @ `")?;
            let (path, c) = rest.split_once(" => ").ok_or("step line needs ` => `")?;
            let path = match path.trim() {
                "-" => Vec::new(),
                p => p.split(',').map(|i| i.trim().parse()).collect::<Result<_, _>>()?,
            };
            steps.push((
                Step {
                    rule: Rule::parse(rule)?,
                    path,
                },
                Config::parse(c.trim())?,
            ));
        } else {
            return Err(format!("unrecognised run line `{line}`").into());
        }
    }
    Ok((start.ok_or("run has no `start` line")?, steps))
}

fn cover_out(res: &CoverResult, start: &Config) -> (u8, String, Value) {
    match res {
        CoverResult::Covered(run) => (
            0,
            format!("COVERED in {} steps\n{}", run.len(), write_run(start, run)),
            json!({"verdict": "covered", "steps": run.len(), "run": write_run(start, run)}),
        ),
        CoverResult::Exhausted => (1, "NOT-COVERABLE".into(), json!({"verdict": "not-coverable"})),
        CoverResult::NotCoveredWithinBounds => (2, "LIMIT".into(), json!({"verdict": "limit"})),
    }
}

fn run(cmd: Cmd) -> Res<Out> {
    match cmd {
        Cmd::Eval {
            order: o,
            formula: f,
            word,
        } => {
            let q = order(&o)?;
            let f = formula(&f, &q)?;
            let w = DataWord::parse(input(&word)?.trim(), &q)?;
            let holds = models(&q, &w, &f)?;
            let v = if holds { "SAT" } else { "UNSAT" };
            out(u8::from(!holds), v.into(), json!({"verdict": v}))
        }
        Cmd::Sat {
            order: o,
            formula: f,
            max_len,
            max_nodes,
        } => {
            let q = order(&o)?;
            let f = formula(&f, &q)?;
            match bounded_sat(&f, &default_alphabet(&f), &q, max_len, SearchLimits { max_nodes })? {
                SatResult::Witness(w) => {
                    let t = word_text(&w, &q);
                    out(0, format!("SAT\n{t}"), json!({"verdict": "sat", "witness": t}))
                }
                SatResult::NoWitnessUpTo(n) => out(
                    1,
                    format!("NO-WITNESS up to length {n}"),
                    json!({"verdict": "no-witness", "max_len": n}),
                ),
                SatResult::LimitExhausted => out(2, "LIMIT".into(), json!({"verdict": "limit"})),
            }
        }
        Cmd::OrderCheck { order: o } => {
            let q = order(&o)?;
            let r = q.analyze();
            match r.witness {
                None => out(
                    0,
                    format!("TREE depth {}", r.depth),
                    json!({"tree": true, "depth": r.depth}),
                ),
                Some((x, y, z)) => {
                    let (x, y, z) = (q.name(x), q.name(y), q.name(z));
                    out(
                        1,
                        format!("NOT-TREE {x} {y} {z}\n{x} and {y} are incomparable and both below {z}"),
                        json!({"tree": false, "witness": [x, y, z]}),
                    )
                }
            }
        }
        Cmd::Linearize {
            order: o,
            formula: f,
            alphabet,
        } => {
            let q = order(&o)?;
            let f = formula(&f, &q)?;
            let mut alphabet: Vec<Sym> = alphabet.iter().map(|a| Sym::new(a)).collect();
            if alphabet.is_empty() {
                alphabet = f.letters().into_iter().collect();
            }
            if alphabet.is_empty() {
                alphabet.push(Sym::new("a"));
            }
            let l = linearize(&f, &q, &alphabet)?;
            let b = &l.plan.branches;
            let po = &l.plan.order;
            let mut t = format!("order linear:{}\n", l.plan.k);
            t.push_str("leaves");
            for &x in &b.leaves {
                t.push_str(&format!(" {}", po.name(x)));
            }
            t.push_str("\nattr sb lb lvl\n");
            for x in po.attrs() {
                t.push_str(&format!("{} {} {} {}\n", po.name(x), b.sb[x], b.lb[x], b.lvl[x]));
            }
            let ft = l.formula.display(&l.order).to_string();
            t.push_str(&format!("formula {ft}"));
            out(0, t, json!({"k": l.plan.k, "plan": l.plan, "formula": ft}))
        }
        Cmd::NcsRun {
            ncs: n,
            config: c,
            rule,
        } => {
            let n = ncs(&n)?;
            let c = config(&c)?;
            let rules = match rule {
                Some(r) => {
                    let r = Rule::parse(&r)?;
                    if !n.rules.contains(&r) {
                        return Err(format!("rule {r} is not in the system").into());
                    }
                    vec![r]
                }
                None => n.rules.clone(),
            };
            let mut lines = Vec::new();
            for r in &rules {
                for (st, d) in step_rule(&c, r, n.k) {
                    lines.push(format!("{} @ {:?} => {d}", st.rule, st.path));
                }
            }
            let code = u8::from(lines.is_empty());
            out(code, lines.join("\n"), json!({"successors": lines}))
        }
        Cmd::NcsCover {
            ncs: n,
            start,
            target,
            max_configs,
            no_prune,
            emit_run,
        } => {
            let n = ncs(&n)?;
            let start = config(&start)?;
            let target = config(&target)?;
            let limits = CoverLimits {
                max_configs,
                prune: !no_prune,
                ..CoverLimits::default()
            };
            let res = cover(&n, &start, &target, limits);
            if let (Some(path), CoverResult::Covered(run)) = (&emit_run, &res) {
                std::fs::write(path, write_run(&start, run))?;
            }
            let (code, t, j) = cover_out(&res, &start);
            out(code, t, j)
        }
        Cmd::Ltl2ncs {
            order: o,
            formula: f,
            max_configs,
            emit_rules,
        } => {
            let q = order(&o)?;
            let f = formula(&f, &q)?.nnf();
            let t = translate(&f, &q, &default_alphabet(&f))?;
            if let Some(bound) = emit_rules {
                let rules: Vec<String> = t
                    .sample_rules(bound)
                    .iter()
                    .map(|(s, r)| format!("{s:?}: {r}"))
                    .collect();
                return out(0, rules.join("\n"), json!({"rules": rules}));
            }
            let closure = t.sub.len();
            match t.search(max_configs) {
                CoverResult::Covered(run) => out(
                    0,
                    format!("COVERED in {} steps (closure size {closure})", run.len()),
                    json!({"verdict": "covered", "steps": run.len(), "closure": closure}),
                ),
                CoverResult::Exhausted => out(
                    1,
                    "NOT-COVERABLE".into(),
                    json!({"verdict": "not-coverable", "closure": closure}),
                ),
                CoverResult::NotCoveredWithinBounds => {
                    out(2, "LIMIT".into(), json!({"verdict": "limit", "closure": closure}))
                }
            }
        }
        Cmd::Ncs2ltl { ncs: n, start, end } => {
            let n = ncs(&n)?;
            let r = ncs2ltl::build_formula(&n, &config(&start)?, &config(&end)?)?;
            let q = r.order();
            let props: Vec<String> = r.formula().letters().iter().map(|s| s.to_string()).collect();
            let f = r.formula().display(&q).to_string();
            out(
                0,
                format!("order linear:{}\nalphabet {}\nformula {f}", q.len(), props.join(" ")),
                json!({"k": q.len(), "alphabet": props, "formula": f}),
            )
        }
        Cmd::EncodeRun {
            ncs: n,
            start,
            end,
            run: r,
        } => {
            let n = ncs(&n)?;
            let start = config(&start)?;
            let enc = ncs2ltl::build_formula(&n, &start, &config(&end)?)?;
            let (s, steps) = read_run(&input(&r)?)?;
            if s != start {
                return Err(format!("run starts at {s}, expected {start}").into());
            }
            let lr = LossyRun::exact(&s, &steps);
            lr.verify(&n)?;
            let w = enc.encode(&n, &lr)?;
            let q = enc.order();
            let holds = models(&q, &w, &enc.formula())?;
            let t = word_text(&w, &q);
            let v = if holds { "SAT" } else { "UNSAT" };
            out(u8::from(!holds), format!("{v}\n{t}"), json!({"verdict": v, "word": t}))
        }
        Cmd::PcpGen {
            instance,
            solution,
            bounded_until,
        } => {
            let p = PcpInstance::parse(&input(&instance)?)?;
            let q = pcp::pcp_order();
            let f = pcp::build_formula(&p, bounded_until).formula();
            let ft = f.display(&q).to_string();
            let mut t = format!("order\n{}formula {ft}", q.to_text());
            let mut j = json!({"order": q.to_text(), "formula": ft});
            let mut code = 0;
            if let Some(sol) = solution {
                let seq = sol
                    .split_whitespace()
                    .map(|s| match s.parse::<usize>() {
                        Ok(i) if i >= 1 => Ok(i - 1),
                        _ => Err(format!("bad tile index `{s}`")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                match pcp::encode_solution(&p, &seq) {
                    Ok(w) => {
                        let holds = models(&q, &w, &f)?;
                        let wt = word_text(&w, &q);
                        code = u8::from(!holds);
                        t.push_str(&format!("\nword {wt}\n{}", if holds { "SAT" } else { "UNSAT" }));
                        j["word"] = json!(wt);
                        j["verdict"] = json!(if holds { "sat" } else { "unsat" });
                    }
                    Err(e) => {
                        code = 1;
                        t.push_str(&format!("\n{e}"));
                        j["verdict"] = json!("not-a-solution");
                    }
                }
            }
            out(code, t, j)
        }
        Cmd::HardyEval { alpha, n, fuel } => {
            let a = Ordinal::parse(&alpha)?;
            match hardy(&a, n, fuel) {
                Ok(v) => out(0, v.to_string(), json!({"alpha": a, "n": n, "value": v})),
                Err(e) => out(2, format!("LIMIT ({e})"), json!({"verdict": "limit"})),
            }
        }
        Cmd::HardyNcs { alpha, n, max_configs } => {
            let a = Ordinal::parse(&alpha)?;
            let l = a
                .terms()
                .iter()
                .map(|e| e.as_nat().ok_or("exponents must be finite"))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .max()
                .unwrap_or(0)
                .max(1) as usize;
            let gadget = build_hardy_ncs(2, l)?;
            let start = flat_hardy_config(&a, n, l).ok_or("ordinal not representable")?;
            let Some(all) = reachable(&gadget, &start, max_configs) else {
                return out(2, "LIMIT".into(), json!({"verdict": "limit"}));
            };
            let best = all
                .iter()
                .filter_map(flat_decode_hardy_config)
                .filter(|(b, _)| b.is_zero())
                .map(|(_, m)| m)
                .max();
            let t = format!(
                "start {start}\nrules {}\nreachable {}\nlargest n with alpha = 0: {}",
                gadget.rules.len(),
                all.len(),
                best.map_or("none".into(), |m| m.to_string())
            );
            out(
                u8::from(best.is_none()),
                t,
                json!({"start": start.to_string(), "rules": gadget.rules.len(), "reachable": all.len(), "value": best}),
            )
        }
        Cmd::MinskyNcs {
            machine,
            alpha,
            max_configs,
        } => {
            let m = MinskyMachine::parse(&input(&machine)?)?;
            let a = Ordinal::parse(&alpha)?;
            let (n, start, target) = build_minsky_ncs(&m, &a)?;
            let limits = CoverLimits {
                max_configs,
                ..CoverLimits::default()
            };
            let res = cover(&n, &start, &target, limits);
            let (code, t, mut j) = cover_out(&res, &start);
            j["target"] = json!(target.to_string());
            out(code, format!("target {target}\n{t}"), j)
        }
        Cmd::PcsEncode { k, config: c } => {
            let c = config(&c)?;
            let (ctrl, ch) = encode_config(&c, k)?;
            out(
                0,
                format!("{ctrl} {ch}"),
                json!({"control": ctrl.to_string(), "channel": ch.to_string()}),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
    {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    let json = cli.json;
    match run(cli.cmd) {
        Ok(o) => {
            if json {
                println!("{}", o.json);
            } else if !o.text.is_empty() {
                println!("{}", o.text);
            }
            ExitCode::from(o.code)
        }
        Err(e) => {
            if json {
                println!("{}", json!({"error": e.to_string()}));
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(3)
        }
    }
}
