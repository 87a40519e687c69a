use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use qmap_core::bench::{self, SyntheticSpec};
use qmap_core::driver::{expand_final, map_program, report, DriverError, Report};
use qmap_core::hfqasm::{parse, validate, ProgramAst};
use qmap_core::requp::{check_budget, RequpError};
use qmap_core::templates::GateTemplateTable;
use qmap_core::time::Micros;

use crate::args::{ArchArgs, Format, GenKind};
use crate::config::{read_file, resolve, write_file, CliError, Settings};

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Internal(format!("stdout: {e}")))
        }
    }
}

/// Parses and validates `path`, rendering any problem against the file name.
pub fn load_program(path: &Path) -> Result<ProgramAst, CliError> {
    let text = read_file(path)?;
    let name = path.display().to_string();
    let ast = parse(&text).map_err(|e| CliError::Input(e.render(&name)))?;
    let diagnostics = validate(&ast);
    if !diagnostics.is_empty() {
        let lines: Vec<String> = diagnostics.iter().map(|d| d.render(&name)).collect();
        return Err(CliError::Input(lines.join("\n")));
    }
    Ok(ast)
}

pub fn check(input: &Path) -> Result<(), CliError> {
    let ast = load_program(input)?;
    println!("{}: ok ({} modules)", input.display(), ast.modules.len());
    Ok(())
}

fn warn_placeholder(settings: &Settings) {
    if settings.placeholder_latencies {
        eprintln!("warning: using placeholder gate latencies; pass --latency-table or --templates for real values");
    }
}

const CSV_HEADER: &str = "k,b_qrcr,feasible,latency_us,total_physical_ancilla,runtime_ms";

pub fn map(input: &Path, k: Option<u32>, budget: Option<u64>, arch: &ArchArgs, final_program: Option<&Path>) -> Result<(), CliError> {
    let settings = resolve(&Vec::from_iter(k), &Vec::from_iter(budget), arch)?;
    let (&[k], &[budget]) = (settings.ks.as_slice(), settings.budgets.as_slice()) else {
        return Err(CliError::Input("map takes a single --k and --budget; use sweep for lists".into()));
    };
    let ast = load_program(input)?;
    warn_placeholder(&settings);
    let params = settings.params(k, budget);
    let started = Instant::now();
    let mapping = map_program(&ast, &params, &settings.qec, &settings.latencies, settings.map)?;
    let runtime = started.elapsed();
    let rep = report(&mapping, &params, &settings.qec);

    let text = match settings.format {
        Format::Json => rep.to_json(),
        Format::Csv => format!("{CSV_HEADER}\n{}\n", csv_row(k, budget, Some((&rep, runtime.as_secs_f64() * 1e3)))),
    };
    emit(settings.out.as_deref(), &text)?;

    if let Some(path) = final_program {
        let templates = settings.templates.clone().unwrap_or_else(|| GateTemplateTable::from_latencies(&settings.latencies));
        let program = expand_final(&mapping, &templates)?;
        write_file(path, &program.dump())?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".mcl");
        write_file(Path::new(&sidecar), &program.mcl_sidecar())?;
    }

    let summary = format!(
        "total latency: {} us\ntotal physical ancilla: {}\nmapper runtime: {:.3} ms",
        rep.total_latency_exact,
        rep.total_physical_ancilla,
        runtime.as_secs_f64() * 1e3
    );
    if settings.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn csv_row(k: u32, budget: u64, mapped: Option<(&Report, f64)>) -> String {
    match mapped {
        Some((rep, ms)) => format!("{k},{budget},true,{},{},{ms:.3}", rep.total_latency_exact, rep.total_physical_ancilla),
        None => format!("{k},{budget},false,,,"),
    }
}

#[derive(Debug)]
struct SweepRow {
    k: u32,
    budget: u64,
    outcome: Option<(Report, f64)>,
}

pub fn sweep(input: &Path, ks: &[u32], budgets: &[u64], arch: &ArchArgs) -> Result<(), CliError> {
    let settings = resolve(ks, budgets, arch)?;
    let ast = load_program(input)?;
    warn_placeholder(&settings);
    let mut pairs: Vec<(u32, u64)> =
        settings.ks.iter().flat_map(|&k| settings.budgets.iter().map(move |&b| (k, b))).collect();
    pairs.sort_unstable();
    pairs.dedup();

    let rows: Vec<Result<SweepRow, CliError>> = pairs
        .par_iter()
        .map(|&(k, budget)| {
            let params = settings.params(k, budget);
            match check_budget(&params, &settings.qec) {
                Err(RequpError::BudgetTooSmall { .. }) => return Ok(SweepRow { k, budget, outcome: None }),
                Err(e) => return Err(CliError::from(DriverError::from(e))),
                Ok(()) => {}
            }
            let started = Instant::now();
            let mapping = map_program(&ast, &params, &settings.qec, &settings.latencies, settings.map)?;
            let ms = started.elapsed().as_secs_f64() * 1e3;
            Ok(SweepRow { k, budget, outcome: Some((report(&mapping, &params, &settings.qec), ms)) })
        })
        .collect();
    let rows: Vec<SweepRow> = rows.into_iter().collect::<Result<_, _>>()?;

    let best = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().map(|(rep, _)| (rep.total_latency_us, r)))
        .min_by_key(|(latency, r)| (*latency, r.k, r.budget))
        .map(|(_, r)| r);

    let text = match settings.format {
        Format::Csv => {
            let mut text = format!("{CSV_HEADER}\n");
            for r in &rows {
                text.push_str(&csv_row(r.k, r.budget, r.outcome.as_ref().map(|(rep, ms)| (rep, *ms))));
                text.push('\n');
            }
            match best {
                Some(b) => text.push_str(&format!(
                    "# best: k={} b_qrcr={} latency_us={}\n",
                    b.k,
                    b.budget,
                    b.outcome.as_ref().map(|(rep, _)| rep.total_latency_exact.as_str()).unwrap_or_default()
                )),
                None => text.push_str("# best: none (no feasible configuration)\n"),
            }
            text
        }
        Format::Json => sweep_json(&rows, best),
    };
    emit(settings.out.as_deref(), &text)?;
    if settings.out.is_some() {
        match best {
            Some(b) => println!("best: k={} b_qrcr={}", b.k, b.budget),
            None => println!("best: none"),
        }
    }
    Ok(())
}

fn sweep_json(rows: &[SweepRow], best: Option<&SweepRow>) -> String {
    #[derive(serde::Serialize)]
    struct Row<'a> {
        k: u32,
        b_qrcr: u64,
        feasible: bool,
        latency_us: Option<Micros>,
        total_physical_ancilla: Option<u64>,
        report: Option<&'a Report>,
    }
    #[derive(serde::Serialize)]
    struct Out<'a> {
        rows: Vec<Row<'a>>,
        best: Option<(u32, u64)>,
    }
    let out = Out {
        rows: rows
            .iter()
            .map(|r| Row {
                k: r.k,
                b_qrcr: r.budget,
                feasible: r.outcome.is_some(),
                latency_us: r.outcome.as_ref().map(|(rep, _)| rep.total_latency_us),
                total_physical_ancilla: r.outcome.as_ref().map(|(rep, _)| rep.total_physical_ancilla),
                report: r.outcome.as_ref().map(|(rep, _)| rep),
            })
            .collect(),
        best: best.map(|b| (b.k, b.budget)),
    };
    let mut text = serde_json::to_string_pretty(&out).expect("sweep serialises");
    text.push('\n');
    text
}

pub fn gen(kind: &GenKind, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let text = match *kind {
        GenKind::Fredkin => bench::fredkin(),
        GenKind::ToffoliChain { n } => bench::toffoli_chain(n),
        GenKind::ModularSynthetic { modules, gates, qubits, ancilla } => bench::modular_synthetic(SyntheticSpec {
            modules,
            gates_per_module: gates,
            data_qubits: qubits,
            ancilla_per_module: ancilla,
            seed,
        }),
    };
    emit(out, &text)
}
