//! The `sqc` command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage, input or parse error.
//! With `--json` every command prints one JSON document carrying
//! `schema_version`; matrices are row-major arrays of `[re, im]` pairs with
//! row and column labels.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::circuit::{CompiledCircuit, PortGraph};
use crate::closedform::{self, PhaseQuad};
use crate::gates::{self, GateError};
use crate::linalg::{c, default_tolerance, CMatrix, FRAC_1_SQRT_2};
use crate::twophoton;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sqc", version, about = "Simulate and verify Grover four-port optical circuits")]
pub struct Cli {
    /// Comparison tolerance (default from SQC_TOL, else 1e-8).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print only summaries.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Basis {
    /// External rail modes.
    Rail,
    /// Rail pairs of the logical ports rewritten as S and A.
    Symmetry,
    /// The logical (P,) S, D basis.
    Logical,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a netlist and print its mode tables.
    Compile { file: PathBuf },
    /// Print the total matrix of a netlist.
    Unitary {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Basis::Rail)]
        basis: Basis,
    },
    /// Print the truth table of a classical gate netlist.
    Truthtable { file: PathBuf },
    /// Build a named gate and check it against its reference.
    Verify {
        #[arg(long)]
        gate: String,
        /// Comma-separated phases, e.g. `pi,pi,0,0`.
        #[arg(long, allow_hyphen_values = true)]
        phases: Option<String>,
    },
    /// Two-photon CNOT table and beam-splitter bunching.
    Twophoton {
        #[arg(long, conflicts_with = "cnot_table")]
        hom: bool,
        #[arg(long)]
        cnot_table: bool,
    },
    /// Closed-form versus compiled programmable device.
    Closedform {
        #[arg(long, allow_hyphen_values = true)]
        phases: String,
    },
    /// Check the closed form over an N^4 phase grid.
    Sweep {
        #[arg(long)]
        gate: String,
        #[arg(long)]
        grid: usize,
    },
}

struct Ctx<'a> {
    tol: f64,
    json: bool,
    quiet: bool,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// A failure that ends the command with a given exit code.
struct Exit(i32, String);

impl<E: std::fmt::Display> From<E> for Exit {
    fn from(e: E) -> Self {
        Exit(EXIT_USAGE, e.to_string())
    }
}

type CmdResult = Result<i32, Exit>;

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let tol = cli.tol.unwrap_or_else(default_tolerance);
    let mut ctx = Ctx { tol, json: cli.json, quiet: cli.quiet, out, err };
    if !(tol.is_finite() && tol > 0.0) {
        let _ = writeln!(ctx.err, "error: --tol must be a positive number");
        return EXIT_USAGE;
    }
    let r = match &cli.command {
        Command::Compile { file } => cmd_compile(&mut ctx, file),
        Command::Unitary { file, basis } => cmd_unitary(&mut ctx, file, *basis),
        Command::Truthtable { file } => cmd_truthtable(&mut ctx, file),
        Command::Verify { gate, phases } => cmd_verify(&mut ctx, gate, phases.as_deref()),
        Command::Twophoton { hom, cnot_table } => cmd_twophoton(&mut ctx, *hom, *cnot_table),
        Command::Closedform { phases } => cmd_closedform(&mut ctx, phases),
        Command::Sweep { gate, grid } => cmd_sweep(&mut ctx, gate, *grid),
    };
    match r {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            let _ = writeln!(ctx.err, "{msg}");
            code
        }
    }
}

fn load(path: &Path) -> Result<(PortGraph, CompiledCircuit), Exit> {
    let src = match std::fs::read(path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Exit(EXIT_USAGE, format!("error: file not found: {}", path.display())))
        }
        Err(e) => return Err(Exit(EXIT_USAGE, format!("error: cannot read {}: {e}", path.display()))),
    };
    let report = |diags: Vec<crate::dsl::Diagnostic>| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
        Exit(EXIT_USAGE, lines.join("\n"))
    };
    let text = std::str::from_utf8(&src).map_err(|_| report(crate::dsl::parse_bytes(&src).err().unwrap_or_default()))?;
    let (g, map) = crate::dsl::parse_with_map(text).map_err(report)?;
    let compiled = crate::dsl::compile_with_map(&g, &map).map_err(report)?;
    Ok((g, compiled))
}

fn emit(ctx: &mut Ctx, value: Value) -> Result<(), Exit> {
    let text = serde_json::to_string_pretty(&value)?;
    writeln!(ctx.out, "{text}")?;
    Ok(())
}

fn fmt_c(z: crate::linalg::C64) -> String {
    let clean = |x: f64| if x.abs() < 5e-13 { 0.0 } else { x };
    format!("{:+.4}{:+.4}i", clean(z.re), clean(z.im))
}

/// Matrix as JSON: labels plus row-major `[re, im]` pairs.
pub fn matrix_json(m: &CMatrix, rows: &[String], cols: &[String]) -> Value {
    let data: Vec<Vec<[f64; 2]>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    json!({ "rows": m.nrows(), "cols": m.ncols(), "row_labels": rows, "col_labels": cols, "data": data })
}

fn write_matrix(ctx: &mut Ctx, m: &CMatrix, rows: &[String], cols: &[String]) -> Result<(), Exit> {
    let w = rows.iter().map(|s| s.len()).max().unwrap_or(0);
    writeln!(ctx.out, "{:w$}  {}", "", cols.join("  "))?;
    for i in 0..m.nrows() {
        let entries: Vec<String> = (0..m.ncols()).map(|j| fmt_c(m[(i, j)])).collect();
        writeln!(ctx.out, "{:w$}  {}", rows[i], entries.join(" "))?;
    }
    Ok(())
}

fn cmd_compile(ctx: &mut Ctx, file: &Path) -> CmdResult {
    let (g, cc) = load(file)?;
    let modes = |v: &[crate::circuit::ExternalMode]| -> Vec<Value> {
        v.iter().enumerate().map(|(i, m)| json!({ "index": i, "port": m.port.to_string(), "mode": m.mode.to_string() })).collect()
    };
    if ctx.json {
        emit(
            ctx,
            json!({
                "schema_version": SCHEMA_VERSION,
                "command": "compile",
                "circuit": cc.name,
                "elements": g.len(),
                "polarized": cc.polarized,
                "feed_forward": cc.feed_forward,
                "internal_modes": cc.mode_order.len(),
                "inputs": modes(&cc.inputs),
                "outputs": modes(&cc.outputs),
                "unitarity_error": cc.unitarity_error(),
                "logical_ports": cc.logical.is_some(),
            }),
        )?;
    } else {
        writeln!(
            ctx.out,
            "circuit {}: {} elements, {} internal modes, {}",
            cc.name,
            g.len(),
            cc.mode_order.len(),
            if cc.feed_forward { "feed-forward" } else { "nilpotent loops summed" }
        )?;
        if !ctx.quiet {
            writeln!(ctx.out, "inputs:")?;
            for (i, m) in cc.inputs.iter().enumerate() {
                writeln!(ctx.out, "  {i:>3}  {}", m.mode)?;
            }
            writeln!(ctx.out, "outputs:")?;
            for (i, m) in cc.outputs.iter().enumerate() {
                writeln!(ctx.out, "  {i:>3}  {}", m.mode)?;
            }
        }
        writeln!(ctx.out, "unitarity error: {:.3e}", cc.unitarity_error())?;
    }
    Ok(EXIT_OK)
}

/// Rewrites each logical rail pair `(a, b)` of `modes` as `(S, A)`.
fn symmetry_transform(
    cc: &CompiledCircuit,
    outputs: bool,
) -> Result<(CMatrix, Vec<String>), Exit> {
    let l = cc.logical.as_ref().ok_or_else(|| Exit(EXIT_USAGE, "error: circuit has no logical ports".into()))?;
    let (modes, pairs) = if outputs {
        (&cc.outputs, [&l.right_out, &l.left_out])
    } else {
        (&cc.inputs, [&l.left_in, &l.right_in])
    };
    let n = modes.len();
    let mut t = CMatrix::identity(n, n);
    let mut labels: Vec<String> = modes.iter().map(|m| m.mode.to_string()).collect();
    let h = FRAC_1_SQRT_2;
    for pair in pairs {
        for (ia, ma) in modes.iter().enumerate().filter(|(_, m)| m.port == pair[0]) {
            let ib = modes
                .iter()
                .position(|m| m.port == pair[1] && m.mode.polarization == ma.mode.polarization)
                .ok_or_else(|| Exit(EXIT_USAGE, format!("error: rail {} is not external", pair[1])))?;
            for (row, sign, tag) in [(ia, 1.0, 'S'), (ib, -1.0, 'A')] {
                for j in 0..n {
                    t[(row, j)] = c(0.0, 0.0);
                }
                t[(row, ia)] = c(h, 0.0);
                t[(row, ib)] = c(sign * h, 0.0);
                let pol = ma.mode.polarization.map(|p| format!(":{p:?}")).unwrap_or_default();
                labels[row] = format!("{}/{}:{tag}:{:?}{pol}", pair[0], pair[1], ma.mode.direction);
            }
        }
    }
    Ok((t, labels))
}

fn cmd_unitary(ctx: &mut Ctx, file: &Path, basis: Basis) -> CmdResult {
    let (_, cc) = load(file)?;
    let (m, rows, cols) = match basis {
        Basis::Rail => (cc.total_unitary.clone(), cc.output_labels(), cc.input_labels()),
        Basis::Symmetry => {
            let (ti, cols) = symmetry_transform(&cc, false)?;
            let (to, rows) = symmetry_transform(&cc, true)?;
            (&to * &cc.total_unitary * ti.adjoint(), rows, cols)
        }
        Basis::Logical => {
            let m = gates::extract_logical_unitary(&cc)?;
            let labels = gates::logical_labels(m.nrows());
            (m, labels.clone(), labels)
        }
    };
    if ctx.json {
        let basis = format!("{basis:?}").to_lowercase();
        emit(
            ctx,
            json!({
                "schema_version": SCHEMA_VERSION,
                "command": "unitary",
                "circuit": cc.name,
                "basis": basis,
                "matrix": matrix_json(&m, &rows, &cols),
            }),
        )?;
    } else {
        write_matrix(ctx, &m, &rows, &cols)?;
    }
    Ok(EXIT_OK)
}

fn cmd_truthtable(ctx: &mut Ctx, file: &Path) -> CmdResult {
    let (_, cc) = load(file)?;
    match gates::truth_table(&cc) {
        Ok(t) => {
            if ctx.json {
                emit(ctx, json!({ "schema_version": SCHEMA_VERSION, "command": "truthtable", "circuit": cc.name, "table": t }))?;
            } else {
                writeln!(ctx.out, "{} -> {}", t.qubits.join(""), t.qubits.join(""))?;
                for (r, (i, o)) in t.rows.iter().zip(t.bit_rows()) {
                    writeln!(ctx.out, "{i} -> {o}   phase {}", fmt_c(c(r.phase[0], r.phase[1])))?;
                }
            }
            Ok(EXIT_OK)
        }
        Err(GateError::NotClassical { column }) => {
            if ctx.json {
                emit(
                    ctx,
                    json!({ "schema_version": SCHEMA_VERSION, "command": "truthtable", "circuit": cc.name, "classical": false, "column": column }),
                )?;
            } else {
                writeln!(ctx.out, "not classical (input column {column} is a superposition)")?;
            }
            Ok(EXIT_FAIL)
        }
        Err(e) => Err(e.into()),
    }
}

fn parse_phases(text: &str) -> Result<Vec<f64>, Exit> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            crate::dsl::parse_number(s.trim())
                .map_err(|d| Exit(EXIT_USAGE, format!("error: bad phase '{}': {}", s.trim(), d.message)))
        })
        .collect()
}

fn quad(text: &str) -> Result<PhaseQuad, Exit> {
    match parse_phases(text)?.as_slice() {
        [a, b, c, d] => Ok(PhaseQuad::from([*a, *b, *c, *d])),
        other => Err(Exit(EXIT_USAGE, format!("error: expected 4 phases, got {}", other.len()))),
    }
}

fn cmd_verify(ctx: &mut Ctx, gate: &str, phases: Option<&str>) -> CmdResult {
    let phases = phases.map(parse_phases).transpose()?.unwrap_or_default();
    let (verdict, logical) = gates::verify(gate, &phases, ctx.tol)?;
    let labels = gates::logical_labels(logical.nrows());
    if ctx.json {
        emit(
            ctx,
            json!({
                "schema_version": SCHEMA_VERSION,
                "command": "verify",
                "gate": verdict.gate,
                "phases": phases,
                "pass": verdict.pass,
                "max_error": verdict.max_error,
                "phase": verdict.phase,
                "row_phases": verdict.row_phases,
                "comparison": verdict.comparison,
                "tolerance": ctx.tol,
                "logical": matrix_json(&logical, &labels, &labels),
            }),
        )?;
    } else {
        writeln!(
            ctx.out,
            "{}: {} (max error {:.3e}, {:?} comparison)",
            verdict.gate,
            if verdict.pass { "PASS" } else { "FAIL" },
            verdict.max_error,
            verdict.comparison
        )?;
        if !ctx.quiet {
            write_matrix(ctx, &logical, &labels, &labels)?;
        }
    }
    Ok(if verdict.pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_twophoton(ctx: &mut Ctx, hom_only: bool, table_only: bool) -> CmdResult {
    let mut doc = json!({ "schema_version": SCHEMA_VERSION, "command": "twophoton" });
    let mut ok = true;
    if !hom_only {
        let (table, rows) = twophoton::grover_two_photon_table()?;
        let want = [("00", "00"), ("01", "01"), ("10", "11"), ("11", "10")];
        let got = table.bit_rows();
        let matches = got.len() == 4 && got.iter().zip(want).all(|(g, w)| g.0 == w.0 && g.1 == w.1);
        ok &= matches;
        doc["cnot_table"] = json!({ "table": table, "products": rows, "matches_cnot": matches });
        if !ctx.json {
            writeln!(ctx.out, "two-photon Grover table over (S_total, D_total): {}", if matches { "CNOT" } else { "MISMATCH" })?;
            for (i, o) in &got {
                writeln!(ctx.out, "  {i} -> {o}")?;
            }
            if !ctx.quiet {
                for r in &rows {
                    writeln!(
                        ctx.out,
                        "  {} {}  ({},{}) -> ({},{})  phase {}",
                        r.first,
                        r.second,
                        r.totals_in.0,
                        r.totals_in.1,
                        r.totals_out.0,
                        r.totals_out.1,
                        fmt_c(c(r.phase[0], r.phase[1]))
                    )?;
                }
            }
        }
    }
    if !table_only {
        let mut outs = Vec::new();
        for (s1, s2) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
            let h = twophoton::hom_separation(s1, s2)?;
            let expect = if s1 ^ s2 == 0 { 0.0 } else { 1.0 };
            ok &= (h.p_coincidence - expect).abs() < ctx.tol;
            outs.push(json!({ "s1": s1, "s2": s2, "outcome": h }));
            if !ctx.json {
                writeln!(
                    ctx.out,
                    "HOM {}{}: coincidence {:.6}, ee {:.6}, ff {:.6}",
                    if s1 == 0 { 'S' } else { 'A' },
                    if s2 == 0 { 'S' } else { 'A' },
                    h.p_coincidence,
                    h.p_bunched_e,
                    h.p_bunched_f
                )?;
            }
        }
        doc["hom"] = json!(outs);
    }
    doc["pass"] = json!(ok);
    if ctx.json {
        emit(ctx, doc)?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_closedform(ctx: &mut Ctx, phases: &str) -> CmdResult {
    let q = quad(phases)?;
    let closed = closedform::programmable_closed_form(&q);
    let circuit = gates::programmable_graph(q.as_array()).compile()?;
    let compiled = gates::extract_logical_unitary(&circuit)?;
    let deviation = closedform::per_block_phase_error(&compiled, &closed);
    let pass = deviation < ctx.tol;
    let labels = gates::logical_labels(8);
    let errata = closedform::published_formula_report();
    if ctx.json {
        emit(
            ctx,
            json!({
                "schema_version": SCHEMA_VERSION,
                "command": "closedform",
                "phases": q.as_array(),
                "closed_form": matrix_json(&closed, &labels, &labels),
                "compiled": matrix_json(&compiled, &labels, &labels),
                "deviation": deviation,
                "pass": pass,
                "errata": errata,
            }),
        )?;
    } else {
        writeln!(ctx.out, "per-block deviation: {deviation:.3e} ({})", if pass { "PASS" } else { "FAIL" })?;
        if !ctx.quiet {
            writeln!(ctx.out, "closed form:")?;
            write_matrix(ctx, &closed, &labels, &labels)?;
            writeln!(ctx.out, "compiled:")?;
            write_matrix(ctx, &compiled, &labels, &labels)?;
            writeln!(ctx.out, "published formulas:")?;
            for e in &errata {
                writeln!(
                    ctx.out,
                    "  {:<28} {:<12} max deviation {:.3e}  {}",
                    e.item,
                    if e.consistent { "consistent" } else { "ERRATUM" },
                    e.max_deviation,
                    e.finding
                )?;
            }
        }
    }
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_sweep(ctx: &mut Ctx, gate: &str, grid: usize) -> CmdResult {
    if gate != "programmable" {
        return Err(Exit(EXIT_USAGE, format!("error: sweep supports only --gate programmable, got '{gate}'")));
    }
    if grid == 0 {
        return Err(Exit(EXIT_USAGE, "error: --grid must be at least 1".into()));
    }
    let points = closedform::sweep(&closedform::grid_quads(grid), ctx.tol);
    let passed = points.iter().filter(|p| p.pass).count();
    let worst = points.iter().map(|p| p.max_error).fold(0.0, f64::max);
    let pass = passed == points.len();
    if ctx.json {
        let mut doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "sweep",
            "gate": gate,
            "grid": grid,
            "total": points.len(),
            "passed": passed,
            "max_error": worst,
            "pass": pass,
        });
        if !ctx.quiet {
            doc["points"] = json!(points);
        }
        emit(ctx, doc)?;
    } else {
        if !ctx.quiet {
            for p in &points {
                let ph: Vec<String> = p.phases.iter().map(|x| crate::dsl::format_number(*x)).collect();
                writeln!(ctx.out, "{:>6}  ({})  {:.3e}  {}", p.index, ph.join(", "), p.max_error, if p.pass { "ok" } else { "FAIL" })?;
            }
        }
        writeln!(ctx.out, "{passed}/{} grid points agree (max error {worst:.3e})", points.len())?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}
