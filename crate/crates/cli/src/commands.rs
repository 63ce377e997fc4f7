//! One function per subcommand. Reports go to `out`; failures come back as
//! [`CliError`] after whatever partial report makes sense has been written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use multiunit_core::{
    allocate_best, best_commitment, marginal_value, min_input_for_output, oracle::MAX_ORACLE_UNITS,
    oracle_commitment, sweep as core_sweep, switching_schedule, verify_switching_points, Allocation,
    AllocationRule, Fleet, SolverOptions, Subset,
};

use crate::fleetfile::FleetFile;
use crate::format::sig9;
use crate::CliError;

/// Relative output agreement required between solver and oracle.
pub const ORACLE_AGREEMENT: f64 = 1e-4;

pub fn validate(file: &FleetFile, out: &mut dyn Write) -> Result<(), CliError> {
    let mut invalid = Vec::new();
    for ((id, report), entry) in file.validation().into_iter().zip(&file.units) {
        if report.is_valid() {
            let peak_p = entry.a / (2.0 * entry.b);
            writeln!(
                out,
                "unit {id}: valid  a={} b={} p_max={}  peak eta {} at {}",
                sig9(entry.a),
                sig9(entry.b),
                sig9(entry.cap()),
                sig9(entry.a * peak_p - entry.b * peak_p * peak_p),
                sig9(peak_p)
            )?;
        } else {
            writeln!(out, "unit {id}: INVALID  {report}")?;
            invalid.push(id.to_string());
        }
    }
    if !invalid.is_empty() {
        return Err(CliError::Infeasible(format!("invalid curve for unit(s) {}", invalid.join(", "))));
    }
    let fleet = file.to_fleet()?;
    writeln!(out, "fleet: {} unit(s), capacity {}", fleet.len(), sig9(fleet.total_capacity()))?;
    match fleet.detect_family() {
        Some(fam) if fleet.len() > 1 => {
            let betas: Vec<String> = fam.betas.iter().map(|&b| sig9(b)).collect();
            writeln!(out, "similar family: scale factors {}", betas.join(", "))?;
        }
        _ => {}
    }
    Ok(())
}

fn write_allocation(out: &mut dyn Write, fleet: &Fleet, subset: Subset, alloc: &Allocation) -> Result<(), CliError> {
    writeln!(out, "p_t      {}", sig9(alloc.p_t))?;
    let label = if subset.is_empty() { "(none)".to_string() } else { subset.label(fleet) };
    writeln!(out, "active   {label}")?;
    let mut members = subset.members();
    let mut next = members.next();
    let mut k = 0;
    for (i, unit) in fleet.units().iter().enumerate() {
        if next == Some(i) {
            writeln!(out, "load {}   {}", unit.id, sig9(alloc.loads[k]))?;
            k += 1;
            next = members.next();
        } else {
            writeln!(out, "load {}   0 (off)", unit.id)?;
        }
    }
    writeln!(out, "w_t      {}", sig9(alloc.w_t))?;
    writeln!(out, "eta_t    {}", sig9(alloc.eta_t))?;
    let curves = subset.curves(fleet);
    if let Some(g) = marginal_value(&curves, alloc, 1e-9 * alloc.p_t.max(1.0)) {
        writeln!(out, "marginal {}", sig9(g))?;
    }
    Ok(())
}

fn resolve_units(fleet: &Fleet, ids: &[String]) -> Result<Subset, CliError> {
    let mut idx = Vec::with_capacity(ids.len());
    for id in ids {
        let i = fleet.index_of(id).ok_or_else(|| CliError::Usage(format!("unknown unit id {id:?}")))?;
        if idx.contains(&i) {
            return Err(CliError::Usage(format!("unit id {id:?} listed twice")));
        }
        idx.push(i);
    }
    if idx.is_empty() {
        return Err(CliError::Usage("--units needs at least one id".into()));
    }
    Ok(Subset::from_indices(idx))
}

pub fn allocate(
    file: &FleetFile,
    p_t: f64,
    units: Option<&[String]>,
    opts: &SolverOptions,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let fleet = file.to_fleet()?;
    let (subset, alloc) = match units {
        Some(ids) => {
            let subset = resolve_units(&fleet, ids)?;
            let curves = subset.curves(&fleet);
            (subset, allocate_best(&curves, p_t, opts)?)
        }
        None => {
            let c = best_commitment(&fleet, p_t, opts)?;
            (c.subset, c.allocation)
        }
    };
    write_allocation(out, &fleet, subset, &alloc)
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 { format!("{n} {word}") } else { format!("{n} {word}s") }
}

pub fn schedule(
    file: &FleetFile,
    p_min: f64,
    p_max: f64,
    scan_step: Option<f64>,
    opts: &SolverOptions,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let fleet = file.to_fleet()?;
    let step = scan_step.unwrap_or((p_max - p_min) / 1000.0);
    let sched = switching_schedule(&fleet, p_min, p_max, step, opts)?;
    writeln!(out, "{}, {}", plural(sched.regimes.len(), "regime"), plural(sched.breakpoints.len(), "breakpoint"))?;
    let last = sched.regimes.len() - 1;
    for (k, r) in sched.regimes.iter().enumerate() {
        let close = if k == last { ']' } else { ')' };
        let rule = match r.rule {
            AllocationRule::Proportional => "proportional",
            AllocationRule::Stationary => "equal marginal",
        };
        writeln!(
            out,
            "regime {}: [{}, {}{close} active {} ({rule})",
            k + 1,
            sig9(r.p_lo),
            sig9(r.p_hi),
            r.active_set.label(&fleet)
        )?;
    }
    let checks = verify_switching_points(&sched, &fleet, opts);
    for c in &checks {
        writeln!(
            out,
            "breakpoint {}: {} -> {}  eta {} | {}  {}",
            sig9(c.p),
            c.left.label(&fleet),
            c.right.label(&fleet),
            sig9(c.eta_left),
            sig9(c.eta_right),
            c.kind
        )?;
    }
    for &r in &file.reference_breakpoints {
        let nearest = sched
            .breakpoints
            .iter()
            .copied()
            .min_by(|x, y| (x - r).abs().total_cmp(&(y - r).abs()));
        match nearest {
            Some(b) => {
                let dev = (b - r) / r * 100.0;
                let note = if (b - r).abs() <= 0.01 { "matches" } else { "deviates" };
                writeln!(
                    out,
                    "reference {}: computed {} ({}%, {note})",
                    sig9(r),
                    sig9(b),
                    format_pct(dev)
                )?;
            }
            None => writeln!(out, "reference {}: no computed breakpoint", sig9(r))?,
        }
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::Verification(format!("{} failed verification", plural(failed, "breakpoint"))));
    }
    if !checks.is_empty() {
        writeln!(out, "all breakpoints verified")?;
    }
    Ok(())
}

fn format_pct(x: f64) -> String {
    let s = format!("{x:+.3}");
    if s == "-0.000" { "+0.000".to_string() } else { s }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep(
    file: &FleetFile,
    p_min: f64,
    p_max: f64,
    step: f64,
    path: &Path,
    opts: &SolverOptions,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let fleet = file.to_fleet()?;
    let rows = core_sweep(&fleet, p_min, p_max, step, opts)?;
    let f = File::create(path).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    let mut csv = BufWriter::new(f);
    let mut header = vec!["pt".to_string(), "active_set".to_string()];
    header.extend(fleet.units().iter().map(|u| csv_field(&format!("p_{}", u.id))));
    header.extend(["w_t".to_string(), "eta_t".to_string()]);
    let io = |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    writeln!(csv, "{}", header.join(",")).map_err(io)?;
    let mut changes = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        let mut fields = vec![sig9(row.p_t), csv_field(&row.subset.label(&fleet))];
        fields.extend(row.loads.iter().map(|&p| sig9(p)));
        fields.extend([sig9(row.w_t), sig9(row.eta_t)]);
        writeln!(csv, "{}", fields.join(",")).map_err(io)?;
        if k > 0 && row.subset != rows[k - 1].subset {
            changes.push((row.p_t, rows[k - 1].subset, row.subset));
        }
    }
    csv.flush().map_err(io)?;
    writeln!(out, "{} written to {}", plural(rows.len(), "row"), path.display())?;
    writeln!(out, "{} encountered", plural(changes.len(), "breakpoint"))?;
    for (p, from, to) in changes {
        let label = |s: Subset| if s.is_empty() { "(none)".to_string() } else { s.label(&fleet) };
        writeln!(out, "  at {}: {} -> {}", sig9(p), label(from), label(to))?;
    }
    Ok(())
}

pub fn min_input(file: &FleetFile, w_t: f64, opts: &SolverOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let fleet = file.to_fleet()?;
    let m = min_input_for_output(&fleet, w_t, opts)?;
    writeln!(out, "target   {}", sig9(w_t))?;
    write_allocation(out, &fleet, m.subset, &m.allocation)
}

pub fn oracle_check(
    file: &FleetFile,
    p_t: f64,
    step: Option<f64>,
    opts: &SolverOptions,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let fleet = file.to_fleet()?;
    if fleet.len() > MAX_ORACLE_UNITS {
        return Err(CliError::Usage(format!("oracle supports ≤ {MAX_ORACLE_UNITS} units, fleet has {}", fleet.len())));
    }
    let step = step.unwrap_or(p_t / 1000.0);
    let solver = best_commitment(&fleet, p_t, opts)?;
    let (o_subset, oracle) = if p_t == 0.0 {
        (solver.subset, solver.allocation.clone())
    } else {
        if !(step.is_finite() && step > 0.0) {
            return Err(CliError::Usage(format!("invalid oracle step {step}")));
        }
        let (s, r) = oracle_commitment(&fleet, p_t, step)?;
        (s, r.allocation)
    };
    let label = |s: Subset| if s.is_empty() { "(none)".to_string() } else { s.label(&fleet) };
    let full = |s: Subset, a: &Allocation| {
        let mut loads = vec![0.0; fleet.len()];
        for (k, i) in s.members().enumerate() {
            loads[i] = a.loads[k];
        }
        loads.iter().map(|&p| sig9(p)).collect::<Vec<_>>().join(", ")
    };
    writeln!(out, "p_t {}  oracle step {}", sig9(p_t), sig9(step))?;
    for (name, s, a) in [("solver", solver.subset, &solver.allocation), ("oracle", o_subset, &oracle)] {
        writeln!(
            out,
            "{name}  active {}  loads {}  w_t {}  eta_t {}",
            label(s),
            full(s, a),
            sig9(a.w_t),
            sig9(a.eta_t)
        )?;
    }
    let rel = (solver.allocation.w_t - oracle.w_t).abs() / oracle.w_t.abs().max(f64::MIN_POSITIVE);
    let rel = if solver.allocation.w_t == oracle.w_t { 0.0 } else { rel };
    writeln!(out, "relative difference {}", sig9(rel))?;

    let curves = fleet.curves();
    for r in file.reference_splits.iter().filter(|r| (r.pt - p_t).abs() <= 1e-9 * p_t.max(1.0)) {
        if r.loads.len() != fleet.len() {
            writeln!(out, "reference split at {} ignored: expected {} loads", sig9(r.pt), fleet.len())?;
            continue;
        }
        let reference = Allocation::from_loads(&curves, r.loads.clone());
        let loads: Vec<String> = r.loads.iter().map(|&p| sig9(p)).collect();
        writeln!(out, "reference split {}: w_t {}", loads.join(", "), sig9(reference.w_t))?;
        let gap = solver.allocation.w_t - reference.w_t;
        if gap > 1e-9 * reference.w_t.abs().max(1.0) {
            writeln!(out, "  deviates: the solver delivers {} more", sig9(gap))?;
        } else {
            writeln!(out, "  consistent with the solver")?;
        }
    }

    if rel <= ORACLE_AGREEMENT {
        writeln!(out, "agreement within {}", sig9(ORACLE_AGREEMENT))?;
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "solver and oracle disagree: relative difference {} exceeds {}",
            sig9(rel),
            sig9(ORACLE_AGREEMENT)
        )))
    }
}
