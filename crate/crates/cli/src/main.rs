mod args;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use args::{
    BoundArgs, Cli, Command, FamilyExportArgs, FamilySource, Figure1Args, Format, Kind, OutputArgs, Prop5Args,
    ProtocolAuditArgs, ProtocolRunArgs, SuffcondArgs,
};
use output::{csv_table, emit, error_json, json_report, CliError};
use privsearch::bounds::{
    best_sequence, figure1_curve, sufficient_condition_profile, EntropyModel, PatternFamilyModel, Strategy,
};
use privsearch::constructions::{
    circular_family, disjoint_subfamily, exact_search_family, nested_gamma_subfamily, nested_max_depth,
    prop5_triple_scan, prop5_triple_scan_unreduced,
};
use privsearch::patterns::{load_family, save_family, PatternFamily};
use privsearch::protocol::{privacy_audit, rate_experiment, run_session, SessionSeeds};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", error_json("UsageError", message.trim_end().to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Figure1(a) => figure1(a),
        Command::Bound(a) => bound(a),
        Command::Suffcond(a) => suffcond(a),
        Command::Prop5(a) => prop5(a),
        Command::ProtocolRun(a) => protocol_run(a),
        Command::ProtocolAudit(a) => protocol_audit(a),
        Command::FamilyExport(a) => family_export(a),
    }
}

fn build_family(source: &FamilySource) -> Result<PatternFamily, CliError> {
    if let Some(path) = &source.family {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return Ok(load_family(&text)?);
    }
    let kind = source
        .kind
        .ok_or_else(|| CliError::Usage("either --kind or --family is required".into()))?;
    let k = source
        .k
        .ok_or_else(|| CliError::Usage("--K is required for builtin families".into()))?;
    let needs_m = matches!(kind, Kind::Disjoint | Kind::Nested);
    if needs_m != source.m.is_some() {
        return Err(CliError::Usage(if needs_m {
            "--M is required for disjoint and nested families".into()
        } else {
            "--M only applies to disjoint and nested families".into()
        }));
    }
    if source.depth.is_some() && kind != Kind::Nested {
        return Err(CliError::Usage("--depth only applies to nested families".into()));
    }
    let family = match kind {
        Kind::Exact => exact_search_family(k)?,
        Kind::Circular => circular_family(k)?,
        Kind::Disjoint => disjoint_subfamily(k, source.m.unwrap_or_default())?,
        Kind::Nested => {
            let m = source.m.unwrap_or_default();
            nested_gamma_subfamily(k, m, source.depth.unwrap_or_else(|| nested_max_depth(k, m)))?
        }
    };
    Ok(family)
}

/// Family summary echoed into every report's config.
#[derive(Serialize)]
struct FamilySummary<'a> {
    label: &'a str,
    #[serde(rename = "K")]
    k: usize,
    messages: usize,
}

#[derive(Serialize)]
struct WithFamily<'a, A: Serialize> {
    #[serde(flatten)]
    args: &'a A,
    resolved_family: FamilySummary<'a>,
}

fn with_family<'a, A: Serialize>(args: &'a A, family: &'a PatternFamily) -> WithFamily<'a, A> {
    WithFamily {
        args,
        resolved_family: FamilySummary {
            label: family.label(),
            k: family.k(),
            messages: family.mu(),
        },
    }
}

fn format_of(output: &OutputArgs, default: Format) -> Format {
    output.format.unwrap_or(default)
}

fn figure1(a: Figure1Args) -> Result<(), CliError> {
    let rows = figure1_curve(a.k_max, &a.n)?;
    let bytes = match format_of(&a.output, Format::Csv) {
        Format::Csv => csv_table(&rows)?,
        Format::Json => json_report("figure1", &a, &rows)?,
    };
    emit(a.output.out.as_deref(), &bytes)
}

#[derive(Serialize)]
struct TermRow {
    step: usize,
    message: usize,
    conditional_entropy: f64,
    weight: f64,
}

fn bound(a: BoundArgs) -> Result<(), CliError> {
    let family = build_family(&a.family)?;
    let model = PatternFamilyModel::new(family.clone());
    let strategy = a.strategy.map(Strategy::from).unwrap_or(if family.mu() <= 10 {
        Strategy::Exhaustive
    } else {
        Strategy::Greedy
    });
    let report = best_sequence(&model, a.n, strategy, None)?;
    let bytes = match format_of(&a.output, Format::Json) {
        Format::Json => json_report("bound", &with_family(&a, &family), &report)?,
        Format::Csv => {
            let mut weight = 1.0;
            let rows: Vec<TermRow> = report
                .sequence
                .iter()
                .zip(&report.terms)
                .enumerate()
                .map(|(i, (&message, &h))| {
                    let row = TermRow {
                        step: i + 1,
                        message,
                        conditional_entropy: h,
                        weight,
                    };
                    weight /= a.n as f64;
                    row
                })
                .collect();
            csv_table(rows)?
        }
    };
    emit(a.output.out.as_deref(), &bytes)
}

#[derive(Serialize)]
struct Profile {
    sequence: Vec<usize>,
    horizon: usize,
    /// Entropy drop of step `l + 1`, relative to the per-message entropy.
    rho: Vec<f64>,
}

#[derive(Serialize)]
struct RhoRow {
    l: usize,
    rho: f64,
}

fn suffcond(a: SuffcondArgs) -> Result<(), CliError> {
    let family = build_family(&a.family)?;
    let model = PatternFamilyModel::new(family.clone());
    let sequence = match &a.sequence {
        Some(s) => s.clone(),
        None => {
            let len = (a.horizon + 1).min(model.message_count());
            best_sequence(&model, a.n, Strategy::Greedy, Some(len))?.sequence
        }
    };
    let rho = sufficient_condition_profile(&model, &sequence, a.horizon)?;
    let profile = Profile {
        sequence,
        horizon: a.horizon,
        rho,
    };
    let bytes = match format_of(&a.output, Format::Json) {
        Format::Json => json_report("suffcond", &with_family(&a, &family), &profile)?,
        Format::Csv => csv_table(profile.rho.iter().enumerate().map(|(i, &rho)| RhoRow { l: i + 1, rho }))?,
    };
    emit(a.output.out.as_deref(), &bytes)
}

fn prop5(a: Prop5Args) -> Result<(), CliError> {
    let report = if a.unreduced {
        prop5_triple_scan_unreduced(a.k)?
    } else {
        prop5_triple_scan(a.k)?
    };
    let bytes = match format_of(&a.output, Format::Json) {
        Format::Json => json_report("prop5", &a, &report)?,
        Format::Csv => csv_table(&report.rows)?,
    };
    emit(a.output.out.as_deref(), &bytes)
}

#[derive(Serialize)]
struct SessionRow {
    theta: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "L")]
    l: usize,
    download_bits: usize,
    measured_rate: f64,
    atypical: bool,
    success: bool,
}

#[derive(Serialize)]
struct ExperimentRow {
    trials: usize,
    failures: usize,
    empirical_error_rate: f64,
    download_bits: usize,
    mean_measured_rate: f64,
    achievable_rate: f64,
    converse_rate_upper_bound: f64,
    sandwich_holds: bool,
}

fn protocol_run(a: ProtocolRunArgs) -> Result<(), CliError> {
    let family = build_family(&a.family)?;
    let config = with_family(&a, &family);
    let format = format_of(&a.output, Format::Json);
    let bytes = if let Some(theta) = a.theta {
        let t = run_session(
            &family,
            a.n,
            a.l,
            theta,
            SessionSeeds::from_master(a.seed),
            a.target_failure,
        )?;
        match format {
            Format::Json => json_report("protocol-run", &config, &t)?,
            Format::Csv => csv_table([SessionRow {
                theta: t.theta,
                n: t.servers,
                l: t.message_bits,
                download_bits: t.download_bits,
                measured_rate: t.measured_rate,
                atypical: t.atypical,
                success: t.success,
            }])?,
        }
    } else {
        let r = rate_experiment(&family, a.n, a.l, a.trials.unwrap_or(1), a.seed, a.target_failure)?;
        match format {
            Format::Json => json_report("protocol-run", &config, &r)?,
            Format::Csv => csv_table([ExperimentRow {
                trials: r.trials,
                failures: r.failures,
                empirical_error_rate: r.empirical_error_rate,
                download_bits: r.download_bits,
                mean_measured_rate: r.mean_measured_rate,
                achievable_rate: r.achievable_rate,
                converse_rate_upper_bound: r.converse_rate_upper_bound,
                sandwich_holds: r.sandwich_holds,
            }])?,
        }
    };
    emit(a.output.out.as_deref(), &bytes)
}

#[derive(Serialize)]
struct AuditRow {
    server: usize,
    max_abs_deviation: f64,
    sigma: f64,
    frequencies_within_4_sigma: bool,
    chi_square: f64,
    degrees_of_freedom: usize,
    p_value: f64,
    independent: bool,
}

fn protocol_audit(a: ProtocolAuditArgs) -> Result<(), CliError> {
    let family = build_family(&a.family)?;
    let report = privacy_audit(&family, a.n, a.trials, a.bijection_samples, a.seed)?;
    let bytes = match format_of(&a.output, Format::Json) {
        Format::Json => json_report("protocol-audit", &with_family(&a, &family), &report)?,
        Format::Csv => csv_table(report.per_server.iter().map(|s| AuditRow {
            server: s.server,
            max_abs_deviation: s.max_abs_deviation,
            sigma: s.sigma,
            frequencies_within_4_sigma: s.frequencies_within_4_sigma,
            chi_square: s.chi_square,
            degrees_of_freedom: s.degrees_of_freedom,
            p_value: s.p_value,
            independent: s.independent,
        }))?,
    };
    emit(a.output.out.as_deref(), &bytes)
}

fn family_export(a: FamilyExportArgs) -> Result<(), CliError> {
    let family = build_family(&a.family)?;
    let mut doc = save_family(&family).into_bytes();
    doc.push(b'\n');
    emit(a.out.as_deref(), &doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use privsearch::bounds::converse_bound;

    fn source(kind: Kind, k: usize, m: Option<usize>) -> FamilySource {
        FamilySource {
            kind: Some(kind),
            k: Some(k),
            m,
            depth: None,
            family: None,
        }
    }

    #[test]
    fn builtin_families_resolve() {
        assert_eq!(build_family(&source(Kind::Exact, 5, None)).unwrap().mu(), 5);
        assert_eq!(build_family(&source(Kind::Disjoint, 12, Some(3))).unwrap().mu(), 4);
        assert_eq!(
            build_family(&source(Kind::Circular, 8, None)).unwrap().uniform_size(),
            Some(4)
        );
        let nested = build_family(&source(Kind::Nested, 1000, Some(300))).unwrap();
        assert_eq!(nested.mu(), nested_max_depth(1000, 300));
    }

    #[test]
    fn inconsistent_family_flags_are_usage_errors() {
        let e = build_family(&source(Kind::Exact, 5, Some(2))).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = build_family(&source(Kind::Disjoint, 12, None)).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = build_family(&source(Kind::Circular, 7, None)).unwrap_err();
        assert_eq!((e.kind(), e.exit_code()), ("OddK", 3));
    }

    #[test]
    fn model_uses_resolved_family() {
        let f = build_family(&source(Kind::Exact, 3, None)).unwrap();
        let model = PatternFamilyModel::new(f);
        let r = converse_bound(&model, 2, &[1, 2, 3]).unwrap();
        assert!((r.normalized_bound - 1.3629912289).abs() < 1e-9);
    }
}
