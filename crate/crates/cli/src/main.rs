//! Command-line front end: supercell design, channel simulation, baseline
//! comparison, and reference-table reproduction.
//!
//! Every run prints a report header echoing the tool version, the command,
//! the scene source, and the configuration knobs, so any number in the
//! output is traceable to a single (scene, config) pair. CSV outputs are
//! deterministic: identical invocations produce byte-identical files.
//!
//! Exit codes: 0 success, 2 user or configuration error (bad flags, bad
//! scene files, infeasible designs), 3 internal invariant violation.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hsf_sim_core::channel::{self, Aggregation, SimMode, SimOptions};
use hsf_sim_core::hsf::{self, AngleLookup, CoeffTable, RoundingPolicy};
use hsf_sim_core::raytracer::TraceBudget;
use hsf_sim_core::scenario::{select_tiles, Scene};
use hsf_sim_core::{Error, SPEED_OF_LIGHT};

/// Scene token that resolves to the built-in reference room.
const BUILTIN_SCENE: &str = "builtin:paper";

/// Reference comparison rows: receiver, relay chain, published plain and
/// metasurface powers (dBmW), published percent gain.
#[rustfmt::skip]
const REFERENCE_ROWS: [(&str, [&str; 2], f64, f64, f64); 4] = [
    ("(1.15, 0.6, 1.5)", ["10.0_3.5_0.5", "4.5_0.0_0.5"], 7.23, 16.411, 123.0),
    ("(1.15, 3.1, 1.5)", ["10.0_7.5_1.5", "3.5_0.0_0.5"], 8.24, 20.391, 147.0),
    ("(1.15, 5.6, 1.5)", ["10.0_5.5_1.5", "4.5_0.0_1.5"], 7.78, 17.841, 129.0),
    ("(1.15, 8.1, 1.5)", ["10.0_7.5_0.5", "5.5_0.0_0.5"], 14.91, 15.159, 1.67),
];

#[derive(Parser)]
#[command(
    name = "hsf-sim",
    version,
    about = "Metasurface-programmable indoor mmWave channel simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design an anomalous-reflection supercell from incidence and target
    /// reflection angles.
    Design(DesignArgs),
    /// Assemble and print the multipath channel for one receiver.
    Simulate(SimulateArgs),
    /// Compare plain-wall and metasurface received power for every
    /// receiver, with automatic relay selection.
    Compare(CompareArgs),
    /// Print an embedded reference table alongside recomputed columns.
    Tables(TablesArgs),
    /// Write the built-in reference scene as JSON.
    ExportScene(ExportSceneArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Floor,
    Round,
    Ceil,
}

impl From<PolicyArg> for RoundingPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Floor => RoundingPolicy::Floor,
            PolicyArg::Round => RoundingPolicy::Round,
            PolicyArg::Ceil => RoundingPolicy::Ceil,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Hsf,
    Plain,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Coherent,
    Noncoherent,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Coherent => Aggregation::Coherent,
            AggregationArg::Noncoherent => Aggregation::Noncoherent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LookupArg {
    Strict,
    Clamp,
}

impl From<LookupArg> for AngleLookup {
    fn from(l: LookupArg) -> Self {
        match l {
            LookupArg::Strict => AngleLookup::Strict,
            LookupArg::Clamp => AngleLookup::Clamp,
        }
    }
}

#[derive(Args)]
struct DesignArgs {
    /// Incidence angle, degrees.
    #[arg(long)]
    theta_i: f64,
    /// Target reflection angle, degrees.
    #[arg(long)]
    theta_r: f64,
    /// Diffraction order; negative orders steer back toward the normal.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    order: i32,
    /// Carrier wavelength, millimetres.
    #[arg(long, default_value_t = SPEED_OF_LIGHT / 60e9 * 1e3)]
    lambda_mm: f64,
    /// Unit-cell pitch, millimetres.
    #[arg(long, default_value_t = 1.0)]
    dx_mm: f64,
    /// How the fractional cell count snaps to an integer.
    #[arg(long, value_enum, default_value_t = PolicyArg::Round)]
    policy: PolicyArg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene JSON path, or `builtin:paper` for the built-in room.
    #[arg(long)]
    scene: String,
    /// Receiver index within the scene.
    #[arg(long, default_value_t = 0)]
    rx_index: usize,
    /// Wall treatment: metasurface tiles active, or plain baseline.
    #[arg(long, value_enum, default_value_t = ModeArg::Hsf)]
    mode: ModeArg,
    /// Configure these tiles (comma-separated ids) as a relay chain toward
    /// the receiver before simulating.
    #[arg(long)]
    chain: Option<String>,
    /// Write the component table as CSV to this path.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// How per-path powers combine into received power.
    #[arg(long, value_enum, default_value_t = AggregationArg::Noncoherent)]
    aggregation: AggregationArg,
    /// Maximum bounce count for baseline ray tracing.
    #[arg(long, default_value_t = 4)]
    max_bounce: usize,
    /// Beam acceptance tolerance around the steered direction, degrees.
    #[arg(long, default_value_t = 2.0)]
    beam_tol_deg: f64,
    /// Out-of-table angle handling for coefficient lookups.
    #[arg(long, value_enum, default_value_t = LookupArg::Clamp)]
    lookup: LookupArg,
    /// Lossless steering: reflect-tile coefficients forced to 0 dB.
    #[arg(long)]
    ideal_reflect: bool,
    /// Perfect absorption: leakage components omitted.
    #[arg(long)]
    ideal_absorb: bool,
    /// Keep accruing spreading loss beyond the first collimating tile.
    #[arg(long)]
    spreading_after_collimation: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Scene JSON path, or `builtin:paper` for the built-in room.
    #[arg(long)]
    scene: String,
    /// Write the comparison as CSV to this path.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Ideal metasurface: lossless steering and perfect absorption.
    #[arg(long)]
    ideal_hsf: bool,
    /// Maximum bounce count for baseline ray tracing.
    #[arg(long, default_value_t = 4)]
    max_bounce: usize,
}

#[derive(Args)]
struct TablesArgs {
    /// Which reference table to print: 1 absorption, 2 reflection/design,
    /// 3 received-power comparison.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    which: u8,
}

#[derive(Args)]
struct ExportSceneArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| run(cli));
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(_) => {
            eprintln!("error: internal invariant violation");
            3
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Design(args) => cmd_design(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Tables(args) => cmd_tables(args),
        Command::ExportScene(args) => cmd_export_scene(args),
    }
}

fn report_header(command: &str, scene: Option<&str>, config: &[(&str, String)]) {
    println!("# hsf-sim v{}", env!("CARGO_PKG_VERSION"));
    println!("# command: {command}");
    if let Some(s) = scene {
        println!("# scene: {s}");
    }
    if !config.is_empty() {
        let parts: Vec<String> = config.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("# config: {}", parts.join(" "));
    }
}

fn load_scene(spec: &str) -> Result<Scene, Error> {
    if spec == BUILTIN_SCENE {
        Scene::build_reference_room()
    } else {
        Scene::load(std::path::Path::new(spec))
    }
}

fn cmd_design(args: DesignArgs) -> Result<(), Error> {
    report_header(
        "design",
        None,
        &[
            ("theta_i_deg", format!("{}", args.theta_i)),
            ("theta_r_deg", format!("{}", args.theta_r)),
            ("order", format!("{}", args.order)),
            ("lambda_mm", format!("{:.6}", args.lambda_mm)),
            ("dx_mm", format!("{}", args.dx_mm)),
            (
                "policy",
                format!("{:?}", RoundingPolicy::from(args.policy)).to_lowercase(),
            ),
        ],
    );
    let design = hsf::design_supercell(
        args.theta_i.to_radians(),
        args.theta_r.to_radians(),
        args.order,
        args.lambda_mm * 1e-3,
        args.dx_mm * 1e-3,
        args.policy.into(),
    )?;
    println!(
        "supercell: N_m = {} cells of {:.3} mm (span {:.3} mm), order m = {}",
        design.n_cells,
        design.dx * 1e3,
        design.n_cells as f64 * design.dx * 1e3,
        design.order
    );
    println!(
        "incidence {:.3} deg -> target {:.3} deg, achieved {:.3} deg",
        design.theta_i.to_degrees(),
        design.theta_r_target.to_degrees(),
        design.theta_r_achieved.to_degrees()
    );
    println!(
        "phase step {:.4} deg per cell, slope {:.6} rad/mm",
        design.phase_step.to_degrees(),
        design.phase_slope * 1e-3
    );
    let profile: Vec<String> = design
        .phase_profile
        .iter()
        .map(|&(_, phi)| format!("{:.1}", phi.to_degrees()))
        .collect();
    println!("phase profile (deg): {}", profile.join(" "));
    Ok(())
}

fn sim_options(args: &SimulateArgs) -> SimOptions {
    SimOptions {
        mode: match args.mode {
            ModeArg::Hsf => SimMode::Hsf,
            ModeArg::Plain => SimMode::PlainBaseline,
        },
        lookup: args.lookup.into(),
        beam_tolerance: args.beam_tol_deg.to_radians(),
        spreading_after_collimation: args.spreading_after_collimation,
        ideal_reflection: args.ideal_reflect,
        ideal_absorption: args.ideal_absorb,
        polarization: hsf_sim_core::materials::Polarization::Unpolarized,
        budget: TraceBudget {
            max_order: args.max_bounce,
            ..TraceBudget::default()
        },
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let mut scene = load_scene(&args.scene)?;
    if let Some(chain) = &args.chain {
        let ids: Vec<&str> = chain.split(',').map(str::trim).collect();
        scene.configure_chain(args.rx_index, &ids)?;
    }
    let opts = sim_options(&args);
    report_header(
        "simulate",
        Some(&args.scene),
        &[
            ("rx_index", format!("{}", args.rx_index)),
            (
                "mode",
                match args.mode {
                    ModeArg::Hsf => "hsf".into(),
                    ModeArg::Plain => "plain".into(),
                },
            ),
            (
                "aggregation",
                match args.aggregation {
                    AggregationArg::Coherent => "coherent".into(),
                    AggregationArg::Noncoherent => "noncoherent".into(),
                },
            ),
            ("max_bounce", format!("{}", args.max_bounce)),
            ("beam_tol_deg", format!("{}", args.beam_tol_deg)),
            (
                "lookup",
                match args.lookup {
                    LookupArg::Strict => "strict".into(),
                    LookupArg::Clamp => "clamp".into(),
                },
            ),
            ("ideal_reflect", format!("{}", args.ideal_reflect)),
            ("ideal_absorb", format!("{}", args.ideal_absorb)),
            (
                "spreading_after_collimation",
                format!("{}", args.spreading_after_collimation),
            ),
            ("chain", args.chain.clone().unwrap_or_else(|| "none".into())),
        ],
    );
    let rx = scene.rx_point(args.rx_index)?;
    let table = CoeffTable::load_default()?;
    let cr = channel::assemble_cir(&scene, scene.tx, rx, &table, &opts)?;
    println!(
        "{:>3} {:<15} {:>10} {:>9} {:>10} {:>8} {:>8} {:>7}  via",
        "id", "kind", "delay_ns", "gain_db", "phase_rad", "aoa_el", "aoa_az", "bounces"
    );
    for (i, c) in cr.components.iter().enumerate() {
        println!(
            "{:>3} {:<15} {:>10.4} {:>9.3} {:>10.6} {:>8.3} {:>8.3} {:>7}  {}",
            i,
            c.kind.label(),
            c.delay * 1e9,
            c.gain_db(),
            c.gain.arg(),
            c.aoa_elevation.to_degrees(),
            c.aoa_azimuth.to_degrees(),
            c.bounce_count,
            if c.via_ids.is_empty() {
                "-".to_owned()
            } else {
                c.via_ids.join(";")
            }
        );
    }
    let p = channel::received_power(&cr, scene.p_tx_dbmw, args.aggregation.into());
    let label = match args.aggregation {
        AggregationArg::Coherent => "coherent",
        AggregationArg::Noncoherent => "noncoherent",
    };
    println!(
        "received power ({label}): {p:.3} dBmW (tx {:.3} dBmW, {} components)",
        scene.p_tx_dbmw,
        cr.components.len()
    );
    if let Some(path) = &args.csv_out {
        std::fs::write(path, cr.to_csv())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), Error> {
    let scene = load_scene(&args.scene)?;
    if scene.rx.is_empty() {
        return Err(Error::SceneValidation("scene has no receivers".into()));
    }
    report_header(
        "compare",
        Some(&args.scene),
        &[
            ("ideal_hsf", format!("{}", args.ideal_hsf)),
            ("max_bounce", format!("{}", args.max_bounce)),
            ("aggregation", "noncoherent".into()),
        ],
    );
    let table = CoeffTable::load_default()?;
    let budget = TraceBudget {
        max_order: args.max_bounce,
        ..TraceBudget::default()
    };
    let hsf_opts = SimOptions {
        ideal_reflection: args.ideal_hsf,
        ideal_absorption: args.ideal_hsf,
        budget: budget.clone(),
        ..SimOptions::default()
    };
    println!(
        "{:<5} {:<22} {:<28} {:>11} {:>11} {:>9}",
        "rx", "position_m", "chain", "plain_dbmw", "hsf_dbmw", "gain_pct"
    );
    let mut csv = String::from("rx_id,rx_x,rx_y,rx_z,chain,plain_dbmw,hsf_dbmw,gain_percent\n");
    for i in 0..scene.rx.len() {
        let rx = scene.rx[i];
        let p_plain = hsf_sim_core::raytracer::plain_received_power(
            &scene,
            scene.tx,
            rx,
            &budget,
            hsf_sim_core::materials::Polarization::Unpolarized,
            Aggregation::Noncoherent,
        )?;
        let assignment = select_tiles(&scene, i, &table, &hsf_opts)?;
        let p_hsf = assignment.predicted_power_dbmw;
        let gain = channel::gain_percent(p_hsf, p_plain);
        let gain_text = match gain {
            Ok(g) => format!("{g:.2}"),
            Err(_) => "n/a".to_owned(),
        };
        let chain = assignment.chain.join(";");
        println!(
            "rx{:<3} ({:>5.2}, {:>5.2}, {:>4.2}) {:<28} {:>11.3} {:>11.3} {:>9}",
            i, rx.x, rx.y, rx.z, chain, p_plain, p_hsf, gain_text
        );
        use std::fmt::Write as _;
        let _ = writeln!(
            csv,
            "rx{},{},{},{},{},{:.6},{:.6},{}",
            i, rx.x, rx.y, rx.z, chain, p_plain, p_hsf, gain_text
        );
    }
    if let Some(path) = &args.csv_out {
        std::fs::write(path, csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_tables(args: TablesArgs) -> Result<(), Error> {
    let table = CoeffTable::load_default()?;
    match args.which {
        1 => {
            report_header("tables", None, &[("which", "1".into())]);
            println!(
                "{:>10} {:>13} {:>14}",
                "theta_deg", "alpha_abs_db", "leak_power_pct"
            );
            for row in table.absorption_rows() {
                println!(
                    "{:>10.1} {:>13.1} {:>14.5}",
                    row.theta_i_deg,
                    row.alpha_db,
                    100.0 * 10f64.powf(row.alpha_db / 10.0)
                );
            }
        }
        2 => {
            report_header("tables", None, &[("which", "2".into())]);
            println!(
                "{:>8} {:>8} {:>7} {:>7} {:>4} {:>12} {:>9} {:>9} {:>9}",
                "theta_i",
                "theta_r",
                "N_ref",
                "N_calc",
                "dN",
                "achieved",
                "d_angle",
                "alpha_db",
                "refl_pct"
            );
            let lambda = SPEED_OF_LIGHT / 60e9;
            let dx = hsf::DEFAULT_CELL_PITCH_M;
            for row in table.reflection_rows() {
                let design = hsf::design_supercell(
                    row.theta_i_deg.to_radians(),
                    row.theta_r_deg.to_radians(),
                    1,
                    lambda,
                    dx,
                    RoundingPolicy::Round,
                )?;
                let d_n = design.n_cells as i64 - row.n_cells as i64;
                let (achieved, d_angle) = match hsf::achieved_angle(
                    row.n_cells,
                    row.theta_i_deg.to_radians(),
                    1,
                    lambda,
                    dx,
                ) {
                    Ok(a) => (
                        format!("{:.2}", a.to_degrees()),
                        format!("{:+.2}", a.to_degrees() - row.theta_r_deg),
                    ),
                    Err(_) => ("evanescent".to_owned(), "n/a".to_owned()),
                };
                println!(
                    "{:>8.0} {:>8.0} {:>7} {:>7} {:>+4} {:>12} {:>9} {:>9.3} {:>9.2}",
                    row.theta_i_deg,
                    row.theta_r_deg,
                    row.n_cells,
                    design.n_cells,
                    d_n,
                    achieved,
                    d_angle,
                    row.alpha_db,
                    row.reflected_power_pct
                );
            }
            for note in table.audit_notes() {
                println!("note: {note}");
            }
        }
        3 => {
            report_header("tables", None, &[("which", "3".into())]);
            println!(
                "{:<18} {:<28} {:>11} {:>9} {:>12} {:>11} {:>7}",
                "rx_m", "chain", "plain_dbmw", "hsf_dbmw", "gain_printed", "gain_recalc", "delta"
            );
            for (rx, chain, plain, hsf_p, printed) in REFERENCE_ROWS {
                let recalc = channel::gain_percent(hsf_p, plain)?;
                println!(
                    "{:<18} {:<28} {:>11.2} {:>9.3} {:>12.2} {:>11.2} {:>+7.2}",
                    rx,
                    chain.join(";"),
                    plain,
                    hsf_p,
                    printed,
                    recalc,
                    recalc - printed
                );
            }
        }
        _ => unreachable!("clap range guards 1..=3"),
    }
    Ok(())
}

fn cmd_export_scene(args: ExportSceneArgs) -> Result<(), Error> {
    let scene = Scene::build_reference_room()?;
    let json = scene.to_json();
    match &args.out {
        Some(path) => {
            std::fs::write(path, json)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            std::io::stdout().write_all(json.as_bytes())?;
        }
    }
    Ok(())
}
