//! `fpreduce`: command-line frontend for the fixed-point reduction toolkit.
//!
//! Exit codes: `0` on success, `2` when inputs fail validation (malformed
//! files, out-of-range parameters, points that are not fixed points), `3`
//! on internal errors that indicate a bug.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fpreduce_core::brouwer::{BoolCircuit, DiscreteBrouwerInstance};
use fpreduce_core::circuit::{compile, SyncCircuit};
use fpreduce_core::game::{
    add_loopback, assignment_from_fixed_point, build_game, construct_equilibrium,
    extract_gate_values, rescale_tenth, verify_regret, MixWeight, PolymatrixGame, Profile,
};
use fpreduce_core::par;
use fpreduce_core::reduction::{
    build_reduction, count_poorly_positioned, displacement_geometry_check, grid_search,
    sqrt2_approx, ReductionParams,
};
use fpreduce_core::Rat;

/// A failure with a designated exit code.
enum Failure {
    /// Bad input: exit code 2.
    Validation(String),
    /// Internal invariant violation: exit code 3.
    Internal(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(msg) => write!(f, "{msg}"),
            Failure::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn invalid(err: impl fmt::Display) -> Failure {
    Failure::Validation(err.to_string())
}

#[derive(Parser)]
#[command(
    name = "fpreduce",
    version,
    about = "Reduce discrete fixed-point instances to circuits and games"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a straight-line program into a synchronous circuit (JSON).
    Compile {
        /// Path to the program source.
        #[arg(long)]
        slp: PathBuf,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recenter a color netlist on a larger grid so its border bands are
    /// computed by the netlist itself.
    Thicken {
        /// Path to the color netlist.
        #[arg(long)]
        netlist: PathBuf,
        /// Border band width as a rational in (0, 1/2).
        #[arg(long, default_value = "1/5")]
        eps: String,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the displacement-averaging circuit of a color netlist.
    Reduce {
        /// Path to the color netlist (2n inputs, 3 one-hot outputs).
        #[arg(long)]
        netlist: PathBuf,
        /// Grid exponent; inferred from the netlist when omitted.
        #[arg(long)]
        n: Option<u32>,
        /// Samples averaged per point.
        #[arg(long, default_value_t = 5)]
        k: u32,
        /// Border band width the instance was built with.
        #[arg(long, default_value = "1/5")]
        eps: String,
        /// Displacement magnitude; defaults to (r-1)*eps*9/10.
        #[arg(long = "eps-prime")]
        eps_prime: Option<String>,
        /// Precision of the rational approximation to the square root of 2.
        #[arg(long = "sqrt2-prec", default_value = "1/100000")]
        sqrt2_prec: String,
        /// Emit the macro-level program source instead of JSON.
        #[arg(long = "emit-slp", default_value_t = false)]
        emit_slp: bool,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Close a circuit over [0,1] into a loopback system and build its
    /// twenty-action polymatrix game.
    Game {
        /// Path to the circuit JSON (bare or under a "circuit" key).
        #[arg(long)]
        circuit: PathBuf,
        /// Mix coupling weight; defaults to 40P+1 for entry bound P.
        #[arg(long = "M")]
        mix_weight: Option<String>,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an exactly verifiable equilibrium from a fixed point.
    Equilibrium {
        /// Path to the circuit JSON (bare or under a "circuit" key).
        #[arg(long)]
        circuit: PathBuf,
        /// The fixed point, e.g. "1/2,1/2", in the circuit's own scale.
        #[arg(long)]
        point: String,
        /// Mix coupling weight; defaults to 40P+1 for entry bound P.
        #[arg(long = "M")]
        mix_weight: Option<String>,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute every player's exact regret under a profile.
    Verify {
        /// Path to the game JSON (bare or under a "game" key).
        #[arg(long)]
        game: PathBuf,
        /// Path to the profile JSON (bare array or under a "profile" key).
        #[arg(long)]
        profile: PathBuf,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan a grid for the points a circuit moves least.
    Search {
        /// Path to the circuit JSON (bare or under a "circuit" key).
        #[arg(long)]
        circuit: PathBuf,
        /// Lattice density: resolution+1 points per axis.
        #[arg(long, default_value_t = 64)]
        resolution: u32,
        /// Keep only the best hits.
        #[arg(long, default_value_t = 10)]
        limit: usize,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the exact minimum displacement over color combinations.
    CheckGeometry {
        /// Grid exponent.
        #[arg(long)]
        n: u32,
        /// Samples averaged per point.
        #[arg(long, default_value_t = 5)]
        k: u32,
        /// Border band width.
        #[arg(long, default_value = "1/5")]
        eps: String,
        /// Displacement magnitude; defaults to (r-1)*eps*9/10.
        #[arg(long = "eps-prime")]
        eps_prime: Option<String>,
        /// Precision of the rational approximation to the square root of 2.
        #[arg(long = "sqrt2-prec", default_value = "1/100000")]
        sqrt2_prec: String,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit how many samples of a displacement train sit too close to a
    /// grid line to decode reliably (at most 2 must).
    CheckSamples {
        /// Grid exponent.
        #[arg(long)]
        n: u32,
        /// Samples averaged per point.
        #[arg(long, default_value_t = 5)]
        k: u32,
        /// Border band width.
        #[arg(long, default_value = "1/5")]
        eps: String,
        /// Displacement magnitude; defaults to (r-1)*eps*9/10.
        #[arg(long = "eps-prime")]
        eps_prime: Option<String>,
        /// Precision of the rational approximation to the square root of 2.
        #[arg(long = "sqrt2-prec", default_value = "1/100000")]
        sqrt2_prec: String,
        /// Audit a single point, e.g. "1/8,1/8".
        #[arg(long, conflicts_with_all = ["resolution", "samples"])]
        point: Option<String>,
        /// Audit the full (resolution+1)^2 lattice over [0,1]^2.
        #[arg(long, conflicts_with = "samples")]
        resolution: Option<u32>,
        /// Audit this many seeded random points.
        #[arg(long)]
        samples: Option<u64>,
        /// Seed for --samples.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_pretty(value: &serde_json::Value) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Internal(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn parse_rat(text: &str, what: &str) -> Result<Rat> {
    Rat::from_str(text.trim()).map_err(|e| Failure::Validation(format!("bad {what} {text:?}: {e}")))
}

fn parse_point(text: &str) -> Result<(Rat, Rat)> {
    let (x, y) = text
        .split_once(',')
        .ok_or_else(|| Failure::Validation(format!("bad point {text:?}: expected \"x,y\"")))?;
    Ok((
        parse_rat(x, "point coordinate")?,
        parse_rat(y, "point coordinate")?,
    ))
}

/// Accept either a bare value or the same value nested under `key` (so the
/// output of one subcommand feeds the next without editing).
fn read_json_maybe_nested<T: serde::de::DeserializeOwned>(path: &Path, key: &str) -> Result<T> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("{} is not JSON: {e}", path.display())))?;
    let inner = match value.get(key) {
        Some(nested) => nested.clone(),
        None => value,
    };
    serde_json::from_value(inner)
        .map_err(|e| Failure::Validation(format!("{} is not a valid {key}: {e}", path.display())))
}

fn load_circuit(path: &Path) -> Result<SyncCircuit> {
    let circ: SyncCircuit = read_json_maybe_nested(path, "circuit")?;
    circ.validate().map_err(invalid)?;
    Ok(circ)
}

fn load_netlist(path: &Path) -> Result<BoolCircuit> {
    BoolCircuit::parse(&read_text(path)?).map_err(invalid)
}

fn build_params(
    n: u32,
    k: u32,
    eps: &str,
    eps_prime: Option<&str>,
    sqrt2_prec: &str,
) -> Result<ReductionParams> {
    let eps = parse_rat(eps, "eps")?;
    let prec = parse_rat(sqrt2_prec, "sqrt2-prec")?;
    if prec.is_negative() || prec.is_zero() {
        return Err(Failure::Validation("sqrt2-prec must be positive".into()));
    }
    let r = sqrt2_approx(&prec);
    let eps_prime = match eps_prime {
        Some(text) => parse_rat(text, "eps-prime")?,
        None => &(&(&r - &Rat::one()) * &eps) * &Rat::new(9, 10),
    };
    let params = ReductionParams {
        n,
        k,
        eps,
        eps_prime,
        r,
    };
    params.validate().map_err(invalid)?;
    Ok(params)
}

/// Close a unit-bound circuit into a system and build its game.
fn close_and_build(
    circ: &SyncCircuit,
    mix_weight: Option<&str>,
) -> Result<(fpreduce_core::game::LoopbackSystem, PolymatrixGame)> {
    if circ.bound != Rat::one() {
        return Err(Failure::Validation(format!(
            "expected a circuit over [0, 1], got bound {}",
            circ.bound
        )));
    }
    let system = add_loopback(&rescale_tenth(circ)).map_err(invalid)?;
    let weight = match mix_weight {
        Some(text) => MixWeight::Fixed(parse_rat(text, "mix weight")?),
        None => MixWeight::Auto,
    };
    let game = build_game(&system, weight).map_err(invalid)?;
    Ok((system, game))
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Compile { slp, out } => {
            let source = read_text(&slp)?;
            let program = fpreduce_core::slp::parse_program(&source)
                .and_then(|p| p.expand())
                .map_err(invalid)?;
            let circuit = compile(&program).map_err(invalid)?;
            let json = to_pretty(&serde_json::json!({ "circuit": circuit }))?;
            write_output(out.as_ref(), &json)
        }

        Cmd::Thicken { netlist, eps, out } => {
            let circuit = load_netlist(&netlist)?;
            let eps = parse_rat(&eps, "eps")?;
            let n = instance_exponent(&circuit)?;
            let instance = DiscreteBrouwerInstance::new(n, circuit).map_err(invalid)?;
            let thickened = fpreduce_core::brouwer::thicken(&instance, &eps).map_err(invalid)?;
            let json = to_pretty(&serde_json::json!({
                "n": thickened.instance.n,
                "offset": [thickened.offset.0, thickened.offset.1],
                "netlist": thickened.instance.circuit.to_text(),
            }))?;
            write_output(out.as_ref(), &json)
        }

        Cmd::Reduce {
            netlist,
            n,
            k,
            eps,
            eps_prime,
            sqrt2_prec,
            emit_slp,
            out,
        } => {
            let circuit = load_netlist(&netlist)?;
            let inferred = instance_exponent(&circuit)?;
            let n = match n {
                Some(n) if n != inferred => {
                    return Err(Failure::Validation(format!(
                        "--n {n} does not match the netlist's {} inputs",
                        circuit.num_inputs
                    )))
                }
                _ => inferred,
            };
            let params = build_params(n, k, &eps, eps_prime.as_deref(), &sqrt2_prec)?;
            let instance = DiscreteBrouwerInstance::new(n, circuit).map_err(invalid)?;
            let reduction = build_reduction(&instance, &params).map_err(invalid)?;
            if emit_slp {
                write_output(out.as_ref(), &reduction.source)
            } else {
                let json = to_pretty(&serde_json::json!({
                    "params": reduction.params,
                    "circuit": reduction.circuit,
                }))?;
                write_output(out.as_ref(), &json)
            }
        }

        Cmd::Game {
            circuit,
            mix_weight,
            out,
        } => {
            let circ = load_circuit(&circuit)?;
            let (system, game) = close_and_build(&circ, mix_weight.as_deref())?;
            let json = to_pretty(&serde_json::json!({
                "mix_weight": game.mix_weight,
                "system": system,
                "game": game,
            }))?;
            write_output(out.as_ref(), &json)
        }

        Cmd::Equilibrium {
            circuit,
            point,
            mix_weight,
            out,
        } => {
            let circ = load_circuit(&circuit)?;
            let (x, y) = parse_point(&point)?;
            let (system, game) = close_and_build(&circ, mix_weight.as_deref())?;
            let assignment = assignment_from_fixed_point(&system, &x, &y).map_err(invalid)?;
            let profile = construct_equilibrium(&game, &system, &assignment).map_err(invalid)?;
            let extraction = extract_gate_values(&game, &system, &profile)
                .map_err(|e| Failure::Internal(e.to_string()))?;
            if !extraction.consistent || extraction.induced_point != (x.clone(), y.clone()) {
                return Err(Failure::Internal(
                    "constructed profile does not extract back to its fixed point".into(),
                ));
            }
            let json = to_pretty(&serde_json::json!({
                "mix_weight": game.mix_weight,
                "point": [x, y],
                "profile": profile,
            }))?;
            write_output(out.as_ref(), &json)
        }

        Cmd::Verify { game, profile, out } => {
            let game: PolymatrixGame = read_json_maybe_nested(&game, "game")?;
            let profile: Profile = read_json_maybe_nested(&profile, "profile")?;
            let report = verify_regret(&game, &profile).map_err(invalid)?;
            let json = to_pretty(&serde_json::json!({
                "max_regret": report.max_regret,
                "per_player": report.per_player,
            }))?;
            write_output(out.as_ref(), &json)
        }

        Cmd::Search {
            circuit,
            resolution,
            limit,
            out,
        } => {
            if resolution == 0 {
                return Err(Failure::Validation("resolution must be positive".into()));
            }
            let circ = load_circuit(&circuit)?;
            let mut hits = grid_search(&circ, resolution).map_err(invalid)?;
            hits.truncate(limit);
            let json = to_pretty(&serde_json::json!({
                "resolution": resolution,
                "hits": hits,
            }))?;
            write_output(out.as_ref(), &json)
        }

        Cmd::CheckGeometry {
            n,
            k,
            eps,
            eps_prime,
            sqrt2_prec,
            out,
        } => {
            let params = build_params(n, k, &eps, eps_prime.as_deref(), &sqrt2_prec)?;
            let report = displacement_geometry_check(&params);
            let json = to_pretty(&serde_json::json!({
                "params": params,
                "geometry": report,
            }))?;
            write_output(out.as_ref(), &json)
        }

        Cmd::CheckSamples {
            n,
            k,
            eps,
            eps_prime,
            sqrt2_prec,
            point,
            resolution,
            samples,
            seed,
            out,
        } => {
            let params = build_params(n, k, &eps, eps_prime.as_deref(), &sqrt2_prec)?;
            let points: Vec<(Rat, Rat)> = if let Some(text) = &point {
                vec![parse_point(text)?]
            } else if let Some(res) = resolution {
                if res == 0 {
                    return Err(Failure::Validation("resolution must be positive".into()));
                }
                let denom = Rat::int(res as i64);
                let mut pts = Vec::with_capacity(((res + 1) * (res + 1)) as usize);
                for i in 0..=res {
                    for j in 0..=res {
                        pts.push((&Rat::int(i as i64) / &denom, &Rat::int(j as i64) / &denom));
                    }
                }
                pts
            } else if let Some(count) = samples {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        let den = rng.gen_range(1i64..=1 << 20);
                        let nx = rng.gen_range(0..=den);
                        let ny = rng.gen_range(0..=den);
                        (Rat::new(nx, den), Rat::new(ny, den))
                    })
                    .collect()
            } else {
                return Err(Failure::Validation(
                    "choose one of --point, --resolution, --samples".into(),
                ));
            };

            let counts = par::map_slice(&points, |(x, y)| count_poorly_positioned(&params, x, y));
            let (worst_idx, worst) = counts
                .iter()
                .enumerate()
                .max_by_key(|(i, c)| (**c, std::cmp::Reverse(*i)))
                .map(|(i, c)| (i, *c))
                .expect("at least one point");
            let json = to_pretty(&serde_json::json!({
                "params": params,
                "points_checked": points.len(),
                "max_poorly_positioned": worst,
                "worst_point": [points[worst_idx].0.clone(), points[worst_idx].1.clone()],
                "allowed": 2,
            }))?;
            write_output(out.as_ref(), &json)?;
            if worst > 2 {
                return Err(Failure::Validation(format!(
                    "{worst} poorly positioned samples at ({}, {}), allowed at most 2",
                    points[worst_idx].0, points[worst_idx].1
                )));
            }
            Ok(())
        }
    }
}

/// Infer the grid exponent from a netlist's input count (2n wires).
fn instance_exponent(circuit: &BoolCircuit) -> Result<u32> {
    if circuit.num_inputs == 0 || !circuit.num_inputs.is_multiple_of(2) {
        return Err(Failure::Validation(format!(
            "netlist has {} inputs; expected an even, positive count",
            circuit.num_inputs
        )));
    }
    Ok((circuit.num_inputs / 2) as u32)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            match failure {
                Failure::Validation(_) => ExitCode::from(2),
                Failure::Internal(_) => ExitCode::from(3),
            }
        }
    }
}
