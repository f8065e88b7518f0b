mod io;

use clap::{error::ErrorKind, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use choimat::arveson::{
    arveson_extreme_check, is_cstar_extreme, renormalize, weak_independence,
    ArvesonDecomposition, ExtremalityVerdict,
};
use choimat::certify::{alpha_norm, block_positivity, is_cocp, is_cp, is_psd, random_unit_vector};
use choimat::choi::{
    choi_of, max_entangled_choi, membership_d, product_with_identity, transposition_choi,
    MembershipVerdict,
};
use choimat::choi_family::{
    choi_map_classic, is_positive_abc, near_region_boundary, phi_abc_images, r_matrix,
    rho_lambda, w_minus, ChoiFamilyParams, SWEEP_WITNESS_LEVEL,
};
use choimat::linalg::{partial_transpose, ComplexMatrix};
use choimat::symmetry::{
    classify_involution, partial_symmetry_fixture, random_symmetry_in_d, reduce_to_transposition,
    triple_reflection_symmetry, InvolutionKind, PartialSymmetryFixture,
};

use io::{emit, format_matrix, matrix_json, MatrixFile};

/// Exit codes: 0 success or affirmative verdict, 1 usage or parse error,
/// 2 definite negative finding (witness found, not reducible), 3 sweep
/// cross-check disagreement.
#[derive(Parser)]
#[command(name = "choimat", version, about = "Positive maps on small matrix algebras: \
certification, fixtures, reductions, extremality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis battery for a bipartite operator file: structural
    /// checks, membership, involution class, CP/coCP, alpha norm.
    Analyze {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Emit the report as a single JSON object.
        #[arg(long)]
        json: bool,
    },
    /// Write a named fixture as a matrix file (stdout unless --out).
    ///
    /// Names: w [n], wminus, r, rho_lambda LAMBDA, choi_classic, max_ent N,
    /// p_tensor_id [n], random_symmetry, s0, partial_fixture K.
    Gen {
        name: String,
        /// Numeric argument for the names that need one.
        value: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Try to reduce a symmetry to the transposition form by local
    /// unitaries; prints the conjugating pair on success.
    Reduce {
        path: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Cross-check the closed-form positivity region of the diagonal-cyclic
    /// family against the block-positivity certifier on a grid; CSV output.
    SweepChoi {
        #[arg(long, default_value_t = 0.25)]
        grid_step: f64,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid points this close to the region boundary are reported but
        /// not counted as disagreements.
        #[arg(long, default_value_t = 1e-6)]
        margin: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep the membership segment instead of the parameter cube.
        #[arg(long)]
        segment: bool,
    },
    /// Extremality battery for a family of positive operators summing to a
    /// multiple of the identity (one file per operator).
    Arveson {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Analyze { path, seed, restarts, tol, json } => {
            cmd_analyze(&path, seed, restarts, tol, json)
        }
        Command::Gen { name, value, seed, out } => cmd_gen(&name, value.as_deref(), seed, out.as_deref()),
        Command::Reduce { path, tol, json } => cmd_reduce(&path, tol, json),
        Command::SweepChoi { grid_step, restarts, seed, margin, out, segment } => {
            if segment {
                cmd_sweep_segment(restarts, seed, out.as_deref())
            } else {
                cmd_sweep_grid(grid_step, restarts, seed, margin, out.as_deref())
            }
        }
        Command::Arveson { paths, tol, json } => cmd_arveson(&paths, tol, json),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

#[derive(serde::Serialize)]
struct AnalyzeReport {
    dim1: usize,
    dim2: usize,
    hermitian: bool,
    trace: f64,
    unital: bool,
    min_value_found: f64,
    witness_found: bool,
    restarts: usize,
    membership: &'static str,
    involution: &'static str,
    support_rank: usize,
    completely_positive: Option<bool>,
    co_completely_positive: Option<bool>,
    alpha_norm: f64,
}

fn cmd_analyze(path: &Path, seed: u64, restarts: usize, tol: f64, json: bool) -> Result<u8, String> {
    let op = MatrixFile::read(path)?.to_bipartite()?;
    let membership = membership_d(&op, restarts, seed);
    let involution = classify_involution(&op.matrix, tol);
    let cp = is_cp(&op, tol).ok();
    let cocp = is_cocp(&op, tol).ok();
    let alpha = alpha_norm(&op, restarts, 200, seed);

    let report = AnalyzeReport {
        dim1: op.dim1,
        dim2: op.dim2,
        hermitian: membership.hermitian,
        trace: membership.trace_value,
        unital: membership.unital,
        min_value_found: membership.block_positive.min_value_found,
        witness_found: membership.block_positive.has_witness(),
        restarts,
        membership: match membership.verdict {
            MembershipVerdict::Member => "member",
            MembershipVerdict::NonMember => "non-member",
            MembershipVerdict::Inconclusive => "inconclusive",
        },
        involution: match involution.kind {
            InvolutionKind::Symmetry => "symmetry",
            InvolutionKind::PartialSymmetry => "partial-symmetry",
            InvolutionKind::Neither => "neither",
        },
        support_rank: involution.support_rank,
        completely_positive: cp,
        co_completely_positive: cocp,
        alpha_norm: alpha.value,
    };

    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        let opt = |v: Option<bool>| match v {
            Some(true) => "true",
            Some(false) => "false",
            None => "n/a",
        };
        println!("operator: bipartite {} x {}", report.dim1, report.dim2);
        println!("hermitian: {}", report.hermitian);
        println!("trace: {}", report.trace);
        println!("unital: {}", report.unital);
        if report.witness_found {
            println!("block positivity: witness found, min value {}", report.min_value_found);
        } else {
            println!(
                "block positivity: no witness in {} restarts, min value {}",
                report.restarts, report.min_value_found
            );
        }
        println!("membership: {}", report.membership);
        println!("involution: {} (support rank {})", report.involution, report.support_rank);
        println!("completely positive: {}", opt(report.completely_positive));
        println!("co-completely positive: {}", opt(report.co_completely_positive));
        println!("alpha norm: {} ({} restarts)", report.alpha_norm, report.restarts);
    }

    Ok(if membership.verdict == MembershipVerdict::NonMember { 2 } else { 0 })
}

fn parse_value<T: std::str::FromStr>(value: Option<&str>, what: &str) -> Result<T, String> {
    let raw = value.ok_or(format!("fixture needs {what}"))?;
    raw.parse().map_err(|_| format!("cannot parse `{raw}` as {what}"))
}

fn cmd_gen(name: &str, value: Option<&str>, seed: u64, out: Option<&Path>) -> Result<u8, String> {
    let file = match name {
        "w" => {
            let n: usize = match value {
                Some(_) => parse_value(value, "the factor dimension n")?,
                None => 3,
            };
            if !(2..=8).contains(&n) {
                return Err("the factor dimension must be between 2 and 8".into());
            }
            MatrixFile::from_bipartite(&transposition_choi(n))
        }
        "wminus" => MatrixFile::from_bipartite(&w_minus()),
        "r" => MatrixFile::from_bipartite(&r_matrix()),
        "rho_lambda" => {
            let lambda: f64 = parse_value(value, "the segment parameter lambda")?;
            MatrixFile::from_bipartite(&rho_lambda(lambda).map_err(|e| e.to_string())?)
        }
        "choi_classic" => MatrixFile::from_bipartite(&choi_map_classic()),
        "max_ent" => {
            let n: usize = parse_value(value, "the factor dimension n")?;
            if !(2..=8).contains(&n) {
                return Err("the factor dimension must be between 2 and 8".into());
            }
            MatrixFile::from_bipartite(&max_entangled_choi(n))
        }
        "p_tensor_id" => {
            let n: usize = match value {
                Some(_) => parse_value(value, "the factor dimension n")?,
                None => 3,
            };
            if !(2..=8).contains(&n) {
                return Err("the factor dimension must be between 2 and 8".into());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_unit_vector(n, &mut rng);
            let op = product_with_identity(&p.outer(&p), n).map_err(|e| e.to_string())?;
            MatrixFile::from_bipartite(&op)
        }
        "random_symmetry" => MatrixFile::from_bipartite(&random_symmetry_in_d(3, seed)),
        "s0" => MatrixFile::from_bipartite(&triple_reflection_symmetry()),
        "partial_fixture" => {
            let k: usize = parse_value(value, "the fixture index (1 or 2)")?;
            let which = match k {
                1 => PartialSymmetryFixture::SwapPlusCross,
                2 => PartialSymmetryFixture::SwapPlusCorner,
                _ => return Err("the fixture index must be 1 or 2".into()),
            };
            MatrixFile::from_bipartite(&partial_symmetry_fixture(which))
        }
        other => return Err(format!("unknown fixture name: {other}")),
    };
    emit(out, &file.to_json())?;
    Ok(0)
}

fn cmd_reduce(path: &Path, tol: f64, json: bool) -> Result<u8, String> {
    let op = MatrixFile::read(path)?.to_bipartite()?;
    match reduce_to_transposition(&op, tol) {
        Ok(res) => {
            if json {
                let payload = serde_json::json!({
                    "reducible": true,
                    "reconstruction_error": res.reconstruction_error,
                    "u": matrix_json(&res.u),
                    "v": matrix_json(&res.v),
                });
                println!("{}", serde_json::to_string_pretty(&payload).expect("serializes"));
            } else {
                println!("reducible: true");
                println!("reconstruction error: {}", res.reconstruction_error);
                println!("u:\n{}", format_matrix(&res.u));
                println!("v:\n{}", format_matrix(&res.v));
            }
            Ok(0)
        }
        Err(e) => {
            if json {
                let payload = serde_json::json!({
                    "reducible": false,
                    "reason": e.to_string(),
                });
                println!("{}", serde_json::to_string_pretty(&payload).expect("serializes"));
            } else {
                println!("reducible: false");
                println!("reason: {e}");
            }
            Ok(2)
        }
    }
}

fn cmd_sweep_grid(
    step: f64,
    restarts: usize,
    seed: u64,
    margin: f64,
    out: Option<&Path>,
) -> Result<u8, String> {
    if !(step > 0.0 && step.is_finite()) {
        return Err("--grid-step must be positive and finite".into());
    }
    let mut csv = String::from("a,b,c,cond,cert,min_value\n");
    if step > 3.0 {
        emit(out, &csv)?;
        eprintln!("empty grid: no multiples of {step} inside [0, 3]");
        return Ok(0);
    }

    let count = (3.0 / step + 1e-9).floor() as usize + 1;
    let mut grid = Vec::with_capacity(count * count * count);
    for i in 0..count {
        for j in 0..count {
            for k in 0..count {
                grid.push(ChoiFamilyParams::new(
                    i as f64 * step,
                    j as f64 * step,
                    k as f64 * step,
                ));
            }
        }
    }

    // Spend the restart budget in batches so definite negatives stop early;
    // derived per-point seeds keep the output independent of scheduling.
    let rows: Vec<(ChoiFamilyParams, bool, bool, f64)> = grid
        .into_par_iter()
        .enumerate()
        .map(|(idx, params)| {
            let point_seed = seed ^ (idx as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let rho = partial_transpose(&choi_of(&phi_abc_images(params)));
            let mut min_value = f64::INFINITY;
            let mut spent = 0;
            while spent < restarts {
                let take = 25.min(restarts - spent);
                let cert = block_positivity(&rho, take, 200, 1e-9, point_seed + spent as u64);
                min_value = min_value.min(cert.min_value_found);
                spent += take;
                if min_value < SWEEP_WITNESS_LEVEL {
                    break;
                }
            }
            (params, is_positive_abc(params), min_value >= SWEEP_WITNESS_LEVEL, min_value)
        })
        .collect();

    let mut disagreements = 0usize;
    let mut boundary = 0usize;
    for (params, cond, cert, min_value) in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            params.a, params.b, params.c, cond, cert, min_value
        ));
        if near_region_boundary(*params, margin) {
            boundary += 1;
        } else if cond != cert {
            disagreements += 1;
        }
    }
    emit(out, &csv)?;
    eprintln!(
        "{} rows, {} disagreements ({} near-boundary rows not counted)",
        rows.len(),
        disagreements,
        boundary
    );
    Ok(if disagreements > 0 { 3 } else { 0 })
}

fn cmd_sweep_segment(restarts: usize, seed: u64, out: Option<&Path>) -> Result<u8, String> {
    let mut csv = String::from("lambda,member,min_value\n");
    for k in 0..=10u64 {
        let lambda = k as f64 / 10.0;
        let rho = rho_lambda(lambda).expect("grid stays inside [0, 1]");
        let report = membership_d(&rho, restarts, seed + k);
        csv.push_str(&format!(
            "{},{},{}\n",
            lambda,
            report.verdict == MembershipVerdict::Member,
            report.block_positive.min_value_found
        ));
    }
    emit(out, &csv)?;
    Ok(0)
}

fn cmd_arveson(paths: &[PathBuf], tol: f64, json: bool) -> Result<u8, String> {
    let mut operators = Vec::with_capacity(paths.len());
    for path in paths {
        let m = MatrixFile::read(path)?.to_plain()?;
        if !m.is_hermitian(1e-10) {
            return Err(format!("{}: operator is not Hermitian", path.display()));
        }
        operators.push(m);
    }
    let dim = operators[0].rows;
    if operators.iter().any(|m| m.rows != dim) {
        return Err("all operators must share one dimension".into());
    }

    let family = ArvesonDecomposition::new(operators);
    let psd: Vec<bool> = family
        .operators
        .iter()
        .map(|k| is_psd(k, tol).expect("operators were checked Hermitian"))
        .collect();

    let eye = ComplexMatrix::identity(dim);
    let sum_gap = family.sum.max_abs_diff(&eye);
    let needs_renormalization = sum_gap > tol;
    let tilde = if needs_renormalization {
        renormalize(&family).map_err(|e| format!("cannot renormalize: {e}"))?
    } else {
        family.clone()
    };

    let independent = weak_independence(&tilde, tol);
    let cstar = is_cstar_extreme(&tilde, tol);
    let verdict = match arveson_extreme_check(&tilde, tol) {
        ExtremalityVerdict::Extreme => "extreme",
        ExtremalityVerdict::NotExtreme => "not-extreme",
        ExtremalityVerdict::Malformed => "malformed",
    };

    // The first non-orthogonal pair explains any C*-extremality failure.
    let mut offending: Option<(usize, usize, ComplexMatrix)> = None;
    if !cstar {
        'outer: for i in 0..tilde.len() {
            for j in (i + 1)..tilde.len() {
                let product = &tilde.operators[i] * &tilde.operators[j];
                if product.max_abs() > tol {
                    offending = Some((i, j, product));
                    break 'outer;
                }
            }
        }
    }

    if json {
        let payload = serde_json::json!({
            "count": tilde.len(),
            "dim": dim,
            "psd": psd,
            "sum_gap": sum_gap,
            "renormalized": needs_renormalization,
            "ranks": tilde.ranks,
            "weak_independence": independent,
            "cstar_extreme": cstar,
            "verdict": verdict,
            "first_non_orthogonal_pair": offending.as_ref().map(|(i, j, product)| {
                serde_json::json!({
                    "i": i + 1,
                    "j": j + 1,
                    "product": matrix_json(product),
                })
            }),
        });
        println!("{}", serde_json::to_string_pretty(&payload).expect("serializes"));
    } else {
        println!("family: {} operators on dimension {}", tilde.len(), dim);
        println!(
            "psd: {}",
            psd.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ")
        );
        println!("sum is identity: {} (gap {:.2e})", !needs_renormalization, sum_gap);
        if needs_renormalization {
            println!("renormalized family:");
            for (i, k) in tilde.operators.iter().enumerate() {
                println!("K{}:\n{}", i + 1, format_matrix(k));
            }
        }
        println!(
            "ranks: {}",
            tilde.ranks.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
        );
        println!("weak independence: {independent}");
        println!("c*-extreme: {cstar}");
        if let Some((i, j, product)) = &offending {
            println!("first non-orthogonal pair: K{} K{} =", i + 1, j + 1);
            println!("{}", format_matrix(product));
        }
        println!("verdict: {verdict}");
    }
    Ok(0)
}
