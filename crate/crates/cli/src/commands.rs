use std::path::{Path, PathBuf};
use std::time::Instant;

use dse::decompose::almost_decompose;
use dse::division::{near_perfect_division_traced, symmetric_split, Division};
use dse::dse::DseRepr;
use dse::error::BadCell;
use dse::finite::{decompose_bvn, extract_permutation, IntMatrix};
use dse::gallery::{amplification, counterexample, forest_example, odometer, orbit_visits_cells};
use dse::{validate, Dse, Error, GraphMultiset, Rational};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{read_dse, read_json, read_matrix, read_repr, write_json};
use crate::report::{domain_error, CmdResult, Failure, RunReport};
use crate::{Command, DemoName};

pub fn run(cmd: Command) -> CmdResult {
    let started = Instant::now();
    let report = match cmd {
        Command::Validate { inputs, jobs } => validate_files(&inputs, jobs)?,
        Command::Distance { a, b } => distance(&a, &b)?,
        Command::Decompose { input, eps, out } => decompose(&input, &eps, &out)?,
        Command::Divide { input, eps, out } => divide(&input, &eps, &out)?,
        Command::Split { input, eps, out } => split(&input, &eps, &out)?,
        Command::Bvn {
            input,
            n,
            decompose,
        } => bvn(&input, n, decompose)?,
        Command::Demo { name, level, out } => demo(name, level, out.as_deref())?,
    };
    Ok(report.finish(started))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

#[derive(Serialize)]
struct FileCheck {
    path: String,
    multiplicity: u64,
    pass: bool,
    bad_cells: Vec<BadCell>,
}

fn validate_files(inputs: &[PathBuf], jobs: usize) -> CmdResult {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::Input(e.to_string()))?;
    let checked: Vec<Result<FileCheck, Failure>> = pool.install(|| {
        inputs
            .par_iter()
            .map(|path| {
                let repr = read_repr(path)?;
                let report = validate(&repr.maps, repr.multiplicity);
                Ok(FileCheck {
                    path: path_str(path),
                    multiplicity: repr.multiplicity,
                    pass: report.pass,
                    bad_cells: report.bad_cells(),
                })
            })
            .collect()
    });
    let files = checked.into_iter().collect::<Result<Vec<_>, _>>()?;
    if let Some(bad) = files.iter().find(|f| !f.pass) {
        let e = Error::InvalidDse {
            multiplicity: bad.multiplicity,
            cells: bad.bad_cells.clone(),
        };
        return Err(Failure::Domain(domain_error(&e, json!({ "files": files }))));
    }
    let mut report = RunReport::new("validate")
        .input("in", inputs.iter().map(|p| path_str(p)).collect::<Vec<_>>());
    report.result = json!({ "pass": true, "files": files });
    Ok(report)
}

fn distance(a: &Path, b: &Path) -> CmdResult {
    let x = read_dse(a)?;
    let y = read_dse(b)?;
    let d = Dse::distance(&x, &y)?;
    let mut report = RunReport::new("distance")
        .input("a", path_str(a))
        .input("b", path_str(b));
    report.bounds.insert("distance", d.to_string());
    report.result = json!({ "multiplicity": x.multiplicity(), "equivalent": d.is_zero() });
    Ok(report)
}

fn decompose(input: &Path, eps: &Rational, out: &Path) -> CmdResult {
    let phi = read_dse(input)?;
    let dec = almost_decompose(&phi, eps)?;
    write_json(out, &DseRepr::from(dec.as_dse()))?;

    let written = read_dse(out)?;
    let achieved = Dse::distance(&phi, &written)?;
    if written.maps().iter().any(|m| !m.is_automorphism()) {
        return Err(Error::BoundViolated("emitted map is not an automorphism".into()).into());
    }
    let mut report = RunReport::new("decompose")
        .input("in", path_str(input))
        .input("eps", eps);
    report.outputs.insert("out", path_str(out));
    report.bounds.insert("distance", achieved.to_string());
    report.bounds.insert("eps", eps.to_string());
    report.result = json!({
        "automorphisms": written.maps().len(),
        "below_eps": achieved < *eps,
        "peel_bounds": dec.peel_bounds,
        "maximality_fired": dec.maximality_fired,
    });
    Ok(report)
}

#[derive(Deserialize)]
struct DivisionFile {
    base: GraphMultiset,
    oriented: GraphMultiset,
}

fn divide(input: &Path, eps: &Rational, out: &Path) -> CmdResult {
    let psi = read_dse(input)?;
    let (division, trail) = near_perfect_division_traced(psi.associated_matrix(), eps)?;
    write_json(out, &division)?;

    let written: DivisionFile = read_json(out)?;
    if &written.base != psi.associated_matrix() {
        return Err(
            Error::BoundViolated("emitted base differs from the input matrix".into()).into(),
        );
    }
    let check = Division::new(written.base, written.oriented)?;
    let mut report = RunReport::new("divide")
        .input("in", path_str(input))
        .input("eps", eps);
    report.outputs.insert("out", path_str(out));
    report.bounds.insert("error", check.error().to_string());
    report.bounds.insert("eps", eps.to_string());
    report.result = json!({
        "n": check.n(),
        "below_eps": check.error() < eps,
        "improvements": trail,
    });
    Ok(report)
}

fn split(input: &Path, eps: &Rational, out: &Path) -> CmdResult {
    let psi = read_dse(input)?;
    let s = symmetric_split(&psi, eps)?;
    write_json(out, &DseRepr::from(s.half.clone()))?;

    let written = read_dse(out)?;
    let achieved = Dse::distance(&psi, &written.symmetrize())?;
    let mut report = RunReport::new("split")
        .input("in", path_str(input))
        .input("eps", eps);
    report.outputs.insert("out", path_str(out));
    report.bounds.insert("distance", achieved.to_string());
    report
        .bounds
        .insert("division_error", s.division_error.to_string());
    report.bounds.insert("eps", eps.to_string());
    report.result = json!({
        "multiplicity": written.multiplicity(),
        "below_eps": achieved < *eps,
    });
    Ok(report)
}

fn permutation_json(p: &IntMatrix) -> Value {
    json!(p
        .as_permutation()
        .expect("extracted matrices are permutations"))
}

fn bvn(input: &Path, n: u64, full: bool) -> CmdResult {
    let a = read_matrix(input)?;
    if !a.is_doubly_stochastic(n) {
        let e = Error::NotDoublyStochastic(format!(
            "expected row and column sums {n}; rows {:?}, columns {:?}",
            a.row_sums(),
            a.col_sums()
        ));
        return Err(e.into());
    }
    let perms = if full {
        decompose_bvn(&a)?
    } else {
        vec![extract_permutation(&a)?]
    };
    let sum = perms
        .iter()
        .fold(IntMatrix::zeros(a.size()), |acc, p| acc.add(p));
    let residual = a
        .checked_sub(&sum)
        .map(|r| r.total())
        .ok_or_else(|| Error::BoundViolated("permutations exceed the input".into()))?;

    let mut report = RunReport::new("bvn")
        .input("in", path_str(input))
        .input("n", n)
        .input("decompose", full);
    report.bounds.insert("residual_mass", residual.to_string());
    report.result = json!({
        "size": a.size(),
        "permutations": perms.iter().map(permutation_json).collect::<Vec<_>>(),
    });
    Ok(report)
}

fn demo(name: DemoName, level: u32, out: Option<&Path>) -> CmdResult {
    if level == 0 || level > 16 {
        return Err(Error::PreconditionViolated("level must be between 1 and 16".into()).into());
    }
    let mut report = RunReport::new("demo").input("level", level);
    let dse = match name {
        DemoName::Counterexample => {
            report = report.input("name", "counterexample");
            let c = counterexample(level);
            let next = Dse::distance(&c, &counterexample(level + 1))?;
            report
                .bounds
                .insert("distance_to_next_level", next.to_string());
            c
        }
        DemoName::Forest => {
            report = report.input("name", "forest");
            let (phi1, phi2) = forest_example(level);
            let cells = level.min(3);
            let x0 = Rational::dyadic(1, level);
            let visits = orbit_visits_cells(&odometer(level), &x0, cells, 1 << level)?;
            report.result =
                json!({ "odometer_visits_cells": visits, "cell_level": cells, "x0": x0 });
            Dse::new(vec![phi1, phi2], 2)?
        }
        DemoName::Amplification => {
            report = report.input("name", "amplification");
            let amp = amplification(level);
            let dec = almost_decompose(&amp, &Rational::dyadic(1, level))?;
            report
                .bounds
                .insert("decomposition_distance", dec.achieved_distance.to_string());
            amp
        }
    };
    let repr = DseRepr::from(dse);
    let mut result = match report.result.take() {
        Value::Null => json!({}),
        v => v,
    };
    result["multiplicity"] = json!(repr.multiplicity);
    result["maps"] = json!(repr.maps.len());
    match out {
        Some(path) => {
            write_json(path, &repr)?;
            report.outputs.insert("out", path_str(path));
        }
        None => result["dse"] = json!(repr),
    }
    report.result = result;
    Ok(report)
}
