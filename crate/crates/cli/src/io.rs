//! File formats: CSV for datasets, traces, oracle grids, and sweeps; JSON
//! for models, results, and audits. Floats are written with 17 significant
//! digits so every artifact round-trips losslessly.

use anyhow::{bail, Context, Result};
use selector_core::data::Dataset;
use selector_core::oracle::GridRow;
use selector_core::psgd::PsgdTrace;
use serde::Serialize;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// 17 significant digits: enough to reconstruct any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string_pretty(value)?);
    out.push('\n');
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Labeled examples as CSV with header `x_1,...,x_d,y` and y in {0, 1}.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let d = data.dim();
    for j in 1..=d {
        write!(w, "x_{j},")?;
    }
    writeln!(w, "y")?;
    for (x, y) in data.iter() {
        for v in x {
            write!(w, "{},", fmt_f64(*v))?;
        }
        writeln!(w, "{}", u8::from(y))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => bail!("{}: empty file", path.display()),
    };
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 2 || cols[cols.len() - 1] != "y" {
        bail!("{}: expected header x_1,...,x_d,y", path.display());
    }
    let d = cols.len() - 1;
    for (j, col) in cols[..d].iter().enumerate() {
        if *col != format!("x_{}", j + 1) {
            bail!("{}: column {} is {col:?}, expected x_{}", path.display(), j + 1, j + 1);
        }
    }
    let mut data = Dataset::new(d)?;
    let mut x = vec![0.0; d];
    for (i, line) in lines.enumerate() {
        let line = line?;
        let row = line.trim_end();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        for slot in x.iter_mut() {
            let field = fields
                .next()
                .with_context(|| format!("{}: row {} too short", path.display(), i + 2))?;
            *slot = field
                .parse()
                .with_context(|| format!("{}: row {}: bad float {field:?}", path.display(), i + 2))?;
        }
        let y = match fields.next() {
            Some("0") => false,
            Some("1") => true,
            other => bail!("{}: row {}: bad label {other:?}", path.display(), i + 2),
        };
        if fields.next().is_some() {
            bail!("{}: row {} has extra fields", path.display(), i + 2);
        }
        data.push(&x, y)?;
    }
    Ok(data)
}

/// PSGD trace as CSV: `iter,grad_norm,batch_loss,w_1..w_d`, one row per
/// iteration; w is the iterate after the step, the stats were measured on
/// the batch that produced it.
pub fn write_trace_csv(path: &Path, trace: &PsgdTrace) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let d = trace.start.dim();
    write!(w, "iter,grad_norm,batch_loss")?;
    for j in 1..=d {
        write!(w, ",w_{j}")?;
    }
    writeln!(w)?;
    for i in 0..trace.len() {
        write!(
            w,
            "{},{},{}",
            i + 1,
            fmt_f64(trace.grad_norms[i]),
            fmt_f64(trace.loss_estimates[i])
        )?;
        for v in trace.iterates[i].as_slice() {
            write!(w, ",{}", fmt_f64(*v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Grid oracle report as CSV: `direction_index,theta,threshold,joint_error`.
pub fn write_grid_csv(path: &Path, rows: &[GridRow]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "direction_index,theta,threshold,joint_error")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.direction_index,
            fmt_f64(row.theta),
            fmt_f64(row.threshold),
            fmt_f64(row.joint_error)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One sweep measurement; aggregate rows carry `"median"` in the seed
/// column and float-formatted aggregates in the remaining columns.
pub struct SweepRow {
    pub eps: f64,
    pub seed: Option<u64>,
    pub true_joint_error: f64,
    pub angle_to_v: f64,
    pub examples_used: f64,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "eps,seed,true_joint_error,angle_to_v,examples_used")?;
    for row in rows {
        let seed = match row.seed {
            Some(s) => s.to_string(),
            None => String::from("median"),
        };
        let examples = if row.seed.is_some() {
            format!("{}", row.examples_used as u64)
        } else {
            fmt_f64(row.examples_used)
        };
        writeln!(
            w,
            "{},{seed},{},{},{examples}",
            fmt_f64(row.eps),
            fmt_f64(row.true_joint_error),
            fmt_f64(row.angle_to_v)
        )?;
    }
    w.flush()?;
    Ok(())
}
