//! Parameter sweeps: one sub-directory per grid point and an index table.

use rayon::prelude::*;

use giantbic_core::bic_condition;

use crate::commands::{config_snapshot, dispatch, CliError, CliResult, RunOptions, Summary};
use crate::config::RunConfig;
use crate::output::{ArtifactWriter, Cell, Table};

struct PointOutcome {
    dir: String,
    value: f64,
    bic_condition: bool,
    result: CliResult<Summary>,
    files: Vec<String>,
}

fn status(result: &CliResult<Summary>) -> (&'static str, String) {
    match result {
        Ok(_) => ("ok", String::new()),
        Err(e @ CliError::Validation(_)) => ("validation", e.to_string().replace('\n', ";")),
        Err(CliError::Model(m)) => ("model_unavailable", m.clone()),
        Err(CliError::Internal(m)) => ("internal", m.clone()),
    }
}

pub(crate) fn sweep(config: &RunConfig, options: &RunOptions, w: &mut ArtifactWriter) -> CliResult<Summary> {
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Internal("sweep section missing after validation".into()))?;
    let points: Vec<(usize, RunConfig)> = spec
        .values
        .iter()
        .map(|&v| config.with_parameter(spec.parameter, v))
        .enumerate()
        .collect();

    let root = w.root().to_path_buf();
    let format = w.format();
    let run_point = |(i, point): &(usize, RunConfig)| -> PointOutcome {
        let dir = format!("point_{i:03}");
        let mut files = Vec::new();
        let result = (|| {
            let mut pw = ArtifactWriter::create(&root.join(&dir), format)?;
            let summary = dispatch(spec.command, point, options, &mut pw);
            files = pw.files().iter().map(|f| f.path.clone()).collect();
            pw.finish(spec.command.name(), config_snapshot(point))?;
            summary
        })();
        PointOutcome {
            dir,
            value: spec.values[*i],
            bic_condition: bic_condition(&point.system).is_ok_and(|c| c.holds),
            result,
            files,
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    // collect() keeps input order whatever the scheduling
    let outcomes: Vec<PointOutcome> = pool.install(|| points.par_iter().map(run_point).collect());
    w.lap("points");

    let mut index = Table::new([
        "point",
        "directory",
        spec.parameter.name(),
        "status",
        "bic_condition",
        "numeric_bic",
        "message",
    ]);
    for (i, o) in outcomes.iter().enumerate() {
        let (state, message) = status(&o.result);
        let numeric = o
            .result
            .as_ref()
            .ok()
            .and_then(|s| s.numeric_bic)
            .map_or(Cell::Empty, Cell::Bool);
        index.push(vec![
            i.into(),
            o.dir.as_str().into(),
            o.value.into(),
            state.into(),
            o.bic_condition.into(),
            numeric,
            message.replace(',', ";").into(),
        ]);
        for f in &o.files {
            w.adopt(&format!("{}/{f}", o.dir))?;
        }
    }
    w.write_table("index", &index)?;
    w.lap("index");
    Ok(Summary::default())
}
