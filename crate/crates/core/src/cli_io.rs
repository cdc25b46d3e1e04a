//! Scenario files, deterministic trace export, and ASCII schedule
//! rendering.
//!
//! The trace text format is stable by construction — fixed field order,
//! every timestamp printed as `numerator/denominator` — so two runs of the
//! same scenario produce byte-identical exports, and behavioral neutrality
//! claims can be checked by comparing files.

use crate::model::{validate_scenario, Ratio, Scenario};
use crate::sched::{ScheduleTrace, WaitKind};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("scenario parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Render(String),
}

/// Parses a scenario from JSON, reporting the exact field path on failure
/// (e.g. `tasks[1].segments[0].wcet`).
pub fn parse_scenario(text: &str) -> Result<Scenario, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| IoError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Reads, parses, and validates a scenario file.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, IoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| IoError::Read { path: path.display().to_string(), source })?;
    let scenario = parse_scenario(&text).map_err(|e| match e {
        IoError::Parse { path: field, message } => {
            IoError::Parse { path: format!("{}: {field}", path.display()), message }
        }
        other => other,
    })?;
    let report = validate_scenario(&scenario);
    if !report.is_ok() {
        return Err(IoError::Render(format!("invalid scenario:\n{report}")));
    }
    Ok(scenario)
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(scenario).expect("scenarios always serialize");
    s.push('\n');
    s
}

/// One line per event, fields in a fixed order, timestamps always
/// `numerator/denominator`. Absent fields are omitted entirely; `detail`
/// is last so its spaces need no quoting.
pub fn export_trace(trace: &ScheduleTrace) -> String {
    let mut out = String::new();
    let procs = trace.processors.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
    let sync = trace.sync_processor.map(|s| format!(" sync={s}")).unwrap_or_default();
    writeln!(
        out,
        "trace scenario={} horizon={} processors={}{}",
        trace.scenario,
        trace.horizon.frac_str(),
        procs,
        sync
    )
    .unwrap();
    for e in &trace.events {
        write!(out, "event t={} kind={}", e.time.frac_str(), e.kind.as_str()).unwrap();
        if let Some(p) = e.processor {
            write!(out, " proc={p}").unwrap();
        }
        if let Some(t) = &e.task {
            write!(out, " task={t}").unwrap();
        }
        if let Some(j) = e.job {
            write!(out, " job={j}").unwrap();
        }
        if let Some(s) = e.seg {
            write!(out, " seg={s}").unwrap();
        }
        if !e.detail.is_empty() {
            write!(out, " detail={}", e.detail).unwrap();
        }
        out.push('\n');
    }
    out
}

/// ASCII schedule: one row per task, then one per processor.
///
/// Task-row cells: `#` executing for the whole cell, `?` for part of it,
/// `e` waiting on eligibility, `x` waiting on a lock, `~` suspended,
/// `.` nothing, `!` the cell where a deadline miss lands. Processor-row
/// cells: `#` fully busy, `?` partially, `.` idle. `cell` sets the time
/// width of one column (use e.g. `1/100` for schedules with sub-integer
/// structure).
pub fn render_gantt(trace: &ScheduleTrace, cell: Ratio) -> Result<String, IoError> {
    if cell <= Ratio::ZERO {
        return Err(IoError::Render("cell width must be positive".into()));
    }
    let cells = (trace.horizon / cell).ceil();
    if cells <= 0 || cells > 4000 {
        return Err(IoError::Render(format!(
            "gantt would need {cells} columns; choose a coarser cell width"
        )));
    }
    let cells = cells as usize;

    let mut tasks: Vec<&str> = Vec::new();
    for chunk in &trace.chunks {
        if !tasks.contains(&chunk.task.as_str()) {
            tasks.push(&chunk.task);
        }
    }
    let label_width = tasks
        .iter()
        .map(|t| t.len())
        .chain(trace.processors.iter().chain(trace.sync_processor.iter()).map(|p| format!("cpu{p}").len()))
        .max()
        .unwrap_or(4)
        .max(4);

    let mut out = String::new();
    out.push_str(&ruler(trace.horizon, cell, cells, label_width));

    let overlap = |a0: Ratio, a1: Ratio, b0: Ratio, b1: Ratio| -> Ratio {
        (a1.min(b1) - a0.max(b0)).max(Ratio::ZERO)
    };

    for task in &tasks {
        let mut row = vec!['.'; cells];
        for (i, slot) in row.iter_mut().enumerate() {
            let c0 = cell * Ratio::int(i as i128);
            let c1 = c0 + cell;
            let mut exec = Ratio::ZERO;
            for spans in trace.spans.values() {
                for s in spans.iter().filter(|s| s.task == **task) {
                    exec += overlap(s.start, s.end, c0, c1);
                }
            }
            if exec >= cell {
                *slot = '#';
                continue;
            }
            if exec > Ratio::ZERO {
                *slot = '?';
                continue;
            }
            let wait_kind = trace
                .waits
                .iter()
                .filter(|w| w.task == **task && overlap(w.start, w.end, c0, c1) > Ratio::ZERO)
                .map(|w| w.kind)
                .max_by_key(|k| match k {
                    WaitKind::EnforcerDelay => 2,
                    WaitKind::Blocked => 1,
                    WaitKind::Suspended => 0,
                });
            *slot = match wait_kind {
                Some(WaitKind::EnforcerDelay) => 'e',
                Some(WaitKind::Blocked) => 'x',
                Some(WaitKind::Suspended) => '~',
                None => '.',
            };
        }
        for (mtask, _, t) in trace.misses() {
            if mtask == **task {
                let idx = (t / cell).floor().max(0) as usize;
                row[idx.min(cells - 1)] = '!';
            }
        }
        writeln!(out, "{:>label_width$} |{}|", task, row.iter().collect::<String>()).unwrap();
    }

    for proc in trace.processors.iter().chain(trace.sync_processor.iter()) {
        let spans = match trace.spans.get(proc) {
            Some(s) => s,
            None => continue,
        };
        let mut row = vec!['.'; cells];
        for (i, slot) in row.iter_mut().enumerate() {
            let c0 = cell * Ratio::int(i as i128);
            let c1 = c0 + cell;
            let busy: Ratio = spans.iter().map(|s| overlap(s.start, s.end, c0, c1)).sum();
            *slot = if busy >= cell {
                '#'
            } else if busy > Ratio::ZERO {
                '?'
            } else {
                '.'
            };
        }
        writeln!(out, "{:>label_width$} |{}|", format!("cpu{proc}"), row.iter().collect::<String>()).unwrap();
    }

    writeln!(
        out,
        "{:label_width$}  # run  ? partial  e await-eligibility  x await-lock  ~ suspended  ! miss",
        ""
    )
    .unwrap();
    Ok(out)
}

/// Time axis: a label every few cells, at round time values.
fn ruler(horizon: Ratio, cell: Ratio, cells: usize, label_width: usize) -> String {
    let label_t = (horizon / Ratio::int(10)).ceil().max(1);
    let mut marks = vec![' '; cells + 1];
    let mut text = String::new();
    let mut k = 0i128;
    loop {
        let t = Ratio::int(k * label_t);
        if t > horizon {
            break;
        }
        let idx = (t / cell).floor() as usize;
        if idx > cells {
            break;
        }
        let label = if t.den() == 1 { t.num().to_string() } else { t.frac_str() };
        if idx + label.len() <= marks.len() {
            for (off, ch) in label.chars().enumerate() {
                marks[idx + off] = ch;
            }
        }
        k += 1;
    }
    while marks.last() == Some(&' ') {
        marks.pop();
    }
    text.push_str(&format!("{:label_width$}  {}\n", "", marks.iter().collect::<String>()));
    text
}
