use super::{Cell, GossipRun};

fn cell_text(c: Cell) -> String {
    match c {
        Cell::Sent(j) => format!("S{}", j),
        Cell::Received(j) => format!("R{}", j),
        Cell::WaitRecv => "-".into(),
        Cell::WaitSend => "~".into(),
        Cell::Done => ".".into(),
    }
}

/// Step-by-step chart: one row per processor, then the activity row.
pub fn render_table(run: &GossipRun) -> String {
    let width = 4;
    let mut out = String::new();
    out.push_str(&format!("{:>5}", "t"));
    for t in 0..run.lambda() {
        out.push_str(&format!("{:>width$}", t + 1));
    }
    out.push('\n');
    for (i, row) in run.rows.iter().enumerate() {
        out.push_str(&format!("{:>5}", format!("p{}", i)));
        for c in row {
            out.push_str(&format!("{:>width$}", cell_text(*c)));
        }
        out.push('\n');
    }
    out.push_str(&format!("{:>5}", "nu"));
    for v in &run.nu {
        out.push_str(&format!("{:>width$}", v));
    }
    out.push('\n');
    out
}

/// Per-step CSV with columns `step,nu,completions`.
pub fn to_csv(run: &GossipRun) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["step", "nu", "completions"])?;
    for (t, (nu, c)) in run.nu.iter().zip(&run.completions).enumerate() {
        w.write_record([(t + 1).to_string(), nu.to_string(), c.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
