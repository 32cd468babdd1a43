//! The four black-box tables, regenerated by ideal simulation, and a cell
//! by cell comparison against a stored copy.

use std::fmt::Write as _;

use super::CliError;
use crate::complexbit::{BlackBoxParams, ComplexBit};
use crate::pipeline::basis_inputs;
use crate::spinsim::{
    blackbox_pulses, compile_blackbox, embed, readout, CompileOptions, Magnetisation, Mode,
    PulseEvent, PulseSequence, PulseTimings, Simulator, SpinSpecies, HALF_PI,
};

pub const GOLDEN_TABLES: &str = include_str!("../../golden/tables.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableId {
    N1Basis,
    N1Algorithm,
    N2Basis,
    N2Algorithm,
}

impl TableId {
    pub const ALL: [TableId; 4] = [
        TableId::N1Basis,
        TableId::N1Algorithm,
        TableId::N2Basis,
        TableId::N2Algorithm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TableId::N1Basis => "n1-basis",
            TableId::N1Algorithm => "n1-algorithm",
            TableId::N2Basis => "n2-basis",
            TableId::N2Algorithm => "n2-algorithm",
        }
    }

    fn title(&self) -> &'static str {
        match self {
            TableId::N1Basis => "one-bit black-boxes on basis-bit inputs",
            TableId::N1Algorithm => "one-bit algorithm, every black-box",
            TableId::N2Basis => "two-bit black-boxes on basis-bit inputs",
            TableId::N2Algorithm => "two-bit algorithm, every black-box",
        }
    }

    /// Leading columns that label the row rather than hold results.
    fn key_columns(&self) -> usize {
        match self {
            TableId::N1Basis => 1,
            TableId::N1Algorithm => 2,
            TableId::N2Basis | TableId::N2Algorithm => 2,
        }
    }

    fn from_name(name: &str) -> Option<TableId> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub id: TableId,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Number of result cells (label columns excluded).
    pub fn cell_count(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.len().saturating_sub(self.id.key_columns()))
            .sum()
    }
}

fn bits_cell(bits: &[ComplexBit]) -> String {
    bits.iter().map(|z| z.to_string()).collect()
}

fn spin_cell(m: &Magnetisation) -> Result<String, CliError> {
    let z = readout(m).map_err(|e| CliError::Computation(e.to_string()))?;
    Ok(format!("{} {}", z, m.direction_label()))
}

fn params_key(p: &BlackBoxParams) -> String {
    p.to_string()
}

fn simulator() -> Simulator {
    Simulator::new(SpinSpecies::default_pair())
}

fn spin_err(e: impl std::fmt::Display) -> CliError {
    CliError::Computation(e.to_string())
}

fn readouts(state: &[Magnetisation], n: usize) -> Result<Vec<ComplexBit>, CliError> {
    state
        .iter()
        .take(n)
        .map(|m| readout(m).map_err(spin_err))
        .collect()
}

/// `(π/2)_y` on the first `n` species.
fn preparation(n: usize) -> Result<PulseSequence, CliError> {
    let t = PulseTimings::default();
    let mut events: Vec<PulseEvent> = (1..=n)
        .map(|species| PulseEvent::Selective {
            species,
            flip: HALF_PI,
            phase_deg: 90.0,
            duration: t.selective_90_s,
        })
        .collect();
    events.push(PulseEvent::Acquire);
    PulseSequence::new(events, Mode::Ideal).map_err(spin_err)
}

fn basis_table(id: TableId, n: usize) -> Result<Table, CliError> {
    let sim = simulator();
    let seq_inputs = basis_inputs(n);
    let mut header = vec![if n == 1 { "A B" } else { "A B C" }.to_string()];
    if n == 2 {
        header.push("f".into());
    }
    header.extend(
        seq_inputs
            .iter()
            .map(|inp| format!("C_f({})", bits_cell(inp))),
    );
    let mut rows = Vec::new();
    for p in BlackBoxParams::all(n).map_err(spin_err)? {
        let mut row = vec![params_key(&p)];
        if n == 2 {
            row.push(format!("f_{}", p.to_truth_table()));
        }
        let seq = blackbox_pulses(&p);
        for inputs in &seq_inputs {
            let mut initial = sim.equilibrium();
            for (slot, z) in initial.iter_mut().zip(inputs) {
                *slot = embed(*z).map_err(spin_err)?;
            }
            let fin = sim.run(&initial, &seq).map_err(spin_err)?;
            row.push(if n == 1 {
                spin_cell(&fin[0])?
            } else {
                bits_cell(&readouts(&fin, n)?)
            });
        }
        rows.push(row);
    }
    Ok(Table { id, header, rows })
}

fn algorithm_table(id: TableId, n: usize) -> Result<Table, CliError> {
    let sim = simulator();
    let opts = CompileOptions::default();
    let prep = preparation(n)?;
    let prepared = sim.run(&sim.equilibrium(), &prep).map_err(spin_err)?;
    let header: Vec<String> = if n == 1 {
        ["A B", "initial", "(pi/2)_y", "C_f"]
            .map(String::from)
            .to_vec()
    } else {
        ["A B C", "f", "(pi/2)_y", "C_f"].map(String::from).to_vec()
    };
    let mut rows = Vec::new();
    for p in BlackBoxParams::all(n).map_err(spin_err)? {
        let seq = compile_blackbox(&p, Mode::Ideal, &opts).map_err(spin_err)?;
        let fin = sim.run(&sim.equilibrium(), &seq).map_err(spin_err)?;
        let row = if n == 1 {
            vec![
                params_key(&p),
                sim.equilibrium()[0].direction_label(),
                spin_cell(&prepared[0])?,
                spin_cell(&fin[0])?,
            ]
        } else {
            vec![
                params_key(&p),
                format!("f_{}", p.to_truth_table()),
                bits_cell(&readouts(&prepared, n)?),
                bits_cell(&readouts(&fin, n)?),
            ]
        };
        rows.push(row);
    }
    Ok(Table { id, header, rows })
}

pub fn generate(id: TableId) -> Result<Table, CliError> {
    match id {
        TableId::N1Basis => basis_table(id, 1),
        TableId::N1Algorithm => algorithm_table(id, 1),
        TableId::N2Basis => basis_table(id, 2),
        TableId::N2Algorithm => algorithm_table(id, 2),
    }
}

pub fn render(tables: &[Table]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "== {}: {}", t.id.name(), t.id.title());
        let _ = writeln!(out, "{}", t.header.join(" | "));
        for row in &t.rows {
            let _ = writeln!(out, "{}", row.join(" | "));
        }
    }
    out
}

/// Splits rendered text back into tables.
pub fn parse(text: &str) -> Result<Vec<Table>, CliError> {
    let bad = |msg: String| CliError::Usage(format!("malformed golden tables: {msg}"));
    let mut tables: Vec<Table> = Vec::new();
    let mut awaiting_header = false;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("== ") {
            let name = rest.split(':').next().unwrap_or("").trim();
            let id = TableId::from_name(name)
                .ok_or_else(|| bad(format!("line {}: unknown table {name:?}", idx + 1)))?;
            tables.push(Table {
                id,
                header: Vec::new(),
                rows: Vec::new(),
            });
            awaiting_header = true;
            continue;
        }
        let t = tables
            .last_mut()
            .ok_or_else(|| bad(format!("line {}: text before first table", idx + 1)))?;
        let cells: Vec<String> = line.split(" | ").map(str::to_string).collect();
        if awaiting_header {
            t.header = cells;
            awaiting_header = false;
        } else {
            t.rows.push(cells);
        }
    }
    Ok(tables)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub per_table: Vec<(TableId, usize)>,
}

impl CheckSummary {
    pub fn total(&self) -> usize {
        self.per_table.iter().map(|(_, c)| c).sum()
    }
}

impl std::fmt::Display for CheckSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .per_table
            .iter()
            .map(|(id, c)| format!("{}: {c}", id.name()))
            .collect();
        write!(f, "{} cells verified ({})", self.total(), parts.join(", "))
    }
}

fn mismatch(table: TableId, row: usize, column: &str, expected: &str, actual: &str) -> CliError {
    CliError::GoldenMismatch {
        table: table.name().to_string(),
        row,
        column: column.to_string(),
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}

/// Compares each generated table against its golden counterpart and
/// reports the first differing cell.
pub fn check(generated: &[Table], golden_text: &str) -> Result<CheckSummary, CliError> {
    let golden = parse(golden_text)?;
    let mut per_table = Vec::new();
    for t in generated {
        let g = golden
            .iter()
            .find(|g| g.id == t.id)
            .ok_or_else(|| mismatch(t.id, 0, "table", "present", "missing"))?;
        for (col, (a, e)) in t.header.iter().zip(&g.header).enumerate() {
            if a != e {
                return Err(mismatch(t.id, 0, &format!("header {}", col + 1), e, a));
            }
        }
        if t.header.len() != g.header.len() {
            return Err(mismatch(
                t.id,
                0,
                "header",
                &format!("{} columns", g.header.len()),
                &format!("{} columns", t.header.len()),
            ));
        }
        for (r, row) in t.rows.iter().enumerate() {
            let grow = g
                .rows
                .get(r)
                .ok_or_else(|| mismatch(t.id, r + 1, &t.header[0], "no row", &row.join(" | ")))?;
            for (c, cell) in row.iter().enumerate() {
                let expected = grow.get(c).map_or("", String::as_str);
                if cell != expected {
                    return Err(mismatch(t.id, r + 1, &t.header[c], expected, cell));
                }
            }
            if grow.len() > row.len() {
                return Err(mismatch(t.id, r + 1, "extra column", &grow[row.len()], ""));
            }
        }
        if g.rows.len() > t.rows.len() {
            return Err(mismatch(
                t.id,
                t.rows.len() + 1,
                &t.header[0],
                &g.rows[t.rows.len()].join(" | "),
                "no row",
            ));
        }
        per_table.push((t.id, t.cell_count()));
    }
    Ok(CheckSummary { per_table })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<Table> {
        TableId::ALL
            .iter()
            .map(|&id| generate(id).unwrap())
            .collect()
    }

    #[test]
    fn render_parse_round_trip() {
        let tables = all();
        assert_eq!(parse(&render(&tables)).unwrap(), tables);
    }

    #[test]
    fn cell_counts() {
        let counts: Vec<usize> = all().iter().map(Table::cell_count).collect();
        assert_eq!(counts, vec![8, 8, 32, 16]);
    }

    #[test]
    fn spot_cells() {
        let t1 = generate(TableId::N1Basis).unwrap();
        assert_eq!(t1.rows[2], vec!["1 0", "(-1,0) I_135", "(0,1) I_45"]);
        let t2 = generate(TableId::N1Algorithm).unwrap();
        assert_eq!(t2.rows[1], vec!["0 1", "I_z", "(1,1) I_x", "(1,-1) I_-y"]);
        let t4 = generate(TableId::N2Algorithm).unwrap();
        assert_eq!(
            t4.rows[5],
            vec!["1 0 1", "f_1001", "(1,1)(1,1)", "(-1,1)(1,-1)"]
        );
    }

    #[test]
    fn embedded_golden_matches() {
        let summary = check(&all(), GOLDEN_TABLES).unwrap();
        assert_eq!(summary.total(), 64);
    }

    #[test]
    fn first_differing_cell_is_reported() {
        let corrupted = GOLDEN_TABLES.replacen("(0,-1)(0,1)", "(0,1)(0,1)", 1);
        match check(&all(), &corrupted).unwrap_err() {
            CliError::GoldenMismatch {
                table,
                row,
                expected,
                actual,
                ..
            } => {
                assert_eq!(table, "n2-basis");
                assert_eq!(row, 3);
                assert_eq!(expected, "(0,1)(0,1)");
                assert_eq!(actual, "(0,-1)(0,1)");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
