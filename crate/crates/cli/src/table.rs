//! Tabular products and their CSV / JSON encodings.

use std::io::{self, Write};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use weakmeas::sweep::{CrossSectionRow, FidelityRow, StateRow, TradeoffPoint};

pub const GRID_HEADER: [&str; 9] = [
    "epsilon",
    "eta",
    "gmax_analytic",
    "prev_analytic",
    "sum_analytic",
    "gmax_mc",
    "prev_mc",
    "sum_mc",
    "diagonal_flag",
];
pub const STATES_HEADER: [&str; 5] = ["alpha", "gain_analytic", "rev_analytic", "gain_mc", "rev_mc"];
pub const CROSS_SECTION_HEADER: [&str; 4] = ["eta", "six_gmax", "prev", "sum"];
pub const FIDELITIES_HEADER: [&str; 3] = ["alpha", "fidelity", "low_stats_flag"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Flag(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

/// Fixed nine-decimal rendering; a rounded negative zero prints as zero.
pub fn format_number(x: f64) -> String {
    let s = format!("{x:.9}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

impl Cell {
    fn text(&self) -> String {
        match *self {
            Cell::Num(x) => format_number(x),
            Cell::Flag(b) => u8::from(b).to_string(),
            Cell::Missing => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Cell::Num(x) => s.serialize_f64(x),
            Cell::Flag(b) => s.serialize_u8(u8::from(b)),
            Cell::Missing => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn grid(points: &[TradeoffPoint]) -> Self {
        let rows = points
            .iter()
            .map(|p| {
                vec![
                    p.epsilon.into(),
                    p.eta.into(),
                    p.gmax_analytic.into(),
                    p.prev_analytic.into(),
                    p.sum_analytic.into(),
                    p.gmax_estimated.into(),
                    p.prev_estimated.into(),
                    p.sum_estimated.into(),
                    p.diagonal_flag.into(),
                ]
            })
            .collect();
        Self { header: &GRID_HEADER, rows }
    }

    pub fn states(rows: &[StateRow]) -> Self {
        let rows = rows
            .iter()
            .map(|r| {
                vec![
                    r.alpha.into(),
                    r.gain_analytic.into(),
                    r.rev_analytic.into(),
                    r.gain_mc.into(),
                    r.rev_mc.into(),
                ]
            })
            .collect();
        Self { header: &STATES_HEADER, rows }
    }

    pub fn cross_section(rows: &[CrossSectionRow]) -> Self {
        let rows = rows
            .iter()
            .map(|r| vec![r.eta.into(), r.six_gmax.into(), r.prev.into(), r.sum.into()])
            .collect();
        Self {
            header: &CROSS_SECTION_HEADER,
            rows,
        }
    }

    pub fn fidelities(rows: &[FidelityRow]) -> Self {
        let rows = rows
            .iter()
            .map(|r| vec![r.alpha.into(), r.fidelity.into(), r.low_stats.into()])
            .collect();
        Self {
            header: &FIDELITIES_HEADER,
            rows,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.flush()
    }

    /// Rows as JSON objects keyed by the CSV header, in column order.
    pub fn json_rows(&self) -> JsonRows<'_> {
        JsonRows(self)
    }
}

pub struct JsonRows<'a>(&'a Table);

struct JsonRow<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for JsonRow<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Serialize for JsonRows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows.len()))?;
        for row in &self.0.rows {
            seq.serialize_element(&JsonRow(self.0.header, row))?;
        }
        seq.end()
    }
}
