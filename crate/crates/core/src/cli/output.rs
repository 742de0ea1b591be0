//! CSV and JSON emitters; every number is written with 17 significant digits.

use std::io::{self, Write};

use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io::fmt_num;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// A command's result: a table for CSV and a document for JSON.
#[derive(Debug, Clone)]
pub struct Output {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub json: Value,
    /// Monte Carlo estimate hit the horizon cap too often.
    pub flagged: bool,
}

impl Output {
    pub fn new(columns: &[&str], rows: Vec<Vec<Cell>>, json: Value) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
            json,
            flagged: false,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => fmt_num(*v),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            }))
            .map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17);
        serde::Serialize::serialize(&self.json, &mut ser).map_err(io_err)?;
        out.write_all(b"\n").map_err(io_err)
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_num(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}
