//! Snapshot output.
//!
//! A snapshot is one row per agent, ordered by agent id:
//!
//! ```text
//! step,time,agent_id,label,x0..x{d-1},v0..v{d-1}
//! ```
//!
//! Reals are written with 17 significant digits, enough to recover every
//! `f64` exactly.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::model::{Label, SwarmState};
use crate::vector::Vector;

/// One serialized agent row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotRecord {
    pub step: u64,
    pub time: f64,
    pub agent_id: usize,
    pub label: Label,
    pub position: Vector,
    pub velocity: Vector,
}

/// Rows of `state` in agent-id order.
pub fn records(state: &SwarmState) -> impl Iterator<Item = SnapshotRecord> + '_ {
    state
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| SnapshotRecord {
            step: state.step,
            time: state.time,
            agent_id: i,
            label: a.label,
            position: a.position,
            velocity: a.velocity,
        })
}

/// Consumer of emitted states.
pub trait SnapshotSink {
    fn emit(&mut self, state: &SwarmState) -> Result<()>;
}

/// Keeps every emitted state in memory.
impl SnapshotSink for Vec<SwarmState> {
    fn emit(&mut self, state: &SwarmState) -> Result<()> {
        self.push(state.clone());
        Ok(())
    }
}

/// Discards everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullSink;

impl SnapshotSink for NullSink {
    fn emit(&mut self, _: &SwarmState) -> Result<()> {
        Ok(())
    }
}

/// Records only the `(step, time, follower fraction, leader fraction)` series.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FractionLog(pub Vec<(u64, f64, f64, f64)>);

impl SnapshotSink for FractionLog {
    fn emit(&mut self, state: &SwarmState) -> Result<()> {
        let (f, l) = state.label_fractions();
        self.0.push((state.step, state.time, f, l));
        Ok(())
    }
}

/// Forwards to two sinks.
pub struct Tee<'a, A: ?Sized, B: ?Sized>(pub &'a mut A, pub &'a mut B);

impl<A: SnapshotSink + ?Sized, B: SnapshotSink + ?Sized> SnapshotSink for Tee<'_, A, B> {
    fn emit(&mut self, state: &SwarmState) -> Result<()> {
        self.0.emit(state)?;
        self.1.emit(state)
    }
}

pub fn label_name(label: Label) -> &'static str {
    match label {
        Label::Follower => "follower",
        Label::Leader => "leader",
    }
}

/// The CSV header for dimension `dim`.
pub fn header(dim: usize) -> String {
    let mut h = String::from("step,time,agent_id,label");
    for a in 0..dim {
        let _ = write!(h, ",x{a}");
    }
    for a in 0..dim {
        let _ = write!(h, ",v{a}");
    }
    h
}

/// Formats `x` like C's `%.17g`: shortest of fixed or exponential notation at
/// 17 significant digits, trailing zeros removed.
pub fn format_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Appends the rows of `state` to `out`.
pub fn write_rows(out: &mut String, state: &SwarmState) {
    let d = state.dim;
    let time = format_g17(state.time);
    for r in records(state) {
        let _ = write!(
            out,
            "{},{},{},{}",
            r.step,
            time,
            r.agent_id,
            label_name(r.label)
        );
        for a in 0..d {
            out.push(',');
            out.push_str(&format_g17(r.position[a]));
        }
        for a in 0..d {
            out.push(',');
            out.push_str(&format_g17(r.velocity[a]));
        }
        out.push('\n');
    }
}

/// Streams snapshots as CSV. The header is written with the first state.
pub struct CsvSink<W: Write> {
    out: W,
    header_written: bool,
    buf: String,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W) -> Self {
        CsvSink {
            out,
            header_written: false,
            buf: String::new(),
        }
    }

    pub fn into_inner(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> SnapshotSink for CsvSink<W> {
    fn emit(&mut self, state: &SwarmState) -> Result<()> {
        self.buf.clear();
        if !self.header_written {
            self.buf.push_str(&header(state.dim));
            self.buf.push('\n');
            self.header_written = true;
        }
        write_rows(&mut self.buf, state);
        self.out.write_all(self.buf.as_bytes())?;
        Ok(())
    }
}

/// Streams the label-fraction series as CSV with header
/// `step,time,follower_fraction,leader_fraction`.
pub struct FractionCsvSink<W: Write> {
    out: W,
    header_written: bool,
}

impl<W: Write> FractionCsvSink<W> {
    pub fn new(out: W) -> Self {
        FractionCsvSink {
            out,
            header_written: false,
        }
    }

    pub fn into_inner(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> SnapshotSink for FractionCsvSink<W> {
    fn emit(&mut self, state: &SwarmState) -> Result<()> {
        if !self.header_written {
            writeln!(self.out, "step,time,follower_fraction,leader_fraction")?;
            self.header_written = true;
        }
        let (f, l) = state.label_fractions();
        writeln!(
            self.out,
            "{},{},{},{}",
            state.step,
            format_g17(state.time),
            format_g17(f),
            format_g17(l)
        )?;
        Ok(())
    }
}
