//! Demand traces: the issued / hit / computed events of an evaluation.

use std::fmt;
use std::io::{self, Write};
use std::time::Instant;

use super::warehouse::DemandKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Issued,
    Hit,
    Computed,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Issued => "issued",
            TraceEvent::Hit => "hit",
            TraceEvent::Computed => "computed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub key: DemandKey,
    pub event: TraceEvent,
    /// Nanoseconds since the trace started.
    pub ns: u64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.event.as_str(), self.key, self.ns)
    }
}

#[derive(Debug, Clone)]
pub struct DemandTrace {
    start: Instant,
    records: Vec<TraceRecord>,
}

impl Default for DemandTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl DemandTrace {
    pub fn new() -> Self {
        DemandTrace { start: Instant::now(), records: Vec::new() }
    }

    pub fn record(&mut self, key: &DemandKey, event: TraceEvent) {
        let ns = self.start.elapsed().as_nanos() as u64;
        self.records.push(TraceRecord { key: key.clone(), event, ns });
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn count(&self, event: TraceEvent) -> usize {
        self.records.iter().filter(|r| r.event == event).count()
    }

    /// One `<event> <key> <ns>` line per record.
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        for r in &self.records {
            writeln!(w, "{r}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a vec");
        String::from_utf8(out).expect("trace text is UTF-8")
    }
}
