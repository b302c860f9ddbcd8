//! CSV event traces.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::queue::SimEventKind;
use super::time::SimTime;
use crate::error::SimError;

/// One processed simulation event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time: SimTime,
    pub seq: u64,
    pub entity: String,
    pub kind: SimEventKind,
    pub detail: String,
}

/// Protocol-level event of one device's procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub time: SimTime,
    pub entity: String,
    pub event: String,
    pub message_kind: String,
    pub detail: String,
}

/// Writes `time_ms,seq,entity,kind,detail` rows.
pub fn write_event_trace<W: Write>(records: &[TraceRecord], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_ms", "seq", "entity", "kind", "detail"])?;
    for r in records {
        w.write_record([
            r.time.to_string(),
            r.seq.to_string(),
            r.entity.clone(),
            r.kind.label().into(),
            r.detail.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `time_ms,entity,event,message_kind,detail` rows.
pub fn write_timeline<W: Write>(entries: &[TimelineEntry], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_ms", "entity", "event", "message_kind", "detail"])?;
    for e in entries {
        w.write_record([&e.time.to_string(), &e.entity, &e.event, &e.message_kind, &e.detail])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_csv_layout() {
        let rec = TraceRecord {
            time: SimTime(1_500),
            seq: 7,
            entity: "device0".into(),
            kind: SimEventKind::TxStart,
            detail: "msg=msg1_preamble, attempt=1".into(),
        };
        let mut buf = Vec::new();
        write_event_trace(&[rec], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "time_ms,seq,entity,kind,detail\n1.500,7,device0,tx_start,\"msg=msg1_preamble, attempt=1\"\n");
    }
}
