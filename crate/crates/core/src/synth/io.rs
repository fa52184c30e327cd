//! Plain-text session files: a `key=value` header, then one `[stream <name>]`
//! block per modality with `t,value` rows (`NA` for a gap). Lines starting
//! with `#` are comments.

use std::fmt::Write as _;

use crate::domain::{Aggressiveness, Condition, DomainTag, Modality, ModalityStream, Session};
use crate::error::{Error, Result};

const MAGIC: &str = "# dualtake session v1";

pub fn write_session(session: &Session) -> String {
    write_session_annotated(session, &[])
}

/// Like [`write_session`], with `notes` as `# ` comment lines under the magic line.
pub fn write_session_annotated(session: &Session, notes: &[String]) -> String {
    let mut out = String::new();
    let c = session.condition;
    let _ = writeln!(out, "{MAGIC}");
    for note in notes {
        let _ = writeln!(out, "# {note}");
    }
    let _ = writeln!(out, "participant_id={}", session.participant_id);
    let _ = writeln!(out, "domain={}", session.domain);
    let _ = writeln!(out, "aggressiveness={}", c.aggressiveness.as_str());
    let _ = writeln!(out, "proactive={}", c.proactive);
    let _ = writeln!(out, "repetition={}", session.repetition);
    let _ = writeln!(out, "duration={:?}", session.duration);
    let _ = writeln!(out, "seed={}", session.seed);
    for m in Modality::ALL {
        let Some(stream) = session.stream(m) else { continue };
        let _ = writeln!(out, "[stream {}]", m.name());
        let _ = writeln!(out, "t,value");
        for &(t, v) in &stream.samples {
            match v {
                Some(v) => {
                    let _ = writeln!(out, "{t:?},{v:?}");
                }
                None => {
                    let _ = writeln!(out, "{t:?},NA");
                }
            }
        }
    }
    out
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| parse_err(line, format!("bad value for {key}: {v:?}")))
}

pub fn read_session(text: &str) -> Result<Session> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(parse_err(1, "missing session header")),
    }
    let mut participant_id = None;
    let mut domain = None;
    let mut aggressiveness = None;
    let mut proactive = None;
    let mut repetition = None;
    let mut duration = None;
    let mut seed = None;
    let mut streams: Vec<ModalityStream> = Vec::new();
    let mut expect_columns = false;
    for (no, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix("[stream ").and_then(|r| r.strip_suffix(']')) {
            let m = Modality::from_name(name).ok_or_else(|| parse_err(no, format!("unknown modality {name:?}")))?;
            streams.push(ModalityStream::new(m, Vec::new()));
            expect_columns = true;
            continue;
        }
        if expect_columns {
            if line != "t,value" {
                return Err(parse_err(no, "expected column header t,value"));
            }
            expect_columns = false;
            continue;
        }
        if let Some(stream) = streams.last_mut() {
            let (t, v) = line.split_once(',').ok_or_else(|| parse_err(no, "expected t,value"))?;
            let t: f64 = num(no, "t", t)?;
            let v = if v == "NA" { None } else { Some(num(no, "value", v)?) };
            stream.samples.push((t, v));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| parse_err(no, "expected key=value"))?;
        match key {
            "participant_id" => participant_id = Some(num(no, key, value)?),
            "domain" => domain = Some(value.parse::<DomainTag>().map_err(|e| parse_err(no, e))?),
            "aggressiveness" => aggressiveness = Some(value.parse::<Aggressiveness>().map_err(|e| parse_err(no, e))?),
            "proactive" => proactive = Some(num::<bool>(no, key, value)?),
            "repetition" => repetition = Some(num(no, key, value)?),
            "duration" => duration = Some(num(no, key, value)?),
            "seed" => seed = Some(num(no, key, value)?),
            other => return Err(parse_err(no, format!("unknown header key {other:?}"))),
        }
    }
    let need = |name: &str| Error::Parse(format!("missing header key {name}"));
    Ok(Session {
        participant_id: participant_id.ok_or_else(|| need("participant_id"))?,
        domain: domain.ok_or_else(|| need("domain"))?,
        condition: Condition {
            aggressiveness: aggressiveness.ok_or_else(|| need("aggressiveness"))?,
            proactive: proactive.ok_or_else(|| need("proactive"))?,
        },
        repetition: repetition.ok_or_else(|| need("repetition"))?,
        duration: duration.ok_or_else(|| need("duration"))?,
        seed: seed.ok_or_else(|| need("seed"))?,
        streams,
    })
}
