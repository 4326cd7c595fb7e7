//! Canonical wire encoding.
//!
//! One whitespace-free JSON object per message. The `msg_type` key comes
//! first, followed by the type's fields in byte-wise lexicographic key order;
//! nested objects are key-sorted the same way. Positions are `[x_cm, y_cm]`
//! pairs and headings are integer tenths of a degree. The encoded byte
//! length is the message's channel cost.
//!
//! Decoding accepts exactly the image of [`encode`]: the bytes are parsed,
//! validated, re-encoded and compared, so any non-canonical spelling
//! (whitespace, key order, extra keys) is rejected as malformed.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::{Message, MessageError};

/// Writes `value` as canonical text: sorted keys, no whitespace.
pub fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&n.to_string()),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serialization is infallible")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(&Value::String((*k).clone()), out);
                out.push(':');
                write_canonical(&map[*k], out);
            }
            out.push('}');
        }
    }
}

/// Canonical bytes of any serializable value (used for configs and metrics).
pub fn to_canonical_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let v = serde_json::to_value(value).expect("simulator types serialize to JSON");
    let mut out = String::new();
    write_canonical(&v, &mut out);
    out.into_bytes()
}

fn body_value(msg: &Message) -> Value {
    let v = match msg {
        Message::Cam(m) => serde_json::to_value(m),
        Message::Den(m) => serde_json::to_value(m),
        Message::Instruction(m) => serde_json::to_value(m),
        Message::Report(m) => serde_json::to_value(m),
        Message::ServiceRequest(m) => serde_json::to_value(m),
        Message::Summary(m) => serde_json::to_value(m),
        Message::LdmExcerpt(m) => serde_json::to_value(m),
        Message::Aggregate(m) => serde_json::to_value(m),
        Message::Center(m) => serde_json::to_value(m),
    };
    v.expect("message types serialize to JSON")
}

pub fn encode(msg: &Message) -> Vec<u8> {
    let body = body_value(msg);
    let Value::Object(map) = body else { unreachable!("message bodies are JSON objects") };
    let mut out = String::with_capacity(256);
    out.push_str("{\"msg_type\":\"");
    out.push_str(msg.msg_type());
    out.push('"');
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    for k in keys {
        out.push(',');
        write_canonical(&Value::String(k.clone()), &mut out);
        out.push(':');
        write_canonical(&map[k], &mut out);
    }
    out.push('}');
    out.into_bytes()
}

pub fn encoded_len(msg: &Message) -> usize {
    encode(msg).len()
}

fn body<T: DeserializeOwned>(rest: Value) -> Result<T, MessageError> {
    serde_json::from_value(rest).map_err(|e| MessageError::Malformed(e.to_string()))
}

pub fn decode(bytes: &[u8]) -> Result<Message, MessageError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| MessageError::Malformed(e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(MessageError::Malformed("top level is not an object".into()));
    };
    let msg_type = match map.remove("msg_type") {
        Some(Value::String(s)) => s,
        _ => return Err(MessageError::Malformed("missing msg_type".into())),
    };
    let rest = Value::Object(map);
    let msg = match msg_type.as_str() {
        "CAM" => Message::Cam(body(rest)?),
        "DEN" => Message::Den(body(rest)?),
        "INSTR" => Message::Instruction(body(rest)?),
        "REPORT" => Message::Report(body(rest)?),
        "SVCREQ" => Message::ServiceRequest(body(rest)?),
        "SUMMARY" => Message::Summary(body(rest)?),
        "LDM_EXCERPT" => Message::LdmExcerpt(body(rest)?),
        "AGGREGATE" => Message::Aggregate(body(rest)?),
        "CENTER" => Message::Center(body(rest)?),
        other => return Err(MessageError::Malformed(format!("unknown msg_type {other:?}"))),
    };
    msg.validate()?;
    if encode(&msg) != bytes {
        return Err(MessageError::Malformed("non-canonical encoding".into()));
    }
    Ok(msg)
}

/// Length-prefixed frame used on the pair backhaul and the center link:
/// a 4-byte big-endian length followed by the canonical encoding.
pub fn frame(msg: &Message) -> Vec<u8> {
    let body = encode(msg);
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

/// Splits one frame off the front of `bytes`, returning the message and the
/// remaining input.
pub fn unframe(bytes: &[u8]) -> Result<(Message, &[u8]), MessageError> {
    if bytes.len() < 4 {
        return Err(MessageError::Malformed("truncated frame header".into()));
    }
    let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let rest = &bytes[4..];
    if rest.len() < len {
        return Err(MessageError::Malformed("truncated frame body".into()));
    }
    Ok((decode(&rest[..len])?, &rest[len..]))
}
