//! Frame codec: a 4-byte big-endian payload length, then
//! `MSGKIND\n<json body>`.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::message::{Envelope, MsgKind};

pub const MAX_FRAME: usize = 64 << 20;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("frame of {0} bytes exceeds the limit")]
    TooLarge(usize),
    #[error("payload is not UTF-8")]
    NotUtf8,
    #[error("missing message kind line")]
    MissingKind,
    #[error("unknown message kind `{0}`")]
    UnknownKind(String),
    #[error("header says {header} but body is {body}")]
    KindMismatch { header: &'static str, body: &'static str },
    #[error("bad body: {0}")]
    Body(#[from] serde_json::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

pub fn encode_payload(env: &Envelope) -> Vec<u8> {
    let body = serde_json::to_string(env).expect("envelopes always serialize");
    let mut out = Vec::with_capacity(body.len() + 16);
    out.extend_from_slice(env.msg.kind().as_str().as_bytes());
    out.push(b'\n');
    out.extend_from_slice(body.as_bytes());
    out
}

pub fn decode_payload(bytes: &[u8]) -> Result<Envelope, CodecError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CodecError::NotUtf8)?;
    let (head, body) = text.split_once('\n').ok_or(CodecError::MissingKind)?;
    let kind = MsgKind::parse(head).ok_or_else(|| CodecError::UnknownKind(head.to_string()))?;
    let env: Envelope = serde_json::from_str(body)?;
    if env.msg.kind() != kind {
        return Err(CodecError::KindMismatch { header: kind.as_str(), body: env.msg.kind().as_str() });
    }
    Ok(env)
}

pub fn encode_frame(env: &Envelope) -> Vec<u8> {
    let payload = encode_payload(env);
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&payload);
    out
}

/// Decodes one whole frame, rejecting trailing bytes.
pub fn decode_frame(bytes: &[u8]) -> Result<Envelope, CodecError> {
    let mut cur = bytes;
    let env = read_frame(&mut cur)?;
    if !cur.is_empty() {
        return Err(CodecError::Io(io::Error::new(io::ErrorKind::InvalidData, "trailing bytes after frame")));
    }
    Ok(env)
}

pub fn write_frame(w: &mut impl Write, env: &Envelope) -> Result<(), CodecError> {
    w.write_all(&encode_frame(env))?;
    w.flush()?;
    Ok(())
}

pub fn read_frame(r: &mut impl Read) -> Result<Envelope, CodecError> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(CodecError::TooLarge(len));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    decode_payload(&payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::*;

    fn env(msg: Message) -> Envelope {
        Envelope { from: Address::sim("a"), corr: 7, re: Some(3), msg }
    }

    #[test]
    fn every_kind_round_trips() {
        let msgs = vec![
            Message::Demand(Demand {
                id: "d1".into(),
                program_id: "p".into(),
                payload: Payload::Procedural { name: "hypot".into(), args: vec!["3".into(), "4".into()] },
                reply_to: Address::sim("b"),
            }),
            Message::Result { demand_id: "d1".into(), outcome: Outcome::Value("5.0".into()) },
            Message::sys(SystemCommand::SpawnTier { node_id: "n".into(), kind: TierKind::Dwt, store: None }),
            Message::StorePut { key: "k".into(), value: "\"New York\"".into() },
            Message::StoreGet { key: "k".into(), fanout: true },
            Message::StoreHit { key: "k".into(), value: "1".into() },
            Message::StoreMiss { key: "k".into() },
            Message::PeerAnnounce(Membership { stores: vec![Address::sim("s")], ..Default::default() }),
            Message::ack("ok"),
            Message::err("NotFound", "k"),
        ];
        let mut kinds = Vec::new();
        for m in msgs {
            let e = env(m);
            let frame = encode_frame(&e);
            assert_eq!(u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize, frame.len() - 4);
            assert_eq!(decode_frame(&frame).unwrap(), e);
            kinds.push(e.msg.kind());
        }
        assert_eq!(kinds, MsgKind::ALL);
    }

    #[test]
    fn payload_starts_with_kind_line() {
        let p = encode_payload(&env(Message::StoreMiss { key: "k".into() }));
        assert!(p.starts_with(b"STORE_MISS\n{"));
    }

    #[test]
    fn damaged_frames_are_rejected() {
        let frame = encode_frame(&env(Message::ack("")));
        assert!(matches!(decode_frame(&frame[..frame.len() - 1]), Err(CodecError::Io(_))));
        let mut lying = frame.clone();
        lying[4..7].copy_from_slice(b"ERR");
        assert!(decode_frame(&lying).is_err());
        let payload = encode_payload(&env(Message::ack(""))).split_off(4);
        assert!(matches!(decode_payload(&payload), Err(CodecError::MissingKind | CodecError::UnknownKind(_))));
        let swapped = String::from_utf8(encode_payload(&env(Message::ack("")))).unwrap().replacen("ACK", "ERR", 1);
        assert!(matches!(decode_payload(swapped.as_bytes()), Err(CodecError::KindMismatch { .. })));
        let huge = ((MAX_FRAME + 1) as u32).to_be_bytes();
        assert!(matches!(decode_frame(&huge), Err(CodecError::TooLarge(_))));
    }
}
