//! Counting-based scheme.
//!
//! A vehicle that hears the warning for the first time arms a watchdog and
//! keeps counting copies. When the watchdog fires it forwards only if it
//! heard fewer than `c_threshold` copies.
//!
//! Two behaviours worth knowing about:
//!
//! * The counter is never reset, so every vehicle makes exactly one
//!   forward/suppress decision. With self-reception enabled a reset would
//!   let every forwarder re-arm on its own echo and forward forever.
//! * The forwarded hop is one more than the hop of the copy that armed the
//!   watchdog, so it equals the broadcast round. Copies of the same round
//!   heard while waiting do not inflate the hop count.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::actor::{Context, Payload, Scheme, SchemeVars, Server};
use crate::error::ExecError;
use crate::{Position, Time};

/// Counter threshold; `Unbounded` never suppresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CThreshold {
    Finite(u32),
    Unbounded,
}

impl CThreshold {
    /// Whether a vehicle that heard `count` copies forwards.
    pub fn forwards(self, count: u32) -> bool {
        match self {
            CThreshold::Finite(k) => count < k,
            CThreshold::Unbounded => true,
        }
    }
}

impl fmt::Display for CThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CThreshold::Finite(k) => write!(f, "{k}"),
            CThreshold::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for CThreshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(CThreshold::Unbounded),
            t => match t.parse::<u32>() {
                Ok(0) => Err("counter threshold must be at least 1".into()),
                Ok(k) => Ok(CThreshold::Finite(k)),
                Err(e) => Err(format!("bad counter threshold {t:?}: {e}")),
            },
        }
    }
}

impl Serialize for CThreshold {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CThreshold::Finite(k) => s.serialize_u32(*k),
            CThreshold::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for CThreshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(serde::de::Error::custom("cThreshold must be at least 1")),
            Raw::Num(k) => Ok(CThreshold::Finite(k)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CountingParams {
    pub c_threshold: CThreshold,
    pub threshold_waiting: Time,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CountingVars {
    /// Copies heard; 0 means no watchdog has been armed yet.
    pub counter: u32,
    pub is_aware: bool,
    /// Hop of the copy that armed the watchdog.
    pub hop_num: u32,
}

impl SchemeVars for CountingVars {
    fn is_aware(&self) -> bool {
        self.is_aware
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.counter.to_le_bytes());
        out.push(self.is_aware as u8);
        out.extend_from_slice(&self.hop_num.to_le_bytes());
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counting {
    pub params: CountingParams,
}

impl Counting {
    pub fn new(params: CountingParams) -> Self {
        Counting { params }
    }
}

impl Scheme for Counting {
    type Vars = CountingVars;

    fn name(&self) -> &'static str {
        "counting"
    }

    fn initial_vars(&self) -> CountingVars {
        CountingVars::default()
    }

    fn alert_accident(&self, cx: &mut Context<'_, CountingVars>) -> Result<(), ExecError> {
        let v = cx.vars_mut();
        v.is_aware = true;
        // the originator counts its own alert, so its echo never arms a watchdog
        v.counter = 1;
        v.hop_num = 0;
        cx.stop();
        cx.broadcast(1)
    }

    fn receive(
        &self,
        cx: &mut Context<'_, CountingVars>,
        hop: u32,
        _origin: Position,
    ) -> Result<(), ExecError> {
        let v = cx.vars_mut();
        v.is_aware = true;
        if v.counter == 0 {
            v.counter = 1;
            v.hop_num = hop;
            cx.send_self(
                Server::FinishWait,
                Payload::Empty,
                self.params.threshold_waiting,
            )
        } else {
            v.counter = v.counter.saturating_add(1);
            Ok(())
        }
    }

    fn receive_commutes(&self, vars: &CountingVars) -> bool {
        vars.counter > 0
    }

    fn finish_wait(
        &self,
        cx: &mut Context<'_, CountingVars>,
        _payload: Payload,
    ) -> Result<(), ExecError> {
        let v = *cx.vars();
        if v.counter == 0 {
            return Err(ExecError::Invariant {
                actor: cx.me(),
                reason: "watchdog fired before any warning was counted",
            });
        }
        if self.params.c_threshold.forwards(v.counter) {
            cx.broadcast(v.hop_num + 1)?;
        }
        Ok(())
    }
}
