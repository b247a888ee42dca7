//! "The last one" scheme: the farthest receiver of a broadcast forwards it,
//! everyone else waits to overhear that forward.
//!
//! Any warning heard while waiting counts as the acknowledgement. If the
//! watchdog fires first, the election is repeated among the receivers
//! strictly nearer than the ones elected last time, so a silent farthest
//! node eventually hands the job to the next ring inwards.

use crate::actor::{Context, Payload, Scheme, SchemeVars, Server};
use crate::error::ExecError;
use crate::vanet;
use crate::{Position, Time};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TloVars {
    /// The warning has been handled: forwarded, or acknowledged by overhearing.
    pub received: bool,
    pub is_waiting: bool,
    pub is_aware: bool,
    pub hop_num: u32,
}

impl SchemeVars for TloVars {
    fn is_aware(&self) -> bool {
        self.is_aware
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.received as u8 | (self.is_waiting as u8) << 1 | (self.is_aware as u8) << 2);
        out.extend_from_slice(&self.hop_num.to_le_bytes());
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tlo {
    pub threshold_waiting: Time,
}

impl Tlo {
    pub fn new(threshold_waiting: Time) -> Self {
        Tlo { threshold_waiting }
    }

    fn run_tlo(
        &self,
        cx: &mut Context<'_, TloVars>,
        origin: Position,
        below: Option<i64>,
    ) -> Result<(), ExecError> {
        if cx.vars().received {
            return Ok(());
        }
        if cx.is_tlo(origin, below) {
            let hop = cx.vars().hop_num + 1;
            cx.broadcast(hop)?;
            cx.vars_mut().received = true;
            Ok(())
        } else {
            // someone farther exists, so this is Some
            let elected = vanet::farthest_distance(cx.state(), cx.world(), origin, below);
            cx.vars_mut().is_waiting = true;
            cx.send_self(
                Server::FinishWait,
                Payload::Watchdog {
                    origin,
                    below: elected,
                },
                self.threshold_waiting,
            )
        }
    }
}

impl Scheme for Tlo {
    type Vars = TloVars;

    fn name(&self) -> &'static str {
        "tlo"
    }

    fn initial_vars(&self) -> TloVars {
        TloVars::default()
    }

    fn alert_accident(&self, cx: &mut Context<'_, TloVars>) -> Result<(), ExecError> {
        let v = cx.vars_mut();
        v.is_aware = true;
        v.received = true;
        v.hop_num = 1;
        cx.stop();
        cx.broadcast(1)
    }

    fn receive(
        &self,
        cx: &mut Context<'_, TloVars>,
        hop: u32,
        origin: Position,
    ) -> Result<(), ExecError> {
        let v = cx.vars_mut();
        v.is_aware = true;
        v.hop_num = v.hop_num.max(hop);
        if v.is_waiting {
            v.is_waiting = false;
            v.received = true;
            Ok(())
        } else {
            self.run_tlo(cx, origin, None)
        }
    }

    fn receive_commutes(&self, vars: &TloVars) -> bool {
        vars.received && !vars.is_waiting
    }

    fn finish_wait(
        &self,
        cx: &mut Context<'_, TloVars>,
        payload: Payload,
    ) -> Result<(), ExecError> {
        let Payload::Watchdog { origin, below } = payload else {
            return Err(ExecError::MalformedMessage {
                actor: cx.me(),
                server: Server::FinishWait,
            });
        };
        if !cx.vars().is_waiting {
            return Ok(());
        }
        cx.vars_mut().is_waiting = false;
        self.run_tlo(cx, origin, below)
    }
}
