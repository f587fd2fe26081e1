//! Requests and synchronization.

use super::{bind, ChanId, EngineError, Machine, MsgKind};
use crate::ir::Request;

impl Machine<'_> {
    /// Rule data_async_r and its `end` counterpart cost `s + 1`, `w + 1` and
    /// consume nothing. A shift request is free, like the blocking shift
    /// receipt it replaces.
    pub(super) fn request(&mut self, id: &ChanId, c: &str, r: Request) -> Result<(), EngineError> {
        let costed = !matches!(r, Request::Shift);
        let p = self.proc_mut(id);
        let ep = p.endpoint_mut(c)?;
        if ep.requests.back() == Some(&Request::End) {
            return Err(EngineError::ProtocolViolation(format!(
                "request on ${c} after its end was requested"
            )));
        }
        ep.requests.push_back(r);
        if costed {
            p.stamp.tick();
        }
        p.advance();
        if costed {
            self.total_work += 1;
        }
        Ok(())
    }

    /// One application of sync_wait: match the oldest request on `c` with the
    /// head message. The span catches up (`max(s, s1)`), with no extra unit.
    /// A value fills its cell, a shift turns the queue around, and `end` adds
    /// the provider's work and removes the channel. The statement completes
    /// once `target` has been matched.
    pub(super) fn sync_match(
        &mut self,
        id: &ChanId,
        c: &str,
        target: &Request,
    ) -> Result<(), EngineError> {
        let (qid, msg) = self.dequeue(id, c)?;
        let p = self.proc_mut(id);
        let ep = p.endpoint_mut(c)?;
        let req = ep
            .requests
            .pop_front()
            .ok_or_else(|| EngineError::SyncMismatch(format!("no pending request on ${c}")))?;
        p.stamp.span = p.stamp.span.max(msg.stamp.span);
        let (mut turn, mut ended) = (false, false);
        match (&req, msg.kind) {
            (Request::Var(b), MsgKind::Val(v)) => bind(p, b, v)?,
            (Request::Shift, MsgKind::Shift) => turn = true,
            (Request::End, MsgKind::End) => {
                p.stamp.work += msg.stamp.work;
                p.chans.remove(c);
                ended = true;
            }
            (r, k) => {
                return Err(EngineError::ProtocolViolation(format!(
                    "request `{r}` on ${c} met a {} message",
                    k.name()
                )))
            }
        }
        if turn {
            self.flip(&qid);
        }
        if ended {
            self.queues.remove(&qid);
        }
        if req == *target {
            self.proc_mut(id).advance();
        }
        Ok(())
    }
}
