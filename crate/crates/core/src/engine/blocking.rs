//! Rules shared by both disciplines: sends and blocking receives.

use super::{bind, eval, ChanId, EngineError, Frame, Machine, MsgKind, Value};
use crate::ir::{Binder, Expr, SwitchArm};

impl Machine<'_> {
    /// Send a value. The sender pays one unit and stamps the message with its
    /// post-increment stamp.
    pub(super) fn send_val(&mut self, id: &ChanId, c: &str, e: &Expr) -> Result<(), EngineError> {
        let p = self.proc_mut(id);
        let v = match e {
            Expr::Chan(d) => {
                if d == c {
                    return Err(EngineError::ProtocolViolation(format!(
                        "${c} sent over itself"
                    )));
                }
                let ep = p
                    .chans
                    .remove(d)
                    .ok_or_else(|| EngineError::UnboundChannel(d.clone()))?;
                if !ep.requests.is_empty() {
                    return Err(EngineError::ProtocolViolation(format!(
                        "${d} sent with unsynchronized requests"
                    )));
                }
                Value::Chan(ep.id)
            }
            e => eval(&p.vars, e)?,
        };
        self.send_msg(id, c, MsgKind::Val(v), true)
    }

    /// Enqueue a message; `costed` distinguishes data and labels from shifts.
    pub(super) fn send_msg(
        &mut self,
        id: &ChanId,
        c: &str,
        kind: MsgKind,
        costed: bool,
    ) -> Result<(), EngineError> {
        let p = self.proc_mut(id);
        if costed {
            p.stamp.tick();
        }
        let stamp = p.stamp;
        if costed {
            self.total_work += 1;
        }
        self.enqueue(id, c, kind, stamp)?;
        self.proc_mut(id).advance();
        Ok(())
    }

    /// Rule data_r: `max(s, s1) + 1`, `w + 1`, and the cell is written.
    pub(super) fn recv_val(
        &mut self,
        id: &ChanId,
        c: &str,
        binder: &Binder,
    ) -> Result<(), EngineError> {
        let (_, msg) = self.dequeue(id, c)?;
        let MsgKind::Val(v) = msg.kind else {
            return Err(EngineError::ProtocolViolation(format!(
                "expected a value on ${c}, found {}",
                msg.kind.name()
            )));
        };
        self.total_work += 1;
        let p = self.proc_mut(id);
        p.stamp.span = p.stamp.span.max(msg.stamp.span) + 1;
        p.stamp.work += 1;
        bind(p, binder, v)?;
        p.advance();
        Ok(())
    }

    /// Receiving a shift costs nothing; the receiver catches up to the
    /// sender's span and the queue turns around.
    pub(super) fn recv_shift(&mut self, id: &ChanId, c: &str) -> Result<(), EngineError> {
        let (qid, msg) = self.dequeue(id, c)?;
        if msg.kind != MsgKind::Shift {
            return Err(EngineError::ProtocolViolation(format!(
                "expected a shift on ${c}, found {}",
                msg.kind.name()
            )));
        }
        self.flip(&qid);
        let p = self.proc_mut(id);
        p.stamp.span = p.stamp.span.max(msg.stamp.span);
        p.advance();
        Ok(())
    }

    pub(super) fn flip(&mut self, qid: &ChanId) {
        if let Some(q) = self.queues.get_mut(qid) {
            q.direction = q.direction.flip();
        }
    }

    /// Label receipt costs like a value receipt.
    pub(super) fn recv_label(
        &mut self,
        id: &ChanId,
        c: &str,
        arms: &[SwitchArm],
    ) -> Result<(), EngineError> {
        let (_, msg) = self.dequeue(id, c)?;
        let MsgKind::Label(label) = msg.kind else {
            return Err(EngineError::ProtocolViolation(format!(
                "expected a label on ${c}, found {}",
                msg.kind.name()
            )));
        };
        let arm = arms.iter().find(|a| a.label == label).ok_or_else(|| {
            EngineError::ProtocolViolation(format!("no case for label `{label}`"))
        })?;
        self.total_work += 1;
        let p = self.proc_mut(id);
        p.stamp.span = p.stamp.span.max(msg.stamp.span) + 1;
        p.stamp.work += 1;
        p.advance();
        p.frames.push(Frame::Seq {
            block: arm.body.clone(),
            pc: 0,
        });
        Ok(())
    }

    /// Rule wait: `max(s, s1) + 1`, `w + w1 + 1`; the channel is gone.
    pub(super) fn wait(&mut self, id: &ChanId, c: &str) -> Result<(), EngineError> {
        let (qid, msg) = self.dequeue(id, c)?;
        if msg.kind != MsgKind::End {
            return Err(EngineError::ProtocolViolation(format!(
                "expected end on ${c}, found {}",
                msg.kind.name()
            )));
        }
        self.queues.remove(&qid);
        self.total_work += 1;
        let p = self.proc_mut(id);
        p.stamp.span = p.stamp.span.max(msg.stamp.span) + 1;
        p.stamp.work += msg.stamp.work + 1;
        p.chans.remove(c);
        p.advance();
        Ok(())
    }
}
