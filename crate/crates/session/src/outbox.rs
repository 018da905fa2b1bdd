//! Bounded outbound queue between the simulation loop and a socket writer.
//! When full, the oldest queued snapshot is dropped so a slow client never
//! holds up the simulation; control messages are always delivered.

use std::collections::VecDeque;
use std::sync::Mutex;

use tokio::sync::Notify;

use crate::protocol::ServerMessage;

pub struct Outbox {
    inner: Mutex<Inner>,
    notify: Notify,
    capacity: usize,
}

struct Inner {
    queue: VecDeque<ServerMessage>,
    closed: bool,
    dropped: u64,
}

impl Outbox {
    pub fn new(capacity: usize) -> Self {
        Self {
            inner: Mutex::new(Inner {
                queue: VecDeque::new(),
                closed: false,
                dropped: 0,
            }),
            notify: Notify::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn push(&self, message: ServerMessage) {
        let mut inner = self.inner.lock().expect("outbox lock");
        if inner.closed {
            return;
        }
        if inner.queue.len() >= self.capacity {
            if let Some(pos) = inner.queue.iter().position(ServerMessage::is_snapshot) {
                inner.queue.remove(pos);
                inner.dropped += 1;
            }
        }
        inner.queue.push_back(message);
        drop(inner);
        self.notify.notify_one();
    }

    /// Next message, or `None` once closed and drained.
    pub async fn pop(&self) -> Option<ServerMessage> {
        loop {
            {
                let mut inner = self.inner.lock().expect("outbox lock");
                if let Some(m) = inner.queue.pop_front() {
                    return Some(m);
                }
                if inner.closed {
                    return None;
                }
            }
            self.notify.notified().await;
        }
    }

    pub fn close(&self) {
        self.inner.lock().expect("outbox lock").closed = true;
        self.notify.notify_one();
    }

    pub fn dropped(&self) -> u64 {
        self.inner.lock().expect("outbox lock").dropped
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("outbox lock").queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{Snapshot, TargetView};

    fn snapshot(clock: f64) -> ServerMessage {
        ServerMessage::Snapshot(Snapshot {
            round_index: 1,
            clock,
            remaining: 0.0,
            robots: vec![],
            target: TargetView {
                visible: false,
                center: None,
                radius: 25.0,
            },
            comm_range: 36.0,
            human_informed: false,
        })
    }

    #[tokio::test]
    async fn full_queue_drops_oldest_snapshot() {
        let q = Outbox::new(3);
        q.push(ServerMessage::notice("a", ""));
        q.push(snapshot(0.1));
        q.push(snapshot(0.2));
        q.push(snapshot(0.3));
        assert_eq!(q.dropped(), 1);
        assert_eq!(q.pop().await, Some(ServerMessage::notice("a", "")));
        assert_eq!(q.pop().await, Some(snapshot(0.2)));
        assert_eq!(q.pop().await, Some(snapshot(0.3)));
        q.close();
        assert_eq!(q.pop().await, None);
    }

    #[tokio::test]
    async fn control_messages_are_never_dropped() {
        let q = Outbox::new(1);
        q.push(ServerMessage::notice("a", ""));
        q.push(ServerMessage::notice("b", ""));
        assert_eq!(q.len(), 2);
        assert_eq!(q.dropped(), 0);
    }
}
