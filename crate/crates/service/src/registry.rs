//! Live sessions and their event fan-out.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock, Weak};
use std::time::Duration;

use kinesim_core::robot_model::RobotModel;
use kinesim_core::session::{Command, Session, SessionError, StateEvent};
use tokio::sync::broadcast;
use tokio::time::MissedTickBehavior;

const CHANNEL_CAPACITY: usize = 256;

/// A serialized state event, shared by every subscriber.
#[derive(Debug)]
pub struct Published {
    pub revision: u64,
    pub json: String,
}

impl Published {
    fn of(event: &StateEvent) -> Arc<Self> {
        Arc::new(Published {
            revision: event.revision,
            json: serde_json::to_string(event).expect("state events always serialize"),
        })
    }
}

/// One session. Commands and ticks take the lock, so each session has a
/// single writer; the broadcast send happens under the same lock, so
/// subscribers see revisions in order.
pub struct SessionHandle {
    session: Mutex<Session>,
    events: broadcast::Sender<Arc<Published>>,
}

impl SessionHandle {
    fn new(session: Session) -> Self {
        let (events, _) = broadcast::channel(CHANNEL_CAPACITY);
        SessionHandle {
            session: Mutex::new(session),
            events,
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn snapshot(&self) -> StateEvent {
        self.lock().event()
    }

    /// Snapshot plus a receiver that sees every later event.
    pub fn subscribe(&self) -> (Arc<Published>, broadcast::Receiver<Arc<Published>>) {
        let s = self.lock();
        (Published::of(&s.event()), self.events.subscribe())
    }

    /// Applies `command` unless `expected_revision` is stale. Returns the
    /// resulting state and whether it changed.
    pub fn apply(&self, command: &Command, expected_revision: Option<u64>) -> Result<(StateEvent, bool), ApplyError> {
        let mut s = self.lock();
        if let Some(expected) = expected_revision {
            if expected != s.revision() {
                return Err(ApplyError::Stale {
                    expected,
                    current: s.revision(),
                });
            }
        }
        let changed = s.apply(command)?;
        let event = s.event();
        if changed {
            // No subscribers is fine.
            let _ = self.events.send(Published::of(&event));
        }
        Ok((event, changed))
    }

    fn tick(&self, dt: f64) {
        let mut s = self.lock();
        if s.is_animating() && s.tick(dt) {
            let _ = self.events.send(Published::of(&s.event()));
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ApplyError {
    #[error("expected revision {expected}, session is at {current}")]
    Stale { expected: u64, current: u64 },
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, Copy)]
pub struct RegistryOptions {
    /// Animation ticks per second; `None` leaves animations parked.
    pub tick_hz: Option<f64>,
    pub animation_seconds: f64,
}

impl Default for RegistryOptions {
    fn default() -> Self {
        RegistryOptions {
            tick_hz: Some(crate::TICK_HZ),
            animation_seconds: kinesim_core::session::DEFAULT_ANIMATION_SECONDS,
        }
    }
}

#[derive(Default)]
pub struct Registry {
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    options: RegistryOptions,
}

impl Registry {
    pub fn new(options: RegistryOptions) -> Self {
        Registry {
            sessions: RwLock::default(),
            options,
        }
    }

    /// Creates a session; with ticking enabled this must run inside a tokio
    /// runtime.
    pub fn create(&self, model: Arc<RobotModel>) -> (String, Arc<SessionHandle>) {
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session::new(id.clone(), model).with_animation_seconds(self.options.animation_seconds);
        let handle = Arc::new(SessionHandle::new(session));
        if let Some(hz) = self.options.tick_hz {
            tokio::spawn(run_ticker(Arc::downgrade(&handle), hz));
        }
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.clone(), handle.clone());
        (id, handle)
    }

    pub fn get(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }
}

async fn run_ticker(handle: Weak<SessionHandle>, hz: f64) {
    let dt = 1.0 / hz;
    let mut interval = tokio::time::interval(Duration::from_secs_f64(dt));
    interval.set_missed_tick_behavior(MissedTickBehavior::Skip);
    loop {
        interval.tick().await;
        let Some(h) = handle.upgrade() else { break };
        h.tick(dt);
    }
}
