use std::cell::RefCell;
use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex};

use crate::engine::Inner;
use crate::TaskError;

type Continuation<T> = Box<dyn FnOnce(Result<T, TaskError>) + Send>;
type Thunk = Box<dyn FnOnce()>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Pending,
    Ready,
    Failed,
}

enum Slot<T> {
    Pending(Vec<Continuation<T>>),
    Ready(T),
    Failed(TaskError),
}

pub(crate) struct Shared<T> {
    slot: Mutex<Slot<T>>,
    done: Condvar,
}

/// Completion token for a submitted task, carrying its typed result.
///
/// Results are handed to every continuation and every `wait` by clone; wrap
/// large payloads in an `Arc`.
pub struct TaskHandle<T> {
    shared: Arc<Shared<T>>,
    engine: Arc<Inner>,
}

impl<T> Clone for TaskHandle<T> {
    fn clone(&self) -> Self {
        TaskHandle {
            shared: self.shared.clone(),
            engine: self.engine.clone(),
        }
    }
}

thread_local! {
    // Continuations completed while another completion is being drained on
    // this thread are queued here instead of recursing.
    static DRAIN: RefCell<Option<VecDeque<Thunk>>> = const { RefCell::new(None) };
}

fn run_drained(thunk: Thunk) {
    let queued = DRAIN.with(|d| {
        let mut d = d.borrow_mut();
        match d.as_mut() {
            Some(q) => {
                q.push_back(thunk);
                None
            }
            None => {
                *d = Some(VecDeque::new());
                Some(thunk)
            }
        }
    });
    let Some(first) = queued else { return };
    first();
    loop {
        let next = DRAIN.with(|d| d.borrow_mut().as_mut().and_then(|q| q.pop_front()));
        match next {
            Some(t) => t(),
            None => break,
        }
    }
    DRAIN.with(|d| *d.borrow_mut() = None);
}

pub(crate) fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "task panicked".to_string()
    }
}

impl<T: Clone + Send + 'static> TaskHandle<T> {
    pub(crate) fn pending(engine: Arc<Inner>) -> Self {
        TaskHandle {
            shared: Arc::new(Shared {
                slot: Mutex::new(Slot::Pending(Vec::new())),
                done: Condvar::new(),
            }),
            engine,
        }
    }

    pub(crate) fn completed(engine: Arc<Inner>, result: Result<T, TaskError>) -> Self {
        let slot = match result {
            Ok(v) => Slot::Ready(v),
            Err(e) => Slot::Failed(e),
        };
        TaskHandle {
            shared: Arc::new(Shared {
                slot: Mutex::new(slot),
                done: Condvar::new(),
            }),
            engine,
        }
    }

    /// Transitions pending -> ready/failed and runs the attached continuations.
    pub(crate) fn complete(&self, result: Result<T, TaskError>) {
        let continuations = {
            let mut slot = self.shared.slot.lock().unwrap();
            let prev = std::mem::replace(
                &mut *slot,
                match &result {
                    Ok(v) => Slot::Ready(v.clone()),
                    Err(e) => Slot::Failed(e.clone()),
                },
            );
            match prev {
                Slot::Pending(c) => c,
                _ => panic!("task handle completed twice"),
            }
        };
        self.shared.done.notify_all();
        for c in continuations {
            let r = result.clone();
            run_drained(Box::new(move || c(r)));
        }
    }

    pub fn state(&self) -> TaskState {
        match &*self.shared.slot.lock().unwrap() {
            Slot::Pending(_) => TaskState::Pending,
            Slot::Ready(_) => TaskState::Ready,
            Slot::Failed(_) => TaskState::Failed,
        }
    }

    /// Non-blocking poll.
    pub fn try_get(&self) -> Option<Result<T, TaskError>> {
        match &*self.shared.slot.lock().unwrap() {
            Slot::Pending(_) => None,
            Slot::Ready(v) => Some(Ok(v.clone())),
            Slot::Failed(e) => Some(Err(e.clone())),
        }
    }

    /// Blocks the calling thread until the task completes.
    ///
    /// Orchestration-layer only; calling this from inside a task body can
    /// deadlock the engine.
    pub fn wait(&self) -> Result<T, TaskError> {
        debug_assert!(
            !self.engine.is_current_worker(),
            "TaskHandle::wait called from a worker thread"
        );
        let mut slot = self.shared.slot.lock().unwrap();
        loop {
            match &*slot {
                Slot::Pending(_) => slot = self.shared.done.wait(slot).unwrap(),
                Slot::Ready(v) => return Ok(v.clone()),
                Slot::Failed(e) => return Err(e.clone()),
            }
        }
    }

    /// Registers a raw continuation. If the handle is already complete the
    /// continuation is queued as a fresh task.
    fn attach(&self, cont: Continuation<T>) {
        let mut slot = self.shared.slot.lock().unwrap();
        match &mut *slot {
            Slot::Pending(list) => list.push(cont),
            Slot::Ready(v) => {
                let r = Ok(v.clone());
                drop(slot);
                self.engine.spawn_raw(Box::new(move || cont(r)));
            }
            Slot::Failed(e) => {
                let r = Err(e.clone());
                drop(slot);
                self.engine.spawn_raw(Box::new(move || cont(r)));
            }
        }
    }

    /// Continuation that sees both success and failure of the antecedent.
    pub fn then_result<U, F>(&self, f: F) -> TaskHandle<U>
    where
        U: Clone + Send + 'static,
        F: FnOnce(Result<T, TaskError>) -> Result<U, TaskError> + Send + 'static,
    {
        let next = TaskHandle::<U>::pending(self.engine.clone());
        let out = next.clone();
        let engine = self.engine.clone();
        engine.task_started();
        self.attach(Box::new(move |r| {
            let result = match catch_unwind(AssertUnwindSafe(|| f(r))) {
                Ok(r) => r,
                Err(p) => Err(TaskError::new(panic_message(p.as_ref()))),
            };
            next.complete(result);
            next.engine.task_finished();
        }));
        out
    }

    /// Continuation on success. A failed antecedent propagates its error
    /// without running `f`.
    pub fn then<U, F>(&self, f: F) -> TaskHandle<U>
    where
        U: Clone + Send + 'static,
        F: FnOnce(T) -> U + Send + 'static,
    {
        self.then_result(move |r| r.map(f))
    }
}

/// Joins `handles` into one handle yielding all results in input order.
///
/// Fails with the first failure (by input position) if any antecedent fails.
pub fn when_all<T: Clone + Send + 'static>(
    engine: &crate::Engine,
    handles: Vec<TaskHandle<T>>,
) -> TaskHandle<Vec<T>> {
    let inner = engine.inner();
    if handles.is_empty() {
        return TaskHandle::completed(inner, Ok(Vec::new()));
    }
    struct Join<T> {
        results: Vec<Option<Result<T, TaskError>>>,
        remaining: usize,
    }
    let n = handles.len();
    let joined = TaskHandle::<Vec<T>>::pending(inner.clone());
    let state = Arc::new(Mutex::new(Join {
        results: (0..n).map(|_| None).collect(),
        remaining: n,
    }));
    for (i, h) in handles.into_iter().enumerate() {
        let state = state.clone();
        let joined = joined.clone();
        inner.task_started();
        let engine = inner.clone();
        h.attach(Box::new(move |r| {
            let finished = {
                let mut s = state.lock().unwrap();
                s.results[i] = Some(r);
                s.remaining -= 1;
                if s.remaining == 0 {
                    Some(std::mem::take(&mut s.results))
                } else {
                    None
                }
            };
            if let Some(results) = finished {
                let mut out = Vec::with_capacity(results.len());
                let mut failure = None;
                for r in results.into_iter().flatten() {
                    match r {
                        Ok(v) => out.push(v),
                        Err(e) => {
                            failure.get_or_insert(e);
                        }
                    }
                }
                joined.complete(match failure {
                    Some(e) => Err(e),
                    None => Ok(out),
                });
            }
            engine.task_finished();
        }));
    }
    joined
}
