use std::cell::RefCell;
use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam::deque::{Injector, Steal, Stealer, Worker};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use crate::handle::{panic_message, when_all, TaskHandle};
use crate::split::{split_chunks, SplitPolicy};
use crate::{EngineError, TaskError};

type Job = Box<dyn FnOnce() + Send>;

/// Queue discipline descriptor. Only one discipline is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueueDiscipline {
    /// Per-worker FIFO deques, random-victim stealing.
    #[default]
    FifoRandomSteal,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub workers: usize,
    pub queue: QueueDiscipline,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: 1,
            queue: QueueDiscipline::FifoRandomSteal,
            seed: 0x5eed,
        }
    }
}

impl EngineConfig {
    pub fn with_workers(workers: usize) -> Self {
        EngineConfig {
            workers,
            ..Default::default()
        }
    }
}

pub(crate) struct Inner {
    id: usize,
    injector: Injector<Job>,
    stealers: Vec<Stealer<Job>>,
    outstanding: AtomicUsize,
    quiet: Mutex<()>,
    quiet_cv: Condvar,
    sleep: Mutex<()>,
    sleep_cv: Condvar,
    shutdown: AtomicBool,
}

static NEXT_ENGINE_ID: AtomicUsize = AtomicUsize::new(1);

thread_local! {
    static LOCAL: RefCell<Option<(usize, Worker<Job>)>> = const { RefCell::new(None) };
}

impl Inner {
    pub(crate) fn is_current_worker(&self) -> bool {
        LOCAL.with(|l| matches!(&*l.borrow(), Some((id, _)) if *id == self.id))
    }

    pub(crate) fn task_started(&self) {
        self.outstanding.fetch_add(1, Ordering::SeqCst);
    }

    pub(crate) fn task_finished(&self) {
        if self.outstanding.fetch_sub(1, Ordering::SeqCst) == 1 {
            let _g = self.quiet.lock().unwrap();
            self.quiet_cv.notify_all();
        }
    }

    fn push(&self, job: Job) {
        let leftover = LOCAL.with(|l| match &*l.borrow() {
            Some((id, w)) if *id == self.id => {
                w.push(job);
                None
            }
            _ => Some(job),
        });
        if let Some(job) = leftover {
            self.injector.push(job);
        }
        let _g = self.sleep.lock().unwrap();
        self.sleep_cv.notify_one();
    }

    /// Queues an already-counted job (see `task_started`).
    pub(crate) fn spawn_raw(&self, job: Job) {
        self.push(job);
    }

    fn has_visible_work(&self) -> bool {
        !self.injector.is_empty() || self.stealers.iter().any(|s| !s.is_empty())
    }

    fn find_job(&self, local: &Worker<Job>, me: usize, rng: &mut SmallRng) -> Option<Job> {
        if let Some(j) = local.pop() {
            return Some(j);
        }
        loop {
            match self.injector.steal_batch_and_pop(local) {
                Steal::Success(j) => return Some(j),
                Steal::Retry => continue,
                Steal::Empty => break,
            }
        }
        let n = self.stealers.len();
        if n > 1 {
            let start = rng.gen_range(0..n);
            for k in 0..n {
                let victim = (start + k) % n;
                if victim == me {
                    continue;
                }
                loop {
                    match self.stealers[victim].steal() {
                        Steal::Success(j) => return Some(j),
                        Steal::Retry => continue,
                        Steal::Empty => break,
                    }
                }
            }
        }
        None
    }
}

fn worker_loop(inner: Arc<Inner>, local: Worker<Job>, me: usize, seed: u64) {
    let mut rng = SmallRng::seed_from_u64(seed ^ (me as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    LOCAL.with(|l| *l.borrow_mut() = Some((inner.id, local)));
    loop {
        let job = LOCAL.with(|l| {
            let l = l.borrow();
            let (_, w) = l.as_ref().unwrap();
            inner.find_job(w, me, &mut rng)
        });
        match job {
            Some(job) => job(),
            None => {
                if inner.shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let g = inner.sleep.lock().unwrap();
                if inner.has_visible_work() || inner.shutdown.load(Ordering::SeqCst) {
                    continue;
                }
                let _ = inner
                    .sleep_cv
                    .wait_timeout(g, Duration::from_millis(5))
                    .unwrap();
            }
        }
    }
    LOCAL.with(|l| *l.borrow_mut() = None);
}

/// Submission-only view of an engine. Holding a spawner does not keep the
/// workers alive; submitting after shutdown fails.
#[derive(Clone)]
pub struct Spawner {
    inner: Arc<Inner>,
}

impl Spawner {
    pub fn submit<T, F>(&self, work: F) -> Result<TaskHandle<T>, EngineError>
    where
        T: Clone + Send + 'static,
        F: FnOnce() -> T + Send + 'static,
    {
        self.submit_fallible(move || Ok(work()))
    }

    pub fn submit_fallible<T, F>(&self, work: F) -> Result<TaskHandle<T>, EngineError>
    where
        T: Clone + Send + 'static,
        F: FnOnce() -> Result<T, TaskError> + Send + 'static,
    {
        if self.inner.shutdown.load(Ordering::SeqCst) {
            return Err(EngineError::ShutDown);
        }
        let handle = TaskHandle::<T>::pending(self.inner.clone());
        let h = handle.clone();
        self.inner.task_started();
        let inner = self.inner.clone();
        self.inner.push(Box::new(move || {
            let result = match catch_unwind(AssertUnwindSafe(work)) {
                Ok(r) => r,
                Err(p) => Err(TaskError::new(panic_message(p.as_ref()))),
            };
            h.complete(result);
            inner.task_finished();
        }));
        Ok(handle)
    }
}

/// Task engine owning a fixed pool of worker threads.
pub struct Engine {
    inner: Arc<Inner>,
    threads: Mutex<Vec<JoinHandle<()>>>,
    config: EngineConfig,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self, EngineError> {
        if config.workers == 0 {
            return Err(EngineError::InvalidConfig(
                "worker count must be at least 1".into(),
            ));
        }
        let workers: Vec<Worker<Job>> = (0..config.workers).map(|_| Worker::new_fifo()).collect();
        let inner = Arc::new(Inner {
            id: NEXT_ENGINE_ID.fetch_add(1, Ordering::Relaxed),
            injector: Injector::new(),
            stealers: workers.iter().map(|w| w.stealer()).collect(),
            outstanding: AtomicUsize::new(0),
            quiet: Mutex::new(()),
            quiet_cv: Condvar::new(),
            sleep: Mutex::new(()),
            sleep_cv: Condvar::new(),
            shutdown: AtomicBool::new(false),
        });
        let threads = workers
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                let inner = inner.clone();
                let seed = config.seed;
                std::thread::Builder::new()
                    .name(format!("octomini-worker-{i}"))
                    .spawn(move || worker_loop(inner, w, i, seed))
                    .expect("spawn worker thread")
            })
            .collect();
        log::debug!("task engine started with {} workers", config.workers);
        Ok(Engine {
            inner,
            threads: Mutex::new(threads),
            config,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn workers(&self) -> usize {
        self.config.workers
    }

    pub(crate) fn inner(&self) -> Arc<Inner> {
        self.inner.clone()
    }

    pub fn is_running(&self) -> bool {
        !self.inner.shutdown.load(Ordering::SeqCst)
    }

    /// Number of submitted tasks and registered continuations not yet done.
    pub fn outstanding(&self) -> usize {
        self.inner.outstanding.load(Ordering::SeqCst)
    }

    /// A handle that is already complete.
    pub fn ready<T: Clone + Send + 'static>(&self, value: T) -> TaskHandle<T> {
        TaskHandle::completed(self.inner.clone(), Ok(value))
    }

    /// Runs `work` exactly once on some worker. A panic marks the handle failed.
    pub fn submit<T, F>(&self, work: F) -> Result<TaskHandle<T>, EngineError>
    where
        T: Clone + Send + 'static,
        F: FnOnce() -> T + Send + 'static,
    {
        self.spawner().submit(work)
    }

    /// Like [`Engine::submit`] for work that reports its own failure.
    pub fn submit_fallible<T, F>(&self, work: F) -> Result<TaskHandle<T>, EngineError>
    where
        T: Clone + Send + 'static,
        F: FnOnce() -> Result<T, TaskError> + Send + 'static,
    {
        self.spawner().submit_fallible(work)
    }

    /// Cloneable submission handle that task bodies may capture to spawn
    /// further tasks.
    pub fn spawner(&self) -> Spawner {
        Spawner {
            inner: self.inner.clone(),
        }
    }

    /// Joins several handles; see [`when_all`].
    pub fn when_all<T: Clone + Send + 'static>(
        &self,
        handles: Vec<TaskHandle<T>>,
    ) -> TaskHandle<Vec<T>> {
        when_all(self, handles)
    }

    /// Launches `body` over `range` as `min(T, len)` contiguous chunk tasks.
    ///
    /// The returned handle yields one result per chunk in range order and is
    /// ready only after every chunk has finished. An empty range gives an
    /// immediately ready handle. With a single chunk requested from inside a
    /// worker, the body runs inline on the calling task.
    pub fn launch_split_kernel<R, F>(
        &self,
        range: Range<usize>,
        policy: SplitPolicy,
        body: F,
    ) -> Result<TaskHandle<Vec<R>>, EngineError>
    where
        R: Clone + Send + 'static,
        F: Fn(Range<usize>) -> R + Send + Sync + 'static,
    {
        if !self.is_running() {
            return Err(EngineError::ShutDown);
        }
        let chunks = split_chunks(range, policy.tasks_per_kernel());
        if chunks.is_empty() {
            return Ok(self.ready(Vec::new()));
        }
        if chunks.len() == 1 && self.inner.is_current_worker() {
            let c = chunks[0].clone();
            let result = match catch_unwind(AssertUnwindSafe(|| body(c))) {
                Ok(r) => Ok(vec![r]),
                Err(p) => Err(TaskError::new(panic_message(p.as_ref()))),
            };
            return Ok(TaskHandle::completed(self.inner.clone(), result));
        }
        let body = Arc::new(body);
        let handles = chunks
            .into_iter()
            .map(|c| {
                let body = body.clone();
                self.submit(move || body(c))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.when_all(handles))
    }

    /// Blocks until every submitted task and all transitive continuations
    /// have finished.
    pub fn quiesce(&self) {
        debug_assert!(!self.inner.is_current_worker());
        let mut g = self.inner.quiet.lock().unwrap();
        while self.inner.outstanding.load(Ordering::SeqCst) != 0 {
            g = self
                .inner
                .quiet_cv
                .wait_timeout(g, Duration::from_millis(10))
                .unwrap()
                .0;
        }
    }

    /// Drains outstanding work, then stops and joins the workers.
    pub fn shutdown(&self) {
        if self.inner.shutdown.load(Ordering::SeqCst) {
            return;
        }
        if !self.inner.is_current_worker() {
            self.quiesce();
        }
        self.inner.shutdown.store(true, Ordering::SeqCst);
        {
            let _g = self.inner.sleep.lock().unwrap();
            self.inner.sleep_cv.notify_all();
        }
        let threads = std::mem::take(&mut *self.threads.lock().unwrap());
        for t in threads {
            let _ = t.join();
        }
    }
}

impl Drop for Engine {
    fn drop(&mut self) {
        self.shutdown();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TaskState;
    use std::sync::atomic::AtomicU64;

    fn engine(workers: usize) -> Engine {
        Engine::new(EngineConfig::with_workers(workers)).unwrap()
    }

    #[test]
    fn submit_returns_value() {
        let e = engine(2);
        let h = e.submit(|| 42).unwrap();
        assert_eq!(h.wait(), Ok(42));
        assert_eq!(h.state(), TaskState::Ready);
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(matches!(
            Engine::new(EngineConfig::with_workers(0)),
            Err(EngineError::InvalidConfig(_))
        ));
    }

    #[test]
    fn counter_tasks_run_exactly_once() {
        let e = engine(4);
        let counter = Arc::new(AtomicU64::new(0));
        for _ in 0..10_000 {
            let c = counter.clone();
            e.submit(move || {
                c.fetch_add(1, Ordering::Relaxed);
            })
            .unwrap();
        }
        e.quiesce();
        assert_eq!(counter.load(Ordering::SeqCst), 10_000);
    }

    #[test]
    fn failure_reaches_continuation() {
        let e = engine(2);
        let h = e
            .submit_fallible::<i32, _>(|| Err(TaskError::new("boom")))
            .unwrap();
        let seen = h.then_result(|r| Ok(r.is_err()));
        assert_eq!(seen.wait(), Ok(true));
        assert_eq!(h.state(), TaskState::Failed);
        let skipped = h.then(|v| v + 1);
        assert_eq!(skipped.wait(), Err(TaskError::new("boom")));
    }

    #[test]
    fn panic_marks_handle_failed() {
        let e = engine(1);
        let h = e.submit::<i32, _>(|| panic!("kaput")).unwrap();
        let err = h.wait().unwrap_err();
        assert!(err.message.contains("kaput"));
    }

    #[test]
    fn then_on_ready_handle() {
        let e = engine(1);
        let h = e.ready(1).then(|v| v + 1);
        assert_eq!(h.wait(), Ok(2));
    }

    #[test]
    fn chain_of_hundred_increments() {
        let e = engine(2);
        let mut h = e.ready(0u32);
        for _ in 0..100 {
            h = h.then(|v| v + 1);
        }
        assert_eq!(h.wait(), Ok(100));
    }

    #[test]
    fn submit_after_shutdown_fails() {
        let e = engine(2);
        e.shutdown();
        assert_eq!(e.submit(|| 1).err(), Some(EngineError::ShutDown));
    }

    #[test]
    fn quiesce_with_no_tasks_returns() {
        let e = engine(3);
        e.quiesce();
        assert_eq!(e.outstanding(), 0);
    }

    #[test]
    fn split_kernel_visits_each_index_once() {
        let e = engine(4);
        let hits: Arc<Vec<AtomicU64>> = Arc::new((0..512).map(|_| AtomicU64::new(0)).collect());
        let h2 = hits.clone();
        let h = e
            .launch_split_kernel(0..512, SplitPolicy::new(16).unwrap(), move |r| {
                for i in r.clone() {
                    h2[i].fetch_add(1, Ordering::Relaxed);
                }
                r.len()
            })
            .unwrap();
        let sizes = h.wait().unwrap();
        assert_eq!(sizes, vec![32; 16]);
        assert!(hits.iter().all(|c| c.load(Ordering::SeqCst) == 1));
    }

    #[test]
    fn empty_split_is_ready_immediately() {
        let e = engine(1);
        let h = e
            .launch_split_kernel(0..0, SplitPolicy::new(8).unwrap(), |r| r.len())
            .unwrap();
        assert_eq!(h.state(), TaskState::Ready);
        assert_eq!(h.wait(), Ok(vec![]));
    }
}
