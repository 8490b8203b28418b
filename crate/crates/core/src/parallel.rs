//! Hash-partitioned multi-worker traversal in synchronous rounds.
//!
//! Worker `k` owns the facets with `k ≤ N σ < k + 1`. Each round every worker
//! expands up to `batch` of its pending facets and mails the neighbours to
//! their owners; a barrier, a drain and an or-reduction close the round.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::pivot::{start_facet, PivotContext};
use crate::traversal::{
    expand, fingerprint, Frontier, HashCoeffs, Pending, RawCell, TraversalOptions, TraversalStats,
    VisitedSet,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkerConfig {
    pub workers: usize,
    pub id: usize,
}

/// `min(⌊N σ⌋, N − 1)` with `σ` a 64-bit fraction.
#[inline]
pub fn owner(sigma: u64, workers: usize) -> usize {
    (((sigma as u128) * workers as u128) >> 64) as usize
}

impl WorkerConfig {
    pub fn owns(&self, sigma: u64) -> bool {
        owner(sigma, self.workers) == self.id
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub dest: usize,
    pub pending: Pending,
}

/// Message passing between workers.
pub trait Transport: Sync {
    fn send(&self, env: Envelope) -> Result<()>;
    /// Everything delivered to `worker` so far.
    fn drain(&self, worker: usize) -> Result<Vec<Envelope>>;
    /// After this returns, every earlier `send` is visible to `drain`.
    fn barrier(&self) -> Result<()>;
}

/// Mailboxes shared by threads of one process.
pub struct InProcessTransport {
    inboxes: Vec<Mutex<Vec<Envelope>>>,
    sent: AtomicU64,
    drained: AtomicU64,
}

impl InProcessTransport {
    pub fn new(workers: usize) -> Self {
        InProcessTransport {
            inboxes: (0..workers).map(|_| Mutex::new(Vec::new())).collect(),
            sent: AtomicU64::new(0),
            drained: AtomicU64::new(0),
        }
    }

    pub fn messages(&self) -> u64 {
        self.sent.load(Ordering::Relaxed)
    }
}

impl Transport for InProcessTransport {
    fn send(&self, env: Envelope) -> Result<()> {
        let inbox = self
            .inboxes
            .get(env.dest)
            .ok_or_else(|| Error::Transport(format!("no worker {}", env.dest)))?;
        inbox
            .lock()
            .map_err(|_| Error::Transport("poisoned inbox".into()))?
            .push(env);
        self.sent.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    fn drain(&self, worker: usize) -> Result<Vec<Envelope>> {
        let inbox = self
            .inboxes
            .get(worker)
            .ok_or_else(|| Error::Transport(format!("no worker {worker}")))?;
        let v = std::mem::take(
            &mut *inbox
                .lock()
                .map_err(|_| Error::Transport("poisoned inbox".into()))?,
        );
        self.drained.fetch_add(v.len() as u64, Ordering::Relaxed);
        Ok(v)
    }

    fn barrier(&self) -> Result<()> {
        // sends complete under the inbox lock, so they are already visible
        Ok(())
    }
}

pub struct Worker {
    pub cfg: WorkerConfig,
    pub frontier: Frontier,
    pub visited: VisitedSet,
    pub cells: Vec<RawCell>,
    pub stats: TraversalStats,
}

impl Worker {
    fn new(cfg: WorkerConfig, n: usize) -> Self {
        Worker {
            cfg,
            frontier: Frontier::default(),
            visited: VisitedSet::default(),
            cells: Vec::new(),
            stats: TraversalStats::new(n),
        }
    }

    fn round(
        &mut self,
        ctx: &PivotContext,
        h: &HashCoeffs,
        opts: &TraversalOptions,
        batch: usize,
        transport: &dyn Transport,
    ) -> Result<()> {
        let mut done = 0;
        while done < batch {
            let Some((sigma, p)) = self.frontier.pop() else {
                break;
            };
            debug_assert!(self.cfg.owns(sigma));
            if !self.visited.insert(sigma, fingerprint(&p.labels))? {
                continue;
            }
            let ex = expand(ctx, opts, p, &mut self.stats.audit)?;
            self.stats.v[ex.level] += 1;
            self.stats.visited += 1;
            if let Some(c) = ex.cell {
                self.stats.cells += 1;
                self.cells.push(c);
            }
            for q in ex.next {
                let dest = owner(h.sigma(&q.labels), self.cfg.workers);
                transport.send(Envelope { dest, pending: q })?;
            }
            done += 1;
        }
        Ok(())
    }

    fn receive(&mut self, h: &HashCoeffs, transport: &dyn Transport) -> Result<()> {
        for env in transport.drain(self.cfg.id)? {
            let sigma = h.sigma(&env.pending.labels);
            if !self.cfg.owns(sigma) {
                return Err(Error::Transport(format!(
                    "worker {} got a foreign facet",
                    self.cfg.id
                )));
            }
            if self
                .visited
                .contains(sigma, fingerprint(&env.pending.labels))?
            {
                continue;
            }
            self.frontier.push(sigma, env.pending)?;
        }
        Ok(())
    }
}

/// True iff no worker has pending work.
pub fn quiescence(workers: &[Worker]) -> bool {
    workers.iter().all(|w| w.frontier.is_empty())
}

#[cfg(feature = "parallel")]
fn for_each_worker<F>(ws: &mut [Worker], f: F) -> Result<()>
where
    F: Fn(&mut Worker) -> Result<()> + Sync + Send,
{
    use rayon::prelude::*;
    let res: Vec<Result<()>> = ws.par_iter_mut().map(f).collect();
    res.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
fn for_each_worker<F>(ws: &mut [Worker], f: F) -> Result<()>
where
    F: Fn(&mut Worker) -> Result<()>,
{
    ws.iter_mut().try_for_each(f)
}

/// Runs `workers` cooperating workers to completion; cells come back sorted by label.
pub fn run_workers(
    ctx: &PivotContext,
    h: &HashCoeffs,
    opts: &TraversalOptions,
    workers: usize,
    batch: usize,
    transport: &dyn Transport,
) -> Result<(Vec<RawCell>, TraversalStats)> {
    if workers == 0 {
        return Err(Error::Input("need at least one worker".into()));
    }
    let batch = batch.max(1);
    let n = ctx.cay.n;
    let mut ws: Vec<Worker> = (0..workers)
        .map(|id| Worker::new(WorkerConfig { workers, id }, n))
        .collect();
    let start = start_facet(ctx)?;
    let sigma = h.sigma(&start.active);
    ws[owner(sigma, workers)]
        .frontier
        .push(sigma, Pending::new(start.active))?;
    loop {
        for_each_worker(&mut ws, |w| w.round(ctx, h, opts, batch, transport))?;
        transport.barrier()?;
        for_each_worker(&mut ws, |w| w.receive(h, transport))?;
        if quiescence(&ws) {
            break;
        }
    }
    let mut stats = TraversalStats::new(n);
    let mut cells = Vec::new();
    for w in ws {
        stats.merge(&w.stats);
        cells.extend(w.cells);
    }
    cells.sort_by(|a, b| a.labels.cmp(&b.labels));
    Ok((cells, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn owner_partitions() {
        assert_eq!(owner(0, 4), 0);
        assert_eq!(owner(u64::MAX, 4), 3);
        assert_eq!(owner(1 << 63, 4), 2);
        assert_eq!(owner(u64::MAX, 1), 0);
        let cfg = WorkerConfig { workers: 3, id: 1 };
        assert!(cfg.owns(u64::MAX / 2));
    }

    #[test]
    fn transport_roundtrip() {
        let t = InProcessTransport::new(2);
        t.send(Envelope {
            dest: 1,
            pending: Pending::new(vec![3]),
        })
        .unwrap();
        t.barrier().unwrap();
        assert!(t.drain(0).unwrap().is_empty());
        assert_eq!(t.drain(1).unwrap().len(), 1);
        assert!(t
            .send(Envelope {
                dest: 5,
                pending: Pending::new(vec![])
            })
            .is_err());
    }

    #[test]
    fn quiescence_cases() {
        let mut ws: Vec<Worker> = (0..2)
            .map(|id| Worker::new(WorkerConfig { workers: 2, id }, 1))
            .collect();
        assert!(quiescence(&ws));
        ws[1]
            .frontier
            .push(u64::MAX, Pending::new(vec![0]))
            .unwrap();
        assert!(!quiescence(&ws));
    }
}
