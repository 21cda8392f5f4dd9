//! Message passing between ranks running as threads.
//!
//! Every rank owns one [`Comm`]. Point-to-point messages are tagged
//! buffers of `f64`; collective operations draw tags from a per-rank
//! counter, so all ranks must call them in the same order (as with MPI).

use std::cell::{Cell, RefCell};
use std::collections::{HashMap, VecDeque};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use crate::error::{DecError, Result};
use crate::solver::exact::ExactSum;

const RECV_TIMEOUT: Duration = Duration::from_secs(120);

struct Message {
    from: usize,
    tag: u64,
    data: Vec<f64>,
}

pub struct Comm {
    rank: usize,
    size: usize,
    senders: Vec<Sender<Message>>,
    receiver: Receiver<Message>,
    pending: RefCell<HashMap<(usize, u64), VecDeque<Vec<f64>>>>,
    next_tag: Cell<u64>,
}

impl Comm {
    /// One communicator per rank, fully connected.
    pub fn world(size: usize) -> Vec<Comm> {
        let (senders, receivers): (Vec<_>, Vec<_>) = (0..size).map(|_| channel()).unzip();
        receivers
            .into_iter()
            .enumerate()
            .map(|(rank, receiver)| Comm {
                rank,
                size,
                senders: senders.clone(),
                receiver,
                pending: RefCell::new(HashMap::new()),
                next_tag: Cell::new(0),
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Fresh tag for the next collective step.
    pub fn next_tag(&self) -> u64 {
        let t = self.next_tag.get();
        self.next_tag.set(t + 1);
        t
    }

    pub fn send(&self, to: usize, tag: u64, data: Vec<f64>) -> Result<()> {
        self.senders[to]
            .send(Message {
                from: self.rank,
                tag,
                data,
            })
            .map_err(|_| DecError::Comm(format!("rank {to} has hung up")))
    }

    pub fn recv(&self, from: usize, tag: u64) -> Result<Vec<f64>> {
        if let Some(q) = self.pending.borrow_mut().get_mut(&(from, tag)) {
            if let Some(data) = q.pop_front() {
                return Ok(data);
            }
        }
        loop {
            let msg = self.receiver.recv_timeout(RECV_TIMEOUT).map_err(|e| match e {
                RecvTimeoutError::Timeout => DecError::Comm(format!(
                    "rank {} timed out waiting for rank {from} (tag {tag})",
                    self.rank
                )),
                RecvTimeoutError::Disconnected => DecError::Comm("all senders disconnected".into()),
            })?;
            if msg.from == from && msg.tag == tag {
                return Ok(msg.data);
            }
            self.pending
                .borrow_mut()
                .entry((msg.from, msg.tag))
                .or_default()
                .push_back(msg.data);
        }
    }

    /// Sum over all ranks, correctly rounded. Exact partial sums are
    /// gathered on rank 0 and merged in rank order.
    pub fn allreduce_exact(&self, local: &ExactSum) -> Result<f64> {
        let tag = self.next_tag();
        if self.rank == 0 {
            let mut total = local.clone();
            for r in 1..self.size {
                let words = self.recv(r, tag)?;
                let part = ExactSum::from_limbs(&words)
                    .ok_or_else(|| DecError::Comm(format!("malformed partial sum from rank {r}")))?;
                total.merge(&part);
            }
            let v = total.value();
            for r in 1..self.size {
                self.send(r, tag, vec![v])?;
            }
            Ok(v)
        } else {
            self.send(0, tag, local.limbs())?;
            let v = self.recv(0, tag)?;
            v.first()
                .copied()
                .ok_or_else(|| DecError::Comm("empty reduction result".into()))
        }
    }

    /// Collects every rank's buffer on rank 0, in rank order.
    pub fn gather(&self, data: Vec<f64>) -> Result<Option<Vec<Vec<f64>>>> {
        let tag = self.next_tag();
        if self.rank == 0 {
            let mut all = vec![data];
            for r in 1..self.size {
                all.push(self.recv(r, tag)?);
            }
            Ok(Some(all))
        } else {
            self.send(0, tag, data)?;
            Ok(None)
        }
    }
}

/// Runs `f` on `n` ranks, one scoped thread each, and returns the results
/// in rank order.
pub fn run_ranks<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Comm) -> R + Sync,
{
    let world = Comm::world(n);
    std::thread::scope(|s| {
        let handles: Vec<_> = world
            .into_iter()
            .map(|comm| {
                let f = &f;
                s.spawn(move || f(comm))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("rank thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allreduce_matches_serial_sum() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64).sin() * 1e10_f64.powi(i % 3)).collect();
        let serial = crate::solver::exact::sum(&values);
        for n in [1, 3, 4] {
            let got = run_ranks(n, |comm| {
                let mut s = ExactSum::new();
                for v in values.iter().skip(comm.rank()).step_by(comm.size()) {
                    s.add(*v);
                }
                comm.allreduce_exact(&s).unwrap()
            });
            assert!(got.iter().all(|&g| g == serial));
        }
    }

    #[test]
    fn out_of_order_messages_are_buffered() {
        let out = run_ranks(2, |comm| {
            if comm.rank() == 0 {
                comm.send(1, 7, vec![7.0]).unwrap();
                comm.send(1, 3, vec![3.0]).unwrap();
                vec![]
            } else {
                let a = comm.recv(0, 3).unwrap();
                let b = comm.recv(0, 7).unwrap();
                vec![a[0], b[0]]
            }
        });
        assert_eq!(out[1], vec![3.0, 7.0]);
    }

    #[test]
    fn gather_in_rank_order() {
        let out = run_ranks(3, |comm| comm.gather(vec![comm.rank() as f64]).unwrap());
        assert_eq!(out[0], Some(vec![vec![0.0], vec![1.0], vec![2.0]]));
        assert!(out[1].is_none());
    }
}
