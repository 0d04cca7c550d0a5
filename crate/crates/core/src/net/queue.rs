use std::collections::VecDeque;
use std::ops::Range;

/// FCFS backlog of one flow at one user, kept as runs of flow sequence
/// numbers (one number per bit).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowQueue {
    runs: VecDeque<Range<u64>>,
    bits: u64,
}

impl FlowQueue {
    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn push(&mut self, run: Range<u64>) {
        if run.is_empty() {
            return;
        }
        self.bits += run.end - run.start;
        if let Some(last) = self.runs.back_mut() {
            if last.end == run.start {
                last.end = run.end;
                return;
            }
        }
        self.runs.push_back(run);
    }

    /// Removes up to `n` bits from the head, in order.
    pub fn pop(&mut self, n: u64) -> Vec<Range<u64>> {
        let mut out = Vec::new();
        let mut left = n.min(self.bits);
        self.bits -= left;
        while left > 0 {
            let head = self.runs.front_mut().expect("bit count matches runs");
            let len = head.end - head.start;
            if len <= left {
                left -= len;
                out.push(self.runs.pop_front().unwrap());
            } else {
                out.push(head.start..head.start + left);
                head.start += left;
                left = 0;
            }
        }
        out
    }

    pub fn runs(&self) -> impl Iterator<Item = &Range<u64>> {
        self.runs.iter()
    }
}

/// Backlogs `Q_i^s` of every user `i` and flow `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueState {
    n_flows: usize,
    queues: Vec<FlowQueue>,
}

impl QueueState {
    pub fn new(n_users: usize, n_flows: usize) -> Self {
        Self {
            n_flows,
            queues: vec![FlowQueue::default(); n_users * n_flows],
        }
    }

    pub fn n_flows(&self) -> usize {
        self.n_flows
    }

    pub fn queue(&self, user: usize, flow: usize) -> &FlowQueue {
        &self.queues[user * self.n_flows + flow]
    }

    pub fn queue_mut(&mut self, user: usize, flow: usize) -> &mut FlowQueue {
        &mut self.queues[user * self.n_flows + flow]
    }

    pub fn backlog(&self, user: usize, flow: usize) -> u64 {
        self.queue(user, flow).bits()
    }

    /// All flow backlogs of one user.
    pub fn backlogs(&self, user: usize) -> Vec<u64> {
        (0..self.n_flows).map(|s| self.backlog(user, s)).collect()
    }

    pub fn total(&self, flow: usize) -> u64 {
        self.queues.iter().skip(flow).step_by(self.n_flows).map(FlowQueue::bits).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_in_arrival_order_and_splits_runs() {
        let mut q = FlowQueue::default();
        q.push(0..10);
        q.push(10..15);
        q.push(40..50);
        assert_eq!(q.bits(), 25);
        assert_eq!(q.pop(12), vec![0..12]);
        assert_eq!(q.pop(100), vec![12..15, 40..50]);
        assert_eq!(q.bits(), 0);
        assert!(q.pop(3).is_empty());
    }
}
