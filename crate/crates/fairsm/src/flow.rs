//! Dinic's maximum flow on small integer-capacity networks. Used for the
//! maximum-weight closure computation behind the egalitarian solver.

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: i64,
    rev: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    graph: Vec<Vec<Edge>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        Self { graph: vec![Vec::new(); n], level: vec![0; n], iter: vec![0; n] }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64) {
        debug_assert!(cap >= 0);
        let rev_from = self.graph[to].len();
        let rev_to = self.graph[from].len();
        self.graph[from].push(Edge { to, cap, rev: rev_from });
        self.graph[to].push(Edge { to: from, cap: 0, rev: rev_to });
    }

    fn bfs(&mut self, source: usize, sink: usize) -> bool {
        self.level.fill(-1);
        let mut queue = std::collections::VecDeque::new();
        self.level[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if e.cap > 0 && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        self.level[sink] >= 0
    }

    fn dfs(&mut self, v: usize, sink: usize, f: i64) -> i64 {
        if v == sink {
            return f;
        }
        while self.iter[v] < self.graph[v].len() {
            let (to, cap, rev) = {
                let e = &self.graph[v][self.iter[v]];
                (e.to, e.cap, e.rev)
            };
            if cap > 0 && self.level[v] < self.level[to] {
                let d = self.dfs(to, sink, f.min(cap));
                if d > 0 {
                    self.graph[v][self.iter[v]].cap -= d;
                    self.graph[to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let mut flow = 0;
        while self.bfs(source, sink) {
            self.iter.fill(0);
            loop {
                let f = self.dfs(source, sink, i64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }

    /// Nodes reachable from `source` in the residual graph; the source
    /// side of a minimum cut once `max_flow` has run.
    pub fn min_cut_source_side(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        let mut stack = vec![source];
        seen[source] = true;
        while let Some(v) = stack.pop() {
            for e in &self.graph[v] {
                if e.cap > 0 && !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_network() {
        // Classic 4-node diamond: max flow 5.
        let mut net = FlowNetwork::new(4);
        net.add_edge(0, 1, 3);
        net.add_edge(0, 2, 2);
        net.add_edge(1, 2, 2);
        net.add_edge(1, 3, 2);
        net.add_edge(2, 3, 3);
        assert_eq!(net.max_flow(0, 3), 5);
        let side = net.min_cut_source_side(0);
        assert!(side[0]);
        assert!(!side[3]);
    }

    #[test]
    fn disconnected_sink() {
        let mut net = FlowNetwork::new(3);
        net.add_edge(0, 1, 7);
        assert_eq!(net.max_flow(0, 2), 0);
        let side = net.min_cut_source_side(0);
        assert_eq!(side, vec![true, true, false]);
    }
}
