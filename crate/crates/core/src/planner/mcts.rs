//! UCT search over the discrete game, with exact minimax values propagated
//! through fully expanded subtrees.

use super::game::{DiscreteAction, GameModel, JointState, Move, Relaxation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    state: JointState,
    mover: Option<usize>,
    moves: Vec<Move>,
    children: Vec<u32>,
    untried: Vec<usize>,
    visits: u32,
    sum: f64,
    /// Exact game value once the subtree is fully solved.
    solved: Option<f64>,
    relaxed: Relaxation,
}

/// Search tree; `ego` is the player whose time advantage is maximised.
pub struct Mcts<'m, 'a> {
    model: &'m GameModel<'a>,
    ego: usize,
    c_uct: f64,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    lo: f64,
    hi: f64,
    iterations: u32,
}

/// One root edge after search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootEdge {
    pub action: DiscreteAction,
    pub visits: u32,
    pub mean: f64,
}

impl<'m, 'a> Mcts<'m, 'a> {
    pub fn new(model: &'m GameModel<'a>, root: JointState, ego: usize, c_uct: f64, seed: u64) -> Self {
        let mut t = Self {
            model,
            ego,
            c_uct,
            rng: ChaCha8Rng::seed_from_u64(seed),
            nodes: Vec::new(),
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
            iterations: 0,
        };
        t.push_node(root);
        t
    }

    fn push_node(&mut self, state: JointState) -> u32 {
        let mover = self.model.mover(&state);
        let (moves, relaxed) = match mover {
            Some(m) => self.model.moves_with_fallback(&state, m),
            None => (Vec::new(), Relaxation::None),
        };
        // a player that cannot advance at all ends the game
        let mover = if moves.is_empty() { None } else { mover };
        let solved = mover.is_none().then(|| self.model.value(&state, self.ego));
        let n = moves.len();
        self.nodes.push(Node {
            state,
            mover,
            moves,
            children: vec![NONE; n],
            untried: (0..n).collect(),
            visits: 0,
            sum: 0.0,
            solved,
            relaxed,
        });
        (self.nodes.len() - 1) as u32
    }

    pub fn root_mover(&self) -> Option<usize> {
        self.nodes[0].mover
    }

    pub fn root_relaxation(&self) -> Relaxation {
        self.nodes[0].relaxed
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Exact root value if the whole tree has been solved.
    pub fn solved_value(&self) -> Option<f64> {
        self.nodes[0].solved
    }

    pub fn run(&mut self, budget: u32) {
        for _ in 0..budget {
            self.iterate();
        }
    }

    fn normalized(&self, v: f64) -> f64 {
        if self.hi > self.lo {
            (v - self.lo) / (self.hi - self.lo)
        } else {
            0.5
        }
    }

    /// Best child of a solved node for its mover; lowest index on ties.
    fn best_solved_child(&self, id: u32) -> u32 {
        let node = &self.nodes[id as usize];
        let maximize = node.mover == Some(self.ego);
        let mut best = node.children[0];
        let mut best_v = self.nodes[best as usize].solved.expect("children solved");
        for &c in &node.children[1..] {
            let v = self.nodes[c as usize].solved.expect("children solved");
            if (maximize && v > best_v) || (!maximize && v < best_v) {
                best = c;
                best_v = v;
            }
        }
        best
    }

    fn select_uct(&self, id: u32) -> u32 {
        let node = &self.nodes[id as usize];
        let maximize = node.mover == Some(self.ego);
        let ln_n = (node.visits.max(1) as f64).ln();
        let mut best = node.children[0];
        let mut best_score = f64::NEG_INFINITY;
        for &c in &node.children {
            let child = &self.nodes[c as usize];
            let mean = child.solved.unwrap_or(child.sum / child.visits.max(1) as f64);
            let q = self.normalized(mean);
            let q = if maximize { q } else { 1.0 - q };
            let score = q + self.c_uct * (ln_n / child.visits.max(1) as f64).sqrt();
            if score > best_score {
                best = c;
                best_score = score;
            }
        }
        best
    }

    fn iterate(&mut self) {
        self.iterations += 1;
        let mut path: Vec<u32> = vec![0];
        let mut id = 0u32;
        let value = loop {
            let node = &self.nodes[id as usize];
            if node.mover.is_none() {
                break node.solved.expect("terminal nodes are solved");
            }
            if node.solved.is_some() {
                id = self.best_solved_child(id);
                path.push(id);
                continue;
            }
            if !node.untried.is_empty() {
                let pick = self.rng.random_range(0..node.untried.len());
                let node = &mut self.nodes[id as usize];
                let k = node.untried.swap_remove(pick);
                let mover = node.mover.expect("non-terminal");
                let state = self.model.apply(&node.state, mover, &node.moves[k]);
                let child = self.push_node(state);
                self.nodes[id as usize].children[k] = child;
                path.push(child);
                let c = &self.nodes[child as usize];
                break match c.solved {
                    Some(v) => v,
                    None => rollout(self.model, &c.state, self.ego),
                };
            }
            id = self.select_uct(id);
            path.push(id);
        };
        self.lo = self.lo.min(value);
        self.hi = self.hi.max(value);
        for &n in path.iter().rev() {
            let node = &mut self.nodes[n as usize];
            node.visits += 1;
            node.sum += value;
        }
        for &n in path.iter().rev() {
            self.try_solve(n);
        }
    }

    fn try_solve(&mut self, id: u32) {
        let node = &self.nodes[id as usize];
        if node.solved.is_some() || !node.untried.is_empty() || node.children.contains(&NONE) {
            return;
        }
        let maximize = node.mover == Some(self.ego);
        let mut best: Option<f64> = None;
        for &c in &node.children {
            match self.nodes[c as usize].solved {
                None => return,
                Some(v) => {
                    best = Some(match best {
                        None => v,
                        Some(b) if maximize => b.max(v),
                        Some(b) => b.min(v),
                    })
                }
            }
        }
        self.nodes[id as usize].solved = best;
    }

    pub fn root_edges(&self) -> Vec<RootEdge> {
        let root = &self.nodes[0];
        root.moves
            .iter()
            .zip(&root.children)
            .map(|(m, &c)| {
                let (visits, mean) = if c == NONE {
                    (0, f64::NAN)
                } else {
                    let n = &self.nodes[c as usize];
                    (n.visits, n.solved.unwrap_or(n.sum / n.visits.max(1) as f64))
                };
                RootEdge { action: m.action, visits, mean }
            })
            .collect()
    }

    fn most_visited(&self, id: u32) -> Option<usize> {
        let node = &self.nodes[id as usize];
        let mut best: Option<(usize, u32)> = None;
        for (k, &c) in node.children.iter().enumerate() {
            if c == NONE {
                continue;
            }
            let v = self.nodes[c as usize].visits;
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((k, v));
            }
        }
        best.map(|(k, _)| k)
    }

    /// Most-visited root action (lowest action index on ties).
    pub fn best_action(&self) -> Option<DiscreteAction> {
        self.most_visited(0).map(|k| self.nodes[0].moves[k].action)
    }

    /// Principal line: most-visited children from the root, continued with
    /// the default policy once the tree runs out. Returns `(mover, move,
    /// relaxation in force)` in play order.
    pub fn principal_line(&self) -> Vec<(usize, Move, Relaxation)> {
        let mut line = Vec::new();
        let mut id = 0u32;
        loop {
            let node = &self.nodes[id as usize];
            let Some(mover) = node.mover else { return line };
            match self.most_visited(id) {
                Some(k) => {
                    line.push((mover, node.moves[k], node.relaxed));
                    id = node.children[k];
                }
                None => break,
            }
        }
        let mut state = self.nodes[id as usize].state.clone();
        while let Some(mover) = self.model.mover(&state) {
            let (moves, relaxed) = self.model.moves_with_fallback(&state, mover);
            let Some(m) = default_policy(&state, mover, &moves) else { break };
            line.push((mover, m, relaxed));
            state = self.model.apply(&state, mover, &m);
        }
        line
    }
}

/// Greedy-fast default policy: keep the lane at the highest feasible speed,
/// otherwise the fastest legal move (smallest lane shift, then lowest index).
pub fn default_policy(state: &JointState, mover: usize, moves: &[Move]) -> Option<Move> {
    let lane = state.players[mover].lane;
    moves
        .iter()
        .max_by(|a, b| {
            let key = |m: &Move| (m.action.lane == lane, m.action.speed, std::cmp::Reverse(m.action.lane.abs_diff(lane)));
            key(a).cmp(&key(b)).then_with(|| b.action.lane.cmp(&a.action.lane))
        })
        .copied()
}

/// Plays the default policy to the frontier and scores the result for `ego`.
pub fn rollout(model: &GameModel, state: &JointState, ego: usize) -> f64 {
    let mut s = state.clone();
    while let Some(mover) = model.mover(&s) {
        let (moves, _) = model.moves_with_fallback(&s, mover);
        match default_policy(&s, mover, &moves) {
            Some(m) => s = model.apply(&s, mover, &m),
            None => break,
        }
    }
    model.value(&s, ego)
}
