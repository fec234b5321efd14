//! High-level tactical planner: the discrete lane/speed game and its MCTS
//! solution, published as waypoint plans.

mod game;
mod mcts;

pub use game::{
    discretize, to_centis, turn_order, Arrival, DiscreteAction, DiscreteState, GameModel, JointState, Move, Partitions,
    Prune, Relaxation, SpeedPartition, WearPartition,
};
pub use mcts::{default_policy, rollout, Mcts, RootEdge};

use crate::vehicle::KartState;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("no legal action for player {0}")]
    EmptyActionSet(usize),
    #[error("invalid planner configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MctsConfig {
    /// Checkpoints planned ahead.
    pub horizon: usize,
    pub budget: u32,
    pub c_uct: f64,
    pub speed_buckets: usize,
    pub wear_bucket: f64,
}

impl Default for MctsConfig {
    fn default() -> Self {
        Self { horizon: 5, budget: 2000, c_uct: std::f64::consts::SQRT_2, speed_buckets: 8, wear_bucket: 0.05 }
    }
}

impl MctsConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.horizon == 0 {
            return Err("mcts.horizon must be at least 1".into());
        }
        if self.budget == 0 {
            return Err("mcts.budget must be at least 1".into());
        }
        if !(self.c_uct.is_finite() && self.c_uct >= 0.0) {
            return Err("mcts.c_uct must be non-negative".into());
        }
        if self.speed_buckets == 0 {
            return Err("mcts.speed_buckets must be at least 1".into());
        }
        if !(self.wear_bucket > 0.0 && self.wear_bucket <= 1.0) {
            return Err("mcts.wear_bucket must lie in (0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanWaypoint {
    /// Progress ordinal of the checkpoint.
    pub checkpoint: usize,
    pub lane: usize,
    pub velocity: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Predicted arrival time, s.
    pub time: f64,
}

/// Lane/speed targets for the next checkpoints, for the planning player and
/// its predicted opponent. Immutable once published.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPlan {
    pub id: u64,
    pub player: usize,
    pub epoch: f64,
    pub ego: Vec<PlanWaypoint>,
    pub opponent: Vec<PlanWaypoint>,
    pub relaxation: Relaxation,
}

impl WaypointPlan {
    /// First ego waypoint beyond progress ordinal `r`.
    pub fn next_ego(&self, r: usize) -> Option<&PlanWaypoint> {
        self.ego.iter().find(|w| w.checkpoint > r)
    }

    pub fn next_opponent(&self, r: usize) -> Option<&PlanWaypoint> {
        self.opponent.iter().find(|w| w.checkpoint > r)
    }

    pub fn ego_at(&self, checkpoint: usize) -> Option<&PlanWaypoint> {
        self.ego.iter().find(|w| w.checkpoint == checkpoint)
    }
}

fn waypoint(model: &GameModel, m: &Move) -> PlanWaypoint {
    let a = model.track.anchor_at(m.next.checkpoint, m.next.lane);
    PlanWaypoint {
        checkpoint: m.next.checkpoint,
        lane: m.next.lane,
        velocity: model.partitions.speed.midpoint(m.next.speed),
        x: a.position.x,
        y: a.position.y,
        heading: a.heading,
        time: m.next.time(),
    }
}

/// Runs the search from `root` for `ego` and extracts the plan: ego's moves
/// and the opponent's predicted best responses along the principal line,
/// truncated to `horizon` checkpoints each.
pub fn mcts_plan<'m, 'a>(
    model: &'m GameModel<'a>,
    root: &JointState,
    ego: usize,
    cfg: &MctsConfig,
    seed: u64,
) -> Result<(WaypointPlan, Mcts<'m, 'a>), PlannerError> {
    let mut tree = Mcts::new(model, root.clone(), ego, cfg.c_uct, seed);
    if tree.root_mover().is_none() && model.mover(root).is_some() {
        return Err(PlannerError::EmptyActionSet(model.mover(root).unwrap_or(ego)));
    }
    tree.run(cfg.budget);
    let mut plan = WaypointPlan {
        id: 0,
        player: ego,
        epoch: root.players[ego].time(),
        ego: Vec::new(),
        opponent: Vec::new(),
        relaxation: tree.root_relaxation(),
    };
    for (mover, m, relaxed) in tree.principal_line() {
        let list = if mover == ego { &mut plan.ego } else { &mut plan.opponent };
        if list.len() < cfg.horizon {
            list.push(waypoint(model, &m));
            plan.relaxation = plan.relaxation.max(relaxed);
        }
    }
    Ok((plan, tree))
}

/// Plans for `ego` straight from the continuous race state.
pub fn plan_from_karts(
    model: &GameModel,
    karts: &[KartState; 2],
    ego: usize,
    cfg: &MctsConfig,
    seed: u64,
) -> Result<WaypointPlan, PlannerError> {
    let root = model.root(karts, cfg.horizon);
    let (mut plan, _) = mcts_plan(model, &root, ego, cfg, seed)?;
    plan.epoch = karts[ego].t;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::RuleConfig;
    use crate::track::{build_complex, build_oval, TrackModel};
    use crate::vehicle::VehicleParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_model(track: &TrackModel) -> GameModel<'_> {
        let p = VehicleParams::default();
        GameModel::new(track, p, RuleConfig::default(), Partitions::new(2, 0.05, &p))
    }

    // Full backward induction over the same game.
    fn minimax(model: &GameModel, s: &JointState, ego: usize) -> f64 {
        let Some(mover) = model.mover(s) else { return model.value(s, ego) };
        let (moves, _) = model.moves_with_fallback(s, mover);
        if moves.is_empty() {
            return model.value(s, ego);
        }
        let vals = moves.iter().map(|m| minimax(model, &model.apply(s, mover, m), ego));
        if mover == ego {
            vals.fold(f64::NEG_INFINITY, f64::max)
        } else {
            vals.fold(f64::INFINITY, f64::min)
        }
    }

    #[test]
    fn forced_move() {
        let track = build_oval(320.0, 6.0, 1, 3.0).unwrap();
        let p = VehicleParams::default();
        let model = GameModel::new(&track, p, RuleConfig::default(), Partitions::new(1, 0.05, &p));
        let d = |cp, t| DiscreteState { checkpoint: cp, lane: 1, speed: 0, wear_bucket: 0, wear: 0.0, time_cs: t, l: 0, section: 0 };
        let root = JointState { players: [d(2, 0), d(2, 500)], arrivals: [vec![], vec![]], frontier: 3 };
        let cfg = MctsConfig { horizon: 1, budget: 10, ..Default::default() };
        let (plan, _) = mcts_plan(&model, &root, 0, &cfg, 1).unwrap();
        assert_eq!(plan.ego.len(), 1);
        assert_eq!((plan.ego[0].checkpoint, plan.ego[0].lane), (3, 1));
    }

    #[test]
    fn tiny_games_match_backward_induction() {
        let track = build_oval(200.0, 6.0, 2, 3.0).unwrap();
        let model = tiny_model(&track);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for g in 0..10 {
            let cp = rng.random_range(1..=track.len());
            let mk = |rng: &mut ChaCha8Rng, cp: usize| DiscreteState {
                checkpoint: cp,
                lane: rng.random_range(1..=2),
                speed: rng.random_range(0..2),
                wear_bucket: 0,
                wear: 0.0,
                time_cs: rng.random_range(0..80),
                l: 0,
                section: track.segment_id(track.index_of(cp)),
            };
            let a = mk(&mut rng, cp);
            let cp_b = cp + rng.random_range(0..2);
            let b = mk(&mut rng, cp_b);
            let mut root = JointState { players: [a, b], arrivals: [vec![], vec![]], frontier: cp.max(b.checkpoint) + 2 };
            root.arrivals = root.players.map(|d| vec![Arrival { checkpoint: d.checkpoint, lane: d.lane, time_cs: d.time_cs }]);
            let Some(mover) = model.mover(&root) else { continue };
            let ego = mover;
            let mut tree = Mcts::new(&model, root.clone(), ego, 2f64.sqrt(), g);
            tree.run(10_000);
            let best = tree.best_action().unwrap();
            let (moves, _) = model.moves_with_fallback(&root, mover);
            let chosen = moves.iter().find(|m| m.action == best).unwrap();
            let v_best = minimax(&model, &model.apply(&root, mover, chosen), ego);
            assert!((v_best - minimax(&model, &root, ego)).abs() < 1e-9, "game {g}");
        }
    }

    #[test]
    fn plans_are_rule_consistent_and_reproducible() {
        let track = build_complex().unwrap();
        let p = VehicleParams::default();
        let rules = RuleConfig::default();
        let model = GameModel::new(&track, p, rules, Partitions::new(8, 0.05, &p));
        let mut a = KartState::at_anchor(&track, 1, 1);
        let mut b = KartState::at_anchor(&track, 1, 3);
        a.v = 10.0;
        b.v = 12.0;
        let cfg = MctsConfig::default();
        let plan = plan_from_karts(&model, &[a, b], 0, &cfg, 3).unwrap();
        assert_eq!(plan, plan_from_karts(&model, &[a, b], 0, &cfg, 3).unwrap());
        assert_eq!(plan.ego.len(), cfg.horizon);
        // lane counter along the plan stays within the limit on straights
        let mut l = 0u32;
        let mut prev = (1usize, a.lane);
        for w in &plan.ego {
            let d = prev.1.abs_diff(w.lane) as u32;
            let (k0, k1) = (track.kind_of(track.index_of(prev.0)), track.kind_of(track.index_of(w.checkpoint)));
            l = if k0 == k1 { l + d } else { d };
            if k1 == crate::track::SegmentKind::Straight {
                assert!(l <= rules.lane_change_limit);
            }
            prev = (w.checkpoint, w.lane);
            let anchor = track.anchor_at(w.checkpoint, w.lane);
            assert_eq!(track.lane_of(&anchor.position).unwrap(), w.lane);
        }
        // no same-lane arrival within the threshold of the predicted opponent
        if plan.relaxation == Relaxation::None {
            for w in &plan.ego {
                for o in plan.opponent.iter().filter(|o| o.checkpoint == w.checkpoint && o.lane == w.lane) {
                    assert!((o.time - w.time).abs() >= rules.collision_time_threshold - 0.011);
                }
            }
        }
    }
}
