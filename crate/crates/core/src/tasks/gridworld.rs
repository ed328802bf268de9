//! Deterministic gridworld with a per-task observation permutation.
//!
//! Cells are indexed `row * width + col`. The observation for cell `s` is the
//! one-hot vector with its 1 at `perm[s]`. Every move costs `step_reward`;
//! the move that enters the goal additionally earns `goal_reward` and ends
//! the episode.

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }
}

/// Bijection over cell indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let v: Vec<usize> = (0..n).collect();
        Self {
            forward: v.clone(),
            inverse: v,
        }
    }

    pub fn seeded(n: usize, seed: u64) -> Self {
        let mut forward: Vec<usize> = (0..n).collect();
        SeededRng::new(seed).shuffle(&mut forward);
        Self::from_forward(forward).expect("shuffle is a bijection")
    }

    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (i, &f) in forward.iter().enumerate() {
            if f >= n || inverse[f] != usize::MAX {
                return Err(Error::Domain(format!("{forward:?} is not a permutation")));
            }
            inverse[f] = i;
        }
        Ok(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.forward[i]
    }

    pub fn invert(&self, i: usize) -> usize {
        self.inverse[i]
    }

    /// Moves each entry `v[i]` to position `perm[i]`.
    pub fn permute_vector(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (i, &x) in v.iter().enumerate() {
            out[self.forward[i]] = x;
        }
        out
    }

    pub fn unpermute_vector(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (i, &x) in v.iter().enumerate() {
            out[self.inverse[i]] = x;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    pub step_reward: f64,
    pub goal_reward: f64,
    pub max_steps: usize,
    /// `None` keeps the identity observation map.
    pub permutation_seed: Option<u64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            start: (0, 0),
            goal: (4, 4),
            step_reward: -1.0,
            goal_reward: 0.0,
            max_steps: 50,
            permutation_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    cfg: GridConfig,
    perm: Permutation,
    pos: usize,
    steps: usize,
    done: bool,
}

impl GridWorld {
    pub fn new(cfg: GridConfig) -> Result<Self> {
        if cfg.width == 0 || cfg.height == 0 {
            return Err(Error::Domain("grid dimensions must be positive".into()));
        }
        let inside = |(r, c): (usize, usize)| r < cfg.height && c < cfg.width;
        if !inside(cfg.start) || !inside(cfg.goal) {
            return Err(Error::Domain(format!(
                "start {:?} or goal {:?} outside a {}x{} grid",
                cfg.start, cfg.goal, cfg.height, cfg.width
            )));
        }
        if cfg.start == cfg.goal {
            return Err(Error::Domain("start and goal must differ".into()));
        }
        if cfg.max_steps == 0 {
            return Err(Error::Domain("max_steps must be positive".into()));
        }
        let n = cfg.width * cfg.height;
        let perm = match cfg.permutation_seed {
            Some(seed) => Permutation::seeded(n, seed),
            None => Permutation::identity(n),
        };
        let pos = cfg.start.0 * cfg.width + cfg.start.1;
        Ok(Self {
            cfg,
            perm,
            pos,
            steps: 0,
            done: false,
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.cfg
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn cell_count(&self) -> usize {
        self.cfg.width * self.cfg.height
    }

    pub fn observation_dim(&self) -> usize {
        self.cell_count()
    }

    pub fn cell(&self, (r, c): (usize, usize)) -> usize {
        r * self.cfg.width + c
    }

    pub fn start_cell(&self) -> usize {
        self.cell(self.cfg.start)
    }

    pub fn goal_cell(&self) -> usize {
        self.cell(self.cfg.goal)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn observe(&self, cell: usize) -> Vec<f64> {
        let mut obs = vec![0.0; self.cell_count()];
        obs[self.perm.apply(cell)] = 1.0;
        obs
    }

    /// Cell reached from `cell` by `action`; walls leave it in place.
    pub fn next_cell(&self, cell: usize, action: Action) -> usize {
        let (w, h) = (self.cfg.width, self.cfg.height);
        let (r, c) = (cell / w, cell % w);
        match action {
            Action::Up if r > 0 => cell - w,
            Action::Down if r + 1 < h => cell + w,
            Action::Left if c > 0 => cell - 1,
            Action::Right if c + 1 < w => cell + 1,
            _ => cell,
        }
    }

    /// Reward for the transition into `next`.
    pub fn reward_into(&self, next: usize) -> f64 {
        if next == self.goal_cell() {
            self.cfg.step_reward + self.cfg.goal_reward
        } else {
            self.cfg.step_reward
        }
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.pos = self.start_cell();
        self.steps = 0;
        self.done = false;
        self.observe(self.pos)
    }

    pub fn step(&mut self, action: Action) -> Result<Step> {
        if self.done {
            return Err(Error::State("step called after the episode ended".into()));
        }
        let next = self.next_cell(self.pos, action);
        let reward = self.reward_into(next);
        self.pos = next;
        self.steps += 1;
        self.done = next == self.goal_cell() || self.steps >= self.cfg.max_steps;
        Ok(Step {
            observation: self.observe(next),
            reward,
            done: self.done,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> GridWorld {
        GridWorld::new(GridConfig {
            width: 3,
            height: 3,
            goal: (2, 2),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn reset_is_one_hot_at_start() {
        let mut g = grid3();
        let obs = g.reset();
        assert_eq!(obs[0], 1.0);
        assert_eq!(obs.iter().sum::<f64>(), 1.0);
        assert_eq!(g.reset(), obs);
    }

    #[test]
    fn permuted_observation_is_one_hot() {
        let g = GridWorld::new(GridConfig {
            permutation_seed: Some(9),
            ..Default::default()
        })
        .unwrap();
        for cell in 0..25 {
            let o = g.observe(cell);
            assert_eq!(o.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(o.iter().sum::<f64>(), 1.0);
            assert_eq!(g.permutation().unpermute_vector(&o)[cell], 1.0);
        }
    }

    #[test]
    fn walls_block() {
        let mut g = grid3();
        let before = g.reset();
        let s = g.step(Action::Up).unwrap();
        assert_eq!(s.observation, before);
        let s = g.step(Action::Left).unwrap();
        assert_eq!(s.observation, before);
    }

    #[test]
    fn corner_to_corner_costs_four() {
        let mut g = grid3();
        g.reset();
        let mut ret = 0.0;
        let mut last = None;
        for a in [Action::Down, Action::Down, Action::Right, Action::Right] {
            let s = g.step(a).unwrap();
            ret += s.reward;
            last = Some(s);
        }
        let last = last.unwrap();
        assert!(last.done);
        assert_eq!(ret, -4.0);
        assert!(matches!(g.step(Action::Up), Err(Error::State(_))));
    }

    #[test]
    fn goal_transition_reward_under_defaults() {
        // Entering the goal pays the step cost plus the (zero) goal bonus.
        let mut g = GridWorld::new(GridConfig {
            width: 2,
            height: 1,
            goal: (0, 1),
            ..Default::default()
        })
        .unwrap();
        g.reset();
        let s = g.step(Action::Right).unwrap();
        assert!(s.done);
        assert_eq!(s.reward, -1.0);
    }

    #[test]
    fn step_budget_ends_episode() {
        let mut g = GridWorld::new(GridConfig {
            max_steps: 3,
            ..Default::default()
        })
        .unwrap();
        g.reset();
        assert!(!g.step(Action::Up).unwrap().done);
        assert!(!g.step(Action::Up).unwrap().done);
        assert!(g.step(Action::Up).unwrap().done);
    }

    #[test]
    fn start_equal_goal_rejected() {
        let cfg = GridConfig {
            goal: (0, 0),
            ..Default::default()
        };
        assert!(GridWorld::new(cfg).is_err());
    }

    #[test]
    fn permutation_inverse_roundtrip() {
        let p = Permutation::seeded(25, 3);
        for i in 0..25 {
            assert_eq!(p.invert(p.apply(i)), i);
        }
        assert!(Permutation::from_forward(vec![0, 0, 1]).is_err());
    }
}
