//! Exact tabular solutions for gridworlds, used as ground truth for agents.

use crate::tasks::gridworld::{Action, GridWorld};

/// `q[cell][action]`; the goal row is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub q: Vec<[f64; 4]>,
}

impl QTable {
    pub fn value(&self, cell: usize) -> f64 {
        self.q[cell].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action, ties broken toward the lowest index.
    pub fn greedy(&self, cell: usize) -> Action {
        let row = &self.q[cell];
        let mut best = 0;
        for a in 1..4 {
            if row[a] > row[best] {
                best = a;
            }
        }
        Action::from_index(best).expect("4 actions")
    }
}

/// Repeated Bellman optimality backups until the largest change is below `tol`.
pub fn value_iteration(env: &GridWorld, gamma: f64, tol: f64) -> QTable {
    let n = env.cell_count();
    let goal = env.goal_cell();
    let mut v = vec![0.0; n];
    let mut q = vec![[0.0; 4]; n];
    loop {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if s == goal {
                continue;
            }
            for a in Action::ALL {
                let next = env.next_cell(s, a);
                let future = if next == goal { 0.0 } else { v[next] };
                q[s][a.index()] = env.reward_into(next) + gamma * future;
            }
            let best = q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < tol {
            break;
        }
    }
    QTable { q }
}

/// Undiscounted return of the greedy policy from the start cell, capped by
/// the episode step budget.
pub fn greedy_return(env: &GridWorld, table: &QTable) -> f64 {
    let mut env = env.clone();
    env.reset();
    let mut ret = 0.0;
    while !env.is_done() {
        let a = table.greedy(env.position());
        ret += env.step(a).expect("episode running").reward;
    }
    ret
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::gridworld::GridConfig;

    fn grid(goal: (usize, usize)) -> GridWorld {
        GridWorld::new(GridConfig {
            goal,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn goal_adjacent_value_is_one_step_cost() {
        let env = grid((4, 4));
        let q = value_iteration(&env, 1.0, 1e-9);
        let adjacent = env.cell((4, 3));
        assert_eq!(q.q[adjacent][Action::Right.index()], -1.0);
        assert_eq!(q.value(adjacent), -1.0);
    }

    #[test]
    fn myopic_q_is_immediate_reward() {
        let env = grid((2, 3));
        let q = value_iteration(&env, 0.0, 1e-12);
        for s in 0..env.cell_count() {
            if s == env.goal_cell() {
                continue;
            }
            for a in Action::ALL {
                assert_eq!(q.q[s][a.index()], env.reward_into(env.next_cell(s, a)));
            }
        }
    }

    #[test]
    fn optimal_return_is_manhattan_distance() {
        let env = grid((4, 4));
        let q = value_iteration(&env, 1.0, 1e-9);
        assert_eq!(greedy_return(&env, &q), -8.0);
    }
}
