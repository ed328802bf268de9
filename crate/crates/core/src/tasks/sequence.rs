use crate::error::{Error, Result};
use crate::tasks::gridworld::{GridConfig, GridWorld};

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub goal: (usize, usize),
    pub permutation_seed: Option<u64>,
    /// Environment steps spent training on this task.
    pub steps: usize,
}

/// Ordered gridworld tasks sharing one grid geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSequence {
    pub base: GridConfig,
    pub tasks: Vec<TaskSpec>,
}

impl TaskSequence {
    pub fn new(base: GridConfig, tasks: Vec<TaskSpec>) -> Result<Self> {
        for (i, a) in tasks.iter().enumerate() {
            for b in &tasks[i + 1..] {
                if a.goal == b.goal && a.permutation_seed == b.permutation_seed {
                    return Err(Error::Domain(format!(
                        "tasks with goal {:?} and permutation {:?} are indistinguishable",
                        a.goal, a.permutation_seed
                    )));
                }
            }
        }
        let seq = Self { base, tasks };
        for i in 0..seq.len() {
            seq.env(i)?;
        }
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Truncated copy holding the first `n` tasks.
    pub fn prefix(&self, n: usize) -> TaskSequence {
        TaskSequence {
            base: self.base.clone(),
            tasks: self.tasks[..n.min(self.tasks.len())].to_vec(),
        }
    }

    pub fn env(&self, i: usize) -> Result<GridWorld> {
        let t = self
            .tasks
            .get(i)
            .ok_or_else(|| Error::Domain(format!("task {i} out of range")))?;
        GridWorld::new(GridConfig {
            goal: t.goal,
            permutation_seed: t.permutation_seed,
            ..self.base.clone()
        })
    }
}
