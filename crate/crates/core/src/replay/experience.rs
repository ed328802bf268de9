/// Task tag carried by any experience handed to a learner.
pub const NO_TASK: i64 = -1;

/// One transition. The task tag is evaluation metadata: it is kept on stored
/// items for inspection but every sampling path replaces it with [`NO_TASK`].
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
    /// Teacher Q-values for replayed (generated) states; `None` for real transitions.
    pub teacher_q: Option<Vec<f64>>,
    eval_task_id: i64,
}

impl Experience {
    pub fn new(state: Vec<f64>, action: usize, reward: f64, next_state: Vec<f64>, done: bool, task: usize) -> Self {
        Self {
            state,
            action,
            reward,
            next_state,
            done,
            teacher_q: None,
            eval_task_id: task as i64,
        }
    }

    /// A generated state labelled by a teacher network.
    pub fn distilled(state: Vec<f64>, teacher_q: Vec<f64>, action: usize) -> Self {
        Self {
            next_state: state.clone(),
            state,
            action,
            reward: 0.0,
            done: false,
            teacher_q: Some(teacher_q),
            eval_task_id: NO_TASK,
        }
    }

    pub fn eval_task_id(&self) -> i64 {
        self.eval_task_id
    }

    pub fn state_dim(&self) -> usize {
        self.state.len()
    }

    /// Scalars stored per item: both states, action, reward and done flag.
    pub fn scalar_count(&self) -> usize {
        2 * self.state.len() + 3
    }

    pub(crate) fn untagged(&self) -> Self {
        Self {
            eval_task_id: NO_TASK,
            ..self.clone()
        }
    }

    pub(crate) fn with_task_id(mut self, id: i64) -> Self {
        self.eval_task_id = id;
        self
    }
}
