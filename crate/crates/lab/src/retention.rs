use rehearsal_core::{Error, Result};

/// `R[i][j]`: score on task `j` after finishing phase `i`, for every `j <= i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetentionMatrix {
    rows: Vec<Vec<f64>>,
}

impl RetentionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends phase `i`'s scores; the row must cover tasks `0..=i`.
    pub fn push_phase(&mut self, row: Vec<f64>) -> Result<()> {
        let expected = self.rows.len() + 1;
        if row.len() != expected {
            return Err(Error::Consistency(format!(
                "retention row for phase {} has {} entries, expected {expected}",
                self.rows.len(),
                row.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn phases(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, phase: usize, task: usize) -> Option<f64> {
        self.rows.get(phase)?.get(task).copied()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Mean over earlier tasks of `R[j][j] - R[T][j]`, positive when
    /// performance was lost. Zero with fewer than two phases.
    pub fn average_forgetting(&self) -> f64 {
        let Some(last) = self.rows.last() else {
            return 0.0;
        };
        let earlier = self.rows.len() - 1;
        if earlier == 0 {
            return 0.0;
        }
        (0..earlier).map(|j| self.rows[j][j] - last[j]).sum::<f64>() / earlier as f64
    }
}
