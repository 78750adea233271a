use std::collections::VecDeque;

pub const DEFAULT_FILTER_WINDOW: usize = 88;

/// Causal running median over the last `window` raw scores.
///
/// Before the buffer fills, the median is taken over whatever history is
/// available. Even counts average the two middle values.
#[derive(Debug, Clone)]
pub struct MedianFilterState {
    window: usize,
    recent: VecDeque<f64>,
    sorted: Vec<f64>,
}

impl MedianFilterState {
    pub fn new(window: usize) -> Self {
        let window = window.max(1);
        Self { window, recent: VecDeque::with_capacity(window), sorted: Vec::with_capacity(window) }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.recent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }

    pub fn reset(&mut self) {
        self.recent.clear();
        self.sorted.clear();
    }

    /// Adds a raw score and returns the filtered value.
    pub fn push(&mut self, raw: f64) -> f64 {
        if self.recent.len() == self.window {
            let old = self.recent.pop_front().expect("full buffer");
            let pos = self.sorted.partition_point(|v| v.total_cmp(&old).is_lt());
            self.sorted.remove(pos);
        }
        self.recent.push_back(raw);
        let pos = self.sorted.partition_point(|v| v.total_cmp(&raw).is_le());
        self.sorted.insert(pos, raw);
        self.median()
    }

    pub fn median(&self) -> f64 {
        let n = self.sorted.len();
        if n == 0 {
            return f64::NAN;
        }
        if n % 2 == 1 {
            self.sorted[n / 2]
        } else {
            (self.sorted[n / 2 - 1] + self.sorted[n / 2]) / 2.0
        }
    }
}

/// Convenience wrapper matching the streaming call shape.
pub fn median_filter_push(state: &mut MedianFilterState, raw: f64) -> f64 {
    state.push(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stream() {
        let mut f = MedianFilterState::new(DEFAULT_FILTER_WINDOW);
        for _ in 0..300 {
            assert_eq!(f.push(2.5), 2.5);
        }
    }

    #[test]
    fn warmup_uses_available_history() {
        let mut f = MedianFilterState::new(88);
        assert_eq!(f.push(4.0), 4.0);
        assert_eq!(f.push(2.0), 3.0);
        assert_eq!(f.push(10.0), 4.0);
    }

    #[test]
    fn step_crosses_half_after_44() {
        let mut f = MedianFilterState::new(88);
        let t = 200;
        let mut first_above = None;
        for i in 0..400 {
            let y = f.push(if i >= t { 1.0 } else { 0.0 });
            if i == t + 43 {
                assert_eq!(y, 0.5);
            }
            if y > 0.5 && first_above.is_none() {
                first_above = Some(i);
            }
        }
        assert_eq!(first_above, Some(t + 44));
    }
}
