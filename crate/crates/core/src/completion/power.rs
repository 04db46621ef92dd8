/// Consecutive non-increasing residuals after which `p` is lowered.
pub const DECREASE_STREAK: usize = 10;

/// Adaptive power parameter: `p += 1` whenever the residual rises, and
/// `p -= 1` (not below `p_min`) after [`DECREASE_STREAK`] consecutive
/// observations without a rise. The first observation has nothing to rise
/// from and counts toward the streak.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerController {
    pub p: usize,
    pub p_min: usize,
    pub streak: usize,
    pub last: Option<f64>,
}

impl PowerController {
    pub fn new(p0: usize, p_min: usize) -> Self {
        PowerController {
            p: p0.max(p_min),
            p_min,
            streak: 0,
            last: None,
        }
    }

    pub fn observe(&mut self, err: f64) -> usize {
        match self.last {
            Some(prev) if err > prev => {
                self.p += 1;
                self.streak = 0;
            }
            _ => {
                self.streak += 1;
                if self.streak == DECREASE_STREAK {
                    self.p = self.p.saturating_sub(1).max(self.p_min);
                    self.streak = 0;
                }
            }
        }
        self.last = Some(err);
        self.p
    }
}

/// Feeds one residual to the controller and returns the new `p`.
pub fn adapt_power(ctrl: &mut PowerController, new_err: f64) -> usize {
    ctrl.observe(new_err)
}
