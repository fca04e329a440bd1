use crate::action::ActionSet;
use crate::env::Env;

/// Anything that picks a joint action from the current environment state.
pub trait Policy {
    /// Called at the start of every episode.
    fn reset(&mut self) {}

    fn act(&mut self, env: &Env) -> ActionSet;
}

/// Orders nothing, ships nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdlePolicy;

impl Policy for IdlePolicy {
    fn act(&mut self, env: &Env) -> ActionSet {
        ActionSet::zeros(env.config())
    }
}
