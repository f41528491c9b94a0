use super::{
    action_delta, observe, AgentKind, AvatarController, AvatarFrequencyLaw, ControlContext,
    Decision, RlObservation,
};
use crate::error::{Error, Result};
use crate::rl::{select_action, InputMap, MlpParams};
use crate::rng::{seeded, SimRng};

/// DQN-driven avatar: observes ξ(k), picks Δω(k) ε-greedily from the
/// Q-network and saturates the resulting frequency.
#[derive(Debug, Clone)]
pub struct CognitiveArchitecture {
    params: MlpParams,
    map: InputMap,
    initial: AvatarFrequencyLaw,
    law: AvatarFrequencyLaw,
    epsilon: f64,
    seed: u64,
    rng: SimRng,
}

impl CognitiveArchitecture {
    /// Deployment controller (ε = 0).
    pub fn new(params: MlpParams, map: InputMap, law: AvatarFrequencyLaw) -> Result<Self> {
        Self::with_exploration(params, map, law, 0.0, 0)
    }

    pub fn with_exploration(
        params: MlpParams,
        map: InputMap,
        law: AvatarFrequencyLaw,
        epsilon: f64,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        map.validate()?;
        if params.input_size() != 3 || params.output_size() != super::NUM_ACTIONS {
            return Err(Error::InvalidState(format!(
                "checkpoint maps {} inputs to {} outputs, expected 3 to {}",
                params.input_size(),
                params.output_size(),
                super::NUM_ACTIONS
            )));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid("epsilon must lie in [0, 1]"));
        }
        Ok(CognitiveArchitecture {
            params,
            map,
            initial: law,
            law,
            epsilon,
            seed,
            rng: seeded(seed),
        })
    }

    pub fn params(&self) -> &MlpParams {
        &self.params
    }

    pub fn law(&self) -> &AvatarFrequencyLaw {
        &self.law
    }

    /// Δω chosen for an observation.
    pub fn ca_decide(&mut self, ob: &RlObservation) -> (usize, f64) {
        let q = self
            .params
            .forward_unchecked(&self.map.apply(&ob.to_array()));
        let idx = select_action(&q, self.epsilon, &mut self.rng);
        (idx, action_delta(idx))
    }

    /// Applies action `index` to the frequency law and returns the new ω_a.
    pub fn apply(&mut self, index: usize) -> f64 {
        self.law.apply(action_delta(index))
    }
}

impl AvatarController for CognitiveArchitecture {
    fn kind(&self) -> AgentKind {
        AgentKind::Ca
    }

    fn reset(&mut self) {
        self.law = self.initial;
        self.rng = seeded(self.seed);
    }

    fn current_frequency(&self) -> f64 {
        self.law.omega
    }

    fn decide(&mut self, ctx: &ControlContext<'_>) -> Decision {
        let ob = observe(
            ctx.phases,
            ctx.participant_ids,
            ctx.phases[ctx.avatar],
            self.law.omega,
        )
        .expect("simulation guarantees a nonempty participant set");
        let (idx, delta) = self.ca_decide(&ob);
        Decision {
            omega: self.law.apply(delta),
            action: Some(idx),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::DEFAULT_LAYERS;

    /// Network whose output is fixed by the last-layer biases.
    fn constant_policy(best: usize) -> MlpParams {
        let mut p = MlpParams::zeros(&DEFAULT_LAYERS);
        p.biases[2][best] = 1.0;
        p
    }

    fn ctx<'a>(phases: &'a [f64], vel: &'a [f64]) -> ControlContext<'a> {
        ControlContext {
            step: 0,
            dt: 0.01,
            phases,
            velocities: vel,
            participant_ids: &[0, 1],
            avatar: 2,
            neighbors: &[0, 1],
        }
    }

    #[test]
    fn saturates_at_upper_bound() {
        let law = AvatarFrequencyLaw::new(2.0, 6.0, Some(6.0)).unwrap();
        let mut ca =
            CognitiveArchitecture::new(constant_policy(10), InputMap::default(), law).unwrap();
        let d = ca.decide(&ctx(&[0.0, 0.1, 0.2], &[4.0; 3]));
        assert_eq!(d.action, Some(10));
        assert_eq!(d.omega, 6.0);
    }

    #[test]
    fn midpoint_action_holds_frequency() {
        let mut ca = CognitiveArchitecture::new(
            constant_policy(5),
            InputMap::default(),
            AvatarFrequencyLaw::default(),
        )
        .unwrap();
        for _ in 0..10 {
            assert_eq!(ca.decide(&ctx(&[0.0, 0.1, 0.2], &[4.0; 3])).omega, 4.0);
        }
    }

    #[test]
    fn greedy_is_pure() {
        let mut rng = seeded(1);
        let p = MlpParams::init(&DEFAULT_LAYERS, &mut rng);
        let mut ca =
            CognitiveArchitecture::new(p, InputMap::default(), AvatarFrequencyLaw::default())
                .unwrap();
        let ob = RlObservation {
            mean_relative_phase: 0.4,
            circular_variance: 0.1,
            omega_a: 4.2,
        };
        let first = ca.ca_decide(&ob);
        for _ in 0..5 {
            assert_eq!(ca.ca_decide(&ob), first);
        }
    }

    #[test]
    fn wrong_shape_is_invalid_state() {
        let p = MlpParams::zeros(&[3, 4, 5]);
        assert!(matches!(
            CognitiveArchitecture::new(p, InputMap::default(), AvatarFrequencyLaw::default()),
            Err(Error::InvalidState(_))
        ));
    }
}
