//! Per-variant agent wiring: which networks exist, what each one observes,
//! which action entries its heads fill and which reward it learns from.

use rand::Rng;

use echelon_core::obs::{product_slice, store_observation_len, warehouse_observation_len};
use echelon_core::{ActionSet, ChainConfig, ObsLayout, ObservationSet, RewardMode, Variant};

use crate::net::{ActMode, Decision, PolicyNet};

/// What a slot controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Supplier order heads, then one allocation head per (store, product).
    /// `Some(p)` restricts the slot to product `p`.
    Warehouse { product: Option<usize> },
    /// One request head per product, or just product `p`.
    Store { store: usize, product: Option<usize> },
    /// Every order in the chain; the warehouse ships what is requested.
    Joint,
}

/// One decision per period: a network applied to one input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub net: usize,
    pub role: Role,
    /// Vertex whose local reward the slot learns from; `None` for the
    /// shared reward.
    pub reward_vertex: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("variant {0} has no learned policy")]
    NotLearned(Variant),
    #[error("network {index}: expected input {want_input} / {want_heads} heads / {want_levels} levels, found {got_input} / {got_heads} / {got_levels}")]
    Shape {
        index: usize,
        want_input: usize,
        want_heads: usize,
        want_levels: usize,
        got_input: usize,
        got_heads: usize,
        got_levels: usize,
    },
    #[error("expected {want} networks, found {got}")]
    NetCount { want: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct NetShape {
    input: usize,
    heads: usize,
}

#[derive(Debug, Clone)]
pub struct AgentSystem {
    variant: Variant,
    num_stores: usize,
    num_products: usize,
    batch_size: i64,
    layout: ObsLayout,
    nets: Vec<PolicyNet>,
    slots: Vec<Slot>,
}

fn plan(variant: Variant, cfg: &ChainConfig) -> Result<(Vec<NetShape>, Vec<Slot>), AgentError> {
    if !variant.is_learned() {
        return Err(AgentError::NotLearned(variant));
    }
    let n = cfg.num_stores;
    let k = cfg.num_products;
    let layout = variant.obs_layout();
    let wh_len = warehouse_observation_len(cfg, layout.warehouse);
    let store_len = |v| store_observation_len(cfg, v, layout.oracle_demand);
    let local = variant.reward_mode() == RewardMode::Local;
    let mut shapes = Vec::new();
    let mut slots = Vec::new();
    match variant {
        Variant::Sarl => {
            let input = wh_len + (0..n).map(store_len).sum::<usize>();
            shapes.push(NetShape { input, heads: k + n * k });
            slots.push(Slot { net: 0, role: Role::Joint, reward_vertex: None });
        }
        Variant::ShPol => {
            shapes.push(NetShape { input: wh_len / k, heads: 1 + n });
            for v in 0..n {
                shapes.push(NetShape { input: store_len(v) / k, heads: 1 });
            }
            for p in 0..k {
                slots.push(Slot { net: 0, role: Role::Warehouse { product: Some(p) }, reward_vertex: None });
                for v in 0..n {
                    slots.push(Slot {
                        net: v + 1,
                        role: Role::Store { store: v, product: Some(p) },
                        reward_vertex: None,
                    });
                }
            }
        }
        _ => {
            shapes.push(NetShape { input: wh_len, heads: k + n * k });
            slots.push(Slot {
                net: 0,
                role: Role::Warehouse { product: None },
                reward_vertex: local.then_some(0),
            });
            for v in 0..n {
                shapes.push(NetShape { input: store_len(v), heads: k });
                slots.push(Slot {
                    net: v + 1,
                    role: Role::Store { store: v, product: None },
                    reward_vertex: local.then_some(v + 1),
                });
            }
        }
    }
    Ok((shapes, slots))
}

impl AgentSystem {
    /// Freshly initialized networks for `variant`.
    pub fn new<R: Rng + ?Sized>(
        variant: Variant,
        cfg: &ChainConfig,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        let (shapes, slots) = plan(variant, cfg)?;
        let levels = cfg.action_levels + 1;
        let nets = shapes
            .iter()
            .map(|s| PolicyNet::new(s.input, hidden, s.heads, levels, rng))
            .collect();
        Ok(Self::assemble(variant, cfg, nets, slots))
    }

    /// Wraps existing networks after checking they fit `variant` on `cfg`.
    pub fn from_nets(variant: Variant, cfg: &ChainConfig, nets: Vec<PolicyNet>) -> Result<Self, AgentError> {
        let (shapes, slots) = plan(variant, cfg)?;
        if shapes.len() != nets.len() {
            return Err(AgentError::NetCount { want: shapes.len(), got: nets.len() });
        }
        let levels = cfg.action_levels + 1;
        for (index, (s, net)) in shapes.iter().zip(&nets).enumerate() {
            if s.input != net.input_len() || s.heads != net.num_heads() || levels != net.levels() {
                return Err(AgentError::Shape {
                    index,
                    want_input: s.input,
                    want_heads: s.heads,
                    want_levels: levels,
                    got_input: net.input_len(),
                    got_heads: net.num_heads(),
                    got_levels: net.levels(),
                });
            }
        }
        Ok(Self::assemble(variant, cfg, nets, slots))
    }

    fn assemble(variant: Variant, cfg: &ChainConfig, nets: Vec<PolicyNet>, slots: Vec<Slot>) -> Self {
        Self {
            variant,
            num_stores: cfg.num_stores,
            num_products: cfg.num_products,
            batch_size: cfg.batch_size,
            layout: variant.obs_layout(),
            nets,
            slots,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn layout(&self) -> ObsLayout {
        self.layout
    }

    pub fn nets(&self) -> &[PolicyNet] {
        &self.nets
    }

    pub fn nets_mut(&mut self) -> &mut [PolicyNet] {
        &mut self.nets
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Network input for `slot`, cut from observations built with
    /// [`Self::layout`].
    pub fn slot_input(&self, slot: &Slot, obs: &ObservationSet) -> Vec<f64> {
        let k = self.num_products;
        match slot.role {
            Role::Warehouse { product: None } => obs.warehouse.clone(),
            Role::Warehouse { product: Some(p) } => product_slice(&obs.warehouse, k, p),
            Role::Store { store, product: None } => obs.stores[store].clone(),
            Role::Store { store, product: Some(p) } => product_slice(&obs.stores[store], k, p),
            Role::Joint => {
                let mut x = obs.warehouse.clone();
                for s in &obs.stores {
                    x.extend_from_slice(s);
                }
                x
            }
        }
    }

    /// Runs every slot and assembles the joint action.
    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &ObservationSet,
        mode: ActMode,
        rng: &mut R,
    ) -> (ActionSet, Vec<(Vec<f64>, Decision)>) {
        let mut decisions = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            let input = self.slot_input(slot, obs);
            let d = self.nets[slot.net]
                .act(&input, mode, rng)
                .expect("slot inputs match network shapes by construction");
            decisions.push((input, d));
        }
        let actions = self.assemble_action(decisions.iter().map(|(_, d)| d.levels.as_slice()));
        (actions, decisions)
    }

    /// Maps per-slot head levels to units.
    pub fn assemble_action<'a>(&self, levels: impl Iterator<Item = &'a [usize]>) -> ActionSet {
        let (n, k, b) = (self.num_stores, self.num_products, self.batch_size);
        let mut a = ActionSet {
            store_requests: vec![0; n * k],
            warehouse_request: vec![0; k],
            warehouse_allocations: vec![0; n * k],
        };
        let units = |l: usize| l as i64 * b;
        for (slot, lv) in self.slots.iter().zip(levels) {
            match slot.role {
                Role::Warehouse { product: None } => {
                    for p in 0..k {
                        a.warehouse_request[p] = units(lv[p]);
                    }
                    for i in 0..n * k {
                        a.warehouse_allocations[i] = units(lv[k + i]);
                    }
                }
                Role::Warehouse { product: Some(p) } => {
                    a.warehouse_request[p] = units(lv[0]);
                    for v in 0..n {
                        a.warehouse_allocations[v * k + p] = units(lv[1 + v]);
                    }
                }
                Role::Store { store, product: None } => {
                    for p in 0..k {
                        a.store_requests[store * k + p] = units(lv[p]);
                    }
                }
                Role::Store { store, product: Some(p) } => {
                    a.store_requests[store * k + p] = units(lv[0]);
                }
                Role::Joint => {
                    for p in 0..k {
                        a.warehouse_request[p] = units(lv[p]);
                    }
                    for i in 0..n * k {
                        a.store_requests[i] = units(lv[k + i]);
                    }
                    a.warehouse_allocations = a.store_requests.clone();
                }
            }
        }
        a
    }

    pub fn slot_reward(&self, slot: &Slot, shared: f64, locals: &[f64]) -> f64 {
        match slot.reward_vertex {
            Some(w) => locals[w],
            None => shared,
        }
    }
}
