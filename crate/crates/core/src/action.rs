use crate::config::ChainConfig;
use crate::error::EnvError;

/// One synchronous joint action, in units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSet {
    /// `(N, K)` store replenishment requests.
    pub store_requests: Vec<i64>,
    /// `(K,)` warehouse order to the supplier.
    pub warehouse_request: Vec<i64>,
    /// `(N, K)` quantities the warehouse proposes to ship.
    pub warehouse_allocations: Vec<i64>,
}

impl ActionSet {
    pub fn zeros(cfg: &ChainConfig) -> Self {
        let nk = cfg.num_stores * cfg.num_products;
        Self {
            store_requests: vec![0; nk],
            warehouse_request: vec![0; cfg.num_products],
            warehouse_allocations: vec![0; nk],
        }
    }

    /// Builds an action from order levels; each level `a` becomes `a * b`.
    pub fn from_levels(
        store_levels: &[usize],
        warehouse_levels: &[usize],
        allocation_levels: &[usize],
        batch_size: i64,
    ) -> Self {
        let units = |xs: &[usize]| xs.iter().map(|&a| a as i64 * batch_size).collect();
        Self {
            store_requests: units(store_levels),
            warehouse_request: units(warehouse_levels),
            warehouse_allocations: units(allocation_levels),
        }
    }

    /// Warehouse ships whatever is requested; feasibility is left to the
    /// environment's repair step.
    pub fn pass_through(store_requests: Vec<i64>, warehouse_request: Vec<i64>) -> Self {
        Self {
            warehouse_allocations: store_requests.clone(),
            store_requests,
            warehouse_request,
        }
    }

    /// Every entry must be a multiple of the batch size inside `[0, n * b]`.
    pub fn validate(&self, cfg: &ChainConfig) -> Result<(), EnvError> {
        let nk = cfg.num_stores * cfg.num_products;
        let max = cfg.max_order();
        let b = cfg.batch_size;
        let grid = Grid::new(b, max);
        let check = |name: &str, xs: &[i64], len: usize| -> Result<(), EnvError> {
            if xs.len() != len {
                return Err(EnvError::action(
                    name,
                    format!("expected {len} entries, found {}", xs.len()),
                ));
            }
            if xs.iter().fold(true, |ok, &x| ok & grid.contains(x)) {
                return Ok(());
            }
            let (i, x) = xs
                .iter()
                .copied()
                .enumerate()
                .find(|&(_, x)| !grid.contains(x))
                .expect("some value is off the grid");
            Err(EnvError::action(
                format!("{name}[{i}]"),
                format!("{x} is not on the grid {{0, {b}, ..., {max}}}"),
            ))
        };
        check("store_requests", &self.store_requests, nk)?;
        check("warehouse_request", &self.warehouse_request, cfg.num_products)?;
        check("warehouse_allocations", &self.warehouse_allocations, nk)?;
        Ok(())
    }
}

/// Membership in `{0, b, 2b, ..., max}` without a division per value.
#[derive(Debug, Clone, Copy)]
struct Grid {
    max: i64,
    shift: u32,
    inverse: u64,
    limit: u64,
}

impl Grid {
    fn new(b: i64, max: i64) -> Self {
        debug_assert!(b > 0);
        let shift = b.trailing_zeros();
        let odd = (b as u64) >> shift;
        // Newton iteration for the inverse of `odd` modulo 2^64.
        let mut inverse = odd;
        for _ in 0..5 {
            inverse = inverse.wrapping_mul(2u64.wrapping_sub(odd.wrapping_mul(inverse)));
        }
        Self {
            max,
            shift,
            inverse,
            limit: u64::MAX / b as u64,
        }
    }

    fn contains(&self, x: i64) -> bool {
        let divisible = (x as u64).wrapping_mul(self.inverse).rotate_right(self.shift) <= self.limit;
        (x >= 0) & (x <= self.max) & divisible
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn grid_check_matches_remainder(x in -10i64..1 << 56, b in 1i64..1 << 20, max in 0i64..1 << 57) {
            let grid = Grid::new(b, max);
            prop_assert_eq!(grid.contains(x), x >= 0 && x <= max && x % b == 0);
            let y = x - x % b;
            prop_assert_eq!(grid.contains(y), x >= 0 && y <= max);
        }

        #[test]
        fn grid_check_at_extremes(b in 1i64..i64::MAX, m in 0i64..8) {
            let grid = Grid::new(b, i64::MAX);
            prop_assert!(grid.contains(0));
            prop_assert!(grid.contains(b));
            if let Some(y) = b.checked_mul(m) {
                prop_assert!(grid.contains(y));
                prop_assert_eq!(grid.contains(y + 1), b == 1 && y < i64::MAX);
            }
            prop_assert_eq!(grid.contains(i64::MAX), i64::MAX % b == 0);
            prop_assert!(!grid.contains(-b));
        }
    }

    #[test]
    fn levels_scale_by_batch() {
        let a = ActionSet::from_levels(&[0, 3], &[2], &[1, 1], 5);
        assert_eq!(a.store_requests, vec![0, 15]);
        assert_eq!(a.warehouse_request, vec![10]);
        assert_eq!(a.warehouse_allocations, vec![5, 5]);
    }

    #[test]
    fn off_grid_entries_are_rejected() {
        let mut cfg = ChainConfig::divergent(1, 1);
        cfg.batch_size = 5;
        let mut a = ActionSet::zeros(&cfg);
        a.validate(&cfg).unwrap();
        a.store_requests[0] = 7;
        assert!(matches!(a.validate(&cfg), Err(EnvError::InvalidAction { .. })));
        a.store_requests[0] = cfg.max_order() + 5;
        assert!(a.validate(&cfg).is_err());
    }
}
