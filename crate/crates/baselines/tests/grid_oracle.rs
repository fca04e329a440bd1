use echelon_baselines::tune::default_options;
use echelon_baselines::{
    evaluate_base_stock, grid_search_base_stock, mean_return, optimize_base_stock, play_many, RandomPolicy,
};
use echelon_core::ChainConfig;

#[test]
fn powell_matches_exhaustive_grid_on_linear_chain() {
    let cfg = ChainConfig::divergent(1, 1);
    let seeds: Vec<u64> = (0..50).map(|i| 1000 + i).collect();
    let powell = optimize_base_stock(&cfg, &seeds, &default_options(&cfg)).unwrap();
    let values: Vec<f64> = (0..=100).map(f64::from).collect();
    let grid = grid_search_base_stock(&cfg, &seeds, &values);
    assert!((grid.mean_return - powell.mean_return).abs() <= 0.02 * grid.mean_return.abs());

    let held_out: Vec<u64> = (0..50).map(|i| 9000 + i).collect();
    let bsp = evaluate_base_stock(&cfg, &powell.params, &held_out);
    let random = mean_return(&play_many(&cfg, &held_out, |i| RandomPolicy::new(i as u64)));
    assert!(bsp >= random);
}
