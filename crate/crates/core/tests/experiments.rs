use rsma_core::channel::{drop_rng, generate_pair_with};
use rsma_core::montecarlo::{
    default_pair_cases, pair_case_drop, run_binned_gains, run_pair_cases, run_percentile_gains, ExperimentConfig,
    PercentileMetric,
};
use rsma_core::{CommonPrecoder, PairGeometry, PrivatePrecoder};

#[test]
fn small_rho_favors_weak_user() {
    let cfg = ExperimentConfig::default();
    let grid = run_binned_gains(&cfg, &[0.0, 0.1, 0.2], &[-10.0, -5.0, 0.0], 2000, 11).unwrap();
    let populated: Vec<_> = grid.cells.iter().filter(|c| c.n >= 10).collect();
    assert!(!populated.is_empty());
    for c in populated {
        assert!(c.g_w > 0.0, "{c:?}");
    }
    assert_eq!(grid.cells.iter().map(|c| c.n).sum::<usize>(), 2000);
}

#[test]
fn every_drop_lands_in_one_cell() {
    let grid = run_binned_gains(
        &ExperimentConfig::default(),
        &[0.0, 0.5, 1.0],
        &[-30.0, -15.0, 0.0],
        500,
        5,
    )
    .unwrap();
    assert_eq!(grid.cells.iter().map(|c| c.n).sum::<usize>(), 500);
}

#[test]
fn binned_is_worker_independent() {
    let mut cfg = ExperimentConfig::default();
    let edges = ([0.0, 0.3, 1.0], [-20.0, -10.0, 0.0]);
    cfg.workers = 1;
    let a = run_binned_gains(&cfg, &edges.0, &edges.1, 300, 9).unwrap();
    cfg.workers = 3;
    let b = run_binned_gains(&cfg, &edges.0, &edges.1, 300, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn orthogonal_pair_case_matches_zf_sdma() {
    let cfg = ExperimentConfig {
        private: PrivatePrecoder::Zf,
        ..ExperimentConfig::default()
    };
    let case = [PairGeometry {
        rho: 1.0,
        alpha_db: 0.0,
    }];
    let r = &run_pair_cases(&case, &cfg, 200, 3).unwrap()[0];
    for u in 0..2 {
        assert!((r.rsma[u] - r.sdma[u]).abs() <= 0.02 * r.sdma[u], "{r:?}");
    }
}

#[test]
fn rsma_min_rate_covers_both_baselines() {
    let cfg = ExperimentConfig::default();
    for (case, geometry) in default_pair_cases().into_iter().enumerate() {
        for d in 0..30 {
            let mut rng = drop_rng(17, ((case as u64) << 32) | d);
            let ch = generate_pair_with(&mut rng, geometry, 2, 20.0).unwrap();
            let [rsma, sdma, noma] = pair_case_drop(&ch, &cfg).unwrap();
            let floor = sdma.min_user_rate().max(noma.min_user_rate());
            assert!(rsma.min_user_rate() >= floor - 1e-9, "case {case} drop {d}");
        }
    }
    for r in run_pair_cases(&default_pair_cases(), &cfg, 30, 17).unwrap() {
        let min = |x: [f64; 2]| x[0].min(x[1]);
        assert!(min(r.rsma) >= min(r.sdma).max(min(r.noma)) - 1e-9, "{r:?}");
    }
}

#[test]
fn pair_cases_are_numbered_from_one() {
    let r = run_pair_cases(&default_pair_cases(), &ExperimentConfig::default(), 2, 1).unwrap();
    assert_eq!(
        r.iter().map(|x| x.case_id).collect::<Vec<_>>(),
        (1..=9).collect::<Vec<_>>()
    );
}

#[test]
fn four_user_zf_reaches_large_weakest_gains() {
    let cfg = ExperimentConfig {
        n_tx: 4,
        private: PrivatePrecoder::Zf,
        common: CommonPrecoder::SingularVector,
        ..ExperimentConfig::default()
    };
    let rows = run_percentile_gains(&cfg, 4, 400, 2, Some(0.1)).unwrap();
    let weakest_5th = rows
        .iter()
        .find(|r| r.percentile == 5 && r.metric == PercentileMetric::WeakestUser)
        .unwrap();
    assert!(weakest_5th.gt100, "{weakest_5th:?}");
    assert!(rows.iter().all(|r| r.rsma >= 0.0 && r.sdma >= 0.0));
}

#[test]
fn percentile_rows_cover_both_metrics() {
    let rows = run_percentile_gains(&ExperimentConfig::default(), 2, 100, 1, None).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| r.percentile == 5).count(), 2);
}
