use febaa::augmentation::{self, candidate_features, Position};
use febaa::evaluation::EvalConfig;
use febaa::gcl::TrainConfig;
use febaa::graph::AttributedGraph;
use febaa::ranking::FeatureRanking;
use febaa::sweep::{
    ablation_csv, ablation_ofd, ofd_config, pos_win_analysis, run_seed, run_sweep,
    train_and_evaluate, AdaptiveView, SweepGrid, SweepRow, SweepTable,
};
use febaa::synthetic::planted_signal;

fn small_cfg() -> TrainConfig {
    TrainConfig {
        epochs: 10,
        hidden_size: 8,
        output_size: 4,
        seed: 5,
        ..TrainConfig::default()
    }
}

fn small_eval() -> EvalConfig {
    EvalConfig {
        num_splits: 3,
        iters: 100,
        ..EvalConfig::default()
    }
}

fn fixture() -> (AttributedGraph, FeatureRanking) {
    let g = planted_signal(100, 6, 3).unwrap();
    let ranking = FeatureRanking::from_scores(&[0.1, 0.5, 0.3, 0.9, 0.2, 0.7], 1, 1);
    (g, ranking)
}

fn grid(ratios: Vec<f64>, probabilities: Vec<f64>, positions: Vec<Position>) -> SweepGrid {
    SweepGrid {
        ratios,
        probabilities,
        positions,
        runs_per_cell: 1,
        base: small_cfg(),
        eval: small_eval(),
        adaptive_view: AdaptiveView::View2,
        seed: 8,
    }
}

#[test]
fn single_cell_equals_direct_run() {
    let (g, r) = fixture();
    let grid = grid(vec![0.5], vec![0.8], vec![Position::L]);
    let table = run_sweep(&g, &r, &grid).unwrap();
    assert_eq!(table.rows.len(), 1);
    let direct = train_and_evaluate(
        &g,
        Some(&r),
        &grid.cell_config(0.5, 0.8, Position::L),
        &grid.eval,
        run_seed(8, 0, 0),
    )
    .unwrap();
    assert_eq!(table.rows[0].scores, vec![direct]);
    assert_eq!(table.rows[0].mean_f1, direct);
}

#[test]
fn two_by_two_grid_has_eight_rows() {
    let (g, r) = fixture();
    let table = run_sweep(
        &g,
        &r,
        &grid(
            vec![0.2, 0.6],
            vec![1.0, 0.5],
            vec![Position::L, Position::M],
        ),
    )
    .unwrap();
    assert_eq!(table.rows.len(), 8);
    assert!(table
        .rows
        .iter()
        .all(|row| row.error.is_none() && row.runs() == 1));
    let csv = table.to_csv();
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.starts_with("ratio,probability,pos,mean_f1,std_f1,runs\n0.2,1,L,"));
    assert_eq!(table.plot_csv(Position::M).lines().count(), 5);
    let report = pos_win_analysis(&[("planted".into(), table)]);
    assert_eq!(report.total.pairs(), 4);
    assert!(report.unmatched.is_empty());
}

#[test]
fn full_probability_cell_masks_every_candidate_each_epoch() {
    let (g, r) = fixture();
    let cfg = grid(vec![0.2], vec![1.0], vec![Position::M]).cell_config(0.2, 1.0, Position::M);
    let view = &cfg.view2;
    let cf = candidate_features(
        6,
        view,
        Some(&r),
        &mut augmentation::selection_rng(1, 2, view),
    )
    .unwrap();
    assert_eq!(cf.indices(), &[3]);
    for epoch in 0..10 {
        let v = augmentation::apply_view(
            &g,
            &cf,
            view,
            &mut augmentation::epoch_rng(1, 2, view, epoch),
        )
        .unwrap();
        assert_eq!(v.masked_columns, vec![3]);
    }
}

#[test]
fn ofd_without_edge_drop_gives_identical_arms() {
    let (g, _) = fixture();
    let mut cfg = small_cfg();
    cfg.view1.edge_drop_probability = 0.0;
    cfg.view2.edge_drop_probability = 0.0;
    let a = ablation_ofd("planted", &g, None, &cfg, &small_eval(), 2).unwrap();
    assert_eq!(a.with_edge_drop, a.only_feature_drop);
}

#[test]
fn ofd_views_keep_every_edge() {
    let (g, _) = fixture();
    let ofd = ofd_config(&small_cfg());
    for (id, view) in [(1, &ofd.view1), (2, &ofd.view2)] {
        let cf = candidate_features(6, view, None, &mut augmentation::selection_rng(0, id, view))
            .unwrap();
        for epoch in 0..5 {
            let v = augmentation::apply_view(
                &g,
                &cf,
                view,
                &mut augmentation::epoch_rng(0, id, view, epoch),
            )
            .unwrap();
            assert_eq!(v.edges, g.edges());
            assert_eq!(v.dropped_edges, 0);
        }
    }
}

fn synthetic_table(l_wins: usize, m_wins: usize) -> SweepTable {
    let mut rows = Vec::new();
    for k in 0..l_wins + m_wins {
        let (ratio, probability) = ([0.2, 0.4, 0.6][k % 3], [1.0, 0.5][k / 3]);
        let l_better = k < l_wins;
        for (pos, score) in [(Position::L, 0.0), (Position::M, 1.0)] {
            let mean = if l_better { 1.0 - score } else { score };
            rows.push(SweepRow {
                ratio,
                probability,
                pos,
                mean_f1: mean,
                std_f1: 0.0,
                scores: vec![mean],
                error: None,
            });
        }
    }
    SweepTable { rows }
}

/// Per-dataset L/M counts of the published eight-benchmark position study.
/// The Cora row is taken as 5/1, matching its percentages and the totals.
#[test]
fn win_table_golden() {
    let counts = [
        ("WikiCS", 4, 2),
        ("Am.Comp", 3, 3),
        ("Am.Photo", 2, 4),
        ("Co.CS", 0, 6),
        ("Co.Phy", 1, 5),
        ("Cora", 5, 1),
        ("CiteSeer", 0, 6),
        ("Actor", 4, 2),
    ];
    let tables: Vec<_> = counts
        .iter()
        .map(|&(name, l, m)| (name.to_string(), synthetic_table(l, m)))
        .collect();
    let report = pos_win_analysis(&tables);
    let golden = "\
dataset,pos=l,pos=m
WikiCS,4 (66.67%),2 (33.33%)
Am.Comp,3 (50.00%),3 (50.00%)
Am.Photo,2 (33.33%),4 (66.67%)
Co.CS,0 (0.00%),6 (100.00%)
Co.Phy,1 (16.67%),5 (83.33%)
Cora,5 (83.33%),1 (16.67%)
CiteSeer,0 (0.00%),6 (100.00%)
Actor,4 (66.67%),2 (33.33%)
Total,19 (39.58%),29 (60.42%)
";
    assert_eq!(report.to_csv(), golden);
    assert_eq!(report.total.pairs(), 48);
}

#[test]
fn ablation_table_golden() {
    use febaa::sweep::{Ablation, ArmResult};
    let arm = |mean_f1, std_f1| ArmResult {
        mean_f1,
        std_f1,
        scores: vec![],
    };
    let rows = [
        Ablation {
            dataset: "WikiCS".into(),
            with_edge_drop: arm(80.59, 0.58),
            only_feature_drop: arm(80.40, 0.51),
        },
        Ablation {
            dataset: "Cora".into(),
            with_edge_drop: arm(87.0, 0.92),
            only_feature_drop: arm(86.86, 1.02),
        },
    ];
    assert_eq!(
        ablation_csv(&rows),
        "dataset,FebAA,FebAA(OFD)\nWikiCS,80.59±0.58,80.40±0.51\nCora,87.00±0.92,86.86±1.02\n"
    );
}
