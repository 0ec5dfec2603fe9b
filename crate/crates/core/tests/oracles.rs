mod common;

use atlas::community::{louvain, modularity, Partition};
use atlas::features::{one_hot, project, DesignSource, FeatureOptions, ProjectionParams};
use atlas::graph::GraphBuilder;
use atlas::infotheory::sampling::{random_partition, random_refinement};
use atlas::infotheory::{entropy, mutual_information, nmi, refinement_report};
use atlas::resolution::{ResolutionProfile, SearchConfig};
use atlas::rng::rng_from_seed;
use common::{entropy_oracle, mi_oracle, naive_modularity, nmi_oracle, random_connected_graph};
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

fn part(a: &[u32]) -> Partition {
    Partition::from_labels(a)
}

#[test]
fn information_matches_nested_loops() {
    let mut rng = rng_from_seed(71);
    for _ in 0..300 {
        let n = rng.random_range(1..=100);
        let ka = rng.random_range(1..=n.min(12));
        let kb = rng.random_range(1..=n.min(12));
        let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..ka as u32)).collect();
        let b: Vec<u32> = (0..n).map(|_| rng.random_range(0..kb as u32)).collect();
        let (pa, pb) = (part(&a), part(&b));
        assert!((entropy(&pa) - entropy_oracle(&a)).abs() < 1e-12);
        assert!((mutual_information(&pa, &pb).unwrap() - mi_oracle(&a, &b)).abs() < 1e-12);
        let v = nmi(&pa, &pb).unwrap();
        assert!((v - nmi_oracle(&a, &b)).abs() < 1e-12);
        assert!((v - nmi(&pb, &pa).unwrap()).abs() < 1e-15);
        assert!((-1e-12..=1.0 + 1e-12).contains(&v));
    }
}

#[test]
fn worked_information_examples() {
    // Sizes 1 and 3: -(1/4 ln 1/4 + 3/4 ln 3/4).
    assert!((entropy(&part(&[0, 1, 1, 1])) - 0.5623351446188083).abs() < 1e-12);
    let crossing = mutual_information(&part(&[0, 0, 1, 1]), &part(&[0, 1, 0, 1])).unwrap();
    assert!(crossing.abs() < 1e-15);
    let same = part(&[0, 0, 1, 1, 2, 2]);
    assert!((nmi(&same, &same).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn splitting_into_labels_and_splitting_a_pure_block() {
    let labels = part(&[0, 0, 0, 1, 1, 1]);
    let coarse = Partition::single_block(6);

    let r = refinement_report(&labels, &coarse, &labels).unwrap();
    assert!((r.delta_mi - 2f64.ln()).abs() < 1e-12);
    assert!(r.predicted_increase && r.actual_increase);
    assert!((r.nmi_after - 1.0).abs() < 1e-12);

    // Splitting one pure block gains entropy but no information.
    let refined = part(&[0, 0, 2, 1, 1, 1]);
    let r = refinement_report(&labels, &labels, &refined).unwrap();
    assert!(r.delta_mi.abs() < 1e-12);
    assert!(r.delta_h > 0.0);
    assert!(!r.predicted_increase && !r.actual_increase);
}

#[test]
fn refinements_never_lose_information() {
    let mut rng = rng_from_seed(0xAB);
    for _ in 0..200 {
        let n = rng.random_range(2..=60);
        let y = random_partition(n, rng.random_range(1..=n.min(6)), &mut rng);
        let p = random_partition(n, rng.random_range(1..=n.min(6)), &mut rng);
        let s = random_refinement(&p, &mut rng);
        if s.num_blocks() == p.num_blocks() {
            assert!(refinement_report(&y, &p, &s).is_err());
            continue;
        }
        let r = refinement_report(&y, &p, &s).unwrap();
        assert!(r.delta_mi >= -1e-12 && r.delta_h >= -1e-12);
        assert!(r.delta_mi <= r.delta_h + 1e-12);
    }
}

#[test]
fn projection_is_the_one_hot_product() {
    let mut rng = rng_from_seed(5);
    for n in [1usize, 17, 250, 1000] {
        let k = rng.random_range(1..=n.min(40));
        let p = random_partition(n, k, &mut rng);
        let w = Array2::from_shape_fn((p.num_blocks(), 7), |_| StandardNormal.sample(&mut rng));
        let dense = one_hot(&p).to_dense().dot(&w);
        let fast = project(&p, w.view()).unwrap();
        let worst = (&dense - &fast).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-12, "n={n} worst={worst}");
    }
    let p = part(&[2, 0, 1, 0]);
    let eye = Array2::eye(3);
    assert_eq!(project(&p, eye.view()).unwrap(), one_hot(&p).to_dense());
}

#[test]
fn design_width_is_features_plus_embeddings() {
    let spec = atlas::synth::SbmSpec {
        n: 120,
        feature_dim: 1433,
        ..Default::default()
    };
    let g = atlas::synth::generate(&spec).unwrap().graph;
    let entries = [0.5, 1.0]
        .into_iter()
        .map(|gamma| louvain(&g, gamma, 1).unwrap())
        .collect();
    let profile = ResolutionProfile::new(entries, SearchConfig::default()).unwrap();
    let source = DesignSource::new(&g, &profile, FeatureOptions::default());
    let params = ProjectionParams::init(&source.block_counts(), 16, &mut rng_from_seed(0));
    let design = source.materialize(&params).unwrap();
    assert_eq!(design.width(), 1433 + 2 * 16);
    assert_eq!(design.layout.width(), 1465);
}

#[test]
fn bridged_triangles_modularity() {
    let mut b = GraphBuilder::new(6);
    for (u, v) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)] {
        b.add_edge(u, v).unwrap();
    }
    let g = b.build();
    let p = part(&[0, 0, 0, 1, 1, 1]);
    assert!((modularity(&g, &p, 1.0).unwrap() - 5.0 / 14.0).abs() < 1e-12);
    let r = louvain(&g, 1.0, 0).unwrap();
    assert_eq!(r.partition.canonical(), p.canonical());
    assert!((r.modularity - 5.0 / 14.0).abs() < 1e-12);
}

#[test]
fn louvain_modularity_matches_recomputation() {
    let mut rng = rng_from_seed(0x10);
    for _ in 0..30 {
        let n = rng.random_range(10..=120);
        let g = random_connected_graph(n, 0.08, &mut rng);
        for gamma in [0.5, 1.0, 3.0] {
            let r = louvain(&g, gamma, rng.random()).unwrap();
            let naive = naive_modularity(&g, r.partition.assignment(), gamma);
            assert!((r.modularity - naive).abs() < 1e-9);
        }
    }
}
