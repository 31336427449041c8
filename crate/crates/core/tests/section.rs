use expskel_core::currents::section_zeros;
use expskel_core::geometry::segment_distance;
use expskel_core::geometry::Rect;
use expskel_core::section::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn unit_square() -> Rect {
    Rect::new(0.0, 0.0, 1.0, 1.0)
}

fn pair_net(eps: f64, domain: Rect) -> Net {
    Net::from_points(vec![c(0.0, 0.0), c(1.0, 0.0)], eps, domain, false).unwrap()
}

fn ones(n: usize) -> Vec<C> {
    vec![c(1.0, 0.0); n]
}

/// Equilateral triple about the centre of the unit square whose phases make
/// the section vanish to second order at the circumcentre: there the
/// recentred weights are `w_j = e^{-2πij/3}`, so `Σ w_j = Σ w_j conj(p_j) = 0`.
fn degenerate_triple(k: f64) -> SectionSpec {
    let v = c(0.5, 0.5);
    let rho = 0.3;
    let pts: Vec<C> = (0..3).map(|j| v + C::from_polar(rho, 2.0 * PI * j as f64 / 3.0)).collect();
    let amps: Vec<C> = pts
        .iter()
        .enumerate()
        .map(|(j, p)| C::from_polar(1.0, -2.0 * PI * j as f64 / 3.0 - k * (p.conj() * v).im / 2.0))
        .collect();
    let net = Net::from_points(pts, 0.3, unit_square(), false).unwrap();
    build_section(&net, &amps, k).unwrap()
}

/// Vertices of the Voronoi diagram by brute force: circumcentres of site
/// triples with no site strictly closer.
fn circumcentre_vertices(sites: &[C], window: &Rect) -> Vec<C> {
    let mut out = Vec::new();
    for a in 0..sites.len() {
        for b in a + 1..sites.len() {
            for d in b + 1..sites.len() {
                let (p, q, r) = (sites[a], sites[b], sites[d]);
                let den = 2.0 * ((q - p).conj() * (r - p)).im;
                if den.abs() < 1e-14 {
                    continue;
                }
                let o = p + C::i() * ((q - p) * (r - p).norm_sqr() - (r - p) * (q - p).norm_sqr()) / den;
                let rad = (o - p).norm();
                if window.contains(o) && sites.iter().all(|s| (s - o).norm() >= rad - 1e-9) {
                    out.push(o);
                }
            }
        }
    }
    out
}

fn min_pairwise(pts: &[C]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.min((pts[i] - pts[j]).norm());
        }
    }
    m
}

#[test]
fn net_postconditions() {
    let net = generic_net(&unit_square(), &NetParams::new(0.3)).unwrap();
    assert!((4..=16).contains(&net.points.len()), "{}", net.points.len());
    assert!(min_pairwise(&net.points) >= 0.24);
    let cover = unit_square()
        .grid(101, 101)
        .map(|g| net.points.iter().map(|p| (g - p).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    assert!(cover <= 0.3 + 1e-12);
    assert!(net.cover_radius <= 0.3 + 1e-12);

    let coarse = generic_net(&unit_square(), &NetParams::new(0.5)).unwrap();
    assert!(coarse.points.len() >= 2);

    let bad = generic_net(&unit_square(), &NetParams::new(1.5));
    assert!(matches!(bad, Err(SectionError::BadEpsilon { .. })));
    let bad = generic_net(&unit_square(), &NetParams { c1: 0.7, ..NetParams::new(0.3) });
    assert_eq!(bad, Err(SectionError::BadC1(0.7)));
}

#[test]
fn nets_meet_the_quality_target_over_seeds() {
    let mut worst: f64 = 1.0;
    for seed in 0..50 {
        let net = generic_net(&unit_square(), &NetParams { seed, ..NetParams::new(0.25) }).unwrap();
        assert!(net.target_met, "seed {seed}");
        worst = worst.min(net.delta);
    }
    assert!(worst >= 0.05, "{worst}");
}

#[test]
fn periodic_nets_wrap() {
    let net = generic_net(&unit_square(), &NetParams { periodic: true, seed: 3, ..NetParams::new(0.3) }).unwrap();
    assert!((net.distance(c(0.05, 0.5), c(0.95, 0.5)) - 0.1).abs() < 1e-15);
    let imgs = net.images(0.6);
    assert!(imgs.len() > net.points.len());
    for (q, j) in imgs {
        let d = q - net.points[j];
        assert!((d.re - d.re.round()).abs() < 1e-12 && (d.im - d.im.round()).abs() < 1e-12);
    }
}

#[test]
fn section_construction_examples() {
    let single = Net::from_points(vec![c(0.0, 0.0)], 0.5, unit_square(), false).unwrap();
    let spec = build_section(&single, &ones(1), 4.0).unwrap();
    assert_eq!(spec.global_sum.len(), 1);
    assert_eq!(spec.global_sum.alpha(0), c(0.0, 0.0));
    assert!(section_zeros(&spec, &unit_square()).unwrap().is_empty());

    let domain = Rect::new(-0.5, -1.0, 1.5, 1.0);
    let spec = build_section(&pair_net(0.6, domain), &ones(2), 8.0).unwrap();
    let sk = section_skeleton(&spec, &domain).unwrap();
    assert_eq!(sk.edges.len(), 1);
    assert!((sk.edges[0].start.re - 0.5).abs() < 1e-12 && (sk.edges[0].end.re - 0.5).abs() < 1e-12);

    // 1 - e^{k(z - 1/2)/2} vanishes at 1/2 + 4πin/k.
    let w = Rect::new(0.0, -2.0, 1.0, 2.0);
    let spec = build_section(&pair_net(0.6, w), &[c(1.0, 0.0), c(-1.0, 0.0)], 8.0).unwrap();
    let mut zs: Vec<C> = section_zeros(&spec, &w).unwrap().into_iter().map(|(z, _)| z).collect();
    zs.sort_by(|a, b| a.im.total_cmp(&b.im));
    let want: Vec<C> = (-1..=1).map(|n| c(0.5, n as f64 * PI / 2.0)).collect();
    assert_eq!(zs.len(), want.len());
    for (z, w) in zs.iter().zip(&want) {
        assert!((z - w).norm() < 1e-9, "{z}");
    }

    assert_eq!(build_section(&single, &ones(2), 4.0), Err(SectionError::AmplitudeCount { amplitudes: 2, points: 1 }));
    assert_eq!(build_section(&single, &[c(2.0, 0.0)], 4.0), Err(SectionError::NonUnitAmplitude(0)));
    assert_eq!(build_section(&single, &ones(1), -1.0), Err(SectionError::BadK(-1.0)));
    assert!(build_section(&single, &ones(1), 4.0).unwrap().low_k);
}

#[test]
fn skeleton_examples() {
    let w = Rect::new(-0.5, -0.5, 1.5, 1.5);
    let net = Net::from_points(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)], 0.6, w, false).unwrap();
    let spec = build_section(&net, &ones(3), 8.0).unwrap();
    let sk = section_skeleton(&spec, &w).unwrap();
    assert_eq!(sk.vertices.len(), 1);
    assert!((sk.vertices[0].point - c(0.5, 0.5)).norm() < 1e-12);
    assert!((circumcentre_vertices(&net.points, &w)[0] - c(0.5, 0.5)).norm() < 1e-12);
}

#[test]
fn twelve_point_net_is_trivalent() {
    let mut net = generic_net(&unit_square(), &NetParams { seed: 11, ..NetParams::new(0.25) }).unwrap();
    net.points.truncate(12);
    assert_eq!(net.points.len(), 12);
    let spec = build_section(&net, &random_amplitudes(12, 1), 50.0).unwrap();
    let sk = section_skeleton(&spec, &unit_square()).unwrap();
    assert!(sk.is_generic());
    let mut oracle = circumcentre_vertices(&net.points, &unit_square());
    let mut got: Vec<C> = sk.vertices.iter().map(|v| v.point).collect();
    let key = |a: &C, b: &C| a.re.total_cmp(&b.re);
    oracle.sort_by(key);
    got.sort_by(key);
    assert_eq!(got.len(), oracle.len());
    for (g, o) in got.iter().zip(&oracle) {
        assert!((g - o).norm() < 1e-9);
    }
}

#[test]
fn local_model_examples() {
    let domain = Rect::new(-0.5, -1.0, 1.5, 1.0);
    let spec = build_section(&pair_net(0.55, domain), &ones(2), 16.0).unwrap();
    let lm = local_model(&spec, c(0.5, 0.0), false).unwrap();
    assert_eq!(lm.model.len(), 2);
    let mut ex: Vec<f64> = (0..2).map(|i| lm.model.planar_exponent(i).re).collect();
    ex.sort_by(f64::total_cmp);
    assert!((ex[0] + 0.5 / 1.1).abs() < 1e-15 && (ex[1] - 0.5 / 1.1).abs() < 1e-15);
    assert_eq!(lm.error_sup, 0.0);

    let shifted = local_model(&spec, c(0.5, 0.0), true).unwrap();
    let m = shifted.shift.unwrap();
    for i in 0..2 {
        let orig = lm.model.planar_exponent(i);
        assert!((0..2).any(|j| (shifted.model.planar_exponent(j) - (orig - m)).norm() < 1e-12));
    }

    let single = Net::from_points(vec![c(0.2, 0.3)], 0.5, unit_square(), false).unwrap();
    let spec = build_section(&single, &ones(1), 16.0).unwrap();
    let lm = local_model(&spec, c(0.6, 0.6), false).unwrap();
    assert_eq!(lm.model.len(), 1);
    assert!(lm.error_sup < 1e-12);
    assert_eq!(local_model(&spec, c(5.0, 5.0), false).unwrap_err(), SectionError::NoLocalTerms);
}

#[test]
fn local_model_tail_decays_in_k() {
    let domain = Rect::new(-0.5, -1.0, 3.5, 1.0);
    let net = Net::from_points(vec![c(0.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)], 0.55, domain, false).unwrap();
    let errs: Vec<f64> = [16.0, 32.0, 64.0]
        .iter()
        .map(|&k| local_model(&build_section(&net, &ones(3), k).unwrap(), c(0.5, 0.0), false).unwrap().error_sup)
        .collect();
    assert!(errs[0] > 0.0);
    assert!(errs[1] / errs[0] < 0.5 && errs[2] / errs[1] < 0.5, "{errs:?}");
}

#[test]
fn cluster_examples() {
    let w = Rect::new(0.0, -1.0, 1.0, 1.0);
    let spec = build_section(&pair_net(0.6, w), &[c(1.0, 0.0), c(-1.0, 0.0)], 8.0).unwrap();
    assert!(detect_clusters(&spec, 0.05, 0.05, 8).unwrap().clusters.is_empty());

    let spec = degenerate_triple(100.0);
    assert!(detect_clusters(&spec, 0.0, 0.05, 4).unwrap().clusters.is_empty());
    let set = detect_clusters(&spec, 0.5, 0.05, 4).unwrap();
    assert_eq!(set.clusters.len(), 1);
    assert!(set.clusters[0].members.iter().any(|m| (m - c(0.5, 0.5)).norm() < 1e-3));
    assert_eq!(set.c4, 0.05 * set.c3);
    // The datum really is small at the vertex.
    let j = base_jet(&spec, c(0.5, 0.5));
    assert!(j.c1_datum(c(0.5, 0.5), spec.k, spec.scale()) < 1e-12);
}

#[test]
fn empty_surgery_is_the_identity() {
    let spec = build_section(&pair_net(0.6, unit_square()), &[c(1.0, 0.0), c(-1.0, 0.0)], 8.0).unwrap();
    let set = detect_clusters(&spec, 0.0, 0.05, 4).unwrap();
    let s = perturb_section(&spec, &set, 0).unwrap();
    for z in unit_square().grid(13, 13) {
        let base = s.eval(&spec, Field::Base, z);
        assert_eq!(s.eval(&spec, Field::Tilde, z), base);
        assert_eq!(s.eval(&spec, Field::Hat, z), base);
    }
}

#[test]
fn surgery_on_the_degenerate_triple() {
    let spec = degenerate_triple(100.0);
    let set = detect_clusters(&spec, 0.5, 0.05, 4).unwrap();
    let s = perturb_section(&spec, &set, 0).unwrap();
    assert_eq!(s.clusters.len(), 1);
    let ball = s.ball_grid(0, 3.0 * s.r1, s.r1 / 16.0);
    let worst = ball.iter().map(|&z| s.c1_datum(&spec, Field::Hat, z)).fold(f64::INFINITY, f64::min);
    assert!(worst >= s.c4, "{worst}");
    assert!((s.clusters[0].epsilon_hat.norm() - 0.1 * s.c3).abs() < 1e-15);
    for z in unit_square().grid(61, 61) {
        if !s.in_support(z) {
            assert_eq!(s.eval(&spec, Field::Hat, z), s.eval(&spec, Field::Base, z));
        }
    }
}

#[test]
fn too_large_c3_exhausts_the_retries() {
    let spec = degenerate_triple(100.0);
    let set = detect_clusters(&spec, 50.0, 0.05, 2).unwrap();
    assert!(matches!(perturb_section(&spec, &set, 0), Err(SectionError::SurgeryFailed { .. })));
}

#[test]
fn colouring_examples() {
    let spec = build_section(&pair_net(0.6, unit_square()), &ones(2), 8.0).unwrap();
    let (col, pencil) = color_and_pencil(&spec);
    assert_eq!(col.count, 2);
    assert_eq!(col.groups, vec![vec![0], vec![1]]);
    assert!(pencil.separation > 0.0);

    let mut net = generic_net(&unit_square(), &NetParams { seed: 5, ..NetParams::new(0.25) }).unwrap();
    net.points.truncate(12);
    let spec = build_section(&net, &random_amplitudes(12, 2), 50.0).unwrap();
    let (col, pencil) = color_and_pencil(&spec);
    let max_degree = col.adjacency.iter().map(Vec::len).max().unwrap();
    assert!(col.count <= max_degree + 1);
    for (v, nbrs) in col.adjacency.iter().enumerate() {
        assert!(nbrs.iter().all(|&u| col.color[u] != col.color[v]));
    }
    assert!(col.count >= 2 && pencil.separation > 0.0);
}

/// Largest distance from a zero to the skeleton edges.
fn zero_to_skeleton(sk: &expskel_core::skeleton::Skeleton2D, zeros: &[C]) -> f64 {
    zeros
        .iter()
        .map(|&z| sk.edges.iter().map(|e| segment_distance(z, e.start, e.end)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[test]
fn zero_distance_scales_like_one_over_k() {
    let net = generic_net(&unit_square(), &NetParams { seed: 2, ..NetParams::new(0.3) }).unwrap();
    let amps = random_amplitudes(net.points.len(), 2);
    let fitted: Vec<f64> = [50.0, 100.0]
        .iter()
        .map(|&k| {
            let spec = build_section(&net, &amps, k).unwrap();
            let sk = section_skeleton(&spec, &unit_square()).unwrap();
            let zs: Vec<C> = section_zeros(&spec, &unit_square()).unwrap().into_iter().map(|(z, _)| z).collect();
            assert!(!zs.is_empty());
            zero_to_skeleton(&sk, &zs) * k * net.epsilon
        })
        .collect();
    let ratio = fitted[1] / fitted[0];
    assert!((0.5..=2.0).contains(&ratio), "{fitted:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn section_skeleton_is_the_voronoi_diagram(seed in 0u64..1_000_000) {
        let net = generic_net(&unit_square(), &NetParams { seed, ..NetParams::new(0.3) }).unwrap();
        let spec = build_section(&net, &random_amplitudes(net.points.len(), seed), 40.0).unwrap();
        let sk = section_skeleton(&spec, &unit_square()).unwrap();
        for e in &sk.edges {
            let mid = 0.5 * (e.start + e.end);
            let mut d: Vec<f64> = net.points.iter().map(|p| (p - mid).norm()).collect();
            d.sort_by(f64::total_cmp);
            prop_assert!((d[1] - d[0]).abs() < 1e-9);
        }
        let oracle = circumcentre_vertices(&net.points, &unit_square());
        prop_assert_eq!(sk.vertices.len(), oracle.len());
        for v in &sk.vertices {
            prop_assert!(oracle.iter().any(|o| (o - v.point).norm() < 1e-9));
        }
    }

    #[test]
    fn surgery_only_changes_the_cluster_balls(phase in 0.0..2.0 * PI) {
        let mut spec = degenerate_triple(100.0);
        spec.amplitudes[0] *= C::from_polar(1.0, 1e-3 * phase);
        let spec = build_section(&spec.net, &spec.amplitudes, spec.k).unwrap();
        let set = detect_clusters(&spec, 0.5, 0.05, 4).unwrap();
        let s = perturb_section(&spec, &set, 7).unwrap();
        for z in unit_square().grid(41, 41) {
            if !s.in_support(z) {
                prop_assert_eq!(s.eval(&spec, Field::Hat, z), s.eval(&spec, Field::Base, z));
            }
        }
        for i in 0..s.clusters.len() {
            prop_assert!(s.clusters[i].margin >= s.c4);
        }
    }
}
