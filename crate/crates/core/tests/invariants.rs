use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;

use starnav::control::local_freespace;
use starnav::diffeo::{diffeo_eval, map_point};
use starnav::engine::{seeded_start, wrap_angle, START_CLEARANCE};
use starnav::geom::{ConvexObstacle, Vec2, GEOM_EPS};
use starnav::scenario::Scenario;
use starnav::world::{sense, validate_assumptions, Fragment, MapMode, ModelDisk, ModelLayer, SemanticMap, SourceId, World};

const SCENARIOS: [&str; 4] = ["empty", "ushape", "cluttered_u", "room"];

fn scenario(name: &str) -> Scenario {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", &format!("{name}.scn")]
        .iter()
        .collect();
    Scenario::load(&path).unwrap()
}

fn cluttered() -> &'static (World, SemanticMap) {
    static CELL: OnceLock<(World, SemanticMap)> = OnceLock::new();
    CELL.get_or_init(|| {
        let world = scenario("cluttered_u").build_world().unwrap();
        let mut map = SemanticMap::new();
        for k in 0..world.familiar.len() {
            map.discover(&world, k);
        }
        (world, map)
    })
}

#[test]
fn shipped_scenarios_round_trip_and_validate() {
    for name in SCENARIOS {
        let s = scenario(name);
        let again = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(again, s, "{name}");
        let world = s.build_world().unwrap();
        let report = validate_assumptions(&world);
        assert!(report.passed(), "{name}:\n{report}");
    }
}

#[test]
fn seeded_starts_are_reproducible_and_clear() {
    let world = scenario("room").build_world().unwrap();
    for seed in 0..50 {
        let (x, psi) = seeded_start(&world, seed);
        assert_eq!((x, psi), seeded_start(&world, seed));
        assert!(world.clearance(x) >= START_CLEARANCE);
        assert!(world.min_beta(x) >= 0.0);
    }
}

fn disk_strategy() -> impl Strategy<Value = ModelDisk> {
    (-3.0..3.0f64, -3.0..3.0f64, 0.1..1.0f64).prop_map(|(x, y, radius)| ModelDisk {
        center: Vec2::new(x, y),
        radius,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn wrap_angle_lands_in_half_open_interval(a in -100.0..100.0f64) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        let turns = (a - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn h_is_the_identity_outside_every_band(x in -5.5..5.5f64, y in -5.5..5.5f64) {
        let (world, map) = cluttered();
        let p = Vec2::new(x, y);
        let outside = map.stars.iter().all(|s| s.beta(p) >= s.epsilon);
        prop_assume!(outside);
        prop_assert_eq!(map_point(p, map).unwrap(), p);
        prop_assert!(world.min_beta(p) > 0.0);
    }

    #[test]
    fn map_point_agrees_with_the_full_evaluation(x in -5.5..5.5f64, y in -5.5..5.5f64) {
        let (_, map) = cluttered();
        let p = Vec2::new(x, y);
        prop_assume!(map.stars.iter().all(|s| s.beta(p) > 0.0));
        let full = diffeo_eval(p, map).unwrap();
        prop_assert!(full.y.dist(map_point(p, map).unwrap()) <= 1e-12 * (1.0 + p.norm()));
        prop_assert!(full.jacobian.det() > 0.0);
    }

    #[test]
    fn local_freespace_avoids_model_disks(
        disks in prop::collection::vec(disk_strategy(), 1..6),
        yx in -3.0..3.0f64,
        yy in -3.0..3.0f64,
        r_virt in 0.5..4.0f64,
    ) {
        let y = Vec2::new(yx, yy);
        prop_assume!(disks.iter().all(|d| d.center.dist(y) > d.radius + 1e-3));
        let model = ModelLayer { disks: disks.clone(), fragments: Vec::new() };
        let lf = local_freespace(y, &model, None, r_virt).unwrap();
        prop_assert!(lf.polygon.contains(y));
        for v in lf.polygon.vertices() {
            prop_assert!(v.dist(y) <= 0.5 * r_virt + 1e-9);
            for d in &disks {
                prop_assert!(v.dist(d.center) >= d.radius - 1e-9);
            }
        }
    }

    #[test]
    fn local_freespace_excludes_sensed_points(
        cx in -1.5..1.5f64,
        cy in 1.0..2.5f64,
        radius in 0.2..1.2f64,
        dx in -0.3..0.3f64,
        dy in -0.3..0.3f64,
        r_virt in 1.0..4.0f64,
    ) {
        let mut world = World::empty(6.0, Vec2::new(0.0, -4.0), 4.0);
        world.unknown.push(ConvexObstacle::Disk { center: Vec2::new(cx, cy), radius });
        prop_assume!(world.unknown_clearance(Vec2::ZERO) > 0.05);
        let points: Vec<Vec2> = sense(Vec2::ZERO, &world, 360).iter().map(|h| h.point).collect();
        prop_assume!(!points.is_empty());
        let y = Vec2::new(dx, dy);
        prop_assume!(world.unknown_clearance(y) > 1e-3);
        let model = ModelLayer {
            disks: Vec::new(),
            fragments: vec![Fragment { source: SourceId::Unknown(0), points: points.clone() }],
        };
        let lf = local_freespace(y, &model, Some(world.free_boundary()), r_virt).unwrap();
        prop_assert!(lf.polygon.contains(y));
        for p in points {
            prop_assert!(lf.polygon.inner_margin(p) <= GEOM_EPS, "sensed point {:?} inside", p);
        }
    }

    #[test]
    fn discovery_never_forgets_a_star(seed in 0u64..200) {
        let (world, _) = cluttered();
        let (x, _) = seeded_start(world, seed);
        let mut map = SemanticMap::new();
        let mut seen = 0;
        for step in 0..4 {
            let probe = x + Vec2::from_angle(step as f64) * 0.5;
            let hits = sense(probe, world, 360);
            map.update(&hits, world, MapMode::Semantic);
            prop_assert!(map.stars.len() >= seen);
            seen = map.stars.len();
        }
        prop_assert!(map.stars.len() <= world.familiar.len());
    }
}
