//! Capture resolution checked against an index-free brute-force
//! resolver, plus the spatial-query full-scan oracle.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swlv_core::world::{CaptureEvent, CellRect, Orientation, Species, WorldBuilder, WorldState};

/// Plain-data mirror of a world, resolved by exhaustive scans.
struct FlatWorld {
    width: u32,
    height: u32,
    /// (id, x, y, group)
    predators: Vec<(u64, u32, u32, Option<u64>)>,
    /// (id, x, y, radius, threshold, reward)
    preys: Vec<(u64, u32, u32, u32, u32, f64)>,
    groups: BTreeMap<u64, Vec<u64>>,
}

/// Reference resolver: ascending prey id; a unit is a group or an
/// ungrouped single; in-area count over non-consumed members meets the
/// threshold; largest effective unit size wins; ties uniform over units
/// ordered by smallest member id; winners are consumed.
fn brute_force_resolve(world: &FlatWorld, rng: &mut ChaCha8Rng) -> Vec<CaptureEvent> {
    let mut events = Vec::new();
    let mut consumed: HashSet<u64> = HashSet::new();
    for &(prey_id, px, py, radius, threshold, reward) in &world.preys {
        let in_square = |x: u32, y: u32| -> bool {
            let (x, y, px, py) = (x as i64, y as i64, px as i64, py as i64);
            let r = radius as i64;
            (x - px).abs() <= r
                && (y - py).abs() <= r
                && x >= 0
                && y >= 0
                && x < world.width as i64
                && y < world.height as i64
        };
        // enumerate every unit from scratch
        let mut candidates: Vec<(usize, u64, Vec<u64>)> = Vec::new();
        for (gid, members) in &world.groups {
            let effective: Vec<u64> = members
                .iter()
                .filter(|m| !consumed.contains(m))
                .copied()
                .collect();
            let in_area = effective
                .iter()
                .filter(|m| {
                    let p = world.predators.iter().find(|p| p.0 == **m).unwrap();
                    in_square(p.1, p.2)
                })
                .count();
            if in_area >= threshold as usize && !effective.is_empty() {
                let _ = gid;
                candidates.push((effective.len(), effective[0], effective));
            }
        }
        for &(pid, x, y, group) in &world.predators {
            if group.is_none() && !consumed.contains(&pid) && in_square(x, y) && threshold <= 1 {
                candidates.push((1, pid, vec![pid]));
            }
        }
        if candidates.is_empty() {
            continue;
        }
        let best = candidates.iter().map(|c| c.0).max().unwrap();
        let mut tied: Vec<&(usize, u64, Vec<u64>)> =
            candidates.iter().filter(|c| c.0 == best).collect();
        tied.sort_by_key(|c| c.1);
        let winner = if tied.len() == 1 {
            tied[0]
        } else {
            tied[rng.random_range(0..tied.len())]
        };
        consumed.extend(winner.2.iter().copied());
        events.push(CaptureEvent {
            prey_id,
            winner_members: winner.2.clone(),
            share: reward / winner.2.len() as f64,
        });
    }
    events
}

/// Generate a random 20x20 scenario with up to 50 entities, mixed
/// thresholds and some groups, both as a `WorldState` and as flat data.
fn random_scenario(meta: &mut ChaCha8Rng, tie_seed: u64) -> (WorldState, FlatWorld) {
    let n_predators = meta.random_range(1..=35usize);
    let n_preys = meta.random_range(1..=15usize);
    let mut builder = WorldBuilder::new(20, 20).seed(tie_seed);
    let mut flat = FlatWorld {
        width: 20,
        height: 20,
        predators: Vec::new(),
        preys: Vec::new(),
        groups: BTreeMap::new(),
    };
    let mut next_id = 0u64;
    for _ in 0..n_preys {
        let pos = (meta.random_range(0..20u32), meta.random_range(0..20u32));
        let radius = meta.random_range(0..=3u32);
        let threshold = meta.random_range(1..=3u32);
        let reward = meta.random_range(0.1..2.0f64);
        let species = if threshold == 1 { Species::Solo } else { Species::Group };
        builder = builder.prey(pos, species, radius, threshold, reward);
        flat.preys.push((next_id, pos.0, pos.1, radius, threshold, reward));
        next_id += 1;
    }
    let mut predator_ids = Vec::new();
    for _ in 0..n_predators {
        let pos = (meta.random_range(0..20u32), meta.random_range(0..20u32));
        builder = builder.predator(pos, Orientation::North);
        flat.predators.push((next_id, pos.0, pos.1, None));
        predator_ids.push(next_id);
        next_id += 1;
    }
    // partition a random prefix of predators into groups of 2..=5
    let mut remaining = predator_ids.clone();
    let mut gid = 0u64;
    while remaining.len() >= 2 && meta.random_range(0..10) < 7 {
        let size = meta.random_range(2..=5usize).min(remaining.len());
        let members: Vec<u64> = remaining.drain(..size).collect();
        builder = builder.group(&members);
        for m in &members {
            let p = flat.predators.iter_mut().find(|p| p.0 == *m).unwrap();
            p.3 = Some(gid);
        }
        flat.groups.insert(gid, members);
        gid += 1;
    }
    (builder.build(), flat)
}

#[test]
fn resolution_matches_brute_force_on_randomized_worlds() {
    let mut meta = ChaCha8Rng::seed_from_u64(0xFEED);
    for case in 0..1000u64 {
        let (mut world, flat) = random_scenario(&mut meta, case);
        let mut oracle_rng = ChaCha8Rng::seed_from_u64(case);
        let got = world.resolve_captures();
        let expected = brute_force_resolve(&flat, &mut oracle_rng);
        assert_eq!(got, expected, "case {case} diverged");

        // conservation: shares of one event sum to the prey reward
        for ev in &got {
            let total: f64 = ev.share * ev.winner_members.len() as f64;
            let reward = flat.preys.iter().find(|p| p.0 == ev.prey_id).unwrap().5;
            assert!((total - reward).abs() <= reward * 1e-12);
        }
        // one prey, one winner: no prey appears twice, dead iff captured
        let mut seen = HashSet::new();
        for ev in &got {
            assert!(seen.insert(ev.prey_id), "prey {} captured twice", ev.prey_id);
        }
        for prey in world.preys() {
            assert_eq!(prey.alive, !seen.contains(&prey.id));
        }
        // each predator wins at most once
        let mut winners = HashSet::new();
        for ev in &got {
            for m in &ev.winner_members {
                assert!(winners.insert(*m), "predator {m} in two wins, case {case}");
            }
        }
    }
}

#[test]
fn spatial_query_matches_full_scan() {
    let mut meta = ChaCha8Rng::seed_from_u64(0xCAFE);
    let mut cfg = swlv_core::SimConfig::default().world;
    cfg.width = 64;
    cfg.height = 48;
    cfg.predators = 150;
    cfg.prey_group = 60;
    cfg.prey_solo = 40;
    cfg.obstacle_density = 0.02;
    let world = WorldState::init(&cfg, 99).unwrap();
    for _ in 0..1000 {
        let x0 = meta.random_range(-5..70i64);
        let y0 = meta.random_range(-5..55i64);
        let x1 = x0 + meta.random_range(0..30i64);
        let y1 = y0 + meta.random_range(0..30i64);
        let Some(rect) = CellRect::clipped(x0, y0, x1, y1, 64, 48) else {
            continue;
        };
        let got = world.spatial_query(&rect);
        let mut expected: Vec<u64> = world
            .predators()
            .iter()
            .map(|p| (p.id, p.pos))
            .chain(world.preys().iter().map(|p| (p.id, p.pos)))
            .filter(|(_, pos)| rect.contains(*pos))
            .map(|(id, _)| id)
            .collect();
        expected.sort_unstable();
        assert_eq!(got, expected);
    }
}
