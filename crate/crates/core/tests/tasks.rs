use std::collections::VecDeque;
use std::io::Write;

use proptest::prelude::*;
use rehearsal_core::tasks::{
    encode_idx_images, encode_idx_labels, greedy_return, load_idx, parse_idx_images, value_iteration, write_idx_file,
    Action, GridConfig, GridWorld, Permutation,
};
use rehearsal_core::Error;
use tempfile::TempDir;

fn fixture() -> (Vec<Vec<u8>>, Vec<u8>) {
    let pixels = (0..4u8).map(|i| (0..9u8).map(|p| i.wrapping_mul(61).wrapping_add(p * 28)).collect()).collect();
    (pixels, vec![3, 0, 9, 1])
}

fn write_pair(dir: &TempDir, ext: &str, images: &[u8], labels: &[u8]) -> (std::path::PathBuf, std::path::PathBuf) {
    let ip = dir.path().join(format!("images.idx{ext}"));
    let lp = dir.path().join(format!("labels.idx{ext}"));
    write_idx_file(&ip, images).unwrap();
    write_idx_file(&lp, labels).unwrap();
    (ip, lp)
}

#[test]
fn header_defines_two_images() {
    let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
    bytes.extend([255, 0, 0, 0, 0, 0, 0, 255]);
    let parsed = parse_idx_images(&bytes).unwrap();
    assert_eq!((parsed.rows, parsed.cols, parsed.images.len()), (2, 2, 2));
    assert_eq!(parsed.images[0], vec![1.0, 0.0, 0.0, 0.0]);
    assert_eq!(parsed.images[1][3], 1.0);
}

#[test]
fn fixture_round_trips_plain_and_gzip() {
    let (pixels, labels) = fixture();
    let dir = TempDir::new().unwrap();
    for ext in ["", ".gz"] {
        let (ip, lp) = write_pair(&dir, ext, &encode_idx_images(3, 3, &pixels), &encode_idx_labels(&labels));
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.labels, vec![3, 0, 9, 1]);
        for (img, raw) in ds.images.iter().zip(&pixels) {
            let back: Vec<u8> = img.iter().map(|&v| (v * 255.0).round() as u8).collect();
            assert_eq!(&back, raw);
        }
    }
}

#[test]
fn malformed_fixtures_fail_with_documented_errors() {
    let (pixels, labels) = fixture();
    let images = encode_idx_images(3, 3, &pixels);
    let label_bytes = encode_idx_labels(&labels);
    let dir = TempDir::new().unwrap();

    let (ip, lp) = write_pair(&dir, "", &images[..images.len() - 1], &label_bytes);
    assert!(matches!(load_idx(&ip, &lp), Err(Error::Length { .. })));

    let (ip, lp) = write_pair(&dir, "", &images[..10], &label_bytes);
    assert!(matches!(load_idx(&ip, &lp), Err(Error::Length { .. })));

    let mut bad = images.clone();
    bad[3] = 0x01;
    let (ip, lp) = write_pair(&dir, "", &bad, &label_bytes);
    assert!(matches!(load_idx(&ip, &lp), Err(Error::Format(_))));

    let (ip, lp) = write_pair(&dir, "", &label_bytes, &images);
    assert!(matches!(load_idx(&ip, &lp), Err(Error::Format(_))));

    let (ip, lp) = write_pair(&dir, ".gz", &images, &encode_idx_labels(&labels[..3]));
    assert!(matches!(load_idx(&ip, &lp), Err(Error::Consistency(_))));

    let (ip, lp) = write_pair(&dir, ".gz", &images[..images.len() - 5], &label_bytes);
    assert!(matches!(load_idx(&ip, &lp), Err(Error::Length { .. })));

    let junk = dir.path().join("junk.idx.gz");
    std::fs::File::create(&junk).unwrap().write_all(b"not gzip at all").unwrap();
    assert!(matches!(load_idx(&junk, &lp), Err(Error::Format(_))));

    let missing = dir.path().join("absent.idx");
    assert!(matches!(load_idx(&missing, &lp), Err(Error::Io(_))));
}

fn bfs_distance(env: &GridWorld) -> Option<usize> {
    let mut dist = vec![usize::MAX; env.cell_count()];
    let mut queue = VecDeque::from([env.start_cell()]);
    dist[env.start_cell()] = 0;
    while let Some(c) = queue.pop_front() {
        if c == env.goal_cell() {
            return Some(dist[c]);
        }
        for a in Action::ALL {
            let n = env.next_cell(c, a);
            if dist[n] == usize::MAX {
                dist[n] = dist[c] + 1;
                queue.push_back(n);
            }
        }
    }
    None
}

fn random_grid() -> impl Strategy<Value = GridConfig> {
    (1usize..7, 1usize..7)
        .prop_filter("need two cells", |(w, h)| w * h >= 2)
        .prop_flat_map(|(w, h)| {
            let cell = (0..h, 0..w);
            (Just((w, h)), cell.clone(), cell, proptest::option::of(0u64..1000))
        })
        .prop_filter("start differs from goal", |(_, s, g, _)| s != g)
        .prop_map(|((width, height), start, goal, permutation_seed)| GridConfig {
            width,
            height,
            start,
            goal,
            permutation_seed,
            ..GridConfig::default()
        })
}

proptest! {
    #[test]
    fn oracle_return_is_negative_shortest_path(cfg in random_grid()) {
        let env = GridWorld::new(cfg).unwrap();
        let d = bfs_distance(&env).unwrap();
        let q = value_iteration(&env, 1.0, 1e-12);
        prop_assert_eq!(greedy_return(&env, &q), -(d as f64));
    }

    #[test]
    fn identical_actions_give_identical_trajectories(cfg in random_grid(), actions in proptest::collection::vec(0usize..4, 1..60)) {
        let mut a = GridWorld::new(cfg.clone()).unwrap();
        let mut b = GridWorld::new(cfg).unwrap();
        prop_assert_eq!(a.reset(), b.reset());
        for i in actions {
            if a.is_done() {
                break;
            }
            let act = Action::from_index(i).unwrap();
            prop_assert_eq!(a.step(act).unwrap(), b.step(act).unwrap());
        }
    }

    #[test]
    fn permutation_inverse_restores_one_hots(n in 1usize..40, seed in 0u64..10_000) {
        let p = Permutation::seeded(n, seed);
        for k in 0..n {
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            let there = p.permute_vector(&v);
            prop_assert_eq!(there.iter().filter(|&&x| x == 1.0).count(), 1);
            prop_assert_eq!(p.unpermute_vector(&there), v);
        }
    }
}
