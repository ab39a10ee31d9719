use mc_aixi::codec::Percept;
use mc_aixi::env::rps::{payoff, PAPER, ROCK, SCISSORS};
use mc_aixi::env::tiger::{LISTEN, OPEN_LEFT, OPEN_RIGHT, STAND};
use mc_aixi::env::{
    domain, make_env, optimal_average_reward, BiasedRps, CheeseMaze, Environment, Grid, KuhnPoker, TicTacToe, Tiger,
    CATALOG, CHEESE_MAZE_MAP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pearson statistic of observed counts against equal expected counts.
fn chi_square(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

// Upper 0.1% points of the chi-square distribution.
const CHI2_999: [f64; 8] = [0.0, 10.83, 13.82, 16.27, 18.47, 20.52, 22.46, 24.32];

#[test]
fn catalog_matches_the_parameter_table() {
    let rows: Vec<(&str, usize, u64, u32, u32, u32, usize, usize)> = CATALOG
        .iter()
        .map(|d| (d.name, d.action_count, d.obs_count, d.action_bits, d.obs_bits, d.reward_bits, d.depth, d.horizon))
        .collect();
    assert_eq!(
        rows,
        vec![
            ("cheese-maze", 4, 16, 2, 4, 5, 96, 8),
            ("tiger", 4, 3, 2, 2, 7, 96, 5),
            ("grid", 4, 1, 2, 1, 1, 96, 12),
            ("tictactoe", 9, 19683, 4, 18, 3, 64, 9),
            ("biased-rps", 3, 3, 2, 2, 2, 32, 4),
            ("kuhn-poker", 2, 6, 1, 4, 3, 42, 2),
            ("pacman", 4, 65536, 2, 16, 8, 64, 8),
        ]
    );
    for d in &CATALOG {
        assert_eq!(make_env(d.name, 0).unwrap().spec(), d.spec());
        assert_eq!(domain(d.name).unwrap().name, d.name);
    }
    assert!(make_env("chess", 0).is_err());
}

#[test]
fn rewards_stay_in_range_under_random_play() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in &CATALOG {
        let mut env = make_env(d.name, 7).unwrap();
        let spec = env.spec();
        for _ in 0..100_000 {
            let p = env.step(rng.gen_range(0..d.action_count));
            assert!((d.reward_min..=d.reward_max).contains(&p.reward), "{}: {p:?}", d.name);
            let bits = spec.encode_percept(p).unwrap();
            assert_eq!(spec.decode_percept(bits).unwrap(), p);
        }
    }
}

#[test]
fn same_seed_same_actions_same_percepts() {
    for d in &CATALOG {
        let actions: Vec<usize> = {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            (0..2000).map(|_| rng.gen_range(0..d.action_count)).collect()
        };
        let play = |env: &mut Box<dyn Environment>| actions.iter().map(|&a| env.step(a)).collect::<Vec<Percept>>();
        let mut a = make_env(d.name, 42).unwrap();
        let mut b = make_env(d.name, 42).unwrap();
        let first = play(&mut a);
        assert_eq!(first, play(&mut b), "{}", d.name);

        // A clone reseeded identically continues identically.
        let mut c = a.clone();
        a.reseed(5);
        c.reseed(5);
        assert_eq!(play(&mut a), play(&mut c), "{}", d.name);
    }
}

#[test]
fn grid_walls_and_goal() {
    let mut g = Grid::new(0);
    assert_eq!(g.step(0), Percept::new(0, 0));
    assert_eq!(g.position(), (0, 0));
    assert_eq!(g.step(3), Percept::new(0, 0));
    assert_eq!(g.position(), (0, 0));
    let route = [1, 1, 1, 2, 2];
    for a in route {
        assert_eq!(g.step(a).reward, 0);
    }
    assert_eq!(g.step(1).reward, 0);
    assert_eq!(g.position(), (2, 3));
    assert_eq!(g.step(2), Percept::new(0, 1));
    assert_eq!(g.position(), (0, 0));
}

#[test]
fn cheese_maze_respawns_after_the_cheese() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cheese = CHEESE_MAZE_MAP
        .lines()
        .enumerate()
        .find_map(|(r, line)| line.find('C').map(|c| (r, c)))
        .unwrap();
    let mut env = CheeseMaze::new(30);
    let mut found = 0;
    for _ in 0..20_000 {
        let p = env.step(rng.gen_range(0..4));
        if p.reward == 10 {
            found += 1;
            assert_ne!(env.position(), cheese);
            let spec = env.spec();
            assert!(spec.encode_percept(p).is_ok());
        }
    }
    assert!(found > 0);
}

#[test]
fn tiger_episode_resets_after_opening() {
    let mut env = Tiger::new(4);
    assert!(!env.standing());
    assert_eq!(env.step(OPEN_LEFT).reward, -10);
    assert_eq!(env.step(LISTEN).reward, -1);
    assert_eq!(env.step(STAND).reward, -1);
    assert!(env.standing());
    assert_eq!(env.step(LISTEN).reward, -10);
    let tiger_left = env.tiger_left();
    let r = env.step(if tiger_left { OPEN_RIGHT } else { OPEN_LEFT }).reward;
    assert_eq!(r, 10);
    assert!(!env.standing());
}

#[test]
fn tiger_listening_accuracy() {
    let mut env = Tiger::new(5);
    let mut correct = 0u64;
    for _ in 0..20_000 {
        let left = env.tiger_left();
        let o = env.step(LISTEN).observation;
        // Observation 1 hears the tiger on the left, 2 on the right.
        if (o == 1) == left {
            correct += 1;
        }
    }
    assert!((correct as f64 / 2e4 - 0.85).abs() < 0.01, "{correct}");
}

#[test]
fn tictactoe_opponent_is_uniform_over_empty_squares() {
    let mut env = TicTacToe::new(6);
    let mut counts = [0u64; 9];
    for _ in 0..10_000 {
        assert_eq!(env.board(), &[0; 9]);
        assert_eq!(env.step(4).reward, 0);
        let square = env.board().iter().position(|&s| s == 2).unwrap();
        counts[square] += 1;
        // Replaying the centre is illegal and ends the game.
        assert_eq!(env.step(4).reward, -3);
    }
    assert_eq!(counts[4], 0);
    let others: Vec<u64> = counts.iter().enumerate().filter(|&(i, _)| i != 4).map(|(_, &c)| c).collect();
    assert!(chi_square(&others) < CHI2_999[7], "{counts:?}");
}

#[test]
fn tictactoe_games_end_and_reset() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut env = TicTacToe::new(70);
    for _ in 0..10_000 {
        let empty: Vec<usize> = (0..9).filter(|&i| env.board()[i] == 0).collect();
        let p = env.step(empty[rng.gen_range(0..empty.len())]);
        if p.reward != 0 {
            assert_eq!(p.observation, 0);
            assert_eq!(env.board(), &[0; 9]);
        }
    }
}

#[test]
fn kuhn_deals_uniformly() {
    let mut env = KuhnPoker::new(80);
    let mut grid = [0u64; 9];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let (agent, opponent, _) = env.current_hand();
        assert_ne!(agent, opponent);
        grid[agent as usize * 3 + opponent as usize] += 1;
        let p = env.step(rng.gen_range(0..2));
        assert!([-2, -1, 1, 2].contains(&p.reward));
    }
    let counts: Vec<u64> = (0..9).filter(|i| i / 3 != i % 3).map(|i| grid[i]).collect();
    assert!(chi_square(&counts) < CHI2_999[5], "{counts:?}");
}

#[test]
fn rps_opponent_follows_its_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut env = BiasedRps::new(90);
    let mut free = [0u64; 3];
    let mut forced = 0u64;
    for _ in 0..30_000 {
        let was_predictable = env.predictable();
        let mine = rng.gen_range(0..3);
        let p = env.step(mine);
        assert_eq!(p.reward, payoff(mine as u64, p.observation));
        if was_predictable {
            assert_eq!(p.observation, ROCK);
            forced += 1;
        } else {
            free[p.observation as usize] += 1;
        }
        assert_eq!(env.predictable(), p.observation == ROCK && mine as u64 == SCISSORS);
    }
    assert!(forced > 1000, "{forced} {free:?}");
    assert!(chi_square(&free) < CHI2_999[2], "{free:?}");
    assert_eq!(payoff(PAPER, ROCK), 1);
    assert_eq!(payoff(ROCK, ROCK), 0);
    assert_eq!(payoff(SCISSORS, ROCK), -1);
}

#[test]
fn computed_optima() {
    assert!((optimal_average_reward("grid").unwrap() - 1.0 / 6.0).abs() < 1e-9);
    assert!((optimal_average_reward("kuhn-poker").unwrap() - 1.0 / 18.0).abs() < 1e-9);
    for name in ["cheese-maze", "tiger", "tictactoe", "biased-rps"] {
        let v = optimal_average_reward(name).unwrap();
        assert!(v.is_finite() && v > 0.0, "{name}: {v}");
    }
    assert!(optimal_average_reward("pacman").is_err());
}

#[test]
fn random_play_on_rps_breaks_even() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut env = BiasedRps::new(100);
    let total: i64 = (0..100_000).map(|_| env.step(rng.gen_range(0..3)).reward).sum();
    assert!((total as f64 / 1e5).abs() < 0.02);
}
