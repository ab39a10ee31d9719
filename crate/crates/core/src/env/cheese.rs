//! Cheese maze: a mouse in an eleven-cell maze senses only the walls around
//! it and must find the cheese.
//!
//! Actions are N, E, S, W. The observation is the wall pattern of the
//! current cell (N=8, E=4, S=2, W=1), so several cells look identical.
//! Moving costs 1, bumping into a wall costs 10, reaching the cheese pays 10
//! and respawns the mouse at a uniformly random non-cheese cell.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{seeded, Environment, FiniteMdp, CATALOG};
use crate::codec::{Action, Percept, SpaceSpec};

/// `#` wall, `.` open cell, `C` cheese.
pub const CHEESE_MAZE_MAP: &str = "\
#######
#.....#
#.#.#.#
#.#C#.#
#######";

const BUMP: i64 = -10;
const MOVE: i64 = -1;
const CHEESE: i64 = 10;

#[derive(Debug)]
struct Layout {
    cells: Vec<(usize, usize)>,
    /// (next cell, bumped) per cell and action.
    moves: Vec<[(usize, bool); 4]>,
    observations: Vec<u64>,
    cheese: usize,
}

impl Layout {
    fn parse(map: &str) -> Self {
        let grid: Vec<Vec<u8>> = map.lines().map(|l| l.as_bytes().to_vec()).collect();
        let mut cells = Vec::new();
        let mut cheese = usize::MAX;
        for (r, row) in grid.iter().enumerate() {
            for (c, &ch) in row.iter().enumerate() {
                if ch != b'#' {
                    if ch == b'C' {
                        cheese = cells.len();
                    }
                    cells.push((r, c));
                }
            }
        }
        let index: HashMap<(usize, usize), usize> = cells.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut moves = Vec::new();
        let mut observations = Vec::new();
        for &(r, c) in &cells {
            let neighbours = [(r - 1, c), (r, c + 1), (r + 1, c), (r, c - 1)];
            let mut obs = 0;
            let mut m = [(0, false); 4];
            for (a, n) in neighbours.iter().enumerate() {
                match index.get(n) {
                    Some(&j) => m[a] = (j, false),
                    None => {
                        m[a] = (index[&(r, c)], true);
                        obs |= 8 >> a;
                    }
                }
            }
            moves.push(m);
            observations.push(obs);
        }
        Self {
            cells,
            moves,
            observations,
            cheese,
        }
    }

    fn respawn_cells(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&i| i != self.cheese).collect()
    }
}

fn layout() -> &'static Layout {
    use std::sync::OnceLock;
    static LAYOUT: OnceLock<Layout> = OnceLock::new();
    LAYOUT.get_or_init(|| Layout::parse(CHEESE_MAZE_MAP))
}

#[derive(Debug, Clone)]
pub struct CheeseMaze {
    cell: usize,
    rng: ChaCha8Rng,
}

impl CheeseMaze {
    pub fn new(seed: u64) -> Self {
        let mut rng = seeded(seed);
        let cell = Self::random_cell(&mut rng);
        Self { cell, rng }
    }

    fn random_cell(rng: &mut ChaCha8Rng) -> usize {
        let cells = layout().respawn_cells();
        cells[rng.gen_range(0..cells.len())]
    }

    /// (row, column) of the mouse in [`CHEESE_MAZE_MAP`].
    pub fn position(&self) -> (usize, usize) {
        layout().cells[self.cell]
    }
}

impl Environment for CheeseMaze {
    fn name(&self) -> &'static str {
        "cheese-maze"
    }

    fn spec(&self) -> SpaceSpec {
        CATALOG[0].spec()
    }

    fn step(&mut self, action: Action) -> Percept {
        let l = layout();
        let (next, bumped) = l.moves[self.cell][action];
        let reward = if bumped {
            BUMP
        } else if next == l.cheese {
            CHEESE
        } else {
            MOVE
        };
        self.cell = if next == l.cheese { Self::random_cell(&mut self.rng) } else { next };
        Percept::new(l.observations[self.cell], reward)
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = seeded(seed);
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

/// Solves the belief MDP. Transitions are deterministic, so a belief is a
/// multiset of cells (relative weights, reduced by their gcd) and is
/// refined by each (observation, reward) pair.
pub(super) fn optimal_average_reward() -> f64 {
    let l = layout();
    let n = l.cells.len();
    let respawn = l.respawn_cells();
    let respawn_belief = |obs: u64| -> Vec<u32> {
        (0..n)
            .map(|i| u32::from(i != l.cheese && l.observations[i] == obs))
            .collect()
    };

    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut beliefs: Vec<Vec<u32>> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |b: Vec<u32>, beliefs: &mut Vec<Vec<u32>>, queue: &mut VecDeque<usize>| -> usize {
        let b = reduce(b);
        *index.entry(b.clone()).or_insert_with(|| {
            beliefs.push(b);
            queue.push_back(beliefs.len() - 1);
            beliefs.len() - 1
        })
    };
    for &c in &respawn {
        intern(respawn_belief(l.observations[c]), &mut beliefs, &mut queue);
    }

    let mut transitions: Vec<Vec<Vec<(f64, usize, f64)>>> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let belief = beliefs[s].clone();
        let total: f64 = belief.iter().map(|&w| f64::from(w)).sum();
        let mut actions = Vec::new();
        for a in 0..4 {
            // (reward, obs) -> (probability, next belief weights)
            let mut groups: BTreeMap<(i64, u64), (f64, Vec<u32>)> = BTreeMap::new();
            for (i, &w) in belief.iter().enumerate().filter(|(_, &w)| w > 0) {
                let p = f64::from(w) / total;
                let (next, bumped) = l.moves[i][a];
                if !bumped && next == l.cheese {
                    for &j in &respawn {
                        let key = (CHEESE, l.observations[j]);
                        let entry = groups.entry(key).or_insert_with(|| (0.0, respawn_belief(key.1)));
                        entry.0 += p / respawn.len() as f64;
                    }
                } else {
                    let reward = if bumped { BUMP } else { MOVE };
                    let entry = groups
                        .entry((reward, l.observations[next]))
                        .or_insert_with(|| (0.0, vec![0; n]));
                    entry.0 += p;
                    entry.1[next] += w;
                }
            }
            let outcomes = groups
                .into_iter()
                .map(|((reward, _), (p, next))| (p, intern(next, &mut beliefs, &mut queue), reward as f64))
                .collect();
            actions.push(outcomes);
        }
        transitions.push(actions);
    }
    let mut mdp = FiniteMdp::new();
    for actions in transitions {
        mdp.add_state(actions);
    }
    mdp.optimal_average_reward(1e-13)
}

fn reduce(mut weights: Vec<u32>) -> Vec<u32> {
    fn gcd(a: u32, b: u32) -> u32 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let g = weights.iter().fold(0, |g, &w| gcd(g, w));
    if g > 1 {
        weights.iter_mut().for_each(|w| *w /= g);
    }
    weights
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_has_eleven_cells_and_aliased_observations() {
        let l = layout();
        assert_eq!(l.cells.len(), 11);
        let mut obs = l.observations.clone();
        obs.sort();
        assert_eq!(obs, vec![5, 5, 5, 7, 7, 7, 8, 9, 10, 10, 12]);
        assert_eq!(l.cells[l.cheese], (3, 3));
    }

    #[test]
    fn bump_and_move_rewards() {
        let mut m = CheeseMaze::new(0);
        m.cell = 0; // top-left corner
        assert_eq!(m.step(0), Percept::new(9, BUMP));
        assert_eq!(m.step(1), Percept::new(10, MOVE));
        assert_eq!(m.position(), (1, 2));
    }

    #[test]
    fn cheese_pays_and_respawns() {
        let mut m = CheeseMaze::new(5);
        for _ in 0..200 {
            m.cell = layout().cells.iter().position(|&p| p == (2, 3)).unwrap();
            let p = m.step(2);
            assert_eq!(p.reward, CHEESE);
            assert_ne!(m.cell, layout().cheese);
            assert_eq!(p.observation, layout().observations[m.cell]);
        }
    }

    #[test]
    fn optimum_is_between_bounds() {
        let g = optimal_average_reward();
        // A cheese every k moves pays (10 - (k - 1)) / k; from the middle
        // shaft it is 2 moves, from the far shafts at most 7.
        assert!(g > 0.0 && g < 4.5, "{g}");
    }
}
