//! Partially observable Pacman.
//!
//! Actions are N, E, S, W. The agent never sees the maze; it receives 16
//! sensor bits, most significant first:
//!
//! | bits  | meaning                                             |
//! |-------|-----------------------------------------------------|
//! | 15–12 | wall adjacent to the N, E, S, W                     |
//! | 11–8  | ghost in line of sight to the N, E, S, W            |
//! | 7–4   | food in line of sight to the N, E, S, W             |
//! | 3–1   | nearest food within Manhattan distance 2, 3, 4      |
//! | 0     | under the effect of a power pill                    |
//!
//! Every move costs 1 (moving into a wall leaves Pacman in place), eating a
//! pellet pays 10 and clearing the maze pays a further 100. Being caught by
//! a ghost gives -50. Both clearing and being caught start a new episode
//! with fresh food: each open cell holds a pellet with probability 1/2 and
//! the four corners always hold power pills. A ghost within distance 5
//! chases Pacman, otherwise it wanders at random. While powered up, Pacman
//! sends a touched ghost back to its start instead of being caught.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{seeded, Environment, CATALOG};
use crate::codec::{Action, Percept, SpaceSpec};

/// `#` wall, `.` open, `o` power pill, `P` Pacman start, `G` ghost start.
pub const PACMAN_MAP: &str = "\
###########
#o...#...o#
#.##.#.##.#
#.........#
#.##.#.##.#
#...G.G...#
#.##.#.##.#
#....P....#
#.##.#.##.#
#o...#...o#
###########";

const MOVE: i64 = -1;
const PELLET: i64 = 10;
const CLEAR: i64 = 100;
const CAUGHT: i64 = -50;
const CHASE_DISTANCE: usize = 5;
const POWER_CYCLES: u32 = 10;

type Pos = (usize, usize);

const DIRECTIONS: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

#[derive(Debug)]
struct Maze {
    open: Vec<Vec<bool>>,
    pacman_start: Pos,
    ghost_starts: Vec<Pos>,
    pills: Vec<Pos>,
    /// Open cells that may hold a pellet.
    pellet_cells: Vec<Pos>,
}

impl Maze {
    fn parse(map: &str) -> Self {
        let mut open = Vec::new();
        let mut pacman_start = (0, 0);
        let mut ghost_starts = Vec::new();
        let mut pills = Vec::new();
        let mut pellet_cells = Vec::new();
        for (r, line) in map.lines().enumerate() {
            let mut row = Vec::new();
            for (c, ch) in line.chars().enumerate() {
                row.push(ch != '#');
                match ch {
                    'P' => pacman_start = (r, c),
                    'G' => ghost_starts.push((r, c)),
                    'o' => pills.push((r, c)),
                    '.' => pellet_cells.push((r, c)),
                    _ => {}
                }
            }
            open.push(row);
        }
        Self {
            open,
            pacman_start,
            ghost_starts,
            pills,
            pellet_cells,
        }
    }

    fn step(&self, (r, c): Pos, dir: usize) -> Option<Pos> {
        let (dr, dc) = DIRECTIONS[dir];
        let next = (r.checked_add_signed(dr)?, c.checked_add_signed(dc)?);
        self.open.get(next.0)?.get(next.1).copied().unwrap_or(false).then_some(next)
    }

    fn moves(&self, pos: Pos) -> Vec<Pos> {
        (0..4).filter_map(|d| self.step(pos, d)).collect()
    }
}

fn maze() -> &'static Maze {
    static MAZE: OnceLock<Maze> = OnceLock::new();
    MAZE.get_or_init(|| Maze::parse(PACMAN_MAP))
}

fn manhattan(a: Pos, b: Pos) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

#[derive(Debug, Clone)]
pub struct Pacman {
    pacman: Pos,
    ghosts: Vec<Pos>,
    food: BTreeSet<Pos>,
    pills: BTreeSet<Pos>,
    power: u32,
    rng: ChaCha8Rng,
}

impl Pacman {
    pub fn new(seed: u64) -> Self {
        let mut env = Self {
            pacman: (0, 0),
            ghosts: Vec::new(),
            food: BTreeSet::new(),
            pills: BTreeSet::new(),
            power: 0,
            rng: seeded(seed),
        };
        env.reset();
        env
    }

    fn reset(&mut self) {
        let m = maze();
        self.pacman = m.pacman_start;
        self.ghosts = m.ghost_starts.clone();
        self.power = 0;
        self.pills = m.pills.iter().copied().collect();
        self.food = m.pellet_cells.iter().copied().filter(|_| self.rng.gen_bool(0.5)).collect();
    }

    pub fn pacman(&self) -> (usize, usize) {
        self.pacman
    }

    pub fn ghosts(&self) -> &[(usize, usize)] {
        &self.ghosts
    }

    pub fn food_left(&self) -> usize {
        self.food.len() + self.pills.len()
    }

    /// The 16-bit sensor reading for the current state.
    pub fn observation(&self) -> u64 {
        let m = maze();
        let mut obs = 0u64;
        for dir in 0..4 {
            let shift = 3 - dir;
            if m.step(self.pacman, dir).is_none() {
                obs |= 1 << (12 + shift);
            }
            let mut pos = self.pacman;
            let (mut ghost, mut food) = (false, false);
            while let Some(next) = m.step(pos, dir) {
                ghost |= self.ghosts.contains(&next);
                food |= self.has_food(next);
                pos = next;
            }
            obs |= u64::from(ghost) << (8 + shift);
            obs |= u64::from(food) << (4 + shift);
        }
        let nearest = self
            .food
            .iter()
            .chain(&self.pills)
            .map(|&f| manhattan(f, self.pacman))
            .min();
        if let Some(d) = nearest {
            for (bit, limit) in [(3, 2), (2, 3), (1, 4)] {
                if d <= limit {
                    obs |= 1 << bit;
                }
            }
        }
        obs | u64::from(self.power > 0)
    }

    fn has_food(&self, pos: Pos) -> bool {
        self.food.contains(&pos) || self.pills.contains(&pos)
    }

    fn move_ghosts(&mut self) {
        let m = maze();
        for i in 0..self.ghosts.len() {
            let here = self.ghosts[i];
            let options = m.moves(here);
            if options.is_empty() {
                continue;
            }
            let next = if manhattan(here, self.pacman) <= CHASE_DISTANCE {
                let best = options.iter().map(|&p| manhattan(p, self.pacman)).min().unwrap();
                let closest: Vec<Pos> = options.into_iter().filter(|&p| manhattan(p, self.pacman) == best).collect();
                *closest.choose(&mut self.rng).unwrap()
            } else {
                *options.choose(&mut self.rng).unwrap()
            };
            self.ghosts[i] = next;
        }
    }

    /// Resolves contact with ghosts; true if Pacman was caught.
    fn collide(&mut self, previous: &[Pos], pacman_before: Pos) -> bool {
        let m = maze();
        for i in 0..self.ghosts.len() {
            let met = self.ghosts[i] == self.pacman
                || (self.ghosts[i] == pacman_before && previous.get(i) == Some(&self.pacman));
            if met {
                if self.power > 0 {
                    self.ghosts[i] = m.ghost_starts[i];
                } else {
                    return true;
                }
            }
        }
        false
    }
}

impl Environment for Pacman {
    fn name(&self) -> &'static str {
        "pacman"
    }

    fn spec(&self) -> SpaceSpec {
        CATALOG[6].spec()
    }

    fn step(&mut self, action: Action) -> Percept {
        let m = maze();
        self.power = self.power.saturating_sub(1);
        let before = self.pacman;
        if let Some(next) = m.step(self.pacman, action) {
            self.pacman = next;
        }
        let mut reward = MOVE;
        if self.food.remove(&self.pacman) {
            reward += PELLET;
        }
        if self.pills.remove(&self.pacman) {
            reward += PELLET;
            self.power = POWER_CYCLES;
        }
        let ghosts_before = self.ghosts.clone();
        let caught = self.collide(&[], before) || {
            self.move_ghosts();
            self.collide(&ghosts_before, before)
        };
        if caught {
            self.reset();
            return Percept::new(self.observation(), CAUGHT);
        }
        if self.food_left() == 0 {
            reward += CLEAR;
            self.reset();
        }
        Percept::new(self.observation(), reward)
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = seeded(seed);
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}
