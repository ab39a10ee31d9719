//! Repeated tic-tac-toe against an opponent who plays uniformly at random.
//!
//! The agent moves first; action `i` marks square `i` (row-major). The
//! observation is the board, two bits per square with square 0 most
//! significant: 00 empty, 01 agent, 10 opponent. Rewards: win 2, draw 1,
//! loss -2, playing an occupied square -3; each of these ends the game and
//! the next observation is the empty board.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{seeded, Environment, FiniteMdp, CATALOG};
use crate::codec::{Action, Percept, SpaceSpec};

const WIN: i64 = 2;
const DRAW: i64 = 1;
const LOSS: i64 = -2;
const ILLEGAL: i64 = -3;

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

/// 0 empty, 1 agent, 2 opponent.
pub type Board = [u8; 9];

pub fn encode_board(board: &Board) -> u64 {
    board.iter().fold(0, |acc, &s| acc << 2 | u64::from(s))
}

fn wins(board: &Board, player: u8) -> bool {
    LINES.iter().any(|l| l.iter().all(|&i| board[i] == player))
}

fn empty_squares(board: &Board) -> Vec<usize> {
    (0..9).filter(|&i| board[i] == 0).collect()
}

/// Outcome of the agent playing `square`: either the game ends with a
/// reward, or it continues and the opponent replies on one of the empty
/// squares of the returned board.
enum AgentMove {
    Ends(i64),
    Continues(Board),
}

fn agent_move(board: &Board, square: usize) -> AgentMove {
    if board[square] != 0 {
        return AgentMove::Ends(ILLEGAL);
    }
    let mut next = *board;
    next[square] = 1;
    if wins(&next, 1) {
        AgentMove::Ends(WIN)
    } else if empty_squares(&next).is_empty() {
        AgentMove::Ends(DRAW)
    } else {
        AgentMove::Continues(next)
    }
}

/// Result of the opponent marking `square`: board after reply, or loss.
fn opponent_reply(board: &Board, square: usize) -> Option<Board> {
    let mut next = *board;
    next[square] = 2;
    if wins(&next, 2) {
        None
    } else {
        Some(next)
    }
}

#[derive(Debug, Clone)]
pub struct TicTacToe {
    board: Board,
    rng: ChaCha8Rng,
}

impl TicTacToe {
    pub fn new(seed: u64) -> Self {
        Self {
            board: [0; 9],
            rng: seeded(seed),
        }
    }

    pub fn board(&self) -> &Board {
        &self.board
    }
}

impl Environment for TicTacToe {
    fn name(&self) -> &'static str {
        "tictactoe"
    }

    fn spec(&self) -> SpaceSpec {
        CATALOG[3].spec()
    }

    fn step(&mut self, action: Action) -> Percept {
        let reward = match agent_move(&self.board, action) {
            AgentMove::Ends(r) => {
                self.board = [0; 9];
                r
            }
            AgentMove::Continues(board) => {
                let empty = empty_squares(&board);
                let square = empty[self.rng.gen_range(0..empty.len())];
                match opponent_reply(&board, square) {
                    Some(next) => {
                        // Opponent never fills the board: the agent moves
                        // five times to its four.
                        self.board = next;
                        0
                    }
                    None => {
                        self.board = [0; 9];
                        LOSS
                    }
                }
            }
        };
        Percept::new(encode_board(&self.board), reward)
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = seeded(seed);
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

/// Average-reward MDP over the boards on which the agent is to move.
pub(super) fn optimal_average_reward() -> f64 {
    let mut index: HashMap<Board, usize> = HashMap::new();
    let mut boards = vec![[0u8; 9]];
    index.insert([0; 9], 0);
    let mut states = Vec::new();
    let mut i = 0;
    while i < boards.len() {
        let board = boards[i];
        let mut actions = Vec::new();
        for square in 0..9 {
            let outcomes = match agent_move(&board, square) {
                AgentMove::Ends(r) => vec![(1.0, 0, r as f64)],
                AgentMove::Continues(after) => {
                    let empty = empty_squares(&after);
                    let p = 1.0 / empty.len() as f64;
                    empty
                        .iter()
                        .map(|&reply| match opponent_reply(&after, reply) {
                            None => (p, 0, LOSS as f64),
                            Some(next) => {
                                let id = *index.entry(next).or_insert_with(|| {
                                    boards.push(next);
                                    boards.len() - 1
                                });
                                (p, id, 0.0)
                            }
                        })
                        .collect()
                }
            };
            actions.push(outcomes);
        }
        states.push(actions);
        i += 1;
    }
    let mut mdp = FiniteMdp::new();
    for actions in states {
        mdp.add_state(actions);
    }
    mdp.optimal_average_reward(1e-13)
}
