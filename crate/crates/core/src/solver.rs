//! Heuristic puzzle solvers used by nodes competing with human miners.
//!
//! Finding the optimal arrangement is treated as out of reach; these
//! searches look for good scores inside the move budget.

use std::cmp::Reverse;
use std::collections::HashSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::puzzle::{Move, Puzzle, Score, Solution, MAX_MOVES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub move_budget: usize,
    pub beam_width: usize,
    pub random_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            move_budget: MAX_MOVES,
            beam_width: 32,
            random_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_width(beam_width: usize) -> Self {
        SolverConfig {
            beam_width,
            ..Self::default()
        }
    }

    fn budget(&self) -> usize {
        self.move_budget.min(MAX_MOVES)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub solution: Solution,
    pub score: Score,
}

#[derive(Clone)]
struct State {
    puzzle: Puzzle,
    moves: Vec<Move>,
    score: Score,
}

impl State {
    fn root(puzzle: &Puzzle) -> Self {
        State {
            score: puzzle.score(),
            puzzle: puzzle.clone(),
            moves: Vec::new(),
        }
    }

    fn child(&self, mv: Move) -> Option<State> {
        let puzzle = self.puzzle.apply_move(mv).ok()?;
        let mut moves = self.moves.clone();
        moves.push(mv);
        Some(State {
            score: puzzle.score(),
            puzzle,
            moves,
        })
    }

    fn children(&self) -> impl Iterator<Item = State> + '_ {
        Move::ALL.into_iter().filter_map(|m| self.child(m))
    }

    /// First strictly best improving child in U, D, L, R order.
    fn greedy_child(&self) -> Option<State> {
        let mut best: Option<State> = None;
        for child in self.children() {
            if child.score > best.as_ref().map_or(self.score, |b| b.score) {
                best = Some(child);
            }
        }
        best
    }

    fn into_result(self) -> SolveResult {
        SolveResult {
            solution: Solution::new(self.moves).expect("search depth is bounded by the move budget"),
            score: self.score,
        }
    }
}

/// Hill climbing: take the best strictly improving move until none exists
/// or the budget runs out.
pub fn greedy_solve(puzzle: &Puzzle, cfg: &SolverConfig) -> SolveResult {
    let mut state = State::root(puzzle);
    while state.moves.len() < cfg.budget() {
        match state.greedy_child() {
            Some(next) => state = next,
            None => break,
        }
    }
    state.into_result()
}

/// Beam search with a reserved greedy lineage.
///
/// Runs passes of width 1, 2, 4, ... up to `beam_width` (the last pass uses
/// `beam_width` exactly) and keeps the best result, preferring fewer moves
/// on equal score. Each pass reserves one slot for the greedy path, so the
/// result is never worse than [`greedy_solve`] and never worse than any
/// smaller power-of-two width. Width 1 is greedy exactly.
pub fn beam_solve(puzzle: &Puzzle, cfg: &SolverConfig) -> SolveResult {
    let target = cfg.beam_width.max(1);
    let mut best: Option<State> = None;
    let mut width = 1;
    loop {
        let found = beam_pass(puzzle, width, cfg);
        let better = best.as_ref().is_none_or(|b| {
            found.score > b.score || (found.score == b.score && found.moves.len() < b.moves.len())
        });
        if better {
            best = Some(found);
        }
        if width == target {
            break;
        }
        width = (width * 2).min(target);
    }
    best.expect("at least one pass runs").into_result()
}

/// One beam pass. One slot follows the greedy path; the other `width - 1`
/// hold the best unvisited children of all kept states, ranked by score
/// and then a seeded random key.
fn beam_pass(puzzle: &Puzzle, width: usize, cfg: &SolverConfig) -> State {
    let explore_slots = width - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.random_seed);

    let root = State::root(puzzle);
    let mut best = root.clone();
    let mut visited: HashSet<Puzzle> = HashSet::from([root.puzzle.clone()]);
    let mut lineage = Some(root);
    let mut explore: Vec<State> = Vec::new();

    for _ in 0..cfg.budget() {
        let next_lineage = lineage.as_ref().and_then(State::greedy_child);

        let mut candidates: Vec<(State, u64)> = Vec::new();
        if explore_slots > 0 {
            if let Some(line) = &next_lineage {
                visited.insert(line.puzzle.clone());
            }
            for parent in lineage.iter().chain(explore.iter()) {
                for child in parent.children() {
                    if visited.insert(child.puzzle.clone()) {
                        let key = rng.next_u64();
                        candidates.push((child, key));
                    }
                }
            }
            candidates.sort_by_key(|(s, key)| (Reverse(s.score), *key));
            candidates.truncate(explore_slots);
        }

        lineage = next_lineage;
        explore = candidates.into_iter().map(|(s, _)| s).collect();
        if lineage.is_none() && explore.is_empty() {
            break;
        }
        for state in lineage.iter().chain(explore.iter()) {
            if state.score > best.score {
                best = state.clone();
            }
        }
    }
    best
}
