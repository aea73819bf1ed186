//! Shared score test vectors: start puzzles, move strings and the score
//! the moves reach. Clients replay these to check their scoring.

use mifty_core::chain::{Address, BlockTemplate, Hash, DEFAULT_MAGIC_CAP};
use mifty_core::puzzle::{Move, Puzzle, Solution, TILE_COUNT};
use mifty_core::solver::{beam_solve, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vector {
    pub puzzle_hex: String,
    pub moves: String,
    pub expected_score: u32,
}

impl Vector {
    fn new(puzzle: &Puzzle, moves: &[Move]) -> Vector {
        let solution = Solution::new(moves.to_vec()).expect("vector walks stay within the move limit");
        let end = puzzle.apply_solution(&solution).expect("vector walks only make legal moves");
        Vector {
            puzzle_hex: puzzle.to_hex(),
            moves: solution.encode(),
            expected_score: end.score(),
        }
    }

    /// Recomputes the score from the recorded puzzle and moves.
    pub fn check(&self) -> Result<u32, String> {
        let puzzle = Puzzle::from_hex(&self.puzzle_hex).map_err(|e| e.to_string())?;
        let solution = Solution::decode(&self.moves).map_err(|e| e.to_string())?;
        let end = puzzle.apply_solution(&solution).map_err(|e| e.to_string())?;
        Ok(end.score())
    }
}

fn random_walk(puzzle: &Puzzle, len: usize, rng: &mut ChaCha8Rng) -> Vec<Move> {
    let mut p = puzzle.clone();
    let mut moves = Vec::with_capacity(len);
    for _ in 0..len {
        let legal = p.legal_moves();
        let mv = legal[rng.gen_range(0..legal.len())];
        p = p.apply_move(mv).expect("chosen from legal moves");
        moves.push(mv);
    }
    moves
}

/// `count` vectors from `seed`. The first few are fixed fixtures; the rest
/// alternate between random grids with random walks and real start
/// puzzles with solver output.
pub fn generate(count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let fixtures = [
        (Puzzle::from_tiles([0xFF; TILE_COUNT], 24).expect("valid blank"), Vec::new()),
        (Puzzle::from_tiles([0x00; TILE_COUNT], 24).expect("valid blank"), vec![Move::U, Move::L]),
        (Puzzle::from_tiles([0xA0; TILE_COUNT], 0).expect("valid blank"), vec![Move::R, Move::D]),
    ];
    for (puzzle, moves) in fixtures.into_iter().take(count) {
        out.push(Vector::new(&puzzle, &moves));
    }
    let mut i = 0u64;
    while out.len() < count {
        i += 1;
        if i.is_multiple_of(2) {
            let template = BlockTemplate {
                number: i,
                timestamp: 1_700_000_400_000 + i * 600_000,
                prev_hash: Hash(rng.gen()),
                solver: Address(rng.gen()),
                tx_ids: Vec::new(),
            };
            let start = template
                .find_magic(DEFAULT_MAGIC_CAP)
                .expect("zero-score start found within the cap")
                .start_puzzle;
            let solved = beam_solve(
                &start,
                &SolverConfig {
                    beam_width: 4,
                    random_seed: i,
                    ..SolverConfig::default()
                },
            );
            out.push(Vector::new(&start, solved.solution.moves()));
        } else {
            let tiles: [u8; TILE_COUNT] = rng.gen();
            let puzzle = Puzzle::from_tiles(tiles, rng.gen_range(0..25)).expect("blank index in range");
            let len = rng.gen_range(0..=125);
            let moves = random_walk(&puzzle, len, &mut rng);
            out.push(Vector::new(&puzzle, &moves));
        }
    }
    out
}
