//! Tiles, 5×5 sliding puzzles, moves, scoring and hash-driven generation.
//!
//! A tile is one byte. Its eight bits sit around the perimeter of a square:
//!
//! ```text
//! b0 b1 b2
//! b7    b3
//! b6 b5 b4
//! ```
//!
//! `b0` is the most significant bit. Each side is the triple of dots along
//! it; corner bits belong to two sides. Two adjacent tiles match when their
//! touching sides carry the same three dots.
//!
//! The score counts every matching adjacent pair once. A per-tile reading
//! of the rule would double every score; pair counting keeps the same
//! ordering between puzzles, which is all fork choice relies on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Grid width and height.
pub const GRID_SIZE: usize = 5;
/// Number of cells in the grid.
pub const CELL_COUNT: usize = GRID_SIZE * GRID_SIZE;
/// Number of tiles (every cell except the blank).
pub const TILE_COUNT: usize = CELL_COUNT - 1;
/// Maximum number of moves in a solution.
pub const MAX_MOVES: usize = 125;
/// Length in bytes of the canonical puzzle encoding.
pub const ENCODED_PUZZLE_LEN: usize = 25;
/// Upper bound on any score: 40 grid adjacencies minus the two touching a corner blank.
pub const MAX_SCORE: Score = 38;

/// Count of matching adjacent side pairs.
pub type Score = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PuzzleError {
    #[error("illegal move {mv} at step {step}")]
    IllegalMove { step: usize, mv: Move },
    #[error("solution has {0} moves, limit is {MAX_MOVES}")]
    SolutionTooLong(usize),
    #[error("digest must be 32 bytes, got {0}")]
    BadDigestLength(usize),
    #[error("malformed encoding: {0}")]
    MalformedEncoding(String),
    #[error("grid must contain exactly one blank")]
    BlankCount,
}

/// One tile byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tile(pub u8);

/// Three dots along one side, read top→bottom or left→right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Side(pub [bool; 3]);

/// The four sides of a tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileSides {
    pub top: Side,
    pub right: Side,
    pub bottom: Side,
    pub left: Side,
}

impl Tile {
    /// Bit `b{index}` of the perimeter layout, `b0` being the MSB.
    pub fn bit(self, index: usize) -> bool {
        debug_assert!(index < 8);
        (self.0 >> (7 - index)) & 1 == 1
    }

    pub fn top(self) -> Side {
        Side([self.bit(0), self.bit(1), self.bit(2)])
    }

    pub fn right(self) -> Side {
        Side([self.bit(2), self.bit(3), self.bit(4)])
    }

    pub fn bottom(self) -> Side {
        Side([self.bit(6), self.bit(5), self.bit(4)])
    }

    pub fn left(self) -> Side {
        Side([self.bit(0), self.bit(7), self.bit(6)])
    }

    pub fn sides(self) -> TileSides {
        TileSides {
            top: self.top(),
            right: self.right(),
            bottom: self.bottom(),
            left: self.left(),
        }
    }
}

/// Positionwise equality of two touching sides.
pub fn sides_match(a: Side, b: Side) -> bool {
    a == b
}

/// Direction the blank travels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    U,
    D,
    L,
    R,
}

impl Move {
    /// Fixed tie-break order.
    pub const ALL: [Move; 4] = [Move::U, Move::D, Move::L, Move::R];

    pub fn opposite(self) -> Move {
        match self {
            Move::U => Move::D,
            Move::D => Move::U,
            Move::L => Move::R,
            Move::R => Move::L,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Move::U => 'U',
            Move::D => 'D',
            Move::L => 'L',
            Move::R => 'R',
        }
    }

    pub fn from_char(c: char) -> Option<Move> {
        match c {
            'U' => Some(Move::U),
            'D' => Some(Move::D),
            'L' => Some(Move::L),
            'R' => Some(Move::R),
            _ => None,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Production scorer for a row-major grid of arbitrary width.
///
/// Only right and down neighbours are inspected, so each adjacent pair is
/// counted once. Blank cells contribute nothing.
pub fn score_cells(cells: &[Option<Tile>], width: usize) -> Score {
    let mut total = 0;
    for (index, cell) in cells.iter().enumerate() {
        let Some(tile) = cell else { continue };
        let col = index % width;
        if col + 1 < width {
            if let Some(right) = cells[index + 1] {
                total += sides_match(tile.right(), right.left()) as Score;
            }
        }
        if let Some(Some(below)) = cells.get(index + width) {
            total += sides_match(tile.bottom(), below.top()) as Score;
        }
    }
    total
}

/// A 5×5 grid holding 24 tiles and one blank.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Puzzle {
    cells: [Option<Tile>; CELL_COUNT],
    blank: usize,
}

impl Puzzle {
    /// Builds a puzzle from raw cells; exactly one cell must be `None`.
    pub fn from_cells(cells: [Option<Tile>; CELL_COUNT]) -> Result<Self, PuzzleError> {
        let mut blanks = cells.iter().enumerate().filter(|(_, c)| c.is_none());
        let (blank, _) = blanks.next().ok_or(PuzzleError::BlankCount)?;
        if blanks.next().is_some() {
            return Err(PuzzleError::BlankCount);
        }
        Ok(Puzzle { cells, blank })
    }

    /// Tiles in row-major order with the blank at `blank_index`.
    pub fn from_tiles(tiles: [u8; TILE_COUNT], blank_index: usize) -> Result<Self, PuzzleError> {
        if blank_index >= CELL_COUNT {
            return Err(PuzzleError::BlankCount);
        }
        let mut cells = [None; CELL_COUNT];
        let mut it = tiles.iter();
        for (index, cell) in cells.iter_mut().enumerate() {
            if index != blank_index {
                *cell = it.next().map(|&b| Tile(b));
            }
        }
        Ok(Puzzle {
            cells,
            blank: blank_index,
        })
    }

    pub fn cells(&self) -> &[Option<Tile>; CELL_COUNT] {
        &self.cells
    }

    pub fn blank_index(&self) -> usize {
        self.blank
    }

    /// The 24 tile bytes in row-major order, skipping the blank.
    pub fn tiles(&self) -> [u8; TILE_COUNT] {
        let mut out = [0u8; TILE_COUNT];
        for (slot, tile) in out.iter_mut().zip(self.cells.iter().flatten()) {
            *slot = tile.0;
        }
        out
    }

    pub fn score(&self) -> Score {
        score_cells(&self.cells, GRID_SIZE)
    }

    fn neighbour(&self, mv: Move) -> Option<usize> {
        let (row, col) = (self.blank / GRID_SIZE, self.blank % GRID_SIZE);
        match mv {
            Move::U if row > 0 => Some(self.blank - GRID_SIZE),
            Move::D if row + 1 < GRID_SIZE => Some(self.blank + GRID_SIZE),
            Move::L if col > 0 => Some(self.blank - 1),
            Move::R if col + 1 < GRID_SIZE => Some(self.blank + 1),
            _ => None,
        }
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        self.neighbour(mv).is_some()
    }

    /// Legal moves in U, D, L, R order.
    pub fn legal_moves(&self) -> Vec<Move> {
        Move::ALL.into_iter().filter(|m| self.is_legal(*m)).collect()
    }

    /// Swaps the blank with its neighbour in direction `mv`.
    pub fn apply_move(&self, mv: Move) -> Result<Puzzle, PuzzleError> {
        let mut next = self.clone();
        next.apply_move_in_place(mv, 0)?;
        Ok(next)
    }

    pub(crate) fn apply_move_in_place(&mut self, mv: Move, step: usize) -> Result<(), PuzzleError> {
        let target = self
            .neighbour(mv)
            .ok_or(PuzzleError::IllegalMove { step, mv })?;
        self.cells.swap(self.blank, target);
        self.blank = target;
        Ok(())
    }

    /// Applies every move in order and returns the ending puzzle.
    pub fn apply_solution(&self, solution: &Solution) -> Result<Puzzle, PuzzleError> {
        self.apply_moves(solution.moves())
    }

    /// Like [`Puzzle::apply_solution`] for an unchecked move list.
    pub fn apply_moves(&self, moves: &[Move]) -> Result<Puzzle, PuzzleError> {
        if moves.len() > MAX_MOVES {
            return Err(PuzzleError::SolutionTooLong(moves.len()));
        }
        let mut current = self.clone();
        for (step, mv) in moves.iter().enumerate() {
            current.apply_move_in_place(*mv, step)?;
        }
        Ok(current)
    }

    /// Canonical 25-byte encoding: 5 bits of blank index, the 24 tile bytes
    /// in row-major order, then 3 zero padding bits. All MSB first.
    pub fn encode(&self) -> [u8; ENCODED_PUZZLE_LEN] {
        let mut writer = BitWriter::default();
        writer.push(self.blank as u32, 5);
        for tile in self.cells.iter().flatten() {
            writer.push(tile.0 as u32, 8);
        }
        writer.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Puzzle, PuzzleError> {
        if bytes.len() != ENCODED_PUZZLE_LEN {
            return Err(PuzzleError::MalformedEncoding(format!(
                "expected {ENCODED_PUZZLE_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let mut reader = BitReader::new(bytes);
        let blank = reader.take(5) as usize;
        if blank >= CELL_COUNT {
            return Err(PuzzleError::MalformedEncoding(format!(
                "blank index {blank} out of range"
            )));
        }
        let mut tiles = [0u8; TILE_COUNT];
        for tile in tiles.iter_mut() {
            *tile = reader.take(8) as u8;
        }
        if reader.take(3) != 0 {
            return Err(PuzzleError::MalformedEncoding("nonzero padding".into()));
        }
        Puzzle::from_tiles(tiles, blank)
    }

    /// Encoding rendered as 50 lowercase hex characters.
    pub fn to_hex(&self) -> String {
        hex::encode(self.encode())
    }

    pub fn from_hex(text: &str) -> Result<Puzzle, PuzzleError> {
        if text.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(PuzzleError::MalformedEncoding("hex must be lowercase".into()));
        }
        let bytes = hex::decode(text).map_err(|e| PuzzleError::MalformedEncoding(e.to_string()))?;
        Puzzle::decode(&bytes)
    }
}

impl fmt::Debug for Puzzle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Puzzle({})", self.to_hex())
    }
}

impl fmt::Display for Puzzle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(GRID_SIZE) {
            let line: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Some(t) => format!("{:02x}", t.0),
                    None => "..".to_string(),
                })
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl Serialize for Puzzle {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Puzzle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Puzzle::from_hex(&text).map_err(serde::de::Error::custom)
    }
}

/// Builds the starting puzzle for a block digest.
///
/// Tile `i` (1-based, row-major) takes digest byte `i`; the blank sits in
/// the bottom-right cell and digest bytes 25..=32 are unused.
pub fn generate_puzzle(digest: &[u8]) -> Result<Puzzle, PuzzleError> {
    if digest.len() != 32 {
        return Err(PuzzleError::BadDigestLength(digest.len()));
    }
    let mut tiles = [0u8; TILE_COUNT];
    tiles.copy_from_slice(&digest[..TILE_COUNT]);
    Puzzle::from_tiles(tiles, CELL_COUNT - 1)
}

/// An ordered move list of at most [`MAX_MOVES`] moves.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Solution(Vec<Move>);

impl Solution {
    pub fn new(moves: Vec<Move>) -> Result<Self, PuzzleError> {
        if moves.len() > MAX_MOVES {
            return Err(PuzzleError::SolutionTooLong(moves.len()));
        }
        Ok(Solution(moves))
    }

    pub fn empty() -> Self {
        Solution(Vec::new())
    }

    pub fn moves(&self) -> &[Move] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// One character per move.
    pub fn encode(&self) -> String {
        self.0.iter().map(|m| m.as_char()).collect()
    }

    pub fn decode(text: &str) -> Result<Solution, PuzzleError> {
        let moves = text
            .chars()
            .map(|c| {
                Move::from_char(c)
                    .ok_or_else(|| PuzzleError::MalformedEncoding(format!("bad move character {c:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if moves.len() > MAX_MOVES {
            return Err(PuzzleError::MalformedEncoding(format!(
                "{} moves exceeds limit of {MAX_MOVES}",
                moves.len()
            )));
        }
        Ok(Solution(moves))
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl FromStr for Solution {
    type Err = PuzzleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Solution::decode(s)
    }
}

impl Serialize for Solution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.encode())
    }
}

impl<'de> Deserialize<'de> for Solution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Solution::decode(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    used: u32,
}

impl BitWriter {
    fn push(&mut self, value: u32, width: u32) {
        for shift in (0..width).rev() {
            if self.used.is_multiple_of(8) {
                self.bytes.push(0);
            }
            let bit = ((value >> shift) & 1) as u8;
            let last = self.bytes.last_mut().expect("byte pushed above");
            *last |= bit << (7 - self.used % 8);
            self.used += 1;
        }
    }

    fn finish(self) -> [u8; ENCODED_PUZZLE_LEN] {
        let mut out = [0u8; ENCODED_PUZZLE_LEN];
        out[..self.bytes.len()].copy_from_slice(&self.bytes);
        out
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    fn take(&mut self, width: usize) -> u32 {
        let mut value = 0u32;
        for _ in 0..width {
            let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            value = (value << 1) | bit as u32;
            self.pos += 1;
        }
        value
    }
}
