use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compass direction. As an approach it names the side vehicles arrive
/// from; as a heading it names the direction of travel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i % 4]
    }

    pub fn opposite(self) -> Direction {
        Self::from_index(self.index() + 2)
    }

    /// Heading after a clockwise quarter turn (a right turn).
    pub fn clockwise(self) -> Direction {
        Self::from_index(self.index() + 1)
    }

    pub fn counter_clockwise(self) -> Direction {
        Self::from_index(self.index() + 3)
    }

    fn letter(self) -> char {
        ['N', 'E', 'S', 'W'][self.index()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Movement {
    Left,
    Through,
    Right,
}

impl Movement {
    pub const ALL: [Movement; 3] = [Movement::Left, Movement::Through, Movement::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Heading after performing this movement while travelling `heading`.
    pub fn apply(self, heading: Direction) -> Direction {
        match self {
            Movement::Left => heading.counter_clockwise(),
            Movement::Through => heading,
            Movement::Right => heading.clockwise(),
        }
    }

    /// The movement turning `heading` into `next`, if it is not a U-turn.
    pub fn between(heading: Direction, next: Direction) -> Option<Movement> {
        Self::ALL.into_iter().find(|m| m.apply(heading) == next)
    }

    fn letter(self) -> char {
        ['L', 'T', 'R'][self.index()]
    }
}

/// Incoming lanes per intersection: 4 approaches x 3 movements.
pub const LANES_PER_INTERSECTION: usize = 12;
pub const N_PHASES: usize = 4;

/// An incoming lane of one intersection, identified by where vehicles come
/// from and how they leave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaneId {
    pub approach: Direction,
    pub movement: Movement,
}

impl LaneId {
    /// Canonical lane order: approaches N, E, S, W, each with L, T, R.
    pub fn index(self) -> usize {
        self.approach.index() * 3 + self.movement.index()
    }

    pub fn from_index(i: usize) -> LaneId {
        LaneId {
            approach: Direction::from_index(i / 3),
            movement: Movement::ALL[i % 3],
        }
    }

    pub fn all() -> impl Iterator<Item = LaneId> {
        (0..LANES_PER_INTERSECTION).map(LaneId::from_index)
    }

    /// Heading of a vehicle on this lane before it crosses.
    pub fn heading(self) -> Direction {
        self.approach.opposite()
    }

    /// Heading after crossing the intersection.
    pub fn exit_heading(self) -> Direction {
        self.movement.apply(self.heading())
    }

    pub fn label(self) -> String {
        format!("{}{}", self.approach.letter(), self.movement.letter())
    }
}

/// The four signal phases used as actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// Through traffic on the north and south approaches.
    NorthSouthThrough,
    /// Through traffic on the east and west approaches.
    EastWestThrough,
    NorthSouthLeft,
    EastWestLeft,
}

impl Phase {
    pub const ALL: [Phase; N_PHASES] = [
        Phase::NorthSouthThrough,
        Phase::EastWestThrough,
        Phase::NorthSouthLeft,
        Phase::EastWestLeft,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Phase> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::config(format!("phase {i} is out of range 0..{N_PHASES}")))
    }

    /// Lanes (other than right turns) that this phase grants green.
    pub fn green_lanes(self) -> [LaneId; 2] {
        let (a, b, movement) = match self {
            Phase::NorthSouthThrough => (Direction::North, Direction::South, Movement::Through),
            Phase::EastWestThrough => (Direction::East, Direction::West, Movement::Through),
            Phase::NorthSouthLeft => (Direction::North, Direction::South, Movement::Left),
            Phase::EastWestLeft => (Direction::East, Direction::West, Movement::Left),
        };
        [
            LaneId {
                approach: a,
                movement,
            },
            LaneId {
                approach: b,
                movement,
            },
        ]
    }

    /// Whether `lane` may discharge under this phase. Right turns always may.
    pub fn allows(self, lane: LaneId) -> bool {
        lane.movement == Movement::Right || self.green_lanes().contains(&lane)
    }

    /// The phase serving a non-right-turn lane.
    pub fn serving(lane: LaneId) -> Option<Phase> {
        Self::ALL
            .into_iter()
            .find(|p| p.green_lanes().contains(&lane))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

/// A rectangular grid of signalized intersections. Every approach without
/// a neighboring intersection is a boundary entry and exit.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadNetwork {
    grid: GridSpec,
    neighbors: Vec<Vec<usize>>,
}

impl RoadNetwork {
    pub fn grid(grid: GridSpec) -> Result<Self> {
        if grid.rows == 0 || grid.cols == 0 {
            return Err(Error::config(format!(
                "grid must have at least one row and column, got {}x{}",
                grid.rows, grid.cols
            )));
        }
        let mut net = Self {
            grid,
            neighbors: Vec::new(),
        };
        net.neighbors = (0..net.len())
            .map(|i| {
                Direction::ALL
                    .into_iter()
                    .filter_map(|d| net.neighbor(i, d))
                    .collect()
            })
            .collect();
        Ok(net)
    }

    pub fn spec(&self) -> GridSpec {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.rows * self.grid.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn position(&self, i: usize) -> (usize, usize) {
        (i / self.grid.cols, i % self.grid.cols)
    }

    pub fn index_of(&self, row: usize, col: usize) -> Option<usize> {
        (row < self.grid.rows && col < self.grid.cols).then(|| row * self.grid.cols + col)
    }

    /// Intersection adjacent to `i` in direction `d` (north is row 0).
    pub fn neighbor(&self, i: usize, d: Direction) -> Option<usize> {
        let (r, c) = self.position(i);
        match d {
            Direction::North => r.checked_sub(1).and_then(|r| self.index_of(r, c)),
            Direction::South => self.index_of(r + 1, c),
            Direction::East => self.index_of(r, c + 1),
            Direction::West => c.checked_sub(1).and_then(|c| self.index_of(r, c)),
        }
    }

    /// Direction from `i` to an adjacent `j`.
    pub fn direction_to(&self, i: usize, j: usize) -> Option<Direction> {
        Direction::ALL
            .into_iter()
            .find(|&d| self.neighbor(i, d) == Some(j))
    }

    /// Graph neighbors, ordered N, E, S, W.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Hop distance in the road graph (Manhattan distance on a grid).
    pub fn hop_distance(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.position(i), self.position(j));
        a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
    }

    /// External id, 1-based row then column.
    pub fn name(&self, i: usize) -> String {
        let (r, c) = self.position(i);
        format!("intersection_{}_{}", r + 1, c + 1)
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        let rest = name.strip_prefix("intersection_")?;
        let (r, c) = rest.split_once('_')?;
        let (r, c): (usize, usize) = (r.parse().ok()?, c.parse().ok()?);
        self.index_of(r.checked_sub(1)?, c.checked_sub(1)?)
    }

    /// Boundary approaches where vehicles enter the network.
    pub fn entries(&self) -> Vec<(usize, Direction)> {
        (0..self.len())
            .flat_map(|i| {
                Direction::ALL
                    .into_iter()
                    .filter(move |&d| self.neighbor(i, d).is_none())
                    .map(move |d| (i, d))
            })
            .collect()
    }
}
