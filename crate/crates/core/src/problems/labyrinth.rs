//! Random walk on a grid with prohibited cells. At each step the walk
//! chooses uniformly among the admissible moves; the surrogate is the
//! negated minimum BFS distance to the goal attained along the walk, so the
//! event "goal visited" is `{g > -0.5}`.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{ModelError, Position, Problem};

/// ASCII map format: `#` wall, `.` open, `S` start, `G` goal, one row per
/// line. A qualitative stand-in for the paper-scale 12x12 maze.
const PAPER_SCALE_MAP: &str = "\
S..#.....#..
.#.#.###.#.#
.#.#...#.#..
.#.###.#.#.#
.#...#.#.#..
.###.#.#.##.
...#.#.#....
.#.#.#.###.#
.#.#.#...#..
.#.#.#####.#
.#.........#
.#########.G
";

#[derive(Debug, Clone)]
pub struct LabyrinthSpec {
    pub open: Vec<Vec<bool>>,
    pub rows: usize,
    pub cols: usize,
    pub start: (u16, u16),
    pub goal: (u16, u16),
    pub walk_len: usize,
    /// BFS step distance to the goal; unreachable cells get a sentinel
    /// larger than any attainable distance.
    distance: Vec<Vec<usize>>,
}

impl LabyrinthSpec {
    /// Parse an ASCII map and validate it: start and goal open, goal
    /// reachable from the start, and no open cell without an admissible
    /// move.
    pub fn parse(text: &str, walk_len: usize) -> Result<Self, String> {
        let mut open = Vec::new();
        let mut start = None;
        let mut goal = None;
        for (r, line) in text.lines().enumerate() {
            let mut row = Vec::new();
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => row.push(false),
                    '.' => row.push(true),
                    'S' => {
                        start = Some((r as u16, c as u16));
                        row.push(true);
                    }
                    'G' => {
                        goal = Some((r as u16, c as u16));
                        row.push(true);
                    }
                    other => return Err(format!("unexpected map character {other:?}")),
                }
            }
            open.push(row);
        }
        let rows = open.len();
        if rows == 0 {
            return Err("empty map".into());
        }
        let cols = open[0].len();
        if open.iter().any(|row| row.len() != cols) {
            return Err("ragged map rows".into());
        }
        let start = start.ok_or("map has no start cell S")?;
        let goal = goal.ok_or("map has no goal cell G")?;
        Self::build(open, rows, cols, start, goal, walk_len)
    }

    /// Fully open `n x n` grid, start upper-left, goal lower-right.
    pub fn open(n: usize, walk_len: usize) -> Result<Self, String> {
        let open = vec![vec![true; n]; n];
        Self::build(
            open,
            n,
            n,
            (0, 0),
            ((n - 1) as u16, (n - 1) as u16),
            walk_len,
        )
    }

    /// The bundled 12x12 maze.
    pub fn paper_scale(walk_len: usize) -> Result<Self, String> {
        Self::parse(PAPER_SCALE_MAP, walk_len)
    }

    fn build(
        open: Vec<Vec<bool>>,
        rows: usize,
        cols: usize,
        start: (u16, u16),
        goal: (u16, u16),
        walk_len: usize,
    ) -> Result<Self, String> {
        if !open[start.0 as usize][start.1 as usize] {
            return Err("start cell is a wall".into());
        }
        if !open[goal.0 as usize][goal.1 as usize] {
            return Err("goal cell is a wall".into());
        }
        let mut spec = LabyrinthSpec {
            open,
            rows,
            cols,
            start,
            goal,
            walk_len,
            distance: Vec::new(),
        };
        for r in 0..rows {
            for c in 0..cols {
                if spec.open[r][c] && spec.moves((r as u16, c as u16)).is_empty() {
                    return Err(format!("open cell ({r},{c}) has no admissible move"));
                }
            }
        }
        spec.distance = spec.bfs_from_goal();
        if spec.distance[start.0 as usize][start.1 as usize] > rows * cols {
            return Err("goal not reachable from start".into());
        }
        Ok(spec)
    }

    pub fn moves(&self, cell: (u16, u16)) -> Vec<(u16, u16)> {
        let (r, c) = (cell.0 as isize, cell.1 as isize);
        [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
            .into_iter()
            .filter(|&(nr, nc)| {
                nr >= 0
                    && nc >= 0
                    && (nr as usize) < self.rows
                    && (nc as usize) < self.cols
                    && self.open[nr as usize][nc as usize]
            })
            .map(|(nr, nc)| (nr as u16, nc as u16))
            .collect()
    }

    fn bfs_from_goal(&self) -> Vec<Vec<usize>> {
        let sentinel = self.rows * self.cols + 10;
        let mut dist = vec![vec![sentinel; self.cols]; self.rows];
        let mut queue = VecDeque::new();
        dist[self.goal.0 as usize][self.goal.1 as usize] = 0;
        queue.push_back(self.goal);
        while let Some(cell) = queue.pop_front() {
            let d = dist[cell.0 as usize][cell.1 as usize];
            for (nr, nc) in self.moves(cell) {
                if dist[nr as usize][nc as usize] > d + 1 {
                    dist[nr as usize][nc as usize] = d + 1;
                    queue.push_back((nr, nc));
                }
            }
        }
        dist
    }

    pub fn distance(&self, cell: (u16, u16)) -> usize {
        self.distance[cell.0 as usize][cell.1 as usize]
    }

    /// One walk of `walk_len` steps from the start, uniform over admissible
    /// moves at each step.
    pub fn sample_walk(&self, rng: &mut ChaCha8Rng) -> Vec<(u16, u16)> {
        let mut walk = Vec::with_capacity(self.walk_len + 1);
        let mut cell = self.start;
        walk.push(cell);
        for _ in 0..self.walk_len {
            let moves = self.moves(cell);
            cell = moves[rng.gen_range(0..moves.len())];
            walk.push(cell);
        }
        walk
    }

    /// `g(w) = -min_i d(w_i)`.
    pub fn surrogate(&self, walk: &[(u16, u16)]) -> f64 {
        let min = walk
            .iter()
            .map(|&cell| self.distance(cell))
            .min()
            .expect("non-empty walk");
        -(min as f64)
    }
}

pub struct LabyrinthProblem {
    spec: LabyrinthSpec,
}

impl LabyrinthProblem {
    pub fn new(spec: LabyrinthSpec) -> Self {
        LabyrinthProblem { spec }
    }

    pub fn spec(&self) -> &LabyrinthSpec {
        &self.spec
    }
}

impl Problem for LabyrinthProblem {
    fn name(&self) -> &str {
        "labyrinth"
    }
    fn sample_prior(&self, rng: &mut ChaCha8Rng) -> Position {
        Position::Walk(self.spec.sample_walk(rng))
    }
    fn surrogate(&self, position: &Position) -> f64 {
        self.spec.surrogate(position.as_walk().unwrap())
    }
    fn integrand_names(&self) -> Vec<String> {
        vec!["indicator".into()]
    }
    fn integrand(&self, name: &str, position: &Position) -> Result<f64, ModelError> {
        match name {
            "indicator" => Ok(if self.surrogate(position) > self.event_threshold() {
                1.0
            } else {
                0.0
            }),
            other => Err(ModelError::UnknownIntegrand(other.into())),
        }
    }
    fn event_threshold(&self) -> f64 {
        -0.5
    }
    fn dimension(&self) -> Option<usize> {
        None
    }
    fn statistic(&self, position: &Position) -> Option<f64> {
        Some(self.surrogate(position))
    }
}
