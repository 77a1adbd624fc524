//! Community-based mobility on a grid of cells, plus range-based contact
//! detection.
//!
//! Every community owns a home cell. Nodes pick uniform waypoints inside
//! their current cell and walk to them in a straight line at a speed drawn
//! uniformly from the configured range. Travellers alternate between
//! visits to other communities' cells and returns home; after each movement
//! abroad they stay with probability `stay_prob`.

use std::io::{self, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::types::{NodeId, Point, Seconds};

/// Inter-community connectivity pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// One traveller per community, visiting only the next community in a
    /// ring.
    OneTraveller,
    /// One traveller per community, choosing its destination with Zipf
    /// preferences (rotated across communities).
    ZipfTravellers,
    /// One traveller per other community, each bound to a single
    /// destination.
    ThreeTravellers,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::OneTraveller => "OT",
            Scenario::ZipfTravellers => "ZT",
            Scenario::ThreeTravellers => "TT",
        }
    }

    pub fn travellers_per_community(self, communities: usize) -> usize {
        match self {
            Scenario::OneTraveller | Scenario::ZipfTravellers => usize::from(communities > 1),
            Scenario::ThreeTravellers => communities.saturating_sub(1),
        }
    }
}

/// Other communities ordered by how strongly `community`'s travellers are
/// connected to them: the ring successor first, then onwards round the ring.
/// This is the Zipf preference order in ZT, the single outbound link first
/// in OT and the fixed traveller order in TT.
pub fn community_preference(community: usize, communities: usize) -> Vec<usize> {
    (1..communities).map(|k| (community + k) % communities).collect()
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub min: Point,
    pub max: Point,
}

impl Cell {
    pub fn contains(&self, p: Point) -> bool {
        const EPS: f64 = 1e-9;
        p.x >= self.min.x - EPS && p.x <= self.max.x + EPS && p.y >= self.min.y - EPS && p.y <= self.max.y + EPS
    }

    pub fn center(&self) -> Point {
        Point::new((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let x = self.min.x + rng.random::<f64>() * (self.max.x - self.min.x);
        let y = self.min.y + rng.random::<f64>() * (self.max.y - self.min.y);
        Point::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub cols: usize,
    pub rows: usize,
    pub width: f64,
    pub height: f64,
}

impl Grid {
    pub fn cell(&self, col: usize, row: usize) -> Cell {
        let w = self.width / self.cols as f64;
        let h = self.height / self.rows as f64;
        Cell {
            min: Point::new(col as f64 * w, row as f64 * h),
            max: Point::new((col + 1) as f64 * w, (row + 1) as f64 * h),
        }
    }

    /// Home cells on even (col, row) positions in row-major order; no two
    /// of them share a cell or an edge.
    pub fn home_cells(&self, communities: usize) -> Result<Vec<(usize, usize)>, ConfigError> {
        let cells: Vec<(usize, usize)> = (0..self.rows)
            .step_by(2)
            .flat_map(|r| (0..self.cols).step_by(2).map(move |c| (c, r)))
            .take(communities)
            .collect();
        if cells.len() < communities {
            return Err(ConfigError::GridTooSmall {
                cols: self.cols,
                rows: self.rows,
                communities,
            });
        }
        Ok(cells)
    }

    pub fn bounds(&self) -> Cell {
        Cell {
            min: Point::new(0.0, 0.0),
            max: Point::new(self.width, self.height),
        }
    }
}

/// Uniform destination inside `cell` and uniform speed in `speed`.
pub fn next_waypoint<R: Rng + ?Sized>(cell: &Cell, speed: (f64, f64), rng: &mut R) -> (Point, f64) {
    let dest = cell.uniform_point(rng);
    let v = speed.0 + rng.random::<f64>() * (speed.1 - speed.0);
    (dest, v)
}

/// How a traveller picks the community to visit when leaving home.
#[derive(Debug, Clone)]
pub enum TravellerPlan {
    Ring { next: usize },
    Zipf { destinations: Vec<usize>, weights: WeightedIndex<f64> },
    Fixed { destination: usize },
}

impl TravellerPlan {
    /// Zipf over `destinations` in preference order: weight of rank r is
    /// r^-exponent.
    pub fn zipf(destinations: Vec<usize>, exponent: f64) -> Self {
        let w: Vec<f64> = (1..=destinations.len()).map(|r| (r as f64).powf(-exponent)).collect();
        let weights = WeightedIndex::new(w).expect("at least one destination");
        TravellerPlan::Zipf { destinations, weights }
    }

    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            TravellerPlan::Ring { next } => *next,
            TravellerPlan::Fixed { destination } => *destination,
            TravellerPlan::Zipf { destinations, weights } => destinations[weights.sample(rng)],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Traveller {
    pub plan: TravellerPlan,
    pub stay_prob: f64,
    /// Community currently being visited, `None` while at home.
    pub visiting: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TravellerDecision {
    Stay,
    MoveHome,
    Visit(usize),
}

/// Decision taken by a traveller after completing a movement.
pub fn traveller_decision<R: Rng + ?Sized>(traveller: &Traveller, rng: &mut R) -> TravellerDecision {
    match traveller.visiting {
        Some(_) => {
            if rng.random_bool(traveller.stay_prob) {
                TravellerDecision::Stay
            } else {
                TravellerDecision::MoveHome
            }
        }
        None => TravellerDecision::Visit(traveller.plan.choose(rng)),
    }
}

#[derive(Debug, Clone)]
pub struct Mover {
    pub home: usize,
    /// Community whose cell the current waypoint lies in.
    pub cell: usize,
    pub position: Point,
    pub waypoint: Point,
    pub speed: f64,
    pub traveller: Option<Traveller>,
}

/// Kinematic state of every node in a run.
#[derive(Debug, Clone)]
pub struct MobilityWorld {
    pub grid: Grid,
    /// Home cell of each community.
    pub cells: Vec<Cell>,
    pub movers: Vec<Mover>,
    pub speed: (f64, f64),
}

impl MobilityWorld {
    /// Places every mover uniformly in its home cell and draws its first
    /// waypoint.
    pub fn new<R: Rng + ?Sized>(
        grid: Grid,
        communities: usize,
        speed: (f64, f64),
        homes: &[usize],
        travellers: Vec<Option<Traveller>>,
        rng: &mut R,
    ) -> Result<Self, ConfigError> {
        let cells: Vec<Cell> = grid
            .home_cells(communities)?
            .into_iter()
            .map(|(c, r)| grid.cell(c, r))
            .collect();
        let movers = homes
            .iter()
            .zip(travellers)
            .map(|(&home, traveller)| {
                let position = cells[home].uniform_point(rng);
                let (waypoint, v) = next_waypoint(&cells[home], speed, rng);
                Mover {
                    home,
                    cell: home,
                    position,
                    waypoint,
                    speed: v,
                    traveller,
                }
            })
            .collect();
        Ok(Self {
            grid,
            cells,
            movers,
            speed,
        })
    }

    pub fn len(&self) -> usize {
        self.movers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.movers.is_empty()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.movers.iter().map(|m| m.position).collect()
    }

    /// Advances every node by `dt` seconds along its segment. A node that
    /// reaches its waypoint stops there for the rest of the step and draws
    /// the next one.
    pub fn step_positions<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        debug_assert!(dt > 0.0);
        for m in &mut self.movers {
            let dx = m.waypoint.x - m.position.x;
            let dy = m.waypoint.y - m.position.y;
            let remaining = (dx * dx + dy * dy).sqrt();
            let reach = m.speed * dt;
            if remaining > reach {
                let f = reach / remaining;
                m.position.x += dx * f;
                m.position.y += dy * f;
                continue;
            }
            m.position = m.waypoint;
            if let Some(tr) = &mut m.traveller {
                match traveller_decision(tr, rng) {
                    TravellerDecision::Stay => {}
                    TravellerDecision::MoveHome => {
                        tr.visiting = None;
                        m.cell = m.home;
                    }
                    TravellerDecision::Visit(c) => {
                        tr.visiting = Some(c);
                        m.cell = c;
                    }
                }
            }
            let (wp, v) = next_waypoint(&self.cells[m.cell], self.speed, rng);
            m.waypoint = wp;
            m.speed = v;
        }
    }

    /// One CSV row per node: `t,node,x,y`.
    pub fn write_trace<W: Write>(&self, t: Seconds, out: &mut W) -> io::Result<()> {
        for (i, m) in self.movers.iter().enumerate() {
            writeln!(out, "{t},{i},{:.3},{:.3}", m.position.x, m.position.y)?;
        }
        Ok(())
    }
}

/// A contact between two nodes; `end` is `None` while they are in range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub a: NodeId,
    pub b: NodeId,
    pub start: Seconds,
    pub end: Option<Seconds>,
}

/// Pairs `(a, b)`, `a < b`, within `range` of each other (inclusive), in
/// ascending order.
pub fn detect_contacts(positions: &[Point], range: f64) -> Vec<(NodeId, NodeId)> {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    let mut pairs = Vec::new();
    in_range_pairs(positions, range, &mut order, &mut pairs);
    pairs
}

fn in_range_pairs(positions: &[Point], range: f64, order: &mut Vec<usize>, pairs: &mut Vec<(NodeId, NodeId)>) {
    if order.len() != positions.len() {
        *order = (0..positions.len()).collect();
    }
    // Nearly sorted from the previous tick, so insertion-like sorts are cheap.
    order.sort_by(|&a, &b| positions[a].x.total_cmp(&positions[b].x));
    let r2 = range * range;
    pairs.clear();
    for (k, &i) in order.iter().enumerate() {
        let pi = positions[i];
        for &j in &order[k + 1..] {
            let pj = positions[j];
            if pj.x - pi.x > range {
                break;
            }
            if pi.distance_sq(pj) <= r2 {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                pairs.push((NodeId(a as u32), NodeId(b as u32)));
            }
        }
    }
    pairs.sort_unstable();
}

/// Changes in the contact relation since the previous tick.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContactChanges {
    pub started: Vec<(NodeId, NodeId)>,
    pub ended: Vec<ContactEvent>,
}

/// Edge-triggered contact detection across ticks.
#[derive(Debug, Clone)]
pub struct ContactTracker {
    range: f64,
    active: Vec<(NodeId, NodeId, Seconds)>,
    order: Vec<usize>,
    scratch: Vec<(NodeId, NodeId)>,
}

impl ContactTracker {
    pub fn new(range: f64) -> Self {
        Self {
            range,
            active: Vec::new(),
            order: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// Pairs currently in contact.
    pub fn active(&self) -> impl Iterator<Item = ContactEvent> + '_ {
        self.active.iter().map(|&(a, b, start)| ContactEvent { a, b, start, end: None })
    }

    /// Compares the contact relation at `t` against the previous tick.
    pub fn update(&mut self, positions: &[Point], t: Seconds) -> ContactChanges {
        let mut current = std::mem::take(&mut self.scratch);
        in_range_pairs(positions, self.range, &mut self.order, &mut current);

        let mut changes = ContactChanges::default();
        let mut next = Vec::with_capacity(current.len());
        let (mut i, mut j) = (0, 0);
        while i < self.active.len() || j < current.len() {
            let old = self.active.get(i).map(|&(a, b, _)| (a, b));
            let new = current.get(j).copied();
            match (old, new) {
                (Some(o), Some(n)) if o == n => {
                    next.push(self.active[i]);
                    i += 1;
                    j += 1;
                }
                (Some(o), n) if n.is_none_or(|n| o < n) => {
                    let (a, b, start) = self.active[i];
                    changes.ended.push(ContactEvent { a, b, start, end: Some(t) });
                    i += 1;
                }
                (_, Some(n)) => {
                    changes.started.push(n);
                    next.push((n.0, n.1, t));
                    j += 1;
                }
                (_, None) => unreachable!("loop runs while either list has entries"),
            }
        }
        self.active = next;
        self.scratch = current;
        changes
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    fn grid() -> Grid {
        Grid {
            cols: 4,
            rows: 4,
            width: 1000.0,
            height: 1000.0,
        }
    }

    #[test]
    fn home_cells_are_not_adjacent() {
        let homes = grid().home_cells(4).unwrap();
        assert_eq!(homes, vec![(0, 0), (2, 0), (0, 2), (2, 2)]);
        for (i, a) in homes.iter().enumerate() {
            for b in &homes[i + 1..] {
                let manhattan = a.0.abs_diff(b.0) + a.1.abs_diff(b.1);
                assert!(manhattan >= 2, "{a:?} and {b:?} touch");
            }
        }
        assert!(grid().home_cells(5).is_err());
    }

    #[test]
    fn waypoint_speeds_within_range() {
        let cell = grid().cell(0, 0);
        let mut r = rng();
        for _ in 0..10_000 {
            let (p, v) = next_waypoint(&cell, (1.0, 1.86), &mut r);
            assert!((1.0..=1.86).contains(&v));
            assert!(cell.contains(p));
        }
    }

    #[test]
    fn degenerate_cell_yields_its_point() {
        let cell = Cell {
            min: Point::new(7.0, 9.0),
            max: Point::new(7.0, 9.0),
        };
        let (p, _) = next_waypoint(&cell, (1.0, 1.0), &mut rng());
        assert_eq!(p, Point::new(7.0, 9.0));
    }

    #[test]
    fn ring_traveller_always_goes_to_successor() {
        let t = Traveller {
            plan: TravellerPlan::Ring { next: 3 },
            stay_prob: 0.5,
            visiting: None,
        };
        let mut r = rng();
        for _ in 0..100 {
            assert_eq!(traveller_decision(&t, &mut r), TravellerDecision::Visit(3));
        }
    }

    #[test]
    fn zero_stay_probability_returns_home() {
        let t = Traveller {
            plan: TravellerPlan::Fixed { destination: 1 },
            stay_prob: 0.0,
            visiting: Some(1),
        };
        let mut r = rng();
        for _ in 0..100 {
            assert_eq!(traveller_decision(&t, &mut r), TravellerDecision::MoveHome);
        }
    }

    #[test]
    fn preference_order_rotates() {
        assert_eq!(community_preference(0, 4), vec![1, 2, 3]);
        assert_eq!(community_preference(2, 4), vec![3, 0, 1]);
        assert!(community_preference(0, 1).is_empty());
    }

    fn single_mover(position: Point, waypoint: Point, speed: f64) -> MobilityWorld {
        let g = grid();
        let cell = g.cell(0, 0);
        MobilityWorld {
            grid: g,
            cells: vec![cell],
            movers: vec![Mover {
                home: 0,
                cell: 0,
                position,
                waypoint,
                speed,
                traveller: None,
            }],
            speed: (speed, speed),
        }
    }

    #[test]
    fn step_moves_along_segment() {
        let mut w = single_mover(Point::new(0.0, 0.0), Point::new(10.0, 0.0), 1.0);
        w.step_positions(1.0, &mut rng());
        assert_eq!(w.movers[0].position, Point::new(1.0, 0.0));
    }

    #[test]
    fn step_clamps_on_arrival_and_redraws() {
        let mut w = single_mover(Point::new(0.0, 0.0), Point::new(0.5, 0.0), 1.0);
        w.step_positions(1.0, &mut rng());
        assert_eq!(w.movers[0].position, Point::new(0.5, 0.0));
        assert_ne!(w.movers[0].waypoint, Point::new(0.5, 0.0));
    }

    #[test]
    fn contact_boundary_is_inclusive() {
        let near = [Point::new(0.0, 0.0), Point::new(19.99, 0.0)];
        assert_eq!(detect_contacts(&near, 20.0), vec![(NodeId(0), NodeId(1))]);
        let far = [Point::new(0.0, 0.0), Point::new(20.01, 0.0)];
        assert!(detect_contacts(&far, 20.0).is_empty());
    }

    #[test]
    fn contacts_are_edge_triggered() {
        let mut tr = ContactTracker::new(20.0);
        let p = [Point::new(0.0, 0.0), Point::new(5.0, 0.0), Point::new(500.0, 0.0)];
        let c1 = tr.update(&p, 1);
        assert_eq!(c1.started, vec![(NodeId(0), NodeId(1))]);
        let c2 = tr.update(&p, 2);
        assert!(c2.started.is_empty() && c2.ended.is_empty());
        let q = [Point::new(0.0, 0.0), Point::new(50.0, 0.0), Point::new(500.0, 0.0)];
        let c3 = tr.update(&q, 3);
        assert_eq!(
            c3.ended,
            vec![ContactEvent {
                a: NodeId(0),
                b: NodeId(1),
                start: 1,
                end: Some(3)
            }]
        );
        let c4 = tr.update(&p, 4);
        assert_eq!(c4.started, vec![(NodeId(0), NodeId(1))]);
    }

    #[test]
    fn sweep_matches_all_pairs() {
        let mut r = rng();
        let pts: Vec<Point> = (0..200).map(|_| grid().bounds().uniform_point(&mut r)).collect();
        let mut brute = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i].distance(pts[j]) <= 60.0 {
                    brute.push((NodeId(i as u32), NodeId(j as u32)));
                }
            }
        }
        assert!(!brute.is_empty());
        assert_eq!(detect_contacts(&pts, 60.0), brute);
    }
}
