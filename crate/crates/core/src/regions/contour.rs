use super::RegionMap;
use crate::error::{Error, Result};

/// A pixel corner. `(0, 0)` is the top-left corner of the canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourKind {
    Outer,
    Hole,
}

/// Closed polyline along pixel corners; the first point is repeated at the end.
///
/// With y pointing down, outer contours have positive shoelace area and keep
/// their region on the right of the direction of travel; holes run the other
/// way round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<Point>,
    pub kind: ContourKind,
}

impl Contour {
    /// Twice the signed area.
    pub fn doubled_area(&self) -> i64 {
        self.points
            .windows(2)
            .map(|w| w[0].x as i64 * w[1].y as i64 - w[1].x as i64 * w[0].y as i64)
            .sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Right,
    Down,
    Left,
    Up,
}

impl Dir {
    const ALL: [Dir; 4] = [Dir::Right, Dir::Down, Dir::Left, Dir::Up];

    fn delta(self) -> (i64, i64) {
        match self {
            Dir::Right => (1, 0),
            Dir::Down => (0, 1),
            Dir::Left => (-1, 0),
            Dir::Up => (0, -1),
        }
    }

    fn turn_right(self) -> Dir {
        match self {
            Dir::Right => Dir::Down,
            Dir::Down => Dir::Left,
            Dir::Left => Dir::Up,
            Dir::Up => Dir::Right,
        }
    }

    fn turn_left(self) -> Dir {
        self.turn_right().turn_right().turn_right()
    }

    /// Offsets, from the edge's start vertex, of the pixels on the right and
    /// on the left of a unit edge travelling this way.
    fn sides(self) -> ((i64, i64), (i64, i64)) {
        match self {
            Dir::Right => ((0, 0), (0, -1)),
            Dir::Down => ((-1, 0), (0, 0)),
            Dir::Left => ((-1, -1), (-1, 0)),
            Dir::Up => ((0, -1), (-1, -1)),
        }
    }
}

struct EdgeGrid<'a> {
    rm: &'a RegionMap,
    w: i64,
    h: i64,
}

impl EdgeGrid<'_> {
    fn region_at(&self, x: i64, y: i64) -> Option<u32> {
        (x >= 0 && y >= 0 && x < self.w && y < self.h).then(|| self.rm.region_of[(y * self.w + x) as usize])
    }

    /// Region owning the directed unit edge from `(x, y)`, if that edge is a boundary.
    fn owner(&self, x: i64, y: i64, d: Dir) -> Option<u32> {
        let ((rx, ry), (lx, ly)) = d.sides();
        let right = self.region_at(x + rx, y + ry)?;
        match self.region_at(x + lx, y + ly) {
            Some(left) if left == right => None,
            _ => Some(right),
        }
    }

    fn slot(&self, x: i64, y: i64, d: Dir) -> usize {
        ((y * (self.w + 1) + x) * 4) as usize + d as usize
    }
}

/// Crack-following boundary extraction.
///
/// Each region gets its outer contour first, followed by one hole contour per
/// enclosed island in discovery order. At a corner where a region touches
/// itself diagonally the trace turns towards the region, matching the
/// 4-connectivity the regions were built with. Only corner points are kept.
pub fn trace_boundaries(rm: &RegionMap) -> Vec<Vec<Contour>> {
    let grid = EdgeGrid {
        rm,
        w: rm.width as i64,
        h: rm.height as i64,
    };
    let mut visited = vec![false; ((grid.w + 1) * (grid.h + 1) * 4) as usize];
    let mut out: Vec<Vec<Contour>> = vec![Vec::new(); rm.regions.len()];

    // Starting vertex of each pixel side, in top/right/bottom/left order.
    let sides = [
        (Dir::Right, (0, 0)),
        (Dir::Down, (1, 0)),
        (Dir::Left, (1, 1)),
        (Dir::Up, (0, 1)),
    ];
    for py in 0..grid.h {
        for px in 0..grid.w {
            for &(d, (ox, oy)) in &sides {
                let (sx, sy) = (px + ox, py + oy);
                let Some(region) = grid.owner(sx, sy, d) else {
                    continue;
                };
                if visited[grid.slot(sx, sy, d)] {
                    continue;
                }
                let contour = trace_loop(&grid, &mut visited, region, sx, sy, d);
                out[region as usize].push(contour);
            }
        }
    }
    for contours in &mut out {
        // Outer first; holes keep discovery order.
        contours.sort_by_key(|c| c.kind != ContourKind::Outer);
    }
    out
}

fn trace_loop(grid: &EdgeGrid, visited: &mut [bool], region: u32, sx: i64, sy: i64, sd: Dir) -> Contour {
    let mut vertices: Vec<(Point, Dir)> = Vec::new();
    let (mut x, mut y, mut d) = (sx, sy, sd);
    loop {
        visited[grid.slot(x, y, d)] = true;
        vertices.push((Point::new(x as i32, y as i32), d));
        let (dx, dy) = d.delta();
        x += dx;
        y += dy;
        let next = [d.turn_right(), d, d.turn_left()]
            .into_iter()
            .find(|&c| grid.owner(x, y, c) == Some(region))
            .expect("crack boundaries are closed");
        if (x, y, next) == (sx, sy, sd) {
            break;
        }
        d = next;
    }

    // Keep vertices where the direction changes.
    let n = vertices.len();
    let corners: Vec<(Point, Dir)> = (0..n)
        .filter(|&i| vertices[(i + n - 1) % n].1 != vertices[i].1)
        .map(|i| vertices[i])
        .collect();
    // Canonical start: smallest (y, x), then direction order.
    let start = (0..corners.len())
        .min_by_key(|&i| {
            let (p, d) = corners[i];
            (p.y, p.x, Dir::ALL.iter().position(|&o| o == d))
        })
        .expect("a loop has corners");
    let mut points: Vec<Point> = corners[start..]
        .iter()
        .chain(&corners[..start])
        .map(|(p, _)| *p)
        .collect();
    points.push(points[0]);
    let mut contour = Contour {
        points,
        kind: ContourKind::Outer,
    };
    if contour.doubled_area() < 0 {
        contour.kind = ContourKind::Hole;
    }
    contour
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (px, py) = (p.x as f64, p.y as f64);
    let (ax, ay) = (a.x as f64, a.y as f64);
    let (bx, by) = (b.x as f64, b.y as f64);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return ((px - ax).powi(2) + (py - ay).powi(2)).sqrt();
    }
    let t = (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0);
    ((px - ax - t * dx).powi(2) + (py - ay - t * dy).powi(2)).sqrt()
}

/// Drops vertices lying on the segment joining their neighbors, including
/// across the closing point.
fn collapse_collinear(ring: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = ring.to_vec();
    loop {
        let n = pts.len();
        if n <= 3 {
            return pts;
        }
        let drop = (0..n).find(|&i| {
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            let p = pts[i];
            let cross = (p.x - prev.x) as i64 * (next.y - prev.y) as i64 - (p.y - prev.y) as i64 * (next.x - prev.x) as i64;
            cross == 0 && segment_distance(p, prev, next) == 0.0 && prev != next
        });
        match drop {
            Some(i) => {
                pts.remove(i);
            }
            None => return pts,
        }
    }
}

fn rdp(ring: &[Point], lo: usize, hi: usize, tolerance: f64, keep: &mut [bool]) {
    // `hi` may equal ring.len(), meaning the wrap back to index 0.
    let at = |i: usize| ring[i % ring.len()];
    if hi <= lo + 1 {
        return;
    }
    let (a, b) = (at(lo), at(hi));
    let mut far = lo;
    let mut far_d = -1.0;
    for i in lo + 1..hi {
        let d = segment_distance(ring[i], a, b);
        if d > far_d {
            far = i;
            far_d = d;
        }
    }
    if far_d > tolerance {
        keep[far] = true;
        rdp(ring, lo, far, tolerance, keep);
        rdp(ring, far, hi, tolerance, keep);
    }
}

/// Ramer–Douglas–Peucker on a closed contour.
///
/// Every dropped vertex stays within `tolerance` of the simplified outline.
/// A tolerance of zero only removes collinear vertices. The result always
/// keeps at least three distinct corners.
pub fn simplify_contour(c: &Contour, tolerance: f64) -> Result<Contour> {
    if !(tolerance >= 0.0) || !tolerance.is_finite() {
        return Err(Error::invalid("tolerance must be a finite number ≥ 0"));
    }
    let mut ring: Vec<Point> = c.points.clone();
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::invalid("contour needs at least three distinct points"));
    }

    let kept = if tolerance == 0.0 {
        collapse_collinear(&ring)
    } else {
        let n = ring.len();
        let far = (1..n)
            .max_by(|&i, &j| {
                let di = dist2(ring[0], ring[i]);
                let dj = dist2(ring[0], ring[j]);
                di.cmp(&dj).then(j.cmp(&i))
            })
            .expect("at least three points");
        let mut keep = vec![false; n];
        keep[0] = true;
        keep[far] = true;
        rdp(&ring, 0, far, tolerance, &mut keep);
        rdp(&ring, far, n, tolerance, &mut keep);
        if keep.iter().filter(|&&k| k).count() < 3 {
            // Keep the vertex farthest from the chord so the outline stays a polygon.
            let extra = (1..n)
                .filter(|&i| i != far)
                .max_by(|&i, &j| {
                    segment_distance(ring[i], ring[0], ring[far])
                        .total_cmp(&segment_distance(ring[j], ring[0], ring[far]))
                        .then(j.cmp(&i))
                })
                .expect("at least three points");
            keep[extra] = true;
        }
        let pts: Vec<Point> = ring.iter().zip(&keep).filter(|(_, &k)| k).map(|(p, _)| *p).collect();
        collapse_collinear(&pts)
    };

    let mut points = kept;
    points.push(points[0]);
    Ok(Contour { points, kind: c.kind })
}

fn dist2(a: Point, b: Point) -> i64 {
    let dx = (a.x - b.x) as i64;
    let dy = (a.y - b.y) as i64;
    dx * dx + dy * dy
}
