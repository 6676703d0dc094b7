//! Connected-component labeling and the particle shape-descriptor suite
//! driving the size and shape filters.
//!
//! Regions store their pixels as per-row runs; whole-section batches are
//! large, and runs keep the footprint proportional to boundary complexity
//! rather than area.

use crate::raster::BitMask;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// One horizontal run of foreground pixels: row `y`, columns `x0..=x1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub y: u32,
    pub x0: u32,
    pub x1: u32,
}

/// A connected component of a [`BitMask`].
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub label: u32,
    pub runs: Vec<Run>,
    pub pixel_count: usize,
    /// Outer contour in trace order (Moore neighbor tracing, clockwise).
    pub boundary: Vec<(u32, u32)>,
    pub centroid: (f64, f64),
    /// (xmin, ymin, xmax, ymax), inclusive.
    pub bbox: (u32, u32, u32, u32),
}

impl Region {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.runs
            .iter()
            .any(|r| r.y == y && r.x0 <= x && x <= r.x1)
    }

    /// Pixel coordinates in raster order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (r.x0..=r.x1).map(move |x| (x, r.y)))
    }
}

/// Caliper-based particle measurements. See the field formulas for the exact
/// definitions; all are computed from the pixel set and traced boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeDescriptors {
    /// Pixel count.
    pub area: f64,
    /// Chain-code weighted contour length (orthogonal 1, diagonal sqrt 2).
    pub perimeter: f64,
    /// Maximum caliper diameter of the boundary convex hull.
    pub feret: f64,
    /// Minimum caliper width of the boundary convex hull.
    pub breadth: f64,
    /// feret / breadth, >= 1.
    pub aspect_ratio: f64,
    /// 4 pi area / perimeter^2; 1 for an ideal disc.
    pub circularity: f64,
    /// sqrt(4 area / pi) / feret.
    pub compactness: f64,
    /// Minimum centroid-to-boundary distance.
    pub min_r: f64,
    /// Maximum centroid-to-boundary distance.
    pub max_r: f64,
    /// min_r / max_r, in (0, 1].
    pub sphericity: f64,
    /// 2 min_r / feret.
    pub mod_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvalidBounds {
    pub min_area: usize,
    pub max_area: usize,
}

impl fmt::Display for InvalidBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "min area {} exceeds max area {}",
            self.min_area, self.max_area
        )
    }
}

impl core::error::Error for InvalidBounds {}

/// Label all connected components of `mask`.
///
/// Runs are merged with a union-find pass over adjacent rows; labels are
/// 1..N in raster-scan order of each component's first pixel.
pub fn label_components(mask: &BitMask, connectivity: Connectivity) -> Vec<Region> {
    let width = mask.width();
    let height = mask.height();

    // Extract runs row by row.
    let mut runs: Vec<Run> = Vec::new();
    let mut row_starts: Vec<usize> = Vec::with_capacity(height as usize + 1);
    for y in 0..height {
        row_starts.push(runs.len());
        let mut x = 0u32;
        while x < width {
            if mask.get(x, y) {
                let x0 = x;
                while x < width && mask.get(x, y) {
                    x += 1;
                }
                runs.push(Run { y, x0, x1: x - 1 });
            } else {
                x += 1;
            }
        }
    }
    row_starts.push(runs.len());

    // Union runs that touch across adjacent rows.
    let mut uf = UnionFind::new(runs.len());
    for y in 1..height as usize {
        let (above0, above1) = (row_starts[y - 1], row_starts[y]);
        let (cur0, cur1) = (row_starts[y], row_starts[y + 1]);
        let mut a = above0;
        for i in cur0..cur1 {
            let (lo, hi) = match connectivity {
                Connectivity::Four => (runs[i].x0, runs[i].x1),
                Connectivity::Eight => (runs[i].x0.saturating_sub(1), runs[i].x1.saturating_add(1)),
            };
            while a < above1 && runs[a].x1 < lo {
                a += 1;
            }
            let mut j = a;
            while j < above1 && runs[j].x0 <= hi {
                uf.union(i, j);
                j += 1;
            }
        }
    }

    // Group runs by root; roots keyed by smallest run index so raster order
    // of first pixels is preserved.
    let mut root_of: Vec<usize> = (0..runs.len()).map(|i| uf.find(i)).collect();
    let mut first_run: Vec<usize> = vec![usize::MAX; runs.len()];
    for (i, &r) in root_of.iter().enumerate() {
        if first_run[r] == usize::MAX {
            first_run[r] = i;
        }
    }
    let mut roots: Vec<usize> = root_of
        .iter()
        .copied()
        .filter(|&r| first_run[r] != usize::MAX)
        .collect();
    roots.sort_unstable_by_key(|&r| first_run[r]);
    roots.dedup();

    let mut label_of: Vec<u32> = vec![0; runs.len()];
    for (li, &r) in roots.iter().enumerate() {
        label_of[r] = li as u32 + 1;
    }
    for r in root_of.iter_mut() {
        *r = label_of[*r] as usize;
    }

    let mut region_runs: Vec<Vec<Run>> = vec![Vec::new(); roots.len()];
    for (i, run) in runs.iter().enumerate() {
        region_runs[root_of[i] - 1].push(*run);
    }

    region_runs
        .into_iter()
        .enumerate()
        .map(|(i, runs)| build_region(i as u32 + 1, runs))
        .collect()
}

fn build_region(label: u32, runs: Vec<Run>) -> Region {
    let mut pixel_count = 0usize;
    let (mut xmin, mut ymin, mut xmax, mut ymax) = (u32::MAX, u32::MAX, 0u32, 0u32);
    for r in &runs {
        pixel_count += (r.x1 - r.x0 + 1) as usize;
        xmin = xmin.min(r.x0);
        xmax = xmax.max(r.x1);
        ymin = ymin.min(r.y);
        ymax = ymax.max(r.y);
    }
    // Coordinate sums in bbox-local space, doubled to stay integral
    // (x0+..+x1 = n*(x0+x1)/2), so the centroid offset from the bbox origin
    // is bit-identical under translation.
    let mut sum_x2 = 0u64;
    let mut sum_y2 = 0u64;
    for r in &runs {
        let n = (r.x1 - r.x0 + 1) as u64;
        sum_x2 += n * ((r.x0 - xmin) as u64 + (r.x1 - xmin) as u64);
        sum_y2 += 2 * n * (r.y - ymin) as u64;
    }
    let centroid = (
        xmin as f64 + sum_x2 as f64 / (2 * pixel_count) as f64,
        ymin as f64 + sum_y2 as f64 / (2 * pixel_count) as f64,
    );
    let boundary = trace_boundary(&runs, (xmin, ymin, xmax, ymax));
    Region {
        label,
        runs,
        pixel_count,
        boundary,
        centroid,
        bbox: (xmin, ymin, xmax, ymax),
    }
}

/// Moore neighbor tracing (clockwise, y-down) over the region's own bitmap.
/// An 8-neighborhood trace is valid for components of either labeling
/// connectivity.
fn trace_boundary(runs: &[Run], bbox: (u32, u32, u32, u32)) -> Vec<(u32, u32)> {
    let (xmin, ymin, xmax, ymax) = bbox;
    let w = (xmax - xmin + 1) as usize;
    let h = (ymax - ymin + 1) as usize;
    let mut local = vec![false; w * h];
    for r in runs {
        let row = (r.y - ymin) as usize * w;
        for x in r.x0..=r.x1 {
            local[row + (x - xmin) as usize] = true;
        }
    }
    let at = |x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && local[y as usize * w + x as usize]
    };
    // Start: first foreground pixel in raster order.
    let start_idx = local.iter().position(|&b| b).expect("region is non-empty");
    let start = ((start_idx % w) as i64, (start_idx / w) as i64);

    // Clockwise Moore ring with y pointing down.
    const DIRS: [(i64, i64); 8] = [
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
    ];
    let dir_of = |d: (i64, i64)| DIRS.iter().position(|&v| v == d).unwrap();

    let mut boundary = vec![(start.0, start.1)];
    let mut cur = start;
    // Backtrack: the background cell scanning starts from. Start's west cell
    // is background because start is leftmost in the topmost row.
    let mut backtrack = (start.0 - 1, start.1);
    // Jacob's stopping criterion: terminate when about to leave the start
    // pixel with the same first move as the initial departure.
    let mut first_move: Option<((i64, i64), usize)> = None;
    let cap = runs.iter().map(|r| (r.x1 - r.x0 + 1) as usize).sum::<usize>() * 8 + 16;

    for _ in 0..cap {
        let bd = dir_of((backtrack.0 - cur.0, backtrack.1 - cur.1));
        let mut found = None;
        let mut last_bg = backtrack;
        for i in 1..=8 {
            let d = (bd + i) % 8;
            let n = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            if at(n.0, n.1) {
                found = Some((n, d));
                break;
            }
            last_bg = n;
        }
        let Some((next, dir)) = found else {
            break; // isolated pixel
        };
        match first_move {
            Some((fp, fd)) if cur == start && next == fp && dir == fd => break,
            None => first_move = Some((next, dir)),
            _ => {}
        }
        boundary.push((next.0, next.1));
        backtrack = last_bg;
        cur = next;
    }
    // Drop the duplicated closing start pixel if present.
    if boundary.len() > 1 && boundary.last() == boundary.first() {
        boundary.pop();
    }
    boundary
        .into_iter()
        .map(|(x, y)| (x as u32 + xmin, y as u32 + ymin))
        .collect()
}

/// Andrew monotone-chain convex hull of points; returned counter-clockwise
/// (in y-up terms) without repeated endpoint.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    libm::hypot(a.0 - b.0, a.1 - b.1)
}

/// Maximum pairwise distance over hull points.
fn max_caliper(hull: &[(f64, f64)]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            let d = dist(hull[i], hull[j]);
            if d > best {
                best = d;
            }
        }
    }
    best
}

/// Minimum width over hull edge directions: for each edge, the maximum
/// distance of any hull point from the edge's supporting line.
fn min_caliper(hull: &[(f64, f64)]) -> f64 {
    if hull.len() < 3 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let len = dist(a, b);
        if len == 0.0 {
            continue;
        }
        let mut width = 0.0f64;
        for &p in hull {
            let d = ((b.0 - a.0) * (a.1 - p.1) - (b.1 - a.1) * (a.0 - p.0)).abs() / len;
            if d > width {
                width = d;
            }
        }
        if width < best {
            best = width;
        }
    }
    best
}

/// Compute the full descriptor suite for one region.
///
/// Single-pixel conventions: perimeter 4, feret = breadth = 1,
/// min_r = max_r = 0.5 (circularity pi/4, sphericity 1, mod ratio 1).
/// Degenerate calipers (collinear boundaries) are clamped to one pixel of
/// extent so every ratio stays finite.
pub fn shape_descriptors(region: &Region) -> ShapeDescriptors {
    let area = region.pixel_count as f64;

    let perimeter = if region.pixel_count == 1 {
        4.0
    } else {
        let b = &region.boundary;
        let mut p = 0.0;
        for i in 0..b.len() {
            let a = b[i];
            let c = b[(i + 1) % b.len()];
            let dx = (a.0 as i64 - c.0 as i64).abs();
            let dy = (a.1 as i64 - c.1 as i64).abs();
            p += if dx + dy == 2 && dx == 1 {
                core::f64::consts::SQRT_2
            } else {
                (dx + dy) as f64
            };
        }
        p.max(4.0)
    };

    let pts: Vec<(f64, f64)> = region
        .boundary
        .iter()
        .map(|&(x, y)| (x as f64, y as f64))
        .collect();
    let hull = convex_hull(&pts);
    let feret = max_caliper(&hull).max(1.0);
    let breadth = min_caliper(&hull).max(1.0);
    let breadth = breadth.min(feret);

    // Radii measured in bbox-local coordinates so translated copies of a
    // region get bit-identical descriptors. The local centroid is recomputed
    // from the runs; deriving it from the absolute centroid could round.
    let (x0, y0, _, _) = region.bbox;
    let mut sum_x2 = 0u64;
    let mut sum_y2 = 0u64;
    for r in &region.runs {
        let n = (r.x1 - r.x0 + 1) as u64;
        sum_x2 += n * ((r.x0 - x0) as u64 + (r.x1 - x0) as u64);
        sum_y2 += 2 * n * (r.y - y0) as u64;
    }
    let cx = sum_x2 as f64 / (2 * region.pixel_count) as f64;
    let cy = sum_y2 as f64 / (2 * region.pixel_count) as f64;
    let mut min_r = f64::INFINITY;
    let mut max_r = 0.0f64;
    for &(x, y) in &region.boundary {
        let d = libm::hypot((x - x0) as f64 - cx, (y - y0) as f64 - cy);
        min_r = min_r.min(d);
        max_r = max_r.max(d);
    }
    let min_r = min_r.max(0.5);
    let max_r = max_r.max(0.5);

    ShapeDescriptors {
        area,
        perimeter,
        feret,
        breadth,
        aspect_ratio: feret / breadth,
        circularity: 4.0 * PI * area / (perimeter * perimeter),
        compactness: libm::sqrt(4.0 * area / PI) / feret,
        min_r,
        max_r,
        sphericity: min_r / max_r,
        mod_ratio: 2.0 * min_r / feret,
    }
}

/// Keep regions with `min_area <= pixel_count <= max_area`, preserving order.
pub fn filter_by_size(
    regions: Vec<Region>,
    min_area: usize,
    max_area: usize,
) -> Result<Vec<Region>, InvalidBounds> {
    if min_area > max_area || min_area == 0 {
        return Err(InvalidBounds { min_area, max_area });
    }
    Ok(regions
        .into_iter()
        .filter(|r| (min_area..=max_area).contains(&r.pixel_count))
        .collect())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        // Smaller root wins so the representative stays the earliest run.
        match ra.cmp(&rb) {
            core::cmp::Ordering::Less => self.parent[rb] = ra,
            core::cmp::Ordering::Greater => self.parent[ra] = rb,
            core::cmp::Ordering::Equal => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::BitMask;
    use alloc::collections::BTreeSet;
    use alloc::vec;

    fn mask_from(rows: &[&str]) -> BitMask {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        let bits = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        BitMask::new(w, h, bits).unwrap()
    }

    fn disc_mask(size: u32, cx: f64, cy: f64, r: f64) -> BitMask {
        let mut m = BitMask::empty(size, size).unwrap();
        for y in 0..size {
            for x in 0..size {
                if libm::hypot(x as f64 - cx, y as f64 - cy) <= r {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    #[test]
    fn single_pixel() {
        let m = mask_from(&["...", ".#.", "..."]);
        let regions = label_components(&m, Connectivity::Eight);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].pixel_count, 1);
        let d = shape_descriptors(&regions[0]);
        assert_eq!(d.perimeter, 4.0);
        assert_eq!(d.feret, 1.0);
        assert_eq!(d.breadth, 1.0);
        assert!((d.circularity - PI / 4.0).abs() < 1e-12);
        assert_eq!(d.sphericity, 1.0);
        assert_eq!(d.mod_ratio, 1.0);
    }

    #[test]
    fn checkerboard_connectivity() {
        let m = mask_from(&["#.", ".#"]);
        assert_eq!(label_components(&m, Connectivity::Four).len(), 2);
        let eight = label_components(&m, Connectivity::Eight);
        assert_eq!(eight.len(), 1);
        assert_eq!(eight[0].pixel_count, 2);
    }

    #[test]
    fn labels_in_raster_order() {
        let m = mask_from(&["#..#", "....", "#..."]);
        let regions = label_components(&m, Connectivity::Eight);
        assert_eq!(regions.len(), 3);
        assert_eq!(regions[0].pixels().next(), Some((0, 0)));
        assert_eq!(regions[1].pixels().next(), Some((3, 0)));
        assert_eq!(regions[2].pixels().next(), Some((0, 2)));
    }

    /// Recursive flood fill oracle: partition of foreground pixels.
    fn flood_partition(mask: &BitMask, conn: Connectivity) -> Vec<BTreeSet<(u32, u32)>> {
        let mut seen = vec![false; (mask.width() * mask.height()) as usize];
        let idx = |x: u32, y: u32| (y * mask.width() + x) as usize;
        let mut out = Vec::new();
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                if !mask.get(x, y) || seen[idx(x, y)] {
                    continue;
                }
                let mut comp = BTreeSet::new();
                let mut stack = vec![(x, y)];
                seen[idx(x, y)] = true;
                while let Some((px, py)) = stack.pop() {
                    comp.insert((px, py));
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            if dx == 0 && dy == 0 {
                                continue;
                            }
                            if matches!(conn, Connectivity::Four) && dx != 0 && dy != 0 {
                                continue;
                            }
                            let nx = px as i64 + dx;
                            let ny = py as i64 + dy;
                            if nx < 0
                                || ny < 0
                                || nx >= mask.width() as i64
                                || ny >= mask.height() as i64
                            {
                                continue;
                            }
                            let (nx, ny) = (nx as u32, ny as u32);
                            if mask.get(nx, ny) && !seen[idx(nx, ny)] {
                                seen[idx(nx, ny)] = true;
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
                out.push(comp);
            }
        }
        out
    }

    #[test]
    fn random_masks_match_flood_fill() {
        let mut rng = crate::rng::SeqRng::new(99);
        for trial in 0..50 {
            let w = rng.next_int(1, 16);
            let h = rng.next_int(1, 16);
            let bits: Vec<bool> = (0..w * h).map(|_| rng.next_unit() < 0.45).collect();
            let mask = BitMask::new(w, h, bits).unwrap();
            for conn in [Connectivity::Four, Connectivity::Eight] {
                let regions = label_components(&mask, conn);
                let oracle = flood_partition(&mask, conn);
                assert_eq!(regions.len(), oracle.len(), "trial {trial}");
                for (r, o) in regions.iter().zip(&oracle) {
                    let got: BTreeSet<(u32, u32)> = r.pixels().collect();
                    assert_eq!(&got, o, "trial {trial}");
                }
            }
        }
    }

    #[test]
    fn partition_property() {
        let mut rng = crate::rng::SeqRng::new(5);
        let bits: Vec<bool> = (0..32 * 32).map(|_| rng.next_unit() < 0.5).collect();
        let mask = BitMask::new(32, 32, bits).unwrap();
        let regions = label_components(&mask, Connectivity::Eight);
        let total: usize = regions.iter().map(|r| r.pixel_count).sum();
        assert_eq!(total, mask.count_set());
    }

    #[test]
    fn square_descriptors() {
        let mut m = BitMask::empty(110, 110).unwrap();
        for y in 0..100 {
            for x in 0..100 {
                m.set(x + 5, y + 5, true);
            }
        }
        let regions = label_components(&m, Connectivity::Eight);
        assert_eq!(regions.len(), 1);
        let d = shape_descriptors(&regions[0]);
        assert_eq!(d.area, 10_000.0);
        assert!((d.feret - 99.0 * core::f64::consts::SQRT_2).abs() < 1e-9);
        assert!((d.breadth - 99.0).abs() < 1e-9);
        assert!((d.circularity - PI / 4.0).abs() <= 0.05, "{}", d.circularity);
        // Algebraic cross-check on stored fields.
        assert!((d.circularity * d.perimeter * d.perimeter - 4.0 * PI * d.area).abs() < 1e-6);
    }

    #[test]
    fn disc_descriptors() {
        let m = disc_mask(100, 49.5, 49.5, 40.0);
        let regions = label_components(&m, Connectivity::Eight);
        assert_eq!(regions.len(), 1);
        let d = shape_descriptors(&regions[0]);
        assert!(d.circularity >= 0.88 && d.circularity <= 1.08, "{}", d.circularity);
        assert!(d.sphericity >= 0.9, "{}", d.sphericity);
        assert!(d.aspect_ratio <= 1.1, "{}", d.aspect_ratio);
    }

    #[test]
    fn thin_line_descriptors() {
        let m = mask_from(&["####################"]);
        let regions = label_components(&m, Connectivity::Eight);
        let d = shape_descriptors(&regions[0]);
        assert!(d.aspect_ratio >= 10.0, "{}", d.aspect_ratio);
        assert!(d.sphericity <= 0.2, "{}", d.sphericity);
    }

    fn ellipse_mask(angle_deg: f64) -> BitMask {
        let (a, b) = (35.0, 15.0);
        let th = angle_deg * PI / 180.0;
        let mut m = BitMask::empty(120, 120).unwrap();
        for y in 0..120u32 {
            for x in 0..120u32 {
                let dx = x as f64 - 59.5;
                let dy = y as f64 - 59.5;
                let u = dx * libm::cos(th) + dy * libm::sin(th);
                let v = -dx * libm::sin(th) + dy * libm::cos(th);
                if u * u / (a * a) + v * v / (b * b) <= 1.0 {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    #[test]
    fn ellipse_rotation_robustness() {
        let mut ferets = Vec::new();
        let mut breadths = Vec::new();
        for ang in [0.0, 30.0, 45.0, 60.0, 90.0] {
            let m = ellipse_mask(ang);
            let regions = label_components(&m, Connectivity::Eight);
            assert_eq!(regions.len(), 1);
            let d = shape_descriptors(&regions[0]);
            ferets.push(d.feret);
            breadths.push(d.breadth);
        }
        for vals in [&ferets, &breadths] {
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(0.0f64, f64::max);
            assert!((hi - lo) / lo <= 0.05, "variation {lo}..{hi}");
        }
    }

    #[test]
    fn translation_invariance() {
        let base = mask_from(&[
            ".###..",
            "#####.",
            ".###..",
            "..#...",
        ]);
        let mut shifted = BitMask::empty(30, 30).unwrap();
        for y in 0..4u32 {
            for x in 0..6u32 {
                if base.get(x, y) {
                    shifted.set(x + 11, y + 17, true);
                }
            }
        }
        let d0 = shape_descriptors(&label_components(&base, Connectivity::Eight)[0]);
        let d1 = shape_descriptors(&label_components(&shifted, Connectivity::Eight)[0]);
        assert_eq!(d0, d1);
    }

    #[test]
    fn filter_by_size_cases() {
        let m = mask_from(&["#.##.#####"]);
        let regions = label_components(&m, Connectivity::Four);
        let areas: Vec<usize> = regions.iter().map(|r| r.pixel_count).collect();
        assert_eq!(areas, vec![1, 2, 5]);
        let kept = filter_by_size(regions.clone(), 2, 4).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].pixel_count, 2);
        let all = filter_by_size(regions.clone(), 1, usize::MAX).unwrap();
        assert_eq!(all.len(), 3);
        assert!(filter_by_size(regions, 5, 2).is_err());
    }

    #[test]
    fn descriptor_sanity_random_regions() {
        let mut rng = crate::rng::SeqRng::new(321);
        for _ in 0..30 {
            let bits: Vec<bool> = (0..20 * 20).map(|_| rng.next_unit() < 0.4).collect();
            let mask = BitMask::new(20, 20, bits).unwrap();
            for r in label_components(&mask, Connectivity::Eight) {
                let d = shape_descriptors(&r);
                assert!(d.aspect_ratio >= 1.0);
                assert!(d.sphericity > 0.0 && d.sphericity <= 1.0);
                assert!(d.perimeter > 0.0);
                assert!(d.breadth > 0.0);
                let (cx, cy) = r.centroid;
                let (x0, y0, x1, y1) = r.bbox;
                assert!(cx >= x0 as f64 && cx <= x1 as f64);
                assert!(cy >= y0 as f64 && cy <= y1 as f64);
            }
        }
    }
}
