//! Convex hull of pixel centers and exact counting of the lattice points
//! inside or on the hull polygon. All arithmetic is integer, so the
//! solidity denominator is exact and solidity <= 1 holds exactly.

/// Monotone-chain convex hull over integer points (row, col).
/// Returns the hull vertices with strictly convex turns, oriented so the
/// shoelace sum is non-negative. Collinear inputs yield the two extreme
/// points; a single point yields itself.
pub fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts: Vec<(i64, i64)> = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let n = pts.len();
    if n <= 2 {
        return pts;
    }

    fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    }

    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        // All points collinear; keep the two extremes.
        return vec![pts[0], pts[n - 1]];
    }
    hull
}

/// Number of integer points inside or on the convex hull polygon.
pub fn lattice_points_in_hull(hull: &[(i64, i64)]) -> u64 {
    match hull.len() {
        0 => 0,
        1 => 1,
        2 => {
            let dr = (hull[1].0 - hull[0].0).unsigned_abs();
            let dc = (hull[1].1 - hull[0].1).unsigned_abs();
            gcd(dr, dc) + 1
        }
        _ => scan_convex_polygon(hull),
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Row scan of a strictly convex polygon: for each integer row, the
/// admissible columns form an interval whose bounds come from the edge
/// half-planes; ceil/floor division keeps everything exact.
fn scan_convex_polygon(hull: &[(i64, i64)]) -> u64 {
    let min_r = hull.iter().map(|p| p.0).min().unwrap();
    let max_r = hull.iter().map(|p| p.0).max().unwrap();

    // Orient so that interior-or-boundary is cross(q - p, x - p) >= 0.
    let shoelace: i64 = hull
        .iter()
        .zip(hull.iter().cycle().skip(1))
        .map(|(p, q)| p.0 * q.1 - q.0 * p.1)
        .sum();
    let flip = shoelace < 0;

    let mut count = 0u64;
    for r in min_r..=max_r {
        let mut lo = i64::MIN;
        let mut hi = i64::MAX;
        let mut empty = false;
        for i in 0..hull.len() {
            let p = hull[i];
            let q = hull[(i + 1) % hull.len()];
            // cross(q - p, x - p) = (q.0-p.0)*(c-p.1) - (q.1-p.1)*(r-p.0)
            let (a, b) = if flip {
                (-(q.0 - p.0), -(q.1 - p.1))
            } else {
                (q.0 - p.0, q.1 - p.1)
            };
            let rhs = b * (r - p.0) + a * p.1;
            // constraint: a * c >= rhs
            match a.cmp(&0) {
                std::cmp::Ordering::Greater => lo = lo.max(div_ceil_i64(rhs, a)),
                std::cmp::Ordering::Less => hi = hi.min(div_floor_i64(rhs, a)),
                std::cmp::Ordering::Equal => {
                    if rhs > 0 {
                        empty = true;
                        break;
                    }
                }
            }
        }
        if !empty && lo <= hi {
            count += (hi - lo + 1) as u64;
        }
    }
    count
}

fn div_floor_i64(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil_i64(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Brute-force membership: a point is in the hull of S iff adding it
    /// leaves the hull vertex set unchanged.
    fn in_hull_by_recompute(points: &[(i64, i64)], q: (i64, i64)) -> bool {
        let base = convex_hull(points);
        let mut extended = points.to_vec();
        extended.push(q);
        convex_hull(&extended) == base
    }

    fn oracle_count(points: &[(i64, i64)]) -> u64 {
        let min_r = points.iter().map(|p| p.0).min().unwrap();
        let max_r = points.iter().map(|p| p.0).max().unwrap();
        let min_c = points.iter().map(|p| p.1).min().unwrap();
        let max_c = points.iter().map(|p| p.1).max().unwrap();
        let mut n = 0;
        for r in min_r..=max_r {
            for c in min_c..=max_c {
                if in_hull_by_recompute(points, (r, c)) {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn known_shapes() {
        // Single point.
        assert_eq!(lattice_points_in_hull(&convex_hull(&[(3, 4)])), 1);
        // Diagonal segment (0,0)-(2,2): lattice points on it are 3.
        assert_eq!(lattice_points_in_hull(&convex_hull(&[(0, 0), (2, 2)])), 3);
        // 5x3 solid rectangle: all 15 centers.
        let rect: Vec<_> = (0..3).flat_map(|r| (0..5).map(move |c| (r, c))).collect();
        assert_eq!(lattice_points_in_hull(&convex_hull(&rect)), 15);
        // Plus-sign pentomino: hull is the diamond |r|+|c| <= 1, holding
        // exactly the five member points.
        let plus = vec![(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)];
        assert_eq!(lattice_points_in_hull(&convex_hull(&plus)), 5);
    }

    #[test]
    fn count_matches_recompute_oracle_on_random_point_sets() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.gen_range(1..12);
            let points: Vec<(i64, i64)> =
                (0..n).map(|_| (rng.gen_range(-8..9), rng.gen_range(-8..9))).collect();
            let hull = convex_hull(&points);
            assert_eq!(
                lattice_points_in_hull(&hull),
                oracle_count(&points),
                "points: {points:?}"
            );
            // Every input point is inside or on its own hull.
            for &p in &points {
                assert!(in_hull_by_recompute(&points, p));
            }
        }
    }

    #[test]
    fn hull_vertices_are_input_points_and_convex() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        for _ in 0..100 {
            let n = rng.gen_range(3..30);
            let points: Vec<(i64, i64)> =
                (0..n).map(|_| (rng.gen_range(0..20), rng.gen_range(0..20))).collect();
            let hull = convex_hull(&points);
            for v in &hull {
                assert!(points.contains(v));
            }
            if hull.len() >= 3 {
                let m = hull.len();
                for i in 0..m {
                    let o = hull[i];
                    let a = hull[(i + 1) % m];
                    let b = hull[(i + 2) % m];
                    let cross = (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
                    assert!(cross > 0, "strictly convex turns expected");
                }
            }
        }
    }
}
