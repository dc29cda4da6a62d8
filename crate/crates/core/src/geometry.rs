//! Network layout on a square torus: RU grid, random UE drops and
//! wrap-around distance/angle measurements.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Places `rows * cols` RUs at the cell centers of a uniform grid over the
/// square `[0, area_side)^2`. RUs are numbered row by row.
pub fn place_rus(rows: usize, cols: usize, area_side: f64) -> Vec<Point> {
    assert!(rows >= 1 && cols >= 1, "RU grid needs at least one row and column");
    let dx = area_side / cols as f64;
    let dy = area_side / rows as f64;
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| Point::new((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy)))
        .collect()
}

/// Drops `k_tot` UEs i.i.d. uniformly over the square.
pub fn drop_ues(k_tot: usize, area_side: f64, rng_seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    drop_ues_with(k_tot, area_side, &mut rng)
}

pub fn drop_ues_with<R: rand::Rng + ?Sized>(k_tot: usize, area_side: f64, rng: &mut R) -> Vec<Point> {
    let coord = Uniform::new(0.0, area_side).expect("area side must be positive and finite");
    (0..k_tot)
        .map(|_| Point::new(coord.sample(rng), coord.sample(rng)))
        .collect()
}

/// Minimum-image displacement `q - p` on the torus.
pub fn torus_displacement(p: Point, q: Point, area_side: f64) -> (f64, f64) {
    let wrap = |d: f64| {
        let d = d.rem_euclid(area_side);
        if d > area_side / 2.0 {
            d - area_side
        } else {
            d
        }
    };
    (wrap(q.x - p.x), wrap(q.y - p.y))
}

pub fn torus_distance(p: Point, q: Point, area_side: f64) -> f64 {
    let (dx, dy) = torus_displacement(p, q, area_side);
    dx.hypot(dy)
}

/// Radius of a disk whose area is `area / l`, i.e. the typical RU spacing.
pub fn reference_distance(area: f64, l: usize) -> f64 {
    (area / (PI * l as f64)).sqrt()
}

/// RU and UE placement for one layout.
#[derive(Debug, Clone, Serialize)]
pub struct NetworkTopology {
    pub area_side: f64,
    pub ru_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
}

impl NetworkTopology {
    pub fn new(area_side: f64, ru_positions: Vec<Point>, ue_positions: Vec<Point>) -> Self {
        Self {
            area_side,
            ru_positions,
            ue_positions,
        }
    }

    pub fn num_rus(&self) -> usize {
        self.ru_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn area(&self) -> f64 {
        self.area_side * self.area_side
    }

    pub fn distance(&self, ru: usize, ue: usize) -> f64 {
        torus_distance(self.ru_positions[ru], self.ue_positions[ue], self.area_side)
    }

    /// Azimuth of UE `ue` as seen from RU `ru`, in `(-pi, pi]`, measured on
    /// the same minimum-image displacement used for the distance.
    pub fn azimuth(&self, ru: usize, ue: usize) -> f64 {
        let (dx, dy) = torus_displacement(self.ru_positions[ru], self.ue_positions[ue], self.area_side);
        dy.atan2(dx)
    }

    /// Flat `(entity, index, x, y)` records, RUs first.
    pub fn records(&self) -> Vec<LayoutRecord> {
        let rus = self.ru_positions.iter().enumerate().map(|(i, p)| LayoutRecord {
            entity: "ru",
            index: i,
            x: p.x,
            y: p.y,
        });
        let ues = self.ue_positions.iter().enumerate().map(|(i, p)| LayoutRecord {
            entity: "ue",
            index: i,
            x: p.x,
            y: p.y,
        });
        rus.chain(ues).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LayoutRecord {
    pub entity: &'static str,
    pub index: usize,
    pub x: f64,
    pub y: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn single_ru_sits_in_the_center() {
        assert_eq!(place_rus(1, 1, 50.0), vec![Point::new(25.0, 25.0)]);
    }

    #[test]
    fn default_grid_cell_centers() {
        let rus = place_rus(3, 4, 50.0);
        assert_eq!(rus.len(), 12);
        let xs = [6.25, 18.75, 31.25, 43.75];
        let ys = [50.0 / 6.0, 25.0, 250.0 / 6.0];
        for (i, p) in rus.iter().enumerate() {
            assert!(close(p.x, xs[i % 4]), "{p:?}");
            assert!(close(p.y, ys[i / 4]), "{p:?}");
        }
    }

    #[test]
    fn two_by_two_grid() {
        let rus = place_rus(2, 2, 10.0);
        assert_eq!(
            rus,
            vec![
                Point::new(2.5, 2.5),
                Point::new(7.5, 2.5),
                Point::new(2.5, 7.5),
                Point::new(7.5, 7.5)
            ]
        );
    }

    #[test]
    fn drops_are_reproducible() {
        assert_eq!(drop_ues(100, 50.0, 7), drop_ues(100, 50.0, 7));
        assert_ne!(drop_ues(100, 50.0, 7), drop_ues(100, 50.0, 8));
    }

    #[test]
    fn drops_are_uniform() {
        let ues = drop_ues(10_000, 50.0, 3);
        let mx = ues.iter().map(|p| p.x).sum::<f64>() / 1e4;
        let my = ues.iter().map(|p| p.y).sum::<f64>() / 1e4;
        assert!((mx - 25.0).abs() < 1.0 && (my - 25.0).abs() < 1.0, "{mx} {my}");
        let one = drop_ues(1, 50.0, 11);
        assert!((0.0..50.0).contains(&one[0].x) && (0.0..50.0).contains(&one[0].y));
    }

    #[test]
    fn torus_distance_examples() {
        assert!(close(
            torus_distance(Point::new(1.0, 1.0), Point::new(49.0, 1.0), 50.0),
            2.0
        ));
        assert!(close(
            torus_distance(Point::new(0.0, 0.0), Point::new(25.0, 25.0), 50.0),
            25.0 * 2f64.sqrt()
        ));
        assert!(close(
            torus_distance(Point::new(10.0, 10.0), Point::new(13.0, 14.0), 50.0),
            5.0
        ));
    }

    #[test]
    fn reference_distance_examples() {
        assert!((reference_distance(2500.0, 12) - 8.14338).abs() < 1e-4);
        assert!(close(reference_distance(PI, 1), 1.0));
        assert!(close(reference_distance(100.0 * PI, 4), 5.0));
    }

    #[test]
    fn azimuth_follows_wrapped_displacement() {
        let topo = NetworkTopology::new(50.0, vec![Point::new(1.0, 25.0)], vec![Point::new(49.0, 25.0)]);
        // The UE is 2 m to the left across the seam.
        assert!(close(topo.azimuth(0, 0).abs(), PI));
        assert!(close(topo.distance(0, 0), 2.0));
    }

    proptest! {
        #[test]
        fn torus_distance_is_a_bounded_symmetric_metric(
            ax in 0.0..50.0f64, ay in 0.0..50.0f64, bx in 0.0..50.0f64, by in 0.0..50.0f64
        ) {
            let (a, b) = (Point::new(ax, ay), Point::new(bx, by));
            let d = torus_distance(a, b, 50.0);
            prop_assert!((d - torus_distance(b, a, 50.0)).abs() < 1e-12);
            prop_assert!(d <= 50.0 / 2f64.sqrt() + 1e-12);
            prop_assert_eq!(torus_distance(a, a, 50.0), 0.0);
        }
    }
}
