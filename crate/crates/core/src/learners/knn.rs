//! Uniform-weight k-nearest-neighbors regression under unscaled Euclidean
//! distance. Distance ties go to the lower training row index.

use super::{FeatureTable, FittedModel};

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    x: FeatureTable,
    y: Vec<f64>,
}

pub fn fit_knn(x: &FeatureTable, y: &[f64], k: usize) -> KnnModel {
    KnnModel { k: k.clamp(1, y.len()), x: x.clone(), y: y.to_vec() }
}

impl KnnModel {
    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let k = self.k;
        // Sorted buffer of (distance², index); insertion keeps (dist, index) order.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, row) in self.x.rows().enumerate() {
            let dist: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.len() == k && dist >= best[k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(d, _)| d <= dist);
            best.insert(pos, (dist, i));
            best.truncate(k);
        }
        best.into_iter().map(|(_, i)| i).collect()
    }
}

impl FittedModel for KnnModel {
    fn predict(&self, x: &[f64]) -> f64 {
        let nb = self.neighbors(x);
        nb.iter().map(|&i| self.y[i]).sum::<f64>() / nb.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (FeatureTable, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..25).map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()]).collect();
        let y = (0..25).map(|i| (i * i % 7) as f64 - 2.5).collect();
        (FeatureTable::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn one_neighbor_reproduces_training_point() {
        let (x, y) = data();
        let m = fit_knn(&x, &y, 1);
        for (i, row) in x.rows().enumerate() {
            assert_eq!(m.predict(row), y[i]);
        }
    }

    #[test]
    fn all_neighbors_give_mean() {
        let (x, y) = data();
        let m = fit_knn(&x, &y, 1000);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        for q in [[0.0, 0.0], [5.0, -3.0]] {
            assert!((m.predict(&q) - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_prefer_lower_index() {
        let x = FeatureTable::from_rows(&[vec![1.0], vec![-1.0], vec![1.0]]).unwrap();
        let m = fit_knn(&x, &[10.0, 20.0, 30.0], 1);
        assert_eq!(m.neighbors(&[0.0]), vec![0]);
        let m2 = fit_knn(&x, &[10.0, 20.0, 30.0], 2);
        assert_eq!(m2.neighbors(&[0.0]), vec![0, 1]);
        assert_eq!(m2.neighbors(&[1.0]), vec![0, 2]);
    }
}
