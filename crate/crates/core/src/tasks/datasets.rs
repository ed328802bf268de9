use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Images as `[0, 1]` vectors with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Sorted distinct labels.
    pub classes: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(images: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Consistency(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(v) = images.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("pixel value {v} outside [0, 1]")));
        }
        let classes: BTreeSet<usize> = labels.iter().copied().collect();
        Ok(Self {
            images,
            labels,
            classes: classes.into_iter().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.images.first().map_or(0, Vec::len)
    }
}

/// One dataset per phase holding exactly that phase's classes, original order kept.
pub fn class_incremental_split(dataset: &LabeledDataset, phases: &[Vec<usize>]) -> Result<Vec<LabeledDataset>> {
    let mut seen = BTreeSet::new();
    for phase in phases {
        for &c in phase {
            if !seen.insert(c) {
                return Err(Error::Domain(format!("class {c} appears in more than one phase")));
            }
        }
    }
    phases
        .iter()
        .map(|phase| {
            let (images, labels) = dataset
                .images
                .iter()
                .zip(&dataset.labels)
                .filter(|(_, l)| phase.contains(l))
                .map(|(i, &l)| (i.clone(), l))
                .unzip();
            LabeledDataset::new(images, labels)
        })
        .collect()
}

/// `n_per_class` points per class; class `c` is centred on the unit vector
/// `e_c` of `[0, 1]^dim` with isotropic Gaussian spread, clamped to `[0, 1]`.
/// Samples are emitted class by class.
pub fn synthetic_clusters(
    n_per_class: usize,
    classes: usize,
    dim: usize,
    spread: f64,
    rng: &mut SeededRng,
) -> Result<LabeledDataset> {
    if classes < 2 {
        return Err(Error::Domain("synthetic clusters need at least 2 classes".into()));
    }
    if classes > dim {
        return Err(Error::Domain(format!("{classes} classes need dim >= {classes}, got {dim}")));
    }
    let mut images = Vec::with_capacity(n_per_class * classes);
    let mut labels = Vec::with_capacity(n_per_class * classes);
    for c in 0..classes {
        for _ in 0..n_per_class {
            let x = (0..dim)
                .map(|d| {
                    let center = if d == c { 1.0 } else { 0.0 };
                    (center + spread * rng.normal()).clamp(0.0, 1.0)
                })
                .collect();
            images.push(x);
            labels.push(c);
        }
    }
    LabeledDataset::new(images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledDataset {
        let labels = vec![0, 2, 1, 3, 0, 2, 4];
        let images = labels.iter().map(|&l| vec![l as f64 / 4.0]).collect();
        LabeledDataset::new(images, labels).unwrap()
    }

    #[test]
    fn split_keeps_phase_classes_in_order() {
        let phases = class_incremental_split(&toy(), &[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(phases[0].labels, vec![0, 1, 0]);
        assert!(phases[0].labels.iter().all(|&l| l < 2));
        assert_eq!(phases[1].labels, vec![2, 3, 2]);
        assert_eq!(phases[0].len() + phases[1].len(), 6);
    }

    #[test]
    fn single_phase_is_identity() {
        let d = toy();
        let phases = class_incremental_split(&d, std::slice::from_ref(&d.classes)).unwrap();
        assert_eq!(phases[0], d);
    }

    #[test]
    fn overlapping_phases_rejected() {
        assert!(matches!(
            class_incremental_split(&toy(), &[vec![0, 1], vec![1]]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_spread_is_exact_centres() {
        let d = synthetic_clusters(4, 3, 5, 0.0, &mut SeededRng::new(1)).unwrap();
        for (x, &l) in d.images.iter().zip(&d.labels) {
            let mut centre = vec![0.0; 5];
            centre[l] = 1.0;
            assert_eq!(x, &centre);
        }
        for c in 0..3 {
            assert_eq!(d.labels.iter().filter(|&&l| l == c).count(), 4);
        }
    }

    #[test]
    fn nearest_centre_classifier_is_accurate() {
        let d = synthetic_clusters(200, 3, 8, 0.05, &mut SeededRng::new(2)).unwrap();
        let correct = d
            .images
            .iter()
            .zip(&d.labels)
            .filter(|(x, &l)| {
                let dist = |c: usize| -> f64 {
                    x.iter()
                        .enumerate()
                        .map(|(k, v)| (v - if k == c { 1.0 } else { 0.0 }).powi(2))
                        .sum()
                };
                (0..3).min_by(|&a, &b| dist(a).total_cmp(&dist(b))) == Some(l)
            })
            .count();
        assert!(correct as f64 / d.len() as f64 >= 0.99);
    }

    #[test]
    fn single_class_rejected() {
        assert!(synthetic_clusters(3, 1, 4, 0.1, &mut SeededRng::new(0)).is_err());
    }
}
