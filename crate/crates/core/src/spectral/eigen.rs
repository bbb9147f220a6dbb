use super::FourierGrid;
use crate::Real;

/// A cluster of lattice frequencies sharing one Laplacian eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenLevel<T> {
    /// Smallest `Q(m)` in the cluster.
    pub mu: T,
    pub members: Vec<(i64, i64)>,
}

impl<T> EigenLevel<T> {
    /// Whether all members are sign flips `(±m₁, ±m₂)` of one frequency.
    pub fn is_sign_orbit(&self) -> bool {
        let Some(&(a, b)) = self.members.first() else { return true };
        self.members.iter().all(|&(m1, m2)| m1.abs() == a.abs() && m2.abs() == b.abs())
    }
}

/// Group the grid frequencies into eigenvalue levels: sorted by `Q`, a new
/// level starts whenever `Q` exceeds the level's first value by more than
/// `tol`.
pub fn eigen_levels<T: Real>(grid: &FourierGrid<T>, tol: T) -> Vec<EigenLevel<T>> {
    let mut modes: Vec<(T, (i64, i64))> = (0..grid.len()).map(|i| (grid.symbol_at(i), grid.frequency(i))).collect();
    modes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut levels: Vec<EigenLevel<T>> = Vec::new();
    for (q, m) in modes {
        match levels.last_mut() {
            Some(level) if q - level.mu <= tol => level.members.push(m),
            _ => levels.push(EigenLevel { mu: q, members: vec![m] }),
        }
    }
    levels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGeometry;

    #[test]
    fn standard_geometry_levels_are_sign_orbits() {
        // |m| <= 64 on each axis.
        let grid = FourierGrid::new(TorusGeometry::<f64>::standard(), 130).unwrap();
        let levels = eigen_levels(&grid, 1e-6);
        let worst = levels.iter().map(|l| l.members.len()).max().unwrap();
        assert!(worst <= 4, "largest level has {worst} members");
        assert!(levels.iter().all(|l| l.is_sign_orbit()));
        assert_eq!(levels.iter().map(|l| l.members.len()).sum::<usize>(), grid.len());
    }

    #[test]
    fn root_two_scale_has_integer_collisions() {
        // θ = (1, √2) gives the integer form m₁² + 2m₂²: 9 = 3² = 1 + 2·2².
        let grid = FourierGrid::new(TorusGeometry::new(1.0, 2f64.sqrt()).unwrap(), 8).unwrap();
        let levels = eigen_levels(&grid, 1e-6);
        let nine = levels.iter().find(|l| (l.mu - 9.0).abs() < 1e-9).unwrap();
        assert_eq!(nine.members.len(), 6);
        assert!(!nine.is_sign_orbit());
    }
}
