use crate::Refused;

/// Largest matrix the enumeration accepts: 8! orderings of the non-fixed vertices.
pub const MAX_EXACT: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactTour {
    /// Starts at vertex 0; the closing edge back to 0 is implied.
    pub order: Vec<usize>,
    pub cost: f64,
}

/// Minimum-cost Hamiltonian cycle by enumerating every ordering with vertex 0 fixed.
///
/// Ties keep the lexicographically first ordering.
pub fn tsp_exact(w: &[Vec<f64>]) -> Result<ExactTour, Refused> {
    let n = w.len();
    if n > MAX_EXACT {
        return Err(Refused(format!(
            "{n} vertices, enumeration is limited to {MAX_EXACT}"
        )));
    }
    if w.iter().any(|row| row.len() != n) {
        return Err(Refused("matrix is not square".into()));
    }
    if n == 0 {
        return Ok(ExactTour {
            order: Vec::new(),
            cost: 0.0,
        });
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best = ExactTour {
        order: Vec::new(),
        cost: f64::INFINITY,
    };
    loop {
        let mut order = vec![0];
        order.extend_from_slice(&rest);
        let cost = (0..n).map(|k| w[order[k]][order[(k + 1) % n]]).sum::<f64>();
        if cost < best.cost {
            best = ExactTour { order, cost };
        }
        if !next_permutation(&mut rest) {
            return Ok(best);
        }
    }
}

/// Advances to the next lexicographic permutation; false after the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len())
        .rev()
        .find(|&j| v[j] > v[i])
        .expect("a larger element exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_exhaustive() {
        let mut v = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut v) {
            n += 1;
        }
        assert_eq!(n, 24);
    }

    #[test]
    fn trivial_and_small_cases() {
        assert_eq!(
            tsp_exact(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap().cost,
            0.0
        );
        // Square with unit sides and diagonals of 10: the perimeter wins.
        let d = |a: usize, b: usize| {
            if a == b {
                0.0
            } else if (a + b).is_multiple_of(2) {
                10.0
            } else {
                1.0
            }
        };
        let w: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| d(i, j)).collect()).collect();
        let t = tsp_exact(&w).unwrap();
        assert_eq!(t.cost, 4.0);
        assert_eq!(t.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn refuses_large_input() {
        let w = vec![vec![1.0; 10]; 10];
        assert!(tsp_exact(&w).is_err());
    }
}
