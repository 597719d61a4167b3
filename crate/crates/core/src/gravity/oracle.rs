use crate::error::{CoreError, Result};

/// Potential and acceleration at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub phi: f64,
    pub g: [f64; 3],
}

/// Exact pairwise Newtonian sums (G = 1) at every input point, excluding
/// self-interaction. Contributions are summed in input order.
pub fn direct_sum_oracle(points: &[(f64, [f64; 3])]) -> Result<Vec<FieldSample>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i].1, points[j].1);
        a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j))
    });
    for w in order.windows(2) {
        if points[w[0]].1 == points[w[1]].1 {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(CoreError::DuplicatePositions(a, b));
        }
    }
    if let Some(i) = points.iter().position(|(m, x)| !m.is_finite() || x.iter().any(|v| !v.is_finite())) {
        return Err(CoreError::NonFinite(format!("point {i}")));
    }
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, &(_, xi))| {
            let mut phi = 0.0;
            let mut g = [0.0; 3];
            for (j, &(mj, xj)) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = [xj[0] - xi[0], xj[1] - xi[1], xj[2] - xi[2]];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let r = r2.sqrt();
                phi -= mj / r;
                let s = mj / (r2 * r);
                for a in 0..3 {
                    g[a] += s * d[a];
                }
            }
            FieldSample { phi, g }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_unit_masses() {
        let out = direct_sum_oracle(&[(1.0, [0.0; 3]), (1.0, [1.0, 0.0, 0.0])]).unwrap();
        assert_eq!(out[0].g, [1.0, 0.0, 0.0]);
        assert_eq!(out[1].g, [-1.0, 0.0, 0.0]);
        assert_eq!(out[0].phi, -1.0);
    }

    #[test]
    fn single_mass_feels_nothing() {
        let out = direct_sum_oracle(&[(5.0, [1.0, 2.0, 3.0])]).unwrap();
        assert_eq!(out[0], FieldSample { phi: 0.0, g: [0.0; 3] });
    }

    #[test]
    fn duplicates_rejected() {
        let p = [(1.0, [0.0; 3]), (2.0, [1.0; 3]), (1.0, [0.0; 3])];
        assert_eq!(direct_sum_oracle(&p), Err(CoreError::DuplicatePositions(0, 2)));
    }
}
