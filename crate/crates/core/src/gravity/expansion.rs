use super::moments::Multipole;
use super::tensor::{
    contract2_1, contract2_3, contract2_4, contract3_1, contract3_4, contract4_1, dot2, dot3, dot4, outer2, outer3, outer4,
};
use crate::error::{CoreError, Result};
use crate::simd::{m2l_terms, EXPANSION_LEN};

/// Taylor coefficients of the potential about an expansion center, packed
/// as L0, L1 (3), L2 (6), L3 (10), L4 (15).
pub type Expansion = [f64; EXPANSION_LEN];

/// Expansion about `center` of the potential of `source`.
pub fn m2l(center: [f64; 3], source: &Multipole) -> Expansion {
    let r = std::array::from_fn(|a| center[a] - source.com[a]);
    m2l_terms(r, source.m, &source.quad, &source.oct).map(|v| -v)
}

/// Expansions of `b` about `a.com` and of `a` about `b.com`, from one
/// separation vector; the derivative tensors of the reverse direction are
/// exact sign flips, so the implied pair forces cancel.
pub fn m2l_pair(a: &Multipole, b: &Multipole) -> Result<(Expansion, Expansion)> {
    if a.com == b.com {
        return Err(CoreError::DegenerateSeparation);
    }
    Ok((m2l(a.com, b), m2l(b.com, a)))
}

/// Re-centers `parent` by `delta` (new center minus old). Exact for the
/// quartic the coefficients describe.
pub fn l2l(parent: &Expansion, delta: [f64; 3]) -> Expansion {
    let l1 = [parent[1], parent[2], parent[3]];
    let mut l2 = [0.0; 6];
    l2.copy_from_slice(&parent[4..10]);
    let mut l3 = [0.0; 10];
    l3.copy_from_slice(&parent[10..20]);
    let mut l4 = [0.0; 15];
    l4.copy_from_slice(&parent[20..35]);
    let dd = outer2(delta);
    let ddd = outer3(delta);
    let mut out = *parent;
    out[0] += l1[0] * delta[0]
        + l1[1] * delta[1]
        + l1[2] * delta[2]
        + 0.5 * dot2(&l2, &dd)
        + dot3(&l3, &ddd) / 6.0
        + dot4(&l4, &outer4(delta)) / 24.0;
    let l2d = contract2_1(&l2, delta);
    let l3dd = contract2_3(&dd, &l3);
    let l4ddd = contract3_4(&ddd, &l4);
    for k in 0..3 {
        out[1 + k] += l2d[k] + 0.5 * l3dd[k] + l4ddd[k] / 6.0;
    }
    let l3d = contract3_1(&l3, delta);
    let l4dd = contract2_4(&dd, &l4);
    for k in 0..6 {
        out[4 + k] += l3d[k] + 0.5 * l4dd[k];
    }
    let l4d = contract4_1(&l4, delta);
    for k in 0..10 {
        out[10 + k] += l4d[k];
    }
    out
}

/// Potential and acceleration at the expansion center.
pub fn evaluate(l: &Expansion) -> (f64, [f64; 3]) {
    (l[0], [-l[1], -l[2], -l[3]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic(l: &Expansion, x: [f64; 3]) -> f64 {
        // Direct evaluation of the Taylor polynomial with full index sums.
        use crate::gravity::tensor::{I2, I3, I4};
        let mut v = l[0];
        for i in 0..3 {
            v += l[1 + i] * x[i];
            for j in 0..3 {
                v += 0.5 * l[4 + I2[i][j]] * x[i] * x[j];
                for k in 0..3 {
                    v += l[10 + I3[i][j][k]] * x[i] * x[j] * x[k] / 6.0;
                    for m in 0..3 {
                        v += l[20 + I4[i][j][k][m]] * x[i] * x[j] * x[k] * x[m] / 24.0;
                    }
                }
            }
        }
        v
    }

    #[test]
    fn shift_preserves_polynomial() {
        let l: Expansion = std::array::from_fn(|i| ((i * 7 + 3) % 11) as f64 - 5.0);
        let d = [0.3, -0.2, 0.7];
        let s = l2l(&l, d);
        for x in [[0.1, 0.2, -0.3], [1.0, 0.0, 0.5], [-0.4, 0.9, 0.2]] {
            let shifted = quartic(&s, x);
            let orig = quartic(&l, [x[0] + d[0], x[1] + d[1], x[2] + d[2]]);
            assert!((shifted - orig).abs() < 1e-12 * orig.abs().max(1.0));
        }
    }

    #[test]
    fn pair_forces_cancel_and_coincidence_rejected() {
        let a = Multipole::point(2.0, [0.0, 0.0, 0.0]);
        let b = Multipole::point(3.0, [4.0, 1.0, -2.0]);
        let (la, lb) = m2l_pair(&a, &b).unwrap();
        let (_, ga) = evaluate(&la);
        let (_, gb) = evaluate(&lb);
        for k in 0..3 {
            assert_eq!(a.m * ga[k], -(b.m * gb[k]));
        }
        assert_eq!(m2l_pair(&a, &a), Err(CoreError::DegenerateSeparation));
    }

    #[test]
    fn zero_mass_source_contributes_nothing() {
        let z = Multipole::point(0.0, [3.0, 0.0, 0.0]);
        assert!(m2l([0.0; 3], &z).iter().all(|&v| v == 0.0));
    }
}
