use crate::grid::DiscreteField;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct PeakInfo {
    pub node: usize,
    /// Argmax refined by a parabola through the neighbors along each axis.
    pub position: Vec<f64>,
    pub height: f64,
    /// Second-highest local maximum over the highest.
    pub second_ratio: f64,
    /// Set when the second local maximum exceeds 90% of the first.
    pub multi_peak: bool,
}

pub fn peak_location(u: &DiscreteField) -> PeakInfo {
    let g = &u.grid;
    let n = g.dim();
    let v = &u.values;
    let (node, top) = u.argmax();
    let idx = g.multi_index(node);
    let neighbor = |d: usize, s: isize| {
        let mut j = idx.clone();
        j[d] = (j[d] as isize + s).rem_euclid(g.shape[d] as isize) as usize;
        v[g.flat_index(&j)]
    };
    let mut position = g.node(node);
    let mut height = top;
    for d in 0..n {
        let (fm, fp) = (neighbor(d, -1), neighbor(d, 1));
        let curv = fm - 2.0 * top + fp;
        if curv < 0.0 {
            let off = 0.5 * (fm - fp) / curv;
            position[d] += off * g.spacing(d);
            height -= 0.25 * (fm - fp) * off;
        }
        position[d] = position[d].rem_euclid(g.periods[d]);
        // rem_euclid of a tiny negative number rounds up to the period
        if position[d] >= g.periods[d] {
            position[d] = 0.0;
        }
    }
    // local maxima over the 3^n stencil, excluding the global one
    let mut second = f64::NEG_INFINITY;
    let offsets: Vec<Vec<isize>> = (0..3usize.pow(n as u32))
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let o = (k % 3) as isize - 1;
                    k /= 3;
                    o
                })
                .collect()
        })
        .filter(|o: &Vec<isize>| o.iter().any(|&x| x != 0))
        .collect();
    for k in 0..v.len() {
        if k == node || v[k] <= second {
            continue;
        }
        let ik = g.multi_index(k);
        let is_max = offsets.iter().all(|o| {
            let j: Vec<usize> =
                ik.iter().zip(o).zip(&g.shape).map(|((&a, &b), &m)| (a as isize + b).rem_euclid(m as isize) as usize).collect();
            v[g.flat_index(&j)] <= v[k]
        });
        if is_max {
            second = v[k];
        }
    }
    let second_ratio = if top > 0.0 && second.is_finite() { second / top } else if second.is_finite() { 1.0 } else { 0.0 };
    PeakInfo { node, position, height, second_ratio, multi_peak: second_ratio > 0.9 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::manifold::{FlatTorus, Manifold};
    use std::sync::Arc;

    fn grid() -> Arc<PeriodicGrid> {
        let t: Arc<dyn Manifold> = Arc::new(FlatTorus::new(vec![4.0, 4.0]).unwrap());
        Arc::new(PeriodicGrid::new(t, vec![40, 40]).unwrap())
    }

    #[test]
    fn subcell_shift_is_recovered() {
        let g = grid();
        let h = g.spacing(0);
        let c = [2.0 + 0.5 * h, 1.0 - 0.3 * h];
        // a smooth bump whose maximum sits between nodes
        let u = DiscreteField::from_fn(g.clone(), |x| (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / 0.3).exp());
        let p = peak_location(&u);
        assert!((p.position[0] - c[0]).abs() < 0.1 * h, "{p:?}");
        assert!((p.position[1] - c[1]).abs() < 0.1 * h, "{p:?}");
        assert!(!p.multi_peak);
    }

    #[test]
    fn flat_and_twin_fields_are_flagged() {
        let g = grid();
        assert!(peak_location(&DiscreteField::from_fn(g.clone(), |_| 1.0)).multi_peak);
        let twin = DiscreteField::from_fn(g, |x| {
            (-((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)) / 0.1).exp()
                + 0.95 * (-((x[0] - 3.0).powi(2) + (x[1] - 3.0).powi(2)) / 0.1).exp()
        });
        let p = peak_location(&twin);
        assert!(p.multi_peak && (p.second_ratio - 0.95).abs() < 0.01);
    }
}
