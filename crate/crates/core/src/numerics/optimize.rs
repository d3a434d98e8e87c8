use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once the simplex spread in both x and f falls below these.
    pub x_tol: f64,
    pub f_tol: f64,
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_evals: 400, x_tol: 1e-7, f_tol: 1e-12, restarts: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Box-constrained Nelder–Mead. Trial points are projected onto the box.
///
/// Each restart rebuilds the simplex around the incumbent with the initial step sizes,
/// which guards against collapse onto a face of the box.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        let v = f(x)?;
        Ok(if v.is_finite() { v } else { f64::INFINITY })
    };

    let mut best = x0.to_vec();
    clamp(&mut best);
    let mut best_f = eval(&best, &mut evals)?;
    let mut converged = false;

    for _ in 0..=opts.restarts {
        let mut simplex = vec![(best.clone(), best_f)];
        for i in 0..n {
            let mut x = best.clone();
            x[i] += step[i];
            if x[i] > upper[i] {
                x[i] = best[i] - step[i];
            }
            clamp(&mut x);
            let fx = eval(&x, &mut evals)?;
            simplex.push((x, fx));
        }
        converged = false;
        while evals < opts.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let f_spread = simplex[n].1 - simplex[0].1;
            let x_spread = (1..=n)
                .flat_map(|j| (0..n).map(move |i| (j, i)))
                .map(|(j, i)| (simplex[j].0[i] - simplex[0].0[i]).abs())
                .fold(0.0, f64::max);
            if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
                converged = true;
                break;
            }
            let centroid: Vec<f64> =
                (0..n).map(|i| simplex[..n].iter().map(|p| p.0[i]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                let mut x: Vec<f64> = (0..n).map(|i| centroid[i] + t * (simplex[n].0[i] - centroid[i])).collect();
                clamp(&mut x);
                x
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals)?;
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals)?;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[n].1 {
                let x = along(-0.5);
                let fx = eval(&x, &mut evals)?;
                (x, fx)
            } else {
                let x = along(0.5);
                let fx = eval(&x, &mut evals)?;
                (x, fx)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for p in simplex.iter_mut().skip(1) {
                let mut x: Vec<f64> = (0..n).map(|i| x_best[i] + 0.5 * (p.0[i] - x_best[i])).collect();
                clamp(&mut x);
                p.1 = eval(&x, &mut evals)?;
                p.0 = x;
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = simplex[0].1 < best_f - opts.f_tol;
        if simplex[0].1 <= best_f {
            best = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        if !improved || evals >= opts.max_evals {
            break;
        }
    }
    Ok(Minimum { x: best, f: best_f, evals, converged })
}
