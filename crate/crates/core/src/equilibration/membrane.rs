//! Flux equilibration on uniform square meshes.
//!
//! Edge tractions come from vertex-patch balances (element equilibration
//! against the hat functions); each cell then gets a flux in
//! `Q21 x Q12` that matches the tractions and has divergence equal to the
//! negative modified load `f - r_h`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::StressField;
use crate::error::{Error, Result};
use crate::forms::MembraneLoad;
use crate::mesh::Mesh2D;
use crate::poly::Poly2;

const TEST_SEED: u64 = 0x5eed_f1a5;

/// Singular values below this are dropped in the patch pseudo-inverses.
const PINV_EPS: f64 = 1e-10;

/// Data of a single-field membrane problem: the FE flux is `grad P_h` and
/// the FE reaction is `R_h` (both bilinear interpolants of nodal values),
/// balanced against `load`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxRecovery {
    pub potential: Vec<f64>,
    pub reaction: Vec<f64>,
    pub load: MembraneLoad,
}

const LAPLACE: [[f64; 4]; 4] = [
    [4.0, -1.0, -2.0, -1.0],
    [-1.0, 4.0, -1.0, -2.0],
    [-2.0, -1.0, 4.0, -1.0],
    [-1.0, -2.0, -1.0, 4.0],
];

const MASS: [[f64; 4]; 4] = [
    [4.0, 2.0, 1.0, 2.0],
    [2.0, 4.0, 2.0, 1.0],
    [1.0, 2.0, 4.0, 2.0],
    [2.0, 1.0, 2.0, 4.0],
];

/// Local corners of cell sides `(bottom, right, top, left)`.
const SIDE_POINTS: [[(usize, usize); 2]; 4] = [
    [(0, 0), (1, 0)],
    [(1, 0), (1, 1)],
    [(0, 1), (1, 1)],
    [(0, 0), (0, 1)],
];

fn corners(mesh: &Mesh2D, c: usize, v: &[f64]) -> [f64; 4] {
    mesh.cell_nodes(c).map(|n| v[n])
}

/// FE flux and reaction of one cell in unit coordinates.
fn fe_cell(mesh: &Mesh2D, c: usize, spec: &FluxRecovery) -> ([Poly2; 2], Poly2) {
    let p = Poly2::bilinear(corners(mesh, c, &spec.potential));
    let inv_h = 1.0 / mesh.h;
    (
        [p.dx().scale(inv_h), p.dy().scale(inv_h)],
        Poly2::bilinear(corners(mesh, c, &spec.reaction)),
    )
}

pub(crate) fn fe_stress(mesh: &Mesh2D, spec: &FluxRecovery) -> StressField {
    let (flux, reaction) = (0..mesh.n_cells()).map(|c| fe_cell(mesh, c, spec)).unzip();
    StressField::Membrane {
        h: mesh.h,
        flux,
        reaction,
    }
}

/// Index of coefficient `x^i y^j` in the 12-vector: six `q_x` terms
/// (`i <= 2, j <= 1`) followed by six `q_y` terms (`i <= 1, j <= 2`).
fn ax(i: usize, j: usize) -> usize {
    i * 2 + j
}
fn by(i: usize, j: usize) -> usize {
    6 + i * 3 + j
}

fn to_flux(x: &[f64]) -> [Poly2; 2] {
    let mut qx = Poly2::zero();
    let mut qy = Poly2::zero();
    for i in 0..3 {
        for j in 0..2 {
            qx.c[i][j] = x[ax(i, j)];
            qy.c[j][i] = x[by(j, i)];
        }
    }
    [qx, qy]
}

fn from_flux(q: &[Poly2; 2]) -> [f64; 12] {
    let mut x = [0.0; 12];
    for i in 0..3 {
        for j in 0..2 {
            x[ax(i, j)] = q[0].c[i][j];
            x[by(j, i)] = q[1].c[j][i];
        }
    }
    x
}

/// `int_0^1 int_0^1 p q`.
pub(crate) fn integral_product(p: &Poly2, q: &Poly2) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if p.c[i][j] == 0.0 {
                continue;
            }
            for k in 0..3 {
                for l in 0..3 {
                    s += p.c[i][j] * q.c[k][l] / (((i + k + 1) * (j + l + 1)) as f64);
                }
            }
        }
    }
    s
}

/// Cell-level solver: constraint matrix pseudo-inverse, divergence-free
/// bubble direction and the `L^2` projection weights along it.
struct CellSolver {
    pinv: DMatrix<f64>,
    null: [f64; 12],
    weights: [f64; 12],
}

impl CellSolver {
    fn new() -> Result<Self> {
        let mut c = DMatrix::<f64>::zeros(12, 12);
        for k in 0..12 {
            let mut e = [0.0; 12];
            e[k] = 1.0;
            let q = to_flux(&e);
            let t = trace_rows(&q);
            for r in 0..8 {
                c[(r, k)] = t[r];
            }
            let d = q[0].dx().add(&q[1].dy());
            for (r, (p, s)) in [(0, 0), (1, 0), (0, 1), (1, 1)].iter().enumerate() {
                c[(8 + r, k)] = d.c[*p][*s];
            }
        }
        let pinv = c
            .clone()
            .pseudo_inverse(PINV_EPS)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        // curl of the bubble X(1-X)Y(1-Y): divergence free, zero normal trace
        let mut null = [0.0; 12];
        null[ax(1, 0)] = 1.0;
        null[ax(2, 0)] = -1.0;
        null[ax(1, 1)] = -2.0;
        null[ax(2, 1)] = 2.0;
        null[by(0, 1)] = -1.0;
        null[by(0, 2)] = 1.0;
        null[by(1, 1)] = 2.0;
        null[by(1, 2)] = -2.0;
        let zq = to_flux(&null);
        let mut weights = [0.0; 12];
        for (k, w) in weights.iter_mut().enumerate() {
            let mut e = [0.0; 12];
            e[k] = 1.0;
            let q = to_flux(&e);
            *w = integral_product(&q[0], &zq[0]) + integral_product(&q[1], &zq[1]);
        }
        let zz: f64 = weights.iter().zip(&null).map(|(a, b)| a * b).sum();
        weights.iter_mut().for_each(|w| *w /= zz);
        Ok(CellSolver { pinv, null, weights })
    }

    /// Flux with the prescribed outward traces and divergence closest in
    /// `L^2` to `target`.
    fn solve(&self, rhs: &[f64; 12], target: &[Poly2; 2]) -> [Poly2; 2] {
        let mut x = [0.0; 12];
        for (r, xr) in x.iter_mut().enumerate() {
            *xr = (0..12).map(|k| self.pinv[(r, k)] * rhs[k]).sum();
        }
        let xt = from_flux(target);
        let t: f64 = -(0..12).map(|k| self.weights[k] * (x[k] - xt[k])).sum::<f64>();
        for k in 0..12 {
            x[k] += t * self.null[k];
        }
        to_flux(&x)
    }
}

/// Outward normal flux of `q` at the two corners of each side.
fn trace_rows(q: &[Poly2; 2]) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (s, pts) in SIDE_POINTS.iter().enumerate() {
        for (k, &(x, y)) in pts.iter().enumerate() {
            let (x, y) = (x as f64, y as f64);
            out[2 * s + k] = match s {
                0 => -q[1].eval(x, y),
                1 => q[0].eval(x, y),
                2 => q[1].eval(x, y),
                _ => -q[0].eval(x, y),
            };
        }
    }
    out
}

/// FE normal flux (along the edge's reference normal) at the edge's two
/// endpoints, as seen from cell `c`.
fn fe_edge_flux(mesh: &Mesh2D, c: usize, e: usize, flux: &[Poly2; 2]) -> [f64; 2] {
    let (ci, cj) = mesh.cell_ij(c);
    let comp = if mesh.is_horizontal(e) { 1 } else { 0 };
    mesh.edge_nodes(e).map(|n| {
        let (i, j) = (n % (mesh.n + 1), n / (mesh.n + 1));
        flux[comp].eval(i as f64 - ci as f64, j as f64 - cj as f64)
    })
}

/// Equilibrated flux of a single-field membrane problem. The reaction is
/// kept at its FE value.
pub fn recover_quad_flux(mesh: &Mesh2D, spec: &FluxRecovery) -> Result<StressField> {
    let (nn, nc, ne) = (mesh.n_nodes(), mesh.n_cells(), mesh.n_edges());
    if spec.potential.len() != nn || spec.reaction.len() != nn {
        return Err(Error::DimensionMismatch {
            expected: nn,
            got: spec.potential.len().min(spec.reaction.len()),
        });
    }
    if spec.load.cell.len() != nc || spec.load.edge.len() != ne {
        return Err(Error::MeshMismatch);
    }
    let h = mesh.h;
    let fe: Vec<([Poly2; 2], Poly2)> = (0..nc).map(|c| fe_cell(mesh, c, spec)).collect();

    // b[c][k]: balance of cell c against the hat function of its corner k
    let mut b = vec![[0.0; 4]; nc];
    for c in 0..nc {
        let nodes = mesh.cell_nodes(c);
        let p = corners(mesh, c, &spec.potential);
        let r = corners(mesh, c, &spec.reaction);
        for k in 0..4 {
            let mut v = 0.0;
            for l in 0..4 {
                v += LAPLACE[k][l] / 6.0 * p[l] + MASS[k][l] * h * h / 36.0 * r[l];
            }
            v -= spec.load.cell[c] * h * h / 4.0;
            for (e, _) in mesh.cell_edges(c) {
                let g = spec.load.edge[e];
                if g != 0.0 && mesh.edge_nodes(e).contains(&nodes[k]) {
                    let share = if mesh.is_boundary_edge(e) { 1.0 } else { 0.5 };
                    v -= share * g * h / 2.0;
                }
            }
            b[c][k] = v;
        }
    }

    // p[e] = (int t phi_start, int t phi_end) from the vertex patches
    let mut pe = vec![[0.0; 2]; ne];
    let n = mesh.n;
    for j in 0..=n {
        for i in 0..=n {
            let node = mesh.node(i, j);
            let mut cells = Vec::with_capacity(4);
            for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                if i >= di && j >= dj && i - di < n && j - dj < n {
                    cells.push(mesh.cell(i - di, j - dj));
                }
            }
            let mut edges = Vec::with_capacity(4);
            if i > 0 {
                edges.push(mesh.h_edge(i - 1, j));
            }
            if i < n {
                edges.push(mesh.h_edge(i, j));
            }
            if j > 0 {
                edges.push(mesh.v_edge(i, j - 1));
            }
            if j < n {
                edges.push(mesh.v_edge(i, j));
            }
            edges.retain(|&e| !mesh.is_boundary_edge(e));
            if edges.is_empty() {
                continue;
            }
            let mut a = DMatrix::<f64>::zeros(cells.len(), edges.len());
            let mut rhs = nalgebra::DVector::<f64>::zeros(cells.len());
            for (r, &c) in cells.iter().enumerate() {
                let k = mesh.cell_nodes(c).iter().position(|&m| m == node).unwrap();
                rhs[r] = b[c][k];
                for (s, &e) in edges.iter().enumerate() {
                    if let Some(&(_, eta)) = mesh.cell_edges(c).iter().find(|(ce, _)| *ce == e) {
                        a[(r, s)] = eta;
                    }
                }
            }
            // start from the averaged FE traction, correct in least squares
            let mut pbar = nalgebra::DVector::<f64>::zeros(edges.len());
            for (s, &e) in edges.iter().enumerate() {
                let (lo, hi) = mesh.edge_cells(e);
                let (lo, hi) = (lo.unwrap(), hi.unwrap());
                let fl = fe_edge_flux(mesh, lo, e, &fe[lo].0);
                let fh = fe_edge_flux(mesh, hi, e, &fe[hi].0);
                let avg = [0.5 * (fl[0] + fh[0]), 0.5 * (fl[1] + fh[1])];
                let at_start = mesh.edge_nodes(e)[0] == node;
                let (own, other) = if at_start { (avg[0], avg[1]) } else { (avg[1], avg[0]) };
                pbar[s] = h * (own / 3.0 + other / 6.0);
            }
            let pinv = a
                .clone()
                .pseudo_inverse(PINV_EPS)
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            let p = &pbar + pinv * (rhs - &a * &pbar);
            for (s, &e) in edges.iter().enumerate() {
                let slot = if mesh.edge_nodes(e)[0] == node { 0 } else { 1 };
                pe[e][slot] = p[s];
            }
        }
    }

    let solver = CellSolver::new()?;
    let mut flux = Vec::with_capacity(nc);
    let mut reaction = Vec::with_capacity(nc);
    for c in 0..nc {
        let (ci, cj) = mesh.cell_ij(c);
        let mut rhs = [0.0; 12];
        for (s, &(e, eta)) in mesh.cell_edges(c).iter().enumerate() {
            let g = spec.load.edge[e];
            let [ns, _] = mesh.edge_nodes(e);
            let (alpha, beta) = (
                (4.0 * pe[e][0] - 2.0 * pe[e][1]) / h,
                (4.0 * pe[e][1] - 2.0 * pe[e][0]) / h,
            );
            for (k, &(x, y)) in SIDE_POINTS[s].iter().enumerate() {
                let node = mesh.node(ci + x, cj + y);
                rhs[2 * s + k] = if mesh.is_boundary_edge(e) {
                    g
                } else {
                    eta * if node == ns { alpha } else { beta } + 0.5 * g
                };
            }
        }
        let m = Poly2::bilinear([spec.load.cell[c]; 4]).sub(&fe[c].1);
        for (r, (p, s)) in [(0, 0), (1, 0), (0, 1), (1, 1)].iter().enumerate() {
            rhs[8 + r] = -h * m.c[*p][*s];
        }
        flux.push(solver.solve(&rhs, &fe[c].0));
        reaction.push(fe[c].1);
    }
    Ok(StressField::Membrane { h, flux, reaction })
}

/// Q2 Lagrange basis on `{0, 1/2, 1}` as monomial coefficients.
const LAGRANGE2: [[f64; 3]; 3] = [[1.0, -3.0, 2.0], [0.0, 4.0, -4.0], [0.0, -1.0, 2.0]];

fn q2_cell(vals: &[[f64; 3]; 3]) -> Poly2 {
    let mut p = Poly2::zero();
    for a in 0..3 {
        for b in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    p.c[i][j] += vals[a][b] * LAGRANGE2[a][i] * LAGRANGE2[b][j];
                }
            }
        }
    }
    p
}

/// Worst relative defect of: weak equilibrium against random continuous Q2
/// test functions, the pointwise divergence condition, and the normal-flux
/// balance on every edge.
pub fn equilibrium_defect(mesh: &Mesh2D, field: &StressField, spec: &FluxRecovery, n_tests: usize) -> Result<f64> {
    let StressField::Membrane { flux, reaction, .. } = field else {
        return Err(Error::MeshMismatch);
    };
    let (n, h) = (mesh.n, mesh.h);
    if flux.len() != mesh.n_cells() {
        return Err(Error::MeshMismatch);
    }
    let mut worst = 0.0_f64;

    // divergence
    let mut num = 0.0_f64;
    let mut den = 0.0_f64;
    for c in 0..mesh.n_cells() {
        let m = Poly2::bilinear([spec.load.cell[c]; 4]).sub(&reaction[c]).scale(h);
        let d = flux[c][0].dx().add(&flux[c][1].dy());
        num = num.max(d.add(&m).max_abs_coeff());
        let size = h * (spec.load.cell[c].abs() + reaction[c].max_abs_coeff());
        den = den.max(flux[c][0].dx().max_abs_coeff() + flux[c][1].dy().max_abs_coeff() + size);
    }
    worst = worst.max(if den > 0.0 { num / den } else { num });

    // normal flux balance, measured against the flux and load sizes
    let mut num = 0.0_f64;
    let mut den = (0..mesh.n_cells())
        .map(|c| h * (spec.load.cell[c].abs() + reaction[c].max_abs_coeff()))
        .fold(0.0_f64, f64::max);
    for e in 0..mesh.n_edges() {
        let g = spec.load.edge[e];
        let (lo, hi) = mesh.edge_cells(e);
        let mut sum = [-g, -g];
        let mut size = [g.abs(), g.abs()];
        for (cell, sign) in [(lo, 1.0), (hi, -1.0)] {
            if let Some(c) = cell {
                let v = fe_edge_flux(mesh, c, e, &flux[c]);
                for k in 0..2 {
                    sum[k] += sign * v[k];
                    size[k] += v[k].abs();
                }
            }
        }
        for k in 0..2 {
            num = num.max(sum[k].abs());
            den = den.max(size[k]);
        }
    }
    worst = worst.max(if den > 0.0 { num / den } else { num });

    // weak form against random Q2 functions
    let side = 2 * n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(TEST_SEED);
    for _ in 0..n_tests {
        let v: Vec<f64> = (0..side * side).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let at = |i: usize, j: usize| v[j * side + i];
        let mut total = 0.0;
        let mut scale = 0.0;
        for c in 0..mesh.n_cells() {
            let (ci, cj) = mesh.cell_ij(c);
            let vals: [[f64; 3]; 3] = std::array::from_fn(|a| std::array::from_fn(|b| at(2 * ci + a, 2 * cj + b)));
            let vc = q2_cell(&vals);
            let t1 = h * (integral_product(&flux[c][0], &vc.dx()) + integral_product(&flux[c][1], &vc.dy()));
            let t2 = h * h * integral_product(&reaction[c], &vc);
            let t3 = spec.load.cell[c] * h * h * integral_product(&Poly2::bilinear([1.0; 4]), &vc);
            total += t1 + t2 - t3;
            scale += t1.abs() + t2.abs() + t3.abs();
        }
        for (e, &g) in spec.load.edge.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let [a, b] = mesh.edge_nodes(e);
            let q2 = |node: usize| {
                let (i, j) = (node % (n + 1), node / (n + 1));
                (2 * i, 2 * j)
            };
            let (pa, pb) = (q2(a), q2(b));
            let mid = ((pa.0 + pb.0) / 2, (pa.1 + pb.1) / 2);
            let t = g * h * (at(pa.0, pa.1) + 4.0 * at(mid.0, mid.1) + at(pb.0, pb.1)) / 6.0;
            total -= t;
            scale += t.abs();
        }
        worst = worst.max(if scale > 0.0 { total.abs() / scale } else { total.abs() });
    }
    Ok(worst)
}

/// Relative defect of `int (rec - fe) . grad phi + (rec_r - fe_r) phi` over
/// the FE hat functions.
pub(crate) fn basis_defect(mesh: &Mesh2D, rec: &[&StressField], fe: &[&StressField]) -> Result<f64> {
    let h = mesh.h;
    let hats: [Poly2; 4] = std::array::from_fn(|k| {
        let mut v = [0.0; 4];
        v[k] = 1.0;
        Poly2::bilinear(v)
    });
    let mut worst = 0.0_f64;
    for (r, f) in rec.iter().zip(fe) {
        let (
            StressField::Membrane { flux: qr, reaction: rr, .. },
            StressField::Membrane { flux: qf, reaction: rf, .. },
        ) = (r, f)
        else {
            return Err(Error::MeshMismatch);
        };
        let mut g = vec![0.0; mesh.n_nodes()];
        let mut s = vec![0.0; mesh.n_nodes()];
        for c in 0..mesh.n_cells() {
            for (k, node) in mesh.cell_nodes(c).into_iter().enumerate() {
                let phi = &hats[k];
                let act = |q: &[Poly2; 2], r: &Poly2| {
                    h * (integral_product(&q[0], &phi.dx()) + integral_product(&q[1], &phi.dy()))
                        + h * h * integral_product(r, phi)
                };
                let a = act(&qr[c], &rr[c]);
                let b = act(&qf[c], &rf[c]);
                g[node] += a - b;
                s[node] += a.abs() + b.abs();
            }
        }
        let smax = s.iter().cloned().fold(0.0_f64, f64::max);
        let gmax = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        worst = worst.max(if smax > 0.0 { gmax / smax } else { gmax });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{assemble_operator, membrane_load_vector, Operator, ParamProblem, Parameter};
    use crate::linalg::solve_spd;

    fn solve_uniform(n: usize) -> (Mesh2D, FluxRecovery) {
        solve_box(n, 0.5)
    }

    /// Unit load on `(0.5 - half, 0.5 + half)^2` plus a unit line load on
    /// its boundary when the box is interior.
    fn solve_box(n: usize, half: f64) -> (Mesh2D, FluxRecovery) {
        let p = ParamProblem::membrane(n, Parameter::Beta1, [1.0, 0.5], 1.0).unwrap();
        let k = assemble_operator(&p, Operator::K).unwrap();
        let mesh = crate::mesh::build_quad_mesh(n).unwrap();
        let mut load = MembraneLoad::zeros(&mesh);
        let (lo, hi) = ([0.5 - half; 2], [0.5 + half; 2]);
        for c in mesh.cells_in_box(lo, hi).unwrap() {
            load.cell[c] = 1.0;
        }
        if half < 0.5 {
            for e in mesh.box_boundary_edges(lo, hi).unwrap() {
                load.edge[e] = 1.0;
            }
        }
        let mut f = vec![0.0; mesh.n_nodes()];
        membrane_load_vector(&mesh, &load, &mut f);
        let (u, _) = solve_spd(&k, &f, 1e-12).unwrap();
        let spec = FluxRecovery {
            potential: u.clone(),
            reaction: u,
            load,
        };
        (mesh, spec)
    }

    #[test]
    fn null_direction_is_in_kernel() {
        let s = CellSolver::new().unwrap();
        let q = to_flux(&s.null);
        assert!(trace_rows(&q).iter().all(|v| v.abs() < 1e-15));
        assert!(q[0].dx().add(&q[1].dy()).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn zero_data_gives_zero_flux() {
        let mesh = crate::mesh::build_quad_mesh(4).unwrap();
        let spec = FluxRecovery {
            potential: vec![0.0; mesh.n_nodes()],
            reaction: vec![0.0; mesh.n_nodes()],
            load: MembraneLoad::zeros(&mesh),
        };
        let f = recover_quad_flux(&mesh, &spec).unwrap();
        assert!(f.is_zero());
    }

    #[test]
    fn cell_outflow_balances_modified_load() {
        let (mesh, spec) = solve_uniform(2);
        let field = recover_quad_flux(&mesh, &spec).unwrap();
        let StressField::Membrane { flux, reaction, h } = &field else { unreachable!() };
        for c in 0..mesh.n_cells() {
            // outflow = int_boundary q.n, evaluated exactly (linear traces)
            let t = trace_rows(&flux[c]);
            let out: f64 = (0..4).map(|s| 0.5 * (t[2 * s] + t[2 * s + 1]) * h).sum();
            let load = h * h * (1.0 - integral_product(&reaction[c], &Poly2::bilinear([1.0; 4])));
            assert!((out - load).abs() < 1e-12, "{out} vs {load}");
        }
        let d = equilibrium_defect(&mesh, &field, &spec, 20).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn interior_box_load_is_equilibrated() {
        for n in [4, 8, 16] {
            let (mesh, spec) = solve_box(n, 0.25);
            let field = recover_quad_flux(&mesh, &spec).unwrap();
            assert!(field.max_abs() > 1e-3);
            let d = equilibrium_defect(&mesh, &field, &spec, 20).unwrap();
            assert!(d < 1e-12, "n = {n}: {d}");
        }
    }

    #[test]
    fn global_balance_is_compatible() {
        let (mesh, spec) = solve_uniform(8);
        let field = recover_quad_flux(&mesh, &spec).unwrap();
        let StressField::Membrane { flux, reaction, h } = &field else { unreachable!() };
        let one = Poly2::bilinear([1.0; 4]);
        let div: f64 = flux.iter().map(|q| h * integral_product(&q[0].dx().add(&q[1].dy()), &one)).sum();
        let rhs: f64 = reaction.iter().map(|r| h * h * (1.0 - integral_product(r, &one))).sum();
        assert!((div + rhs).abs() < 1e-10);
        assert!(rhs.abs() < 1e-10);
    }

    #[test]
    fn perturbed_flux_fails_the_check() {
        let (mesh, spec) = solve_uniform(4);
        let field = recover_quad_flux(&mesh, &spec).unwrap();
        let StressField::Membrane { h, mut flux, reaction } = field else { unreachable!() };
        flux[5][0].c[0][0] += 1e-4;
        let bad = StressField::Membrane { h, flux, reaction };
        assert!(equilibrium_defect(&mesh, &bad, &spec, 5).unwrap() > 1e-8);
    }
}
